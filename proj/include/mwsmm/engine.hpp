#ifndef MWSMM_ENGINE_HPP
#define MWSMM_ENGINE_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <mwsmm/graph.hpp>
#include <mwsmm/program.hpp>

namespace mwsmm {

struct RunLimits {
    std::size_t max_rounds = 100000;
    std::size_t max_nodes = 1000000;
    std::size_t max_instructions_per_fork = 1000000;
    std::size_t max_forks = 1000000;
    std::size_t max_states = 100000; // multiway exploration state budget
};

struct Metrics {
    std::uint64_t mass = 0;
    std::uint64_t live_nodes = 0;      // nodes in the store, origin included
    std::uint64_t reachable_nodes = 0; // reachable from the center
    double capacity = 0.0;             // d * n * log2(max(n, 2)), n reachable
    std::uint64_t instructions_executed = 0;
    std::uint64_t max_match_width = 0; // largest match set seen

    std::string to_json() const;
};

/// One fired (or skipped-as-stale) fork of a top-level block.
struct TraceEvent {
    std::size_t round = 0;
    std::string block;
    NodeId node = 0;
    std::uint64_t instructions = 0; // fork plus descendants; 0 when stale
    bool stale = false;
    std::string stop_message;

    // `round=<r> block=<name> node=<id> instr=<k> [stale] [stop="<msg>"]`
    std::string format() const;
};

enum class HaltReason { EmptySelection, Limit };

struct RunReport {
    std::size_t rounds = 0;
    std::vector<TraceEvent> trace;
    MachineState final_state;
    Metrics metrics;
    HaltReason halt_reason = HaltReason::EmptySelection;
};

/// Result of running one fork tree to completion.
struct FireReport {
    std::uint64_t instructions = 0;   // fork plus descendants
    std::string stop_message;         // last non-empty stop message seen
};

/// Evaluate a match expression with `candidate` as the path root. The empty
/// path resolves to the candidate itself. Conjunction short-circuits left to
/// right, which is unobservable since path resolution is total.
bool eval_match_expr(const MachineState& state, NodeId candidate, const BoolExpr& expr);

/// Ascending list of candidates: nodes reachable from the center that
/// satisfy the expression. The origin is constant machine infrastructure and
/// is never a candidate (its self-loops satisfy every equality vacuously).
std::vector<NodeId> match_set(const MachineState& state, const BoolExpr& expr);

/// Shared counters for one execution (prologue plus every fork it spawns).
struct ExecCounters {
    std::uint64_t instructions = 0;
    std::uint64_t forks = 0;
    std::uint64_t max_match_width = 0;
};

/// Run one fork from `start_line` with `matched` as its local center, to
/// completion. An inner match spawns child forks (ascending node order,
/// revalidated before firing) and terminates this fork. Mutations hit the
/// shared state; the global center is never written.
FireReport execute_fork(MachineState& state, const Program& program, const LineRange& block,
                        NodeId matched, int start_line, const RunLimits& limits,
                        ExecCounters& counters);

/// Execute the prologue as the root execution: its local center IS the
/// machine center until the first inner match freezes it.
void run_prologue(MachineState& state, const Program& program, const RunLimits& limits,
                  ExecCounters& counters);

/// The deterministic production loop: per round, snapshot-select every top
/// block against the round-start state, then fire block by block, node by
/// node, revalidating each candidate against the current state.
RunReport run_deterministic(const Program& program, const std::vector<std::string>& top_blocks,
                            const RunLimits& limits = {});

Metrics compute_metrics(const MachineState& state, const ExecCounters& counters);

} // namespace mwsmm

#endif // MWSMM_ENGINE_HPP
