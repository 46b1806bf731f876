#ifndef MWSMM_MULTIWAY_HPP
#define MWSMM_MULTIWAY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <mwsmm/engine.hpp>

namespace mwsmm {

/// One non-deterministic firing choice: a top-level block applied with its
/// match preset to one selected node.
struct Event {
    std::string block;
    NodeId matched_node = 0;            // id in the source state
    std::int64_t matched_canonical_id = 0; // canonical number in the source state

    bool operator==(const Event&) const = default;
};

struct EvolutionState {
    MachineState state;
    std::size_t depth = 0;               // events applied from the root
    std::optional<std::string> decoded;  // present when a manifest was given
    bool expanded = false;
    std::size_t outgoing = 0;
    std::size_t order = 0; // first-seen order, drives deterministic export
};

struct EvolutionEdge {
    std::string from; // full canonical signatures
    Event event;
    std::string to;
};

struct EvolutionGraph {
    std::unordered_map<std::string, EvolutionState> states; // keyed by signature
    std::vector<std::string> order;                         // first-seen signatures
    std::vector<EvolutionEdge> edges;
    std::string root;
    std::vector<std::size_t> states_per_depth;
    std::size_t explored_depth = 0;
    bool frontier_exhausted = false; // exploration drained before the depth limit

    // Expanded states with no outgoing events, in first-seen order.
    std::vector<std::string> terminals() const;
};

enum class Converged { Yes, No, Unknown };

struct ConfluenceReport {
    std::size_t explored_depth = 0;
    std::size_t terminal_count = 0;
    Converged converged = Converged::Unknown;
    std::string terminal_signature;            // when converged
    std::optional<std::string> terminal_decode;
    std::vector<std::size_t> branch_counts;    // states first seen per depth
};

/// All (block, matched node) pairs available on `state`, ordered by block
/// order then ascending node id.
std::vector<Event> enumerate_events(const MachineState& state, const Program& program,
                                    const std::vector<std::string>& top_blocks);

/// Fire one event on a copy of `state`; the source is untouched and the
/// global center is preserved.
MachineState apply_event(const MachineState& state, const Program& program, const Event& event,
                         const RunLimits& limits);

/// Breadth-first exploration from the post-prologue state with canonical
/// deduplication. States at depth_limit are kept but not expanded. With
/// threads > 1 frontier states expand in parallel; output is identical.
EvolutionGraph explore(const Program& program, const std::vector<std::string>& top_blocks,
                       std::size_t depth_limit, const RunLimits& limits = {},
                       const DecodeManifest* manifest = nullptr, unsigned threads = 1);

ConfluenceReport check_convergence(const EvolutionGraph& evo);

std::string export_evolution_dot(const EvolutionGraph& evo);
std::string export_evolution_json(const EvolutionGraph& evo);

} // namespace mwsmm

#endif // MWSMM_MULTIWAY_HPP
