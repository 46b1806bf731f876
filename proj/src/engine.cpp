#include <mwsmm/engine.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace mwsmm {

std::string Metrics::to_json() const {
    nlohmann::json doc;
    doc["mass"] = mass;
    doc["liveNodes"] = live_nodes;
    doc["reachableNodes"] = reachable_nodes;
    doc["capacity"] = capacity;
    doc["instructionsExecuted"] = instructions_executed;
    doc["maxMatchWidth"] = max_match_width;
    return doc.dump();
}

std::string TraceEvent::format() const {
    std::ostringstream out;
    out << "round=" << round << " block=" << block << " node=" << node << " instr=" << instructions;
    if (stale) out << " stale";
    if (!stop_message.empty()) out << " stop=\"" << stop_message << "\"";
    return out.str();
}

bool eval_match_expr(const MachineState& state, NodeId candidate, const BoolExpr& expr) {
    switch (expr.kind) {
        case BoolExpr::Kind::Cmp: {
            NodeId left = resolve(state, candidate, expr.lhs);
            NodeId right = resolve(state, candidate, expr.rhs);
            return expr.op == CmpOp::Eq ? left == right : left != right;
        }
        case BoolExpr::Kind::And:
            for (const BoolExpr& child : expr.children) {
                if (!eval_match_expr(state, candidate, child)) return false;
            }
            return true;
        case BoolExpr::Kind::Or:
            for (const BoolExpr& child : expr.children) {
                if (eval_match_expr(state, candidate, child)) return true;
            }
            return false;
        case BoolExpr::Kind::Not:
            return !eval_match_expr(state, candidate, expr.children.front());
    }
    return false;
}

std::vector<NodeId> match_set(const MachineState& state, const BoolExpr& expr) {
    std::vector<NodeId> out;
    for (NodeId candidate : reachable(state, state.center)) {
        if (candidate == kOrigin) continue;
        if (eval_match_expr(state, candidate, expr)) out.push_back(candidate);
    }
    return out;
}

namespace {

bool candidate_still_valid(const MachineState& state, NodeId candidate, const BoolExpr& expr) {
    if (candidate == kOrigin) return false;
    std::vector<NodeId> live = reachable(state, state.center);
    if (!std::binary_search(live.begin(), live.end(), candidate)) return false;
    return eval_match_expr(state, candidate, expr);
}

int resolve_jump(const JumpTarget& jump, int line, const LineRange& block) {
    int target = jump.kind == JumpTarget::Kind::Absolute ? jump.value : line + jump.value;
    if (!block.contains(target)) {
        fail("E_JUMP_SCOPE", "jump from line " + std::to_string(line) + " to line " +
                                 std::to_string(target) + " leaves the block");
    }
    return target;
}

FireReport run_fork(MachineState& state, const Program& program, const LineRange& block,
                    NodeId local_center, int pc, const RunLimits& limits, ExecCounters& counters,
                    bool root_mode) {
    if (++counters.forks > limits.max_forks) {
        fail("E_LIMIT", "fork budget exceeded");
    }
    FireReport report;
    std::uint64_t own_instructions = 0;

    while (block.contains(pc)) { // falling off the end is an implicit stop
        if (++own_instructions > limits.max_instructions_per_fork) {
            fail("E_LIMIT", "instruction budget exceeded in one fork");
        }
        ++counters.instructions;
        ++report.instructions;
        const Instruction& instruction = program.at(pc);

        if (const auto* match = std::get_if<InstrMatch>(&instruction)) {
            // Select against the current state, rooted at the machine center;
            // children run serially from the next line, revalidated before
            // firing. The spawning fork terminates here.
            std::vector<NodeId> selected = match_set(state, match->expr);
            counters.max_match_width =
                std::max<std::uint64_t>(counters.max_match_width, selected.size());
            for (NodeId node : selected) {
                if (!candidate_still_valid(state, node, match->expr)) continue;
                FireReport child =
                    run_fork(state, program, block, node, pc + 1, limits, counters, false);
                report.instructions += child.instructions;
                if (!child.stop_message.empty()) report.stop_message = child.stop_message;
            }
            return report;
        }

        if (const auto* stop = std::get_if<InstrStop>(&instruction)) {
            if (!stop->message.empty()) report.stop_message = stop->message;
            return report;
        }

        if (const auto* make = std::get_if<InstrNew>(&instruction)) {
            NodeId id = add_node(state, make->label, local_center, limits.max_nodes);
            local_center = id;
            if (root_mode) state.center = id;
            ++pc;
        } else if (const auto* set = std::get_if<InstrSet>(&instruction)) {
            NodeId subject = resolve(state, local_center, set->prefix);
            NodeId target = resolve(state, local_center, set->target);
            // The origin is a constant node: programs may point edges at it
            // but never redirect its own edges.
            if (subject != kOrigin) {
                set_edge(state, subject, set->dir, target);
            }
            ++pc;
        } else if (const auto* ctr = std::get_if<InstrCtr>(&instruction)) {
            local_center = resolve(state, local_center, ctr->path);
            if (root_mode) state.center = local_center;
            ++pc;
        } else if (const auto* cond = std::get_if<InstrIf>(&instruction)) {
            NodeId left = resolve(state, local_center, cond->left);
            NodeId right = resolve(state, local_center, cond->right);
            pc = left == right ? resolve_jump(cond->jump, pc, block) : pc + 1;
        } else if (const auto* ren = std::get_if<InstrRen>(&instruction)) {
            state.nodes[local_center].label = ren->label;
            ++pc;
        } else if (std::holds_alternative<InstrSkip>(instruction)) {
            ++pc;
        }
#ifndef NDEBUG
        check_state_invariants(state);
#endif
    }
    return report;
}

} // namespace

FireReport execute_fork(MachineState& state, const Program& program, const LineRange& block,
                        NodeId matched, int start_line, const RunLimits& limits,
                        ExecCounters& counters) {
    return run_fork(state, program, block, matched, start_line, limits, counters, false);
}

void run_prologue(MachineState& state, const Program& program, const RunLimits& limits,
                  ExecCounters& counters) {
    if (program.prologue.empty()) return;
    run_fork(state, program, program.prologue, state.center, program.prologue.first, limits,
             counters, true);
}

Metrics compute_metrics(const MachineState& state, const ExecCounters& counters) {
    Metrics metrics;
    metrics.mass = state.mass;
    metrics.live_nodes = state.nodes.size();
    metrics.reachable_nodes = reachable(state, state.center).size();
    double n = static_cast<double>(metrics.reachable_nodes);
    metrics.capacity =
        static_cast<double>(state.directions.size()) * n * std::log2(std::max(n, 2.0));
    metrics.instructions_executed = counters.instructions;
    metrics.max_match_width = counters.max_match_width;
    return metrics;
}

RunReport run_deterministic(const Program& program, const std::vector<std::string>& top_blocks,
                            const RunLimits& limits) {
    struct Top {
        const Block* block;
        const BoolExpr* expr;
    };
    std::vector<Top> tops;
    for (const std::string& name : top_blocks) {
        const Block* block = program.find_block(name);
        if (!block) {
            fail("E_NO_BLOCK", "no block named '" + name + "'");
        }
        const auto* match = std::get_if<InstrMatch>(&program.at(block->range.first));
        if (!match) {
            fail("E_BLOCK_HEAD", "block '" + name + "' does not start with a match");
        }
        tops.push_back({block, &match->expr});
    }

    RunReport report;
    ExecCounters counters;
    MachineState state = init_state(program.directions);

    try {
        run_prologue(state, program, limits, counters);

        std::size_t round = 0;
        while (true) {
            if (round >= limits.max_rounds) {
                report.halt_reason = HaltReason::Limit;
                break;
            }
            // Snapshot every top block's selection against the round-start state.
            std::vector<std::vector<NodeId>> selections;
            bool any = false;
            for (const Top& top : tops) {
                selections.push_back(match_set(state, *top.expr));
                counters.max_match_width =
                    std::max<std::uint64_t>(counters.max_match_width, selections.back().size());
                any = any || !selections.back().empty();
            }
            if (!any) {
                report.halt_reason = HaltReason::EmptySelection;
#ifndef NDEBUG
                for (const Top& top : tops) {
                    assert(match_set(state, *top.expr).empty());
                }
#endif
                break;
            }
            ++round;
            for (std::size_t t = 0; t < tops.size(); ++t) {
                for (NodeId node : selections[t]) {
                    TraceEvent event;
                    event.round = round;
                    event.block = tops[t].block->name;
                    event.node = node;
                    if (!candidate_still_valid(state, node, *tops[t].expr)) {
                        event.stale = true;
                        report.trace.push_back(std::move(event));
                        continue;
                    }
                    FireReport fire =
                        execute_fork(state, program, tops[t].block->range, node,
                                     tops[t].block->range.first + 1, limits, counters);
                    event.instructions = fire.instructions;
                    event.stop_message = fire.stop_message;
                    report.trace.push_back(std::move(event));
                }
            }
            report.rounds = round;
        }
    } catch (const Error& e) {
        if (e.code() != "E_LIMIT") throw;
        report.halt_reason = HaltReason::Limit;
    }

    report.metrics = compute_metrics(state, counters);
    report.final_state = std::move(state);
    return report;
}

} // namespace mwsmm
