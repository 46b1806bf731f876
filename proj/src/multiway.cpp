#include <mwsmm/multiway.hpp>

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mwsmm {

std::vector<std::string> EvolutionGraph::terminals() const {
    std::vector<std::string> out;
    for (const std::string& sig : order) {
        const EvolutionState& entry = states.at(sig);
        if (entry.expanded && entry.outgoing == 0) out.push_back(sig);
    }
    return out;
}

std::vector<Event> enumerate_events(const MachineState& state, const Program& program,
                                    const std::vector<std::string>& top_blocks) {
    std::vector<std::int64_t> numbering = canonical_numbering(state, state.center);
    std::vector<Event> events;
    for (const std::string& name : top_blocks) {
        const Block* block = program.find_block(name);
        if (!block) fail("E_NO_BLOCK", "no block named '" + name + "'");
        const auto* match = std::get_if<InstrMatch>(&program.at(block->range.first));
        if (!match) fail("E_BLOCK_HEAD", "block '" + name + "' does not start with a match");
        for (NodeId node : match_set(state, match->expr)) {
            events.push_back(Event{name, node, numbering[node]});
        }
    }
    return events;
}

MachineState apply_event(const MachineState& state, const Program& program, const Event& event,
                         const RunLimits& limits) {
    MachineState copy = state;
    const Block* block = program.find_block(event.block);
    if (!block) fail("E_NO_BLOCK", "no block named '" + event.block + "'");
    ExecCounters counters;
    execute_fork(copy, program, block->range, event.matched_node, block->range.first + 1, limits,
                 counters);
    return copy;
}

namespace {

struct Expansion {
    std::vector<std::pair<Event, MachineState>> successors;
};

Expansion expand_state(const MachineState& state, const Program& program,
                       const std::vector<std::string>& top_blocks, const RunLimits& limits) {
    Expansion out;
    for (Event& event : enumerate_events(state, program, top_blocks)) {
        MachineState succ = apply_event(state, program, event, limits);
        out.successors.emplace_back(std::move(event), std::move(succ));
    }
    return out;
}

} // namespace

EvolutionGraph explore(const Program& program, const std::vector<std::string>& top_blocks,
                       std::size_t depth_limit, const RunLimits& limits,
                       const DecodeManifest* manifest, unsigned threads) {
    EvolutionGraph evo;

    MachineState root = init_state(program.directions);
    ExecCounters counters;
    run_prologue(root, program, limits, counters);

    auto decode_of = [&](const MachineState& state) -> std::optional<std::string> {
        if (!manifest) return std::nullopt;
        return decode_string(state, *manifest);
    };

    std::string root_sig = canonical_signature(root, root.center, false).signature;
    evo.root = root_sig;
    evo.states.emplace(root_sig,
                       EvolutionState{root, 0, decode_of(root), false, 0, 0});
    evo.order.push_back(root_sig);
    evo.states_per_depth.push_back(1);

    std::vector<std::string> frontier{root_sig};
    std::size_t depth = 0;

    while (!frontier.empty() && depth < depth_limit) {
        // Expand every frontier state; with threads > 1 expansions run in
        // parallel and are merged in frontier order, so results are
        // independent of scheduling.
        std::vector<Expansion> expansions(frontier.size());
        if (threads > 1 && frontier.size() > 1) {
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= frontier.size()) break;
                    expansions[i] =
                        expand_state(evo.states.at(frontier[i]).state, program, top_blocks, limits);
                }
            };
            std::vector<std::thread> pool;
            unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(frontier.size()));
            for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        } else {
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                expansions[i] =
                    expand_state(evo.states.at(frontier[i]).state, program, top_blocks, limits);
            }
        }

        std::vector<std::string> next_frontier;
        std::size_t fresh = 0;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            EvolutionState& source = evo.states.at(frontier[i]);
            source.expanded = true;
            source.outgoing = expansions[i].successors.size();
            for (auto& [event, succ] : expansions[i].successors) {
                std::string sig = canonical_signature(succ, succ.center, false).signature;
                evo.edges.push_back(EvolutionEdge{frontier[i], event, sig});
                if (!evo.states.count(sig)) {
                    if (evo.states.size() >= limits.max_states) {
                        fail("E_LIMIT", "state budget exceeded in multiway exploration");
                    }
                    std::optional<std::string> decoded = decode_of(succ);
                    evo.states.emplace(sig, EvolutionState{std::move(succ), depth + 1,
                                                           std::move(decoded), false, 0,
                                                           evo.order.size()});
                    evo.order.push_back(sig);
                    next_frontier.push_back(sig);
                    ++fresh;
                }
            }
        }
        if (fresh > 0) evo.states_per_depth.push_back(fresh);
        frontier = std::move(next_frontier);
        if (!frontier.empty()) ++depth;
    }

    evo.explored_depth = evo.states_per_depth.size() - 1;
    evo.frontier_exhausted = frontier.empty();
    return evo;
}

ConfluenceReport check_convergence(const EvolutionGraph& evo) {
    ConfluenceReport report;
    report.explored_depth = evo.explored_depth;
    report.branch_counts = evo.states_per_depth;
    std::vector<std::string> terminals = evo.terminals();
    report.terminal_count = terminals.size();
    if (!evo.frontier_exhausted) {
        report.converged = Converged::Unknown;
        return report;
    }
    // A drained frontier with one terminal is convergence; zero terminals
    // means every maximal path cycles forever, which never "ends in the same
    // final state", so it reports No.
    if (terminals.size() == 1) {
        report.converged = Converged::Yes;
        report.terminal_signature = terminals.front();
        report.terminal_decode = evo.states.at(terminals.front()).decoded;
    } else {
        report.converged = Converged::No;
    }
    return report;
}

namespace {

std::string short_name(const EvolutionGraph& evo, const std::string& sig) {
    CanonicalForm form{sig, 0};
    const EvolutionState& entry = evo.states.at(sig);
    if (entry.decoded) return *entry.decoded;
    return form.digest_hex().substr(0, 12);
}

std::string sig_hex(const std::string& sig) {
    return CanonicalForm{sig, 0}.digest_hex();
}

} // namespace

std::string export_evolution_dot(const EvolutionGraph& evo) {
    std::ostringstream out;
    out << "digraph evolution {\n  rankdir=TB;\n  node [shape=box];\n";
    for (std::size_t i = 0; i < evo.order.size(); ++i) {
        const std::string& sig = evo.order[i];
        const EvolutionState& entry = evo.states.at(sig);
        out << "  s" << i << " [label=\"" << short_name(evo, sig) << "\"";
        if (sig == evo.root) out << ", style=bold";
        if (entry.expanded && entry.outgoing == 0) out << ", style=filled, fillcolor=lightgray";
        out << "];\n";
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < evo.order.size(); ++i) index[evo.order[i]] = i;
    for (const EvolutionEdge& edge : evo.edges) {
        out << "  s" << index.at(edge.from) << " -> s" << index.at(edge.to) << " [label=\""
            << edge.event.block << "@" << edge.event.matched_canonical_id << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

std::string export_evolution_json(const EvolutionGraph& evo) {
    nlohmann::json doc;
    doc["root"] = sig_hex(evo.root);
    nlohmann::json states = nlohmann::json::array();
    for (const std::string& sig : evo.order) {
        const EvolutionState& entry = evo.states.at(sig);
        nlohmann::json item;
        item["sig"] = sig_hex(sig);
        item["depth"] = entry.depth;
        if (entry.decoded) item["string"] = *entry.decoded;
        states.push_back(item);
    }
    doc["states"] = states;
    nlohmann::json edges = nlohmann::json::array();
    for (const EvolutionEdge& edge : evo.edges) {
        edges.push_back({{"from", sig_hex(edge.from)},
                         {"block", edge.event.block},
                         {"node", edge.event.matched_node},
                         {"to", sig_hex(edge.to)}});
    }
    doc["edges"] = edges;
    return doc.dump(2);
}

} // namespace mwsmm
