#include <mwsmm/graph.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mwsmm {

DirectionSet::DirectionSet(std::string_view chars) {
    if (chars.empty()) {
        fail("E_EMPTY_DIRECTIONS", "direction set must be non-empty");
    }
    std::string sorted(chars);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] == kEmptyPathToken) {
            fail("E_BAD_DIRECTION", "'_' is reserved for the empty path");
        }
        if (i > 0 && sorted[i] == sorted[i - 1]) {
            fail("E_BAD_DIRECTION", std::string("duplicate direction '") + sorted[i] + "'");
        }
    }
    chars_ = std::move(sorted);
    index_.fill(-1);
    for (std::size_t i = 0; i < chars_.size(); ++i) {
        index_[static_cast<unsigned char>(chars_[i])] = static_cast<std::int16_t>(i);
    }
}

std::uint64_t CanonicalForm::digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : signature) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string CanonicalForm::digest_hex() const {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = digest();
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

MachineState init_state(const DirectionSet& directions) {
    if (directions.size() == 0) {
        fail("E_EMPTY_DIRECTIONS", "cannot initialize a state without directions");
    }
    MachineState state;
    state.directions = directions;
    Node origin;
    origin.label = "origin";
    origin.edges.assign(directions.size(), kOrigin);
    state.nodes.push_back(std::move(origin));
    state.center = kOrigin;
    state.mass = 0;
    return state;
}

NodeId resolve(const MachineState& state, NodeId root, std::string_view path) {
    NodeId current = root;
    for (char c : path) {
        int idx = state.directions.index_of(c);
        if (idx < 0) {
            fail("E_BAD_DIRECTION", std::string("undeclared direction '") + c + "' in path");
        }
        current = state.nodes[current].edges[static_cast<std::size_t>(idx)];
    }
    return current;
}

NodeId add_node(MachineState& state, std::optional<std::string> label, NodeId target,
                std::size_t max_nodes) {
    if (state.nodes.size() >= max_nodes) {
        fail("E_LIMIT", "node budget exceeded");
    }
    NodeId id = static_cast<NodeId>(state.nodes.size());
    Node node;
    node.label = label && !label->empty() ? *label : "n" + std::to_string(id);
    node.edges.assign(state.directions.size(), target);
    state.nodes.push_back(std::move(node));
    state.mass += 1;
    return id;
}

void set_edge(MachineState& state, NodeId node, char dir, NodeId target) {
    int idx = state.directions.index_of(dir);
    if (idx < 0) {
        fail("E_BAD_DIRECTION", std::string("undeclared direction '") + dir + "'");
    }
    state.nodes[node].edges[static_cast<std::size_t>(idx)] = target;
}

std::vector<NodeId> reachable(const MachineState& state, NodeId root) {
    std::vector<bool> seen(state.nodes.size(), false);
    std::deque<NodeId> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
        NodeId current = queue.front();
        queue.pop_front();
        for (NodeId target : state.nodes[current].edges) {
            if (!seen[target]) {
                seen[target] = true;
                queue.push_back(target);
            }
        }
    }
    std::vector<NodeId> out;
    for (NodeId id = 0; id < state.nodes.size(); ++id) {
        if (seen[id]) out.push_back(id);
    }
    return out;
}

std::vector<std::int64_t> canonical_numbering(const MachineState& state, NodeId root) {
    std::vector<std::int64_t> numbering(state.nodes.size(), -1);
    std::deque<NodeId> queue{root};
    numbering[root] = 0;
    std::int64_t next = 1;
    while (!queue.empty()) {
        NodeId current = queue.front();
        queue.pop_front();
        // Out-edges are direction-deterministic, so expanding them in the
        // fixed DirectionSet order makes this numbering unique.
        for (NodeId target : state.nodes[current].edges) {
            if (numbering[target] < 0) {
                numbering[target] = next++;
                queue.push_back(target);
            }
        }
    }
    return numbering;
}

CanonicalForm canonical_signature(const MachineState& state, NodeId root, bool include_labels) {
    std::vector<std::int64_t> numbering = canonical_numbering(state, root);
    std::size_t count = 0;
    for (std::int64_t n : numbering) {
        if (n >= 0) ++count;
    }
    std::vector<NodeId> by_canonical(count, kOrigin);
    for (NodeId id = 0; id < state.nodes.size(); ++id) {
        if (numbering[id] >= 0) by_canonical[static_cast<std::size_t>(numbering[id])] = id;
    }

    std::ostringstream sig;
    sig << (include_labels ? 'L' : 'N') << '|' << state.directions.chars() << '|';
    for (NodeId id : by_canonical) {
        const Node& node = state.nodes[id];
        for (std::size_t d = 0; d < node.edges.size(); ++d) {
            if (d) sig << ',';
            sig << numbering[node.edges[d]];
        }
        if (include_labels) {
            sig << '~';
            for (char c : node.label) {
                if (c == ';' || c == '\\') sig << '\\';
                sig << c;
            }
        }
        sig << ';';
    }
    return CanonicalForm{sig.str(), count};
}

void DecodeManifest::validate() const {
    if (alphabet.empty()) {
        fail("E_SCHEMA", "manifest alphabet is empty");
    }
    std::size_t want = 1;
    while ((1ull << want) < alphabet.size()) ++want;
    if (bits.size() != want) {
        fail("E_SCHEMA", "manifest bit width " + std::to_string(bits.size()) +
                             " does not match alphabet size " + std::to_string(alphabet.size()));
    }
    std::vector<std::string> seen;
    for (const auto& [symbol, code] : codes) {
        if (symbol.size() != 1) {
            fail("E_SCHEMA", "manifest symbols must be single characters: '" + symbol + "'");
        }
        if (code.size() != bits.size()) {
            fail("E_SCHEMA", "code '" + code + "' has wrong width");
        }
        if (std::find(seen.begin(), seen.end(), code) != seen.end()) {
            fail("E_SCHEMA", "duplicate code '" + code + "'");
        }
        seen.push_back(code);
    }
    if (codes.size() != alphabet.size()) {
        fail("E_SCHEMA", "manifest codes must cover the alphabet exactly");
    }
}

std::string DecodeManifest::to_json() const {
    nlohmann::json doc;
    doc["alphabet"] = alphabet;
    nlohmann::json bit_dirs = nlohmann::json::array();
    for (char c : bits) bit_dirs.push_back(std::string(1, c));
    doc["bits"] = bit_dirs;
    nlohmann::json code_map = nlohmann::json::object();
    for (const auto& [symbol, code] : codes) code_map[symbol] = code;
    doc["codes"] = code_map;
    doc["east"] = std::string(1, east);
    doc["west"] = std::string(1, west);
    doc["origin_dir"] = std::string(1, origin_dir);
    return doc.dump(2);
}

DecodeManifest DecodeManifest::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail("E_PARSE", e.what());
    }
    try {
        DecodeManifest manifest;
        for (const char* key : {"alphabet", "bits", "codes", "east", "west", "origin_dir"}) {
            if (!doc.contains(key)) {
                fail("E_SCHEMA", std::string("manifest missing field '") + key + "'");
            }
        }
        manifest.alphabet = doc["alphabet"].get<std::vector<std::string>>();
        for (const auto& b : doc["bits"]) {
            std::string s = b.get<std::string>();
            if (s.size() != 1) fail("E_SCHEMA", "bit directions must be single characters");
            manifest.bits += s;
        }
        // Keep codes in alphabet order so decode is deterministic.
        for (const std::string& symbol : manifest.alphabet) {
            if (!doc["codes"].contains(symbol)) {
                fail("E_SCHEMA", "no code for symbol '" + symbol + "'");
            }
            manifest.codes.emplace_back(symbol, doc["codes"][symbol].get<std::string>());
        }
        auto single = [&](const char* key) {
            std::string s = doc[key].get<std::string>();
            if (s.size() != 1) fail("E_SCHEMA", std::string(key) + " must be a single character");
            return s[0];
        };
        manifest.east = single("east");
        manifest.west = single("west");
        manifest.origin_dir = single("origin_dir");
        manifest.validate();
        return manifest;
    } catch (const nlohmann::json::exception& e) {
        fail("E_SCHEMA", e.what());
    }
}

std::string decode_string(const MachineState& state, const DecodeManifest& manifest) {
    manifest.validate();
    const std::size_t node_count = state.nodes.size();

    NodeId current = state.center;
    // Walk west until the w-target is the origin; that node is the western end.
    std::size_t steps = 0;
    while (resolve(state, current, std::string(1, manifest.west)) != kOrigin) {
        current = resolve(state, current, std::string(1, manifest.west));
        if (++steps > node_count) {
            fail("E_DECODE_CYCLE", "west walk exceeded node count");
        }
    }

    std::string out;
    steps = 0;
    while (true) {
        // Read this node's bit pattern, most significant bit first.
        std::string code(manifest.code_width(), '0');
        for (std::size_t b = 0; b < manifest.code_width(); ++b) {
            NodeId target = resolve(state, current, std::string(1, manifest.bits[b]));
            char& slot = code[manifest.code_width() - 1 - b];
            if (target == kOrigin) {
                slot = '1';
            } else if (target == current) {
                slot = '0';
            } else {
                fail("E_DECODE_BIT", "bit direction '" + std::string(1, manifest.bits[b]) +
                                         "' points neither to self nor to origin");
            }
        }
        const std::string* symbol = nullptr;
        for (const auto& [sym, c] : manifest.codes) {
            if (c == code) {
                symbol = &sym;
                break;
            }
        }
        if (!symbol) {
            fail("E_DECODE_CODE", "bit pattern " + code + " matches no symbol");
        }
        out += *symbol;

        NodeId east = resolve(state, current, std::string(1, manifest.east));
        if (east == kOrigin) break;
        current = east;
        if (++steps > node_count) {
            fail("E_DECODE_CYCLE", "east walk exceeded node count");
        }
    }
    return out;
}

std::string state_to_json(const MachineState& state) {
    nlohmann::json doc;
    nlohmann::json dirs = nlohmann::json::array();
    for (char c : state.directions.chars()) {
        dirs.push_back(std::string(1, c));
    }
    doc["directions"] = dirs;
    doc["origin"] = kOrigin;
    doc["center"] = state.center;
    doc["mass"] = state.mass;
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeId id = 0; id < state.nodes.size(); ++id) {
        const Node& node = state.nodes[id];
        nlohmann::json edges = nlohmann::json::object();
        for (std::size_t d = 0; d < node.edges.size(); ++d) {
            edges[std::string(1, state.directions.at(d))] = node.edges[d];
        }
        nodes.push_back({{"id", id}, {"label", node.label}, {"edges", edges}});
    }
    doc["nodes"] = nodes;
    return doc.dump(2);
}

MachineState state_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail("E_PARSE", e.what());
    }
    auto require = [&](const char* key) -> const nlohmann::json& {
        if (!doc.contains(key)) {
            fail("E_SCHEMA", std::string("missing field '") + key + "'");
        }
        return doc[key];
    };
    try {
        std::string chars;
        for (const auto& d : require("directions")) {
            std::string s = d.get<std::string>();
            if (s.size() != 1) fail("E_SCHEMA", "directions must be single characters");
            chars += s;
        }
        MachineState state;
        state.directions = DirectionSet(chars);
        if (require("origin").get<NodeId>() != kOrigin) {
            fail("E_SCHEMA", "origin must be node 0");
        }
        state.center = require("center").get<NodeId>();
        state.mass = require("mass").get<std::uint64_t>();
        const auto& nodes = require("nodes");
        state.nodes.resize(nodes.size());
        for (const auto& entry : nodes) {
            if (!entry.contains("id") || !entry.contains("label") || !entry.contains("edges")) {
                fail("E_SCHEMA", "node entry missing id/label/edges");
            }
            NodeId id = entry["id"].get<NodeId>();
            if (id >= state.nodes.size()) fail("E_SCHEMA", "node ids must be dense");
            Node& node = state.nodes[id];
            node.label = entry["label"].get<std::string>();
            node.edges.assign(state.directions.size(), kOrigin);
            const auto& edges = entry["edges"];
            if (edges.size() != state.directions.size()) {
                fail("E_SCHEMA", "node " + std::to_string(id) + " is missing edges");
            }
            for (auto it = edges.begin(); it != edges.end(); ++it) {
                if (it.key().size() != 1 || !state.directions.contains(it.key()[0])) {
                    fail("E_SCHEMA", "unknown edge direction '" + it.key() + "'");
                }
                NodeId target = it.value().get<NodeId>();
                if (target >= state.nodes.size()) {
                    fail("E_SCHEMA", "edge target out of range");
                }
                node.edges[static_cast<std::size_t>(state.directions.index_of(it.key()[0]))] = target;
            }
        }
        if (!state.valid_node(state.center)) fail("E_SCHEMA", "center out of range");
        return state;
    } catch (const nlohmann::json::exception& e) {
        fail("E_SCHEMA", e.what());
    }
}

std::string state_to_dot(const MachineState& state, const DecodeManifest* manifest) {
    std::ostringstream out;
    out << "digraph mwsmm {\n  rankdir=LR;\n  node [shape=circle];\n";
    for (NodeId id = 0; id < state.nodes.size(); ++id) {
        out << "  n" << id << " [label=\"" << state.nodes[id].label << "\\n#" << id << "\"";
        if (id == state.center) {
            out << ", style=\"filled,bold\", fillcolor=gray";
        }
        out << "];\n";
    }
    for (NodeId id = 0; id < state.nodes.size(); ++id) {
        // Merge parallel edges; label with comma-joined directions.
        std::map<NodeId, std::string> grouped;
        for (std::size_t d = 0; d < state.nodes[id].edges.size(); ++d) {
            std::string& label = grouped[state.nodes[id].edges[d]];
            if (!label.empty()) label += ",";
            label += state.directions.at(d);
        }
        for (const auto& [target, label] : grouped) {
            out << "  n" << id << " -> n" << target << " [label=\"" << label << "\"];\n";
        }
    }
    if (manifest) {
        try {
            out << "  label=\"" << decode_string(state, *manifest) << "\";\n";
        } catch (const Error&) {
            // Not a decodable string state; leave the graph unannotated.
        }
    }
    out << "}\n";
    return out.str();
}

void check_state_invariants(const MachineState& state) {
    assert(!state.nodes.empty());
    assert(state.valid_node(state.center));
    for (const Node& node : state.nodes) {
        assert(node.edges.size() == state.directions.size());
        for (NodeId target : node.edges) {
            assert(state.valid_node(target));
            (void)target;
        }
    }
}

} // namespace mwsmm
