#ifndef MWSMM_GRAPH_HPP
#define MWSMM_GRAPH_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <mwsmm/error.hpp>

namespace mwsmm {

using NodeId = std::uint32_t;

inline constexpr NodeId kOrigin = 0;

// The empty-path token in program text. Never a legal direction character.
inline constexpr char kEmptyPathToken = '_';

/// Ordered set of single-character direction names. Iteration order is the
/// sorted character order, fixed at construction.
class DirectionSet {
public:
    DirectionSet() { index_.fill(-1); }

    // Throws E_EMPTY_DIRECTIONS / E_BAD_DIRECTION on invalid input.
    explicit DirectionSet(std::string_view chars);

    std::size_t size() const { return chars_.size(); }
    const std::string& chars() const { return chars_; }
    char at(std::size_t i) const { return chars_[i]; }

    bool contains(char c) const { return index_of(c) >= 0; }

    // -1 when c is not a declared direction.
    int index_of(char c) const {
        return index_[static_cast<unsigned char>(c)];
    }

    bool operator==(const DirectionSet& other) const { return chars_ == other.chars_; }

private:
    std::string chars_;
    std::array<std::int16_t, 256> index_{};
};

struct Node {
    std::string label;
    std::vector<NodeId> edges; // indexed by direction index; always total

    bool operator==(const Node&) const = default;
};

/// The machine state: a directed graph of fixed out-degree nodes, a
/// distinguished center, and the mass counter (number of `new` executions).
/// Node ids are dense, assigned in creation order; id 0 is the origin.
struct MachineState {
    DirectionSet directions;
    std::vector<Node> nodes;
    NodeId center = kOrigin;
    std::uint64_t mass = 0;

    bool valid_node(NodeId id) const { return id < nodes.size(); }

    bool operator==(const MachineState&) const = default;
};

struct CanonicalForm {
    std::string signature;
    std::size_t reachable_count = 0;

    // FNV-1a 64 of the signature, for compact display names.
    std::uint64_t digest() const;
    std::string digest_hex() const;

    bool operator==(const CanonicalForm&) const = default;
};

/// Maps bit-direction patterns back to alphabet symbols for doubly-linked
/// string states. Codes are binary strings written most-significant bit
/// first; bit i (least significant = 0) lives in direction bits[i].
struct DecodeManifest {
    std::vector<std::string> alphabet; // single-character symbols, in index order
    std::string bits;                  // bit directions, index 0 = least significant
    std::vector<std::pair<std::string, std::string>> codes; // symbol -> code
    char east = 'e';
    char west = 'w';
    char origin_dir = 'o';

    std::size_t code_width() const { return bits.size(); }

    // Throws E_SCHEMA when the invariants do not hold.
    void validate() const;

    std::string to_json() const;
    static DecodeManifest from_json(const std::string& text);
};

// --- state construction and mutation ---

MachineState init_state(const DirectionSet& directions);

/// Follow `path` from `root`, one direction per character. Total on declared
/// directions; E_BAD_DIRECTION otherwise.
NodeId resolve(const MachineState& state, NodeId root, std::string_view path);

/// Append a node whose every edge points at `target`. Does not move the
/// center; increments mass. Empty label gets the generated "n<id>".
NodeId add_node(MachineState& state, std::optional<std::string> label, NodeId target,
                std::size_t max_nodes = std::numeric_limits<std::size_t>::max());

void set_edge(MachineState& state, NodeId node, char dir, NodeId target);

// --- queries ---

/// BFS closure from `root` over all direction edges, ascending id order.
std::vector<NodeId> reachable(const MachineState& state, NodeId root);

/// Canonical BFS numbering from `root`, expanding edges in DirectionSet
/// order. numbering[node] is the canonical id; unreachable nodes map to -1.
std::vector<std::int64_t> canonical_numbering(const MachineState& state, NodeId root);

/// Signature of the reachable rooted direction-labeled graph. Two states get
/// equal signatures iff those subgraphs are isomorphic (label-equal when
/// include_labels is set).
CanonicalForm canonical_signature(const MachineState& state, NodeId root,
                                  bool include_labels = false);

/// Read the doubly-linked string: walk west to the boundary, then decode
/// east-to-boundary. A bit is 1 when its direction points at the origin and
/// 0 when it points at the node itself; anything else is E_DECODE_BIT.
std::string decode_string(const MachineState& state, const DecodeManifest& manifest);

// --- serialization ---

std::string state_to_json(const MachineState& state);
MachineState state_from_json(const std::string& text);

/// DOT export; the center is drawn filled gray and bold, parallel edges are
/// merged with comma-joined direction labels.
std::string state_to_dot(const MachineState& state, const DecodeManifest* manifest = nullptr);

/// Debug-mode invariant: every node carries exactly one edge per direction
/// and every target id is valid.
void check_state_invariants(const MachineState& state);

} // namespace mwsmm

#endif // MWSMM_GRAPH_HPP
