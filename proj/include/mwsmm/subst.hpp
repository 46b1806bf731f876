#ifndef MWSMM_SUBST_HPP
#define MWSMM_SUBST_HPP

#include <string>
#include <vector>

#include <mwsmm/engine.hpp>
#include <mwsmm/program.hpp>

namespace mwsmm {

/// A string substitution system over single-character symbols.
struct SubstSystem {
    struct Rule {
        std::string lhs;
        std::string rhs;

        bool operator==(const Rule&) const = default;
    };

    std::string alphabet; // ordered, no duplicates
    std::vector<Rule> rules;
    std::string initial;

    bool operator==(const SubstSystem&) const = default;
};

/// Lines: `alphabet: A B`, `rule: LHS -> RHS` (repeatable), `init: STRING`.
/// `#` comments and blank lines allowed. E_SYNTAX / E_ALPHABET.
SubstSystem parse_subst(const std::string& text);

struct CompiledSubst {
    Program program;
    DecodeManifest manifest;
    std::vector<std::string> top_blocks; // R1..Rk in rule order
    std::string source_text;             // the emitted .smm text
};

/// Emit an MWSMM program: prologue builds the initial doubly-linked string
/// (center on the first created, westmost node), one match-block per rule
/// rewriting in place at the matched node.
CompiledSubst compile_subst(const SubstSystem& system);

/// Independent string-level multiway evolution, used as the oracle for the
/// compiled machine programs.
struct StringMultiwayGraph {
    struct Edge {
        std::string from;
        std::size_t rule = 0;     // rule index, 0-based
        std::size_t position = 0; // occurrence position in `from`
        std::string to;
    };

    std::vector<std::vector<std::string>> strings_by_depth; // first seen per depth
    std::vector<Edge> edges;
    std::vector<std::string> terminals; // expanded strings with no redex
    bool frontier_exhausted = false;
};

StringMultiwayGraph subst_oracle(const SubstSystem& system, std::size_t depth_limit);

/// All positions where lhs occurs in s, ascending, overlaps included.
std::vector<std::size_t> occurrences(const std::string& s, const std::string& lhs);

} // namespace mwsmm

#endif // MWSMM_SUBST_HPP
