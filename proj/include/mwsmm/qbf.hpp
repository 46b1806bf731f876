#ifndef MWSMM_QBF_HPP
#define MWSMM_QBF_HPP

#include <string>
#include <vector>

#include <mwsmm/engine.hpp>
#include <mwsmm/program.hpp>

namespace mwsmm {

enum class Quantifier { Forall, Exists };

/// Formula tree over quantified variables: binary and/or, unary not.
struct QbfFormula {
    enum class Kind { Var, And, Or, Not };
    Kind kind = Kind::Var;
    int var = 0; // 1-based, Var only
    std::vector<QbfFormula> children;

    bool operator==(const QbfFormula&) const = default;
};

struct QbfInstance {
    std::vector<std::pair<Quantifier, int>> quantifiers; // binding order
    QbfFormula formula;
    int variable_count = 0; // n
    int depth = 0;          // operator-tree depth; a bare variable is 0
};

/// Grammar: `(exists|forall) x<i>` list, `:`, formula over `&`, `|`, `!`,
/// `x<i>`, parentheses. Quantified indices must be exactly 1..n.
QbfInstance parse_qbf(const std::string& text);

/// Brute force over all 2^n assignments; forall = conjunction over both
/// bindings, exists = disjunction.
bool eval_qbf_oracle(const QbfInstance& instance);

struct QbfDirectionTable {
    // l, r, p structural; A, S, N type flags; o origin; v value; x ready;
    // i quantifier-leaf flag; plus one digit direction per variable.
    std::string all; // sorted, size 10 + n
    std::string variable_dirs;
};

struct CompiledQbf {
    Program program;
    QbfDirectionTable directions;
    std::vector<std::string> top_blocks; // ATTACH, EVAL_AND, EVAL_OR, EVAL_NOT
    std::string source_text;
};

/// The quantifier-tree construction: the prologue doubles a frontier n times
/// (one inner match per level), the ATTACH block roots the formula tree at
/// every leaf, and three generic evaluation blocks propagate values up. The
/// answer ends in direction v of the QBF-labelled root: origin means true.
CompiledQbf compile_qbf(const QbfInstance& instance, std::size_t max_nodes = RunLimits{}.max_nodes);

/// Read the answer off a halted run: v of the center points at the origin.
bool read_qbf_result(const MachineState& state);

/// Sidecar contents emitted next to compiled programs.
std::string qbf_sidecar_json();

} // namespace mwsmm

#endif // MWSMM_QBF_HPP
