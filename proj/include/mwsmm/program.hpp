#ifndef MWSMM_PROGRAM_HPP
#define MWSMM_PROGRAM_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <mwsmm/graph.hpp>

namespace mwsmm {

enum class CmpOp { Eq, Neq };

/// Boolean expression over paths, evaluated with a candidate node as root.
/// Value semantics; And/Or hold flattened operand lists.
struct BoolExpr {
    enum class Kind { Cmp, And, Or, Not };

    Kind kind = Kind::Cmp;
    // Cmp payload; empty string is the empty path (`_` in source).
    std::string lhs;
    std::string rhs;
    CmpOp op = CmpOp::Eq;
    // And/Or operands, or the single Not operand.
    std::vector<BoolExpr> children;

    static BoolExpr cmp(std::string lhs, CmpOp op, std::string rhs);
    static BoolExpr conj(std::vector<BoolExpr> operands);
    static BoolExpr disj(std::vector<BoolExpr> operands);
    static BoolExpr negate(BoolExpr operand);

    bool operator==(const BoolExpr&) const = default;
};

struct JumpTarget {
    enum class Kind { Absolute, Relative };
    Kind kind = Kind::Absolute;
    int value = 0;

    bool operator==(const JumpTarget&) const = default;
};

struct InstrNew {
    std::optional<std::string> label;
    bool operator==(const InstrNew&) const = default;
};
struct InstrSet {
    std::string prefix; // path to the node whose edge moves
    char dir = 0;       // the edge
    std::string target; // path to the new target; empty = the local center
    bool operator==(const InstrSet&) const = default;
};
struct InstrCtr {
    std::string path;
    bool operator==(const InstrCtr&) const = default;
};
struct InstrIf {
    std::string left;
    std::string right;
    JumpTarget jump;
    bool operator==(const InstrIf&) const = default;
};
struct InstrRen {
    std::string label;
    bool operator==(const InstrRen&) const = default;
};
struct InstrStop {
    std::string message; // may be empty
    bool operator==(const InstrStop&) const = default;
};
struct InstrSkip {
    std::string comment; // verbatim, may be empty
    bool operator==(const InstrSkip&) const = default;
};
struct InstrMatch {
    BoolExpr expr;
    bool operator==(const InstrMatch&) const = default;
};

using Instruction =
    std::variant<InstrNew, InstrSet, InstrCtr, InstrIf, InstrRen, InstrStop, InstrSkip, InstrMatch>;

/// 1-based inclusive range of instruction line numbers. Empty when last < first.
struct LineRange {
    int first = 1;
    int last = 0;

    bool contains(int line) const { return line >= first && line <= last; }
    bool empty() const { return last < first; }

    bool operator==(const LineRange&) const = default;
};

struct Block {
    std::string name;
    LineRange range; // first line is the block-head match

    bool operator==(const Block&) const = default;
};

/// A parsed program: numbered instructions partitioned into a prologue and
/// named match-blocks. Line numbers are global and count instructions only.
struct Program {
    DirectionSet directions;
    bool directions_declared = false; // true when `.directions` appeared
    std::vector<Instruction> instructions; // instructions[i] is line i+1
    LineRange prologue;
    std::vector<Block> blocks;

    const Instruction& at(int line) const { return instructions[static_cast<std::size_t>(line - 1)]; }
    int line_count() const { return static_cast<int>(instructions.size()); }
    const Block* find_block(const std::string& name) const;

    // Structural equality; ignores directions_declared.
    bool same_structure(const Program& other) const;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string code;
    int line = 0;
    std::string message;

    bool is_error() const { return severity == Severity::Error; }
};

/// Parse the line-oriented `.smm` syntax. Throws E_SYNTAX / E_LINE_NUMBER /
/// E_BAD_PATH with line information.
Program parse_program(const std::string& text);

/// Static checks; returns diagnostics instead of throwing. E_JUMP_SCOPE,
/// E_BLOCK_HEAD, E_UNDECLARED, W_DEAD_CODE.
std::vector<Diagnostic> validate_program(const Program& program);

/// Canonical rendering with explicit line numbers; parse(format(p)) has the
/// same structure as p.
std::string format_program(const Program& program);

std::string format_instruction(const Instruction& instruction);
std::string format_bool_expr(const BoolExpr& expr);

/// All direction characters used by any path in the expression.
void collect_expr_chars(const BoolExpr& expr, std::string& out);

} // namespace mwsmm

#endif // MWSMM_PROGRAM_HPP
