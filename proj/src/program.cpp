#include <mwsmm/program.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace mwsmm {

BoolExpr BoolExpr::cmp(std::string lhs, CmpOp op, std::string rhs) {
    BoolExpr e;
    e.kind = Kind::Cmp;
    e.lhs = std::move(lhs);
    e.op = op;
    e.rhs = std::move(rhs);
    return e;
}

static BoolExpr make_list(BoolExpr::Kind kind, std::vector<BoolExpr> operands) {
    // Normalize: singletons collapse, same-kind children splice. Keeps the
    // structure in the exact shape the parser produces.
    if (operands.size() == 1) return std::move(operands.front());
    BoolExpr e;
    e.kind = kind;
    for (BoolExpr& op : operands) {
        if (op.kind == kind) {
            for (BoolExpr& sub : op.children) e.children.push_back(std::move(sub));
        } else {
            e.children.push_back(std::move(op));
        }
    }
    return e;
}

BoolExpr BoolExpr::conj(std::vector<BoolExpr> operands) {
    return make_list(Kind::And, std::move(operands));
}

BoolExpr BoolExpr::disj(std::vector<BoolExpr> operands) {
    return make_list(Kind::Or, std::move(operands));
}

BoolExpr BoolExpr::negate(BoolExpr operand) {
    BoolExpr e;
    e.kind = Kind::Not;
    e.children.push_back(std::move(operand));
    return e;
}

const Block* Program::find_block(const std::string& name) const {
    for (const Block& block : blocks) {
        if (block.name == name) return &block;
    }
    return nullptr;
}

bool Program::same_structure(const Program& other) const {
    return directions == other.directions && instructions == other.instructions &&
           prologue == other.prologue && blocks == other.blocks;
}

// --- parsing ---

namespace {

[[noreturn]] void syntax_error(int source_line, const std::string& message,
                               const char* code = "E_SYNTAX") {
    fail(code, "line " + std::to_string(source_line) + ": " + message);
}

std::string rtrim(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
}

// Validates the `_` rules and maps the empty-path token to "".
std::string parse_path_token(const std::string& token, int source_line) {
    if (token == std::string(1, kEmptyPathToken)) return "";
    if (token.find(kEmptyPathToken) != std::string::npos) {
        syntax_error(source_line, "'_' may only stand alone as the empty path: '" + token + "'",
                     "E_BAD_PATH");
    }
    return token;
}

class ExprParser {
public:
    ExprParser(std::string_view text, int source_line) : source_line_(source_line) {
        tokenize(text);
    }

    BoolExpr parse() {
        BoolExpr e = parse_or();
        if (pos_ != tokens_.size()) {
            syntax_error(source_line_, "trailing tokens in match expression after '" +
                                           tokens_[pos_ - 1] + "'");
        }
        return e;
    }

private:
    void tokenize(std::string_view text) {
        std::size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (c == ' ' || c == '\t') {
                ++i;
            } else if (c == '(' || c == ')') {
                tokens_.emplace_back(1, c);
                ++i;
            } else if (c == '=' || c == '!') {
                if (i + 1 >= text.size() || text[i + 1] != '=') {
                    syntax_error(source_line_, std::string("expected '==' or '!=' near '") + c + "'");
                }
                tokens_.push_back(text[i] == '=' ? "==" : "!=");
                i += 2;
            } else {
                std::size_t start = i;
                while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '(' &&
                       text[i] != ')' && text[i] != '=' && text[i] != '!') {
                    ++i;
                }
                tokens_.emplace_back(text.substr(start, i - start));
            }
        }
    }

    bool peek_is(const std::string& token) const {
        return pos_ < tokens_.size() && tokens_[pos_] == token;
    }

    std::string next() {
        if (pos_ >= tokens_.size()) {
            syntax_error(source_line_, "unexpected end of match expression");
        }
        return tokens_[pos_++];
    }

    BoolExpr parse_or() {
        std::vector<BoolExpr> operands;
        operands.push_back(parse_and());
        while (peek_is("OR")) {
            ++pos_;
            operands.push_back(parse_and());
        }
        return BoolExpr::disj(std::move(operands));
    }

    BoolExpr parse_and() {
        std::vector<BoolExpr> operands;
        operands.push_back(parse_unary());
        while (peek_is("AND")) {
            ++pos_;
            operands.push_back(parse_unary());
        }
        return BoolExpr::conj(std::move(operands));
    }

    BoolExpr parse_unary() {
        if (peek_is("NOT")) {
            ++pos_;
            return BoolExpr::negate(parse_unary());
        }
        return parse_primary();
    }

    BoolExpr parse_primary() {
        if (peek_is("(")) {
            ++pos_;
            BoolExpr e = parse_or();
            if (!peek_is(")")) {
                syntax_error(source_line_, "expected ')' in match expression");
            }
            ++pos_;
            return e;
        }
        std::string lhs_token = next();
        if (lhs_token == "AND" || lhs_token == "OR" || lhs_token == "NOT" || lhs_token == ")") {
            syntax_error(source_line_, "expected a path where '" + lhs_token + "' appears");
        }
        std::string lhs = parse_path_token(lhs_token, source_line_);
        std::string op = next();
        if (op != "==" && op != "!=") {
            syntax_error(source_line_, "expected '==' or '!=' after path, got '" + op + "'");
        }
        std::string rhs_token = next();
        if (rhs_token == "AND" || rhs_token == "OR" || rhs_token == "NOT" || rhs_token == "(" ||
            rhs_token == ")") {
            syntax_error(source_line_, "expected a path after comparison operator");
        }
        std::string rhs = parse_path_token(rhs_token, source_line_);
        return BoolExpr::cmp(std::move(lhs), op == "==" ? CmpOp::Eq : CmpOp::Neq, std::move(rhs));
    }

    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
    int source_line_;
};

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

void collect_path_chars(const std::string& path, std::set<char>& out) {
    for (char c : path) out.insert(c);
}

} // namespace

void collect_expr_chars(const BoolExpr& expr, std::string& out) {
    if (expr.kind == BoolExpr::Kind::Cmp) {
        out += expr.lhs;
        out += expr.rhs;
    }
    for (const BoolExpr& child : expr.children) collect_expr_chars(child, out);
}

Program parse_program(const std::string& text) {
    Program program;
    std::optional<std::string> declared_directions;
    std::set<char> inferred;
    std::optional<std::string> pending_block; // .block seen, first line not yet
    std::vector<std::pair<std::string, int>> open_blocks; // name, first line

    std::istringstream in(text);
    std::string raw;
    int source_line = 0;

    auto note_path = [&](const std::string& path) { collect_path_chars(path, inferred); };

    while (std::getline(in, raw)) {
        ++source_line;
        std::string line = rtrim(raw);
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;

        if (line[start] == '.') {
            std::size_t hash = line.find('#', start);
            std::string directive = rtrim(hash == std::string::npos ? line.substr(start)
                                                                    : line.substr(start, hash - start));
            std::vector<std::string> tokens = split_tokens(directive);
            if (tokens[0] == ".block") {
                if (tokens.size() != 2) {
                    syntax_error(source_line, ".block needs exactly one name");
                }
                if (pending_block) {
                    syntax_error(source_line, "block '" + *pending_block + "' has no instructions");
                }
                for (const auto& [name, first] : open_blocks) {
                    if (name == tokens[1]) {
                        syntax_error(source_line, "duplicate block name '" + tokens[1] + "'");
                    }
                }
                for (const Block& block : program.blocks) {
                    if (block.name == tokens[1]) {
                        syntax_error(source_line, "duplicate block name '" + tokens[1] + "'");
                    }
                }
                pending_block = tokens[1];
            } else if (tokens[0] == ".directions") {
                if (declared_directions) {
                    syntax_error(source_line, "duplicate .directions directive");
                }
                std::string chars;
                for (std::size_t i = 1; i < tokens.size(); ++i) chars += tokens[i];
                if (chars.empty()) {
                    syntax_error(source_line, ".directions needs at least one character");
                }
                declared_directions = chars;
            } else {
                syntax_error(source_line, "unknown directive '" + tokens[0] + "'");
            }
            continue;
        }

        // Instruction line: optional explicit number, keyword, payload.
        std::size_t pos = start;
        auto read_token = [&]() {
            std::size_t token_start = pos;
            while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
            return line.substr(token_start, pos - token_start);
        };
        auto skip_spaces = [&]() {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        };

        std::string first_token = read_token();
        skip_spaces();
        std::string keyword;
        int next_number = static_cast<int>(program.instructions.size()) + 1;
        if (all_digits(first_token)) {
            int explicit_number = std::stoi(first_token);
            if (explicit_number != next_number) {
                fail("E_LINE_NUMBER", "line " + std::to_string(source_line) + ": explicit number " +
                                          std::to_string(explicit_number) + " but instruction is #" +
                                          std::to_string(next_number));
            }
            keyword = read_token();
            skip_spaces();
        } else {
            keyword = first_token;
        }
        if (keyword.empty()) {
            syntax_error(source_line, "missing instruction keyword");
        }

        Instruction instruction;
        if (keyword == "stop" || keyword == "skip") {
            // Rest of the line is verbatim; '#' is not a comment here.
            std::string text_rest = pos < line.size() ? line.substr(pos) : "";
            if (keyword == "stop") {
                instruction = InstrStop{text_rest};
            } else {
                instruction = InstrSkip{text_rest};
            }
        } else {
            std::size_t hash = line.find('#', pos);
            std::string rest =
                rtrim(hash == std::string::npos ? line.substr(pos) : line.substr(pos, hash - pos));
            if (keyword == "new") {
                if (rest.empty()) {
                    instruction = InstrNew{std::nullopt};
                } else {
                    instruction = InstrNew{rest};
                }
            } else if (keyword == "ren") {
                if (rest.empty()) {
                    syntax_error(source_line, "ren needs a label");
                }
                instruction = InstrRen{rest};
            } else if (keyword == "set") {
                std::vector<std::string> tokens = split_tokens(rest);
                if (tokens.empty() || tokens.size() > 2) {
                    syntax_error(source_line, "set needs one or two path tokens");
                }
                if (tokens[0] == std::string(1, kEmptyPathToken)) {
                    syntax_error(source_line, "set needs a direction to redirect");
                }
                std::string subject = parse_path_token(tokens[0], source_line);
                InstrSet set;
                set.dir = subject.back();
                set.prefix = subject.substr(0, subject.size() - 1);
                set.target = tokens.size() == 2 ? parse_path_token(tokens[1], source_line) : "";
                note_path(subject);
                note_path(set.target);
                instruction = set;
            } else if (keyword == "ctr" || keyword == "center") {
                std::vector<std::string> tokens = split_tokens(rest);
                if (tokens.size() != 1) {
                    syntax_error(source_line, "ctr needs exactly one path");
                }
                std::string path = parse_path_token(tokens[0], source_line);
                note_path(path);
                instruction = InstrCtr{path};
            } else if (keyword == "if") {
                std::vector<std::string> tokens = split_tokens(rest);
                if (tokens.size() != 3) {
                    syntax_error(source_line, "if needs two paths and a target line");
                }
                InstrIf cond;
                cond.left = parse_path_token(tokens[0], source_line);
                cond.right = parse_path_token(tokens[1], source_line);
                note_path(cond.left);
                note_path(cond.right);
                const std::string& target = tokens[2];
                if (target[0] == '+' || target[0] == '-') {
                    if (!all_digits(target.substr(1))) {
                        syntax_error(source_line, "bad jump target '" + target + "'");
                    }
                    cond.jump.kind = JumpTarget::Kind::Relative;
                    cond.jump.value = std::stoi(target);
                } else if (all_digits(target)) {
                    cond.jump.kind = JumpTarget::Kind::Absolute;
                    cond.jump.value = std::stoi(target);
                } else {
                    syntax_error(source_line, "bad jump target '" + target + "'");
                }
                instruction = cond;
            } else if (keyword == "match") {
                if (rest.empty()) {
                    syntax_error(source_line, "match needs a boolean expression");
                }
                BoolExpr expr = ExprParser(rest, source_line).parse();
                std::string chars;
                collect_expr_chars(expr, chars);
                for (char c : chars) inferred.insert(c);
                instruction = InstrMatch{std::move(expr)};
            } else {
                syntax_error(source_line, "unknown instruction '" + keyword + "'");
            }
        }

        program.instructions.push_back(std::move(instruction));
        int line_number = next_number;
        if (pending_block) {
            if (!open_blocks.empty()) {
                program.blocks.push_back(
                    Block{open_blocks.back().first, {open_blocks.back().second, line_number - 1}});
                open_blocks.pop_back();
            } else {
                program.prologue = {1, line_number - 1};
            }
            open_blocks.emplace_back(*pending_block, line_number);
            pending_block.reset();
        }
    }

    if (pending_block) {
        fail("E_SYNTAX", "block '" + *pending_block + "' has no instructions");
    }
    int total = program.line_count();
    if (!open_blocks.empty()) {
        program.blocks.push_back(
            Block{open_blocks.back().first, {open_blocks.back().second, total}});
    } else {
        program.prologue = {1, total};
    }

    if (declared_directions) {
        program.directions = DirectionSet(*declared_directions);
        program.directions_declared = true;
    } else {
        std::string chars(inferred.begin(), inferred.end());
        if (chars.empty()) {
            fail("E_SYNTAX", "no .directions directive and no path tokens to infer from");
        }
        program.directions = DirectionSet(chars);
        program.directions_declared = false;
    }
    return program;
}

// --- validation ---

namespace {

void check_region_paths(const Program& program, const LineRange& region,
                        std::vector<Diagnostic>& out) {
    for (int line = region.first; line <= region.last; ++line) {
        std::string chars;
        const Instruction& instruction = program.at(line);
        if (const auto* set = std::get_if<InstrSet>(&instruction)) {
            chars += set->prefix;
            chars += set->dir;
            chars += set->target;
        } else if (const auto* ctr = std::get_if<InstrCtr>(&instruction)) {
            chars += ctr->path;
        } else if (const auto* cond = std::get_if<InstrIf>(&instruction)) {
            chars += cond->left;
            chars += cond->right;
        } else if (const auto* match = std::get_if<InstrMatch>(&instruction)) {
            collect_expr_chars(match->expr, chars);
        }
        for (char c : chars) {
            if (!program.directions.contains(c)) {
                out.push_back({Diagnostic::Severity::Error, "E_UNDECLARED", line,
                               std::string("direction '") + c + "' is not declared"});
                break;
            }
        }
    }
}

void check_region_jumps(const Program& program, const LineRange& region,
                        std::vector<Diagnostic>& out) {
    for (int line = region.first; line <= region.last; ++line) {
        const auto* cond = std::get_if<InstrIf>(&program.at(line));
        if (!cond) continue;
        int target = cond->jump.kind == JumpTarget::Kind::Absolute ? cond->jump.value
                                                                   : line + cond->jump.value;
        if (!region.contains(target)) {
            out.push_back({Diagnostic::Severity::Error, "E_JUMP_SCOPE", line,
                           "jump to line " + std::to_string(target) +
                               " leaves its block (lines " + std::to_string(region.first) + ".." +
                               std::to_string(region.last) + ")"});
        }
    }
}

void check_region_dead_matches(const Program& program, const LineRange& region,
                               std::vector<Diagnostic>& out) {
    std::set<int> jump_targets;
    for (int line = region.first; line <= region.last; ++line) {
        if (const auto* cond = std::get_if<InstrIf>(&program.at(line))) {
            jump_targets.insert(cond->jump.kind == JumpTarget::Kind::Absolute
                                    ? cond->jump.value
                                    : line + cond->jump.value);
        }
    }
    for (int line = region.first + 1; line <= region.last; ++line) {
        if (!std::holds_alternative<InstrMatch>(program.at(line))) continue;
        if (std::holds_alternative<InstrStop>(program.at(line - 1)) && !jump_targets.count(line)) {
            out.push_back({Diagnostic::Severity::Warning, "W_DEAD_CODE", line,
                           "match after a stop with no jump into it never forks"});
        }
    }
}

} // namespace

std::vector<Diagnostic> validate_program(const Program& program) {
    std::vector<Diagnostic> out;
    for (const Block& block : program.blocks) {
        if (block.range.empty() ||
            !std::holds_alternative<InstrMatch>(program.at(block.range.first))) {
            out.push_back({Diagnostic::Severity::Error, "E_BLOCK_HEAD", block.range.first,
                           "block '" + block.name + "' must start with a match instruction"});
        }
    }
    std::vector<LineRange> regions;
    if (!program.prologue.empty()) regions.push_back(program.prologue);
    for (const Block& block : program.blocks) regions.push_back(block.range);
    for (const LineRange& region : regions) {
        check_region_jumps(program, region, out);
        check_region_dead_matches(program, region, out);
        if (program.directions_declared) {
            check_region_paths(program, region, out);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    return out;
}

// --- formatting ---

namespace {

std::string path_or_empty(const std::string& path) {
    return path.empty() ? std::string(1, kEmptyPathToken) : path;
}

bool needs_parens_inside(BoolExpr::Kind parent, const BoolExpr& child) {
    switch (parent) {
        case BoolExpr::Kind::Not:
            return child.kind == BoolExpr::Kind::And || child.kind == BoolExpr::Kind::Or;
        case BoolExpr::Kind::And:
            return child.kind == BoolExpr::Kind::Or;
        default:
            return false;
    }
}

void render_expr(const BoolExpr& expr, std::string& out) {
    auto render_child = [&out](BoolExpr::Kind parent, const BoolExpr& child) {
        if (needs_parens_inside(parent, child)) {
            out += '(';
            render_expr(child, out);
            out += ')';
        } else {
            render_expr(child, out);
        }
    };
    switch (expr.kind) {
        case BoolExpr::Kind::Cmp:
            out += path_or_empty(expr.lhs);
            out += expr.op == CmpOp::Eq ? " == " : " != ";
            out += path_or_empty(expr.rhs);
            break;
        case BoolExpr::Kind::Not:
            out += "NOT ";
            render_child(BoolExpr::Kind::Not, expr.children.front());
            break;
        case BoolExpr::Kind::And:
            for (std::size_t i = 0; i < expr.children.size(); ++i) {
                if (i) out += " AND ";
                render_child(BoolExpr::Kind::And, expr.children[i]);
            }
            break;
        case BoolExpr::Kind::Or:
            for (std::size_t i = 0; i < expr.children.size(); ++i) {
                if (i) out += " OR ";
                render_child(BoolExpr::Kind::Or, expr.children[i]);
            }
            break;
    }
}

} // namespace

std::string format_bool_expr(const BoolExpr& expr) {
    std::string out;
    render_expr(expr, out);
    return out;
}

std::string format_instruction(const Instruction& instruction) {
    struct Renderer {
        std::string operator()(const InstrNew& i) const {
            return i.label ? "new " + *i.label : "new";
        }
        std::string operator()(const InstrSet& i) const {
            std::string out = "set " + i.prefix + std::string(1, i.dir);
            if (!i.target.empty()) out += " " + i.target;
            return out;
        }
        std::string operator()(const InstrCtr& i) const { return "ctr " + path_or_empty(i.path); }
        std::string operator()(const InstrIf& i) const {
            std::string target = i.jump.kind == JumpTarget::Kind::Absolute
                                     ? std::to_string(i.jump.value)
                                     : (i.jump.value >= 0 ? "+" + std::to_string(i.jump.value)
                                                          : std::to_string(i.jump.value));
            return "if " + path_or_empty(i.left) + " " + path_or_empty(i.right) + " " + target;
        }
        std::string operator()(const InstrRen& i) const { return "ren " + i.label; }
        std::string operator()(const InstrStop& i) const {
            return i.message.empty() ? "stop" : "stop " + i.message;
        }
        std::string operator()(const InstrSkip& i) const {
            return i.comment.empty() ? "skip" : "skip " + i.comment;
        }
        std::string operator()(const InstrMatch& i) const {
            return "match " + format_bool_expr(i.expr);
        }
    };
    return std::visit(Renderer{}, instruction);
}

std::string format_program(const Program& program) {
    std::ostringstream out;
    out << ".directions " << program.directions.chars() << "\n";
    auto emit_range = [&](const LineRange& range) {
        for (int line = range.first; line <= range.last; ++line) {
            out << line << " " << format_instruction(program.at(line)) << "\n";
        }
    };
    emit_range(program.prologue);
    for (const Block& block : program.blocks) {
        out << ".block " << block.name << "\n";
        emit_range(block.range);
    }
    return out.str();
}

} // namespace mwsmm
