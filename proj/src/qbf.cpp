#include <mwsmm/qbf.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mwsmm {

// --- parsing ---

namespace {

struct QbfTokenizer {
    std::vector<std::string> tokens;
    std::size_t pos = 0;

    explicit QbfTokenizer(const std::string& text) {
        std::size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
            } else if (c == '(' || c == ')' || c == '&' || c == '|' || c == '!' || c == ':') {
                tokens.emplace_back(1, c);
                ++i;
            } else if (std::isalnum(static_cast<unsigned char>(c))) {
                std::size_t start = i;
                while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
                tokens.emplace_back(text.substr(start, i - start));
            } else {
                fail("E_SYNTAX", std::string("unexpected character '") + c + "' in QBF");
            }
        }
    }

    bool done() const { return pos >= tokens.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return done() ? empty : tokens[pos];
    }
    std::string next() {
        if (done()) fail("E_SYNTAX", "unexpected end of QBF text");
        return tokens[pos++];
    }
};

int parse_var_token(const std::string& token) {
    if (token.size() < 2 || token[0] != 'x') {
        fail("E_SYNTAX", "expected a variable like x1, got '" + token + "'");
    }
    for (std::size_t i = 1; i < token.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(token[i]))) {
            fail("E_SYNTAX", "expected a variable like x1, got '" + token + "'");
        }
    }
    int index = std::stoi(token.substr(1));
    if (index < 1) fail("E_SYNTAX", "variable indices start at 1");
    return index;
}

struct FormulaParser {
    QbfTokenizer& in;

    QbfFormula parse_or() {
        QbfFormula left = parse_and();
        while (in.peek() == "|") {
            in.next();
            QbfFormula right = parse_and();
            QbfFormula node;
            node.kind = QbfFormula::Kind::Or;
            node.children.push_back(std::move(left));
            node.children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    QbfFormula parse_and() {
        QbfFormula left = parse_unary();
        while (in.peek() == "&") {
            in.next();
            QbfFormula right = parse_unary();
            QbfFormula node;
            node.kind = QbfFormula::Kind::And;
            node.children.push_back(std::move(left));
            node.children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    QbfFormula parse_unary() {
        if (in.peek() == "!") {
            in.next();
            QbfFormula node;
            node.kind = QbfFormula::Kind::Not;
            node.children.push_back(parse_unary());
            return node;
        }
        if (in.peek() == "(") {
            in.next();
            QbfFormula node = parse_or();
            if (in.peek() != ")") fail("E_SYNTAX", "expected ')' in QBF formula");
            in.next();
            return node;
        }
        QbfFormula node;
        node.kind = QbfFormula::Kind::Var;
        node.var = parse_var_token(in.next());
        return node;
    }
};

int formula_depth(const QbfFormula& f) {
    int best = 0;
    for (const QbfFormula& child : f.children) best = std::max(best, formula_depth(child));
    return f.kind == QbfFormula::Kind::Var ? 0 : 1 + best;
}

void collect_vars(const QbfFormula& f, std::set<int>& out) {
    if (f.kind == QbfFormula::Kind::Var) out.insert(f.var);
    for (const QbfFormula& child : f.children) collect_vars(child, out);
}

} // namespace

QbfInstance parse_qbf(const std::string& text) {
    QbfTokenizer in(text);
    QbfInstance instance;
    std::set<int> quantified;
    while (in.peek() == "exists" || in.peek() == "forall") {
        Quantifier kind = in.next() == "exists" ? Quantifier::Exists : Quantifier::Forall;
        int var = parse_var_token(in.next());
        if (!quantified.insert(var).second) {
            fail("E_DOUBLE_QUANT", "x" + std::to_string(var) + " is quantified twice");
        }
        instance.quantifiers.emplace_back(kind, var);
    }
    if (instance.quantifiers.empty()) {
        fail("E_SYNTAX", "a QBF needs at least one quantifier");
    }
    if (in.peek() != ":") fail("E_SYNTAX", "expected ':' between quantifiers and formula");
    in.next();
    FormulaParser parser{in};
    instance.formula = parser.parse_or();
    if (!in.done()) {
        fail("E_SYNTAX", "trailing tokens after formula: '" + in.peek() + "'");
    }

    instance.variable_count = static_cast<int>(instance.quantifiers.size());
    for (int i = 1; i <= instance.variable_count; ++i) {
        if (!quantified.count(i)) {
            fail("E_SYNTAX", "quantified indices must be exactly 1.." +
                                 std::to_string(instance.variable_count) + "; x" +
                                 std::to_string(i) + " is missing");
        }
    }
    std::set<int> used;
    collect_vars(instance.formula, used);
    for (int var : used) {
        if (!quantified.count(var)) {
            fail("E_UNBOUND_VAR", "x" + std::to_string(var) + " is not quantified");
        }
    }
    instance.depth = formula_depth(instance.formula);
    return instance;
}

namespace {

bool eval_formula(const QbfFormula& f, const std::vector<bool>& assignment) {
    switch (f.kind) {
        case QbfFormula::Kind::Var:
            return assignment[static_cast<std::size_t>(f.var)];
        case QbfFormula::Kind::And:
            return eval_formula(f.children[0], assignment) &&
                   eval_formula(f.children[1], assignment);
        case QbfFormula::Kind::Or:
            return eval_formula(f.children[0], assignment) ||
                   eval_formula(f.children[1], assignment);
        case QbfFormula::Kind::Not:
            return !eval_formula(f.children[0], assignment);
    }
    return false;
}

bool eval_quantified(const QbfInstance& instance, std::size_t level,
                     std::vector<bool>& assignment) {
    if (level == instance.quantifiers.size()) {
        return eval_formula(instance.formula, assignment);
    }
    auto [kind, var] = instance.quantifiers[level];
    assignment[static_cast<std::size_t>(var)] = false;
    bool low = eval_quantified(instance, level + 1, assignment);
    assignment[static_cast<std::size_t>(var)] = true;
    bool high = eval_quantified(instance, level + 1, assignment);
    return kind == Quantifier::Forall ? (low && high) : (low || high);
}

} // namespace

bool eval_qbf_oracle(const QbfInstance& instance) {
    std::vector<bool> assignment(static_cast<std::size_t>(instance.variable_count) + 1, false);
    return eval_quantified(instance, 0, assignment);
}

// --- compilation ---

namespace {

char var_dir(int var) { return static_cast<char>('0' + var); }

struct QbfEmitter {
    std::ostringstream out;
    void line(const std::string& text) { out << text << "\n"; }
};

// `if P o +2 / if _ _ +2 / set v o / set x o`: loads this node's value from
// the assignment bit stored at the level-`var` ancestor. `hops` is the
// p-distance from the current node to that ancestor.
void emit_var_load(QbfEmitter& e, int hops, int var) {
    std::string path = std::string(static_cast<std::size_t>(hops), 'p') + var_dir(var);
    e.line("if " + path + " o +2");
    e.line("if _ _ +2");
    e.line("set v o");
    e.line("set x o");
}

void emit_type_flag(QbfEmitter& e, QbfFormula::Kind kind) {
    switch (kind) {
        case QbfFormula::Kind::And: e.line("set A o"); break;
        case QbfFormula::Kind::Or: e.line("set S o"); break;
        case QbfFormula::Kind::Not: e.line("set N o"); break;
        case QbfFormula::Kind::Var: break;
    }
}

// Build `node`'s children under the current local center (the node itself),
// pre-order, returning with the center back where it started. `depth` is the
// node's distance below the quantifier leaf; `n` the variable count.
void emit_formula_children(QbfEmitter& e, const QbfFormula& node, int depth, int n) {
    const char* child_dirs = node.kind == QbfFormula::Kind::Not ? "l" : "lr";
    for (std::size_t c = 0; c < node.children.size(); ++c) {
        const QbfFormula& child = node.children[c];
        e.line("new");
        e.line("set o oo");
        e.line(std::string("set p") + child_dirs[c]);
        if (child.kind == QbfFormula::Kind::Var) {
            emit_var_load(e, depth + 1 + (n - child.var), child.var);
        } else {
            emit_type_flag(e, child.kind);
            emit_formula_children(e, child, depth + 1, n);
        }
        e.line("ctr p");
    }
}

} // namespace

CompiledQbf compile_qbf(const QbfInstance& instance, std::size_t max_nodes) {
    const int n = instance.variable_count;
    if (n > 9) {
        fail("E_TOO_LARGE", "variable directions are single digits; n must be at most 9");
    }
    if ((1ull << (n + 1)) > max_nodes) {
        fail("E_TOO_LARGE", "quantifier tree of 2^" + std::to_string(n + 1) +
                                " - 1 nodes exceeds the node budget");
    }

    std::string dirs = "lrpASNovxi";
    std::string var_dirs;
    for (int i = 1; i <= n; ++i) var_dirs += var_dir(i);
    dirs += var_dirs;
    std::sort(dirs.begin(), dirs.end());

    QbfEmitter e;
    e.line(".directions " + dirs);

    // Root setup. `new` from the origin leaves every edge on the origin, so
    // only the flags that must read unset get cleared.
    e.line("new QBF");
    e.line("set p");
    e.line("set l");
    e.line("set r");
    e.line("set v");
    e.line("set x");
    e.line("set N");
    e.line(instance.quantifiers[0].first == Quantifier::Forall ? "set S" : "set A");
    e.line("set i o");

    // One doubling segment per level. Segment k expands exactly the level
    // k-1 frontier: i marks unexpanded nodes and the p-path fixpoint test
    // pins the level, so forks re-reaching an earlier match go stale.
    for (int k = 1; k <= n; ++k) {
        std::string level_test;
        if (k == 1) {
            level_test = "_ == p";
        } else {
            std::string pk1(static_cast<std::size_t>(k - 1), 'p');
            level_test = pk1 + " == " + pk1 + "p AND " +
                         (k == 2 ? "_" : std::string(static_cast<std::size_t>(k - 2), 'p')) +
                         " != " + pk1;
        }
        e.line("match i == o AND x != o AND " + level_test);
        for (char side : {'l', 'r'}) {
            e.line("new");
            e.line("set o oo");
            e.line(std::string("set p") + side);
            e.line("set i o");
            if (k < n) {
                e.line(instance.quantifiers[static_cast<std::size_t>(k)].first ==
                               Quantifier::Forall
                           ? "set A o"
                           : "set S o");
            }
            if (side == 'r') {
                e.line(std::string("set ") + var_dir(k) + " o");
            }
            e.line("ctr p");
        }
        e.line("set i");
    }

    std::vector<std::string> top_blocks{"ATTACH", "EVAL_AND", "EVAL_OR", "EVAL_NOT"};

    // ATTACH: root the formula tree at each quantifier leaf; the leaf itself
    // is the formula root. Var values resolve at build time through their
    // statically known ancestor paths.
    e.line(".block ATTACH");
    e.line("match i == o AND x != o");
    if (instance.formula.kind == QbfFormula::Kind::Var) {
        emit_var_load(e, n - instance.formula.var, instance.formula.var);
    } else {
        emit_type_flag(e, instance.formula.kind);
        emit_formula_children(e, instance.formula, 0, n);
    }
    e.line("set i");
    e.line("stop");

    // Generic bottom-up evaluation; A/S double for forall/exists nodes.
    e.line(".block EVAL_AND");
    e.line("match A == o AND x != o AND lx == o AND rx == o");
    e.line("set x o");
    e.line("if lv o +2");
    e.line("stop");
    e.line("if rv o +2");
    e.line("stop");
    e.line("set v o");
    e.line("stop");

    e.line(".block EVAL_OR");
    e.line("match S == o AND x != o AND lx == o AND rx == o");
    e.line("set x o");
    e.line("if lv o +3");
    e.line("if rv o +2");
    e.line("stop");
    e.line("set v o");
    e.line("stop");

    e.line(".block EVAL_NOT");
    e.line("match N == o AND x != o AND lx == o");
    e.line("set x o");
    e.line("if lv o +2");
    e.line("set v o");
    e.line("stop");

    CompiledQbf artifact;
    artifact.source_text = e.out.str();
    artifact.program = parse_program(artifact.source_text);
    artifact.top_blocks = std::move(top_blocks);
    artifact.directions.all = dirs;
    artifact.directions.variable_dirs = var_dirs;
    return artifact;
}

bool read_qbf_result(const MachineState& state) {
    return resolve(state, state.center, "v") == kOrigin;
}

std::string qbf_sidecar_json() {
    nlohmann::json doc;
    doc["result_node_label"] = "QBF";
    doc["result_direction"] = "v";
    doc["true_means"] = "origin";
    return doc.dump(2);
}

} // namespace mwsmm
