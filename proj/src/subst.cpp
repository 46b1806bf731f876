#include <mwsmm/subst.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace mwsmm {

namespace {

std::string trim(const std::string& s) {
    std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

void check_symbols(const SubstSystem& system, const std::string& s, const char* what) {
    for (char c : s) {
        if (system.alphabet.find(c) == std::string::npos) {
            fail("E_ALPHABET", std::string(what) + " uses symbol '" + std::string(1, c) +
                                   "' outside the alphabet");
        }
    }
}

} // namespace

SubstSystem parse_subst(const std::string& text) {
    SubstSystem system;
    bool saw_alphabet = false;
    bool saw_init = false;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            fail("E_SYNTAX", "line " + std::to_string(line_no) + ": expected 'key: value'");
        }
        std::string key = trim(line.substr(0, colon));
        std::string value = trim(line.substr(colon + 1));

        if (key == "alphabet") {
            if (saw_alphabet) {
                fail("E_SYNTAX", "line " + std::to_string(line_no) + ": duplicate alphabet");
            }
            for (char c : value) {
                if (c == ' ' || c == '\t') continue;
                if (system.alphabet.find(c) != std::string::npos) {
                    fail("E_ALPHABET", "duplicate symbol '" + std::string(1, c) + "'");
                }
                system.alphabet += c;
            }
            if (system.alphabet.empty()) {
                fail("E_SYNTAX", "line " + std::to_string(line_no) + ": empty alphabet");
            }
            saw_alphabet = true;
        } else if (key == "rule") {
            std::size_t arrow = value.find("->");
            if (arrow == std::string::npos) {
                fail("E_SYNTAX", "line " + std::to_string(line_no) + ": rule needs 'LHS -> RHS'");
            }
            SubstSystem::Rule rule;
            rule.lhs = trim(value.substr(0, arrow));
            rule.rhs = trim(value.substr(arrow + 2));
            if (rule.lhs.empty() || rule.rhs.empty()) {
                fail("E_SYNTAX",
                     "line " + std::to_string(line_no) + ": rule sides must be nonempty");
            }
            system.rules.push_back(std::move(rule));
        } else if (key == "init") {
            if (saw_init) {
                fail("E_SYNTAX", "line " + std::to_string(line_no) + ": duplicate init");
            }
            system.initial = value;
            if (system.initial.empty()) {
                fail("E_SYNTAX", "line " + std::to_string(line_no) + ": empty initial string");
            }
            saw_init = true;
        } else {
            fail("E_SYNTAX", "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }

    if (!saw_alphabet) fail("E_SYNTAX", "missing alphabet line");
    if (!saw_init) fail("E_SYNTAX", "missing init line");
    if (system.rules.empty()) fail("E_SYNTAX", "no rules given");
    for (const SubstSystem::Rule& rule : system.rules) {
        check_symbols(system, rule.lhs, "rule lhs");
        check_symbols(system, rule.rhs, "rule rhs");
    }
    check_symbols(system, system.initial, "initial string");
    return system;
}

std::vector<std::size_t> occurrences(const std::string& s, const std::string& lhs) {
    std::vector<std::size_t> out;
    if (lhs.empty() || lhs.size() > s.size()) return out;
    for (std::size_t pos = s.find(lhs); pos != std::string::npos; pos = s.find(lhs, pos + 1)) {
        out.push_back(pos);
    }
    return out;
}

StringMultiwayGraph subst_oracle(const SubstSystem& system, std::size_t depth_limit) {
    StringMultiwayGraph graph;
    std::set<std::string> seen{system.initial};
    graph.strings_by_depth.push_back({system.initial});

    std::vector<std::string> frontier{system.initial};
    std::size_t depth = 0;
    while (!frontier.empty() && depth < depth_limit) {
        std::vector<std::string> next;
        for (const std::string& s : frontier) {
            std::size_t redexes = 0;
            for (std::size_t r = 0; r < system.rules.size(); ++r) {
                const SubstSystem::Rule& rule = system.rules[r];
                for (std::size_t pos : occurrences(s, rule.lhs)) {
                    ++redexes;
                    std::string succ =
                        s.substr(0, pos) + rule.rhs + s.substr(pos + rule.lhs.size());
                    graph.edges.push_back({s, r, pos, succ});
                    if (seen.insert(succ).second) next.push_back(succ);
                }
            }
            if (redexes == 0) graph.terminals.push_back(s);
        }
        if (!next.empty()) graph.strings_by_depth.push_back(next);
        frontier = std::move(next);
        if (!frontier.empty()) ++depth;
    }
    if (frontier.empty()) {
        graph.frontier_exhausted = true;
    } else {
        // States at the depth limit were not expanded; note redex-free ones
        // as terminals anyway since that needs no expansion.
        for (const std::string& s : frontier) {
            bool redex = false;
            for (const SubstSystem::Rule& rule : system.rules) {
                if (!occurrences(s, rule.lhs).empty()) {
                    redex = true;
                    break;
                }
            }
            if (!redex) graph.terminals.push_back(s);
        }
    }
    return graph;
}

// --- compilation ---

namespace {

// Symbol codes: alphabet index in binary, bit 0 stored in direction '0'.
std::size_t bit_width(std::size_t alphabet_size) {
    std::size_t k = 1;
    while ((1ull << k) < alphabet_size) ++k;
    return k;
}

std::string code_of(std::size_t index, std::size_t width) {
    std::string code(width, '0');
    for (std::size_t b = 0; b < width; ++b) {
        if (index & (1ull << b)) code[width - 1 - b] = '1';
    }
    return code;
}

bool code_bit(std::size_t index, std::size_t bit) { return (index >> bit) & 1; }

struct Emitter {
    std::ostringstream out;

    void line(const std::string& text) { out << text << "\n"; }
};

} // namespace

CompiledSubst compile_subst(const SubstSystem& system) {
    const std::size_t k = bit_width(system.alphabet.size());
    if (k > 10) {
        fail("E_TOO_MANY_SYMBOLS", "alphabet needs " + std::to_string(k) +
                                       " bit directions; only 10 digit characters exist");
    }
    std::string bits;
    for (std::size_t b = 0; b < k; ++b) bits += static_cast<char>('0' + b);

    auto index_of = [&](char symbol) {
        return static_cast<std::size_t>(system.alphabet.find(symbol));
    };
    // One `set` per bit; 1-bits point at the origin, 0-bits at the node.
    auto emit_bits = [&](Emitter& e, const std::string& at, char symbol, bool all_bits,
                         char old_symbol = 0) {
        std::size_t index = index_of(symbol);
        for (std::size_t b = 0; b < k; ++b) {
            bool bit = code_bit(index, b);
            if (!all_bits && old_symbol && code_bit(index_of(old_symbol), b) == bit) continue;
            std::string edge = at + bits[b];
            if (bit) {
                e.line("set " + edge + " o");
            } else {
                e.line("set " + edge + (at.empty() ? "" : " " + at));
            }
        }
    };

    Emitter e;
    e.line(".directions " + bits + "eow");
    {
        std::string summary;
        for (std::size_t r = 0; r < system.rules.size(); ++r) {
            if (r) summary += ", ";
            summary += system.rules[r].lhs + "->" + system.rules[r].rhs;
        }
        e.line("skip " + summary + "; " + system.initial);
    }

    // Prologue: build the initial string west to east. The first node keeps
    // the origin boundary on both sides for free; every later node inherits
    // the east boundary from its west neighbour before relinking it.
    for (std::size_t i = 0; i < system.initial.size(); ++i) {
        char symbol = system.initial[i];
        e.line("new " + std::string(1, symbol));
        if (i > 0) {
            e.line("set o oo");
            e.line("set e we");
            e.line("set we");
        }
        emit_bits(e, "", symbol, true);
    }
    if (system.initial.size() > 1) {
        e.line("ctr " + std::string(system.initial.size() - 1, 'w'));
    }
    e.line("stop");

    std::vector<std::string> top_blocks;
    for (std::size_t r = 0; r < system.rules.size(); ++r) {
        const SubstSystem::Rule& rule = system.rules[r];
        const std::string& lhs = rule.lhs;
        const std::string& rhs = rule.rhs;
        std::string name = "R" + std::to_string(r + 1);
        top_blocks.push_back(name);
        e.line(".block " + name);

        // Match: the candidate heads an lhs occurrence walking east.
        std::string expr;
        for (std::size_t t = 0; t < lhs.size(); ++t) {
            std::string prefix(t, 'e');
            if (t > 0) {
                if (!expr.empty()) expr += " AND ";
                expr += prefix + " != o";
            }
            std::size_t index = index_of(lhs[t]);
            for (std::size_t b = 0; b < k; ++b) {
                if (!expr.empty()) expr += " AND ";
                std::string edge = prefix + bits[b];
                if (code_bit(index, b)) {
                    expr += edge + " == o";
                } else {
                    expr += edge + " == " + (prefix.empty() ? "_" : prefix);
                }
            }
        }
        e.line("match " + expr);

        // Re-encode min(|lhs|,|rhs|) nodes in place, walking east only where
        // a symbol actually changes.
        std::size_t keep = std::min(lhs.size(), rhs.size());
        std::size_t cur = 0;
        for (std::size_t t = 0; t < keep; ++t) {
            if (lhs[t] == rhs[t]) continue;
            if (t > cur) {
                e.line("ctr " + std::string(t - cur, 'e'));
                cur = t;
            }
            e.line("ren " + std::string(1, rhs[t]));
            emit_bits(e, "", rhs[t], false, lhs[t]);
        }
        if (lhs.size() != rhs.size() && keep - 1 > cur) {
            e.line("ctr " + std::string(keep - 1 - cur, 'e'));
            cur = keep - 1;
        }

        if (lhs.size() > rhs.size()) {
            // Splice out the surplus nodes east of the kept run, then fix the
            // east neighbour's back edge (guarded at the east end).
            for (std::size_t t = 0; t < lhs.size() - rhs.size(); ++t) {
                e.line("set ew e");
                e.line("set e ee");
            }
            e.line("if e o +2");
            e.line("set ew");
        } else if (rhs.size() > lhs.size()) {
            // Insert the surplus symbols east of the kept run; each new node
            // becomes the local center, so inserts chain eastwards.
            for (std::size_t t = lhs.size(); t < rhs.size(); ++t) {
                char symbol = rhs[t];
                e.line("new " + std::string(1, symbol));
                e.line("set o oo");
                emit_bits(e, "", symbol, true);
                e.line("set e we");
                e.line("set we");
                e.line("if e o +2");
                e.line("set ew");
            }
        }
        e.line("stop");
    }

    CompiledSubst artifact;
    artifact.source_text = e.out.str();
    artifact.program = parse_program(artifact.source_text);
    artifact.top_blocks = std::move(top_blocks);

    DecodeManifest manifest;
    for (char symbol : system.alphabet) manifest.alphabet.emplace_back(1, symbol);
    manifest.bits = bits;
    for (std::size_t i = 0; i < system.alphabet.size(); ++i) {
        manifest.codes.emplace_back(std::string(1, system.alphabet[i]), code_of(i, k));
    }
    manifest.east = 'e';
    manifest.west = 'w';
    manifest.origin_dir = 'o';
    manifest.validate();
    artifact.manifest = std::move(manifest);
    return artifact;
}

} // namespace mwsmm
