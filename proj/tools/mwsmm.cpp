#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mwsmm/engine.hpp>
#include <mwsmm/graph.hpp>
#include <mwsmm/multiway.hpp>
#include <mwsmm/program.hpp>
#include <mwsmm/qbf.hpp>
#include <mwsmm/subst.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot write '" + path + "'");
    }
    out << content;
}

std::vector<std::string> split_commas(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::string> pick_top_blocks(const mwsmm::Program& program, const std::string& csv) {
    std::vector<std::string> tops;
    if (csv.empty()) {
        for (const mwsmm::Block& block : program.blocks) tops.push_back(block.name);
    } else {
        tops = split_commas(csv);
        for (const std::string& name : tops) {
            if (!program.find_block(name)) {
                throw UsageError("no block named '" + name + "' in program");
            }
        }
    }
    return tops;
}

mwsmm::Program load_checked_program(const std::string& path) {
    mwsmm::Program program = mwsmm::parse_program(read_file(path));
    for (const mwsmm::Diagnostic& d : mwsmm::validate_program(program)) {
        if (d.is_error()) {
            mwsmm::fail(d.code, "line " + std::to_string(d.line) + ": " + d.message);
        }
    }
    return program;
}

int cmd_check(const std::string& path) {
    mwsmm::Program program = mwsmm::parse_program(read_file(path));
    bool failed = false;
    for (const mwsmm::Diagnostic& d : mwsmm::validate_program(program)) {
        std::cerr << (d.is_error() ? "error " : "warning ") << d.code << " line " << d.line << ": "
                  << d.message << "\n";
        failed = failed || d.is_error();
    }
    if (failed) return kExitDomain;
    std::cerr << "ok: " << program.line_count() << " instructions, "
              << program.blocks.size() << " blocks, directions "
              << program.directions.chars() << "\n";
    return kExitOk;
}

struct RunArgs {
    std::string program_path;
    std::string top_csv;
    std::size_t max_rounds = mwsmm::RunLimits{}.max_rounds;
    bool trace = false;
    bool metrics = false;
    std::string dot_path;
    std::string json_path;
    std::string manifest_path;
};

int cmd_run(const RunArgs& args) {
    mwsmm::Program program = load_checked_program(args.program_path);
    std::vector<std::string> tops = pick_top_blocks(program, args.top_csv);
    std::optional<mwsmm::DecodeManifest> manifest;
    if (!args.manifest_path.empty()) {
        manifest = mwsmm::DecodeManifest::from_json(read_file(args.manifest_path));
    }

    mwsmm::RunLimits limits;
    limits.max_rounds = args.max_rounds;
    mwsmm::RunReport report = mwsmm::run_deterministic(program, tops, limits);

    if (args.trace) {
        for (const mwsmm::TraceEvent& event : report.trace) {
            std::cout << event.format() << "\n";
        }
    }
    std::cout << "halt=" << (report.halt_reason == mwsmm::HaltReason::EmptySelection
                                 ? "empty-selection"
                                 : "limit")
              << "\n";
    std::cout << "rounds=" << report.rounds << "\n";
    for (const mwsmm::TraceEvent& event : report.trace) {
        if (!event.stop_message.empty()) {
            std::cout << "stop=\"" << event.stop_message << "\"\n";
        }
    }
    if (manifest) {
        std::cout << "decode=" << mwsmm::decode_string(report.final_state, *manifest) << "\n";
    }
    if (args.metrics) {
        std::cout << report.metrics.to_json() << "\n";
    }
    if (!args.dot_path.empty()) {
        write_file(args.dot_path,
                   mwsmm::state_to_dot(report.final_state, manifest ? &*manifest : nullptr));
    }
    if (!args.json_path.empty()) {
        write_file(args.json_path, mwsmm::state_to_json(report.final_state));
    }
    return kExitOk;
}

struct MultiwayArgs {
    std::string program_path;
    std::string top_csv;
    std::size_t depth = std::numeric_limits<std::size_t>::max();
    std::string dot_path;
    std::string json_path;
    std::string states_dir;
    bool check_convergence = false;
    std::string manifest_path;
    unsigned threads = 1;
    std::size_t max_states = mwsmm::RunLimits{}.max_states;
};

int cmd_multiway(const MultiwayArgs& args) {
    mwsmm::Program program = load_checked_program(args.program_path);
    std::vector<std::string> tops = pick_top_blocks(program, args.top_csv);
    std::optional<mwsmm::DecodeManifest> manifest;
    if (!args.manifest_path.empty()) {
        manifest = mwsmm::DecodeManifest::from_json(read_file(args.manifest_path));
    }

    mwsmm::RunLimits limits;
    limits.max_states = args.max_states;
    mwsmm::EvolutionGraph evo = mwsmm::explore(program, tops, args.depth, limits,
                                               manifest ? &*manifest : nullptr, args.threads);

    std::cout << "states=" << evo.order.size() << "\n";
    std::cout << "edges=" << evo.edges.size() << "\n";
    std::cout << "depth=" << evo.explored_depth << "\n";
    std::cout << "frontier=" << (evo.frontier_exhausted ? "exhausted" : "open") << "\n";

    if (args.check_convergence) {
        mwsmm::ConfluenceReport report = mwsmm::check_convergence(evo);
        switch (report.converged) {
            case mwsmm::Converged::Yes:
                std::cout << "converged=true";
                if (report.terminal_decode) {
                    std::cout << " terminal=" << *report.terminal_decode;
                }
                std::cout << "\n";
                break;
            case mwsmm::Converged::No:
                std::cout << "converged=false terminals=" << report.terminal_count << "\n";
                break;
            case mwsmm::Converged::Unknown:
                std::cout << "converged=unknown\n";
                break;
        }
    }
    if (!args.dot_path.empty()) {
        write_file(args.dot_path, mwsmm::export_evolution_dot(evo));
    }
    if (!args.json_path.empty()) {
        write_file(args.json_path, mwsmm::export_evolution_json(evo));
    }
    if (!args.states_dir.empty()) {
        std::filesystem::create_directories(args.states_dir);
        for (const std::string& sig : evo.order) {
            mwsmm::CanonicalForm form{sig, 0};
            std::filesystem::path path =
                std::filesystem::path(args.states_dir) / (form.digest_hex() + ".json");
            write_file(path.string(), mwsmm::state_to_json(evo.states.at(sig).state));
        }
    }
    return kExitOk;
}

int cmd_compile_qbf(const std::string& in_path, const std::string& out_path) {
    mwsmm::QbfInstance instance = mwsmm::parse_qbf(read_file(in_path));
    mwsmm::CompiledQbf artifact = mwsmm::compile_qbf(instance);
    write_file(out_path, artifact.source_text);
    write_file(out_path + ".json", mwsmm::qbf_sidecar_json());
    std::cout << "directions=" << artifact.directions.all.size() << "\n";
    std::cout << "instructions=" << artifact.program.line_count() << "\n";
    return kExitOk;
}

int cmd_eval_qbf(const std::string& in_path) {
    mwsmm::QbfInstance instance = mwsmm::parse_qbf(read_file(in_path));
    std::cout << (mwsmm::eval_qbf_oracle(instance) ? "true" : "false") << "\n";
    return kExitOk;
}

int cmd_compile_subst(const std::string& in_path, const std::string& out_path) {
    mwsmm::SubstSystem system = mwsmm::parse_subst(read_file(in_path));
    mwsmm::CompiledSubst artifact = mwsmm::compile_subst(system);
    write_file(out_path, artifact.source_text);
    write_file(out_path + ".json", artifact.manifest.to_json());
    std::cout << "blocks=" << artifact.top_blocks.size() << "\n";
    std::cout << "instructions=" << artifact.program.line_count() << "\n";
    return kExitOk;
}

int cmd_subst_oracle(const std::string& in_path, std::size_t depth) {
    mwsmm::SubstSystem system = mwsmm::parse_subst(read_file(in_path));
    mwsmm::StringMultiwayGraph graph = mwsmm::subst_oracle(system, depth);
    for (std::size_t d = 0; d < graph.strings_by_depth.size(); ++d) {
        std::cout << "depth=" << d << ":";
        for (const std::string& s : graph.strings_by_depth[d]) {
            std::cout << " " << s;
        }
        std::cout << "\n";
    }
    std::cout << "frontier=" << (graph.frontier_exhausted ? "exhausted" : "open") << "\n";
    return kExitOk;
}

int cmd_decode(const std::string& state_path, const std::string& manifest_path) {
    mwsmm::MachineState state = mwsmm::state_from_json(read_file(state_path));
    mwsmm::DecodeManifest manifest = mwsmm::DecodeManifest::from_json(read_file(manifest_path));
    std::cout << mwsmm::decode_string(state, manifest) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MWSMM toolchain: parse, run, explore, and compile storage modification machines"};
    app.require_subcommand(1);

    std::string check_path;
    CLI::App* check = app.add_subcommand("check", "parse and validate a program");
    check->add_option("program", check_path, "program file (.smm)")->required();

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "deterministic production-system run");
    run->add_option("program", run_args.program_path, "program file (.smm)")->required();
    run->add_option("--top", run_args.top_csv, "comma-separated top-level blocks");
    run->add_option("--max-rounds", run_args.max_rounds, "round limit");
    run->add_flag("--trace", run_args.trace, "print one line per fired fork");
    run->add_flag("--metrics", run_args.metrics, "print metrics JSON");
    run->add_option("--dot", run_args.dot_path, "write final state DOT");
    run->add_option("--json", run_args.json_path, "write final state JSON");
    run->add_option("--manifest", run_args.manifest_path, "decode manifest for the final state");

    MultiwayArgs mw_args;
    CLI::App* multiway = app.add_subcommand("multiway", "non-deterministic evolution graph");
    multiway->add_option("program", mw_args.program_path, "program file (.smm)")->required();
    multiway->add_option("--top", mw_args.top_csv, "comma-separated top-level blocks");
    multiway->add_option("--depth", mw_args.depth, "event-depth limit");
    multiway->add_option("--dot", mw_args.dot_path, "write evolution DOT");
    multiway->add_option("--json", mw_args.json_path, "write evolution JSON");
    multiway->add_option("--states-dir", mw_args.states_dir, "dump each state JSON here");
    multiway->add_flag("--check-convergence", mw_args.check_convergence,
                       "report terminal convergence");
    multiway->add_option("--manifest", mw_args.manifest_path, "decode manifest for state labels");
    multiway->add_option("--threads", mw_args.threads, "parallel frontier expansion");
    multiway->add_option("--max-states", mw_args.max_states, "state budget");

    std::string qbf_in, qbf_out;
    CLI::App* compile_qbf = app.add_subcommand("compile-qbf", "compile a QBF instance");
    compile_qbf->add_option("input", qbf_in, "QBF file (.qbf)")->required();
    compile_qbf->add_option("-o,--output", qbf_out, "output program file")->required();

    std::string eval_in;
    CLI::App* eval_qbf = app.add_subcommand("eval-qbf", "brute-force QBF evaluation");
    eval_qbf->add_option("input", eval_in, "QBF file (.qbf)")->required();

    std::string subst_in, subst_out;
    CLI::App* compile_subst = app.add_subcommand("compile-subst", "compile a substitution system");
    compile_subst->add_option("input", subst_in, "system file (.sub)")->required();
    compile_subst->add_option("-o,--output", subst_out, "output program file")->required();

    std::string oracle_in;
    std::size_t oracle_depth = 4;
    CLI::App* oracle = app.add_subcommand("subst-oracle", "string-level multiway evolution");
    oracle->add_option("input", oracle_in, "system file (.sub)")->required();
    oracle->add_option("--depth", oracle_depth, "depth limit");

    std::string decode_state, decode_manifest;
    CLI::App* decode = app.add_subcommand("decode", "decode a state JSON as a string");
    decode->add_option("state", decode_state, "state file (.json)")->required();
    decode->add_option("--manifest", decode_manifest, "decode manifest JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (check->parsed()) return cmd_check(check_path);
        if (run->parsed()) return cmd_run(run_args);
        if (multiway->parsed()) return cmd_multiway(mw_args);
        if (compile_qbf->parsed()) return cmd_compile_qbf(qbf_in, qbf_out);
        if (eval_qbf->parsed()) return cmd_eval_qbf(eval_in);
        if (compile_subst->parsed()) return cmd_compile_subst(subst_in, subst_out);
        if (oracle->parsed()) return cmd_subst_oracle(oracle_in, oracle_depth);
        if (decode->parsed()) return cmd_decode(decode_state, decode_manifest);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mwsmm::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}
