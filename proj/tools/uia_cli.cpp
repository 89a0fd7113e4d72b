// Scenario-replay CLI for the UIA naming simulator.
//
//   uia run <scenario.uia>     replay a scenario file, print the report
//   uia parse <scenario.uia>   validate and re-render a scenario
//   uia exec [-]               read steps line by line (stdin / interactive)
//   uia <verb> ... --session <file>
//                              run one verb against a persistent session:
//                              the session file is a step transcript that is
//                              replayed deterministically, then extended
//
// Session verbs are exactly the scenario-step verbs: init (spelled
// `device`), merge, link, name, rename, remove-name, unlink, revoke, group,
// resolve (as `assert resolve` or `dump-view`), conflicts, gossip, search,
// connect, migrate, partition, heal, tick, dump-view, dump-log.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "uia/uia.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

nlohmann::json report_json(const uia::Report& report) {
    nlohmann::json j;
    j["assertions"] = nlohmann::json::array();
    for (const auto& a : report.assertions)
        j["assertions"].push_back({{"line", a.line},
                                   {"text", a.text},
                                   {"passed", a.passed},
                                   {"evidence", a.evidence}});
    j["outputs"] = report.outputs;
    if (!report.runtime_error.empty()) j["error"] = report.runtime_error;
    j["passed"] = report.all_passed();
    return j;
}

int emit_report(const uia::ScenarioRun& run, const std::string& format,
                const std::string& trace_path) {
    if (!trace_path.empty()) write_file(trace_path, run.trace);
    if (format == "structured")
        std::cout << report_json(run.report).dump(2) << "\n";
    else
        std::cout << run.report.render();
    return run.report.all_passed() ? 0 : 1;
}

int cmd_run(const std::string& path, uint64_t seed_override, bool has_seed,
            const std::string& format, const std::string& trace_path) {
    uia::ScenarioParseResult parsed = uia::load_scenario(read_file(path));
    if (const auto* err = std::get_if<uia::ScenarioParseError>(&parsed)) {
        std::cerr << path << ": " << err->str() << "\n";
        return 2;
    }
    uia::Scenario sc = std::get<uia::Scenario>(parsed);
    if (has_seed) sc.seed = seed_override;
    return emit_report(uia::run_scenario(sc), format, trace_path);
}

int cmd_parse(const std::string& path) {
    uia::ScenarioParseResult parsed = uia::load_scenario(read_file(path));
    if (const auto* err = std::get_if<uia::ScenarioParseError>(&parsed)) {
        std::cerr << path << ": " << err->str() << "\n";
        return 2;
    }
    std::cout << uia::render_scenario(std::get<uia::Scenario>(parsed));
    return 0;
}

// Line-by-line execution of the same step language, printing per-step
// results; drives one world for the whole session.
int cmd_exec(std::istream& in, uint64_t seed, const std::string& format,
             const std::string& trace_path) {
    uia::ScenarioEngine engine(seed);
    std::string line;
    size_t line_no = 0;
    std::string accumulated;
    int status = 0;
    std::set<std::string> networks;
    std::set<std::string> devices;
    while (std::getline(in, line)) {
        ++line_no;
        accumulated += line + "\n";
        uia::ScenarioParseResult parsed = uia::load_scenario(accumulated);
        if (const auto* err = std::get_if<uia::ScenarioParseError>(&parsed)) {
            std::cerr << "line " << line_no << ": " << err->message << "\n";
            // Drop the bad line and keep going.
            accumulated.erase(accumulated.rfind(line));
            status = 1;
            continue;
        }
        const uia::Scenario& sc = std::get<uia::Scenario>(parsed);
        if (sc.steps.empty()) continue;
        size_t before_outputs = engine.report().outputs.size();
        size_t before_asserts = engine.report().assertions.size();
        try {
            engine.execute(sc.steps.back());
        } catch (const std::exception& e) {
            std::cerr << "line " << line_no << ": " << e.what() << "\n";
            status = 1;
            continue;
        }
        if (format == "structured") {
            nlohmann::json j;
            j["line"] = line_no;
            for (size_t i = before_outputs; i < engine.report().outputs.size(); ++i)
                j["outputs"].push_back(engine.report().outputs[i]);
            for (size_t i = before_asserts; i < engine.report().assertions.size(); ++i) {
                const auto& a = engine.report().assertions[i];
                j["assertions"].push_back(
                    {{"text", a.text}, {"passed", a.passed}, {"evidence", a.evidence}});
            }
            std::cout << j.dump() << "\n";
        } else {
            for (size_t i = before_outputs; i < engine.report().outputs.size(); ++i)
                std::cout << engine.report().outputs[i] << "\n";
            for (size_t i = before_asserts; i < engine.report().assertions.size(); ++i) {
                const auto& a = engine.report().assertions[i];
                std::cout << (a.passed ? "PASS " : "FAIL ") << a.text << "  [" << a.evidence
                          << "]\n";
                if (!a.passed) status = 1;
            }
        }
    }
    if (!trace_path.empty()) write_file(trace_path, engine.world().trace());
    return status;
}

// One verb against a session transcript: replay, append, persist.
int cmd_session_step(const std::string& session_path, const std::string& step_line,
                     const std::string& format, const std::string& trace_path) {
    std::string transcript;
    {
        std::ifstream in(session_path, std::ios::binary);
        if (in) {
            std::ostringstream ss;
            ss << in.rdbuf();
            transcript = ss.str();
        }
    }
    std::string candidate = transcript + step_line + "\n";
    uia::ScenarioParseResult parsed = uia::load_scenario(candidate);
    if (const auto* err = std::get_if<uia::ScenarioParseError>(&parsed)) {
        std::cerr << err->str() << "\n";
        return 2;
    }
    uia::ScenarioRun run = uia::run_scenario(std::get<uia::Scenario>(parsed));
    if (!run.report.runtime_error.empty()) {
        std::cerr << run.report.runtime_error << "\n";
        return 1;
    }
    write_file(session_path, candidate);
    int status = emit_report(run, format, trace_path);
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UIA user-relative naming simulator"};
    app.require_subcommand(0, 1);

    std::string format = "text";
    std::string trace_path;
    uint64_t seed = 0;
    bool has_seed = false;
    app.add_option("--format", format, "Output format: text or structured")
        ->check(CLI::IsMember({"text", "structured"}));
    app.add_option("--trace", trace_path, "Write the deterministic event trace to a file");
    auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");

    std::string run_path;
    auto* run_cmd = app.add_subcommand("run", "Replay a scenario file");
    run_cmd->add_option("scenario", run_path, "Scenario file")->required();

    std::string parse_path;
    auto* parse_cmd = app.add_subcommand("parse", "Validate and re-render a scenario file");
    parse_cmd->add_option("scenario", parse_path, "Scenario file")->required();

    std::string exec_path = "-";
    auto* exec_cmd = app.add_subcommand("exec", "Execute steps line by line");
    exec_cmd->add_option("file", exec_path, "Step file, or - for stdin");

    // Session-backed single verbs: everything after the verb is passed
    // through as one scenario step line.
    std::string session_path;
    std::vector<std::string> step_tokens;
    auto* step_cmd = app.add_subcommand("step", "Apply one step to a persistent session");
    step_cmd->add_option("--session", session_path, "Session transcript file")->required();
    step_cmd->add_option("tokens", step_tokens, "Step tokens, e.g.: merge laptop phone");

    CLI11_PARSE(app, argc, argv);
    has_seed = seed_opt->count() > 0;

    try {
        if (*run_cmd) return cmd_run(run_path, seed, has_seed, format, trace_path);
        if (*parse_cmd) return cmd_parse(parse_path);
        if (*exec_cmd) {
            if (exec_path == "-") return cmd_exec(std::cin, seed, format, trace_path);
            std::ifstream in(exec_path);
            if (!in) {
                std::cerr << "cannot open " << exec_path << "\n";
                return 2;
            }
            return cmd_exec(in, seed, format, trace_path);
        }
        if (*step_cmd) {
            std::string line;
            for (const std::string& t : step_tokens) line += (line.empty() ? "" : " ") + t;
            return cmd_session_step(session_path, line, format, trace_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cout << app.help();
    return 0;
}
