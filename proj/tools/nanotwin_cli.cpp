// nanotwin: command-line driver for scenarios, sessions, exports and the service.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nanotwin/error.hpp"
#include "nanotwin/export.hpp"
#include "nanotwin/field_model.hpp"
#include "nanotwin/log.hpp"
#include "nanotwin/scenario.hpp"
#include "nanotwin/session.hpp"
#include "service.hpp"

namespace fs = std::filesystem;
using namespace nanotwin;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitIo = 4;

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage: return kExitUsage;
        case ErrorCode::io: return kExitIo;
        default: return kExitDomain;
    }
}

struct Globals {
    std::string scenario_path;
    std::string log_path;
    std::optional<std::uint64_t> seed;
};

Scenario resolve_scenario(const Globals& g) {
    if (!g.scenario_path.empty()) return load_scenario(g.scenario_path);
    return reference_device_scenario();
}

// Continues the session stored in --log if it exists, otherwise starts one.
Session open_session(const Globals& g) {
    if (!g.log_path.empty() && fs::exists(g.log_path)) {
        Session s = Session::replay(ExperimentLog::load(g.log_path));
        require(!g.seed || *g.seed == s.seed(), ErrorCode::usage,
                "--seed conflicts with the seed recorded in " + g.log_path);
        return s;
    }
    return Session(resolve_scenario(g), g.seed);
}

ExperimentLog require_log(const Globals& g) {
    require(!g.log_path.empty(), ErrorCode::usage, "this command needs --log");
    return ExperimentLog::load(g.log_path);
}

void emit_text(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_file(out, text);
}

std::string join(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nanotwin: digital twin of a nanodiamond emitter coupled to a photonic crystal cavity"};
    app.require_subcommand(1);

    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--scenario", g.scenario_path, "Scenario file (default: built-in reference device)")
        ->envname("NANOTWIN_SCENARIO");
    app.add_option("--log", g.log_path, "Experiment log (JSON lines); continued if it exists");
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the scenario seed");

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Validate, show or generate scenario files");
    scenario->require_subcommand(1);
    std::string validate_path;
    auto* sc_validate = scenario->add_subcommand("validate", "Load and validate a scenario file");
    sc_validate->add_option("file", validate_path, "Scenario file (default: --scenario)");
    auto* sc_show = scenario->add_subcommand("show", "Print the resolved scenario as JSON");
    std::string generate_out;
    auto* sc_generate = scenario->add_subcommand("generate", "Write the built-in reference scenario");
    sc_generate->add_option("-o,--out", generate_out, "Output path (default: stdout)");

    // session verbs, forwarded verbatim to the session command parser
    std::vector<CLI::App*> session_verbs;
    for (const char* verb : {"measure", "manipulate", "tune", "optimize", "report", "estimate"}) {
        auto* sub = app.add_subcommand(verb, std::string("Session command: ") + verb + " ... (see `commands`)");
        sub->prefix_command();
        session_verbs.push_back(sub);
    }

    // export
    auto* exp = app.add_subcommand("export", "Write CSV exports");
    exp->require_subcommand(1);
    std::string out_path;
    std::string fm_mode;
    double x0 = 0, x1 = 0, step = 10, z = 0;
    auto* ex_field = exp->add_subcommand("field-map", "On-axis field and LDOS of a mode");
    ex_field->add_option("--mode", fm_mode, "Mode label (default: scenario default mode)");
    auto* x0_opt = ex_field->add_option("--x0", x0, "Start x in nm (default: -half length)");
    auto* x1_opt = ex_field->add_option("--x1", x1, "End x in nm (default: +half length)");
    ex_field->add_option("--step", step, "Sample spacing in nm")->check(CLI::PositiveNumber);
    ex_field->add_option("--z", z, "Height above the slab in nm");
    ex_field->add_option("-o,--out", out_path, "Output path (default: stdout)");
    std::uint64_t seq = 0;
    auto* ex_meas = exp->add_subcommand("measurement", "Raw data of one logged measurement");
    ex_meas->add_option("--seq", seq, "Log sequence number")->required();
    ex_meas->add_option("-o,--out", out_path, "Output path (default: stdout)");
    auto* ex_summary = exp->add_subcommand("summary", "Summary table of couplings and fits");
    ex_summary->add_option("-o,--out", out_path, "Output path (default: stdout)");

    // replay
    auto* replay = app.add_subcommand("replay", "Re-run a log and verify every record");
    std::string replay_path;
    replay->add_option("file", replay_path, "Log to verify (default: --log)");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON session service");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

    auto* commands = app.add_subcommand("commands", "List session commands");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (*sc_validate) {
            const std::string path = validate_path.empty() ? g.scenario_path : validate_path;
            require(!path.empty(), ErrorCode::usage, "no scenario file given");
            const Scenario s = load_scenario(path);
            std::cout << "ok: " << s.name << " (" << s.modes.size() << " modes, "
                      << s.nanodiamond.emitters.size() << " emitters)\n";
        } else if (*sc_show) {
            std::cout << to_json(resolve_scenario(g)).dump(2) << "\n";
        } else if (*sc_generate) {
            const Scenario s = reference_device_scenario();
            if (generate_out.empty())
                std::cout << to_json(s).dump(2) << "\n";
            else
                save_scenario(s, generate_out);
        } else if (*ex_field) {
            const Scenario s = resolve_scenario(g);
            const ModeField field(s.mode(fm_mode.empty() ? s.default_mode : fm_mode).mode);
            const double half = s.geometry.half_length_nm;
            emit_text(field_map_csv(field, *x0_opt ? x0 : -half, *x1_opt ? x1 : half, step, z), out_path);
        } else if (*ex_meas) {
            emit_text(measurement_csv(measurement_from_log(require_log(g), seq)), out_path);
        } else if (*ex_summary) {
            emit_text(summary_csv(require_log(g)), out_path);
        } else if (*replay) {
            const std::string path = replay_path.empty() ? g.log_path : replay_path;
            require(!path.empty(), ErrorCode::usage, "no log file given");
            const Session s = Session::replay(ExperimentLog::load(path));
            std::cout << "ok: " << s.log().size() << " records reproduced\n"
                      << s.state_json().dump(2) << "\n";
        } else if (*serve) {
            LabService service(open_session(g));
            if (!g.log_path.empty()) {
                const std::string path = g.log_path;
                service.on_commit([path](const Session& s) { s.log().save(path); });
                service.with_session([&](const Session& s) { s.log().save(path); });
            }
            if (port == 0) {
                port = service.bind_to_any_port(host);
                require(port > 0, ErrorCode::io, "cannot bind " + host);
                std::cout << "listening on http://" << host << ":" << port << std::endl;
                service.listen_after_bind();
            } else {
                std::cout << "listening on http://" << host << ":" << port << std::endl;
                require(service.listen(host, port), ErrorCode::io,
                        "cannot bind " + host + ":" + std::to_string(port));
            }
        } else if (*commands) {
            std::cout << Session::command_help();
        } else {
            for (auto* sub : session_verbs) {
                if (!*sub) continue;
                std::vector<std::string> words{sub->get_name()};
                for (auto& w : sub->remaining()) words.push_back(w);
                Session session = open_session(g);
                const CommandOutcome out = session.run_command(join(words));
                if (!g.log_path.empty()) session.log().save(g.log_path);
                std::cout << out.result.dump(2) << "\n";
            }
        }
    } catch (const TwinError& e) {
        std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return EXIT_SUCCESS;
}
