#include "nanotwin/session.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "nanotwin/error.hpp"
#include "nanotwin/serialization.hpp"
#include "nanotwin/units.hpp"

namespace nanotwin {

using nlohmann::json;

namespace {

json error_json(const TwinError& e) {
    return {{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}};
}

double gaussian(Engine& engine, double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(engine);
}

}  // namespace

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

json to_json(const SessionState& s) {
    return {{"true_pose", to_json(s.true_pose)},
            {"estimated_pose", to_json(s.estimated_pose)},
            {"tuner", to_json(s.tuner)},
            {"rng", {{"root", s.seeds.root()}, {"cursor", s.seeds.cursor()}}},
            {"clock_s", s.clock_s},
            {"steps_taken", s.steps_taken}};
}

Session::Session(Scenario scenario, std::optional<std::uint64_t> seed)
    : scenario_(std::move(scenario)) {
    validate(scenario_);
    for (const auto& m : scenario_.modes) fields_.emplace_back(m.mode);
    state_.true_pose = scenario_.nanodiamond.pose;
    state_.tuner = scenario_.initial_tuner();
    state_.seeds = SeedStream(seed.value_or(scenario_.seed));

    // Initial AFM image of the placed nanodiamond.
    const std::uint64_t s = state_.seeds.next();
    Engine engine = make_engine(s);
    state_.estimated_pose = state_.true_pose;
    state_.estimated_pose.position.x += gaussian(engine, scenario_.noise.readout_sigma_nm);
    state_.estimated_pose.position.y += gaussian(engine, scenario_.noise.readout_sigma_nm);
    state_.estimated_pose.rotation_deg =
        wrap_360(state_.estimated_pose.rotation_deg + gaussian(engine, scenario_.noise.readout_sigma_deg));

    LogRecord start;
    start.type = "session_start";
    start.sub_seed = s;
    start.payload = {{"scenario", to_json(scenario_)},
                     {"seed", state_.seeds.root()},
                     {"estimated_pose", to_json(state_.estimated_pose)}};
    log_.append(std::move(start));
}

Session Session::replay(const ExperimentLog& log) {
    require(!log.empty() && log.records().front().type == "session_start", ErrorCode::validation,
            "log does not start with a session_start record");
    const auto& first = log.records().front();
    Scenario scenario;
    std::uint64_t seed = 0;
    try {
        scenario = scenario_from_json(first.payload.at("scenario"));
        seed = first.payload.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed session_start: ") + e.what());
    }
    Session session(std::move(scenario), seed);
    require(session.log_.records().front() == first, ErrorCode::validation,
            "replay diverged at seq 0");
    for (const auto& r : log.records())
        if (r.type == "command") session.run_command(r.command);
    const auto& mine = session.log_.records();
    const auto& theirs = log.records();
    for (std::size_t i = 0; i < std::min(mine.size(), theirs.size()); ++i)
        require(mine[i] == theirs[i], ErrorCode::validation,
                "replay diverged at seq " + std::to_string(theirs[i].seq));
    require(mine.size() == theirs.size(), ErrorCode::validation,
            "replay produced " + std::to_string(mine.size()) + " records, log has " +
                std::to_string(theirs.size()));
    return session;
}

// --- command dispatch -------------------------------------------------------------

std::string Session::command_help() {
    return "measure g2 [--power UW] [--mode M] [--pairs N]\n"
           "measure ple [--power UW] [--mode M] [--range-ghz G] [--points N]\n"
           "measure polarization\n"
           "measure spectrum [--mode M] [--duration S] [--dt S]\n"
           "measure rabi [--mode M] [--powers P1,P2,...] [--pairs N]\n"
           "measure linewidth [--mode M] [--powers P1,P2,...]\n"
           "manipulate move --dx NM --dy NM\n"
           "manipulate rotate --dtheta DEG\n"
           "tune open | close | lock | unlock | reset\n"
           "tune wait --dt S\n"
           "tune resonance [--mode M]\n"
           "tune stability [--horizon S] [--dt S]\n"
           "optimize align|coarse|fine|full [--mode M] [--budget N] [--orthogonal] [--tolerance DEG]\n"
           "report coupling [--mode M]\n"
           "estimate cooperativity --on MHZ --on-sigma MHZ --off MHZ --off-sigma MHZ\n";
}

CommandOutcome Session::run_command(const std::string& command) {
    std::vector<std::string> args;
    {
        std::istringstream in(command);
        std::string tok;
        while (in >> tok) args.push_back(tok);
    }
    require(!args.empty(), ErrorCode::usage, "empty command");
    std::string text;
    for (const auto& a : args) text += (text.empty() ? "" : " ") + a;

    const SessionState saved = state_;
    pending_.clear();
    current_command_ = text;
    CommandOutcome out;
    out.command = text;
    try {
        emit("command", 0, json::object());
        execute(args, out);
    } catch (...) {
        state_ = saved;
        pending_.clear();
        throw;
    }
    for (auto& r : pending_) out.records.push_back(log_.append(std::move(r)));
    pending_.clear();
    return out;
}

void Session::emit(const std::string& type, std::uint64_t sub_seed, json payload) {
    LogRecord r;
    r.seq = log_.next_seq() + pending_.size();
    r.t_s = state_.clock_s;
    r.type = type;
    r.command = current_command_;
    r.sub_seed = sub_seed;
    // Store the payload as it reads back from disk (non-finite numbers become
    // null) so a replayed log compares equal to the persisted one.
    r.payload = json::parse(payload.dump());
    pending_.push_back(std::move(r));
}

void Session::execute(const std::vector<std::string>& args, CommandOutcome& out) {
    CLI::App app{"session command"};
    app.require_subcommand(1, 1);
    app.set_help_flag();

    std::string mode;
    double power = 0.0;
    std::uint64_t pairs = 0;
    double range_ghz = 0.0;
    int points = 0;
    double duration = 120.0;
    double dt = 1.0;
    std::vector<double> powers;
    double dx = 0.0, dy = 0.0, dtheta = 0.0;
    double horizon = 8.0 * 3600.0;
    int budget = 25;
    bool orthogonal = false;
    double tolerance = 5.0;
    double on = 0.0, on_sigma = 0.0, off = 0.0, off_sigma = 0.0;

    auto* measure = app.add_subcommand("measure");
    measure->require_subcommand(1, 1);
    auto* m_g2 = measure->add_subcommand("g2");
    m_g2->add_option("--power", power);
    m_g2->add_option("--mode", mode);
    m_g2->add_option("--pairs", pairs);
    auto* m_ple = measure->add_subcommand("ple");
    m_ple->add_option("--power", power);
    m_ple->add_option("--mode", mode);
    m_ple->add_option("--range-ghz", range_ghz);
    m_ple->add_option("--points", points);
    auto* m_pol = measure->add_subcommand("polarization");
    auto* m_spec = measure->add_subcommand("spectrum");
    m_spec->add_option("--mode", mode);
    m_spec->add_option("--duration", duration);
    m_spec->add_option("--dt", dt);
    auto* m_rabi = measure->add_subcommand("rabi");
    m_rabi->add_option("--mode", mode);
    m_rabi->add_option("--powers", powers)->delimiter(',');
    m_rabi->add_option("--pairs", pairs);
    auto* m_lw = measure->add_subcommand("linewidth");
    m_lw->add_option("--mode", mode);
    m_lw->add_option("--powers", powers)->delimiter(',');

    auto* manip = app.add_subcommand("manipulate");
    manip->require_subcommand(1, 1);
    auto* mv = manip->add_subcommand("move");
    mv->add_option("--dx", dx)->required();
    mv->add_option("--dy", dy)->required();
    auto* rot = manip->add_subcommand("rotate");
    rot->add_option("--dtheta", dtheta)->required();

    auto* tune = app.add_subcommand("tune");
    tune->require_subcommand(1, 1);
    auto* t_open = tune->add_subcommand("open");
    auto* t_close = tune->add_subcommand("close");
    auto* t_lock = tune->add_subcommand("lock");
    auto* t_unlock = tune->add_subcommand("unlock");
    auto* t_reset = tune->add_subcommand("reset");
    auto* t_wait = tune->add_subcommand("wait");
    t_wait->add_option("--dt", dt)->required();
    auto* t_res = tune->add_subcommand("resonance");
    t_res->add_option("--mode", mode);
    auto* t_stab = tune->add_subcommand("stability");
    t_stab->add_option("--horizon", horizon);
    t_stab->add_option("--dt", dt);

    auto* opt = app.add_subcommand("optimize");
    opt->require_subcommand(1, 1);
    std::vector<CLI::App*> stages;
    for (const char* name : {"align", "coarse", "fine", "full"}) {
        auto* st = opt->add_subcommand(name);
        st->add_option("--mode", mode);
        st->add_option("--budget", budget);
        st->add_flag("--orthogonal", orthogonal);
        st->add_option("--tolerance", tolerance);
        stages.push_back(st);
    }

    auto* report = app.add_subcommand("report");
    report->require_subcommand(1, 1);
    auto* r_coupling = report->add_subcommand("coupling");
    r_coupling->add_option("--mode", mode);

    auto* estimate = app.add_subcommand("estimate");
    estimate->require_subcommand(1, 1);
    auto* e_coop = estimate->add_subcommand("cooperativity");
    e_coop->add_option("--on", on)->required();
    e_coop->add_option("--on-sigma", on_sigma)->required();
    e_coop->add_option("--off", off)->required();
    e_coop->add_option("--off-sigma", off_sigma)->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        fail(ErrorCode::usage, std::string("invalid command: ") + e.what());
    }

    const auto& cfg = scenario_.measurement;

    if (m_g2->parsed()) {
        const std::string md = resolve_mode(mode);
        const double p = power > 0.0 ? power : cfg.rabi_powers_uw.back();
        require(p > 0.0 && std::isfinite(p), ErrorCode::domain, "power must be positive");
        const std::uint64_t s = state_.seeds.next();
        MeasurementRecord rec = acquire_g2(md, p, pairs > 0 ? pairs : cfg.g2_pairs, s);
        const std::uint64_t rec_seq = log_.next_seq() + pending_.size();
        emit("measurement", s, {{"mode", md}, {"record", to_json(rec)}});
        state_.clock_s += timings_.g2_s;
        try {
            FitResult fit = fit_g2(rec);
            emit("fit", 0, {{"mode", md}, {"record_seq", rec_seq}, {"power_uw", p}, {"fit", to_json(fit)}});
            out.fit = fit;
            out.result["fit"] = to_json(fit);
        } catch (const TwinError& e) {
            emit("fit_error", 0, {{"mode", md}, {"record_seq", rec_seq}, {"detail", error_json(e)}});
            out.result["fit_error"] = error_json(e);
        }
        out.measurement = rec;
        out.result["record_seq"] = rec_seq;
        return;
    }
    if (m_ple->parsed()) {
        const std::string md = resolve_mode(mode);
        const double p = power > 0.0 ? power : cfg.ple_power_uw;
        const std::uint64_t s = state_.seeds.next();
        MeasurementRecord rec = simulate_ple(coupled(md), p, range_ghz > 0.0 ? range_ghz : cfg.ple_range_ghz,
                                             points > 0 ? points : cfg.ple_points, s, cfg.ple_settings());
        rec.timestamp_s = state_.clock_s;
        const std::uint64_t rec_seq = log_.next_seq() + pending_.size();
        emit("measurement", s, {{"mode", md}, {"record", to_json(rec)}});
        state_.clock_s += rec.settings.duration_s;
        try {
            FitResult fit = fit_lorentzian(rec);
            emit("fit", 0, {{"mode", md}, {"record_seq", rec_seq}, {"power_uw", p}, {"fit", to_json(fit)}});
            out.fit = fit;
            out.result["fit"] = to_json(fit);
        } catch (const TwinError& e) {
            emit("fit_error", 0, {{"mode", md}, {"record_seq", rec_seq}, {"detail", error_json(e)}});
            out.result["fit_error"] = error_json(e);
        }
        out.measurement = rec;
        out.result["record_seq"] = rec_seq;
        return;
    }
    if (m_pol->parsed()) {
        const std::uint64_t s = state_.seeds.next();
        MeasurementRecord rec = simulate_polarization(state_.true_pose, scenario_.nanodiamond.isolated(),
                                                      cfg.polarization_angles(), cfg.polarization_counts, s);
        rec.timestamp_s = state_.clock_s;
        const std::uint64_t rec_seq = log_.next_seq() + pending_.size();
        emit("measurement", s, {{"record", to_json(rec)}});
        state_.clock_s += timings_.polarization_s;
        try {
            FitResult fit = fit_polarization(rec);
            emit("fit", 0, {{"record_seq", rec_seq}, {"fit", to_json(fit)}});
            out.fit = fit;
            out.result["fit"] = to_json(fit);
        } catch (const TwinError& e) {
            emit("fit_error", 0, {{"record_seq", rec_seq}, {"detail", error_json(e)}});
            out.result["fit_error"] = error_json(e);
        }
        out.measurement = rec;
        out.result["record_seq"] = rec_seq;
        return;
    }
    if (m_spec->parsed()) {
        const std::string md = resolve_mode(mode);
        require(duration > 0.0 && dt > 0.0 && duration / dt <= 100'000.0, ErrorCode::domain,
                "spectrum needs duration > 0, dt > 0 and at most 1e5 frames");
        const std::uint64_t s = state_.seeds.next();
        const std::uint64_t tuner_seed = split_seed(s, "tuner");
        const auto series = tuner_series(state_.tuner, duration, dt, tuner_seed);
        const ModeField& field = mode_field(md);
        MeasurementRecord rec = simulate_tuning_spectrum(
            field, scenario_.mode(md).calibration, state_.true_pose, scenario_.nanodiamond.emitters,
            series, cfg.spectrum_resolution_ghz, split_seed(s, "spectrum"), cfg.spectrum_settings(dt));
        rec.timestamp_s = state_.clock_s;
        for (std::size_t i = 1; i < series.size(); ++i)
            state_.tuner = step(state_.tuner, dt, split_seed(tuner_seed, i - 1));
        const std::uint64_t rec_seq = log_.next_seq() + pending_.size();
        emit("measurement", s, {{"mode", md}, {"record", to_json(rec)}});
        state_.clock_s += duration;
        emit("tuner", 0, {{"action", "spectrum"}, {"state", to_json(state_.tuner)}});
        out.measurement = rec;
        out.result["record_seq"] = rec_seq;
        return;
    }
    if (m_rabi->parsed()) {
        const std::string md = resolve_mode(mode);
        FitResult fit = rabi_series(md, powers.empty() ? cfg.rabi_powers_uw : powers, true,
                                    pairs > 0 ? pairs : cfg.g2_pairs);
        out.fit = fit;
        out.result["fit"] = to_json(fit);
        return;
    }
    if (m_lw->parsed()) {
        const std::string md = resolve_mode(mode);
        FitResult fit = linewidth_series(md, powers.empty() ? cfg.linewidth_powers_uw : powers);
        out.fit = fit;
        out.result["fit"] = to_json(fit);
        return;
    }
    if (mv->parsed()) {
        out.step = translate(dx, dy);
        out.result = {{"step", to_json(*out.step)}, {"estimated_pose", to_json(state_.estimated_pose)}};
        return;
    }
    if (rot->parsed()) {
        out.step = rotate(dtheta);
        out.result = {{"step", to_json(*out.step)}, {"estimated_pose", to_json(state_.estimated_pose)}};
        return;
    }
    if (tune->parsed()) {
        std::string action;
        std::uint64_t s = 0;
        if (t_open->parsed()) {
            action = "open";
            state_.tuner = open_valve(state_.tuner);
        } else if (t_close->parsed()) {
            action = "close";
            state_.tuner = close_valve(state_.tuner);
        } else if (t_lock->parsed()) {
            action = "lock";
            s = state_.seeds.next();
            state_.tuner = lock(state_.tuner, s);
        } else if (t_unlock->parsed()) {
            action = "unlock";
            state_.tuner = unlock(state_.tuner);
        } else if (t_reset->parsed()) {
            action = "reset";
            state_.tuner = desorb_reset(state_.tuner);
        } else if (t_wait->parsed()) {
            action = "wait";
            require(dt > 0.0 && std::isfinite(dt), ErrorCode::domain, "wait needs dt > 0");
            s = state_.seeds.next();
            state_.tuner = step(state_.tuner, dt, s);
            state_.clock_s += dt;
        } else if (t_res->parsed()) {
            action = "resonance";
            const double d = tune_to_resonance(resolve_mode(mode));
            out.result["duration_s"] = d;
            out.result["state"] = to_json(state_.tuner);
            return;
        } else if (t_stab->parsed()) {
            s = state_.seeds.next();
            const double worst = stability_report(state_.tuner, horizon, dt, s);
            emit("tuner", s, {{"action", "stability"},
                              {"horizon_s", horizon},
                              {"sample_dt_s", dt},
                              {"max_residual_ghz", worst},
                              {"state", to_json(state_.tuner)}});
            out.result = {{"max_residual_ghz", worst}};
            return;
        }
        emit("tuner", s, {{"action", action}, {"state", to_json(state_.tuner)}});
        out.result["state"] = to_json(state_.tuner);
        return;
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (!stages[i]->parsed()) continue;
        const std::string md = resolve_mode(mode);
        require(budget >= 0, ErrorCode::domain, "budget must be >= 0");
        AlignOptions align;
        align.orthogonal = orthogonal;
        align.tolerance_deg = tolerance;
        ProtocolResult r;
        const char* stage = "";
        switch (i) {
            case 0: r = align_rotation(*this, md, align); stage = "align"; break;
            case 1: r = coarse_position(*this, md); stage = "coarse"; break;
            case 2: r = fine_position(*this, md, budget); stage = "fine"; break;
            default: {
                FullOptions full;
                full.align = align;
                r = optimize_full(*this, md, budget, full);
                stage = "full";
            }
        }
        json payload = to_json(r);
        payload["stage"] = stage;
        payload["mode"] = md;
        emit("protocol", 0, payload);
        out.protocol = r;
        out.result = payload;
        return;
    }
    if (r_coupling->parsed()) {
        const std::string md = resolve_mode(mode);
        CouplingReport rep = coupling(md);
        json payload = to_json(rep);
        payload["mode"] = md;
        payload["rabi_slope_ghz_per_sqrt_uw"] = coupled(md).rabi_slope();
        payload["zero_power_linewidth_mhz"] = coupled(md).zero_power_linewidth_mhz();
        payload["cavity_wavelength_nm"] = coupled(md).lambda_cav_nm;
        emit("coupling", 0, payload);
        out.coupling = rep;
        out.result = payload;
        return;
    }
    if (e_coop->parsed()) {
        CooperativityEstimate est = cooperativity_estimate(on, on_sigma, off, off_sigma);
        emit("cooperativity", 0, to_json(est));
        out.cooperativity = est;
        out.result = to_json(est);
        return;
    }
    fail(ErrorCode::usage, "unhandled command");
}

// --- typed wrappers ---------------------------------------------------------------

CommandOutcome Session::move(double dx_nm, double dy_nm) {
    return run_command("manipulate move --dx " + format_number(dx_nm) + " --dy " + format_number(dy_nm));
}

CommandOutcome Session::rotate_by(double dtheta_deg) {
    return run_command("manipulate rotate --dtheta " + format_number(dtheta_deg));
}

CommandOutcome Session::measure_g2(double power_uw, const std::string& mode) {
    std::string cmd = "measure g2 --power " + format_number(power_uw);
    if (!mode.empty()) cmd += " --mode " + mode;
    return run_command(cmd);
}

CommandOutcome Session::measure_rabi(const std::string& mode) {
    std::string cmd = "measure rabi";
    if (!mode.empty()) cmd += " --mode " + mode;
    return run_command(cmd);
}

CommandOutcome Session::optimize(const std::string& stage, const std::string& mode, int budget,
                                 bool orthogonal) {
    std::string cmd = "optimize " + stage + " --budget " + std::to_string(budget);
    if (!mode.empty()) cmd += " --mode " + mode;
    if (orthogonal) cmd += " --orthogonal";
    return run_command(cmd);
}

// --- state and ground truth ---------------------------------------------------------

std::string Session::resolve_mode(const std::string& mode) const {
    const std::string m = mode.empty() ? scenario_.default_mode : mode;
    (void)scenario_.mode(m);
    return m;
}

const ModeField& Session::mode_field(const std::string& label) const {
    for (const auto& f : fields_)
        if (f.mode().label == label) return f;
    fail(ErrorCode::not_found, "no cavity mode labelled '" + label + "'");
}

CoupledSystem Session::coupled(const std::string& mode) const {
    const ModeEntry& entry = scenario_.mode(mode);
    return {mode_field(mode), entry.calibration, state_.true_pose, scenario_.nanodiamond.isolated(),
            current_cavity_wavelength_nm(state_.tuner, entry.mode.lambda_cav_nm)};
}

CouplingReport Session::coupling(const std::string& mode) const {
    return coupled(resolve_mode(mode)).report();
}

double Session::true_spatial_term(const std::string& mode) const {
    return spatial_term(mode_field(mode), state_.true_pose, scenario_.nanodiamond.isolated());
}

double Session::true_spatial_term_max(const std::string& mode) const {
    return spatial_term_max(mode_field(mode), scenario_.nanodiamond.isolated(),
                            state_.true_pose.position.z);
}

double Session::true_cooperativity(const std::string& mode) const {
    return coupled(mode).report().cooperativity;
}

json Session::state_json() const {
    json modes = json::array();
    const auto& emitter = scenario_.nanodiamond.isolated();
    for (const auto& m : scenario_.modes) {
        const auto sys = coupled(m.mode.label);
        json j = to_json(sys.report());
        j["label"] = m.mode.label;
        j["cavity_wavelength_nm"] = sys.lambda_cav_nm;
        j["detuning_ghz"] =
            cavity_emitter_detuning_ghz(state_.tuner, emitter.zpl_wavelength_nm, m.mode.lambda_cav_nm);
        j["polarization_axis_deg"] = m.mode.polarization_axis_deg;
        modes.push_back(j);
    }
    json j = to_json(state_);
    j["scenario"] = scenario_.name;
    j["default_mode"] = scenario_.default_mode;
    j["modes"] = modes;
    j["dipole_angle_deg"] = lab_dipole_angle_deg(state_.true_pose, emitter);
    j["last_seq"] = log_.empty() ? 0 : log_.records().back().seq;
    return j;
}

// --- bench primitives -------------------------------------------------------------

ManipulationStep Session::translate(double dx_nm, double dy_nm) {
    const std::uint64_t s = state_.seeds.next();
    auto outcome = nanotwin::translate(state_.true_pose, dx_nm, dy_nm, scenario_.noise,
                                       scenario_.geometry, s);
    state_.true_pose = outcome.pose;
    state_.estimated_pose.position.x += outcome.step.readout_dx_nm;
    state_.estimated_pose.position.y += outcome.step.readout_dy_nm;
    state_.steps_taken += outcome.step.cost;
    emit("manipulation", s,
         {{"step", to_json(outcome.step)},
          {"true_pose", to_json(state_.true_pose)},
          {"estimated_pose", to_json(state_.estimated_pose)},
          {"steps_taken", state_.steps_taken}});
    state_.clock_s += timings_.manipulation_s;
    return outcome.step;
}

ManipulationStep Session::rotate(double dtheta_deg) {
    const std::uint64_t s = state_.seeds.next();
    auto outcome = nanotwin::rotate(state_.true_pose, dtheta_deg, scenario_.noise, s);
    state_.true_pose = outcome.pose;
    state_.estimated_pose.rotation_deg =
        wrap_360(state_.estimated_pose.rotation_deg + outcome.step.readout_dtheta_deg);
    state_.steps_taken += outcome.step.cost;
    emit("manipulation", s,
         {{"step", to_json(outcome.step)},
          {"true_pose", to_json(state_.true_pose)},
          {"estimated_pose", to_json(state_.estimated_pose)},
          {"steps_taken", state_.steps_taken}});
    state_.clock_s += timings_.manipulation_s;
    return outcome.step;
}

FitResult Session::measure_polarization() {
    const auto& emitter = scenario_.nanodiamond.isolated();
    if (scenario_.noise.noiseless_measurements) {
        require(emitter.polarization_visibility > 0.0, ErrorCode::indeterminate,
                "polarization axis indeterminate: zero visibility");
        FitResult fit;
        fit.model = "polarization";
        fit.parameters = {{"theta", lab_dipole_angle_deg(state_.true_pose, emitter), 0.0},
                          {"visibility", emitter.polarization_visibility, 0.0}};
        fit.converged = true;
        emit("fit", 0, {{"fit", to_json(fit)}, {"noiseless", true}});
        return fit;
    }
    const std::uint64_t s = state_.seeds.next();
    MeasurementRecord rec = simulate_polarization(state_.true_pose, emitter,
                                                  scenario_.measurement.polarization_angles(),
                                                  scenario_.measurement.polarization_counts, s);
    rec.timestamp_s = state_.clock_s;
    state_.clock_s += timings_.polarization_s;
    FitResult fit = fit_polarization(rec);
    emit("fit", s, {{"fit", to_json(fit)}, {"raw_omitted", true}});
    return fit;
}

MeasurementRecord Session::acquire_g2(const std::string& mode, double power_uw, std::uint64_t pairs,
                                      std::uint64_t seed) const {
    MeasurementRecord rec =
        simulate_g2(coupled(mode), power_uw, pairs, seed, scenario_.measurement.g2_settings());
    rec.timestamp_s = state_.clock_s;
    rec.settings.duration_s = timings_.g2_s;
    return rec;
}

FitResult Session::rabi_series(const std::string& mode, const std::vector<double>& powers,
                               bool log_raw, std::uint64_t pairs) {
    require(!powers.empty(), ErrorCode::domain, "Rabi series needs at least one power");
    std::vector<RabiPoint> points;
    std::vector<std::string> warnings;
    json per_power = json::array();
    for (double p : powers) {
        require(p > 0.0 && std::isfinite(p), ErrorCode::domain, "powers must be positive");
        const std::uint64_t s = state_.seeds.next();
        MeasurementRecord rec = acquire_g2(mode, p, pairs, s);
        std::uint64_t rec_seq = 0;
        if (log_raw) {
            rec_seq = log_.next_seq() + pending_.size();
            emit("measurement", s, {{"mode", mode}, {"record", to_json(rec)}});
        }
        state_.clock_s += timings_.g2_s;
        try {
            FitResult fit = fit_g2(rec);
            json entry = {{"power_uw", p}, {"sub_seed", s}, {"fit", to_json(fit)}};
            if (log_raw) entry["record_seq"] = rec_seq;
            per_power.push_back(entry);
            if (!fit.converged) {
                warnings.push_back("g2 fit at " + format_number(p) + " uW did not converge");
                continue;
            }
            points.push_back({p, fit.value("omega"), fit.sigma("omega")});
        } catch (const TwinError& e) {
            per_power.push_back({{"power_uw", p}, {"sub_seed", s}, {"detail", error_json(e)}});
            warnings.push_back("g2 fit at " + format_number(p) + " uW failed: " + e.what());
        }
    }
    require(!points.empty(), ErrorCode::no_signal, "no usable g2 fit in the Rabi series");
    FitResult fit = fit_rabi_scaling(points);
    fit.warnings.insert(fit.warnings.end(), warnings.begin(), warnings.end());
    emit("fit", 0, {{"mode", mode}, {"fit", to_json(fit)}, {"points", per_power}});
    return fit;
}

FitResult Session::measure_rabi_slope(const std::string& mode) {
    if (scenario_.noise.noiseless_measurements) {
        FitResult fit;
        fit.model = "rabi_scaling";
        fit.parameters = {{"slope", coupled(mode).rabi_slope(), 0.0}};
        fit.converged = true;
        emit("fit", 0, {{"mode", mode}, {"fit", to_json(fit)}, {"noiseless", true}});
        return fit;
    }
    return rabi_series(mode, scenario_.measurement.rabi_powers_uw, false, scenario_.measurement.g2_pairs);
}

FitResult Session::linewidth_series(const std::string& mode, const std::vector<double>& powers) {
    const auto& cfg = scenario_.measurement;
    std::vector<LinewidthPoint> points;
    std::vector<std::string> warnings;
    json per_power = json::array();
    for (double p : powers) {
        require(p > 0.0 && std::isfinite(p), ErrorCode::domain, "powers must be positive");
        const std::uint64_t s = state_.seeds.next();
        MeasurementRecord rec =
            simulate_ple(coupled(mode), p, cfg.ple_range_ghz, cfg.ple_points, s, cfg.ple_settings());
        rec.timestamp_s = state_.clock_s;
        const std::uint64_t rec_seq = log_.next_seq() + pending_.size();
        emit("measurement", s, {{"mode", mode}, {"record", to_json(rec)}});
        state_.clock_s += rec.settings.duration_s;
        try {
            FitResult fit = fit_lorentzian(rec);
            per_power.push_back({{"power_uw", p}, {"record_seq", rec_seq}, {"fit", to_json(fit)}});
            if (!fit.converged || fit.poor_fit) {
                warnings.push_back("Lorentzian at " + format_number(p) + " uW excluded");
                continue;
            }
            points.push_back({p, fit.value("fwhm"), fit.sigma("fwhm")});
        } catch (const TwinError& e) {
            per_power.push_back({{"power_uw", p}, {"record_seq", rec_seq}, {"detail", error_json(e)}});
            warnings.push_back("Lorentzian at " + format_number(p) + " uW failed: " + e.what());
        }
    }
    FitResult fit = fit_linewidth_power(points);
    fit.warnings.insert(fit.warnings.end(), warnings.begin(), warnings.end());
    emit("fit", 0, {{"mode", mode}, {"fit", to_json(fit)}, {"points", per_power}});
    return fit;
}

double Session::tune_to_resonance(const std::string& mode) {
    const auto& entry = scenario_.mode(mode);
    const TuneResult r = nanotwin::tune_to_resonance(
        state_.tuner, scenario_.nanodiamond.isolated().zpl_wavelength_nm, entry.mode.lambda_cav_nm,
        state_.tuner.drift_rate_ghz_per_s);
    state_.tuner = r.state;
    state_.clock_s += r.duration_s;
    emit("tuner", 0, {{"action", "resonance"},
                      {"mode", mode},
                      {"duration_s", r.duration_s},
                      {"state", to_json(state_.tuner)}});
    return r.duration_s;
}

}  // namespace nanotwin
