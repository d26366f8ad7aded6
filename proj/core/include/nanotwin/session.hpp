#pragma once

// A lab session: scenario + mutable state (true and AFM-estimated pose, tuner,
// seed cursor, simulated clock) + the experiment log. Every mutation goes
// through run_command, which logs the command text first so replaying the
// log re-executes the exact same sequence.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanotwin/log.hpp"
#include "nanotwin/nanomanip.hpp"
#include "nanotwin/rng.hpp"
#include "nanotwin/scenario.hpp"

namespace nanotwin {

struct SessionState {
    NanodiamondPose true_pose;
    NanodiamondPose estimated_pose;
    TunerState tuner;
    SeedStream seeds;
    double clock_s = 0.0;
    int steps_taken = 0;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

nlohmann::json to_json(const SessionState& state);

/// Simulated durations charged to the session clock.
struct LabTimings {
    double manipulation_s = 1800.0;  // warm up, AFM step, cool down
    double g2_s = 300.0;
    double polarization_s = 120.0;
};

struct CommandOutcome {
    std::string command;
    std::vector<LogRecord> records;
    nlohmann::json result = nlohmann::json::object();
    std::optional<ProtocolResult> protocol;
    std::optional<FitResult> fit;
    std::optional<MeasurementRecord> measurement;
    std::optional<ManipulationStep> step;
    std::optional<CouplingReport> coupling;
    std::optional<CooperativityEstimate> cooperativity;
};

/// Formats a double so it parses back to the same value.
std::string format_number(double value);

class Session : private ManipulationBench {
public:
    /// Starts a session; `seed` overrides the scenario seed.
    explicit Session(Scenario scenario, std::optional<std::uint64_t> seed = std::nullopt);

    /// Rebuilds a session by re-running every logged command. Throws a
    /// validation error if the regenerated records differ from the log.
    static Session replay(const ExperimentLog& log);

    /// Parses and executes one command. On any error the session is left
    /// untouched and nothing is logged. Usage errors carry ErrorCode::usage.
    CommandOutcome run_command(const std::string& command);

    /// Command reference, one line per command.
    static std::string command_help();

    const Scenario& scenario() const noexcept { return scenario_; }
    const SessionState& state() const noexcept { return state_; }
    const ExperimentLog& log() const noexcept { return log_; }
    std::uint64_t seed() const noexcept { return state_.seeds.root(); }

    /// Full read-only snapshot: state, per-mode coupling and detuning.
    nlohmann::json state_json() const;

    /// Ground-truth coupling of the isolated line to `mode` at the current
    /// pose and tuner state (no randomness, not logged).
    CouplingReport coupling(const std::string& mode) const;

    // Typed conveniences; each builds the command text and calls run_command.
    CommandOutcome move(double dx_nm, double dy_nm);
    CommandOutcome rotate_by(double dtheta_deg);
    CommandOutcome measure_g2(double power_uw, const std::string& mode = "");
    CommandOutcome measure_rabi(const std::string& mode = "");
    CommandOutcome optimize(const std::string& stage, const std::string& mode, int budget = 25,
                            bool orthogonal = false);

private:
    // ManipulationBench
    const ModeField& mode_field(const std::string& label) const override;
    NanodiamondPose estimated_pose() const override { return state_.estimated_pose; }
    double translation_quantum_nm() const override { return scenario_.noise.translation_quantum_nm; }
    ManipulationStep translate(double dx_nm, double dy_nm) override;
    ManipulationStep rotate(double dtheta_deg) override;
    FitResult measure_polarization() override;
    FitResult measure_rabi_slope(const std::string& mode) override;
    double tune_to_resonance(const std::string& mode) override;
    NanodiamondPose true_pose() const override { return state_.true_pose; }
    double true_spatial_term(const std::string& mode) const override;
    double true_spatial_term_max(const std::string& mode) const override;
    double true_cooperativity(const std::string& mode) const override;

    void execute(const std::vector<std::string>& args, CommandOutcome& out);
    void emit(const std::string& type, std::uint64_t sub_seed, nlohmann::json payload);
    std::string resolve_mode(const std::string& mode) const;
    CoupledSystem coupled(const std::string& mode) const;
    MeasurementRecord acquire_g2(const std::string& mode, double power_uw, std::uint64_t pairs,
                                 std::uint64_t seed) const;
    FitResult rabi_series(const std::string& mode, const std::vector<double>& powers,
                          bool log_raw, std::uint64_t pairs);
    FitResult linewidth_series(const std::string& mode, const std::vector<double>& powers);

    Scenario scenario_;
    std::vector<ModeField> fields_;
    SessionState state_;
    ExperimentLog log_;
    LabTimings timings_;
    // Records produced by the command in flight; committed on success.
    std::vector<LogRecord> pending_;
    std::string current_command_;
};

}  // namespace nanotwin
