#pragma once

// AFM nanomanipulation: quantized, noisy translate/rotate primitives and the
// alignment protocol built on them (polarization-first rotation, model-based
// coarse placement, then hill climbing on the measured Rabi scaling).

#include <cstdint>
#include <string>
#include <vector>

#include "nanotwin/emitter.hpp"
#include "nanotwin/estimators.hpp"
#include "nanotwin/field_model.hpp"

namespace nanotwin {

struct NoiseConfig {
    double placement_sigma_nm = 5.0;
    double rotation_sigma_deg = 5.0;
    double readout_sigma_nm = 2.0;
    double readout_sigma_deg = 2.0;
    double translation_quantum_nm = 10.0;
    bool noiseless_measurements = false;  // measurements return model values exactly

    friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

enum class StepKind { translate, rotate };

struct ManipulationStep {
    StepKind kind = StepKind::translate;
    double commanded_dx_nm = 0.0;
    double commanded_dy_nm = 0.0;
    double commanded_dtheta_deg = 0.0;
    double executed_dx_nm = 0.0;
    double executed_dy_nm = 0.0;
    double executed_dtheta_deg = 0.0;
    double readout_dx_nm = 0.0;
    double readout_dy_nm = 0.0;
    double readout_dtheta_deg = 0.0;
    int cost = 1;
    std::uint64_t seed = 0;

    friend bool operator==(const ManipulationStep&, const ManipulationStep&) = default;
};

struct ManipulationOutcome {
    NanodiamondPose pose;
    ManipulationStep step;
};

/// Moves the nanodiamond without changing its orientation. Commanded deltas
/// must be multiples of the translation quantum; moves that would leave the
/// modeled device are rejected with a domain error.
ManipulationOutcome translate(const NanodiamondPose& pose, double dx_nm, double dy_nm,
                              const NoiseConfig& noise, const DeviceGeometry& extent,
                              std::uint64_t seed);

ManipulationOutcome rotate(const NanodiamondPose& pose, double dtheta_deg, const NoiseConfig& noise,
                           std::uint64_t seed);

/// Re-executes logged steps (commanded deltas and their seeds) from `initial`.
NanodiamondPose replay_steps(const NanodiamondPose& initial, const std::vector<ManipulationStep>& steps,
                             const NoiseConfig& noise, const DeviceGeometry& extent);

/// Largest spatial term reachable at the emitter height: perfect in-plane
/// alignment at the global field maximum.
double spatial_term_max(const ModeField& field, const EmitterLine& emitter, double z_nm);

/// What the protocols need from a lab session. Measurements are noisy and
/// may be logged; the ground-truth accessors are for reporting only.
class ManipulationBench {
public:
    virtual ~ManipulationBench() = default;

    virtual const ModeField& mode_field(const std::string& label) const = 0;
    virtual NanodiamondPose estimated_pose() const = 0;
    virtual double translation_quantum_nm() const = 0;

    virtual ManipulationStep translate(double dx_nm, double dy_nm) = 0;
    virtual ManipulationStep rotate(double dtheta_deg) = 0;
    virtual FitResult measure_polarization() = 0;
    virtual FitResult measure_rabi_slope(const std::string& mode) = 0;
    /// Tunes the cavity onto the isolated line; returns the time spent (s).
    virtual double tune_to_resonance(const std::string& mode) = 0;

    virtual NanodiamondPose true_pose() const = 0;
    virtual double true_spatial_term(const std::string& mode) const = 0;
    virtual double true_spatial_term_max(const std::string& mode) const = 0;
    virtual double true_cooperativity(const std::string& mode) const = 0;
};

struct ProtocolResult {
    NanodiamondPose final_pose;      // ground truth
    NanodiamondPose estimated_pose;  // from AFM readouts
    std::vector<ManipulationStep> steps;
    double spatial_term = 0.0;
    double spatial_term_max = 0.0;
    double cooperativity = 0.0;
    std::vector<double> objective_trace;
    // Ground-truth spatial term at the start of fine positioning and after
    // each accepted move.
    std::vector<double> accepted_spatial_trace;
    bool converged = true;
    bool budget_exhausted = false;
    double tuning_duration_s = 0.0;

    int step_count() const;
    double spatial_fraction() const {
        return spatial_term_max > 0.0 ? spatial_term / spatial_term_max : 0.0;
    }
};

struct AlignOptions {
    double tolerance_deg = 5.0;
    int max_rotations = 8;
    bool orthogonal = false;  // align perpendicular to the mode polarization (decoupling)
};

ProtocolResult align_rotation(ManipulationBench& bench, const std::string& mode,
                              const AlignOptions& options = {});

ProtocolResult coarse_position(ManipulationBench& bench, const std::string& mode);

struct FineOptions {
    int step_multiple = 1;  // hill-climbing step in units of the translation quantum
};

ProtocolResult fine_position(ManipulationBench& bench, const std::string& mode, int budget,
                             const FineOptions& options = {});

struct FullOptions {
    AlignOptions align;
    FineOptions fine;
    bool tune = true;
};

ProtocolResult optimize_full(ManipulationBench& bench, const std::string& mode, int budget,
                             const FullOptions& options = {});

}  // namespace nanotwin
