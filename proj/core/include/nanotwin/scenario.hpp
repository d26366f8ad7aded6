#pragma once

// Scenario files: the device, the nanodiamond with its emitters, noise,
// measurement defaults and the session seed. Keys carry their units
// (lambda_cav_nm, drift_rate_ghz_per_s); unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanotwin/coupling.hpp"
#include "nanotwin/emitter.hpp"
#include "nanotwin/field_model.hpp"
#include "nanotwin/nanomanip.hpp"
#include "nanotwin/photophysics.hpp"
#include "nanotwin/tuning.hpp"

namespace nanotwin {

struct ModeEntry {
    CavityMode mode;
    CouplingCalibration calibration;

    friend bool operator==(const ModeEntry&, const ModeEntry&) = default;
};

struct TunerConfig {
    double initial_offset_ghz = 0.0;
    double drift_rate_ghz_per_s = 0.85;
    double lock_jitter_bound_ghz = 10.0;

    friend bool operator==(const TunerConfig&, const TunerConfig&) = default;
};

struct MeasurementConfig {
    std::uint64_t g2_pairs = 100'000;
    int g2_bins = 1024;
    double g2_tau_max_ns = 10.0;
    double g2_snr = 18.5;
    std::vector<double> rabi_powers_uw{2.0, 4.5, 8.0, 12.4};
    double ple_power_uw = 0.5;
    double ple_range_ghz = 4.0;
    int ple_points = 201;
    double ple_dwell_s = 0.05;
    double ple_dark_cps = 200.0;
    std::vector<double> linewidth_powers_uw{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> polarization_angles_deg;  // empty: 0..350 in 10 degree steps
    double polarization_counts = 2000.0;
    double spectrum_resolution_ghz = 10.0;
    double spectrum_min_ghz = -120.0;
    double spectrum_max_ghz = 40.0;
    double spectrum_bin_ghz = 1.0;

    G2Settings g2_settings() const { return {g2_bins, g2_tau_max_ns, g2_snr}; }
    PleSettings ple_settings() const { return {ple_dwell_s, ple_dark_cps}; }
    SpectrumSettings spectrum_settings(double exposure_s) const;
    std::vector<double> polarization_angles() const;

    friend bool operator==(const MeasurementConfig&, const MeasurementConfig&) = default;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    DeviceGeometry geometry;
    std::vector<ModeEntry> modes;
    std::string default_mode;
    Nanodiamond nanodiamond;
    NoiseConfig noise;
    TunerConfig tuner;
    MeasurementConfig measurement;
    std::map<std::string, NanodiamondPose> reference_poses;

    const ModeEntry& mode(const std::string& label) const;
    TunerState initial_tuner() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws validation errors naming the offending field.
void validate(const Scenario& scenario);

nlohmann::json to_json(const Scenario& scenario);
/// Strict conversion: unknown keys and wrong types are validation errors.
Scenario scenario_from_json(const nlohmann::json& j);

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// The device of the reference experiment: two modes (II, III) with the
/// measured Q factors and simulated mode volumes, and calibration constants
/// chosen so the reference poses reproduce the measured Rabi slopes and
/// cooperativity.
Scenario reference_device_scenario();

/// Calibration targets used by reference_device_scenario.
struct ReferenceTargets {
    double slope_pos2_iii = 0.82;
    double slope_pos3_ii = 0.56;
    double cooperativity_pos3_ii = 0.535;
};

}  // namespace nanotwin
