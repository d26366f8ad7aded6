#pragma once

// Gas tuning of the cavity resonance. Condensing nitrogen only red-shifts the
// resonance; `offset_ghz` is that red shift, so the cavity frequency is
// nu_nominal - offset. Reversing requires a desorb reset.

#include <cstdint>
#include <utility>
#include <vector>

#include "nanotwin/photophysics.hpp"

namespace nanotwin {

struct TunerState {
    double offset_ghz = 0.0;
    bool valve_open = false;
    double drift_rate_ghz_per_s = 0.85;
    bool locked = false;
    double lock_target_ghz = 0.0;
    double lock_jitter_bound_ghz = 10.0;
    double jitter_phase_rad = 0.0;
    double elapsed_s = 0.0;

    friend bool operator==(const TunerState&, const TunerState&) = default;
};

/// Jitter under lock: 0.8 bound * U(-1, 1) + 0.15 bound * sin(2 pi t / T + phase).
inline constexpr double jitter_uniform_fraction = 0.8;
inline constexpr double jitter_slow_fraction = 0.15;
inline constexpr double jitter_slow_period_s = 3600.0;

TunerState step(const TunerState& state, double dt_s, std::uint64_t seed);

TunerState open_valve(TunerState state);
TunerState close_valve(TunerState state);
/// Holds the current offset; closes the valve.
TunerState lock(TunerState state, std::uint64_t seed);
TunerState unlock(TunerState state);
/// Desorbs the condensed gas: back to the nominal resonance, unlocked, valve closed.
TunerState desorb_reset(TunerState state);

/// Cavity resonance wavelength for the current offset.
double current_cavity_wavelength_nm(const TunerState& state, double lambda_cav_nominal_nm);

/// Detuning nu_cav - nu_emitter in GHz for the current offset.
double cavity_emitter_detuning_ghz(const TunerState& state, double lambda_emitter_nm,
                                   double lambda_cav_nominal_nm);

struct TuneResult {
    TunerState state;
    double duration_s;
};

/// Drifts the resonance onto the emitter at `rate` and locks there.
TuneResult tune_to_resonance(const TunerState& state, double lambda_emitter_nm,
                             double lambda_cav_nominal_nm, double rate_ghz_per_s);

/// Worst |offset - target| over `horizon_s` sampled every `sample_dt_s`.
double stability_report(const TunerState& state, double horizon_s, double sample_dt_s,
                        std::uint64_t seed);

/// Samples (time, offset) every dt for `duration_s`, starting at the current state.
std::vector<TunerSample> tuner_series(const TunerState& state, double duration_s, double dt_s,
                                      std::uint64_t seed);

}  // namespace nanotwin
