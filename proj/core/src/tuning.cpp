#include "nanotwin/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nanotwin/error.hpp"
#include "nanotwin/rng.hpp"
#include "nanotwin/units.hpp"

namespace nanotwin {
namespace {

double jitter(const TunerState& s, double t, std::uint64_t seed) {
    Engine engine = make_engine(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double slow = std::sin(2.0 * units::pi * t / jitter_slow_period_s + s.jitter_phase_rad);
    return s.lock_jitter_bound_ghz * (jitter_uniform_fraction * u(engine) + jitter_slow_fraction * slow);
}

}  // namespace

TunerState step(const TunerState& state, double dt_s, std::uint64_t seed) {
    require(dt_s > 0.0, ErrorCode::domain, "tuner step needs dt > 0");
    TunerState s = state;
    s.elapsed_s += dt_s;
    if (s.locked) {
        s.offset_ghz = s.lock_target_ghz + jitter(s, s.elapsed_s, seed);
    } else if (s.valve_open) {
        s.offset_ghz += s.drift_rate_ghz_per_s * dt_s;
    }
    return s;
}

TunerState open_valve(TunerState state) {
    require(state.drift_rate_ghz_per_s >= 0.0, ErrorCode::domain, "drift rate must be >= 0");
    state.locked = false;
    state.valve_open = true;
    return state;
}

TunerState close_valve(TunerState state) {
    state.valve_open = false;
    return state;
}

TunerState lock(TunerState state, std::uint64_t seed) {
    state.valve_open = false;
    state.locked = true;
    state.lock_target_ghz = state.offset_ghz;
    Engine engine = make_engine(split_seed(seed, "jitter-phase"));
    state.jitter_phase_rad = std::uniform_real_distribution<double>(0.0, 2.0 * units::pi)(engine);
    return state;
}

TunerState unlock(TunerState state) {
    if (state.locked) state.offset_ghz = state.lock_target_ghz;
    state.locked = false;
    return state;
}

TunerState desorb_reset(TunerState state) {
    state.offset_ghz = 0.0;
    state.valve_open = false;
    state.locked = false;
    state.lock_target_ghz = 0.0;
    return state;
}

double current_cavity_wavelength_nm(const TunerState& state, double lambda_cav_nominal_nm) {
    return units::shift_wavelength(lambda_cav_nominal_nm, -state.offset_ghz);
}

double cavity_emitter_detuning_ghz(const TunerState& state, double lambda_emitter_nm,
                                   double lambda_cav_nominal_nm) {
    return units::frequency_ghz(lambda_cav_nominal_nm) - state.offset_ghz -
           units::frequency_ghz(lambda_emitter_nm);
}

TuneResult tune_to_resonance(const TunerState& state, double lambda_emitter_nm,
                             double lambda_cav_nominal_nm, double rate_ghz_per_s) {
    require(lambda_emitter_nm > 0.0 && lambda_cav_nominal_nm > 0.0, ErrorCode::domain,
            "wavelengths must be positive");
    require(rate_ghz_per_s >= 0.0, ErrorCode::domain, "tuning rate must be >= 0");
    TunerState s = unlock(state);
    const double detuning =
        cavity_emitter_detuning_ghz(s, lambda_emitter_nm, lambda_cav_nominal_nm);
    if (detuning == 0.0) {
        s.valve_open = false;
        s.locked = true;
        s.lock_target_ghz = s.offset_ghz;
        return {s, 0.0};
    }
    require(detuning > 0.0, ErrorCode::never_reaches,
            "cavity is already red of the emitter; gas tuning cannot blue-shift (desorb first)");
    require(rate_ghz_per_s > 0.0, ErrorCode::never_reaches,
            "zero drift rate never reaches the resonance");
    const double duration = detuning / rate_ghz_per_s;
    s.offset_ghz += detuning;
    s.elapsed_s += duration;
    s.drift_rate_ghz_per_s = rate_ghz_per_s;
    s.valve_open = false;
    s.locked = true;
    s.lock_target_ghz = s.offset_ghz;
    return {s, duration};
}

double stability_report(const TunerState& state, double horizon_s, double sample_dt_s,
                        std::uint64_t seed) {
    require(state.locked, ErrorCode::precondition, "stability report needs a locked tuner");
    require(horizon_s >= 0.0 && sample_dt_s > 0.0, ErrorCode::domain, "invalid horizon");
    double worst = std::abs(state.offset_ghz - state.lock_target_ghz);
    TunerState s = state;
    const auto n = static_cast<std::uint64_t>(std::floor(horizon_s / sample_dt_s + 1e-9));
    for (std::uint64_t i = 0; i < n; ++i) {
        s = step(s, sample_dt_s, split_seed(seed, i));
        worst = std::max(worst, std::abs(s.offset_ghz - s.lock_target_ghz));
    }
    return worst;
}

std::vector<TunerSample> tuner_series(const TunerState& state, double duration_s, double dt_s,
                                      std::uint64_t seed) {
    require(duration_s >= 0.0 && dt_s > 0.0, ErrorCode::domain, "invalid tuner series");
    std::vector<TunerSample> out{{state.elapsed_s, state.offset_ghz}};
    TunerState s = state;
    const auto n = static_cast<std::uint64_t>(std::floor(duration_s / dt_s + 1e-9));
    for (std::uint64_t i = 0; i < n; ++i) {
        s = step(s, dt_s, split_seed(seed, i));
        out.push_back({s.elapsed_s, s.offset_ghz});
    }
    return out;
}

}  // namespace nanotwin
