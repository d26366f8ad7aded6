#include "nanotwin/nanomanip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nanotwin/coupling.hpp"
#include "nanotwin/error.hpp"
#include "nanotwin/geometry.hpp"
#include "nanotwin/rng.hpp"

namespace nanotwin {
namespace {

double gaussian(Engine& engine, double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(engine);
}

bool is_multiple(double value, double quantum) {
    const double n = std::round(value / quantum);
    return std::abs(value - n * quantum) <= 1e-9 * std::max(1.0, std::abs(value));
}

void append(ProtocolResult& into, const ProtocolResult& part) {
    into.steps.insert(into.steps.end(), part.steps.begin(), part.steps.end());
    into.objective_trace.insert(into.objective_trace.end(), part.objective_trace.begin(),
                                part.objective_trace.end());
    into.accepted_spatial_trace.insert(into.accepted_spatial_trace.end(),
                                       part.accepted_spatial_trace.begin(),
                                       part.accepted_spatial_trace.end());
    into.converged = into.converged && part.converged;
    into.budget_exhausted = into.budget_exhausted || part.budget_exhausted;
}

ProtocolResult finish(ManipulationBench& bench, const std::string& mode, ProtocolResult r) {
    r.final_pose = bench.true_pose();
    r.estimated_pose = bench.estimated_pose();
    r.spatial_term = bench.true_spatial_term(mode);
    r.spatial_term_max = bench.true_spatial_term_max(mode);
    r.cooperativity = bench.true_cooperativity(mode);
    return r;
}

}  // namespace

ManipulationOutcome translate(const NanodiamondPose& pose, double dx_nm, double dy_nm,
                              const NoiseConfig& noise, const DeviceGeometry& extent,
                              std::uint64_t seed) {
    require(std::isfinite(dx_nm) && std::isfinite(dy_nm), ErrorCode::domain,
            "translation must be finite");
    require(noise.translation_quantum_nm > 0.0, ErrorCode::domain,
            "translation quantum must be positive");
    require(is_multiple(dx_nm, noise.translation_quantum_nm) &&
                is_multiple(dy_nm, noise.translation_quantum_nm),
            ErrorCode::precondition, "translation is not a multiple of the AFM quantum");

    Engine engine = make_engine(seed);
    ManipulationStep step;
    step.kind = StepKind::translate;
    step.seed = seed;
    step.commanded_dx_nm = dx_nm;
    step.commanded_dy_nm = dy_nm;
    step.executed_dx_nm = dx_nm + gaussian(engine, noise.placement_sigma_nm);
    step.executed_dy_nm = dy_nm + gaussian(engine, noise.placement_sigma_nm);
    step.readout_dx_nm = step.executed_dx_nm + gaussian(engine, noise.readout_sigma_nm);
    step.readout_dy_nm = step.executed_dy_nm + gaussian(engine, noise.readout_sigma_nm);

    NanodiamondPose next = pose;
    next.position.x += step.executed_dx_nm;
    next.position.y += step.executed_dy_nm;
    require(std::abs(next.position.x) <= extent.half_length_nm &&
                std::abs(next.position.y) <= extent.half_extent_y_nm,
            ErrorCode::domain, "move would leave the modeled device");
    return {next, step};
}

ManipulationOutcome rotate(const NanodiamondPose& pose, double dtheta_deg, const NoiseConfig& noise,
                           std::uint64_t seed) {
    require(std::isfinite(dtheta_deg), ErrorCode::domain, "rotation must be finite");
    Engine engine = make_engine(seed);
    ManipulationStep step;
    step.kind = StepKind::rotate;
    step.seed = seed;
    step.commanded_dtheta_deg = dtheta_deg;
    step.executed_dtheta_deg = dtheta_deg + gaussian(engine, noise.rotation_sigma_deg);
    step.readout_dtheta_deg = step.executed_dtheta_deg + gaussian(engine, noise.readout_sigma_deg);

    NanodiamondPose next = pose;
    next.rotation_deg = wrap_360(pose.rotation_deg + step.executed_dtheta_deg);
    return {next, step};
}

NanodiamondPose replay_steps(const NanodiamondPose& initial, const std::vector<ManipulationStep>& steps,
                             const NoiseConfig& noise, const DeviceGeometry& extent) {
    NanodiamondPose pose = initial;
    for (const auto& s : steps) {
        pose = s.kind == StepKind::translate
                   ? translate(pose, s.commanded_dx_nm, s.commanded_dy_nm, noise, extent, s.seed).pose
                   : rotate(pose, s.commanded_dtheta_deg, noise, s.seed).pose;
    }
    return pose;
}

double spatial_term_max(const ModeField& field, const EmitterLine& emitter, double z_nm) {
    const double peak = field.peak_position_nm();
    const double e = field.field_at({peak, 0.0, z_nm}).e_y;
    const Vec3& d = emitter.dipole_body;
    const double n = norm(d);
    const double in_plane = n > 0.0 ? (d.x * d.x + d.y * d.y) / (n * n) : 0.0;
    return e * e * in_plane;
}

int ProtocolResult::step_count() const {
    int n = 0;
    for (const auto& s : steps) n += s.cost;
    return n;
}

ProtocolResult align_rotation(ManipulationBench& bench, const std::string& mode,
                              const AlignOptions& options) {
    const double target =
        bench.mode_field(mode).mode().polarization_axis_deg + (options.orthogonal ? 90.0 : 0.0);
    ProtocolResult r;
    int rotations = 0;
    for (;;) {
        FitResult fit;
        try {
            fit = bench.measure_polarization();
        } catch (const TwinError& e) {
            if (e.code() == ErrorCode::indeterminate)
                fail(ErrorCode::indeterminate,
                     "alignment impossible: emitter shows no polarization contrast");
            throw;
        }
        const double mis = axis_difference(fit.value("theta"), target);
        r.objective_trace.push_back(std::abs(mis));
        if (std::abs(mis) <= options.tolerance_deg) break;
        if (rotations >= options.max_rotations) {
            r.converged = false;
            break;
        }
        r.steps.push_back(bench.rotate(mis));
        ++rotations;
    }
    return finish(bench, mode, r);
}

ProtocolResult coarse_position(ManipulationBench& bench, const std::string& mode) {
    const ModeField& field = bench.mode_field(mode);
    const NanodiamondPose est = bench.estimated_pose();
    const auto peaks = field.peak_positions_nm();
    double target = peaks.front();
    for (double p : peaks) {
        const double d = std::abs(p - est.position.x);
        const double best = std::abs(target - est.position.x);
        if (d < best - 1e-9 || (std::abs(d - best) <= 1e-9 && p > target)) target = p;
    }
    const double q = bench.translation_quantum_nm();
    const double dx = std::round((target - est.position.x) / q) * q;
    const double dy = std::round((0.0 - est.position.y) / q) * q;
    ProtocolResult r;
    if (dx != 0.0 || dy != 0.0) r.steps.push_back(bench.translate(dx, dy));
    return finish(bench, mode, r);
}

ProtocolResult fine_position(ManipulationBench& bench, const std::string& mode, int budget,
                             const FineOptions& options) {
    require(budget >= 0, ErrorCode::domain, "step budget must be >= 0");
    require(options.step_multiple >= 1, ErrorCode::domain, "step multiple must be >= 1");
    const double d = bench.translation_quantum_nm() * options.step_multiple;

    ProtocolResult r;
    FitResult current = bench.measure_rabi_slope(mode);
    r.objective_trace.push_back(current.value("slope"));

    const double q = bench.translation_quantum_nm();
    int used = 0;
    // Moves are aimed at targets relative to the best estimated position, so
    // placement noise picked up by rejected trials is corrected from the AFM
    // readout instead of accumulating.
    NanodiamondPose best = bench.estimated_pose();
    r.accepted_spatial_trace.push_back(bench.true_spatial_term(mode));
    auto go_to = [&](double tx, double ty) {
        const NanodiamondPose est = bench.estimated_pose();
        const double dx = std::round((tx - est.position.x) / q) * q;
        const double dy = std::round((ty - est.position.y) / q) * q;
        if ((dx == 0.0 && dy == 0.0) || used >= budget) return;
        r.steps.push_back(bench.translate(dx, dy));
        used += r.steps.back().cost;
    };
    // A move counts only when it beats the current slope by more than the
    // combined 1-sigma uncertainty.
    auto improves = [&](const FitResult& trial) {
        const double diff = trial.value("slope") - current.value("slope");
        const double sigma = std::hypot(trial.sigma("slope"), current.sigma("slope"));
        return diff > sigma;
    };
    auto measure = [&]() {
        FitResult f = bench.measure_rabi_slope(mode);
        r.objective_trace.push_back(f.value("slope"));
        return f;
    };

    int rejected_sweeps = 0;
    while (rejected_sweeps < 2 && !r.budget_exhausted) {
        bool accepted = false;
        for (int axis = 0; axis < 2 && !r.budget_exhausted; ++axis) {
            const double ux = axis == 0 ? d : 0.0;
            const double uy = axis == 0 ? 0.0 : d;
            // Try +u, then -u (straight from the +u trial), else return; after
            // an accepted trial keep walking the same way.
            for (double sign : {1.0, -1.0}) {
                if (budget - used < 2) {
                    go_to(best.position.x, best.position.y);
                    r.budget_exhausted = true;
                    break;
                }
                go_to(best.position.x + sign * ux, best.position.y + sign * uy);
                FitResult trial = measure();
                if (!improves(trial)) {
                    if (sign < 0.0) go_to(best.position.x, best.position.y);
                    continue;
                }
                accepted = true;
                current = trial;
                best = bench.estimated_pose();
                r.accepted_spatial_trace.push_back(bench.true_spatial_term(mode));
                for (;;) {
                    if (budget - used < 2) {
                        r.budget_exhausted = true;
                        break;
                    }
                    go_to(best.position.x + sign * ux, best.position.y + sign * uy);
                    trial = measure();
                    if (!improves(trial)) {
                        go_to(best.position.x, best.position.y);
                        break;
                    }
                    current = trial;
                    best = bench.estimated_pose();
                    r.accepted_spatial_trace.push_back(bench.true_spatial_term(mode));
                }
                break;
            }
        }
        if (r.budget_exhausted) break;
        rejected_sweeps = accepted ? 0 : rejected_sweeps + 1;
    }
    return finish(bench, mode, r);
}

ProtocolResult optimize_full(ManipulationBench& bench, const std::string& mode, int budget,
                             const FullOptions& options) {
    require(budget >= 0, ErrorCode::domain, "step budget must be >= 0");
    ProtocolResult r;
    append(r, align_rotation(bench, mode, options.align));
    append(r, coarse_position(bench, mode));
    if (!options.align.orthogonal) {
        const int left = budget - r.step_count();
        if (left >= 2) {
            append(r, fine_position(bench, mode, left, options.fine));
        } else {
            r.budget_exhausted = true;
        }
    }
    if (options.tune) r.tuning_duration_s = bench.tune_to_resonance(mode);
    return finish(bench, mode, r);
}

}  // namespace nanotwin
