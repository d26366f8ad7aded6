#include "nanotwin/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "nanotwin/error.hpp"

namespace nanotwin {
namespace {

double hermite(int k, double u) {
    double h_prev = 1.0;
    if (k == 0) return h_prev;
    double h = 2.0 * u;
    for (int n = 1; n < k; ++n) {
        const double next = 2.0 * u * h - 2.0 * n * h_prev;
        h_prev = h;
        h = next;
    }
    return h;
}

double raw_envelope(int k, double u) { return hermite(k, u) * std::exp(-u * u); }

template <typename F>
double golden_max(F&& f, double lo, double hi) {
    constexpr double g = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < 80 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

double envelope_peak_magnitude(int k) {
    switch (k) {
        case 0: return 1.0;
        case 1: return std::sqrt(2.0) * std::exp(-0.5);
        case 2: return 2.0;
        default: break;
    }
    double best_u = 0.0;
    double best = 0.0;
    for (double u = 0.0; u <= 8.0; u += 1e-3) {
        const double v = std::abs(raw_envelope(k, u));
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    const double u = golden_max([k](double t) { return std::abs(raw_envelope(k, t)); },
                                std::max(0.0, best_u - 1e-3), best_u + 1e-3);
    return std::max(best, std::abs(raw_envelope(k, u)));
}

std::vector<double> envelope_nodes(const EnvelopeSpec& spec) {
    const double s = spec.width_sigma_nm;
    switch (spec.node_count) {
        case 0: return {};
        case 1: return {0.0};
        case 2: return {-s / std::sqrt(2.0), s / std::sqrt(2.0)};
        default: break;
    }
    std::vector<double> nodes;
    const int k = spec.node_count;
    const double step = 1e-3;
    for (double u = -8.0; u < 8.0; u += step) {
        double a = u;
        double b = u + step;
        double fa = hermite(k, a);
        const double fb = hermite(k, b);
        if (fa == 0.0) {
            nodes.push_back(a * s);
            continue;
        }
        if (fa * fb >= 0.0) continue;
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (a + b);
            const double fm = hermite(k, m);
            if (fa * fm <= 0.0) {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        nodes.push_back(0.5 * (a + b) * s);
    }
    return nodes;
}

double standing_wave(const CavityMode& mode, double x_nm) {
    return std::cos(units::pi * x_nm / mode.geometry.hole_spacing_nm + mode.standing_wave_phase_rad);
}

/// Argmax (x >= 0) of |envelope * standing wave| scanned at 1 nm and refined.
std::pair<double, double> on_axis_peak(const CavityMode& mode) {
    const double half = mode.geometry.half_length_nm;
    auto mag = [&](double x) {
        return std::abs(envelope_value(mode.envelope, x) * standing_wave(mode, x));
    };
    double best_x = 0.0;
    double best = mag(0.0);
    const auto n = static_cast<long>(std::floor(half));
    for (long i = 1; i <= n; ++i) {
        const auto x = static_cast<double>(i);
        const double v = mag(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    const double lo = std::max(0.0, best_x - 1.0);
    const double hi = std::min(half, best_x + 1.0);
    const double refined = golden_max(mag, lo, hi);
    if (mag(refined) > best) {
        best = mag(refined);
        best_x = refined;
    }
    return {best_x, best};
}

}  // namespace

void validate(const CavityMode& mode) {
    auto check = [&](bool ok, const std::string& field) {
        require(ok, ErrorCode::validation, "mode '" + mode.label + "': invalid " + field);
    };
    check(!mode.label.empty(), "label");
    check(mode.q_factor > 0.0, "q_factor");
    check(mode.mode_volume > 0.0, "mode_volume");
    check(mode.lambda_cav_nm > 0.0, "lambda_cav_nm");
    check(mode.refractive_index > 0.0, "refractive_index");
    check(mode.geometry.hole_spacing_nm > 0.0, "hole_spacing_nm");
    check(mode.geometry.half_length_nm > 0.0, "half_length_nm");
    check(mode.geometry.half_extent_y_nm > 0.0, "half_extent_y_nm");
    check(mode.geometry.beam_half_width_nm > 0.0, "beam_half_width_nm");
    check(mode.geometry.z_decay_nm > 0.0, "z_decay_nm");
    check(mode.envelope.node_count >= 0 && mode.envelope.node_count <= 8, "envelope.node_count");
    check(mode.envelope.width_sigma_nm > 0.0, "envelope.width_sigma_nm");
    check(mode.transmission_factor > 0.0 && mode.transmission_factor <= 1.0,
          "transmission_factor");
}

double envelope_value(const EnvelopeSpec& spec, double x_nm) {
    const double u = x_nm / spec.width_sigma_nm;
    return raw_envelope(spec.node_count, u) / envelope_peak_magnitude(spec.node_count);
}

ModeField::ModeField(CavityMode mode) : mode_(std::move(mode)) {
    validate(mode_);
    const auto [x, v] = on_axis_peak(mode_);
    peak_x_nm_ = x;
    norm_ = v;
    require(norm_ > 0.0, ErrorCode::validation, "mode '" + mode_.label + "' has a vanishing field");
}

bool ModeField::in_extent(const Vec3& p) const noexcept {
    const auto& g = mode_.geometry;
    return std::abs(p.x) <= g.half_length_nm && std::abs(p.y) <= g.half_extent_y_nm && p.z >= 0.0 &&
           std::isfinite(p.z);
}

double ModeField::on_axis_raw(double x_nm) const {
    return envelope_value(mode_.envelope, x_nm) * standing_wave(mode_, x_nm);
}

FieldSample ModeField::field_at(const Vec3& p) const {
    if (!in_extent(p)) {
        std::ostringstream os;
        os << "position (" << p.x << ", " << p.y << ", " << p.z << ") nm outside modeled device";
        fail(ErrorCode::domain, os.str());
    }
    const double w = mode_.geometry.beam_half_width_nm;
    const double lateral = std::exp(-p.y * p.y / (2.0 * w * w));
    const double decay = std::exp(-std::max(p.z, 0.0) / mode_.geometry.z_decay_nm);
    double e = on_axis_raw(p.x) / norm_ * lateral * decay;
    e = std::clamp(e, -1.0, 1.0);
    return {e, p};
}

double ModeField::ldos_at(const Vec3& p) const {
    const double e = field_at(p).e_y;
    return e * e;
}

std::vector<double> ModeField::peak_positions_nm() const {
    if (peak_x_nm_ == 0.0) return {0.0};
    return {-peak_x_nm_, peak_x_nm_};
}

FieldSample field_at(const CavityMode& mode, const Vec3& position) {
    return ModeField(mode).field_at(position);
}

double ldos_at(const CavityMode& mode, const Vec3& position) {
    return ModeField(mode).ldos_at(position);
}

std::vector<FieldMapRow> field_map(const ModeField& field, double x0_nm, double x1_nm,
                                   double step_nm, double z_nm) {
    require(step_nm > 0.0, ErrorCode::domain, "field map step must be positive");
    require(x1_nm >= x0_nm, ErrorCode::domain, "field map range is empty");
    std::vector<FieldMapRow> rows;
    const auto n = static_cast<long>(std::floor((x1_nm - x0_nm) / step_nm + 1e-9));
    rows.reserve(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i) {
        const double x = x0_nm + static_cast<double>(i) * step_nm;
        const double e = field.field_at({x, 0.0, z_nm}).e_y;
        rows.push_back({x, e, e * e});
    }
    return rows;
}

// --- calibration ---------------------------------------------------------------

std::string describe(const EnvelopeConstraint& c) {
    std::ostringstream os;
    switch (c.kind) {
        case ConstraintKind::node_at: os << "node_at(" << c.x_nm << " nm)"; break;
        case ConstraintKind::envelope_max_at: os << "envelope_max_at(" << c.x_nm << " nm)"; break;
        case ConstraintKind::peak_within:
            os << "peak_within(" << c.x_nm << ", " << c.x_hi_nm << " nm)";
            break;
        case ConstraintKind::node_within:
            os << "node_within(" << c.x_nm << ", " << c.x_hi_nm << " nm)";
            break;
        case ConstraintKind::ldos_greater:
            os << "ldos_greater(" << c.x_nm << " nm > " << c.x_hi_nm << " nm)";
            break;
    }
    return os.str();
}

EnvelopeSpec default_envelope(const std::string& mode_label, const DeviceGeometry& geometry) {
    const double a = geometry.hole_spacing_nm;
    if (mode_label == "II") return {1, 11.0 * a};
    if (mode_label == "III") return {2, 10.0 * a};
    return {0, 10.0 * a};
}

EnvelopeSpec calibrate_envelope(const std::string& mode_label, const DeviceGeometry& geometry,
                                const std::vector<EnvelopeConstraint>& constraints) {
    const EnvelopeSpec defaults = default_envelope(mode_label, geometry);
    if (constraints.empty()) return defaults;

    CavityMode probe;
    probe.label = mode_label.empty() ? "probe" : mode_label;
    probe.geometry = geometry;

    auto violations = [&](const EnvelopeSpec& spec) {
        probe.envelope = spec;
        std::optional<double> peak;
        std::vector<std::string> out;
        for (const auto& c : constraints) {
            bool ok = false;
            switch (c.kind) {
                case ConstraintKind::node_at:
                    ok = std::abs(envelope_value(spec, c.x_nm)) <= 0.02;
                    break;
                case ConstraintKind::envelope_max_at:
                    ok = std::abs(envelope_value(spec, c.x_nm)) >= 1.0 - 1e-6;
                    break;
                case ConstraintKind::peak_within: {
                    if (!peak) peak = on_axis_peak(probe).first;
                    ok = *peak >= c.x_nm && *peak <= c.x_hi_nm;
                    break;
                }
                case ConstraintKind::node_within: {
                    for (double n : envelope_nodes(spec)) {
                        if ((n >= c.x_nm && n <= c.x_hi_nm) || (-n >= c.x_nm && -n <= c.x_hi_nm))
                            ok = true;
                    }
                    break;
                }
                case ConstraintKind::ldos_greater: {
                    const double hi = envelope_value(spec, c.x_nm) * standing_wave(probe, c.x_nm);
                    const double lo =
                        envelope_value(spec, c.x_hi_nm) * standing_wave(probe, c.x_hi_nm);
                    ok = hi * hi > lo * lo;
                    break;
                }
            }
            if (!ok) out.push_back(describe(c));
        }
        return out;
    };

    const double a = geometry.hole_spacing_nm;
    std::optional<EnvelopeSpec> best;
    std::tuple<int, double, int> best_key{};
    std::vector<std::string> least_violated;
    std::size_t least_count = std::numeric_limits<std::size_t>::max();

    for (int k = 0; k <= 2; ++k) {
        for (int i = 200; i <= 3000; ++i) {
            const EnvelopeSpec spec{k, a * i / 100.0};
            const std::tuple<int, double, int> key{k != defaults.node_count ? 1 : 0,
                                                   std::abs(spec.width_sigma_nm -
                                                            defaults.width_sigma_nm),
                                                   k};
            if (best && !(key < best_key)) continue;
            auto v = violations(spec);
            if (v.empty()) {
                best = spec;
                best_key = key;
            } else if (v.size() < least_count) {
                least_count = v.size();
                least_violated = std::move(v);
            }
        }
    }
    if (best) return *best;

    std::string msg = "no envelope satisfies the constraints; violated:";
    for (const auto& s : least_violated) msg += " " + s;
    fail(ErrorCode::calibration, msg);
}

}  // namespace nanotwin
