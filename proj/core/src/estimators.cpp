#include "nanotwin/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "nanotwin/error.hpp"
#include "nanotwin/least_squares.hpp"
#include "nanotwin/units.hpp"

namespace nanotwin {
namespace {

// Models are parameterized so that every positive quantity is fitted as a log.

struct G2CurveModel {
    template <typename T>
    T operator()(const std::array<T, 4>& p, double tau) const {
        using std::exp;
        return exp(p[3]) * g2_value(exp(p[0]), exp(p[1]), exp(p[2]), tau);
    }
};

struct LorentzianModel {
    template <typename T>
    T operator()(const std::array<T, 4>& p, double x) const {
        using std::exp;
        const T u = T(2.0) * (T(x) - p[0]) / exp(p[1]);
        return p[3] + exp(p[2]) / (T(1.0) + u * u);
    }
};

struct PowerBroadeningModel {
    template <typename T>
    T operator()(const std::array<T, 2>& p, double power) const {
        using std::exp, std::sqrt;
        return exp(p[0]) * sqrt(T(1.0) + T(power) / exp(p[1]));
    }
};

std::vector<double> poisson_sigma(std::span<const double> y) {
    std::vector<double> s(y.size());
    std::transform(y.begin(), y.end(), s.begin(), [](double v) { return std::sqrt(std::max(v, 1.0)); });
    return s;
}

/// Reduced chi^2 of the best constant model, used to detect featureless data.
double constant_model_reduced_chi2(std::span<const double> y) {
    if (y.size() < 2) return 0.0;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double chi2 = 0.0;
    for (double v : y) chi2 += (v - mean) * (v - mean) / std::max(mean, 1.0);
    return chi2 / static_cast<double>(y.size() - 1);
}

struct Solved {
    LmSolution lm;
    Eigen::MatrixXd covariance;  // scaled by the residual variance
    double reduced_chi2 = 0.0;
};

Solved finish(const LmSolution& lm, std::size_t m) {
    Solved s{lm, normal_covariance(lm.jacobian), 0.0};
    const auto n = static_cast<std::size_t>(lm.params.size());
    s.reduced_chi2 = m > n ? lm.cost / static_cast<double>(m - n) : 0.0;
    if (m > n) s.covariance *= s.reduced_chi2;
    return s;
}

double log_param_sigma(const Solved& s, Eigen::Index k) {
    const double var = s.covariance(k, k);
    return std::exp(s.lm.params[k]) * std::sqrt(std::max(var, 0.0));
}

double lin_param_sigma(const Solved& s, Eigen::Index k) {
    return std::sqrt(std::max(s.covariance(k, k), 0.0));
}

template <std::size_t N, typename Model>
LmSolution two_pass_poisson_fit(const Model& model, std::span<const double> x,
                                std::span<const double> y, const Eigen::VectorXd& start) {
    std::vector<double> sigma = poisson_sigma(y);
    auto first = levenberg_marquardt(curve_residuals<N>(model, x, y, sigma), start);
    // Pearson weights from the first-pass model remove the low-count bias of
    // data-derived weights.
    std::array<double, N> p{};
    for (std::size_t k = 0; k < N; ++k) p[k] = first.params[static_cast<Eigen::Index>(k)];
    for (std::size_t i = 0; i < x.size(); ++i) sigma[i] = std::sqrt(std::max(model(p, x[i]), 1.0));
    auto second = levenberg_marquardt(curve_residuals<N>(model, x, y, sigma), first.params);
    second.iterations += first.iterations;
    return second;
}

}  // namespace

const FitParameter& FitResult::parameter(const std::string& name) const {
    for (const auto& p : parameters)
        if (p.name == name) return p;
    fail(ErrorCode::not_found, "fit result '" + model + "' has no parameter '" + name + "'");
}

// --- g2 --------------------------------------------------------------------------

FitResult fit_g2(const MeasurementRecord& record) {
    require(record.kind == MeasurementKind::g2, ErrorCode::precondition, "fit_g2 needs a g2 record");
    const auto& tau = record.abscissa;
    const auto& y = record.ordinate;
    require(tau.size() == y.size() && tau.size() >= 16, ErrorCode::precondition,
            "g2 record too short");
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    require(total > 0.0 && constant_model_reduced_chi2(y) > 1.5, ErrorCode::no_signal,
            "g2 histogram shows no correlation feature");

    const double tau_max = std::max(std::abs(tau.front()), std::abs(tau.back()));
    const std::size_t m = tau.size();

    // coincidence level from the flat wings
    double wing_sum = 0.0;
    int wing_n = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(tau[i]) >= 0.8 * tau_max) {
            wing_sum += y[i];
            ++wing_n;
        }
    }
    const double level = wing_n > 0 ? std::max(wing_sum / wing_n, 1e-3) : total / m;

    // folded, normalized deviation from 1, ordered by |tau|
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(tau[a]) < std::abs(tau[b]); });
    std::vector<double> t_fold(m);
    std::vector<double> dev(m);
    for (std::size_t k = 0; k < m; ++k) {
        t_fold[k] = std::abs(tau[order[k]]);
        dev[k] = y[order[k]] / level - 1.0;
    }

    // SNR from the depth at zero delay
    const std::size_t near = std::min<std::size_t>(4, m);
    double g0 = 0.0;
    for (std::size_t k = 0; k < near; ++k) g0 += 1.0 + dev[k];
    g0 /= static_cast<double>(near);
    const double contrast = std::clamp(1.0 - g0, 0.05, 0.995);
    const double snr0 = std::sqrt(contrast) / (1.0 - std::sqrt(contrast));

    // Gamma from the decay of the deviation envelope (suffix max of smoothed |dev|)
    std::vector<double> smooth(m);
    const std::size_t half_w = 4;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t lo = k >= half_w ? k - half_w : 0;
        const std::size_t hi = std::min(m - 1, k + half_w);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += dev[j];
        smooth[k] = std::abs(s / static_cast<double>(hi - lo + 1));
    }
    std::vector<double> suffix(m);
    double run = 0.0;
    for (std::size_t k = m; k-- > 0;) {
        run = std::max(run, smooth[k]);
        suffix[k] = run;
    }
    double t_e = tau_max;
    for (std::size_t k = 0; k < m; ++k) {
        if (suffix[k] <= suffix[0] * std::exp(-1.0)) {
            t_e = std::max(t_fold[k], 1e-3);
            break;
        }
    }
    const double gamma0 = std::clamp(1.0 / (0.75 * t_e), 0.01, 50.0);

    // Omega candidates: dominant nonzero frequency of the deviation plus a log grid.
    std::vector<double> omegas;
    {
        double best_p = -1.0;
        double best_w = 0.0;
        const double w_min = units::pi / tau_max;
        const double dt = 2.0 * tau_max / static_cast<double>(m);
        const double w_max = units::pi / dt;
        for (int i = 0; i < 400; ++i) {
            const double w = w_min * std::pow(w_max / w_min, i / 399.0);
            std::complex<double> acc{};
            for (std::size_t k = 0; k < m; ++k) acc += dev[k] * std::polar(1.0, -w * t_fold[k]);
            if (std::norm(acc) > best_p) {
                best_p = std::norm(acc);
                best_w = w;
            }
        }
        omegas.push_back(best_w);
        for (int i = 0; i < 60; ++i) omegas.push_back(0.03 * std::pow(40.0 / 0.03, i / 59.0));
    }

    const G2CurveModel model;
    std::vector<double> sigma0 = poisson_sigma(y);
    auto f0 = curve_residuals<4>(model, tau, y, sigma0);
    auto start_for = [&](double w) {
        Eigen::VectorXd p(4);
        p << std::log(w), std::log(gamma0), std::log(snr0), std::log(level);
        return p;
    };
    std::vector<std::pair<double, double>> scan;  // (cost, omega)
    for (double w : omegas) scan.emplace_back(objective_value(f0, start_for(w)), w);
    std::sort(scan.begin(), scan.end());

    LmSolution best;
    bool have = false;
    int total_iterations = 0;
    std::vector<double> tried;
    for (const auto& [cost, w] : scan) {
        if (tried.size() >= 3) break;
        const bool close = std::any_of(tried.begin(), tried.end(), [w = w](double t) {
            return std::abs(std::log(w / t)) < 0.15;
        });
        if (close) continue;
        tried.push_back(w);
        auto sol = two_pass_poisson_fit<4>(model, tau, y, start_for(w));
        total_iterations += sol.iterations;
        if (!have || sol.cost < best.cost) {
            best = sol;
            have = true;
        }
    }

    const Solved s = finish(best, m);
    FitResult r;
    r.model = "g2";
    r.parameters = {{"omega", std::exp(best.params[0]), log_param_sigma(s, 0)},
                    {"gamma", std::exp(best.params[1]), log_param_sigma(s, 1)},
                    {"snr", std::exp(best.params[2]), log_param_sigma(s, 2)},
                    {"norm", std::exp(best.params[3]), log_param_sigma(s, 3)}};
    r.residual_norm = std::sqrt(best.cost);
    r.reduced_chi2 = s.reduced_chi2;
    r.converged = best.converged;
    r.iterations = total_iterations;
    G2Model fitted{r.value("omega"), r.value("gamma"), r.value("snr")};
    if (fitted.overdamped()) r.warnings.emplace_back("overdamped branch");
    if (!r.converged) r.warnings.emplace_back("did not converge; parameters not authoritative");
    return r;
}

// --- Rabi scaling ----------------------------------------------------------------

FitResult fit_rabi_scaling(const std::vector<RabiPoint>& points) {
    require(!points.empty(), ErrorCode::rank, "Rabi scaling needs at least one point");
    for (const auto& p : points)
        require(p.power_uw > 0.0, ErrorCode::domain, "Rabi scaling powers must be positive");
    if (points.size() >= 2) {
        const bool distinct = std::any_of(points.begin(), points.end(), [&](const RabiPoint& p) {
            return p.power_uw != points.front().power_uw;
        });
        require(distinct, ErrorCode::rank, "Rabi scaling needs distinct powers");
    }
    const bool weighted =
        std::all_of(points.begin(), points.end(), [](const RabiPoint& p) { return p.sigma > 0.0; });

    double swp = 0.0;
    double swy = 0.0;
    for (const auto& p : points) {
        const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
        swp += w * p.power_uw;
        swy += w * std::sqrt(p.power_uw) * p.omega;
    }
    const double slope = swy / swp;
    double chi2 = 0.0;
    for (const auto& p : points) {
        const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
        const double d = p.omega - slope * std::sqrt(p.power_uw);
        chi2 += w * d * d;
    }
    double var = 1.0 / swp;
    const std::size_t n = points.size();
    double reduced = 0.0;
    if (n > 1) {
        reduced = chi2 / static_cast<double>(n - 1);
        var *= reduced;
    } else if (!weighted) {
        var = 0.0;
    }

    FitResult r;
    r.model = "rabi_scaling";
    r.parameters = {{"slope", slope, std::sqrt(var)}};
    r.residual_norm = std::sqrt(chi2);
    r.reduced_chi2 = reduced;
    r.converged = true;
    r.iterations = 1;
    return r;
}

// --- power broadening --------------------------------------------------------------

FitResult fit_linewidth_power(const std::vector<LinewidthPoint>& points) {
    require(points.size() >= 2, ErrorCode::rank, "linewidth fit needs at least two points");
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;
    for (const auto& p : points) {
        require(p.power_uw >= 0.0 && p.fwhm_mhz > 0.0, ErrorCode::domain,
                "linewidth points need P >= 0 and FWHM > 0");
        x.push_back(p.power_uw);
        y.push_back(p.fwhm_mhz);
        sigma.push_back(p.sigma_mhz);
    }
    const bool weighted =
        std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
    if (!weighted) std::fill(sigma.begin(), sigma.end(), 1.0);
    const bool distinct = std::any_of(x.begin(), x.end(), [&](double v) { return v != x.front(); });
    require(distinct, ErrorCode::rank, "linewidth fit needs distinct powers");

    // delta^2 = delta0^2 + (delta0^2 / P_sat) P is linear in P: use it to start.
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = 0.0;
    for (double v : y) my += v * v;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] * y[i] - my);
    }
    double b = sxy / sxx;
    double a = my - b * mx;
    if (!(a > 0.0) || !(b > 0.0)) {
        a = std::pow(*std::min_element(y.begin(), y.end()), 2);
        b = a / std::max(mx, 1e-6);
    }
    Eigen::VectorXd start(2);
    start << 0.5 * std::log(a), std::log(a / b);

    const PowerBroadeningModel model;
    const auto lm = levenberg_marquardt(curve_residuals<2>(model, x, y, sigma), start);
    const Solved s = finish(lm, x.size());

    FitResult r;
    r.model = "linewidth_power";
    const double p_sat = std::exp(lm.params[1]);
    r.parameters = {{"delta0", std::exp(lm.params[0]), log_param_sigma(s, 0)},
                    {"p_sat", p_sat, log_param_sigma(s, 1)}};
    r.residual_norm = std::sqrt(lm.cost);
    r.reduced_chi2 = s.reduced_chi2;
    r.converged = lm.converged;
    r.iterations = lm.iterations;
    const bool below = std::any_of(x.begin(), x.end(), [&](double v) { return v < p_sat; });
    const bool above = std::any_of(x.begin(), x.end(), [&](double v) { return v > p_sat; });
    if (points.size() < 3 || !below || !above)
        r.warnings.emplace_back("p_sat weakly constrained");
    if (!r.converged) r.warnings.emplace_back("did not converge; parameters not authoritative");
    return r;
}

// --- Lorentzian ------------------------------------------------------------------

FitResult fit_lorentzian(const MeasurementRecord& record) {
    require(record.kind == MeasurementKind::ple, ErrorCode::precondition,
            "fit_lorentzian needs a PLE record");
    const auto& x = record.abscissa;
    const auto& y = record.ordinate;
    require(x.size() == y.size() && x.size() >= 5, ErrorCode::precondition, "PLE record too short");
    require(constant_model_reduced_chi2(y) > 1.5, ErrorCode::no_signal, "PLE scan shows no line");

    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const double offset0 = sorted[sorted.size() / 5];
    const auto peak_it = std::max_element(y.begin(), y.end());
    const auto peak_i = static_cast<std::size_t>(peak_it - y.begin());
    const double amp0 = std::max(*peak_it - offset0, 1.0);
    std::size_t lo = peak_i;
    std::size_t hi = peak_i;
    while (lo > 0 && y[lo] - offset0 > amp0 / 2.0) --lo;
    while (hi + 1 < y.size() && y[hi] - offset0 > amp0 / 2.0) ++hi;
    const double step = std::abs(x.back() - x.front()) / static_cast<double>(x.size() - 1);
    const double width0 = std::max(std::abs(x[hi] - x[lo]), 2.0 * step);

    Eigen::VectorXd start(4);
    start << x[peak_i], std::log(width0), std::log(amp0), offset0;
    const LorentzianModel model;
    const auto lm = two_pass_poisson_fit<4>(model, x, y, start);
    const Solved s = finish(lm, x.size());

    FitResult r;
    r.model = "lorentzian";
    r.parameters = {{"center", lm.params[0], lin_param_sigma(s, 0)},
                    {"fwhm", std::exp(lm.params[1]), log_param_sigma(s, 1)},
                    {"amplitude", std::exp(lm.params[2]), log_param_sigma(s, 2)},
                    {"offset", lm.params[3], lin_param_sigma(s, 3)}};
    r.residual_norm = std::sqrt(lm.cost);
    r.reduced_chi2 = s.reduced_chi2;
    r.converged = lm.converged;
    r.iterations = lm.iterations;
    r.poor_fit = r.reduced_chi2 > lorentzian_poor_fit_threshold;
    if (r.poor_fit) r.warnings.emplace_back("poor residual; data may contain more than one line");
    if (!r.converged) r.warnings.emplace_back("did not converge; parameters not authoritative");
    return r;
}

// --- polarization ------------------------------------------------------------------

FitResult fit_polarization(const MeasurementRecord& record) {
    require(record.kind == MeasurementKind::polarization, ErrorCode::precondition,
            "fit_polarization needs a polarization record");
    const auto m = static_cast<Eigen::Index>(record.abscissa.size());
    require(m >= 4 && record.ordinate.size() == record.abscissa.size(), ErrorCode::precondition,
            "polarization fit needs >= 4 angles");

    // A cos^2(a - t) + B = (B + A/2) + (A/2) cos 2t cos 2a + (A/2) sin 2t sin 2a
    Eigen::MatrixXd design(m, 3);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double a2 = 2.0 * units::deg_to_rad(record.abscissa[ui]);
        const double w = 1.0 / std::sqrt(std::max(record.ordinate[ui], 1.0));
        design(i, 0) = w;
        design(i, 1) = w * std::cos(a2);
        design(i, 2) = w * std::sin(a2);
        rhs[i] = w * record.ordinate[ui];
    }
    const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd resid = design * c - rhs;
    const double chi2 = resid.squaredNorm();
    const double reduced = m > 3 ? chi2 / static_cast<double>(m - 3) : 0.0;
    const Eigen::MatrixXd cov = normal_covariance(design) * reduced;

    const double r2 = c[1] * c[1] + c[2] * c[2];
    const double amplitude = 2.0 * std::sqrt(r2);
    const double offset = c[0] - amplitude / 2.0;
    double sigma_amp = 0.0;
    double sigma_theta = 0.0;
    if (r2 > 0.0) {
        const double rr = std::sqrt(r2);
        const Eigen::Vector3d ga(0.0, 2.0 * c[1] / rr, 2.0 * c[2] / rr);
        const Eigen::Vector3d gt(0.0, -0.5 * c[2] / r2, 0.5 * c[1] / r2);
        sigma_amp = std::sqrt(std::max(ga.dot(cov * ga), 0.0));
        sigma_theta = units::rad_to_deg(std::sqrt(std::max(gt.dot(cov * gt), 0.0)));
    }
    const bool indeterminate =
        amplitude <= 1e-9 * std::max(std::abs(c[0]), 1.0) || amplitude < 3.0 * sigma_amp;
    require(!indeterminate, ErrorCode::indeterminate,
            "polarization fringe has no significant visibility; dipole angle indeterminate");

    const double theta = wrap_180(units::rad_to_deg(0.5 * std::atan2(c[2], c[1])));
    const double visibility = amplitude / (amplitude + offset);
    // d v / d A = B / (A + B)^2 with B = c0 - A/2 treated as independent of A
    const double sigma_v = sigma_amp * std::abs(offset) / std::pow(amplitude + offset, 2);

    FitResult r;
    r.model = "polarization";
    r.parameters = {{"theta", theta, sigma_theta},
                    {"visibility", visibility, sigma_v},
                    {"amplitude", amplitude, sigma_amp},
                    {"offset", offset, std::sqrt(std::max(cov(0, 0), 0.0))}};
    r.residual_norm = std::sqrt(chi2);
    r.reduced_chi2 = reduced;
    r.converged = true;
    r.iterations = 1;
    return r;
}

// --- cooperativity -----------------------------------------------------------------

CooperativityEstimate cooperativity_estimate(double delta_on, double sigma_on, double delta_off,
                                             double sigma_off) {
    require(delta_off > 0.0, ErrorCode::domain, "delta_off must be positive");
    require(sigma_on >= 0.0 && sigma_off >= 0.0, ErrorCode::domain, "uncertainties must be >= 0");
    CooperativityEstimate e;
    e.delta_on = delta_on;
    e.sigma_on = sigma_on;
    e.delta_off = delta_off;
    e.sigma_off = sigma_off;
    e.c = delta_on / delta_off - 1.0;
    const double a = sigma_on / delta_off;
    const double b = delta_on * sigma_off / (delta_off * delta_off);
    e.sigma_c = std::sqrt(a * a + b * b);
    e.gamma_added = delta_on - delta_off;
    e.negative_warning = e.c < 0.0;
    return e;
}

double g_from_cooperativity(double c, double kappa, double gamma) {
    require(c >= 0.0 && kappa > 0.0 && gamma > 0.0, ErrorCode::domain,
            "g from cooperativity needs C >= 0 and positive kappa, gamma");
    return std::sqrt(c * kappa * gamma / 4.0);
}

}  // namespace nanotwin
