#pragma once

// Inverse problems: recover physical parameters from simulated (or real)
// measurement records and propagate uncertainties to the cooperativity.

#include <string>
#include <vector>

#include "nanotwin/photophysics.hpp"

namespace nanotwin {

struct FitParameter {
    std::string name;
    double value = 0.0;
    double sigma = 0.0;  // symmetric 1-sigma

    friend bool operator==(const FitParameter&, const FitParameter&) = default;
};

struct FitResult {
    std::string model;
    std::vector<FitParameter> parameters;
    double residual_norm = 0.0;  // sqrt of the weighted chi^2
    double reduced_chi2 = 0.0;
    bool converged = false;  // false => parameters are not authoritative
    bool poor_fit = false;
    int iterations = 0;
    std::vector<std::string> warnings;

    const FitParameter& parameter(const std::string& name) const;
    double value(const std::string& name) const { return parameter(name).value; }
    double sigma(const std::string& name) const { return parameter(name).sigma; }

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Damped Rabi-oscillation fit to a coincidence histogram. Returns omega and gamma (rad/ns),
/// snr and the coincidence level `norm`.
FitResult fit_g2(const MeasurementRecord& record);

struct RabiPoint {
    double power_uw;
    double omega;
    double sigma;
};

/// Weighted fit of omega = s sqrt(P) through the origin; returns `slope`.
FitResult fit_rabi_scaling(const std::vector<RabiPoint>& points);

struct LinewidthPoint {
    double power_uw;
    double fwhm_mhz;
    double sigma_mhz;
};

/// Fit of delta = delta0 sqrt(1 + P / P_sat); returns `delta0` and `p_sat`.
FitResult fit_linewidth_power(const std::vector<LinewidthPoint>& points);

/// Lorentzian plus constant; returns `center`, `fwhm`, `amplitude`, `offset`
/// in the record's units.
FitResult fit_lorentzian(const MeasurementRecord& record);

/// Reduced chi^2 above which a Lorentzian fit is flagged poor.
inline constexpr double lorentzian_poor_fit_threshold = 3.0;

/// v cos^2(alpha - theta) + offset; returns `theta` (deg, in [0, 180)),
/// `visibility`, `amplitude` and `offset`.
FitResult fit_polarization(const MeasurementRecord& record);

struct CooperativityEstimate {
    double c = 0.0;
    double sigma_c = 0.0;
    double delta_on = 0.0;
    double sigma_on = 0.0;
    double delta_off = 0.0;
    double sigma_off = 0.0;
    double gamma_added = 0.0;  // delta_on - delta_off
    bool negative_warning = false;

    friend bool operator==(const CooperativityEstimate&, const CooperativityEstimate&) = default;
};

/// C = delta_on / delta_off - 1 with first-order error propagation.
CooperativityEstimate cooperativity_estimate(double delta_on, double sigma_on, double delta_off,
                                             double sigma_off);

/// Single-photon Rabi frequency g = sqrt(C kappa gamma / 4), same units as the inputs.
double g_from_cooperativity(double c, double kappa, double gamma);

}  // namespace nanotwin
