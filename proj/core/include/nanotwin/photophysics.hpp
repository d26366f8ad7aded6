#pragma once

// Forward models for every measurement the lab produces. Each simulation is
// a pure function of its inputs and a seed; batch helpers derive one
// sub-seed per point with split_seed(seed, index).

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nanotwin/coupling.hpp"
#include "nanotwin/dual.hpp"
#include "nanotwin/emitter.hpp"
#include "nanotwin/field_model.hpp"

namespace nanotwin {

// --- second-order correlation --------------------------------------------------

/// Parameters of the resonance-fluorescence g2 model. Rates are angular (rad/ns).
struct G2Model {
    double omega = 1.0;
    double gamma = 1.0;
    double snr = 18.5;

    /// Omega_d^2 = Omega^2 - (Gamma/4)^2; negative on the overdamped branch.
    double omega_d_squared() const { return omega * omega - gamma * gamma / 16.0; }
    bool overdamped() const { return omega_d_squared() < 0.0; }
    /// |Omega_d|.
    double omega_d() const { return std::sqrt(std::abs(omega_d_squared())); }
};

/// cos(w t) and sin(w t)/w for w^2 = s, continued to cosh/sinh for s < 0 and
/// evaluated by power series near s = 0 so the critical point is exact.
template <typename T>
void damped_oscillation(const T& s, double t, T& c, T& sinc_t) {
    const T x = s * t * t;
    if (std::abs(value_of(x)) < 1e-3) {
        T term_c(1.0);
        T term_s(1.0);
        c = term_c;
        T acc_s = term_s;
        for (int k = 1; k <= 6; ++k) {
            term_c = term_c * (-x) / T(double((2 * k - 1) * (2 * k)));
            term_s = term_s * (-x) / T(double((2 * k) * (2 * k + 1)));
            c += term_c;
            acc_s += term_s;
        }
        sinc_t = acc_s * T(t);
        return;
    }
    using std::cos, std::cosh, std::sin, std::sinh, std::sqrt;
    if (value_of(s) > 0.0) {
        const T w = sqrt(s);
        c = cos(w * T(t));
        sinc_t = sin(w * T(t)) / w;
    } else {
        const T w = sqrt(-s);
        c = cosh(w * T(t));
        sinc_t = sinh(w * T(t)) / w;
    }
}

template <typename T>
T g2_value(const T& omega, const T& gamma, const T& snr, double tau_ns) {
    using std::exp;
    const double t = std::abs(tau_ns);
    const T s = omega * omega - gamma * gamma / T(16.0);
    T c;
    T sinc_t;
    damped_oscillation(s, t, c, sinc_t);
    const T ratio = snr / (snr + T(1.0));
    return T(1.0) - ratio * ratio * exp(T(-0.75 * t) * gamma) * (c + T(0.75) * gamma * sinc_t);
}

double g2_theory(const G2Model& model, double tau_ns);

/// SNR giving a requested g2(0) = 1 - (SNR / (SNR + 1))^2.
double snr_for_g2_zero(double g2_zero);

// --- records ----------------------------------------------------------------------

enum class MeasurementKind { g2, ple, spectrum, polarization, afm_pose };

std::string to_string(MeasurementKind kind);
MeasurementKind measurement_kind_from_string(const std::string& s);

struct AcquisitionSettings {
    double power_uw = 0.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const AcquisitionSettings&, const AcquisitionSettings&) = default;
};

struct MeasurementRecord {
    MeasurementKind kind = MeasurementKind::g2;
    std::string abscissa_unit;
    std::string ordinate_unit;
    std::vector<double> abscissa;
    std::vector<double> ordinate;
    // Time-resolved spectra are stored row-major: frames[i] is the time of row i
    // and every row holds row_length cells.
    std::vector<double> frames;
    std::size_t row_length = 0;
    AcquisitionSettings settings;
    double timestamp_s = 0.0;
    std::map<std::string, double> ground_truth;

    friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// Everything needed to evaluate the coupling of one line to one mode.
struct CoupledSystem {
    ModeField field;
    CouplingCalibration calibration;
    NanodiamondPose pose;
    EmitterLine emitter;
    double lambda_cav_nm;  // current (tuned) resonance wavelength

    CouplingReport report() const;
    double rabi_slope() const;
    /// Decay rate entering g2: gamma_free (1 + C), angular, rad/ns.
    double g2_gamma() const;
    /// Zero-power linewidth delta_free (1 + C) in MHz.
    double zero_power_linewidth_mhz() const;
};

struct G2Settings {
    int bins = 1024;
    double tau_max_ns = 10.0;
    double snr = 18.5;
};

/// Poisson-sampled coincidence histogram whose expectation is proportional
/// to g2(tau) at the bin centres and sums to total_pairs.
MeasurementRecord simulate_g2_histogram(const G2Model& model, std::uint64_t total_pairs,
                                        std::uint64_t seed, const G2Settings& settings = {});

MeasurementRecord simulate_g2(const CoupledSystem& system, double power_uw,
                              std::uint64_t total_pairs, std::uint64_t seed,
                              const G2Settings& settings = {});

struct PleSettings {
    double dwell_s = 0.05;
    double dark_cps = 200.0;
};

/// Lorentzian excitation scan, abscissa = laser detuning from the ZPL in MHz.
MeasurementRecord simulate_ple(const CoupledSystem& system, double power_uw, double scan_range_ghz,
                               int points, std::uint64_t seed, const PleSettings& settings = {});

struct SpectrumSettings {
    double freq_min_ghz = -120.0;  // relative to the nominal cavity frequency
    double freq_max_ghz = 40.0;
    double bin_ghz = 1.0;
    double exposure_s = 1.0;
    double dark_cps_per_bin = 2.0;
};

struct TunerSample {
    double time_s;
    double offset_ghz;  // red shift of the cavity from its nominal frequency
};

/// Time-frequency map of cavity-coupled emission of an ensemble while the cavity is gas tuned.
MeasurementRecord simulate_tuning_spectrum(const ModeField& field,
                                           const CouplingCalibration& calibration,
                                           const NanodiamondPose& pose,
                                           const std::vector<EmitterLine>& ensemble,
                                           const std::vector<TunerSample>& series,
                                           double resolution_ghz, std::uint64_t seed,
                                           const SpectrumSettings& settings = {});

/// Normalized pseudo-Voigt (Lorentzian FWHM fl convolved with Gaussian FWHM fg).
double voigt_profile(double x, double fwhm_lorentz, double fwhm_gauss);

/// Analyzer scan: expected counts = scale (v cos^2(alpha - theta) + 1 - v).
MeasurementRecord simulate_polarization(const NanodiamondPose& pose, const EmitterLine& emitter,
                                        const std::vector<double>& angles_deg,
                                        double counts_scale, std::uint64_t seed);

}  // namespace nanotwin
