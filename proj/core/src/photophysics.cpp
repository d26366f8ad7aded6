#include "nanotwin/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nanotwin/error.hpp"
#include "nanotwin/rng.hpp"
#include "nanotwin/units.hpp"

namespace nanotwin {
namespace {

double poisson_draw(Engine& engine, double mean) {
    if (mean <= 0.0) return 0.0;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<double>(dist(engine));
}

}  // namespace

double g2_theory(const G2Model& model, double tau_ns) {
    return g2_value(model.omega, model.gamma, model.snr, tau_ns);
}

double snr_for_g2_zero(double g2_zero) {
    require(g2_zero >= 0.0 && g2_zero < 1.0, ErrorCode::domain, "g2(0) must lie in [0, 1)");
    const double r = std::sqrt(1.0 - g2_zero);  // SNR / (SNR + 1)
    return r / (1.0 - r);
}

std::string to_string(MeasurementKind kind) {
    switch (kind) {
        case MeasurementKind::g2: return "g2";
        case MeasurementKind::ple: return "ple";
        case MeasurementKind::spectrum: return "spectrum";
        case MeasurementKind::polarization: return "polarization";
        case MeasurementKind::afm_pose: return "afm_pose";
    }
    return "unknown";
}

MeasurementKind measurement_kind_from_string(const std::string& s) {
    if (s == "g2") return MeasurementKind::g2;
    if (s == "ple") return MeasurementKind::ple;
    if (s == "spectrum") return MeasurementKind::spectrum;
    if (s == "polarization") return MeasurementKind::polarization;
    if (s == "afm_pose") return MeasurementKind::afm_pose;
    fail(ErrorCode::parse, "unknown measurement kind '" + s + "'");
}

CouplingReport CoupledSystem::report() const {
    return enhancement(field, calibration, pose, emitter, lambda_cav_nm);
}

double CoupledSystem::rabi_slope() const {
    return nanotwin::rabi_slope(field, calibration, pose, emitter);
}

double CoupledSystem::g2_gamma() const {
    return units::mhz_to_rad_per_ns(emitter.gamma_free_mhz) * (1.0 + report().cooperativity);
}

double CoupledSystem::zero_power_linewidth_mhz() const {
    return linewidth_on_resonance(emitter.delta_free_mhz, report().cooperativity);
}

MeasurementRecord simulate_g2_histogram(const G2Model& model, std::uint64_t total_pairs,
                                        std::uint64_t seed, const G2Settings& settings) {
    require(total_pairs > 0, ErrorCode::empty_record, "g2 acquisition with zero pairs");
    require(settings.bins >= 8 && settings.tau_max_ns > 0.0, ErrorCode::domain,
            "g2 histogram needs >= 8 bins and a positive delay range");

    MeasurementRecord rec;
    rec.kind = MeasurementKind::g2;
    rec.abscissa_unit = "ns";
    rec.ordinate_unit = "counts";
    const auto n = static_cast<std::size_t>(settings.bins);
    const double width = 2.0 * settings.tau_max_ns / static_cast<double>(n);
    rec.abscissa.resize(n);
    std::vector<double> expected(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = -settings.tau_max_ns + (static_cast<double>(i) + 0.5) * width;
        rec.abscissa[i] = tau;
        expected[i] = g2_theory(model, tau);
        sum += expected[i];
    }
    Engine engine = make_engine(seed);
    rec.ordinate.resize(n);
    const double scale = static_cast<double>(total_pairs) / sum;
    for (std::size_t i = 0; i < n; ++i) rec.ordinate[i] = poisson_draw(engine, expected[i] * scale);

    rec.settings.seed = seed;
    rec.ground_truth = {{"omega", model.omega},
                        {"gamma", model.gamma},
                        {"snr", model.snr},
                        {"pairs", static_cast<double>(total_pairs)},
                        {"coincidence_level", scale}};
    return rec;
}

MeasurementRecord simulate_g2(const CoupledSystem& system, double power_uw,
                              std::uint64_t total_pairs, std::uint64_t seed,
                              const G2Settings& settings) {
    require(power_uw > 0.0, ErrorCode::domain, "excitation power must be positive");
    G2Model model;
    model.omega = system.rabi_slope() * std::sqrt(power_uw);
    model.gamma = system.g2_gamma();
    model.snr = settings.snr;
    auto rec = simulate_g2_histogram(model, total_pairs, seed, settings);
    rec.settings.power_uw = power_uw;
    rec.ground_truth["rabi_slope"] = system.rabi_slope();
    return rec;
}

MeasurementRecord simulate_ple(const CoupledSystem& system, double power_uw, double scan_range_ghz,
                               int points, std::uint64_t seed, const PleSettings& settings) {
    require(power_uw > 0.0, ErrorCode::domain, "excitation power must be positive");
    require(points >= 5 && scan_range_ghz > 0.0, ErrorCode::domain,
            "PLE scan needs >= 5 points and a positive range");
    const double delta0 = system.zero_power_linewidth_mhz();
    const double sat = power_uw / system.emitter.p_sat_uw;
    const double fwhm = delta0 * std::sqrt(1.0 + sat);
    require(scan_range_ghz * 1e3 >= 2.0 * fwhm, ErrorCode::precondition,
            "PLE scan range does not cover the line");
    const double peak_cps = system.emitter.brightness_cps * sat / (1.0 + sat);

    MeasurementRecord rec;
    rec.kind = MeasurementKind::ple;
    rec.abscissa_unit = "MHz";
    rec.ordinate_unit = "counts";
    const double half = 0.5 * scan_range_ghz * 1e3;
    Engine engine = make_engine(seed);
    for (int i = 0; i < points; ++i) {
        const double nu = -half + 2.0 * half * i / (points - 1);
        const double x = 2.0 * nu / fwhm;
        const double rate = peak_cps / (1.0 + x * x) + settings.dark_cps;
        rec.abscissa.push_back(nu);
        rec.ordinate.push_back(poisson_draw(engine, rate * settings.dwell_s));
    }
    rec.settings = {power_uw, settings.dwell_s * points, seed};
    rec.ground_truth = {{"fwhm_mhz", fwhm},
                        {"delta0_mhz", delta0},
                        {"cooperativity", system.report().cooperativity},
                        {"peak_counts", peak_cps * settings.dwell_s}};
    return rec;
}

double voigt_profile(double x, double fl, double fg) {
    if (fg <= 0.0) return (fl / 2.0) / (units::pi * (x * x + fl * fl / 4.0));
    const double f = std::pow(std::pow(fg, 5) + 2.69269 * std::pow(fg, 4) * fl +
                                  2.42843 * std::pow(fg, 3) * fl * fl +
                                  4.47163 * fg * fg * std::pow(fl, 3) +
                                  0.07842 * fg * std::pow(fl, 4) + std::pow(fl, 5),
                              0.2);
    const double r = fl / f;
    const double eta = 1.36603 * r - 0.47719 * r * r + 0.11116 * r * r * r;
    const double lorentz = (f / 2.0) / (units::pi * (x * x + f * f / 4.0));
    const double ln2 = std::log(2.0);
    const double gauss = std::sqrt(4.0 * ln2 / units::pi) / f * std::exp(-4.0 * ln2 * x * x / (f * f));
    return eta * lorentz + (1.0 - eta) * gauss;
}

MeasurementRecord simulate_tuning_spectrum(const ModeField& field,
                                           const CouplingCalibration& calibration,
                                           const NanodiamondPose& pose,
                                           const std::vector<EmitterLine>& ensemble,
                                           const std::vector<TunerSample>& series,
                                           double resolution_ghz, std::uint64_t seed,
                                           const SpectrumSettings& settings) {
    require(!series.empty(), ErrorCode::domain, "tuning spectrum needs a tuner series");
    require(resolution_ghz > 0.0 && settings.bin_ghz > 0.0 &&
                settings.freq_max_ghz > settings.freq_min_ghz,
            ErrorCode::domain, "invalid spectrometer settings");
    const auto& mode = field.mode();
    const double nu_cav0 = units::frequency_ghz(mode.lambda_cav_nm);
    const auto nbins = static_cast<std::size_t>(
        std::ceil((settings.freq_max_ghz - settings.freq_min_ghz) / settings.bin_ghz));

    MeasurementRecord rec;
    rec.kind = MeasurementKind::spectrum;
    rec.abscissa_unit = "GHz";
    rec.ordinate_unit = "counts";
    rec.row_length = nbins;
    Engine engine = make_engine(seed);

    for (const auto& sample : series) {
        const double lambda_now = units::shift_wavelength(mode.lambda_cav_nm, -sample.offset_ghz);
        std::vector<double> rate(nbins, settings.dark_cps_per_bin);
        for (const auto& line : ensemble) {
            const double enh =
                enhancement(field, calibration, pose, line, lambda_now).total_enhancement;
            const double nu_line = units::frequency_ghz(line.zpl_wavelength_nm) - nu_cav0;
            const double fl = line.delta_free_mhz * 1e-3;
            for (std::size_t b = 0; b < nbins; ++b) {
                const double nu =
                    settings.freq_min_ghz + (static_cast<double>(b) + 0.5) * settings.bin_ghz;
                rate[b] += line.brightness_cps * enh *
                           voigt_profile(nu - nu_line, fl, resolution_ghz) * settings.bin_ghz;
            }
        }
        rec.frames.push_back(sample.time_s);
        for (std::size_t b = 0; b < nbins; ++b) {
            rec.abscissa.push_back(settings.freq_min_ghz +
                                   (static_cast<double>(b) + 0.5) * settings.bin_ghz);
            rec.ordinate.push_back(poisson_draw(engine, rate[b] * settings.exposure_s));
        }
    }
    rec.settings = {0.0, settings.exposure_s * static_cast<double>(series.size()), seed};
    rec.ground_truth = {{"resolution_ghz", resolution_ghz}};
    return rec;
}

MeasurementRecord simulate_polarization(const NanodiamondPose& pose, const EmitterLine& emitter,
                                        const std::vector<double>& angles_deg,
                                        double counts_scale, std::uint64_t seed) {
    std::vector<double> distinct = angles_deg;
    std::transform(distinct.begin(), distinct.end(), distinct.begin(), wrap_180);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    require(distinct.size() >= 4, ErrorCode::precondition,
            "polarization scan needs >= 4 distinct analyzer angles");
    require(counts_scale > 0.0, ErrorCode::domain, "counts scale must be positive");

    const double theta = lab_dipole_angle_deg(pose, emitter);
    const double v = emitter.polarization_visibility;
    MeasurementRecord rec;
    rec.kind = MeasurementKind::polarization;
    rec.abscissa_unit = "deg";
    rec.ordinate_unit = "counts";
    Engine engine = make_engine(seed);
    for (double a : angles_deg) {
        const double c = std::cos(units::deg_to_rad(a - theta));
        rec.abscissa.push_back(a);
        rec.ordinate.push_back(poisson_draw(engine, counts_scale * (v * c * c + 1.0 - v)));
    }
    rec.settings.seed = seed;
    rec.ground_truth = {{"theta_deg", theta}, {"visibility", v}};
    return rec;
}

}  // namespace nanotwin
