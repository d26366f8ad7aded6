#include "nanotwin/coupling.hpp"

#include <cmath>

#include "nanotwin/error.hpp"
#include "nanotwin/units.hpp"

namespace nanotwin {

double purcell_factor(double q, double v_in_lambda_cubed) {
    require(q > 0.0 && v_in_lambda_cubed > 0.0, ErrorCode::domain,
            "Purcell factor needs Q > 0 and V > 0");
    return 3.0 / (4.0 * units::pi * units::pi) * q / v_in_lambda_cubed;
}

double detuning_term(double lambda_emitter_nm, double lambda_cav_nm, double q) {
    require(lambda_emitter_nm > 0.0 && lambda_cav_nm > 0.0 && q > 0.0, ErrorCode::domain,
            "detuning term needs positive wavelengths and Q");
    const double r = lambda_emitter_nm / lambda_cav_nm - 1.0;
    return 1.0 / (1.0 + 4.0 * q * q * r * r);
}

double orientation_cosine(const CavityMode& mode, const NanodiamondPose& pose,
                          const EmitterLine& emitter) {
    return dot(lab_dipole(pose, emitter), unit_from_angles(mode.polarization_axis_deg));
}

double spatial_term(const ModeField& field, const NanodiamondPose& pose,
                    const EmitterLine& emitter) {
    const double e = field.field_at(pose.position).e_y;
    const double c = orientation_cosine(field.mode(), pose, emitter);
    const double xi = e * c * e * c;
    return std::min(xi, 1.0);
}

CouplingReport enhancement(const ModeField& field, const CouplingCalibration& calibration,
                           const NanodiamondPose& pose, const EmitterLine& emitter,
                           double lambda_cav_current_nm) {
    const auto& mode = field.mode();
    CouplingReport r;
    r.purcell_factor = purcell_factor(mode.q_factor, mode.mode_volume);
    r.detuning_term = detuning_term(emitter.zpl_wavelength_nm, lambda_cav_current_nm, mode.q_factor);
    r.spatial_term = spatial_term(field, pose, emitter);
    r.total_enhancement = r.purcell_factor * r.detuning_term * r.spatial_term;
    r.cooperativity = calibration.c_max * r.detuning_term * r.spatial_term;
    return r;
}

double linewidth_on_resonance(double delta_free_mhz, double c) {
    require(delta_free_mhz > 0.0 && c >= 0.0, ErrorCode::domain,
            "linewidth needs delta_free > 0 and C >= 0");
    return delta_free_mhz * (1.0 + c);
}

double rabi_slope(const ModeField& field, const CouplingCalibration& calibration,
                  const NanodiamondPose& pose, const EmitterLine& emitter) {
    const double e = field.field_at(pose.position).e_y;
    const double c = orientation_cosine(field.mode(), pose, emitter);
    return calibration.s_ref_ghz_per_sqrt_uw * std::abs(e) * std::abs(c) *
           std::sqrt(field.mode().transmission_factor);
}

double cavity_kappa_mhz(const CavityMode& mode) {
    return units::frequency_ghz(mode.lambda_cav_nm) * 1e3 / mode.q_factor;
}

CooperativityParams cooperativity_params(double c, double kappa_mhz, double gamma_mhz) {
    require(c >= 0.0 && kappa_mhz > 0.0 && gamma_mhz > 0.0, ErrorCode::domain,
            "cooperativity parameters must be positive");
    CooperativityParams p;
    p.c = c;
    p.kappa_mhz = kappa_mhz;
    p.gamma_mhz = gamma_mhz;
    p.g_mhz = std::sqrt(c * kappa_mhz * gamma_mhz / 4.0);
    p.gamma_added_mhz = c * gamma_mhz;
    return p;
}

double calibrate_slope_reference(const ModeField& field, const NanodiamondPose& pose,
                                 const EmitterLine& emitter, double target_slope) {
    CouplingCalibration unit;
    unit.s_ref_ghz_per_sqrt_uw = 1.0;
    const double s = rabi_slope(field, unit, pose, emitter);
    require(s > 0.0, ErrorCode::calibration, "calibration pose has no coupling");
    return target_slope / s;
}

double calibrate_c_max(const ModeField& field, const NanodiamondPose& pose,
                       const EmitterLine& emitter, double target_c) {
    const double xi = spatial_term(field, pose, emitter);
    require(xi > 0.0, ErrorCode::calibration, "calibration pose has no coupling");
    return target_c / xi;
}

}  // namespace nanotwin
