#pragma once

// Emission enhancement of a dipole coupled to one cavity mode, split into the
// Purcell factor, the spectral (detuning) overlap and the spatial/orientation
// overlap, plus the cooperativity relations used to interpret linewidths.

#include "nanotwin/emitter.hpp"
#include "nanotwin/field_model.hpp"

namespace nanotwin {

/// Per-mode constants that fold in everything the field model does not
/// describe (Debye-Waller factor, quantum efficiency, in-coupling losses).
struct CouplingCalibration {
    double c_max = 1.0;  // cooperativity at unit spatial and detuning terms
    double s_ref_ghz_per_sqrt_uw = 1.0;  // Rabi slope at |e_y| = 1, aligned dipole, T = 1

    friend bool operator==(const CouplingCalibration&, const CouplingCalibration&) = default;
};

struct CouplingReport {
    double purcell_factor = 0.0;
    double detuning_term = 0.0;
    double spatial_term = 0.0;
    double total_enhancement = 0.0;
    double cooperativity = 0.0;
};

struct CooperativityParams {
    double g_mhz = 0.0;
    double kappa_mhz = 0.0;
    double gamma_mhz = 0.0;
    double c = 0.0;
    double gamma_added_mhz = 0.0;  // delta_on - delta_off
};

/// (3 / 4 pi^2) Q / V with V in units of (lambda/n)^3.
double purcell_factor(double q, double v_in_lambda_cubed);

/// Lorentzian spectral overlap 1 / (1 + 4 Q^2 (lambda_emitter / lambda_cav - 1)^2).
double detuning_term(double lambda_emitter_nm, double lambda_cav_nm, double q);

/// Cosine of the angle between the lab-frame dipole and the mode polarization axis.
double orientation_cosine(const CavityMode& mode, const NanodiamondPose& pose,
                          const EmitterLine& emitter);

/// (e_y(r) cos theta)^2, in [0, 1].
double spatial_term(const ModeField& field, const NanodiamondPose& pose,
                    const EmitterLine& emitter);

CouplingReport enhancement(const ModeField& field, const CouplingCalibration& calibration,
                           const NanodiamondPose& pose, const EmitterLine& emitter,
                           double lambda_cav_current_nm);

/// Zero-power linewidth of the coupled line: delta_free (1 + C).
double linewidth_on_resonance(double delta_free_mhz, double c);

/// Rabi-frequency scaling in GHz / sqrt(uW):
/// s_ref |e_y| |cos theta| sqrt(transmission).
double rabi_slope(const ModeField& field, const CouplingCalibration& calibration,
                  const NanodiamondPose& pose, const EmitterLine& emitter);

/// Cavity decay rate nu / Q as an ordinary-frequency FWHM in MHz.
double cavity_kappa_mhz(const CavityMode& mode);

/// Derives g, kappa and gamma from a measured cooperativity, C = 4 g^2 / (kappa gamma).
CooperativityParams cooperativity_params(double c, double kappa_mhz, double gamma_mhz);

/// s_ref that makes `pose` produce `target_slope`.
double calibrate_slope_reference(const ModeField& field, const NanodiamondPose& pose,
                                 const EmitterLine& emitter, double target_slope);

/// c_max that makes `pose` produce cooperativity `target_c` on resonance.
double calibrate_c_max(const ModeField& field, const NanodiamondPose& pose,
                       const EmitterLine& emitter, double target_c);

}  // namespace nanotwin
