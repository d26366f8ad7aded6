#pragma once

// Parametric model of a 1D photonic crystal cavity mode: a Hermite-Gaussian
// envelope along the beam times a standing wave locked to the hole lattice,
// a Gaussian lateral profile and an evanescent decay above the surface.

#include <string>
#include <vector>

#include "nanotwin/geometry.hpp"

namespace nanotwin {

struct EnvelopeSpec {
    int node_count = 1;
    double width_sigma_nm = 2750.0;

    friend bool operator==(const EnvelopeSpec&, const EnvelopeSpec&) = default;
};

struct DeviceGeometry {
    double hole_spacing_nm = 250.0;
    double half_length_nm = 5000.0;   // modeled extent along the beam, |x| <= half_length
    double half_extent_y_nm = 1500.0; // modeled extent across the beam
    double beam_half_width_nm = 250.0;
    double z_decay_nm = 100.0;

    friend bool operator==(const DeviceGeometry&, const DeviceGeometry&) = default;
};

struct CavityMode {
    std::string label;
    double lambda_cav_nm = 730.0;
    double q_factor = 2200.0;
    double mode_volume = 5.8;  // in units of (lambda / n)^3
    double refractive_index = 2.0;
    DeviceGeometry geometry;
    EnvelopeSpec envelope;
    double standing_wave_phase_rad = 0.0;  // 0 puts antinodes midway between holes
    double polarization_axis_deg = 90.0;   // in-plane direction of E_y
    double transmission_factor = 1.0;

    friend bool operator==(const CavityMode&, const CavityMode&) = default;
};

/// Throws validation errors for violated CavityMode invariants.
void validate(const CavityMode& mode);

struct FieldSample {
    double e_y = 0.0;  // signed, |e_y| <= 1, 1 == |E_max|
    Vec3 position;
};

/// Envelope magnitude-normalized so that max |envelope| = 1.
double envelope_value(const EnvelopeSpec& spec, double x_nm);

/// A cavity mode together with its precomputed field normalization. Cheap to
/// copy and immutable, so it can be shared between threads.
class ModeField {
public:
    explicit ModeField(CavityMode mode);

    const CavityMode& mode() const noexcept { return mode_; }

    FieldSample field_at(const Vec3& position) const;
    double ldos_at(const Vec3& position) const;

    /// Unnormalized on-axis envelope times standing wave.
    double on_axis_raw(double x_nm) const;

    /// x (>= 0) of the global field magnitude maximum.
    double peak_position_nm() const noexcept { return peak_x_nm_; }

    /// Positions of the on-axis field maxima (|e_y| at z = 0, y = 0), both sides.
    std::vector<double> peak_positions_nm() const;

    bool in_extent(const Vec3& position) const noexcept;

private:
    CavityMode mode_;
    double norm_ = 1.0;
    double peak_x_nm_ = 0.0;
};

FieldSample field_at(const CavityMode& mode, const Vec3& position);
double ldos_at(const CavityMode& mode, const Vec3& position);

struct FieldMapRow {
    double x_nm;
    double e_y;
    double ldos;
};

/// On-axis (y = 0) field map sampled from x0 to x1 inclusive.
std::vector<FieldMapRow> field_map(const ModeField& field, double x0_nm, double x1_nm,
                                   double step_nm, double z_nm = 0.0);

// --- envelope calibration ---------------------------------------------------

enum class ConstraintKind {
    node_at,          // envelope vanishes at x (|env| <= 0.02)
    envelope_max_at,  // envelope magnitude is globally maximal at x
    peak_within,      // the on-axis field maximum (x >= 0 side) lies in [x, x_hi]
    node_within,      // some envelope zero crossing lies in [x, x_hi]
    ldos_greater,     // ldos(x) > ldos(x_hi)
};

struct EnvelopeConstraint {
    ConstraintKind kind;
    double x_nm = 0.0;
    double x_hi_nm = 0.0;
};

std::string describe(const EnvelopeConstraint& c);

/// Documented defaults: II -> one node, sigma = 11 a; III -> two nodes,
/// sigma = 10 a; any other label -> no node, sigma = 10 a.
EnvelopeSpec default_envelope(const std::string& mode_label, const DeviceGeometry& geometry);

/// Searches node counts 0..2 and widths 2a..30a (pitch a/100) for an envelope
/// satisfying every constraint. Among feasible candidates the label's default
/// node count wins, then the width closest to the default width.
EnvelopeSpec calibrate_envelope(const std::string& mode_label, const DeviceGeometry& geometry,
                                const std::vector<EnvelopeConstraint>& constraints);

}  // namespace nanotwin
