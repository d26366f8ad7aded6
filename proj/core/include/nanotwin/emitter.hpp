#pragma once

#include <string>
#include <vector>

#include "nanotwin/geometry.hpp"

namespace nanotwin {

/// One optical transition of a colour centre inside the nanodiamond.
struct EmitterLine {
    std::string name = "line";
    double zpl_wavelength_nm = 736.05;
    double delta_free_mhz = 142.0;  // zero-power FWHM without cavity coupling
    double gamma_free_mhz = 142.0;  // free-space decay rate expressed as a FWHM
    Vec3 dipole_body{0.0, 1.0, 0.0};
    double p_sat_uw = 1.0;
    double brightness_cps = 50'000.0;  // detected counts/s at saturation
    double polarization_visibility = 0.9;
    bool isolated = false;

    friend bool operator==(const EmitterLine&, const EmitterLine&) = default;
};

/// Position of the emitter-carrying point of the nanodiamond (nm, relative to
/// the cavity centre; z is the height above the surface) and its in-plane
/// rotation in degrees, normalized to [0, 360).
struct NanodiamondPose {
    Vec3 position{0.0, 0.0, 50.0};
    double rotation_deg = 0.0;

    friend bool operator==(const NanodiamondPose&, const NanodiamondPose&) = default;
};

struct Nanodiamond {
    NanodiamondPose pose;
    std::vector<EmitterLine> emitters;

    /// The single line flagged as isolated. Throws if the flag count is not one.
    const EmitterLine& isolated() const;

    friend bool operator==(const Nanodiamond&, const Nanodiamond&) = default;
};

void validate(const EmitterLine& line);
void validate(const Nanodiamond& nd);

/// Body-frame dipole rotated into the lab frame by the pose.
Vec3 lab_dipole(const NanodiamondPose& pose, const EmitterLine& emitter);

/// In-plane angle of the lab dipole in [0, 180).
double lab_dipole_angle_deg(const NanodiamondPose& pose, const EmitterLine& emitter);

}  // namespace nanotwin
