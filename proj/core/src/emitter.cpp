#include "nanotwin/emitter.hpp"

#include <cmath>

#include "nanotwin/error.hpp"

namespace nanotwin {

const EmitterLine& Nanodiamond::isolated() const {
    const EmitterLine* found = nullptr;
    for (const auto& e : emitters) {
        if (!e.isolated) continue;
        require(found == nullptr, ErrorCode::validation, "more than one emitter flagged isolated");
        found = &e;
    }
    require(found != nullptr, ErrorCode::validation, "no emitter flagged isolated");
    return *found;
}

void validate(const EmitterLine& line) {
    auto check = [&](bool ok, const std::string& field) {
        require(ok, ErrorCode::validation, "emitter '" + line.name + "': invalid " + field);
    };
    check(line.zpl_wavelength_nm > 0.0, "zpl_wavelength_nm");
    check(line.delta_free_mhz > 0.0, "delta_free_mhz");
    check(line.gamma_free_mhz > 0.0, "gamma_free_mhz");
    check(line.p_sat_uw > 0.0, "p_sat_uw");
    check(line.brightness_cps >= 0.0, "brightness_cps");
    check(line.polarization_visibility >= 0.0 && line.polarization_visibility <= 1.0,
          "polarization_visibility");
    check(std::abs(norm(line.dipole_body) - 1.0) < 1e-9, "dipole_body (must be a unit vector)");
}

void validate(const Nanodiamond& nd) {
    require(nd.pose.position.z >= 0.0, ErrorCode::validation, "pose z must be >= 0");
    require(nd.pose.rotation_deg >= 0.0 && nd.pose.rotation_deg < 360.0, ErrorCode::validation,
            "pose rotation must lie in [0, 360)");
    for (const auto& e : nd.emitters) validate(e);
    (void)nd.isolated();
}

Vec3 lab_dipole(const NanodiamondPose& pose, const EmitterLine& emitter) {
    return rotate_in_plane(emitter.dipole_body, pose.rotation_deg);
}

double lab_dipole_angle_deg(const NanodiamondPose& pose, const EmitterLine& emitter) {
    const Vec3 d = lab_dipole(pose, emitter);
    return wrap_180(units::rad_to_deg(std::atan2(d.y, d.x)));
}

}  // namespace nanotwin
