#pragma once

#include <cmath>

#include "nanotwin/units.hpp"

namespace nanotwin {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Rotation about the surface normal (z) by `deg` degrees.
inline Vec3 rotate_in_plane(const Vec3& v, double deg) {
    const double r = units::deg_to_rad(deg);
    const double c = std::cos(r);
    const double s = std::sin(r);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/// Unit vector with in-plane angle `azimuth_deg` (from +x) tilted out of plane by `tilt_deg`.
inline Vec3 unit_from_angles(double azimuth_deg, double tilt_deg = 0.0) {
    const double a = units::deg_to_rad(azimuth_deg);
    const double t = units::deg_to_rad(tilt_deg);
    return {std::cos(t) * std::cos(a), std::cos(t) * std::sin(a), std::sin(t)};
}

/// Wraps an angle into [0, 360).
inline double wrap_360(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    return r == 360.0 ? 0.0 : r;
}

/// Wraps an angle into [0, 180); polarization axes are only defined modulo 180 degrees.
inline double wrap_180(double deg) {
    double r = std::fmod(deg, 180.0);
    if (r < 0.0) r += 180.0;
    return r == 180.0 ? 0.0 : r;
}

/// Signed smallest rotation (in (-90, 90]) taking axis `from_deg` onto axis `to_deg`.
inline double axis_difference(double from_deg, double to_deg) {
    double d = wrap_180(to_deg - from_deg);
    if (d > 90.0) d -= 180.0;
    return d;
}

}  // namespace nanotwin
