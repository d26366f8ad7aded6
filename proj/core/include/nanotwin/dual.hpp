#pragma once

// Forward-mode dual numbers with a fixed number of tangent directions. The
// fit models are written once as templates over the scalar type and
// differentiated exactly by instantiating them with Dual<N>.

#include <array>
#include <cmath>
#include <cstddef>

namespace nanotwin {

template <std::size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: implicit promotion of constants

    static Dual variable(double value, std::size_t index) {
        Dual x(value);
        x.d[index] = 1.0;
        return x;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
        v *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend Dual operator-(Dual a) {
        a.v = -a.v;
        for (auto& x : a.d) x = -x;
        return a;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
};

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double value, double slope) {
    Dual<N> r(value);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * x.d[i];
    return r;
}
}  // namespace detail

template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
    const double e = std::exp(x.v);
    return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
    const double s = std::sqrt(x.v);
    return detail::chain(x, s, 0.5 / s);
}
template <std::size_t N>
Dual<N> sin(const Dual<N>& x) {
    return detail::chain(x, std::sin(x.v), std::cos(x.v));
}
template <std::size_t N>
Dual<N> cos(const Dual<N>& x) {
    return detail::chain(x, std::cos(x.v), -std::sin(x.v));
}
template <std::size_t N>
Dual<N> sinh(const Dual<N>& x) {
    return detail::chain(x, std::sinh(x.v), std::cosh(x.v));
}
template <std::size_t N>
Dual<N> cosh(const Dual<N>& x) {
    return detail::chain(x, std::cosh(x.v), std::sinh(x.v));
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) {
    return x.v;
}

}  // namespace nanotwin
