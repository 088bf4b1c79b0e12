#pragma once

#include <cmath>
#include <string>

#include "hypfed/errors.hpp"

namespace hypfed {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Curvature magnitude of the disc (the manifold has curvature -k) together
// with the derived scale s = 1/sqrt(k) that the radius formulas use.
struct Curvature {
    double k;
    double s;

    explicit Curvature(double k_ = 1.0) : k(k_), s(0.0) {
        if (!(k > 0.0) || !std::isfinite(k)) {
            throw DomainError("curvature magnitude must be positive and finite, got " + std::to_string(k_));
        }
        s = 1.0 / std::sqrt(k);
    }
};

struct DiscPoint {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const DiscPoint& a, const DiscPoint& b) { return a.x == b.x && a.y == b.y; }
inline bool operator!=(const DiscPoint& a, const DiscPoint& b) { return !(a == b); }

// Tangent vector v at a base point; dir holds the plane components.
struct TangentVector {
    DiscPoint base;
    double dx = 0.0;
    double dy = 0.0;

    double norm() const { return std::hypot(dx, dy); }
};

inline double dot(const DiscPoint& a, const DiscPoint& b) { return a.x * b.x + a.y * b.y; }
inline double norm2(const DiscPoint& a) { return a.x * a.x + a.y * a.y; }
inline double norm(const DiscPoint& a) { return std::hypot(a.x, a.y); }
inline DiscPoint neg(const DiscPoint& a) { return {-a.x, -a.y}; }

// Points with k*|x|^2 > 1 - 1e-12 are rejected: beyond that the atanh terms
// blow up and every downstream computation loses all precision.
inline void check_in_disc(const DiscPoint& p, const Curvature& c, const char* who) {
    const double kn2 = c.k * norm2(p);
    if (!std::isfinite(kn2) || kn2 > 1.0 - 1e-12) {
        throw DomainError(std::string(who) + ": point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside the open disc for k=" + std::to_string(c.k));
    }
}

// Mobius addition. Not commutative and not associative; the identities that
// do hold (left inverse, left cancellation) are exercised by the tests.
inline DiscPoint mobius_add(const DiscPoint& x, const DiscPoint& y, const Curvature& c) {
    check_in_disc(x, c, "mobius_add");
    check_in_disc(y, c, "mobius_add");
    // Inverse identity: (-y) + y = 0 exactly. The general formula leaves a
    // one-ulp residue here because the two coefficients round differently.
    if (x.x == -y.x && x.y == -y.y) return {0.0, 0.0};
    const double k = c.k;
    const double xy = dot(x, y);
    const double xx = norm2(x);
    const double yy = norm2(y);
    const double cx = 1.0 + 2.0 * k * xy + k * yy;
    const double cy = 1.0 - k * xx;
    const double den = 1.0 + 2.0 * k * xy + k * k * xx * yy;
    return {(cx * x.x + cy * y.x) / den, (cx * x.y + cy * y.y) / den};
}

inline double dist(const DiscPoint& x, const DiscPoint& y, const Curvature& c) {
    const DiscPoint u = mobius_add(neg(x), y, c);
    const double sk = std::sqrt(c.k);
    return (2.0 / sk) * std::atanh(std::fmin(sk * norm(u), 1.0 - 1e-16));
}

inline TangentVector log_map(const DiscPoint& p, const DiscPoint& x, const Curvature& c) {
    check_in_disc(p, c, "log_map");
    check_in_disc(x, c, "log_map");
    const DiscPoint u = mobius_add(neg(p), x, c);
    const double un = norm(u);
    const double sk = std::sqrt(c.k);
    const double lead = (1.0 - c.k * norm2(p)) / sk;
    // x == p is the defined limit: atanh(sk*t)/t -> sk as t -> 0.
    double factor;
    if (un < 1e-15) {
        factor = lead * sk;
    } else {
        factor = lead * std::atanh(std::fmin(sk * un, 1.0 - 1e-16)) / un;
    }
    return {p, factor * u.x, factor * u.y};
}

inline DiscPoint exp_map(const DiscPoint& p, const TangentVector& v, const Curvature& c) {
    check_in_disc(p, c, "exp_map");
    const double vn = v.norm();
    if (vn == 0.0) return p;
    const double sk = std::sqrt(c.k);
    const double scale = std::tanh(sk * vn / (1.0 - c.k * norm2(p))) / (sk * vn);
    return mobius_add(p, {scale * v.dx, scale * v.dy}, c);
}

inline DiscPoint geodesic_midpoint(const DiscPoint& x, const DiscPoint& y, const Curvature& c) {
    if (x == y) return x;
    TangentVector v = log_map(x, y, c);
    v.dx *= 0.5;
    v.dy *= 0.5;
    return exp_map(x, v, c);
}

// Euclidean radius R <-> hyperbolic radius R_H about the origin.
inline double hyp_radius(double R, double s) {
    if (!(R >= 0.0) || R >= s) {
        throw DomainError("hyp_radius: need 0 <= R < s, got R=" + std::to_string(R) + ", s=" + std::to_string(s));
    }
    return s * std::log((s + R) / (s - R));
}

inline double euc_radius(double R_H, double s) {
    if (!(R_H >= 0.0)) {
        throw DomainError("euc_radius: need R_H >= 0, got " + std::to_string(R_H));
    }
    const double e = std::exp(R_H / s);
    return s * (e - 1.0) / (e + 1.0);
}

// Circumference of the hyperbolic circle of radius r_H about the origin.
inline double circumference(double r_H, double s) {
    if (!(r_H >= 0.0)) {
        throw DomainError("circumference: need r_H >= 0, got " + std::to_string(r_H));
    }
    return kTwoPi * s * std::sinh(r_H / s);
}

// Hyperbolic area of the disc of radius r_H about the origin.
inline double disc_area(double r_H, double s) {
    const double sh = std::sinh(r_H / (2.0 * s));
    return 4.0 * kPi * s * s * sh * sh;
}

} // namespace hypfed
