#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"
#include "hypfed/hull.hpp"
#include "hypfed/rng.hpp"

namespace hypfed {

enum class GridMode { distance_margin, equal_area };

// Polar grid over the disc of Euclidean radius R: N_theta angular sectors of
// equal width, N_rh radial rings. In distance_margin mode ring boundaries
// are equally spaced in hyperbolic radius and the bin counts guarantee that
// two points sharing a bin are at most epsilon apart; in equal_area mode the
// boundaries equalize hyperbolic bin areas instead (epsilon is not a margin
// there and is stored as 0).
struct QuantGrid {
    double epsilon = 0.0;
    double R = 0.0;
    double R_H = 0.0;
    Curvature k{1.0};
    std::int64_t N_theta = 1;
    std::int64_t N_rh = 1;
    GridMode mode = GridMode::distance_margin;

    std::int64_t bins() const { return N_theta * N_rh; }
};

struct BinIndex {
    std::int64_t n1 = 1; // angular, in [1, N_theta]
    std::int64_t n2 = 1; // radial, in [1, N_rh]
    std::int64_t linear = 1; // (n2 - 1) * N_theta + n1
};

inline bool operator==(const BinIndex& a, const BinIndex& b) { return a.linear == b.linear; }

inline BinIndex bin_from_parts(std::int64_t n1, std::int64_t n2, const QuantGrid& grid) {
    if (n1 < 1 || n1 > grid.N_theta || n2 < 1 || n2 > grid.N_rh) {
        throw InvalidInputError("bin_from_parts: (" + std::to_string(n1) + ", " + std::to_string(n2) +
                                ") outside grid " + std::to_string(grid.N_theta) + "x" + std::to_string(grid.N_rh));
    }
    return BinIndex{n1, n2, (n2 - 1) * grid.N_theta + n1};
}

inline BinIndex bin_from_linear(std::int64_t linear, const QuantGrid& grid) {
    if (linear < 1 || linear > grid.bins()) {
        throw InvalidInputError("bin_from_linear: index " + std::to_string(linear) + " outside [1, " +
                                std::to_string(grid.bins()) + "]");
    }
    const std::int64_t n2 = (linear - 1) / grid.N_theta + 1;
    const std::int64_t n1 = linear - (n2 - 1) * grid.N_theta;
    return BinIndex{n1, n2, linear};
}

inline QuantGrid build_grid(double epsilon, double R, const Curvature& k) {
    if (!(epsilon > 0.0)) {
        throw DomainError("build_grid: epsilon must be positive, got " + std::to_string(epsilon));
    }
    if (!(R > 0.0) || R >= k.s) {
        throw DomainError("build_grid: need 0 < R < s, got R=" + std::to_string(R));
    }
    QuantGrid g;
    g.epsilon = epsilon;
    g.R = R;
    g.R_H = hyp_radius(R, k.s);
    g.k = k;
    g.mode = GridMode::distance_margin;
    // The per-axis extents must stay below epsilon/2, hence the ceilings;
    // enormous epsilon degenerates to a single bin per axis.
    g.N_theta = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2.0 * circumference(g.R_H, k.s) / epsilon)));
    g.N_rh = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2.0 * g.R_H / epsilon)));
    return g;
}

inline QuantGrid build_equal_area_grid(std::int64_t N_theta, std::int64_t N_rh, double R, const Curvature& k) {
    if (N_theta < 1 || N_rh < 1) {
        throw DomainError("build_equal_area_grid: bin counts must be positive");
    }
    if (!(R > 0.0) || R >= k.s) {
        throw DomainError("build_equal_area_grid: need 0 < R < s, got R=" + std::to_string(R));
    }
    QuantGrid g;
    g.epsilon = 0.0;
    g.R = R;
    g.R_H = hyp_radius(R, k.s);
    g.k = k;
    g.N_theta = N_theta;
    g.N_rh = N_rh;
    g.mode = GridMode::equal_area;
    return g;
}

namespace detail {

// Outer radial boundary of ring n2 (h_0 = 0, h_{N_rh} = R_H in both modes).
inline double radial_boundary(const QuantGrid& g, std::int64_t n2) {
    if (n2 <= 0) return 0.0;
    if (n2 >= g.N_rh) return g.R_H;
    if (g.mode == GridMode::distance_margin) {
        return static_cast<double>(n2) / static_cast<double>(g.N_rh) * g.R_H;
    }
    const double s = g.k.s;
    return 2.0 * s * std::asinh(std::sqrt(static_cast<double>(n2) / static_cast<double>(g.N_rh)) *
                                std::sinh(g.R_H / (2.0 * s)));
}

inline std::int64_t clamp_index(double raw, std::int64_t hi) {
    if (!(raw >= 1.0)) return 1;
    if (raw >= static_cast<double>(hi)) return hi;
    return static_cast<std::int64_t>(raw);
}

} // namespace detail

// Bin lookup from polar coordinates (angle in [0, 2*pi), hyperbolic radius).
// Both axes use half-open bins [lo, hi); the outermost ring closes at R_H so
// boundary data stays representable.
inline BinIndex bin_of_polar(double theta, double r_H, const QuantGrid& grid) {
    if (!(r_H >= 0.0) || r_H > grid.R_H * (1.0 + 1e-12) + 1e-12) {
        throw DomainError("bin_of: hyperbolic radius " + std::to_string(r_H) + " outside [0, " +
                          std::to_string(grid.R_H) + "]");
    }
    r_H = std::fmin(r_H, grid.R_H);
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;

    const double width = kTwoPi / static_cast<double>(grid.N_theta);
    const std::int64_t n1 = detail::clamp_index(std::floor(theta / width) + 1.0, grid.N_theta);

    std::int64_t n2;
    if (grid.mode == GridMode::distance_margin) {
        n2 = detail::clamp_index(std::floor(r_H / grid.R_H * static_cast<double>(grid.N_rh)) + 1.0, grid.N_rh);
    } else {
        // Invert the equal-area boundary formula: the area fraction inside
        // radius r is sinh^2(r/2s) / sinh^2(R_H/2s).
        const double s = grid.k.s;
        const double frac = std::pow(std::sinh(r_H / (2.0 * s)) / std::sinh(grid.R_H / (2.0 * s)), 2);
        n2 = detail::clamp_index(std::floor(frac * static_cast<double>(grid.N_rh)) + 1.0, grid.N_rh);
    }
    // Half-open check against the exact boundaries: the closed-form index
    // can land one off when r_H sits within rounding of a boundary.
    while (n2 > 1 && r_H < detail::radial_boundary(grid, n2 - 1)) --n2;
    while (n2 < grid.N_rh && r_H >= detail::radial_boundary(grid, n2)) ++n2;
    return bin_from_parts(n1, n2, grid);
}

inline BinIndex bin_of(const DiscPoint& x, const QuantGrid& grid) {
    const double r = norm(x);
    if (r > grid.R * (1.0 + 1e-12) + 1e-15) {
        throw DomainError("bin_of: point norm " + std::to_string(r) + " exceeds grid radius " +
                          std::to_string(grid.R));
    }
    const double r_H = hyp_radius(std::fmin(r, grid.R), grid.k.s);
    double theta = (r == 0.0) ? 0.0 : std::atan2(x.y, x.x);
    if (theta < 0.0) theta += kTwoPi;
    return bin_of_polar(theta, r_H, grid);
}

inline DiscPoint bin_center(const BinIndex& b, const QuantGrid& grid) {
    if (b.n1 < 1 || b.n1 > grid.N_theta || b.n2 < 1 || b.n2 > grid.N_rh) {
        throw InvalidInputError("bin_center: invalid bin index");
    }
    const double zeta = (static_cast<double>(b.n1) - 0.5) * kTwoPi / static_cast<double>(grid.N_theta);
    double tau;
    if (grid.mode == GridMode::distance_margin) {
        tau = (static_cast<double>(b.n2) - 0.5) / static_cast<double>(grid.N_rh) * grid.R_H;
    } else {
        const double s = grid.k.s;
        tau = 2.0 * s * std::asinh(std::sqrt((static_cast<double>(b.n2) - 0.5) / static_cast<double>(grid.N_rh)) *
                                   std::sinh(grid.R_H / (2.0 * s)));
    }
    const double alpha = euc_radius(tau, grid.k.s);
    return {alpha * std::cos(zeta), alpha * std::sin(zeta)};
}

inline DiscPoint quantize_point(const DiscPoint& x, const QuantGrid& grid) {
    return bin_center(bin_of(x, grid), grid);
}

inline ConvexHull quantize_hull(const ConvexHull& hull, const QuantGrid& grid) {
    std::vector<DiscPoint> q;
    q.reserve(hull.size());
    for (const DiscPoint& p : hull.extremes) q.push_back(quantize_point(p, grid));
    return graham_scan(q, grid.k);
}

// Definition-3 hull: quantize the extreme points of the minimal hull, then
// take the minimal hull of the quantized set.
inline ConvexHull epsilon_minimal_hull(const std::vector<DiscPoint>& points, const QuantGrid& grid,
                                       const Curvature& k) {
    return quantize_hull(graham_scan(points, k), grid);
}

// Uniform sampling on the hyperbolic disc of Euclidean radius R. Per point
// the radius variate eta is drawn first, then the angle zeta; eta lives on
// (0,1] so the boundary radius R itself is attainable.
inline std::vector<DiscPoint> uniform_sample(std::size_t N, double R, const Curvature& k, std::uint64_t seed) {
    if (N < 1) {
        throw InvalidInputError("uniform_sample: need N >= 1");
    }
    if (!(R > 0.0) || R >= k.s) {
        throw DomainError("uniform_sample: need 0 < R < s, got R=" + std::to_string(R));
    }
    const double s = k.s;
    const double R_H = hyp_radius(R, s);
    const double sh = std::sinh(R_H / (2.0 * s));
    SplitMix64 rng(seed);
    std::vector<DiscPoint> out;
    out.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double eta = rng.uniform01_open_closed();
        const double zeta = rng.uniform_angle();
        const double tau = 2.0 * s * std::asinh(std::sqrt(eta) * sh);
        const double alpha = euc_radius(tau, s);
        out.push_back({alpha * std::cos(zeta), alpha * std::sin(zeta)});
    }
    return out;
}

} // namespace hypfed
