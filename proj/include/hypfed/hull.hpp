#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"

namespace hypfed {

// Below this magnitude the cross product of the unit tangent directions is
// treated as exactly zero (collinear). The hull scan pops on <= 0, so the
// band keeps float jitter from materializing near-duplicate vertices.
inline constexpr double kCcwZeroBand = 1e-12;

// Extreme points of the minimal convex hull, counter-clockwise, starting at
// the point farthest from the origin.
struct ConvexHull {
    std::vector<DiscPoint> extremes;

    std::size_t size() const { return extremes.size(); }
    bool empty() const { return extremes.empty(); }
};

// Orientation of c against the geodesic a -> b: cross product of the unit
// tangents of log_a(b) and log_a(c). Positive means counter-clockwise.
inline double ccw(const DiscPoint& a, const DiscPoint& b, const DiscPoint& c, const Curvature& k) {
    if (a == b || a == c) {
        throw InvalidInputError("ccw: coincident input points are degenerate");
    }
    const TangentVector ub = log_map(a, b, k);
    const TangentVector uc = log_map(a, c, k);
    const double nb = ub.norm();
    const double nc = uc.norm();
    if (nb == 0.0 || nc == 0.0) {
        throw InvalidInputError("ccw: zero tangent (numerically coincident points)");
    }
    const double cross = (ub.dx / nb) * (uc.dy / nc) - (ub.dy / nb) * (uc.dx / nc);
    return std::fabs(cross) < kCcwZeroBand ? 0.0 : cross;
}

namespace detail {

inline std::vector<DiscPoint> dedup_points(const std::vector<DiscPoint>& points) {
    std::vector<DiscPoint> out(points);
    std::sort(out.begin(), out.end(), [](const DiscPoint& a, const DiscPoint& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Angle of a point's own position, folded to [0, 2*pi); used only for
// deterministic tie-breaking of the starting vertex.
inline double principal_angle(const DiscPoint& p) {
    double a = std::atan2(p.y, p.x);
    if (a < 0.0) a += kTwoPi;
    return a;
}

} // namespace detail

// Poincare Graham scan. Picks the point b farthest from the origin, sorts
// the rest by the principal angle of log_b(x_j) against the tangent t (the
// 90-degree CCW rotation of the away-from-origin normal), then runs the
// usual stack scan with the geodesic CCW test.
inline ConvexHull graham_scan(const std::vector<DiscPoint>& points, const Curvature& k) {
    if (points.empty()) {
        throw InvalidInputError("graham_scan: empty input");
    }
    std::vector<DiscPoint> pts = detail::dedup_points(points);
    for (const DiscPoint& p : pts) check_in_disc(p, k, "graham_scan");
    if (pts.size() <= 2) {
        return ConvexHull{std::move(pts)};
    }

    // Farthest from origin; Euclidean norm is monotone in hyperbolic
    // distance from the origin so no map evaluation is needed yet.
    std::size_t bi = 0;
    {
        double best_n2 = -1.0;
        double best_ang = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double n2 = norm2(pts[i]);
            const double ang = detail::principal_angle(pts[i]);
            const bool better = n2 > best_n2 ||
                (n2 == best_n2 && (ang < best_ang || (ang == best_ang && pts[i].x < pts[bi].x)));
            if (i == 0 || better) {
                bi = i;
                best_n2 = n2;
                best_ang = ang;
            }
        }
    }
    const DiscPoint b = pts[bi];
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(bi));

    const TangentVector to_origin = log_map(b, DiscPoint{0.0, 0.0}, k);
    const double on = to_origin.norm();
    // b != origin is guaranteed here: with >= 3 distinct points the farthest
    // one has positive norm.
    const double nx = -to_origin.dx / on;
    const double ny = -to_origin.dy / on;
    const double tx = -ny; // t = 90-degree CCW rotation of n
    const double ty = nx;

    struct Key {
        double angle;
        double tangent_norm;
        DiscPoint p;
    };
    std::vector<Key> keys;
    keys.reserve(pts.size());
    for (const DiscPoint& p : pts) {
        const TangentVector u = log_map(b, p, k);
        // All angles live in [0, pi] because b is farthest from the origin;
        // clamp the sine component so jitter cannot wrap a angle to -pi.
        const double along_t = u.dx * tx + u.dy * ty;
        const double along_mn = std::fmax(0.0, -(u.dx * nx + u.dy * ny));
        keys.push_back(Key{std::atan2(along_mn, along_t), u.norm(), p});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b2) {
        return a.angle != b2.angle ? a.angle < b2.angle : a.tangent_norm < b2.tangent_norm;
    });

    // Points whose angular separation is inside the CCW zero band are
    // collinear as far as the scan is concerned: keep only the farthest.
    std::vector<DiscPoint> order;
    order.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i + 1 < keys.size() && keys[i + 1].angle - keys[i].angle < kCcwZeroBand) continue;
        order.push_back(keys[i].p);
    }

    std::vector<DiscPoint> stack;
    stack.reserve(order.size() + 1);
    stack.push_back(b);
    for (const DiscPoint& v : order) {
        while (stack.size() >= 2 && ccw(stack[stack.size() - 2], stack.back(), v, k) <= 0.0) {
            stack.pop_back();
        }
        stack.push_back(v);
    }
    return ConvexHull{std::move(stack)};
}

// Lemma-3 membership: x is inside or on the triangle (a1,a2,a3) iff the
// three CCW signs agree; zeros (on an edge) count as agreement. Three zeros
// mean the "triangle" is itself degenerate and certifies nothing.
inline bool in_triangle(const DiscPoint& a1, const DiscPoint& a2, const DiscPoint& a3,
                        const DiscPoint& x, const Curvature& k) {
    const double s1 = ccw(a1, a2, x, k);
    const double s2 = ccw(a2, a3, x, k);
    const double s3 = ccw(a3, a1, x, k);
    if (s1 == 0.0 && s2 == 0.0 && s3 == 0.0) return false;
    const bool has_pos = s1 > 0.0 || s2 > 0.0 || s3 > 0.0;
    const bool has_neg = s1 < 0.0 || s2 < 0.0 || s3 < 0.0;
    return !(has_pos && has_neg);
}

// Membership against a full hull (vertices in CCW order): inside or on iff
// no edge sees the point strictly clockwise.
inline bool in_hull(const ConvexHull& hull, const DiscPoint& x, const Curvature& k) {
    const std::vector<DiscPoint>& v = hull.extremes;
    if (v.empty()) return false;
    if (v.size() == 1) return v[0] == x;
    if (v.size() == 2) {
        if (x == v[0] || x == v[1]) return true;
        if (ccw(v[0], v[1], x, k) != 0.0) return false;
        const double d01 = dist(v[0], v[1], k);
        return dist(v[0], x, k) <= d01 + 1e-12 && dist(v[1], x, k) <= d01 + 1e-12;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const DiscPoint& a = v[i];
        const DiscPoint& b = v[(i + 1) % v.size()];
        if (x == a || x == b) return true;
        if (ccw(a, b, x, k) < 0.0) return false;
    }
    return true;
}

// Cubic-cost oracle: a point is non-extreme iff it lies inside or on a
// triangle of other points (Lemma 3), or on the geodesic segment between
// two other points (the all-collinear case no triangle can certify).
// Unit tangent directions are precomputed once per base point; the CCW signs
// are then plain cross products with the same zero band as ccw().
inline ConvexHull brute_force_hull(const std::vector<DiscPoint>& points, const Curvature& k) {
    std::vector<DiscPoint> pts = detail::dedup_points(points);
    if (pts.empty()) {
        throw InvalidInputError("brute_force_hull: empty input");
    }
    if (pts.size() > 60) {
        throw InvalidInputError("brute_force_hull: size cap 60 exceeded (" + std::to_string(pts.size()) + " points)");
    }
    for (const DiscPoint& p : pts) check_in_disc(p, k, "brute_force_hull");

    const std::size_t n = pts.size();
    std::vector<double> ux(n * n, 0.0), uy(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const TangentVector u = log_map(pts[a], pts[b], k);
            const double un = u.norm();
            ux[a * n + b] = u.dx / un;
            uy[a * n + b] = u.dy / un;
        }
    }
    auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
        const double v = ux[a * n + b] * uy[a * n + c] - uy[a * n + b] * ux[a * n + c];
        return std::fabs(v) < kCcwZeroBand ? 0.0 : v;
    };
    auto covers = [&](std::size_t i, std::size_t j, std::size_t l, std::size_t q) {
        const double s1 = cross(i, j, q);
        const double s2 = cross(j, l, q);
        const double s3 = cross(l, i, q);
        if (s1 == 0.0 && s2 == 0.0 && s3 == 0.0) return false;
        const bool has_pos = s1 > 0.0 || s2 > 0.0 || s3 > 0.0;
        const bool has_neg = s1 < 0.0 || s2 < 0.0 || s3 < 0.0;
        return !(has_pos && has_neg);
    };

    std::vector<DiscPoint> extreme;
    for (std::size_t qi = 0; qi < n; ++qi) {
        const DiscPoint& q = pts[qi];
        bool covered = false;
        for (std::size_t i = 0; i < n && !covered; ++i) {
            if (i == qi) continue;
            for (std::size_t j = i + 1; j < n && !covered; ++j) {
                if (j == qi) continue;
                // Segment test first: also certifies collinear configurations.
                if (cross(i, j, qi) == 0.0) {
                    const double dij = dist(pts[i], pts[j], k);
                    if (dist(pts[i], q, k) <= dij + 1e-12 && dist(pts[j], q, k) <= dij + 1e-12) {
                        covered = true;
                        break;
                    }
                }
                for (std::size_t l = j + 1; l < n && !covered; ++l) {
                    if (l == qi) continue;
                    if (covers(i, j, l, qi)) covered = true;
                }
            }
        }
        if (!covered) extreme.push_back(q);
    }
    if (extreme.empty()) {
        // All points pairwise cover each other only when they coincide,
        // which dedup rules out; keep the guard for safety.
        throw InternalError("brute_force_hull: no extreme points found");
    }
    return graham_scan(extreme, k);
}

} // namespace hypfed
