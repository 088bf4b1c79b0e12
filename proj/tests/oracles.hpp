#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately brute force: grid searches, dense sampling, exhaustive
// enumeration. Slow and dumb beats subtly wrong.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "hypfed/geometry.hpp"
#include "hypfed/partition.hpp"
#include "hypfed/svm.hpp"

namespace oracles {

using hypfed::Curvature;
using hypfed::DiscPoint;

// ---------------------------------------------------------------------------
// Soft-margin SVM primal, tangent coordinates, no bias.
// ---------------------------------------------------------------------------

inline double svm_primal(const std::vector<std::array<double, 2>>& u, const std::vector<int>& y, double lambda,
                         double w1, double w2) {
    double f = 0.5 * (w1 * w1 + w2 * w2);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double margin = y[j] * (w1 * u[j][0] + w2 * u[j][1]);
        f += lambda * std::max(0.0, 1.0 - margin);
    }
    return f;
}

// Coarse grid over w followed by repeated local refinement around the best
// cell. The search box starts at the radius implied by F(w*) <= F(0).
inline double svm_grid_oracle(const std::vector<std::array<double, 2>>& u, const std::vector<int>& y,
                              double lambda) {
    const double w_bound = std::sqrt(2.0 * lambda * static_cast<double>(u.size())) + 1.0;
    double cx = 0.0, cy = 0.0, half = w_bound;
    double best = svm_primal(u, y, lambda, 0.0, 0.0);
    constexpr int kCells = 40;
    for (int round = 0; round < 12; ++round) {
        double bx = cx, by = cy;
        for (int i = 0; i <= kCells; ++i) {
            for (int j = 0; j <= kCells; ++j) {
                const double w1 = cx - half + 2.0 * half * i / kCells;
                const double w2 = cy - half + 2.0 * half * j / kCells;
                const double f = svm_primal(u, y, lambda, w1, w2);
                if (f < best) {
                    best = f;
                    bx = w1;
                    by = w2;
                }
            }
        }
        cx = bx;
        cy = by;
        half = 4.0 * half / kCells; // two cells of slack around the winner
    }
    return best;
}

// Same machinery for the Platt negative log-likelihood over (A, B).
inline double platt_nll(const std::vector<double>& scores, const std::vector<double>& targets, double A, double B) {
    double obj = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = A * scores[i] + B;
        const double log1pez = z > 30.0 ? z : std::log1p(std::exp(z));
        obj += targets[i] * log1pez + (1.0 - targets[i]) * (log1pez - z);
    }
    return obj;
}

inline double platt_grid_oracle(const std::vector<double>& scores, const std::vector<double>& targets) {
    double ca = 0.0, cb = 0.0, half = 50.0;
    double best = platt_nll(scores, targets, ca, cb);
    constexpr int kCells = 40;
    for (int round = 0; round < 12; ++round) {
        double ba = ca, bb = cb;
        for (int i = 0; i <= kCells; ++i) {
            for (int j = 0; j <= kCells; ++j) {
                const double a = ca - half + 2.0 * half * i / kCells;
                const double b = cb - half + 2.0 * half * j / kCells;
                const double f = platt_nll(scores, targets, a, b);
                if (f < best) {
                    best = f;
                    ba = a;
                    bb = b;
                }
            }
        }
        ca = ba;
        cb = bb;
        half = 4.0 * half / kCells;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Distance from a point to the geodesic {z : <log_p z, w> = 0}, numerically.
// ---------------------------------------------------------------------------

// The hyperplane through p with tangent normal w is the geodesic leaving p
// along the perpendicular tangent direction. d(x, exp_p(tau t)) is convex in
// tau, so dense bracketing plus ternary search nails the minimum.
inline double plane_distance_oracle(const DiscPoint& x, const DiscPoint& p, double w1, double w2,
                                    const Curvature& k) {
    const double wn = std::sqrt(w1 * w1 + w2 * w2);
    const double tx = -w2 / wn; // 90 degree rotation of w
    const double ty = w1 / wn;
    auto point_at = [&](double tau) {
        hypfed::TangentVector v;
        v.base = p;
        v.dx = tau * tx;
        v.dy = tau * ty;
        return hypfed::exp_map(p, v, k);
    };
    const double reach = hypfed::dist(x, p, k) + 1.0;
    double lo = -reach, hi = reach;
    // dense pre-bracket to be safe about flat stretches
    double best_tau = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    constexpr int kSamples = 400;
    for (int i = 0; i <= kSamples; ++i) {
        const double tau = lo + (hi - lo) * i / kSamples;
        const double d = hypfed::dist(x, point_at(tau), k);
        if (d < best_d) {
            best_d = d;
            best_tau = tau;
        }
    }
    lo = best_tau - 2.0 * reach / kSamples;
    hi = best_tau + 2.0 * reach / kSamples;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (hypfed::dist(x, point_at(m1), k) < hypfed::dist(x, point_at(m2), k)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return hypfed::dist(x, point_at(0.5 * (lo + hi)), k);
}

// ---------------------------------------------------------------------------
// Exhaustive balanced bisection.
// ---------------------------------------------------------------------------

inline double min_bisection_cut(const hypfed::HullGraph& g) {
    const std::size_t n = g.n;
    const std::size_t half = n / 2;
    double best = std::numeric_limits<double>::infinity();
    // node 0 pinned to side A kills the mirror symmetry
    std::vector<std::size_t> pick;
    std::vector<int> side(n, 0);
    auto recurse = [&](auto&& self, std::size_t next, std::size_t chosen) -> void {
        if (chosen == half) {
            double cut = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = a + 1; b < n; ++b) {
                    if (side[a] != side[b]) cut += g.weights[a][b];
                }
            }
            best = std::min(best, cut);
            return;
        }
        if (next >= n) return;
        if (n - next < half - chosen) return;
        side[next] = 1;
        self(self, next + 1, chosen + 1);
        side[next] = 0;
        self(self, next + 1, chosen);
    };
    side[0] = 1;
    recurse(recurse, 1, 1);
    return best;
}

// ---------------------------------------------------------------------------
// B_h property by a second, iterative enumeration (odometer over multisets).
// ---------------------------------------------------------------------------

inline bool is_bh_oracle(const std::vector<std::uint64_t>& seq, int h) {
    std::set<std::uint64_t> seen;
    // nondecreasing index tuples of every size 1..h, counted iteratively
    for (int size = 1; size <= h; ++size) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(size), 0);
        for (;;) {
            std::uint64_t sum = 0;
            for (std::size_t i : idx) sum += seq[i];
            if (!seen.insert(sum).second) return false;
            // odometer step over nondecreasing tuples
            int pos = size - 1;
            while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == seq.size() - 1) --pos;
            if (pos < 0) break;
            const std::size_t v = ++idx[static_cast<std::size_t>(pos)];
            for (std::size_t i = static_cast<std::size_t>(pos) + 1; i < idx.size(); ++i) idx[i] = v;
        }
    }
    return true;
}

} // namespace oracles
