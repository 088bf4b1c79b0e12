#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"
#include "hypfed/hull.hpp"

namespace hypfed {

// Complete weighted graph over hulls; weight is the reciprocal mean
// cross-hull vertex distance, so near hulls attract strongly.
struct HullGraph {
    int n = 0;
    std::vector<std::vector<double>> weights; // symmetric, diagonal unused
    std::vector<int> client_of;               // node -> client id
};

struct Grouping {
    std::vector<int> assignment; // node -> group in [1, J]
};

inline double mean_hull_distance(const ConvexHull& a, const ConvexHull& b, const Curvature& c) {
    if (a.empty() || b.empty()) throw InvalidInputError("mean_hull_distance: empty hull");
    double acc = 0.0;
    for (const DiscPoint& u : a.extremes) {
        for (const DiscPoint& v : b.extremes) {
            acc += dist(u, v, c);
        }
    }
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

inline HullGraph build_hull_graph(const std::vector<ConvexHull>& hulls, const Curvature& c,
                                  const std::vector<int>& client_of) {
    if (hulls.size() < 2) throw InvalidInputError("build_hull_graph: need at least two hulls");
    if (!client_of.empty() && client_of.size() != hulls.size()) {
        throw InvalidInputError("build_hull_graph: client map size mismatch");
    }
    HullGraph g;
    g.n = static_cast<int>(hulls.size());
    g.weights.assign(hulls.size(), std::vector<double>(hulls.size(), 0.0));
    g.client_of.resize(hulls.size());
    for (std::size_t i = 0; i < hulls.size(); ++i) {
        g.client_of[i] = client_of.empty() ? static_cast<int>(i) : client_of[i];
    }
    constexpr double kDistanceFloor = 1e-9; // identical quantized hulls stay maximally attractive, not infinite
    for (std::size_t i = 0; i < hulls.size(); ++i) {
        if (hulls[i].empty()) throw InvalidInputError("build_hull_graph: hull " + std::to_string(i) + " is empty");
        for (std::size_t j = i + 1; j < hulls.size(); ++j) {
            const double d = mean_hull_distance(hulls[i], hulls[j], c);
            const double w = 1.0 / std::max(d, kDistanceFloor);
            g.weights[i][j] = w;
            g.weights[j][i] = w;
        }
    }
    return g;
}

inline double cut_weight(const HullGraph& g, const Grouping& grouping) {
    double acc = 0.0;
    for (int u = 0; u < g.n; ++u) {
        for (int v = u + 1; v < g.n; ++v) {
            if (grouping.assignment[static_cast<std::size_t>(u)] != grouping.assignment[static_cast<std::size_t>(v)]) {
                acc += g.weights[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
            }
        }
    }
    return acc;
}

// Kernighan-Lin balanced bisection. Starts from the alternating-index split
// and applies full improvement passes until no positive-gain prefix exists.
inline Grouping kernighan_lin_bisect(const HullGraph& g) {
    if (g.n < 2 || g.n % 2 != 0) throw InvalidInputError("kernighan_lin_bisect: node count must be even");
    const std::size_t n = static_cast<std::size_t>(g.n);
    std::vector<int> side(n);
    for (std::size_t v = 0; v < n; ++v) side[v] = static_cast<int>(v % 2);

    auto weight = [&g](std::size_t a, std::size_t b) { return g.weights[a][b]; };

    double current_cut = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            if (side[u] != side[v]) current_cut += weight(u, v);
        }
    }

    for (int pass = 0; pass < 100; ++pass) {
        // D values: external minus internal connection cost
        std::vector<double> D(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t u = 0; u < n; ++u) {
                if (u == v) continue;
                D[v] += (side[u] != side[v]) ? weight(u, v) : -weight(u, v);
            }
        }
        std::vector<bool> locked(n, false);
        std::vector<std::pair<std::size_t, std::size_t>> swaps;
        std::vector<double> gains;
        for (std::size_t step = 0; step < n / 2; ++step) {
            double best = -1e300;
            std::size_t ba = n, bb = n;
            for (std::size_t a = 0; a < n; ++a) {
                if (locked[a] || side[a] != 0) continue;
                for (std::size_t b = 0; b < n; ++b) {
                    if (locked[b] || side[b] != 1) continue;
                    const double gain = D[a] + D[b] - 2.0 * weight(a, b);
                    if (gain > best) {
                        best = gain;
                        ba = a;
                        bb = b;
                    }
                }
            }
            if (ba == n) break;
            swaps.emplace_back(ba, bb);
            gains.push_back(best);
            locked[ba] = locked[bb] = true;
            for (std::size_t x = 0; x < n; ++x) {
                if (locked[x]) continue;
                if (side[x] == 0) {
                    D[x] += 2.0 * weight(x, ba) - 2.0 * weight(x, bb);
                } else {
                    D[x] += 2.0 * weight(x, bb) - 2.0 * weight(x, ba);
                }
            }
        }
        double run = 0.0, best_prefix = 0.0;
        std::size_t best_k = 0;
        for (std::size_t i = 0; i < gains.size(); ++i) {
            run += gains[i];
            if (run > best_prefix) {
                best_prefix = run;
                best_k = i + 1;
            }
        }
        if (best_k == 0 || best_prefix <= 1e-12) break;
        for (std::size_t i = 0; i < best_k; ++i) {
            side[swaps[i].first] = 1;
            side[swaps[i].second] = 0;
        }
        double recount = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = u + 1; v < n; ++v) {
                if (side[u] != side[v]) recount += weight(u, v);
            }
        }
        if (recount > current_cut + 1e-6) {
            throw InternalError("kernighan_lin_bisect: pass increased the cut");
        }
        current_cut = recount;
    }

    Grouping out;
    out.assignment.resize(n);
    for (std::size_t v = 0; v < n; ++v) out.assignment[v] = side[v] + 1;
    return out;
}

namespace detail {

// Cyclic Jacobi eigendecomposition for small dense symmetric matrices.
// Eigenvalues ascend; eigenvectors come back as columns of V.
inline void jacobi_eigen(std::vector<std::vector<double>> A, std::vector<double>& evals,
                         std::vector<std::vector<double>>& V) {
    const std::size_t n = A.size();
    V.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) V[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += A[p][q] * A[p][q];
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(A[p][q]) < 1e-300) continue;
                const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cth = 1.0 / std::sqrt(t * t + 1.0);
                const double sth = t * cth;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = A[i][p], aiq = A[i][q];
                    A[i][p] = cth * aip - sth * aiq;
                    A[i][q] = sth * aip + cth * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = A[p][i], aqi = A[q][i];
                    A[p][i] = cth * api - sth * aqi;
                    A[q][i] = sth * api + cth * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = V[i][p], viq = V[i][q];
                    V[i][p] = cth * vip - sth * viq;
                    V[i][q] = sth * vip + cth * viq;
                }
            }
        }
    }
    evals.resize(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = A[i][i];
    // sort ascending, permuting columns alongside
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return evals[a] < evals[b]; });
    std::vector<double> ev2(n);
    std::vector<std::vector<double>> V2(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        ev2[c] = evals[idx[c]];
        for (std::size_t r = 0; r < n; ++r) V2[r][c] = V[r][idx[c]];
    }
    evals = std::move(ev2);
    V = std::move(V2);
}

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc;
}

// Farthest-first seeded Lloyd iterations; fully deterministic.
inline std::vector<std::vector<double>> kmeans_centers(const std::vector<std::vector<double>>& rows, int K) {
    const std::size_t n = rows.size();
    std::vector<std::vector<double>> centers;
    centers.push_back(rows[0]);
    while (static_cast<int>(centers.size()) < K) {
        double best = -1.0;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double dmin = 1e300;
            for (const auto& c : centers) dmin = std::min(dmin, sqdist(rows[i], c));
            if (dmin > best + 1e-15) {
                best = dmin;
                pick = i;
            }
        }
        centers.push_back(rows[pick]);
    }
    std::vector<int> label(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double dmin = 1e300;
            int pick = 0;
            for (int c = 0; c < K; ++c) {
                const double d = sqdist(rows[i], centers[static_cast<std::size_t>(c)]);
                if (d < dmin - 1e-15) {
                    dmin = d;
                    pick = c;
                }
            }
            if (pick != label[i]) {
                label[i] = pick;
                changed = true;
            }
        }
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(K),
                                              std::vector<double>(rows[0].size(), 0.0));
        std::vector<int> counts(static_cast<std::size_t>(K), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[static_cast<std::size_t>(label[i])];
            for (std::size_t d = 0; d < rows[i].size(); ++d) sums[static_cast<std::size_t>(label[i])][d] += rows[i][d];
        }
        for (int c = 0; c < K; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                // reseed an empty cluster with the row farthest from its center
                double worst = -1.0;
                std::size_t pick = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sqdist(rows[i], centers[static_cast<std::size_t>(label[i])]);
                    if (d > worst) {
                        worst = d;
                        pick = i;
                    }
                }
                centers[static_cast<std::size_t>(c)] = rows[pick];
                changed = true;
                continue;
            }
            for (std::size_t d = 0; d < sums[static_cast<std::size_t>(c)].size(); ++d) {
                centers[static_cast<std::size_t>(c)][d] =
                    sums[static_cast<std::size_t>(c)][d] / counts[static_cast<std::size_t>(c)];
            }
        }
        if (!changed) break;
    }
    return centers;
}

} // namespace detail

// Spectral grouping with the same-client separation heuristic: same-client
// edges get near-zero weight before the Laplacian is formed, and the final
// balanced assignment never co-groups two nodes of one client.
inline Grouping spectral_group(const HullGraph& g, int J) {
    if (J < 2) throw InvalidInputError("spectral_group: need J >= 2");
    if (g.n % J != 0) throw InvalidInputError("spectral_group: node count not divisible by J");
    const std::size_t n = static_cast<std::size_t>(g.n);
    const int L = g.n / J;

    std::map<int, std::vector<std::size_t>> by_client;
    for (std::size_t v = 0; v < n; ++v) by_client[g.client_of[v]].push_back(v);
    for (const auto& [cid, nodes] : by_client) {
        if (static_cast<int>(nodes.size()) > J) {
            throw InvalidInputError("spectral_group: client " + std::to_string(cid) + " holds " +
                                    std::to_string(nodes.size()) + " hulls but only " + std::to_string(J) +
                                    " groups exist");
        }
    }

    constexpr double kSameClientWeight = 1e-12;
    std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            W[u][v] = (g.client_of[u] == g.client_of[v]) ? kSameClientWeight : g.weights[u][v];
        }
    }

    // normalized Laplacian I - D^{-1/2} W D^{-1/2}
    std::vector<double> dsqrtinv(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        double deg = 0.0;
        for (std::size_t v = 0; v < n; ++v) deg += W[u][v];
        dsqrtinv[u] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    std::vector<std::vector<double>> Lap(n, std::vector<double>(n, 0.0));
    for (std::size_t u = 0; u < n; ++u) {
        Lap[u][u] = 1.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v) Lap[u][v] = -W[u][v] * dsqrtinv[u] * dsqrtinv[v];
        }
    }

    std::vector<double> evals;
    std::vector<std::vector<double>> evecs;
    detail::jacobi_eigen(Lap, evals, evecs);

    std::vector<std::vector<double>> rows(n, std::vector<double>(static_cast<std::size_t>(J), 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        double norm2 = 0.0;
        for (int c = 0; c < J; ++c) {
            rows[r][static_cast<std::size_t>(c)] = evecs[r][static_cast<std::size_t>(c)];
            norm2 += rows[r][static_cast<std::size_t>(c)] * rows[r][static_cast<std::size_t>(c)];
        }
        if (norm2 > 1e-24) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (int c = 0; c < J; ++c) rows[r][static_cast<std::size_t>(c)] *= inv;
        }
    }

    std::vector<std::vector<double>> centers = detail::kmeans_centers(rows, J);

    // Balanced, client-separating assignment: clients with the most hulls
    // commit first, each choosing the injective node->group map of highest
    // affinity among those that respect remaining group capacities.
    std::vector<std::vector<std::size_t>> clients;
    for (auto& [cid, nodes] : by_client) clients.push_back(nodes);
    std::sort(clients.begin(), clients.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });

    std::vector<int> capacity(static_cast<std::size_t>(J), L);
    std::vector<int> assignment(n, 0);
    for (const std::vector<std::size_t>& nodes : clients) {
        const std::size_t m = nodes.size();
        std::vector<int> groups(static_cast<std::size_t>(J));
        std::iota(groups.begin(), groups.end(), 0);
        // enumerate injective maps: permutations of groups, first m entries used
        std::vector<int> perm(groups);
        std::sort(perm.begin(), perm.end());
        double best = -1e300;
        std::vector<int> best_map;
        std::vector<int> chosen(m, -1);
        auto rec = [&](auto&& self, std::size_t depth, std::vector<bool>& used, double score) -> void {
            if (depth == m) {
                if (score > best) {
                    best = score;
                    best_map.assign(chosen.begin(), chosen.end());
                }
                return;
            }
            for (int c = 0; c < J; ++c) {
                if (used[static_cast<std::size_t>(c)] || capacity[static_cast<std::size_t>(c)] <= 0) continue;
                used[static_cast<std::size_t>(c)] = true;
                chosen[depth] = c;
                self(self, depth + 1,
                     used, score - detail::sqdist(rows[nodes[depth]], centers[static_cast<std::size_t>(c)]));
                used[static_cast<std::size_t>(c)] = false;
            }
        };
        std::vector<bool> used(static_cast<std::size_t>(J), false);
        rec(rec, 0, used, 0.0);
        if (best_map.empty()) {
            throw InternalError("spectral_group: capacity stranding while balancing groups");
        }
        for (std::size_t i = 0; i < m; ++i) {
            assignment[nodes[i]] = best_map[i] + 1;
            --capacity[static_cast<std::size_t>(best_map[i])];
        }
    }

    Grouping out;
    out.assignment = std::move(assignment);
    return out;
}

} // namespace hypfed
