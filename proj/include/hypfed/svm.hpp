#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"
#include "hypfed/hull.hpp"

namespace hypfed {

struct LabeledPoint {
    DiscPoint x;
    int y = 1; // +1/-1 in the binary setting; class id in multiclass data
};

struct HyperbolicSvmModel {
    DiscPoint p;
    double w1 = 0.0, w2 = 0.0;
    Curvature k{1.0};
    double lambda = 0.0;
};

struct EuclideanSvmModel {
    double w1 = 0.0, w2 = 0.0, b = 0.0;
};

struct PlattCalibration {
    double A = 0.0, B = 0.0;
};

struct SolverOptions {
    int max_epochs = 1000;
    double rel_tol = 1e-10;
};

namespace detail {

// Deterministic dual coordinate descent for the L1 hinge SVM
//   min_w 1/2 ||w||^2 + lambda * sum_j max(0, 1 - y_j <u_j, w>)
// over fixed feature vectors u_j. Cyclic updates, no shuffling, so results
// are reproducible bit-for-bit. Returns the incumbent with the best primal
// objective observed at epoch boundaries, which makes recorded objectives
// monotone by construction.
template <std::size_t D>
struct DualCdResult {
    std::array<double, D> w{};
    double objective = 0.0;
};

template <std::size_t D>
inline double primal_objective(const std::vector<std::array<double, D>>& u, const std::vector<int>& y,
                               const std::array<double, D>& w, double lambda) {
    double reg = 0.0;
    for (double c : w) reg += c * c;
    double hinge = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) s += u[j][d] * w[d];
        hinge += std::max(0.0, 1.0 - y[j] * s);
    }
    return 0.5 * reg + lambda * hinge;
}

template <std::size_t D>
inline DualCdResult<D> dual_cd(const std::vector<std::array<double, D>>& u, const std::vector<int>& y,
                               double lambda, const SolverOptions& opts) {
    const std::size_t n = u.size();
    if (n == 0) throw InvalidInputError("svm solver: empty training set");
    if (lambda <= 0.0) throw InvalidInputError("svm solver: lambda must be positive");

    std::vector<double> qjj(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t d = 0; d < D; ++d) qjj[j] += u[j][d] * u[j][d];
    }

    std::vector<double> alpha(n, 0.0);
    std::array<double, D> w{};

    DualCdResult<D> best;
    best.w = w;
    best.objective = primal_objective(u, y, w, lambda); // w = 0 baseline: lambda * n

    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (qjj[j] < 1e-24) {
                alpha[j] = lambda; // zero feature vector: hinge is constant, dual coordinate saturates
                continue;
            }
            double s = 0.0;
            for (std::size_t d = 0; d < D; ++d) s += u[j][d] * w[d];
            const double grad = 1.0 - y[j] * s;
            double a_new = alpha[j] + grad / qjj[j];
            a_new = std::min(lambda, std::max(0.0, a_new));
            const double delta = a_new - alpha[j];
            if (delta != 0.0) {
                alpha[j] = a_new;
                for (std::size_t d = 0; d < D; ++d) w[d] += delta * y[j] * u[j][d];
                max_delta = std::max(max_delta, std::fabs(delta));
            }
        }
        const double obj = primal_objective(u, y, w, lambda);
        if (obj < best.objective) {
            best.objective = obj;
            best.w = w;
        }
        if (max_delta == 0.0) break;                         // exact fixpoint
        if (max_delta < opts.rel_tol * lambda) break;        // dual coordinates have settled to scale
    }
    return best;
}

} // namespace detail

inline double score(const HyperbolicSvmModel& m, const DiscPoint& x) {
    const TangentVector t = log_map(m.p, x, m.k);
    return t.dx * m.w1 + t.dy * m.w2;
}

inline int predict(const HyperbolicSvmModel& m, const DiscPoint& x) {
    return score(m, x) < 0.0 ? -1 : 1; // exact zero resolves to +1
}

inline double score(const EuclideanSvmModel& m, const DiscPoint& x) { return m.w1 * x.x + m.w2 * x.y + m.b; }

inline int predict(const EuclideanSvmModel& m, const DiscPoint& x) { return score(m, x) < 0.0 ? -1 : 1; }

// Soft-margin hyperbolic SVM in the tangent frame at p. The separating
// hyperplane passes through p, so no bias term appears.
inline HyperbolicSvmModel fit_soft(const std::vector<LabeledPoint>& data, const DiscPoint& p, const Curvature& k,
                                   double lambda, const SolverOptions& opts = {}) {
    if (data.empty()) throw InvalidInputError("fit_soft: empty training set");
    std::vector<std::array<double, 2>> u(data.size());
    std::vector<int> y(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const TangentVector t = log_map(p, data[j].x, k);
        u[j] = {t.dx, t.dy};
        if (data[j].y != 1 && data[j].y != -1) throw InvalidInputError("fit_soft: labels must be +1/-1");
        y[j] = data[j].y;
    }
    const auto r = detail::dual_cd<2>(u, y, lambda, opts);
    HyperbolicSvmModel m;
    m.p = p;
    m.w1 = r.w[0];
    m.w2 = r.w[1];
    m.k = k;
    m.lambda = lambda;
    return m;
}

inline double min_margin(const HyperbolicSvmModel& m, const std::vector<LabeledPoint>& data) {
    double mm = 1e300;
    for (const LabeledPoint& lp : data) mm = std::min(mm, lp.y * score(m, lp.x));
    return mm;
}

// Hard-margin fit: a high-lambda soft fit plus a feasibility verdict, and a
// rescale to make the tightest constraint active so ||w|| is minimal among
// feasible scalings of the returned direction.
inline HyperbolicSvmModel fit_hard(const std::vector<LabeledPoint>& data, const DiscPoint& p, const Curvature& k,
                                   const SolverOptions& opts = {}) {
    constexpr double kHardLambda = 2e4;
    HyperbolicSvmModel m = fit_soft(data, p, k, kHardLambda, opts);
    const double mm = min_margin(m, data);
    if (mm < 1.0 - 1e-6) {
        throw NotSeparableError("fit_hard: data not separable in the tangent frame at the chosen reference point "
                                "(minimum margin " +
                                std::to_string(mm) + "); use fit_soft");
    }
    if (mm > 1.0 + 1e-4) {
        m.w1 /= mm;
        m.w2 /= mm;
    }
    return m;
}

// Euclidean baseline with a regularized bias via feature augmentation.
inline EuclideanSvmModel fit_euclidean(const std::vector<LabeledPoint>& data, double lambda,
                                       const SolverOptions& opts = {}) {
    if (data.empty()) throw InvalidInputError("fit_euclidean: empty training set");
    std::vector<std::array<double, 3>> u(data.size());
    std::vector<int> y(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        u[j] = {data[j].x.x, data[j].x.y, 1.0};
        if (data[j].y != 1 && data[j].y != -1) throw InvalidInputError("fit_euclidean: labels must be +1/-1");
        y[j] = data[j].y;
    }
    const auto r = detail::dual_cd<3>(u, y, lambda, opts);
    return EuclideanSvmModel{r.w[0], r.w[1], r.w[2]};
}

// Platt scaling: p(score) = 1 / (1 + exp(A*score + B)), fit by damped Newton
// on the cross-entropy with the standard smoothed targets.
inline PlattCalibration platt_fit(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) throw InvalidInputError("platt_fit: bad input sizes");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y == 1) {
            ++n_pos;
        } else if (y == -1) {
            ++n_neg;
        } else {
            throw InvalidInputError("platt_fit: labels must be +1/-1");
        }
    }
    if (n_pos == 0 || n_neg == 0) throw InvalidInputError("platt_fit: both classes required");

    const double t_pos = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0);
    const double t_neg = 1.0 / (static_cast<double>(n_neg) + 2.0);
    std::vector<double> target(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) target[i] = labels[i] == 1 ? t_pos : t_neg;

    double A = 0.0;
    double B = std::log((static_cast<double>(n_neg) + 1.0) / (static_cast<double>(n_pos) + 1.0));

    auto objective = [&](double a, double b) {
        double obj = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = a * scores[i] + b;
            // cross-entropy with stable log(1+exp)
            const double log1pexp = z > 30.0 ? z : std::log1p(std::exp(z));
            obj += target[i] * log1pexp + (1.0 - target[i]) * (log1pexp - z);
        }
        return obj;
    };

    double obj = objective(A, B);
    for (int iter = 0; iter < 100; ++iter) {
        double g_a = 0.0, g_b = 0.0, h_aa = 1e-12, h_ab = 0.0, h_bb = 1e-12;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = A * scores[i] + B;
            const double pr = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
            const double grad_z = target[i] - pr; // d/dz of the cross-entropy at this sample
            const double hess_z = pr * (1.0 - pr);
            g_a += grad_z * scores[i];
            g_b += grad_z;
            h_aa += hess_z * scores[i] * scores[i];
            h_ab += hess_z * scores[i];
            h_bb += hess_z;
        }
        const double det = h_aa * h_bb - h_ab * h_ab;
        if (std::fabs(det) < 1e-300) break;
        double dA = -(h_bb * g_a - h_ab * g_b) / det;
        double dB = -(h_aa * g_b - h_ab * g_a) / det;
        double step = 1.0;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            const double cand = objective(A + step * dA, B + step * dB);
            if (cand < obj - 1e-15) {
                A += step * dA;
                B += step * dB;
                obj = cand;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
        if (std::fabs(dA) + std::fabs(dB) < 1e-12) break;
    }
    return PlattCalibration{A, B};
}

inline double platt_apply(const PlattCalibration& cal, double s) {
    const double z = cal.A * s + cal.B;
    double p = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    p = std::min(1.0 - 1e-16, std::max(1e-300, p));
    return p;
}

// Candidate reference points: geodesic midpoints of the closest cross-hull
// vertex pairs, nearest pair first. Candidates landing inside either hull
// are kept but flagged for the caller.
struct ReferenceCandidate {
    DiscPoint p;
    double pair_distance = 0.0;
    bool inside_hull = false;
};

inline std::vector<ReferenceCandidate> select_reference_point(const ConvexHull& hull_plus,
                                                              const ConvexHull& hull_minus, const Curvature& k,
                                                              int n_candidates = 3) {
    if (hull_plus.empty() || hull_minus.empty()) throw InvalidInputError("select_reference_point: empty hull");
    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < hull_plus.size(); ++i) {
        for (std::size_t j = 0; j < hull_minus.size(); ++j) {
            pairs.push_back({dist(hull_plus.extremes[i], hull_minus.extremes[j], k), i, j});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    const std::size_t take = std::min(pairs.size(), static_cast<std::size_t>(std::max(1, n_candidates)));
    std::vector<ReferenceCandidate> out;
    out.reserve(take);
    for (std::size_t t = 0; t < take; ++t) {
        ReferenceCandidate cand;
        cand.p = geodesic_midpoint(hull_plus.extremes[pairs[t].i], hull_minus.extremes[pairs[t].j], k);
        cand.pair_distance = pairs[t].d;
        cand.inside_hull = in_hull(hull_plus, cand.p, k) || in_hull(hull_minus, cand.p, k);
        out.push_back(cand);
    }
    return out;
}

inline double training_accuracy(const HyperbolicSvmModel& m, const std::vector<LabeledPoint>& data) {
    if (data.empty()) return 0.0;
    std::size_t hit = 0;
    for (const LabeledPoint& lp : data) {
        if (predict(m, lp.x) == lp.y) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

// Fits one model per reference candidate and keeps the best by training
// accuracy (ties: earlier candidate, i.e. closer pair). Degenerate fits with
// a vanishing normal fall through to the next candidate.
inline HyperbolicSvmModel best_reference_fit(const std::vector<LabeledPoint>& data, const ConvexHull& hull_plus,
                                             const ConvexHull& hull_minus, const Curvature& k, double lambda,
                                             const SolverOptions& opts = {}, int n_candidates = 3) {
    const std::vector<ReferenceCandidate> cands = select_reference_point(hull_plus, hull_minus, k, n_candidates);
    bool have = false;
    HyperbolicSvmModel best{};
    double best_acc = -1.0;
    HyperbolicSvmModel degenerate_fallback{};
    bool have_degenerate = false;
    for (const ReferenceCandidate& cand : cands) {
        HyperbolicSvmModel m = fit_soft(data, cand.p, k, lambda, opts);
        const double wn = std::sqrt(m.w1 * m.w1 + m.w2 * m.w2);
        if (wn < 1e-12) {
            if (!have_degenerate) {
                degenerate_fallback = m;
                have_degenerate = true;
            }
            continue;
        }
        const double acc = training_accuracy(m, data);
        if (acc > best_acc + 1e-12) {
            best_acc = acc;
            best = m;
            have = true;
        }
    }
    if (!have) {
        if (have_degenerate) return degenerate_fallback;
        throw InternalError("best_reference_fit: no usable reference candidate");
    }
    return best;
}

struct MulticlassModel {
    std::vector<int> class_ids; // ascending
    std::vector<HyperbolicSvmModel> models;
    std::vector<PlattCalibration> calibrations;
};

inline MulticlassModel fit_multiclass(const std::vector<LabeledPoint>& data, const Curvature& k, double lambda,
                                      const SolverOptions& opts = {}) {
    if (data.empty()) throw InvalidInputError("fit_multiclass: empty training set");
    std::vector<int> ids;
    for (const LabeledPoint& lp : data) ids.push_back(lp.y);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) throw InvalidInputError("fit_multiclass: need at least two classes");

    MulticlassModel ens;
    ens.class_ids = ids;
    for (int cls : ids) {
        std::vector<LabeledPoint> binary(data.size());
        std::vector<DiscPoint> in_class, rest;
        for (std::size_t j = 0; j < data.size(); ++j) {
            binary[j].x = data[j].x;
            binary[j].y = data[j].y == cls ? 1 : -1;
            (data[j].y == cls ? in_class : rest).push_back(data[j].x);
        }
        if (in_class.empty() || rest.empty()) throw InvalidInputError("fit_multiclass: empty class");
        const ConvexHull hp = graham_scan(in_class, k);
        const ConvexHull hm = graham_scan(rest, k);
        HyperbolicSvmModel m = best_reference_fit(binary, hp, hm, k, lambda, opts);
        std::vector<double> scores(binary.size());
        std::vector<int> ys(binary.size());
        for (std::size_t j = 0; j < binary.size(); ++j) {
            scores[j] = score(m, binary[j].x);
            ys[j] = binary[j].y;
        }
        ens.models.push_back(m);
        ens.calibrations.push_back(platt_fit(scores, ys));
    }
    return ens;
}

// Maximum a posteriori over the calibrated one-vs-rest probabilities; ties
// resolve to the lowest class id.
inline int predict_multiclass(const MulticlassModel& ens, const DiscPoint& x) {
    if (ens.models.empty()) throw InvalidInputError("predict_multiclass: untrained ensemble");
    double best = -1.0;
    int best_id = ens.class_ids.front();
    for (std::size_t c = 0; c < ens.models.size(); ++c) {
        const double pr = platt_apply(ens.calibrations[c], score(ens.models[c], x));
        if (pr > best) { // class ids ascend, so exact ties keep the lowest id
            best = pr;
            best_id = ens.class_ids[c];
        }
    }
    return best_id;
}

inline nlohmann::json model_to_json(const HyperbolicSvmModel& m) {
    nlohmann::json j;
    j["k"] = m.k.k;
    j["p"] = {m.p.x, m.p.y};
    j["w"] = {m.w1, m.w2};
    j["lambda"] = m.lambda;
    return j;
}

inline nlohmann::json model_to_json(const HyperbolicSvmModel& m, const PlattCalibration& cal) {
    nlohmann::json j = model_to_json(m);
    j["platt"] = {{"A", cal.A}, {"B", cal.B}};
    return j;
}

// Reads a model back; fills *platt when the record carries a calibration and
// a destination is given.
inline HyperbolicSvmModel model_from_json(const nlohmann::json& j, PlattCalibration* platt = nullptr) {
    try {
        HyperbolicSvmModel m;
        m.k = Curvature(j.at("k").get<double>());
        m.p = DiscPoint{j.at("p").at(0).get<double>(), j.at("p").at(1).get<double>()};
        m.w1 = j.at("w").at(0).get<double>();
        m.w2 = j.at("w").at(1).get<double>();
        m.lambda = j.at("lambda").get<double>();
        check_in_disc(m.p, m.k, "model_from_json");
        if (platt != nullptr && j.contains("platt")) {
            platt->A = j.at("platt").at("A").get<double>();
            platt->B = j.at("platt").at("B").get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model_from_json: ") + e.what());
    }
}

} // namespace hypfed
