#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"
#include "hypfed/quantize.hpp"
#include "hypfed/rng.hpp"
#include "hypfed/svm.hpp"

namespace hypfed {

struct SynthSpec {
    std::size_t N = 20000;
    double R = 0.95;
    double k = 1.0;
    double mu = 0.4;
    double gamma = 0.2;
    std::uint64_t seed = 1;
};

struct Dataset {
    std::vector<LabeledPoint> points;
    double k = 1.0;
    double R = 0.95;
};

struct SynthResult {
    Dataset data;
    DiscPoint p;       // ground-truth reference point
    double w1 = 0.0;   // ground-truth tangent normal
    double w2 = 0.0;
};

// Hyperbolic distance from x to the hyperplane through p with tangent
// normal w: (1/sqrt(k)) asinh( 2 sqrt(k) |<(-p)+x, w>| / ((1 - k||(-p)+x||^2) ||w||) )
// where + is Mobius addition. Zero exactly on the hyperplane.
inline double point_to_plane_distance(const DiscPoint& x, const DiscPoint& p, double w1, double w2,
                                      const Curvature& c) {
    const double wn = std::hypot(w1, w2);
    if (wn == 0.0) throw InvalidInputError("point_to_plane_distance: zero normal");
    check_in_disc(x, c, "point_to_plane_distance");
    check_in_disc(p, c, "point_to_plane_distance");
    const DiscPoint t = mobius_add(neg(p), x, c);
    const double inner = t.x * w1 + t.y * w2;
    const double denom = (1.0 - c.k * norm2(t)) * wn;
    return (1.0 / std::sqrt(c.k)) * std::asinh(2.0 * std::sqrt(c.k) * std::fabs(inner) / denom);
}

// Synthetic generation: uniform hyperbolic sample, random reference point at
// radius mu*R, random unit normal, margin-gamma filtering, sign labels.
inline SynthResult synth_generate(const SynthSpec& spec) {
    if (spec.mu <= 0.0 || spec.mu >= 1.0) throw InvalidInputError("synth_generate: mu must lie in (0,1)");
    if (spec.gamma < 0.0) throw InvalidInputError("synth_generate: gamma must be nonnegative");
    const Curvature c(spec.k);
    if (spec.R >= c.s) throw InvalidInputError("synth_generate: R must satisfy k R^2 < 1");

    std::vector<DiscPoint> raw = uniform_sample(spec.N, spec.R, c, derive_seed(spec.seed, seed_tag::data, 0));

    SplitMix64 rng(derive_seed(spec.seed, seed_tag::data, 1));
    const double angle_p = rng.uniform_angle();
    const DiscPoint p{spec.mu * spec.R * std::cos(angle_p), spec.mu * spec.R * std::sin(angle_p)};
    const double angle_w = rng.uniform_angle();
    const double w1 = std::cos(angle_w), w2 = std::sin(angle_w);

    SynthResult out;
    out.p = p;
    out.w1 = w1;
    out.w2 = w2;
    out.data.k = spec.k;
    out.data.R = spec.R;
    for (const DiscPoint& x : raw) {
        if (spec.gamma > 0.0 && point_to_plane_distance(x, p, w1, w2, c) < spec.gamma) continue;
        const TangentVector t = log_map(p, x, c);
        const double s = t.dx * w1 + t.dy * w2;
        out.data.points.push_back(LabeledPoint{x, s >= 0.0 ? 1 : -1});
    }
    if (out.data.points.empty()) {
        throw InvalidInputError("synth_generate: margin gamma removed every point");
    }
    return out;
}

namespace detail {

inline std::string sidecar_path(const std::string& csv_path) {
    const std::string suffix = ".csv";
    if (csv_path.size() > suffix.size() &&
        csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return csv_path.substr(0, csv_path.size() - suffix.size()) + ".json";
    }
    return csv_path + ".json";
}

inline std::string format_17g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw ParseError("save_dataset: cannot open " + path + " for writing");
    out << "x1,x2,label\n";
    for (const LabeledPoint& lp : ds.points) {
        out << detail::format_17g(lp.x.x) << ',' << detail::format_17g(lp.x.y) << ',' << lp.y << '\n';
    }
    if (!out) throw ParseError("save_dataset: write failure on " + path);
    out.close();

    nlohmann::json meta;
    meta["k"] = ds.k;
    meta["R"] = ds.R;
    std::ofstream side(detail::sidecar_path(path));
    if (!side) throw ParseError("save_dataset: cannot open " + detail::sidecar_path(path));
    side << meta.dump(2) << '\n';
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_dataset: cannot open " + path);

    Dataset ds;
    {
        std::ifstream side(detail::sidecar_path(path));
        if (side) {
            nlohmann::json meta;
            try {
                side >> meta;
                ds.k = meta.at("k").get<double>();
                ds.R = meta.at("R").get<double>();
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("load_dataset: bad sidecar " + detail::sidecar_path(path) + ": " + e.what());
            }
        }
        // missing sidecar: keep the documented defaults (k=1, R=0.95)
    }
    const Curvature c(ds.k);

    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            continue; // first nonempty line is the header
        }
        std::istringstream ss(line);
        std::string f1, f2, f3;
        if (!std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') || !std::getline(ss, f3)) {
            throw ParseError("load_dataset: malformed row " + std::to_string(row) + " in " + path);
        }
        LabeledPoint lp;
        try {
            std::size_t used = 0;
            lp.x.x = std::stod(f1, &used);
            if (used != f1.size()) throw std::invalid_argument(f1);
            lp.x.y = std::stod(f2, &used);
            if (used != f2.size()) throw std::invalid_argument(f2);
            lp.y = std::stoi(f3, &used);
            if (used != f3.size()) throw std::invalid_argument(f3);
        } catch (const std::exception&) {
            throw ParseError("load_dataset: malformed row " + std::to_string(row) + " in " + path);
        }
        try {
            check_in_disc(lp.x, c, "load_dataset");
        } catch (const DomainError&) {
            throw ParseError("load_dataset: point outside the disc at row " + std::to_string(row) + " in " + path);
        }
        ds.points.push_back(lp);
    }
    return ds;
}

} // namespace hypfed
