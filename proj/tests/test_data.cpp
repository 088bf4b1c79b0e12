#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hypfed/data.hpp"
#include "hypfed/errors.hpp"
#include "hypfed/geometry.hpp"
#include "hypfed/rng.hpp"

#include "oracles.hpp"

using namespace hypfed;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

DiscPoint sample_point(SplitMix64& rng, double max_euc) {
    const double ang = rng.uniform_angle();
    const double r = max_euc * std::sqrt(rng.uniform01());
    return DiscPoint{r * std::cos(ang), r * std::sin(ang)};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// unique scratch paths so test cases never trip over each other's files
std::string scratch(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / ("hypfed_" + stem)).string();
}

} // namespace

TEST_CASE("plane distance closed form agrees with a numeric search", "[data]") {
    for (double kval : {1.0, 4.0}) {
        const Curvature k(kval);
        const double max_euc = 0.85 * k.s;
        SplitMix64 rng(derive_seed(41, seed_tag::trial, static_cast<std::uint64_t>(kval)));
        for (int j = 0; j < 30; ++j) {
            const DiscPoint x = sample_point(rng, max_euc);
            const DiscPoint p = sample_point(rng, 0.6 * k.s);
            const double ang = rng.uniform_angle();
            const double w1 = std::cos(ang), w2 = std::sin(ang);
            const double closed = point_to_plane_distance(x, p, w1, w2, k);
            const double numeric = oracles::plane_distance_oracle(x, p, w1, w2, k);
            REQUIRE(std::fabs(closed - numeric) <= 1e-6);
        }
    }
}

TEST_CASE("plane distance basics", "[data]") {
    const Curvature k(1.0);
    const DiscPoint p{0.2, -0.1};

    CHECK(point_to_plane_distance(p, p, 0.3, 0.4, k) == 0.0);

    // points reached along the in-plane tangent direction stay at distance zero
    SplitMix64 rng(derive_seed(43, seed_tag::data));
    for (int j = 0; j < 20; ++j) {
        const double ang = rng.uniform_angle();
        const double w1 = std::cos(ang), w2 = std::sin(ang);
        const double tau = 2.0 * rng.uniform01() - 1.0;
        TangentVector v;
        v.base = p;
        v.dx = tau * -w2;
        v.dy = tau * w1;
        const DiscPoint on_plane = exp_map(p, v, k);
        CHECK(point_to_plane_distance(on_plane, p, w1, w2, k) <= 1e-12);
    }

    // the normal's length is irrelevant
    const DiscPoint x{0.5, 0.3};
    CHECK(point_to_plane_distance(x, p, 0.3, 0.4, k) ==
          Approx(point_to_plane_distance(x, p, 0.81, 1.08, k)).epsilon(1e-14));

    // diameter through the origin: the nearest plane point is the origin itself
    CHECK(point_to_plane_distance({0.3, 0.0}, {0.0, 0.0}, 1.0, 0.0, k) ==
          Approx(dist({0.3, 0.0}, {0.0, 0.0}, k)).epsilon(1e-13));

    CHECK_THROWS_AS(point_to_plane_distance(x, p, 0.0, 0.0, k), InvalidInputError);
    CHECK_THROWS_AS(point_to_plane_distance({0.999999, 0.2}, p, 1.0, 0.0, k), DomainError);
}

TEST_CASE("synthetic generation respects margin and labels", "[data]") {
    SynthSpec spec;
    spec.N = 2000;
    spec.R = 0.95;
    spec.k = 1.0;
    spec.mu = 0.4;
    spec.gamma = 0.3;
    spec.seed = 77;

    const SynthResult r = synth_generate(spec);
    const Curvature c(spec.k);
    REQUIRE(!r.data.points.empty());
    REQUIRE(r.data.points.size() < spec.N); // the margin strips a band
    CHECK(r.data.k == spec.k);
    CHECK(r.data.R == spec.R);
    CHECK(std::hypot(r.p.x, r.p.y) == Approx(spec.mu * spec.R).epsilon(1e-12));
    CHECK(std::hypot(r.w1, r.w2) == Approx(1.0).epsilon(1e-12));

    std::size_t pos = 0, neg = 0;
    for (const LabeledPoint& lp : r.data.points) {
        REQUIRE(point_to_plane_distance(lp.x, r.p, r.w1, r.w2, c) >= spec.gamma);
        const TangentVector t = log_map(r.p, lp.x, c);
        const double s = t.dx * r.w1 + t.dy * r.w2;
        REQUIRE(lp.y == (s >= 0.0 ? 1 : -1));
        (lp.y == 1 ? pos : neg) += 1;
    }
    CHECK(pos > 0);
    CHECK(neg > 0);
}

TEST_CASE("zero margin keeps every sample and generation is deterministic", "[data]") {
    SynthSpec spec;
    spec.N = 500;
    spec.gamma = 0.0;
    spec.seed = 5;

    const SynthResult a = synth_generate(spec);
    REQUIRE(a.data.points.size() == spec.N);

    const SynthResult b = synth_generate(spec);
    REQUIRE(a.data.points.size() == b.data.points.size());
    for (std::size_t j = 0; j < a.data.points.size(); ++j) {
        REQUIRE(a.data.points[j].x.x == b.data.points[j].x.x);
        REQUIRE(a.data.points[j].x.y == b.data.points[j].x.y);
        REQUIRE(a.data.points[j].y == b.data.points[j].y);
    }
    CHECK(a.p.x == b.p.x);
    CHECK(a.w1 == b.w1);

    SynthSpec other = spec;
    other.seed = 6;
    const SynthResult d = synth_generate(other);
    bool differs = d.data.points.size() != a.data.points.size();
    for (std::size_t j = 0; !differs && j < a.data.points.size(); ++j) {
        differs = a.data.points[j].x.x != d.data.points[j].x.x;
    }
    CHECK(differs);
}

TEST_CASE("synthetic generation rejects bad specs", "[data]") {
    SynthSpec spec;
    spec.N = 50;

    SynthSpec bad = spec;
    bad.mu = 0.0;
    CHECK_THROWS_AS(synth_generate(bad), InvalidInputError);
    bad.mu = 1.0;
    CHECK_THROWS_AS(synth_generate(bad), InvalidInputError);

    bad = spec;
    bad.gamma = -0.1;
    CHECK_THROWS_AS(synth_generate(bad), InvalidInputError);

    bad = spec;
    bad.k = 4.0;
    bad.R = 0.5; // k R^2 = 1 exactly
    CHECK_THROWS_AS(synth_generate(bad), InvalidInputError);

    bad = spec;
    bad.gamma = 1e6; // nothing survives a margin wider than the disc
    CHECK_THROWS_AS(synth_generate(bad), InvalidInputError);
}

TEST_CASE("dataset csv round trip is exact", "[data]") {
    Dataset ds;
    ds.k = 2.5;
    ds.R = 0.41;
    ds.points.push_back({{0.1 + 0.2, -1.0 / 3.0}, 1});
    ds.points.push_back({{-0.12345678901234567, 0.3}, -1});
    ds.points.push_back({{0.0, 0.0}, 1});
    ds.points.push_back({{1e-300, -1e-300}, -1});

    const std::string path = scratch("roundtrip.csv");
    save_dataset(path, ds);

    // header is part of the format contract
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x1,x2,label");
    in.close();

    const Dataset back = load_dataset(path);
    REQUIRE(back.points.size() == ds.points.size());
    CHECK(back.k == ds.k);
    CHECK(back.R == ds.R);
    for (std::size_t j = 0; j < ds.points.size(); ++j) {
        REQUIRE(back.points[j].x.x == ds.points[j].x.x);
        REQUIRE(back.points[j].x.y == ds.points[j].x.y);
        REQUIRE(back.points[j].y == ds.points[j].y);
    }

    std::filesystem::remove(path);
    std::filesystem::remove(scratch("roundtrip.json"));
}

TEST_CASE("sidecar naming follows the csv stem", "[data]") {
    Dataset ds;
    ds.points.push_back({{0.1, 0.2}, 1});

    const std::string plain = scratch("stem.csv");
    save_dataset(plain, ds);
    CHECK(std::filesystem::exists(scratch("stem.json")));

    const std::string odd = scratch("stem.dat");
    save_dataset(odd, ds);
    CHECK(std::filesystem::exists(scratch("stem.dat.json")));

    for (const char* n : {"stem.csv", "stem.json", "stem.dat", "stem.dat.json"}) {
        std::filesystem::remove(scratch(n));
    }
}

TEST_CASE("loading tolerates blank lines and carriage returns", "[data]") {
    const std::string path = scratch("crlf.csv");
    write_text(path, "x1,x2,label\r\n\r\n0.25,-0.5,1\r\n0.1,0.1,-1\r\n");
    const Dataset ds = load_dataset(path);
    REQUIRE(ds.points.size() == 2);
    CHECK(ds.points[0].x.x == 0.25);
    CHECK(ds.points[0].x.y == -0.5);
    CHECK(ds.points[0].y == 1);
    CHECK(ds.k == 1.0); // no sidecar: documented defaults
    CHECK(ds.R == 0.95);
    std::filesystem::remove(path);
}

TEST_CASE("empty and header-only files load as empty datasets", "[data]") {
    const std::string empty = scratch("empty.csv");
    write_text(empty, "");
    const Dataset a = load_dataset(empty);
    CHECK(a.points.empty());
    CHECK(a.k == 1.0);
    CHECK(a.R == 0.95);

    const std::string header_only = scratch("header_only.csv");
    write_text(header_only, "x1,x2,label\n");
    const Dataset b = load_dataset(header_only);
    CHECK(b.points.empty());

    std::filesystem::remove(empty);
    std::filesystem::remove(header_only);
}

TEST_CASE("malformed rows are reported by number", "[data]") {
    const std::string path = scratch("malformed.csv");

    write_text(path, "x1,x2,label\n0.1,0.2\n");
    CHECK_THROWS_MATCHES(load_dataset(path), ParseError, MessageMatches(ContainsSubstring("row 2")));

    write_text(path, "x1,x2,label\n0.1,0.2,1\nfoo,0.2,1\n");
    CHECK_THROWS_MATCHES(load_dataset(path), ParseError, MessageMatches(ContainsSubstring("row 3")));

    write_text(path, "x1,x2,label\n0.1,0.2,1,junk\n");
    CHECK_THROWS_AS(load_dataset(path), ParseError);

    std::filesystem::remove(path);
}

TEST_CASE("rows outside the disc are rejected with their position", "[data]") {
    const std::string path = scratch("outside.csv");
    write_text(path, "x1,x2,label\n0.99,0.3,1\n");
    CHECK_THROWS_MATCHES(load_dataset(path), ParseError,
                         MessageMatches(ContainsSubstring("outside the disc at row 2")));

    // the sidecar's curvature decides what fits in the disc
    write_text(path, "x1,x2,label\n0.6,0.0,1\n");
    write_text(scratch("outside.json"), "{\"k\": 4.0, \"R\": 0.45}");
    CHECK_THROWS_AS(load_dataset(path), ParseError);

    write_text(scratch("outside.json"), "{\"k\": 1.0, \"R\": 0.95}");
    const Dataset ok = load_dataset(path);
    REQUIRE(ok.points.size() == 1);

    std::filesystem::remove(path);
    std::filesystem::remove(scratch("outside.json"));
}

TEST_CASE("missing files and bad sidecars raise parse errors", "[data]") {
    CHECK_THROWS_MATCHES(load_dataset(scratch("does_not_exist.csv")), ParseError,
                         MessageMatches(ContainsSubstring("cannot open")));

    const std::string path = scratch("badside.csv");
    write_text(path, "x1,x2,label\n0.1,0.2,1\n");
    write_text(scratch("badside.json"), "{\"k\": 1.0}"); // R missing
    CHECK_THROWS_MATCHES(load_dataset(path), ParseError, MessageMatches(ContainsSubstring("sidecar")));

    write_text(scratch("badside.json"), "not json at all");
    CHECK_THROWS_AS(load_dataset(path), ParseError);

    std::filesystem::remove(path);
    std::filesystem::remove(scratch("badside.json"));
}
