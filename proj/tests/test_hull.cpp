#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "hypfed/hull.hpp"
#include "hypfed/quantize.hpp"
#include "hypfed/rng.hpp"

using namespace hypfed;
using Catch::Approx;

namespace {

std::set<std::pair<double, double>> as_set(const ConvexHull& h) {
    std::set<std::pair<double, double>> s;
    for (const DiscPoint& p : h.extremes) s.emplace(p.x, p.y);
    return s;
}

} // namespace

TEST_CASE("ccw sign convention", "[hull]") {
    Curvature c(1.0);
    CHECK(ccw({0.0, 0.0}, {0.5, 0.0}, {0.7, 0.0}, c) == 0.0);
    CHECK(ccw({0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, c) > 0.0);
    CHECK(ccw({0.0, 0.0}, {0.5, 0.0}, {0.0, -0.5}, c) < 0.0);
    CHECK_THROWS_AS(ccw({0.1, 0.1}, {0.1, 0.1}, {0.3, 0.0}, c), InvalidInputError);
    CHECK_THROWS_AS(ccw({0.1, 0.1}, {0.3, 0.0}, {0.1, 0.1}, c), InvalidInputError);

    SplitMix64 rng(31);
    for (int i = 0; i < 500; ++i) {
        DiscPoint a{rng.uniform01() * 0.8 - 0.4, rng.uniform01() * 0.8 - 0.4};
        DiscPoint b{rng.uniform01() * 0.8 - 0.4, rng.uniform01() * 0.8 - 0.4};
        DiscPoint x{rng.uniform01() * 0.8 - 0.4, rng.uniform01() * 0.8 - 0.4};
        if (a == b || a == x) continue;
        REQUIRE(ccw(a, b, x, c) == Approx(-ccw(a, x, b, c)).margin(1e-15));
    }
}

TEST_CASE("graham scan handles tiny inputs", "[hull]") {
    Curvature c(1.0);
    CHECK_THROWS_AS(graham_scan({}, c), InvalidInputError);

    ConvexHull one = graham_scan({{0.1, 0.2}}, c);
    REQUIRE(one.size() == 1);
    CHECK(one.extremes[0] == DiscPoint{0.1, 0.2});

    ConvexHull two = graham_scan({{0.1, 0.2}, {-0.3, 0.0}}, c);
    CHECK(two.size() == 2);

    // duplicates collapse before the scan
    ConvexHull dup = graham_scan({{0.1, 0.2}, {0.1, 0.2}, {0.1, 0.2}}, c);
    CHECK(dup.size() == 1);
}

TEST_CASE("graham scan on canonical small sets", "[hull]") {
    Curvature c(1.0);

    std::vector<DiscPoint> tri{{0.3, 0.0}, {-0.2, 0.25}, {-0.1, -0.3}};
    ConvexHull h = graham_scan(tri, c);
    CHECK(as_set(h) == as_set(ConvexHull{tri}));
    REQUIRE(h.size() == 3);
    // CCW order: every consecutive triple turns left
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(ccw(h.extremes[i], h.extremes[(i + 1) % 3], h.extremes[(i + 2) % 3], c) > 0.0);
    }

    // triangle plus one interior point
    std::vector<DiscPoint> tri4 = tri;
    tri4.push_back({0.0, 0.0});
    CHECK(as_set(graham_scan(tri4, c)) == as_set(ConvexHull{tri}));

    // collinear points on a diameter: the middle one is removed
    ConvexHull diam = graham_scan({{0.2, 0.0}, {0.5, 0.0}, {0.8, 0.0}}, c);
    REQUIRE(diam.size() == 2);
    CHECK(diam.extremes[0] == DiscPoint{0.8, 0.0});
    CHECK(diam.extremes[1] == DiscPoint{0.2, 0.0});

    // square of symmetric points plus center
    std::vector<DiscPoint> sq{{0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}, {0.0, -0.5}, {0.0, 0.0}};
    ConvexHull hs = graham_scan(sq, c);
    CHECK(hs.size() == 4);
    CHECK(as_set(brute_force_hull(sq, c)) == as_set(hs));
}

TEST_CASE("hull starts at the point farthest from the origin", "[hull]") {
    Curvature c(1.0);
    SplitMix64 rng(12);
    for (int t = 0; t < 50; ++t) {
        std::vector<DiscPoint> pts = uniform_sample(30, 0.9, c, rng.next());
        ConvexHull h = graham_scan(pts, c);
        double far = 0.0;
        for (const DiscPoint& p : pts) far = std::max(far, norm(p));
        REQUIRE(norm(h.extremes[0]) == Approx(far).margin(1e-15));
    }
}

TEST_CASE("oracle equivalence on seeded instances", "[hull]") {
    Curvature c(1.0);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 4 + static_cast<std::size_t>(derive_seed(400, seed_tag::data, t) % 47);
        std::vector<DiscPoint> pts = uniform_sample(n, 0.95, c, derive_seed(401, seed_tag::data, t));
        ConvexHull fast = graham_scan(pts, c);
        ConvexHull slow = brute_force_hull(pts, c);
        REQUIRE(as_set(fast) == as_set(slow));
    }
}

TEST_CASE("hull contains every input point", "[hull]") {
    Curvature c(1.0);
    SplitMix64 rng(77);
    for (int t = 0; t < 40; ++t) {
        std::vector<DiscPoint> pts = uniform_sample(80, 0.93, c, rng.next());
        ConvexHull h = graham_scan(pts, c);
        for (const DiscPoint& p : pts) {
            REQUIRE(in_hull(h, p, c));
        }
        // and a point well outside is rejected
        REQUIRE_FALSE(in_hull(h, {0.949, 0.0}, c));
    }
}

TEST_CASE("graham scan is idempotent on its own output", "[hull]") {
    Curvature c(1.0);
    SplitMix64 rng(123);
    for (int t = 0; t < 30; ++t) {
        std::vector<DiscPoint> pts = uniform_sample(100, 0.9, c, rng.next());
        ConvexHull h = graham_scan(pts, c);
        ConvexHull again = graham_scan(h.extremes, c);
        REQUIRE(h.extremes.size() == again.extremes.size());
        REQUIRE(as_set(h) == as_set(again));
    }
}

TEST_CASE("hull of a union equals hull of combined extremes", "[hull]") {
    Curvature c(1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<DiscPoint> a = uniform_sample(60, 0.9, c, derive_seed(9000, seed_tag::data, 2 * t));
        std::vector<DiscPoint> b = uniform_sample(60, 0.9, c, derive_seed(9000, seed_tag::data, 2 * t + 1));
        std::vector<DiscPoint> all = a;
        all.insert(all.end(), b.begin(), b.end());

        ConvexHull ha = graham_scan(a, c);
        ConvexHull hb = graham_scan(b, c);
        std::vector<DiscPoint> ext = ha.extremes;
        ext.insert(ext.end(), hb.extremes.begin(), hb.extremes.end());

        REQUIRE(as_set(graham_scan(all, c)) == as_set(graham_scan(ext, c)));
    }
}

TEST_CASE("in_triangle agrees with hull membership", "[hull]") {
    Curvature c(1.0);
    const DiscPoint a{0.4, 0.0}, b{-0.3, 0.35}, d{-0.2, -0.4};
    CHECK(in_triangle(a, b, d, {0.0, 0.0}, c));
    CHECK_FALSE(in_triangle(a, b, d, {0.6, 0.6}, c));
    // vertex of the triangle itself sits on two edges
    CHECK(in_triangle(a, b, d, {0.4 - 1e-15, 0.0}, c));
    // fully collinear "triangle" certifies nothing
    CHECK_FALSE(in_triangle({0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}, {0.15, 0.0}, c));
}

TEST_CASE("brute force hull enforces its size cap", "[hull]") {
    Curvature c(1.0);
    std::vector<DiscPoint> pts = uniform_sample(61, 0.9, c, 5);
    CHECK_THROWS_AS(brute_force_hull(pts, c), InvalidInputError);
    CHECK_THROWS_AS(brute_force_hull({}, c), InvalidInputError);
}

TEST_CASE("scan cost grows roughly like n log n", "[hull]") {
    // Sanity check, not a benchmark: quadratic growth would overshoot the
    // allowance by far more than the 2x slack below.
    Curvature c(1.0);
    auto time_once = [&](std::size_t n) {
        std::vector<DiscPoint> pts = uniform_sample(n, 0.95, c, 42);
        const auto t0 = std::chrono::steady_clock::now();
        ConvexHull h = graham_scan(pts, c);
        const auto t1 = std::chrono::steady_clock::now();
        REQUIRE(!h.empty());
        return std::chrono::duration<double>(t1 - t0).count();
    };
    time_once(1000); // warm-up
    const double t3 = time_once(1000);
    const double t5 = time_once(100000);
    const double ratio = t5 / std::max(t3, 1e-9);
    const double nlogn = (100000.0 * std::log(100000.0)) / (1000.0 * std::log(1000.0));
    CHECK(ratio < 2.0 * nlogn * 2.0);
}
