#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hypfed/errors.hpp"
#include "hypfed/federation.hpp"
#include "hypfed/rng.hpp"

using namespace hypfed;
using Catch::Approx;

namespace {

std::vector<LabeledPoint> cluster_points(SplitMix64& rng, double cx, double cy, int label, int count,
                                         double spread = 0.08) {
    std::vector<LabeledPoint> out;
    for (int j = 0; j < count; ++j) {
        const double ang = rng.uniform_angle();
        const double r = spread * std::sqrt(rng.uniform01());
        out.push_back({{cx + r * std::cos(ang), cy + r * std::sin(ang)}, label});
    }
    return out;
}

// L clients, each holding both halves of a well-separated two-cluster
// problem, plus a held-out test set from the same distribution.
struct BinaryFixture {
    std::vector<std::vector<LabeledPoint>> per_client;
    std::vector<LabeledPoint> test;
};

BinaryFixture binary_fixture(int L, int per_class, u64 seed) {
    BinaryFixture fx;
    SplitMix64 rng(derive_seed(seed, seed_tag::data));
    for (int i = 0; i < L; ++i) {
        std::vector<LabeledPoint> mine = cluster_points(rng, 0.5, 0.0, 1, per_class);
        const std::vector<LabeledPoint> other = cluster_points(rng, -0.5, 0.0, -1, per_class);
        mine.insert(mine.end(), other.begin(), other.end());
        fx.per_client.push_back(std::move(mine));
    }
    for (const LabeledPoint& lp : cluster_points(rng, 0.5, 0.0, 1, 20)) fx.test.push_back(lp);
    for (const LabeledPoint& lp : cluster_points(rng, -0.5, 0.0, -1, 20)) fx.test.push_back(lp);
    return fx;
}

std::vector<std::vector<int>> identity_slots(int L, int J) {
    std::vector<int> id(static_cast<std::size_t>(J));
    for (int c = 0; c < J; ++c) id[static_cast<std::size_t>(c)] = c;
    return std::vector<std::vector<int>>(static_cast<std::size_t>(L), id);
}

using VertexList = std::vector<std::pair<double, double>>;

VertexList sorted_vertices(const ConvexHull& h) {
    VertexList v;
    for (const DiscPoint& p : h.extremes) v.push_back({p.x, p.y});
    std::sort(v.begin(), v.end());
    return v;
}

std::multiset<VertexList> hull_multiset(const std::vector<ConvexHull>& hulls) {
    std::multiset<VertexList> out;
    for (const ConvexHull& h : hulls) out.insert(sorted_vertices(h));
    return out;
}

std::multiset<VertexList> client_hull_multiset(const std::vector<ClientState>& clients) {
    std::multiset<VertexList> out;
    for (const ClientState& cs : clients) {
        for (const ConvexHull& h : cs.slot_hulls) out.insert(sorted_vertices(h));
    }
    return out;
}

int ceil_log2(u64 q) {
    int bits = 0;
    u64 v = q - 1;
    while (v > 0) {
        ++bits;
        v >>= 1;
    }
    return bits < 1 ? 1 : bits;
}

RunConfig protocol_config(int L, int J) {
    RunConfig cfg;
    cfg.L = L;
    cfg.J = J;
    cfg.epsilon = 0.3;
    cfg.lambda = 100.0;
    return cfg;
}

} // namespace

TEST_CASE("automatic code order tracks the client and class counts", "[federation]") {
    CHECK(default_bh_order(10, 2) == 8);
    CHECK(default_bh_order(5, 2) == 10);
    CHECK(default_bh_order(3, 2) == 6);
    CHECK(default_bh_order(2, 2) == 4);
    CHECK(default_bh_order(1, 2) == 2);
    // so many slots that even order 2 overruns the element-size cap
    CHECK_THROWS_AS(default_bh_order(600000, 2), InvalidInputError);
}

TEST_CASE("grid construction follows the configured mode", "[federation]") {
    const Curvature k(1.0);
    RunConfig cfg;
    cfg.epsilon = 0.5;

    const QuantGrid dist_grid = make_grid(cfg, 0.95, k);
    CHECK(dist_grid.mode == GridMode::distance_margin);
    CHECK(dist_grid.epsilon == 0.5);

    cfg.grid_mode = "equal-area";
    cfg.ea_theta = 32;
    cfg.ea_rh = 4;
    const QuantGrid ea_grid = make_grid(cfg, 0.95, k);
    CHECK(ea_grid.mode == GridMode::equal_area);
    CHECK(ea_grid.N_theta == 32);
    CHECK(ea_grid.N_rh == 4);

    cfg.grid_mode = "hexagonal";
    CHECK_THROWS_AS(make_grid(cfg, 0.95, k), InvalidInputError);
}

TEST_CASE("the protocol reconstructs every client hull exactly", "[federation]") {
    const Curvature k(1.0);
    for (int L : {1, 2, 3}) {
        const BinaryFixture fx = binary_fixture(L, 12, 100 + static_cast<u64>(L));
        const RunConfig cfg = protocol_config(L, 2);
        const FederatedOutcome out = run_protocol(fx.per_client, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k,
                                                  cfg, 31337, false);
        REQUIRE(out.ok);
        REQUIRE(out.server.decoded_hulls.size() == static_cast<std::size_t>(2 * L));
        REQUIRE(out.clients.size() == static_cast<std::size_t>(L));

        // the server's reconstruction is the clients' quantized hulls, exactly
        REQUIRE(hull_multiset(out.server.decoded_hulls) == client_hull_multiset(out.clients));

        // reported complexity metrics agree with a recount
        double sum = 0.0, mx = 0.0;
        int k_max = 1;
        for (const ClientState& cs : out.clients) {
            int total = 0;
            for (const ConvexHull& h : cs.slot_hulls) {
                sum += static_cast<double>(h.size());
                mx = std::max(mx, static_cast<double>(h.size()));
                total += static_cast<int>(h.size());
            }
            k_max = std::max(k_max, total);
        }
        CHECK(out.avg_hull == Approx(sum / (2.0 * L)).epsilon(1e-15));
        CHECK(out.max_hull == mx);
        CHECK(out.K_max == k_max);
        CHECK(out.h_used == default_bh_order(L, 2));
    }
}

TEST_CASE("transcript records the wire format faithfully", "[federation]") {
    const Curvature k(1.0);
    const int L = 2;
    const BinaryFixture fx = binary_fixture(L, 12, 777);
    const RunConfig cfg = protocol_config(L, 2);
    const FederatedOutcome out =
        run_protocol(fx.per_client, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k, cfg, 4321, true);
    REQUIRE(out.ok);

    const nlohmann::json& tr = out.transcript;
    REQUIRE(tr.is_object());
    CHECK(tr.at("L").get<int>() == L);
    CHECK(tr.at("J").get<int>() == 2);
    CHECK(tr.at("q").get<u64>() == out.q);
    CHECK(tr.at("h").get<int>() == out.h_used);
    CHECK(tr.at("K_max").get<int>() == out.K_max);
    REQUIRE(tr.at("sequence").size() == static_cast<std::size_t>(2 * L));

    const std::size_t n_sums = tr.at("n_sums").get<std::size_t>();
    CHECK(n_sums == 2 * static_cast<std::size_t>(L) * static_cast<std::size_t>(out.K_max));

    // shares go over the wire as hex: 16 byte header plus 8 bytes per sum
    REQUIRE(tr.at("shares").size() == static_cast<std::size_t>(L));
    for (const auto& share : tr.at("shares")) {
        CHECK(share.at("hex").get<std::string>().size() == 2 * (16 + 8 * n_sums));
    }
    CHECK(tr.at("aggregate_hex").get<std::string>().size() == 2 * (16 + 8 * n_sums));

    // communication accounting: one field element per power sum
    CHECK(out.bits_per_client == static_cast<double>(n_sums) * ceil_log2(out.q));

    // the decoded section names exactly the bins the clients transmitted
    std::set<u64> sent;
    for (const ClientState& cs : out.clients) {
        for (const ConvexHull& h : cs.slot_hulls) {
            for (u64 b : hull_bins(h, cs.grid)) sent.insert(b);
        }
    }
    std::set<u64> decoded_bins;
    for (const auto& entry : tr.at("decoded")) {
        decoded_bins.insert(entry.at("bin").get<u64>());
        CHECK(entry.at("elements").size() >= 1);
    }
    CHECK(decoded_bins == sent);

    // truth section: one record per client with J slots each
    REQUIRE(tr.at("truth").size() == static_cast<std::size_t>(L));
    for (const auto& rec : tr.at("truth")) {
        CHECK(rec.at("slots").size() == 2);
    }
}

TEST_CASE("label switching leaves every reported metric unchanged", "[federation]") {
    const Curvature k(1.0);
    const int L = 3;
    const BinaryFixture fx = binary_fixture(L, 10, 2024);
    const RunConfig cfg = protocol_config(L, 2);

    const FederatedOutcome plain =
        run_protocol(fx.per_client, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k, cfg, 55, false);
    // flip the class -> slot bijection on two of the three clients
    std::vector<std::vector<int>> flipped = identity_slots(L, 2);
    flipped[0] = {1, 0};
    flipped[2] = {1, 0};
    const FederatedOutcome switched =
        run_protocol(fx.per_client, flipped, {-1, 1}, fx.test, 0.95, k, cfg, 55, false);

    REQUIRE(plain.ok);
    REQUIRE(switched.ok);
    CHECK(plain.acc_poincare == switched.acc_poincare);
    CHECK(plain.acc_euclidean == switched.acc_euclidean);
    CHECK(plain.avg_hull == switched.avg_hull);
    CHECK(plain.max_hull == switched.max_hull);
    CHECK(plain.q == switched.q);
    CHECK(plain.K_max == switched.K_max);
    CHECK(plain.bits_per_client == switched.bits_per_client);
    CHECK(hull_multiset(plain.server.decoded_hulls) == hull_multiset(switched.server.decoded_hulls));
}

TEST_CASE("client order does not influence the outcome", "[federation]") {
    const Curvature k(1.0);
    const int L = 3;
    const BinaryFixture fx = binary_fixture(L, 10, 909);
    const RunConfig cfg = protocol_config(L, 2);

    const FederatedOutcome fwd =
        run_protocol(fx.per_client, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k, cfg, 7, false);

    std::vector<std::vector<LabeledPoint>> reversed(fx.per_client.rbegin(), fx.per_client.rend());
    const FederatedOutcome rev =
        run_protocol(reversed, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k, cfg, 7, false);

    REQUIRE(fwd.ok);
    REQUIRE(rev.ok);
    CHECK(fwd.acc_poincare == rev.acc_poincare);
    CHECK(fwd.acc_euclidean == rev.acc_euclidean);
    CHECK(fwd.avg_hull == rev.avg_hull);
    CHECK(fwd.q == rev.q);
    CHECK(fwd.bits_per_client == rev.bits_per_client);
    CHECK(hull_multiset(fwd.server.decoded_hulls) == hull_multiset(rev.server.decoded_hulls));
}

TEST_CASE("well-separated clusters classify cleanly after federation", "[federation]") {
    const Curvature k(1.0);
    const int L = 2;
    const BinaryFixture fx = binary_fixture(L, 15, 606);
    const RunConfig cfg = protocol_config(L, 2);
    const FederatedOutcome out =
        run_protocol(fx.per_client, identity_slots(L, 2), {-1, 1}, fx.test, 0.95, k, cfg, 11, false);
    REQUIRE(out.ok);
    CHECK(out.acc_poincare >= 0.95);
    CHECK(out.acc_euclidean >= 0.95);
}

TEST_CASE("the multiclass path groups and classifies three clusters", "[federation]") {
    const Curvature k(1.0);
    const int L = 3, J = 3;
    SplitMix64 rng(derive_seed(3030, seed_tag::data));
    const double angles[] = {0.0, 2.0943951023931953, 4.1887902047863905};

    std::vector<std::vector<LabeledPoint>> per_client;
    for (int i = 0; i < L; ++i) {
        std::vector<LabeledPoint> mine;
        for (int c = 0; c < J; ++c) {
            const auto pts = cluster_points(rng, 0.5 * std::cos(angles[c]), 0.5 * std::sin(angles[c]), c + 1, 8);
            mine.insert(mine.end(), pts.begin(), pts.end());
        }
        per_client.push_back(std::move(mine));
    }
    std::vector<LabeledPoint> test;
    for (int c = 0; c < J; ++c) {
        const auto pts = cluster_points(rng, 0.5 * std::cos(angles[c]), 0.5 * std::sin(angles[c]), c + 1, 15);
        test.insert(test.end(), pts.begin(), pts.end());
    }

    const RunConfig cfg = protocol_config(L, J);
    const FederatedOutcome out =
        run_protocol(per_client, identity_slots(L, J), {1, 2, 3}, test, 0.95, k, cfg, 99, false);
    REQUIRE(out.ok);
    REQUIRE(out.server.decoded_hulls.size() == static_cast<std::size_t>(L * J));
    REQUIRE(hull_multiset(out.server.decoded_hulls) == client_hull_multiset(out.clients));
    CHECK(out.acc_poincare >= 0.9);
    CHECK(out.acc_euclidean == 0.0); // the Euclidean baseline is binary-only
}

TEST_CASE("hull-restricted centralized training loses little accuracy", "[federation]") {
    SynthSpec spec;
    spec.N = 1200;
    spec.R = 0.95;
    spec.mu = 0.4;
    spec.gamma = 0.2;
    spec.seed = 42;
    const SynthResult synth = synth_generate(spec);
    const Curvature k(spec.k);

    std::vector<LabeledPoint> train, test;
    detail::split_train_test(synth.data.points, 0.9, derive_seed(42, seed_tag::split), train, test);
    REQUIRE(!train.empty());
    REQUIRE(!test.empty());

    const double cp = run_centralized(train, test, k, 20000.0, "CP");
    const double ch_cp = run_centralized(train, test, k, 20000.0, "CH-CP");
    const double ce = run_centralized(train, test, k, 20000.0, "CE");
    const double ch_ce = run_centralized(train, test, k, 20000.0, "CH-CE");

    CHECK(cp >= 0.9);
    CHECK(ch_cp >= cp - 0.08);
    CHECK(ce >= 0.5);
    CHECK(ch_ce >= 0.5);
}

TEST_CASE("centralized baselines validate their inputs", "[federation]") {
    const Curvature k(1.0);
    SplitMix64 rng(derive_seed(17, seed_tag::data));
    std::vector<LabeledPoint> multi = cluster_points(rng, 0.4, 0.0, 1, 10);
    for (const LabeledPoint& lp : cluster_points(rng, -0.4, 0.0, 2, 10)) multi.push_back(lp);

    CHECK_THROWS_AS(run_centralized(multi, multi, k, 10.0, "XX"), InvalidInputError);
    // non +1/-1 ids only work on the Poincare side
    CHECK_THROWS_AS(run_centralized(multi, multi, k, 10.0, "CE"), InvalidInputError);
    CHECK(run_centralized(multi, multi, k, 10.0, "CP") >= 0.9);
}

TEST_CASE("federated trials capture failures instead of throwing", "[federation]") {
    const Curvature k(1.0);
    const BinaryFixture fx = binary_fixture(2, 8, 13);
    std::vector<LabeledPoint> train;
    for (const auto& part : fx.per_client) train.insert(train.end(), part.begin(), part.end());

    RunConfig cfg = protocol_config(2, 3); // J=3 contradicts the binary data
    const FederatedOutcome out = run_federated_trial(train, fx.test, 0.95, k, cfg, 1, false);
    CHECK_FALSE(out.ok);
    CHECK(out.error.find("classes") != std::string::npos);

    // direct protocol misuse is typed
    RunConfig ok_cfg = protocol_config(2, 2);
    std::vector<std::vector<LabeledPoint>> missing_class = fx.per_client;
    std::vector<LabeledPoint> only_plus;
    for (const LabeledPoint& lp : missing_class[1]) {
        if (lp.y == 1) only_plus.push_back(lp);
    }
    missing_class[1] = only_plus;
    CHECK_THROWS_AS(
        run_protocol(missing_class, identity_slots(2, 2), {-1, 1}, fx.test, 0.95, k, ok_cfg, 1, false),
        ProtocolError);

    std::vector<std::vector<int>> bad_slots = identity_slots(2, 2);
    bad_slots[0] = {0};
    CHECK_THROWS_AS(run_protocol(fx.per_client, bad_slots, {-1, 1}, fx.test, 0.95, k, ok_cfg, 1, false),
                    InvalidInputError);
    CHECK_THROWS_AS(run_protocol(fx.per_client, identity_slots(2, 1), {1}, fx.test, 0.95, k, ok_cfg, 1, false),
                    InvalidInputError);
    CHECK_THROWS_AS(run_protocol({}, {}, {-1, 1}, fx.test, 0.95, k, ok_cfg, 1, false), InvalidInputError);
}

TEST_CASE("experiments are deterministic and parallel-safe", "[federation]") {
    RunConfig cfg;
    cfg.L = 3;
    cfg.J = 2;
    cfg.epsilon = 0.3;
    cfg.lambda = 200.0;
    cfg.trials = 2;
    cfg.seed = 5150;
    cfg.synth.N = 500;
    cfg.synth.gamma = 0.3;
    cfg.baselines = {"FLP", "FLE", "CP", "CE"};

    const ExperimentResult a = run_experiment(cfg);
    const ExperimentResult b = run_experiment(cfg);
    RunConfig par = cfg;
    par.jobs = 2;
    const ExperimentResult c = run_experiment(par);

    REQUIRE(a.trials.size() == 2);
    for (const ExperimentResult* other : {&b, &c}) {
        REQUIRE(other->trials.size() == a.trials.size());
        for (std::size_t t = 0; t < a.trials.size(); ++t) {
            const TrialRecord& x = a.trials[t];
            const TrialRecord& y = other->trials[t];
            REQUIRE(x.trial_seed == y.trial_seed);
            REQUIRE(x.fl_ok == y.fl_ok);
            REQUIRE(x.accuracy == y.accuracy);
            REQUIRE(x.avg_hull == y.avg_hull);
            REQUIRE(x.bits_per_client == y.bits_per_client);
            REQUIRE(x.q == y.q);
        }
    }

    // every requested baseline reported on every trial
    for (const TrialRecord& rec : a.trials) {
        REQUIRE(rec.fl_ok);
        for (const char* name : {"FLP", "FLE", "CP", "CE"}) {
            REQUIRE(rec.accuracy.count(name) == 1);
        }
    }

    // the summary is the per-baseline mean
    std::vector<double> flp;
    for (const TrialRecord& rec : a.trials) flp.push_back(rec.accuracy.at("FLP"));
    REQUIRE(a.summary.count("FLP") == 1);
    CHECK(a.summary.at("FLP").first == Approx(stats::mean(flp)).epsilon(1e-15));

    // the first transcript is captured once per experiment
    CHECK(a.first_transcript.contains("q"));
    CHECK(c.first_transcript.contains("q"));
}

TEST_CASE("run config json round trip", "[federation]") {
    RunConfig cfg;
    cfg.L = 7;
    cfg.J = 3;
    cfg.epsilon = 0.125;
    cfg.lambda = 3.5;
    cfg.h = 4;
    cfg.seed = 987654321;
    cfg.grid_mode = "equal-area";
    cfg.ea_theta = 48;
    cfg.ea_rh = 6;
    cfg.trials = 3;
    cfg.train_frac = 0.8;
    cfg.label_switching = false;
    cfg.baselines = {"FLP", "CP"};
    cfg.solver.max_epochs = 250;
    cfg.solver.rel_tol = 1e-8;
    cfg.synth.N = 123;
    cfg.synth.R = 0.9;
    cfg.synth.k = 2.0;
    cfg.synth.mu = 0.3;
    cfg.synth.gamma = 0.05;
    cfg.synth.seed = 77;
    cfg.dataset_path = "some/data.csv";
    cfg.jobs = 4;

    const RunConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.L == cfg.L);
    CHECK(back.J == cfg.J);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.lambda == cfg.lambda);
    CHECK(back.h == cfg.h);
    CHECK(back.seed == cfg.seed);
    CHECK(back.grid_mode == cfg.grid_mode);
    CHECK(back.ea_theta == cfg.ea_theta);
    CHECK(back.ea_rh == cfg.ea_rh);
    CHECK(back.trials == cfg.trials);
    CHECK(back.train_frac == cfg.train_frac);
    CHECK(back.label_switching == cfg.label_switching);
    CHECK(back.baselines == cfg.baselines);
    CHECK(back.solver.max_epochs == cfg.solver.max_epochs);
    CHECK(back.solver.rel_tol == cfg.solver.rel_tol);
    CHECK(back.synth.N == cfg.synth.N);
    CHECK(back.synth.R == cfg.synth.R);
    CHECK(back.synth.k == cfg.synth.k);
    CHECK(back.synth.mu == cfg.synth.mu);
    CHECK(back.synth.gamma == cfg.synth.gamma);
    CHECK(back.synth.seed == cfg.synth.seed);
    CHECK(back.dataset_path == cfg.dataset_path);
    CHECK(back.jobs == cfg.jobs);

    // partial records keep defaults for what they omit
    const RunConfig partial = config_from_json(nlohmann::json{{"L", 5}});
    CHECK(partial.L == 5);
    CHECK(partial.J == 2);
    CHECK(partial.epsilon == 0.01);
    CHECK(partial.grid_mode == "distance");

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"L", "many"}}), ParseError);
}
