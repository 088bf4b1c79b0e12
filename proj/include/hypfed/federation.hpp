#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypfed/bh.hpp"
#include "hypfed/data.hpp"
#include "hypfed/errors.hpp"
#include "hypfed/hull.hpp"
#include "hypfed/partition.hpp"
#include "hypfed/quantize.hpp"
#include "hypfed/rng.hpp"
#include "hypfed/scma.hpp"
#include "hypfed/stats.hpp"
#include "hypfed/svm.hpp"

namespace hypfed {

struct RunConfig {
    int L = 10;
    int J = 2;
    double epsilon = 0.01;
    double lambda = 20000.0;
    int h = 0; // 0 = automatic: min(J*L, largest h the element-size cap allows)
    std::uint64_t seed = 1;
    std::string grid_mode = "distance"; // "distance" | "equal-area"
    std::int64_t ea_theta = 64;
    std::int64_t ea_rh = 8;
    int trials = 10;
    double train_frac = 0.9;
    bool label_switching = true;
    std::vector<std::string> baselines = {"FLP", "FLE", "CP", "CE"};
    SolverOptions solver;
    SynthSpec synth;
    std::string dataset_path; // when nonempty, load this dataset instead of generating
    int jobs = 1;
};

inline QuantGrid make_grid(const RunConfig& cfg, double R, const Curvature& k) {
    if (cfg.grid_mode == "equal-area") {
        return build_equal_area_grid(cfg.ea_theta, cfg.ea_rh, R, k);
    }
    if (cfg.grid_mode != "distance") {
        throw InvalidInputError("grid_mode must be 'distance' or 'equal-area'");
    }
    return build_grid(cfg.epsilon, R, k);
}

// Largest order h the Bose-Chowla construction supports for m = J*L slots
// without leaving the element-size cap, bounded above by the worst-case
// per-bin collision count J*L.
inline int default_bh_order(int L, int J) {
    const int m = J * L;
    const u64 pp = smallest_prime_power_at_least(static_cast<u64>(m) + 1);
    const u64 cap = u64(1) << 40;
    int h = 0;
    u64 value = 1;
    while (h < m) {
        if (value > cap / pp) break;
        value *= pp;
        ++h;
    }
    if (h < 2) {
        throw InvalidInputError("default_bh_order: configuration too large for the element-size cap");
    }
    return h;
}

struct ClientState {
    int id = 1; // 1-based client index
    std::vector<LabeledPoint> data;
    QuantGrid grid;
    std::vector<int> sequence_positions; // 1-based positions into the shared B_h sequence, one per class slot
    MaskSet masks;
    std::vector<int> slot_of_class;      // class index -> local slot (the simulated label switching)
    std::vector<ConvexHull> slot_hulls;  // quantized hull per local slot
};

struct ServerState {
    ScmaShare aggregate;
    std::vector<ConvexHull> decoded_hulls; // canonical geometric order
    std::vector<int> hull_client;          // anonymous pseudo-client per hull
    std::vector<int> hull_slot;            // slot within the pseudo-client
    Grouping grouping;
    HyperbolicSvmModel model;        // binary path
    MulticlassModel ensemble;        // multiclass path
    EuclideanSvmModel euclidean;     // federated Euclidean baseline
    std::vector<int> group_to_class; // group (1-based) -> class index, aligned for reporting
};

// Everything one federated trial produces, plus enough bookkeeping for the
// transcript and the metrics record.
struct FederatedOutcome {
    bool ok = false;
    std::string error;
    double acc_poincare = 0.0;
    double acc_euclidean = 0.0;
    double avg_hull = 0.0;
    double max_hull = 0.0;
    u64 q = 0;
    int K_max = 0;
    int h_used = 0;
    double bits_per_client = 0.0;
    ServerState server;
    std::vector<ClientState> clients;
    nlohmann::json transcript;
};

namespace detail {

inline std::vector<int> distinct_class_ids(const std::vector<LabeledPoint>& pts) {
    std::vector<int> ids;
    for (const LabeledPoint& lp : pts) ids.push_back(lp.y);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

inline std::string hex_encode(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

inline std::vector<std::uint8_t> hex_decode(const std::string& hex) {
    if (hex.size() % 2 != 0) throw ParseError("hex payload has odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ParseError("invalid hex digit");
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    }
    return out;
}

inline int bits_for_field(u64 q) {
    int bits = 0;
    u64 v = q - 1;
    while (v > 0) {
        ++bits;
        v >>= 1;
    }
    return std::max(1, bits);
}

} // namespace detail

// Client pipeline: per-class hull, quantization, label vector, masked encode.
inline ScmaShare client_round(const ClientState& state, const std::vector<int>& class_ids,
                              const BhSequence& seq, const PrimeField& field, std::size_t n_sums) {
    const int J = static_cast<int>(class_ids.size());
    std::vector<std::set<u64>> bins_per_slot(static_cast<std::size_t>(J));
    for (int slot = 0; slot < J; ++slot) {
        const ConvexHull& h = state.slot_hulls[static_cast<std::size_t>(slot)];
        if (h.empty()) {
            throw InvalidInputError("client_round: client " + std::to_string(state.id) +
                                    " holds no points of one of its classes");
        }
        bins_per_slot[static_cast<std::size_t>(slot)] = hull_bins(h, state.grid);
    }
    std::vector<u64> elems(static_cast<std::size_t>(J));
    for (int slot = 0; slot < J; ++slot) {
        const int pos = state.sequence_positions[static_cast<std::size_t>(slot)];
        elems[static_cast<std::size_t>(slot)] = seq.elements[static_cast<std::size_t>(pos - 1)];
    }
    const LabelVector v = build_label_vector_general(bins_per_slot, elems);
    return scma_encode(v, state.masks, field, n_sums);
}

// The protocol proper, on data already sharded across clients. slot_of_class
// holds each client's class -> local slot bijection (the simulated label
// switching). Throws typed errors; run_federated_trial wraps them.
inline FederatedOutcome run_protocol(const std::vector<std::vector<LabeledPoint>>& per_client,
                                     const std::vector<std::vector<int>>& slot_of_class,
                                     const std::vector<int>& class_ids, const std::vector<LabeledPoint>& test,
                                     double R, const Curvature& k, const RunConfig& cfg, u64 seed,
                                     bool want_transcript) {
    FederatedOutcome out;
    {
        const int J = static_cast<int>(class_ids.size());
        const int L = static_cast<int>(per_client.size());
        if (J < 2) throw InvalidInputError("run_protocol: at least two classes required");
        if (L < 1) throw InvalidInputError("run_protocol: at least one client required");
        if (slot_of_class.size() != per_client.size()) {
            throw InvalidInputError("run_protocol: one slot bijection per client required");
        }

        const QuantGrid grid = make_grid(cfg, R, k);

        std::vector<ClientState> clients(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) {
            ClientState& cs = clients[static_cast<std::size_t>(i)];
            cs.id = i + 1;
            cs.grid = grid;
            cs.data = per_client[static_cast<std::size_t>(i)];
            cs.slot_of_class = slot_of_class[static_cast<std::size_t>(i)];
            if (static_cast<int>(cs.slot_of_class.size()) != J) {
                throw InvalidInputError("run_protocol: slot bijection size must equal J");
            }
        }

        // per-slot quantized hulls
        double hull_sum = 0.0;
        double hull_max = 0.0;
        int K_max = 1;
        for (int i = 0; i < L; ++i) {
            ClientState& cs = clients[static_cast<std::size_t>(i)];
            cs.slot_hulls.assign(static_cast<std::size_t>(J), ConvexHull{});
            int total = 0;
            for (int c = 0; c < J; ++c) {
                std::vector<DiscPoint> pts;
                for (const LabeledPoint& lp : cs.data) {
                    if (lp.y == class_ids[static_cast<std::size_t>(c)]) pts.push_back(lp.x);
                }
                if (pts.empty()) {
                    throw ProtocolError("run_protocol: client " + std::to_string(cs.id) +
                                        " received no points of class " +
                                        std::to_string(class_ids[static_cast<std::size_t>(c)]));
                }
                const int slot = cs.slot_of_class[static_cast<std::size_t>(c)];
                cs.slot_hulls[static_cast<std::size_t>(slot)] = epsilon_minimal_hull(pts, grid, k);
                const int sz = static_cast<int>(cs.slot_hulls[static_cast<std::size_t>(slot)].size());
                hull_sum += sz;
                hull_max = std::max(hull_max, static_cast<double>(sz));
                total += sz;
            }
            K_max = std::max(K_max, total);
        }
        out.avg_hull = hull_sum / (static_cast<double>(L) * static_cast<double>(J));
        out.max_hull = hull_max;
        out.K_max = K_max;

        const std::size_t n_sums = 2 * static_cast<std::size_t>(L) * static_cast<std::size_t>(K_max);
        const int m = J * L;
        const int h = cfg.h > 0 ? cfg.h : default_bh_order(L, J);
        out.h_used = h;
        const u64 p_power = smallest_prime_power_at_least(static_cast<u64>(m) + 1);
        const BhSequence seq = construct_bh(m, h, p_power);
        u64 element_sum = 0;
        for (u64 e : seq.elements) element_sum += e;
        const PrimeField field = choose_field(L, h, static_cast<u64>(grid.bins()), element_sum);
        out.q = field.q;
        out.bits_per_client = static_cast<double>(n_sums) * detail::bits_for_field(field.q);

        // order agreement and sequence positions: client at rank pi gets the
        // J consecutive positions J*(pi-1)+1 .. J*pi
        std::vector<int> pi(static_cast<std::size_t>(L), 1);
        if (L >= 2) pi = order_agreement(L, seed);
        for (int i = 0; i < L; ++i) {
            ClientState& cs = clients[static_cast<std::size_t>(i)];
            cs.sequence_positions.resize(static_cast<std::size_t>(J));
            for (int c = 0; c < J; ++c) {
                cs.sequence_positions[static_cast<std::size_t>(c)] = J * (pi[static_cast<std::size_t>(i)] - 1) + c + 1;
            }
        }

        std::vector<MaskSet> masks;
        if (L >= 2) {
            masks = generate_masks(L, n_sums, field, seed);
        } else {
            masks.resize(1);
            masks[0].z.assign(n_sums, 0);
        }
        for (int i = 0; i < L; ++i) clients[static_cast<std::size_t>(i)].masks = masks[static_cast<std::size_t>(i)];

        std::vector<ScmaShare> shares;
        shares.reserve(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) {
            shares.push_back(client_round(clients[static_cast<std::size_t>(i)], class_ids, seq, field, n_sums));
        }

        ServerState& server = out.server;
        server.aggregate = aggregate_shares(shares);
        const std::map<u64, u64> decoded =
            scma_decode(server.aggregate, field, static_cast<u64>(grid.bins()),
                        static_cast<std::size_t>(L) * static_cast<std::size_t>(K_max));

        // element value -> 1-based sequence position
        std::map<u64, int> position_of_element;
        for (std::size_t i = 0; i < seq.elements.size(); ++i) {
            position_of_element[seq.elements[i]] = static_cast<int>(i) + 1;
        }

        // disambiguate: bin -> set of (pseudo-client, slot)
        std::map<std::pair<int, int>, std::vector<u64>> bins_of_slot;
        nlohmann::json decoded_json = nlohmann::json::array();
        for (const auto& [bin, H] : decoded) {
            const std::vector<u64> parts = bh_decompose(H, seq, h);
            std::set<u64> seen;
            nlohmann::json parts_json = nlohmann::json::array();
            for (u64 e : parts) {
                if (!seen.insert(e).second) {
                    throw ProtocolError("run_protocol: repeated sequence element in bin " +
                                        std::to_string(bin));
                }
                const int pos = position_of_element.at(e);
                const int pseudo = (pos - 1) / J;
                const int slot = (pos - 1) % J;
                bins_of_slot[{pseudo, slot}].push_back(bin);
                parts_json.push_back(e);
            }
            if (want_transcript) {
                decoded_json.push_back({{"bin", bin}, {"H", H}, {"elements", parts_json}});
            }
        }
        if (static_cast<int>(bins_of_slot.size()) != m) {
            throw ProtocolError("run_protocol: reconstructed " + std::to_string(bins_of_slot.size()) +
                                " hulls, expected " + std::to_string(m));
        }

        // reconstruct hulls and order them canonically by their bin lists, so
        // downstream steps depend only on geometry
        struct Node {
            std::vector<u64> bins; // sorted
            ConvexHull hull;
            int pseudo;
            int slot;
        };
        std::vector<Node> nodes;
        nodes.reserve(static_cast<std::size_t>(m));
        for (auto& [key, bins] : bins_of_slot) {
            Node node;
            node.pseudo = key.first;
            node.slot = key.second;
            std::sort(bins.begin(), bins.end());
            node.bins = bins;
            std::vector<DiscPoint> centers;
            centers.reserve(bins.size());
            for (u64 b : bins) centers.push_back(bin_center(bin_from_linear(static_cast<std::int64_t>(b), grid), grid));
            node.hull = graham_scan(centers, k);
            nodes.push_back(std::move(node));
        }
        std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) {
            if (a.bins != b.bins) return a.bins < b.bins;
            if (a.pseudo != b.pseudo) return a.pseudo < b.pseudo;
            return a.slot < b.slot;
        });
        for (const Node& node : nodes) {
            server.decoded_hulls.push_back(node.hull);
            server.hull_client.push_back(node.pseudo);
            server.hull_slot.push_back(node.slot);
        }

        const HullGraph graph = build_hull_graph(server.decoded_hulls, k, server.hull_client);
        server.grouping = (J == 2) ? kernighan_lin_bisect(graph) : spectral_group(graph, J);

        // ground truth per decoded hull, for alignment and reporting only:
        // pseudo-client -> real client via the order permutation, slot ->
        // class via the client's bijection
        std::vector<int> client_of_pseudo(static_cast<std::size_t>(L), 0);
        for (int i = 0; i < L; ++i) client_of_pseudo[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)] - 1)] = i;
        auto truth_class_of = [&](int pseudo, int slot) {
            const int real_client = client_of_pseudo[static_cast<std::size_t>(pseudo)];
            const ClientState& cs = clients[static_cast<std::size_t>(real_client)];
            for (int c = 0; c < J; ++c) {
                if (cs.slot_of_class[static_cast<std::size_t>(c)] == slot) return c;
            }
            throw InternalError("run_protocol: slot bijection is not onto");
        };

        // majority alignment group -> class index
        server.group_to_class.assign(static_cast<std::size_t>(J + 1), 0);
        for (int g = 1; g <= J; ++g) {
            std::vector<int> votes(static_cast<std::size_t>(J), 0);
            for (std::size_t v = 0; v < nodes.size(); ++v) {
                if (server.grouping.assignment[v] == g) {
                    ++votes[static_cast<std::size_t>(truth_class_of(server.hull_client[v], server.hull_slot[v]))];
                }
            }
            int best_class = 0;
            for (int c = 1; c < J; ++c) {
                if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best_class)]) best_class = c;
            }
            server.group_to_class[static_cast<std::size_t>(g)] = best_class;
        }

        // train on the union of reconstructed hull vertices, labeled by group
        std::vector<LabeledPoint> fl_train;
        std::vector<std::vector<DiscPoint>> group_vertices(static_cast<std::size_t>(J + 1));
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            const int g = server.grouping.assignment[v];
            for (const DiscPoint& pt : server.decoded_hulls[v].extremes) {
                group_vertices[static_cast<std::size_t>(g)].push_back(pt);
                fl_train.push_back(LabeledPoint{pt, g});
            }
        }

        if (J == 2) {
            std::vector<LabeledPoint> binary(fl_train.size());
            for (std::size_t i = 0; i < fl_train.size(); ++i) {
                binary[i] = LabeledPoint{fl_train[i].x, fl_train[i].y == 1 ? 1 : -1};
            }
            const ConvexHull hull_g1 = graham_scan(group_vertices[1], k);
            const ConvexHull hull_g2 = graham_scan(group_vertices[2], k);
            server.model = best_reference_fit(binary, hull_g1, hull_g2, k, cfg.lambda, cfg.solver);
            server.euclidean = fit_euclidean(binary, cfg.lambda, cfg.solver);

            std::size_t hit_p = 0, hit_e = 0;
            for (const LabeledPoint& lp : test) {
                const int gp = predict(server.model, lp.x) == 1 ? 1 : 2;
                const int ge = predict(server.euclidean, lp.x) == 1 ? 1 : 2;
                if (class_ids[static_cast<std::size_t>(server.group_to_class[static_cast<std::size_t>(gp)])] == lp.y)
                    ++hit_p;
                if (class_ids[static_cast<std::size_t>(server.group_to_class[static_cast<std::size_t>(ge)])] == lp.y)
                    ++hit_e;
            }
            out.acc_poincare = test.empty() ? 0.0 : static_cast<double>(hit_p) / static_cast<double>(test.size());
            out.acc_euclidean = test.empty() ? 0.0 : static_cast<double>(hit_e) / static_cast<double>(test.size());
        } else {
            server.ensemble = fit_multiclass(fl_train, k, cfg.lambda, cfg.solver);
            std::size_t hit = 0;
            for (const LabeledPoint& lp : test) {
                const int g = predict_multiclass(server.ensemble, lp.x);
                if (class_ids[static_cast<std::size_t>(server.group_to_class[static_cast<std::size_t>(g)])] == lp.y)
                    ++hit;
            }
            out.acc_poincare = test.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(test.size());
            out.acc_euclidean = 0.0;
        }

        if (want_transcript) {
            nlohmann::json tr;
            tr["q"] = field.q;
            tr["n_sums"] = n_sums;
            tr["L"] = L;
            tr["J"] = J;
            tr["h"] = h;
            tr["K_max"] = K_max;
            tr["epsilon"] = grid.epsilon;
            tr["grid"] = {{"N_theta", grid.N_theta}, {"N_rh", grid.N_rh}, {"R", grid.R}, {"k", grid.k.k}};
            tr["sequence"] = seq.elements;
            nlohmann::json shares_json = nlohmann::json::array();
            for (int i = 0; i < L; ++i) {
                shares_json.push_back({{"client", i + 1},
                                       {"hex", detail::hex_encode(serialize_share(shares[static_cast<std::size_t>(i)]))}});
            }
            tr["shares"] = shares_json;
            tr["aggregate_hex"] = detail::hex_encode(serialize_share(server.aggregate));
            tr["decoded"] = decoded_json;
            nlohmann::json truth = nlohmann::json::array();
            for (int i = 0; i < L; ++i) {
                const ClientState& cs = clients[static_cast<std::size_t>(i)];
                nlohmann::json slots = nlohmann::json::array();
                for (int slot = 0; slot < J; ++slot) {
                    std::set<u64> bset = hull_bins(cs.slot_hulls[static_cast<std::size_t>(slot)], grid);
                    slots.push_back({{"slot", slot},
                                     {"element",
                                      seq.elements[static_cast<std::size_t>(
                                          cs.sequence_positions[static_cast<std::size_t>(slot)] - 1)]},
                                     {"bins", std::vector<u64>(bset.begin(), bset.end())}});
                }
                truth.push_back({{"client", i + 1}, {"position", pi[static_cast<std::size_t>(i)]}, {"slots", slots}});
            }
            tr["truth"] = truth;
            out.transcript = std::move(tr);
        }

        out.clients = std::move(clients);
        out.ok = true;
    }
    return out;
}

// One complete federated trial on a fixed train/test split: shard the data
// uniformly across clients, draw each client's label bijection, then run the
// protocol. Failures come back in the outcome rather than as exceptions.
inline FederatedOutcome run_federated_trial(const std::vector<LabeledPoint>& train,
                                            const std::vector<LabeledPoint>& test, double R, const Curvature& k,
                                            const RunConfig& cfg, u64 trial_seed, bool want_transcript) {
    FederatedOutcome out;
    try {
        const std::vector<int> class_ids = detail::distinct_class_ids(train);
        if (static_cast<int>(class_ids.size()) != cfg.J) {
            throw InvalidInputError("run_federated_trial: training data has " + std::to_string(class_ids.size()) +
                                    " classes but J=" + std::to_string(cfg.J));
        }
        const int L = cfg.L;
        const int J = cfg.J;
        if (L < 1) throw InvalidInputError("run_federated_trial: L must be positive");

        // shard the training data uniformly without replacement
        std::vector<std::size_t> idx(train.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        SplitMix64 assign_rng(derive_seed(trial_seed, seed_tag::assign, 0));
        assign_rng.shuffle(idx);

        std::vector<std::vector<LabeledPoint>> per_client(static_cast<std::size_t>(L));
        {
            const std::size_t base = idx.size() / static_cast<std::size_t>(L);
            const std::size_t extra = idx.size() % static_cast<std::size_t>(L);
            std::size_t cursor = 0;
            for (int i = 0; i < L; ++i) {
                const std::size_t take = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
                for (std::size_t t = 0; t < take; ++t) per_client[static_cast<std::size_t>(i)].push_back(train[idx[cursor++]]);
            }
        }

        // simulated label switching: a per-client bijection class -> local slot
        std::vector<std::vector<int>> slot_of_class(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) {
            std::vector<int>& slots = slot_of_class[static_cast<std::size_t>(i)];
            slots.resize(static_cast<std::size_t>(J));
            for (int c = 0; c < J; ++c) slots[static_cast<std::size_t>(c)] = c;
            if (cfg.label_switching) {
                SplitMix64 flip_rng(derive_seed(trial_seed, seed_tag::label_flip, static_cast<u64>(i)));
                flip_rng.shuffle(slots);
            }
        }

        out = run_protocol(per_client, slot_of_class, class_ids, test, R, k, cfg, trial_seed, want_transcript);
    } catch (const Error& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Centralized baselines.
// ---------------------------------------------------------------------------

inline double evaluate_accuracy(const HyperbolicSvmModel& m, const std::vector<LabeledPoint>& test) {
    if (test.empty()) return 0.0;
    std::size_t hit = 0;
    for (const LabeledPoint& lp : test) {
        if (predict(m, lp.x) == lp.y) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(test.size());
}

inline double evaluate_accuracy(const EuclideanSvmModel& m, const std::vector<LabeledPoint>& test) {
    if (test.empty()) return 0.0;
    std::size_t hit = 0;
    for (const LabeledPoint& lp : test) {
        if (predict(m, lp.x) == lp.y) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(test.size());
}

inline double evaluate_accuracy(const MulticlassModel& m, const std::vector<LabeledPoint>& test) {
    if (test.empty()) return 0.0;
    std::size_t hit = 0;
    for (const LabeledPoint& lp : test) {
        if (predict_multiclass(m, lp.x) == lp.y) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(test.size());
}

// Variants: CP (Poincare, all points), CE (Euclidean, all points), CH-CP and
// CH-CE (same classifiers trained only on the per-class hull extremes).
inline double run_centralized(const std::vector<LabeledPoint>& train, const std::vector<LabeledPoint>& test,
                              const Curvature& k, double lambda, const std::string& variant,
                              const SolverOptions& opts = {}) {
    const std::vector<int> class_ids = detail::distinct_class_ids(train);
    const bool hull_input = variant == "CH-CP" || variant == "CH-CE";
    const bool poincare = variant == "CP" || variant == "CH-CP";
    if (!poincare && variant != "CE" && variant != "CH-CE") {
        throw InvalidInputError("run_centralized: unknown variant " + variant);
    }

    std::vector<LabeledPoint> effective;
    std::vector<ConvexHull> class_hulls;
    for (int cls : class_ids) {
        std::vector<DiscPoint> pts;
        for (const LabeledPoint& lp : train) {
            if (lp.y == cls) pts.push_back(lp.x);
        }
        if (pts.empty()) throw InvalidInputError("run_centralized: empty class");
        class_hulls.push_back(graham_scan(pts, k));
    }
    if (hull_input) {
        for (std::size_t c = 0; c < class_hulls.size(); ++c) {
            for (const DiscPoint& pt : class_hulls[c].extremes) {
                effective.push_back(LabeledPoint{pt, class_ids[c]});
            }
        }
    } else {
        effective = train;
    }

    if (class_ids.size() == 2 && class_ids[0] == -1 && class_ids[1] == 1) {
        if (poincare) {
            const HyperbolicSvmModel m =
                best_reference_fit(effective, class_hulls[1], class_hulls[0], k, lambda, opts);
            return evaluate_accuracy(m, test);
        }
        const EuclideanSvmModel m = fit_euclidean(effective, lambda, opts);
        return evaluate_accuracy(m, test);
    }
    if (!poincare) {
        throw InvalidInputError("run_centralized: Euclidean baselines support only binary +1/-1 labels");
    }
    const MulticlassModel m = fit_multiclass(effective, k, lambda, opts);
    return evaluate_accuracy(m, test);
}

// ---------------------------------------------------------------------------
// Experiment driver.
// ---------------------------------------------------------------------------

struct TrialRecord {
    int trial = 0;
    u64 trial_seed = 0;
    std::map<std::string, double> accuracy;
    bool fl_ok = true;
    std::string fl_error;
    double avg_hull = 0.0;
    double max_hull = 0.0;
    double bits_per_client = 0.0;
    u64 q = 0;
    int K_max = 0;
    int h_used = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

struct ExperimentResult {
    std::vector<TrialRecord> trials;
    std::map<std::string, std::pair<double, double>> summary; // baseline -> (mean, ci95 half-width)
    nlohmann::json first_transcript;
};

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["L"] = cfg.L;
    j["J"] = cfg.J;
    j["epsilon"] = cfg.epsilon;
    j["lambda"] = cfg.lambda;
    j["h"] = cfg.h;
    j["seed"] = cfg.seed;
    j["grid_mode"] = cfg.grid_mode;
    j["ea_theta"] = cfg.ea_theta;
    j["ea_rh"] = cfg.ea_rh;
    j["trials"] = cfg.trials;
    j["train_frac"] = cfg.train_frac;
    j["label_switching"] = cfg.label_switching;
    j["baselines"] = cfg.baselines;
    j["solver"] = {{"max_epochs", cfg.solver.max_epochs}, {"rel_tol", cfg.solver.rel_tol}};
    j["synth"] = {{"N", cfg.synth.N},     {"R", cfg.synth.R},         {"k", cfg.synth.k},
                  {"mu", cfg.synth.mu},   {"gamma", cfg.synth.gamma}, {"seed", cfg.synth.seed}};
    j["dataset"] = cfg.dataset_path;
    j["jobs"] = cfg.jobs;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    try {
        cfg.L = j.value("L", cfg.L);
        cfg.J = j.value("J", cfg.J);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.lambda = j.value("lambda", cfg.lambda);
        cfg.h = j.value("h", cfg.h);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.grid_mode = j.value("grid_mode", cfg.grid_mode);
        cfg.ea_theta = j.value("ea_theta", cfg.ea_theta);
        cfg.ea_rh = j.value("ea_rh", cfg.ea_rh);
        cfg.trials = j.value("trials", cfg.trials);
        cfg.train_frac = j.value("train_frac", cfg.train_frac);
        cfg.label_switching = j.value("label_switching", cfg.label_switching);
        cfg.baselines = j.value("baselines", cfg.baselines);
        if (j.contains("solver")) {
            cfg.solver.max_epochs = j["solver"].value("max_epochs", cfg.solver.max_epochs);
            cfg.solver.rel_tol = j["solver"].value("rel_tol", cfg.solver.rel_tol);
        }
        if (j.contains("synth")) {
            const nlohmann::json& s = j["synth"];
            cfg.synth.N = s.value("N", cfg.synth.N);
            cfg.synth.R = s.value("R", cfg.synth.R);
            cfg.synth.k = s.value("k", cfg.synth.k);
            cfg.synth.mu = s.value("mu", cfg.synth.mu);
            cfg.synth.gamma = s.value("gamma", cfg.synth.gamma);
            cfg.synth.seed = s.value("seed", cfg.synth.seed);
        }
        cfg.dataset_path = j.value("dataset", cfg.dataset_path);
        cfg.jobs = j.value("jobs", cfg.jobs);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run config: ") + e.what());
    }
    return cfg;
}

namespace detail {

inline void split_train_test(const std::vector<LabeledPoint>& all, double train_frac, u64 seed,
                             std::vector<LabeledPoint>& train, std::vector<LabeledPoint>& test) {
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    SplitMix64 rng(seed);
    rng.shuffle(idx);
    const std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(all.size())));
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        (i < n_train ? train : test).push_back(all[idx[i]]);
    }
}

} // namespace detail

inline TrialRecord run_single_trial(const RunConfig& cfg, int trial, const Dataset* fixed_data,
                                    nlohmann::json* transcript_out) {
    TrialRecord rec;
    rec.trial = trial;
    rec.trial_seed = derive_seed(cfg.seed, seed_tag::trial, static_cast<u64>(trial));

    Dataset data;
    if (fixed_data != nullptr) {
        data = *fixed_data;
    } else {
        SynthSpec spec = cfg.synth;
        spec.seed = rec.trial_seed;
        data = synth_generate(spec).data;
    }
    const Curvature k(data.k);

    std::vector<LabeledPoint> train, test;
    detail::split_train_test(data.points, cfg.train_frac, derive_seed(rec.trial_seed, seed_tag::split, 0), train,
                             test);
    rec.n_train = train.size();
    rec.n_test = test.size();
    if (train.empty() || test.empty()) {
        rec.fl_ok = false;
        rec.fl_error = "empty train or test split";
        return rec;
    }

    auto enabled = [&cfg](const std::string& b) {
        return std::find(cfg.baselines.begin(), cfg.baselines.end(), b) != cfg.baselines.end();
    };

    if (enabled("FLP") || enabled("FLE")) {
        const FederatedOutcome fl =
            run_federated_trial(train, test, data.R, k, cfg, rec.trial_seed, transcript_out != nullptr);
        rec.fl_ok = fl.ok;
        rec.fl_error = fl.error;
        if (fl.ok) {
            if (enabled("FLP")) rec.accuracy["FLP"] = fl.acc_poincare;
            if (enabled("FLE") && cfg.J == 2) rec.accuracy["FLE"] = fl.acc_euclidean;
            rec.avg_hull = fl.avg_hull;
            rec.max_hull = fl.max_hull;
            rec.bits_per_client = fl.bits_per_client;
            rec.q = fl.q;
            rec.K_max = fl.K_max;
            rec.h_used = fl.h_used;
            if (transcript_out != nullptr) *transcript_out = fl.transcript;
        }
    }
    for (const char* variant : {"CP", "CE", "CH-CP", "CH-CE"}) {
        if (!enabled(variant)) continue;
        try {
            rec.accuracy[variant] = run_centralized(train, test, k, cfg.lambda, variant, cfg.solver);
        } catch (const Error& e) {
            rec.fl_ok = rec.fl_ok && false;
            rec.fl_error += std::string(rec.fl_error.empty() ? "" : "; ") + variant + ": " + e.what();
        }
    }
    return rec;
}

inline ExperimentResult run_experiment(const RunConfig& cfg) {
    ExperimentResult result;
    result.trials.resize(static_cast<std::size_t>(std::max(0, cfg.trials)));

    Dataset loaded;
    const Dataset* fixed = nullptr;
    if (!cfg.dataset_path.empty()) {
        loaded = load_dataset(cfg.dataset_path);
        fixed = &loaded;
    }

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (int t = 0; t < cfg.trials; ++t) {
            nlohmann::json* tr = (t == 0) ? &result.first_transcript : nullptr;
            result.trials[static_cast<std::size_t>(t)] = run_single_trial(cfg, t, fixed, tr);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<nlohmann::json> transcripts(result.trials.size());
        auto worker = [&]() {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= cfg.trials) break;
                nlohmann::json* tr = (t == 0) ? &transcripts[0] : nullptr;
                result.trials[static_cast<std::size_t>(t)] = run_single_trial(cfg, t, fixed, tr);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
        if (!transcripts.empty()) result.first_transcript = transcripts[0];
    }

    std::map<std::string, std::vector<double>> per_baseline;
    for (const TrialRecord& rec : result.trials) {
        for (const auto& [name, acc] : rec.accuracy) per_baseline[name].push_back(acc);
    }
    for (const auto& [name, accs] : per_baseline) {
        result.summary[name] = {stats::mean(accs), stats::ci95_halfwidth(accs)};
    }
    return result;
}

inline nlohmann::json trial_to_json(const TrialRecord& rec, const RunConfig& cfg) {
    nlohmann::json j;
    j["record"] = "trial";
    j["trial"] = rec.trial;
    j["trial_seed"] = rec.trial_seed;
    j["accuracy"] = rec.accuracy;
    j["fl_ok"] = rec.fl_ok;
    if (!rec.fl_ok) j["fl_error"] = rec.fl_error;
    j["avg_hull"] = rec.avg_hull;
    j["max_hull"] = rec.max_hull;
    j["bits_per_client"] = rec.bits_per_client;
    j["q"] = rec.q;
    j["K_max"] = rec.K_max;
    j["h"] = rec.h_used;
    j["n_train"] = rec.n_train;
    j["n_test"] = rec.n_test;
    j["config"] = config_to_json(cfg);
    return j;
}

inline nlohmann::json summary_to_json(const ExperimentResult& res, const RunConfig& cfg) {
    nlohmann::json j;
    j["record"] = "summary";
    nlohmann::json acc;
    for (const auto& [name, mc] : res.summary) {
        acc[name] = {{"mean", mc.first}, {"ci95", mc.second}};
    }
    j["accuracy"] = acc;
    j["config"] = config_to_json(cfg);
    return j;
}

} // namespace hypfed
