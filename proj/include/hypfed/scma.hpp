#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hypfed/errors.hpp"
#include "hypfed/field.hpp"
#include "hypfed/hull.hpp"
#include "hypfed/quantize.hpp"
#include "hypfed/rng.hpp"

namespace hypfed {

// Sparse per-client label vector v in Z^B: linear bin index (1-based) to value.
struct LabelVector {
    std::map<u64, u64> entries;
};

// One client's additive masks, one field element per share position.
struct MaskSet {
    std::vector<u64> z;
};

// Masked power sums as sent over the wire.
struct ScmaShare {
    u64 q = 0;
    std::vector<u64> sums;
};

// Smallest prime at least max{(L+1)^h, B+1, element_sum+1}. The last two
// bounds strengthen the basic rule so every bin index is a nonzero residue
// and every aggregated label fits the field without wrapping.
inline PrimeField choose_field(int L, int h, u64 B, u64 element_sum) {
    if (L < 1 || h < 1) throw InvalidInputError("choose_field: L and h must be positive");
    u64 lower = 1;
    for (int i = 0; i < h; ++i) {
        const u64 base = static_cast<u64>(L) + 1;
        if (lower > (u64(1) << 61) / base) throw InvalidInputError("choose_field: (L+1)^h exceeds the supported range");
        lower *= base;
    }
    lower = std::max(lower, B + 1);
    lower = std::max(lower, element_sum + 1);
    return PrimeField(next_prime_at_least(lower));
}

// Occupied linear bins of a quantized hull.
inline std::set<u64> hull_bins(const ConvexHull& hull, const QuantGrid& grid) {
    std::set<u64> bins;
    for (const DiscPoint& v : hull.extremes) {
        bins.insert(static_cast<u64>(bin_of(v, grid).linear));
    }
    return bins;
}

// General form: one bin set per class slot, one sequence element per slot;
// each occupied bin accumulates the elements of the classes present there.
inline LabelVector build_label_vector_general(const std::vector<std::set<u64>>& bins_per_class,
                                              const std::vector<u64>& elems) {
    if (bins_per_class.size() != elems.size()) {
        throw InvalidInputError("build_label_vector_general: one element per class slot required");
    }
    LabelVector v;
    for (std::size_t c = 0; c < bins_per_class.size(); ++c) {
        for (u64 b : bins_per_class[c]) {
            v.entries[b] += elems[c];
        }
    }
    return v;
}

// Binary case: a_minus marks bins of the negative-class hull, a_plus bins of
// the positive-class hull, their sum bins occupied by both.
inline LabelVector build_label_vector(const ConvexHull& hull_plus, const ConvexHull& hull_minus,
                                      const QuantGrid& grid, u64 a_minus, u64 a_plus) {
    return build_label_vector_general({hull_bins(hull_minus, grid), hull_bins(hull_plus, grid)},
                                      {a_minus, a_plus});
}

// Inverse of build_label_vector: split entries back into (minus, plus) bins.
inline std::pair<std::vector<u64>, std::vector<u64>> label_vector_to_bins(const LabelVector& v, u64 a_minus,
                                                                          u64 a_plus) {
    std::vector<u64> minus_bins, plus_bins;
    for (const auto& [bin, value] : v.entries) {
        if (value == a_plus) {
            plus_bins.push_back(bin);
        } else if (value == a_minus) {
            minus_bins.push_back(bin);
        } else if (value == a_minus + a_plus) {
            minus_bins.push_back(bin);
            plus_bins.push_back(bin);
        } else {
            throw InvalidInputError("label_vector_to_bins: entry matches neither label element nor their sum");
        }
    }
    return {std::move(minus_bins), std::move(plus_bins)};
}

// S_l = (sum_j v_j j^{l-1} + z_l) mod q for l = 1..n_sums.
inline ScmaShare scma_encode(const LabelVector& v, const MaskSet& masks, const PrimeField& field, std::size_t n_sums) {
    if (masks.z.size() != n_sums) throw InvalidInputError("scma_encode: mask count must equal n_sums");
    ScmaShare share;
    share.q = field.q;
    share.sums.assign(n_sums, 0);
    for (const auto& [bin, value] : v.entries) {
        if (bin == 0 || bin >= field.q) {
            throw InvalidInputError("scma_encode: bin index " + std::to_string(bin) + " overflows the field q=" +
                                    std::to_string(field.q));
        }
        if (value >= field.q) {
            throw InvalidInputError("scma_encode: label value " + std::to_string(value) + " overflows the field");
        }
        if (value == 0) continue;
        u64 pw = 1;
        for (std::size_t l = 0; l < n_sums; ++l) {
            share.sums[l] = field.add(share.sums[l], field.mul(value, pw));
            pw = field.mul(pw, bin);
        }
    }
    for (std::size_t l = 0; l < n_sums; ++l) {
        share.sums[l] = field.add(share.sums[l], masks.z[l]);
    }
    return share;
}

// L mask sets with per-position sums congruent to zero. The first L-1 are
// uniform draws; the last is the negated column sum, hence itself uniform.
inline std::vector<MaskSet> generate_masks(int L, std::size_t n_sums, const PrimeField& field, u64 seed) {
    if (L < 2) throw InvalidInputError("generate_masks: at least two clients required");
    std::vector<MaskSet> out(static_cast<std::size_t>(L));
    std::vector<u64> column(n_sums, 0);
    for (int i = 0; i + 1 < L; ++i) {
        SplitMix64 rng(derive_seed(seed, seed_tag::masks, static_cast<u64>(i)));
        out[static_cast<std::size_t>(i)].z.resize(n_sums);
        for (std::size_t l = 0; l < n_sums; ++l) {
            const u64 z = rng.below(field.q);
            out[static_cast<std::size_t>(i)].z[l] = z;
            column[l] = field.add(column[l], z);
        }
    }
    out[static_cast<std::size_t>(L - 1)].z.resize(n_sums);
    for (std::size_t l = 0; l < n_sums; ++l) {
        out[static_cast<std::size_t>(L - 1)].z[l] = field.neg(column[l]);
    }
    return out;
}

inline ScmaShare aggregate_shares(const std::vector<ScmaShare>& shares) {
    if (shares.empty()) throw InvalidInputError("aggregate_shares: no shares");
    ScmaShare agg;
    agg.q = shares.front().q;
    agg.sums.assign(shares.front().sums.size(), 0);
    for (const ScmaShare& s : shares) {
        if (s.q != agg.q) throw ProtocolError("aggregate_shares: mismatched fields");
        if (s.sums.size() != agg.sums.size()) throw ProtocolError("aggregate_shares: mismatched share lengths");
        for (std::size_t l = 0; l < agg.sums.size(); ++l) {
            agg.sums[l] = addmod(agg.sums[l], s.sums[l], agg.q);
        }
    }
    return agg;
}

// Recovers the aggregated sparse vector {(b, H_b)} from summed shares.
// Berlekamp-Massey yields the locator, whose reversal has the occupied bins
// as roots; values follow from the locator-filtered partial fractions and
// every returned candidate is checked against all power sums before being
// trusted.
inline std::map<u64, u64> scma_decode(const ScmaShare& aggregate, const PrimeField& field, u64 B,
                                      std::size_t max_support) {
    const std::vector<u64>& s = aggregate.sums;
    if (aggregate.q != field.q) throw ProtocolError("scma_decode: aggregate field mismatch");
    fqpoly::Poly C = berlekamp_massey(s, field);
    const std::size_t t = static_cast<std::size_t>(fqpoly::degree(C));
    if (t > max_support) {
        throw DecodeError("scma_decode: locator degree " + std::to_string(t) + " exceeds max support " +
                          std::to_string(max_support));
    }
    if (t == 0) return {};
    if (2 * t > s.size()) {
        throw DecodeError("scma_decode: not enough sums to certify a support of size " + std::to_string(t));
    }

    fqpoly::Poly locator_rev(t + 1);
    for (std::size_t i = 0; i <= t; ++i) locator_rev[i] = C[t - i];
    std::vector<u64> roots = find_distinct_roots(locator_rev, field, B);
    if (roots.size() != t) {
        throw DecodeError("scma_decode: locator roots do not all lie in [1, B]");
    }
    for (std::size_t i = 1; i < roots.size(); ++i) {
        if (roots[i] == roots[i - 1]) throw DecodeError("scma_decode: repeated locator root");
    }

    // Omega = S(z) C(z) mod z^t, then H_b = -b Omega(1/b) / C'(1/b).
    fqpoly::Poly omega(t, 0);
    for (std::size_t i = 0; i < t; ++i) {
        u64 acc = 0;
        for (std::size_t j = 0; j <= i && j < C.size(); ++j) {
            acc = field.add(acc, field.mul(C[j], s[i - j]));
        }
        omega[i] = acc;
    }
    fqpoly::Poly cprime(t, 0);
    for (std::size_t i = 0; i + 1 <= t; ++i) {
        cprime[i] = field.mul((i + 1) % field.q, C[i + 1]);
    }

    std::map<u64, u64> decoded;
    for (u64 b : roots) {
        const u64 binv = field.inv(b);
        const u64 num = fqpoly::eval(omega, binv, field);
        const u64 den = fqpoly::eval(cprime, binv, field);
        if (den == 0) throw InternalError("scma_decode: locator derivative vanished at a simple root");
        const u64 H = field.neg(field.mul(b, field.mul(num, field.inv(den))));
        if (H == 0) throw DecodeError("scma_decode: zero magnitude at a located bin");
        decoded[b] = H;
    }

    // Full verification against every transmitted sum.
    std::vector<u64> pw(roots.size());
    std::vector<u64> hb(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        pw[i] = 1;
        hb[i] = decoded[roots[i]];
    }
    for (std::size_t l = 0; l < s.size(); ++l) {
        u64 acc = 0;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            acc = field.add(acc, field.mul(hb[i], pw[i]));
            pw[i] = field.mul(pw[i], roots[i]);
        }
        if (acc != s[l] % field.q) {
            throw DecodeError("scma_decode: reconstructed support fails the power-sum check at position " +
                              std::to_string(l + 1));
        }
    }
    return decoded;
}

namespace detail {

// 1-based ascending ranks of distinct draws: draws (0.7, 0.2) rank as (2, 1).
inline std::vector<int> ranks_from_draws(const std::vector<double>& draws) {
    std::vector<int> pi(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        int rank = 1;
        for (std::size_t j = 0; j < draws.size(); ++j) {
            if (draws[j] < draws[i]) ++rank;
        }
        pi[i] = rank;
    }
    return pi;
}

} // namespace detail

// Clients sort per-client pseudo-random draws to agree on an ordering.
// Returns 1-based positions: client i (0-based input index) holds rank
// result[i] among the L draws. Exact draw collisions trigger re-draws from
// bumped sub-seeds, keeping the procedure deterministic.
inline std::vector<int> order_agreement(int L, u64 seed) {
    if (L < 2) throw InvalidInputError("order_agreement: at least two clients required");
    const std::size_t n = static_cast<std::size_t>(L);
    std::vector<u64> bump(n, 0);
    std::vector<double> draws(n, 0.0);
    for (int round = 0;; ++round) {
        if (round > 64) throw InternalError("order_agreement: could not resolve draw collisions");
        for (std::size_t i = 0; i < n; ++i) {
            SplitMix64 rng(derive_seed(seed, seed_tag::order, (static_cast<u64>(i) << 16) + bump[i]));
            draws[i] = rng.uniform01();
        }
        std::map<double, int> counts;
        for (double d : draws) ++counts[d];
        bool collided = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[draws[i]] > 1) {
                ++bump[i];
                collided = true;
            }
        }
        if (!collided) break;
    }
    return detail::ranks_from_draws(draws);
}

// Wire format: 16-byte header {q: u64 LE, n_sums: u64 LE} then the sums as
// little-endian u64.
inline std::vector<std::uint8_t> serialize_share(const ScmaShare& share) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + 8 * share.sums.size());
    auto put_u64 = [&out](u64 v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    put_u64(share.q);
    put_u64(static_cast<u64>(share.sums.size()));
    for (u64 v : share.sums) put_u64(v);
    return out;
}

inline ScmaShare deserialize_share(const std::vector<std::uint8_t>& bytes) {
    auto get_u64 = [&bytes](std::size_t off) {
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<u64>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
        return v;
    };
    if (bytes.size() < 16) throw ParseError("share: truncated header");
    ScmaShare share;
    share.q = get_u64(0);
    const u64 n = get_u64(8);
    if (n > (u64(1) << 32)) throw ParseError("share: implausible length field");
    if (bytes.size() != 16 + 8 * n) {
        throw ParseError("share: expected " + std::to_string(16 + 8 * n) + " bytes, got " +
                         std::to_string(bytes.size()));
    }
    share.sums.resize(n);
    for (u64 i = 0; i < n; ++i) share.sums[static_cast<std::size_t>(i)] = get_u64(16 + 8 * static_cast<std::size_t>(i));
    return share;
}

} // namespace hypfed
