#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hypfed/errors.hpp"
#include "hypfed/field.hpp"

namespace hypfed {

// A B_h sequence: strictly increasing positive integers whose sums of up to
// h elements (repetition allowed) are pairwise distinct.
struct BhSequence {
    int h = 2;
    std::vector<u64> elements;
};

// Decomposes n as p^l for prime p, or returns false.
inline bool as_prime_power(u64 n, u64& p_out, int& l_out) {
    if (n < 2) return false;
    for (u64 f = 2; f * f <= n; ++f) {
        if (n % f == 0) {
            int l = 0;
            u64 m = n;
            while (m % f == 0) {
                m /= f;
                ++l;
            }
            if (m != 1) return false;
            p_out = f;
            l_out = l;
            return true;
        }
    }
    p_out = n;
    l_out = 1;
    return true;
}

inline u64 smallest_prime_power_at_least(u64 n) {
    u64 p;
    int l;
    u64 c = n < 2 ? 2 : n;
    while (!as_prime_power(c, p, l)) ++c;
    return c;
}

namespace gf {

// GF(p^d) with elements as coefficient vectors over F_p (ascending degree).
// Reduction uses precomputed rows x^{d+k} mod irred, and products accumulate
// in 64-bit before a single reduction per coefficient, which is safe for the
// small p and d this module ever sees.
class ExtField {
public:
    ExtField(u64 p, int d) : p_(p), d_(d), ground_(p) {
        if (!is_prime_u64(p)) throw InvalidInputError("ExtField: characteristic must be prime");
        if (p > (u64(1) << 20)) throw InvalidInputError("ExtField: characteristic too large");
        if (d < 1 || d > 63) throw InvalidInputError("ExtField: unsupported extension degree");
        order_ = 1;
        for (int i = 0; i < d_; ++i) {
            if (order_ > (u64(1) << 41) / p_) throw InvalidInputError("ExtField: field too large");
            order_ *= p_;
        }
        group_order_ = order_ - 1;
        irred_ = (d == 1) ? fqpoly::Poly{0, 1} : find_irreducible();
        build_reduction_rows();
    }

    using Elem = std::vector<u64>;

    u64 p() const { return p_; }
    int d() const { return d_; }
    u64 order() const { return order_; }
    u64 group_order() const { return group_order_; }

    Elem zero() const { return Elem(d_, 0); }
    Elem one() const {
        Elem e(d_, 0);
        e[0] = 1;
        return e;
    }
    Elem from_ground(u64 c) const {
        Elem e(d_, 0);
        e[0] = c % p_;
        return e;
    }
    Elem x() const {
        if (d_ == 1) {
            // x reduces to a constant when the modulus is x itself; the
            // degree-1 case never uses this generator helper.
            throw InternalError("ExtField: no polynomial generator in a prime field");
        }
        Elem e(d_, 0);
        e[1] = 1;
        return e;
    }

    bool is_zero(const Elem& a) const {
        for (u64 c : a)
            if (c != 0) return false;
        return true;
    }

    Elem add(const Elem& a, const Elem& b) const {
        Elem r(d_);
        for (int i = 0; i < d_; ++i) r[i] = (a[i] + b[i]) % p_;
        return r;
    }

    Elem mul(const Elem& a, const Elem& b) const {
        std::vector<u64> conv(2 * d_ - 1, 0);
        for (int i = 0; i < d_; ++i) {
            if (a[i] == 0) continue;
            for (int j = 0; j < d_; ++j) conv[i + j] += a[i] * b[j];
        }
        Elem r(d_, 0);
        for (int i = 0; i < d_; ++i) r[i] = conv[i];
        for (int k = d_; k < 2 * d_ - 1; ++k) {
            const u64 c = conv[k] % p_;
            if (c == 0) continue;
            const std::vector<u64>& row = red_[k - d_];
            for (int i = 0; i < d_; ++i) r[i] += c * row[i];
        }
        for (int i = 0; i < d_; ++i) r[i] %= p_;
        return r;
    }

    Elem pow(Elem a, u64 e) const {
        Elem r = one();
        while (e > 0) {
            if (e & 1) r = mul(r, a);
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    u64 encode(const Elem& a) const {
        u64 v = 0;
        for (int i = d_ - 1; i >= 0; --i) v = v * p_ + a[i];
        return v;
    }

    // First primitive element in encoding order. Deterministic, so repeated
    // constructions agree across runs.
    Elem primitive_element() const {
        std::vector<u64> prime_factors = distinct_prime_factors(group_order_);
        for (u64 code = 1; code < order_; ++code) {
            Elem g = decode(code);
            bool ok = true;
            for (u64 r : prime_factors) {
                if (is_one(pow(g, group_order_ / r))) {
                    ok = false;
                    break;
                }
            }
            if (ok) return g;
        }
        throw InternalError("ExtField: no primitive element found");
    }

    Elem decode(u64 code) const {
        Elem e(d_, 0);
        for (int i = 0; i < d_; ++i) {
            e[i] = code % p_;
            code /= p_;
        }
        return e;
    }

    bool is_one(const Elem& a) const {
        if (a[0] != 1) return false;
        for (int i = 1; i < d_; ++i)
            if (a[i] != 0) return false;
        return true;
    }

    static std::vector<u64> distinct_prime_factors(u64 n) {
        std::vector<u64> fs;
        for (u64 f = 2; f * f <= n; ++f) {
            if (n % f == 0) {
                fs.push_back(f);
                while (n % f == 0) n /= f;
            }
        }
        if (n > 1) fs.push_back(n);
        return fs;
    }

private:
    fqpoly::Poly find_irreducible() const {
        std::vector<u64> dfactors = distinct_prime_factors(static_cast<u64>(d_));
        // Monic degree-d candidates in base-p counting order of the low
        // coefficients; irreducibles have density about 1/d, so this ends fast.
        for (u64 code = 1; code < order_; ++code) {
            fqpoly::Poly f(d_ + 1, 0);
            u64 c = code;
            for (int i = 0; i < d_; ++i) {
                f[i] = c % p_;
                c /= p_;
            }
            f[d_] = 1;
            if (is_irreducible(f, dfactors)) return f;
        }
        throw InternalError("ExtField: irreducible search exhausted");
    }

    bool is_irreducible(const fqpoly::Poly& f, const std::vector<u64>& dfactors) const {
        using namespace fqpoly;
        const Poly X{0, 1};
        // x^{p^d} must come back to x, and no proper Frobenius iterate may
        // share a factor with f.
        Poly t = X;
        std::vector<Poly> frob_iterates(d_ + 1);
        frob_iterates[0] = X;
        for (int e = 1; e <= d_; ++e) {
            t = powmod(t, p_, f, ground_);
            frob_iterates[e] = t;
        }
        Poly top = frob_iterates[d_];
        Poly diff = top;
        if (diff.size() < 2) diff.resize(2, 0);
        diff[1] = ground_.sub(diff[1], 1);
        trim(diff);
        if (!diff.empty()) return false;
        for (u64 r : dfactors) {
            Poly mid = frob_iterates[d_ / r];
            if (mid.size() < 2) mid.resize(2, 0);
            mid[1] = ground_.sub(mid[1], 1);
            trim(mid);
            Poly g = gcd(mid, f, ground_);
            if (degree(g) > 0) return false;
        }
        return true;
    }

    void build_reduction_rows() {
        red_.assign(d_ == 1 ? 0 : d_ - 1, std::vector<u64>(d_, 0));
        if (d_ == 1) return;
        // row k holds x^{d+k} mod irred
        std::vector<u64> cur(d_, 0);
        for (int i = 0; i < d_; ++i) cur[i] = (p_ - irred_[i]) % p_; // x^d mod f
        red_[0] = cur;
        for (int k = 1; k < d_ - 1; ++k) {
            std::vector<u64> nxt(d_, 0);
            u64 top = cur[d_ - 1];
            for (int i = d_ - 1; i >= 1; --i) nxt[i] = cur[i - 1];
            nxt[0] = 0;
            if (top != 0) {
                for (int i = 0; i < d_; ++i) nxt[i] = (nxt[i] + top * red_[0][i]) % p_;
            }
            red_[k] = nxt;
            cur = nxt;
        }
    }

    u64 p_;
    int d_;
    PrimeField ground_;
    fqpoly::Poly irred_;
    std::vector<std::vector<u64>> red_;
    u64 order_ = 0;
    u64 group_order_ = 0;
};

// Baby-step giant-step discrete logarithms with a shared baby table, so a
// batch of targets costs one table plus one giant walk per target.
class DlogSolver {
public:
    DlogSolver(const ExtField& F, const ExtField::Elem& base) : F_(F), base_(base) {
        const u64 n = F_.group_order();
        step_ = 1;
        while (step_ * step_ < n) ++step_;
        baby_.reserve(step_);
        ExtField::Elem cur = F_.one();
        for (u64 j = 0; j < step_; ++j) {
            baby_.emplace_back(F_.encode(cur), j);
            cur = F_.mul(cur, base_);
        }
        std::sort(baby_.begin(), baby_.end());
        giant_ = F_.pow(base_, n - step_); // base^{-step}
    }

    u64 dlog(const ExtField::Elem& target) const {
        const u64 n = F_.group_order();
        ExtField::Elem cur = target;
        for (u64 g = 0; g * step_ <= n + step_; ++g) {
            const u64 code = F_.encode(cur);
            auto it = std::lower_bound(baby_.begin(), baby_.end(), std::make_pair(code, u64(0)));
            if (it != baby_.end() && it->first == code) {
                return (g * step_ + it->second) % n;
            }
            cur = F_.mul(cur, giant_);
        }
        throw InternalError("DlogSolver: target outside the cyclic group");
    }

private:
    const ExtField& F_;
    ExtField::Elem base_;
    u64 step_;
    std::vector<std::pair<u64, u64>> baby_;
    ExtField::Elem giant_;
};

} // namespace gf

// True iff all multiset sums of size <= h are pairwise distinct. Exhaustive,
// hence the size caps.
inline bool is_bh(const std::vector<u64>& seq, int h) {
    if (seq.size() > 12 || h > 4) throw InvalidInputError("is_bh: exhaustive check capped at 12 elements, h <= 4");
    if (h < 1) throw InvalidInputError("is_bh: h must be positive");
    for (u64 e : seq) {
        if (e == 0 || e > (u64(1) << 60)) throw InvalidInputError("is_bh: elements must be positive and moderate");
    }
    std::unordered_set<u64> seen;
    bool dup = false;
    auto rec = [&](auto&& self, std::size_t start, u64 sum, int depth) -> void {
        if (dup) return;
        if (depth > 0 && !seen.insert(sum).second) {
            dup = true;
            return;
        }
        if (depth == h) return;
        for (std::size_t i = start; i < seq.size(); ++i) {
            self(self, i, sum + seq[i], depth + 1);
        }
    };
    rec(rec, 0, 0, 0);
    return !dup;
}

// Bose-Chowla construction. With q = p^l >= m+1, take beta primitive in
// GF(p^{lh}) and alpha_1 = 0, alpha_2, ..., alpha_{m+1} distinct ground-field
// elements; write beta^{a'_l} = beta + alpha_l. Sums of exactly h of the a'
// are distinct mod p^{lh}-1, and subtracting a'_1 = 1 from the rest yields m
// positive integers whose sums of up to h terms are distinct.
inline BhSequence construct_bh(int m, int h, u64 p_power) {
    if (m < 1) throw InvalidInputError("construct_bh: m must be positive");
    if (h < 2) throw InvalidInputError("construct_bh: h must be at least 2");
    if (p_power < static_cast<u64>(m) + 1) throw InvalidInputError("construct_bh: prime power must be at least m+1");
    u64 p;
    int l;
    if (!as_prime_power(p_power, p, l)) throw InvalidInputError("construct_bh: " + std::to_string(p_power) + " is not a prime power");

    // Resource cap: the extension field order p^{lh} drives table sizes and
    // the magnitude of downstream SCMA fields.
    {
        long double total = 1.0L;
        for (int i = 0; i < l * h; ++i) total *= static_cast<long double>(p);
        if (total > 2e12L) throw InvalidInputError("construct_bh: extension field order exceeds the supported range");
    }

    static std::map<std::tuple<int, int, u64>, BhSequence> cache;
    static std::mutex cache_mu;
    {
        std::lock_guard<std::mutex> lk(cache_mu);
        auto it = cache.find({m, h, p_power});
        if (it != cache.end()) return it->second;
    }

    gf::ExtField F(p, l * h);
    gf::ExtField::Elem beta = F.primitive_element();

    // alpha values: zero plus m further elements of the ground field GF(p^l),
    // realised inside the extension via the subfield's cyclic generator.
    std::vector<gf::ExtField::Elem> alphas;
    alphas.push_back(F.zero());
    if (l == 1) {
        for (int i = 1; i <= m; ++i) alphas.push_back(F.from_ground(static_cast<u64>(i)));
    } else {
        const u64 sub_order = [&] {
            u64 v = 1;
            for (int i = 0; i < l; ++i) v *= p;
            return v - 1;
        }();
        gf::ExtField::Elem gamma = F.pow(beta, F.group_order() / sub_order);
        gf::ExtField::Elem cur = F.one();
        for (int i = 0; i < m; ++i) {
            alphas.push_back(cur);
            cur = F.mul(cur, gamma);
        }
    }

    gf::DlogSolver solver(F, beta);
    std::vector<u64> a(m + 1);
    for (int i = 0; i <= m; ++i) {
        a[i] = solver.dlog(F.add(beta, alphas[static_cast<std::size_t>(i)]));
    }
    if (a[0] != 1) throw InternalError("construct_bh: dlog of beta itself must be 1");

    std::vector<u64> out;
    out.reserve(m);
    for (int i = 1; i <= m; ++i) {
        if (a[i] <= a[0]) throw InternalError("construct_bh: unexpected exponent ordering");
        out.push_back(a[i] - a[0]);
    }
    std::sort(out.begin(), out.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i] == out[i - 1]) throw InternalError("construct_bh: duplicate elements");
    }

    BhSequence seq;
    seq.h = h;
    seq.elements = std::move(out);
    {
        std::lock_guard<std::mutex> lk(cache_mu);
        cache.emplace(std::make_tuple(m, h, p_power), seq);
    }
    return seq;
}

// The unique multiset of sequence elements with at most h members summing to
// H. Uniqueness is the B_h property; absence means h was chosen too small
// for the observed per-bin collisions.
inline std::vector<u64> bh_decompose(u64 H, const BhSequence& seq, int h) {
    if (H == 0) return {};
    const std::vector<u64>& a = seq.elements;
    std::vector<u64> current;
    std::vector<std::vector<u64>> found;
    auto rec = [&](auto&& self, std::size_t start, u64 remaining, int depth) -> void {
        if (found.size() > 1) return;
        if (remaining == 0) {
            found.push_back(current);
            return;
        }
        if (depth == h) return;
        for (std::size_t i = start; i < a.size(); ++i) {
            if (a[i] > remaining) break; // elements ascend, nothing further fits
            current.push_back(a[i]);
            self(self, i, remaining - a[i], depth + 1);
            current.pop_back();
            if (found.size() > 1) return;
        }
    };
    rec(rec, 0, H, 0);
    if (found.empty()) {
        throw UnresolvableLabelError("bh_decompose: no decomposition of size <= " + std::to_string(h) +
                                     " for aggregate " + std::to_string(H));
    }
    if (found.size() > 1) {
        throw InternalError("bh_decompose: multiple decompositions; sequence is not B_h");
    }
    return found.front();
}

} // namespace hypfed
