#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "hypfed/errors.hpp"

namespace hypfed {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 addmod(u64 a, u64 b, u64 m) {
    a %= m;
    b %= m;
    const u64 r = a + b;
    return (r >= m || r < a) ? r - m : r;
}

inline u64 submod(u64 a, u64 b, u64 m) {
    a %= m;
    b %= m;
    return a >= b ? a - b : a + (m - b);
}

inline u64 powmod(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base, m);
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    return result;
}

// Deterministic Miller-Rabin; the listed bases decide primality correctly
// for every 64-bit integer.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

inline u64 next_prime_at_least(u64 n) {
    if (n <= 2) return 2;
    if ((n & 1) == 0) ++n;
    while (!is_prime_u64(n)) n += 2;
    return n;
}

// Prime field F_q used by the SCMA layer. Elements are canonical residues.
struct PrimeField {
    u64 q;
    // Products of two reduced elements fit in u64 when q < 2^32, which every
    // reachable protocol field satisfies; mul then avoids the software
    // 128-bit modulo entirely.
    bool small;

    explicit PrimeField(u64 q_) : q(q_), small(q_ < (u64(1) << 32)) {
        if (!is_prime_u64(q)) {
            throw InvalidInputError("PrimeField: " + std::to_string(q_) + " is not prime");
        }
    }

    u64 add(u64 a, u64 b) const { return addmod(a, b, q); }
    u64 sub(u64 a, u64 b) const { return submod(a, b, q); }
    u64 mul(u64 a, u64 b) const {
        if (small) return ((a % q) * (b % q)) % q;
        return mulmod(a % q, b % q, q);
    }
    u64 pow(u64 a, u64 e) const { return powmod(a, e, q); }
    u64 inv(u64 a) const {
        a %= q;
        if (a == 0) throw InvalidInputError("PrimeField: inverse of zero");
        return powmod(a, q - 2, q);
    }
    u64 neg(u64 a) const {
        a %= q;
        return a == 0 ? 0 : q - a;
    }
};

// ---------------------------------------------------------------------------
// Dense polynomials over F_q, coefficients ascending. Everything below is
// plain schoolbook arithmetic: locator degrees in this project stay in the
// hundreds, where quadratic algorithms are both fast enough and auditable.
// For fields below 2^32 the kernels accumulate unreduced u64 products in
// 128-bit lanes and reduce once per output coefficient, which is what keeps
// decoding fine grids affordable.
// ---------------------------------------------------------------------------
namespace fqpoly {

using Poly = std::vector<u64>;

inline void trim(Poly& f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
}

// The lazy kernels below keep unreduced sums of coefficient products in u128
// lanes and reduce once per output. Exactness needs (terms+1) * q^2 < 2^128.
inline bool lazy_ok(const PrimeField& F, std::size_t lane_terms) {
    return F.q < (u64(1) << 52) && lane_terms < (std::size_t(1) << 24);
}

inline int degree(const Poly& f) { return static_cast<int>(f.size()) - 1; }

inline Poly mul(const Poly& a, const Poly& b, const PrimeField& F) {
    if (a.empty() || b.empty()) return {};
    if (lazy_ok(F, std::min(a.size(), b.size()))) {
        std::vector<u128> acc(a.size() + b.size() - 1, 0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0) continue;
            for (std::size_t j = 0; j < b.size(); ++j) {
                acc[i + j] += static_cast<u128>(a[i]) * b[j];
            }
        }
        Poly r(acc.size());
        for (std::size_t i = 0; i < acc.size(); ++i) r[i] = static_cast<u64>(acc[i] % F.q);
        trim(r);
        return r;
    }
    Poly r(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
        }
    }
    trim(r);
    return r;
}

// Remainder of f modulo a monic divisor.
inline Poly rem(Poly f, const Poly& monic, const PrimeField& F) {
    trim(f);
    const int dm = degree(monic);
    if (dm < 0) throw InternalError("fqpoly::rem: zero divisor");
    if (dm >= 1 && degree(f) >= dm && lazy_ok(F, monic.size())) {
        // Subtracting lead*monic becomes adding lead*(q - monic[i]); each
        // lane sees at most deg(monic) such additions, within the lazy_ok
        // bound. One reduction per step for the lead, one per surviving
        // coefficient at the end.
        std::vector<u128> acc(f.begin(), f.end());
        const std::size_t dmz = static_cast<std::size_t>(dm);
        for (std::size_t top = acc.size(); top-- > dmz;) {
            const u64 lead = static_cast<u64>(acc[top] % F.q);
            if (lead == 0) continue;
            const std::size_t shift = top - dmz;
            for (std::size_t i = 0; i < dmz; ++i) {
                if (monic[i] != 0) acc[shift + i] += static_cast<u128>(lead) * (F.q - monic[i]);
            }
        }
        Poly r(dmz);
        for (std::size_t i = 0; i < dmz; ++i) r[i] = static_cast<u64>(acc[i] % F.q);
        trim(r);
        return r;
    }
    while (degree(f) >= dm) {
        const u64 lead = f.back();
        const std::size_t shift = f.size() - monic.size();
        if (lead != 0) {
            for (std::size_t i = 0; i < monic.size(); ++i) {
                f[shift + i] = F.sub(f[shift + i], F.mul(lead, monic[i]));
            }
        }
        f.pop_back();
        trim(f);
    }
    return f;
}

inline Poly mulmod(const Poly& a, const Poly& b, const Poly& monic, const PrimeField& F) {
    return rem(mul(a, b, F), monic, F);
}

inline Poly powmod(Poly base, u64 exp, const Poly& monic, const PrimeField& F) {
    Poly result{1};
    base = rem(std::move(base), monic, F);
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base, monic, F);
        base = mulmod(base, base, monic, F);
        exp >>= 1;
    }
    return result;
}

inline Poly monic_of(Poly f, const PrimeField& F) {
    trim(f);
    if (f.empty()) return f;
    const u64 s = F.inv(f.back());
    for (u64& c : f) c = F.mul(c, s);
    return f;
}

inline Poly gcd(Poly a, Poly b, const PrimeField& F) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        Poly r = rem(a, monic_of(b, F), F);
        a = std::move(b);
        b = std::move(r);
    }
    return monic_of(std::move(a), F);
}

// Quotient of f by a monic divisor that divides it exactly.
inline Poly quotient_exact(Poly f, const Poly& monic, const PrimeField& F) {
    trim(f);
    const int dm = degree(monic);
    if (degree(f) < dm) return {};
    if (dm >= 1 && lazy_ok(F, monic.size())) {
        const std::size_t dmz = static_cast<std::size_t>(dm);
        std::vector<u128> acc(f.begin(), f.end());
        Poly q(f.size() - monic.size() + 1, 0);
        for (std::size_t top = acc.size(); top-- > dmz;) {
            const u64 lead = static_cast<u64>(acc[top] % F.q);
            const std::size_t shift = top - dmz;
            q[shift] = lead;
            if (lead == 0) continue;
            for (std::size_t i = 0; i < dmz; ++i) {
                if (monic[i] != 0) acc[shift + i] += static_cast<u128>(lead) * (F.q - monic[i]);
            }
        }
        return q;
    }
    Poly q(f.size() - monic.size() + 1, 0);
    while (degree(f) >= dm) {
        const u64 lead = f.back();
        const std::size_t shift = f.size() - monic.size();
        q[shift] = lead;
        for (std::size_t i = 0; i < monic.size(); ++i) {
            f[shift + i] = F.sub(f[shift + i], F.mul(lead, monic[i]));
        }
        f.pop_back();
        trim(f);
    }
    return q;
}

inline u64 eval(const Poly& f, u64 x, const PrimeField& F) {
    u64 acc = 0;
    for (std::size_t i = f.size(); i-- > 0;) {
        acc = F.add(F.mul(acc, x), f[i]);
    }
    return acc;
}

} // namespace fqpoly

// Berlekamp-Massey over F_q: returns the minimal connection polynomial
// C(z) = 1 + c_1 z + ... + c_t z^t with s_n = -(c_1 s_{n-1} + ... + c_t s_{n-t})
// for all n >= t. The returned vector is C's coefficients; degree = LFSR length.
inline fqpoly::Poly berlekamp_massey(const std::vector<u64>& s, const PrimeField& F) {
    fqpoly::Poly C{1};
    fqpoly::Poly Bp{1};
    std::size_t L = 0;
    std::size_t m = 1;
    u64 b = 1;
    for (std::size_t n = 0; n < s.size(); ++n) {
        u64 d = s[n] % F.q;
        for (std::size_t i = 1; i <= L && i < C.size(); ++i) {
            d = F.add(d, F.mul(C[i], s[n - i]));
        }
        if (d == 0) {
            ++m;
            continue;
        }
        const u64 coef = F.mul(d, F.inv(b));
        if (2 * L <= n) {
            fqpoly::Poly T = C;
            if (C.size() < Bp.size() + m) C.resize(Bp.size() + m, 0);
            for (std::size_t i = 0; i < Bp.size(); ++i) {
                C[i + m] = F.sub(C[i + m], F.mul(coef, Bp[i]));
            }
            L = n + 1 - L;
            Bp = std::move(T);
            b = d;
            m = 1;
        } else {
            if (C.size() < Bp.size() + m) C.resize(Bp.size() + m, 0);
            for (std::size_t i = 0; i < Bp.size(); ++i) {
                C[i + m] = F.sub(C[i + m], F.mul(coef, Bp[i]));
            }
            ++m;
        }
    }
    C.resize(L + 1, 0);
    return C;
}

namespace detail {

// Deterministic Cantor-Zassenhaus splitting of a monic product of distinct
// linear factors. Shifts are tried in a fixed order so decoding is
// reproducible; the chance that many consecutive shifts all fail to split is
// vanishing, but a hard cap turns pathologies into a typed error.
inline void cz_collect_roots(fqpoly::Poly f, const PrimeField& F, std::vector<u64>& out) {
    using namespace fqpoly;
    trim(f);
    if (degree(f) <= 0) return;
    if (degree(f) == 1) {
        out.push_back(F.neg(f[0]));
        return;
    }
    const u64 half = (F.q - 1) / 2;
    for (u64 shift = 1; shift <= 512; ++shift) {
        Poly base{shift, 1}; // X + shift
        Poly t = powmod(base, half, f, F);
        if (t.empty()) {
            t = Poly{F.q - 1};
        } else {
            t[0] = F.sub(t[0], 1);
        }
        Poly g = gcd(t, f, F);
        if (degree(g) > 0 && degree(g) < degree(f)) {
            Poly rest = quotient_exact(f, g, F);
            cz_collect_roots(std::move(g), F, out);
            cz_collect_roots(monic_of(std::move(rest), F), F, out);
            return;
        }
    }
    throw DecodeError("root finding: splitting stalled; aggregate is not a valid power-sum sequence");
}

} // namespace detail

// All roots of a monic polynomial known to split into distinct linear
// factors over F_q, restricted to [1, B]. Desk-scale B uses the exhaustive
// scan; larger bin counts switch to gcd-based factor extraction.
inline std::vector<u64> find_distinct_roots(const fqpoly::Poly& monic, const PrimeField& F, u64 B) {
    using namespace fqpoly;
    const int t = degree(monic);
    std::vector<u64> roots;
    if (t <= 0) return roots;
    if (B <= 100000) {
        for (u64 b = 1; b <= B; ++b) {
            if (eval(monic, b, F) == 0) roots.push_back(b);
        }
        return roots;
    }
    // x^q - x splits off exactly the distinct roots living in F_q; a valid
    // locator is already a product of distinct linear factors, so anything
    // else is reported by the caller as a decode failure.
    Poly xq = powmod(Poly{0, 1}, F.q, monic, F);
    if (xq.size() < 2) xq.resize(2, 0);
    xq[1] = F.sub(xq[1], 1);
    Poly g = gcd(xq, monic, F);
    if (degree(g) != t) return roots; // repeated or extension-field roots
    detail::cz_collect_roots(std::move(g), F, roots);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::remove_if(roots.begin(), roots.end(), [&](u64 r) { return r < 1 || r > B; }), roots.end());
    return roots;
}

} // namespace hypfed
