#pragma once

// Exact integer linear algebra: rational rank via fraction-free elimination
// (128-bit fast path, arbitrary-precision fallback) and Smith normal form
// with unimodular transforms.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

using IntMatrix = std::vector<std::vector<long long>>;

// Minimal signed arbitrary-precision integer; only what elimination needs.
class BigInt {
  public:
    BigInt() = default;
    BigInt(long long v) {  // NOLINT(google-explicit-constructor)
        if (v < 0) {
            neg_ = true;
            unsigned long long u = static_cast<unsigned long long>(-(v + 1)) + 1ULL;
            store(u);
        } else {
            store(static_cast<unsigned long long>(v));
        }
    }

    bool is_zero() const { return mag_.empty(); }
    bool negative() const { return neg_; }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        if (a.neg_ == b.neg_) {
            BigInt r;
            r.mag_ = add_mag(a.mag_, b.mag_);
            r.neg_ = a.neg_;
            r.norm();
            return r;
        }
        const int c = cmp_mag(a.mag_, b.mag_);
        BigInt r;
        if (c == 0) return r;
        if (c > 0) {
            r.mag_ = sub_mag(a.mag_, b.mag_);
            r.neg_ = a.neg_;
        } else {
            r.mag_ = sub_mag(b.mag_, a.mag_);
            r.neg_ = b.neg_;
        }
        r.norm();
        return r;
    }
    friend BigInt operator-(const BigInt& a, const BigInt& b) {
        BigInt nb = b;
        if (!nb.is_zero()) nb.neg_ = !nb.neg_;
        return a + nb;
    }
    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        BigInt r;
        if (a.is_zero() || b.is_zero()) return r;
        r.mag_.assign(a.mag_.size() + b.mag_.size(), 0);
        for (std::size_t i = 0; i < a.mag_.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < b.mag_.size(); ++j) {
                const std::uint64_t cur = static_cast<std::uint64_t>(a.mag_[i]) * b.mag_[j] +
                                          r.mag_[i + j] + carry;
                r.mag_[i + j] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
            }
            std::size_t k = i + b.mag_.size();
            while (carry) {
                const std::uint64_t cur = r.mag_[k] + carry;
                r.mag_[k] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
                ++k;
            }
        }
        r.neg_ = a.neg_ != b.neg_;
        r.norm();
        return r;
    }

    // exact division (throws if not exact); divisor nonzero
    friend BigInt div_exact(const BigInt& a, const BigInt& b) {
        auto [q, r] = divmod_mag(a.mag_, b.mag_);
        if (!r.empty()) throw numeric_error("bigint: division not exact");
        BigInt out;
        out.mag_ = std::move(q);
        out.neg_ = a.neg_ != b.neg_;
        out.norm();
        return out;
    }

    friend bool operator==(const BigInt& a, const BigInt& b) {
        return a.neg_ == b.neg_ && a.mag_ == b.mag_;
    }

    BigInt abs() const {
        BigInt r = *this;
        r.neg_ = false;
        return r;
    }

    friend bool abs_less(const BigInt& a, const BigInt& b) { return cmp_mag(a.mag_, b.mag_) < 0; }

  private:
    bool neg_ = false;
    std::vector<std::uint32_t> mag_;  // little-endian limbs

    void store(unsigned long long u) {
        while (u) {
            mag_.push_back(static_cast<std::uint32_t>(u));
            u >>= 32;
        }
    }
    void norm() {
        while (!mag_.empty() && mag_.back() == 0) mag_.pop_back();
        if (mag_.empty()) neg_ = false;
    }
    static int cmp_mag(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (std::size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        return 0;
    }
    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < std::max(a.size(), b.size()) || carry; ++i) {
            std::uint64_t cur = carry;
            if (i < a.size()) cur += a[i];
            if (i < b.size()) cur += b[i];
            r.push_back(static_cast<std::uint32_t>(cur));
            carry = cur >> 32;
        }
        return r;
    }
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r = a;
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::int64_t cur = static_cast<std::int64_t>(r[i]) - borrow - (i < b.size() ? b[i] : 0);
            borrow = 0;
            if (cur < 0) {
                cur += (1LL << 32);
                borrow = 1;
            }
            r[i] = static_cast<std::uint32_t>(cur);
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }
    static std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> divmod_mag(
        std::vector<std::uint32_t> a, const std::vector<std::uint32_t>& b) {
        if (b.empty()) throw numeric_error("bigint: division by zero");
        if (cmp_mag(a, b) < 0) return {{}, a};
        // simple binary long division
        const std::size_t bits = a.size() * 32;
        std::vector<std::uint32_t> q(a.size(), 0), rem;
        for (std::size_t i = bits; i-- > 0;) {
            // rem = rem*2 + bit_i(a)
            std::uint32_t carry = (a[i / 32] >> (i % 32)) & 1u;
            for (auto& limb : rem) {
                const std::uint32_t nc = limb >> 31;
                limb = (limb << 1) | carry;
                carry = nc;
            }
            if (carry) rem.push_back(carry);
            if (cmp_mag(rem, b) >= 0) {
                rem = sub_mag(rem, b);
                q[i / 32] |= 1u << (i % 32);
            }
        }
        while (!q.empty() && q.back() == 0) q.pop_back();
        return {q, rem};
    }
};

namespace detail {

template <typename T>
struct EliminationTraits;

template <>
struct EliminationTraits<__int128> {
    static __int128 from(long long v) { return v; }
    static bool is_zero(__int128 v) { return v == 0; }
    static __int128 mul(__int128 a, __int128 b) {
        __int128 r;
        if (__builtin_mul_overflow(a, b, &r)) throw capacity_error("rank: 128-bit overflow");
        return r;
    }
    static __int128 sub(__int128 a, __int128 b) {
        __int128 r;
        if (__builtin_sub_overflow(a, b, &r)) throw capacity_error("rank: 128-bit overflow");
        return r;
    }
    static __int128 divx(__int128 a, __int128 b) { return a / b; }
};

template <>
struct EliminationTraits<BigInt> {
    static BigInt from(long long v) { return BigInt(v); }
    static bool is_zero(const BigInt& v) { return v.is_zero(); }
    static BigInt mul(const BigInt& a, const BigInt& b) { return a * b; }
    static BigInt sub(const BigInt& a, const BigInt& b) { return a - b; }
    static BigInt divx(const BigInt& a, const BigInt& b) { return div_exact(a, b); }
};

// Bareiss fraction-free elimination; exact rational rank of an integer matrix.
template <typename T>
std::size_t rank_bareiss(const IntMatrix& m) {
    using Tr = EliminationTraits<T>;
    const std::size_t rows = m.size();
    if (rows == 0) return 0;
    const std::size_t cols = m[0].size();
    std::vector<std::vector<T>> a(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (m[i].size() != cols) throw validation_error("rank: ragged matrix");
        for (auto v : m[i]) a[i].push_back(Tr::from(v));
    }
    std::size_t rank = 0;
    T prev = Tr::from(1);
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        while (pivot < rows && Tr::is_zero(a[pivot][col])) ++pivot;
        if (pivot == rows) continue;
        std::swap(a[pivot], a[rank]);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            for (std::size_t j = col + 1; j < cols; ++j) {
                a[i][j] = Tr::divx(
                    Tr::sub(Tr::mul(a[rank][col], a[i][j]), Tr::mul(a[i][col], a[rank][j])), prev);
            }
            a[i][col] = Tr::from(0);
        }
        prev = a[rank][col];
        ++rank;
    }
    return rank;
}

}  // namespace detail

// Rank over the rationals; 128-bit fast path with an exact fallback.
inline std::size_t rank_exact(const IntMatrix& m) {
    try {
        return detail::rank_bareiss<__int128>(m);
    } catch (const capacity_error&) {
        return detail::rank_bareiss<BigInt>(m);
    }
}

struct SmithNormalForm {
    IntMatrix D;                       // U * A * V = D, diagonal
    IntMatrix U, V;                    // unimodular
    std::vector<long long> divisors;   // nonzero diagonal entries, divisibility chain
    std::size_t rank = 0;
};

namespace detail {

inline void add_row(IntMatrix& m, std::size_t dst, std::size_t src, long long f) {
    for (std::size_t j = 0; j < m[dst].size(); ++j) m[dst][j] += f * m[src][j];
}
inline void add_col(IntMatrix& m, std::size_t dst, std::size_t src, long long f) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i][dst] += f * m[i][src];
}

}  // namespace detail

// Smith normal form for small integer matrices (entries stay modest in the
// intended uses; a guard throws if they grow past 2^62).
inline SmithNormalForm smith_normal_form(const IntMatrix& a0) {
    SmithNormalForm s;
    s.D = a0;
    const std::size_t rows = a0.size();
    const std::size_t cols = rows ? a0[0].size() : 0;
    s.U.assign(rows, std::vector<long long>(rows, 0));
    s.V.assign(cols, std::vector<long long>(cols, 0));
    for (std::size_t i = 0; i < rows; ++i) s.U[i][i] = 1;
    for (std::size_t j = 0; j < cols; ++j) s.V[j][j] = 1;
    auto guard = [&]() {
        for (const auto& r : s.D)
            for (auto v : r)
                if (std::llabs(v) > (1LL << 62)) throw capacity_error("snf: entries too large");
    };
    std::size_t t = 0;
    while (t < rows && t < cols) {
        // locate the minimal nonzero entry in the lower-right block
        std::size_t pi = t, pj = t;
        long long best = 0;
        for (std::size_t i = t; i < rows; ++i)
            for (std::size_t j = t; j < cols; ++j)
                if (s.D[i][j] != 0 && (best == 0 || std::llabs(s.D[i][j]) < std::llabs(best))) {
                    best = s.D[i][j];
                    pi = i;
                    pj = j;
                }
        if (best == 0) break;
        std::swap(s.D[pi], s.D[t]);
        std::swap(s.U[pi], s.U[t]);
        for (std::size_t i = 0; i < rows; ++i) std::swap(s.D[i][pj], s.D[i][t]);
        for (std::size_t j = 0; j < cols; ++j) std::swap(s.V[j][pj], s.V[j][t]);

        bool clean = true;
        for (std::size_t i = t + 1; i < rows; ++i) {
            if (s.D[i][t] == 0) continue;
            const long long f = -(s.D[i][t] / s.D[t][t]);
            detail::add_row(s.D, i, t, f);
            detail::add_row(s.U, i, t, f);
            if (s.D[i][t] != 0) clean = false;
        }
        for (std::size_t j = t + 1; j < cols; ++j) {
            if (s.D[t][j] == 0) continue;
            const long long f = -(s.D[t][j] / s.D[t][t]);
            detail::add_col(s.D, j, t, f);
            detail::add_col(s.V, j, t, f);
            if (s.D[t][j] != 0) clean = false;
        }
        guard();
        if (!clean) continue;  // remainders became new smaller pivots
        // enforce divisibility: pivot must divide every remaining entry
        bool fixed = false;
        for (std::size_t i = t + 1; i < rows && !fixed; ++i)
            for (std::size_t j = t + 1; j < cols && !fixed; ++j)
                if (s.D[i][j] % s.D[t][t] != 0) {
                    detail::add_row(s.D, t, i, 1);
                    detail::add_row(s.U, t, i, 1);
                    fixed = true;
                }
        if (fixed) continue;
        if (s.D[t][t] < 0) {
            for (std::size_t j = 0; j < cols; ++j) s.D[t][j] = -s.D[t][j];
            for (std::size_t j = 0; j < rows; ++j) s.U[t][j] = -s.U[t][j];
        }
        ++t;
    }
    s.rank = t;
    for (std::size_t i = 0; i < t; ++i) s.divisors.push_back(s.D[i][i]);
    return s;
}

// Number of solutions of A z = 0 (mod q) in (Z_q)^cols.
inline double solution_count_mod(const SmithNormalForm& s, long long q, std::size_t cols) {
    double count = 1.0;
    for (auto d : s.divisors) count *= static_cast<double>(std::gcd(d, q));
    for (std::size_t i = s.rank; i < cols; ++i) count *= static_cast<double>(q);
    return count;
}

// All solutions of A z = 0 (mod q), via z = V y with D y = 0 (mod q).
inline std::vector<std::vector<long long>> solve_mod(const SmithNormalForm& s, long long q,
                                                     std::size_t cols, std::size_t budget) {
    const double total = solution_count_mod(s, q, cols);
    if (total > static_cast<double>(budget))
        throw capacity_error("solve_mod: " + std::to_string(total) + " solutions exceed budget " +
                             std::to_string(budget));
    std::vector<std::vector<long long>> ys;
    std::vector<long long> cur(cols, 0);
    // y_i ranges over multiples of q/gcd(d_i, q) for i < rank, all residues after
    std::vector<std::vector<long long>> choices(cols);
    for (std::size_t i = 0; i < cols; ++i) {
        if (i < s.rank) {
            const long long g = std::gcd(s.divisors[i], q);
            const long long step = q / g;
            for (long long v = 0; v < q; v += step) choices[i].push_back(v);
        } else {
            for (long long v = 0; v < q; ++v) choices[i].push_back(v);
        }
    }
    std::vector<std::size_t> idx(cols, 0);
    bool done = (cols == 0);
    while (!done) {
        for (std::size_t i = 0; i < cols; ++i) cur[i] = choices[i][idx[i]];
        std::vector<long long> z(cols, 0);
        for (std::size_t i = 0; i < cols; ++i) {
            long long acc = 0;
            for (std::size_t j = 0; j < cols; ++j) acc += s.V[i][j] * cur[j];
            z[i] = ((acc % q) + q) % q;
        }
        ys.push_back(std::move(z));
        done = true;
        for (std::size_t p = cols; p-- > 0;) {
            if (++idx[p] < choices[p].size()) {
                done = false;
                break;
            }
            idx[p] = 0;
        }
    }
    return ys;
}

}  // namespace meandim
