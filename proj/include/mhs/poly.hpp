#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mhs/error.hpp"

namespace mhs {

// Exact rationals; mpq_class keeps gcd(num, den) = 1 and den > 0 after
// every arithmetic operation.
using Rational = mpq_class;

inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Parses "p" or "p/q" (optional leading '-') into a canonical rational.
inline Rational parse_rational(std::string_view text)
{
    Rational q;
    if (q.set_str(std::string(text), 10) != 0 || q.get_den() == 0)
        throw Error(ErrorCode::invalid_argument, "malformed rational literal '" + std::string(text) + "'");
    q.canonicalize();
    return q;
}

/// Exponent vector indexed by variable position in the owning algebra's
/// declaration list. Trailing zeros are trimmed, so the empty vector is 1.
class Monomial {
public:
    Monomial() = default;

    explicit Monomial(std::vector<std::uint32_t> exponents) : exp_(std::move(exponents)) { trim(); }

    static Monomial variable(std::size_t index, std::uint32_t power = 1)
    {
        std::vector<std::uint32_t> e(index + 1, 0);
        e[index] = power;
        return Monomial(std::move(e));
    }

    std::uint32_t operator[](std::size_t i) const noexcept { return i < exp_.size() ? exp_[i] : 0; }
    std::size_t width() const noexcept { return exp_.size(); }
    std::span<const std::uint32_t> exponents() const noexcept { return exp_; }
    bool is_one() const noexcept { return exp_.empty(); }

    std::uint64_t degree() const noexcept
    {
        std::uint64_t d = 0;
        for (auto e : exp_)
            d += e;
        return d;
    }

    bool divides(const Monomial& other) const noexcept
    {
        if (exp_.size() > other.exp_.size())
            return false;
        for (std::size_t i = 0; i < exp_.size(); ++i)
            if (exp_[i] > other.exp_[i])
                return false;
        return true;
    }

    // Caller guarantees divisor.divides(*this).
    Monomial operator/(const Monomial& divisor) const
    {
        std::vector<std::uint32_t> e = exp_;
        for (std::size_t i = 0; i < divisor.exp_.size(); ++i)
            e[i] -= divisor.exp_[i];
        return Monomial(std::move(e));
    }

    friend Monomial operator*(const Monomial& a, const Monomial& b)
    {
        std::vector<std::uint32_t> e(std::max(a.exp_.size(), b.exp_.size()), 0);
        for (std::size_t i = 0; i < a.exp_.size(); ++i)
            e[i] += a.exp_[i];
        for (std::size_t i = 0; i < b.exp_.size(); ++i)
            e[i] += b.exp_[i];
        return Monomial(std::move(e));
    }

    friend bool operator==(const Monomial&, const Monomial&) = default;

    // Graded lexicographic order with variables ranked by declaration order:
    // higher total degree is larger, ties go to the larger exponent on the
    // earliest variable.
    friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) noexcept
    {
        if (auto c = a.degree() <=> b.degree(); c != 0)
            return c;
        const std::size_t w = std::max(a.width(), b.width());
        for (std::size_t i = 0; i < w; ++i)
            if (auto c = a[i] <=> b[i]; c != 0)
                return c;
        return std::strong_ordering::equal;
    }

private:
    void trim()
    {
        while (!exp_.empty() && exp_.back() == 0)
            exp_.pop_back();
    }

    std::vector<std::uint32_t> exp_;
};

/// Sparse multivariate polynomial over Q. Variables are positional; the
/// algebra that owns a Poly supplies their names.
class Poly {
public:
    using Terms = std::map<Monomial, Rational>;

    Poly() = default;
    Poly(const Rational& c)  // NOLINT(google-explicit-constructor)
    {
        if (c != 0)
            terms_.emplace(Monomial{}, c);
    }
    Poly(long c) : Poly(Rational(c)) {} // NOLINT(google-explicit-constructor)

    static Poly term(const Monomial& m, const Rational& c)
    {
        Poly p;
        if (c != 0)
            p.terms_.emplace(m, c);
        return p;
    }

    static Poly variable(std::size_t index) { return term(Monomial::variable(index), 1); }

    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    std::size_t size() const noexcept { return terms_.size(); }

    Rational coefficient(const Monomial& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    bool is_constant() const noexcept { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_one()); }

    std::uint64_t degree() const noexcept { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

    // One past the largest variable index that occurs.
    std::size_t width() const noexcept
    {
        std::size_t w = 0;
        for (const auto& [m, c] : terms_)
            w = std::max(w, m.width());
        return w;
    }

    void add_term(const Monomial& m, const Rational& c)
    {
        if (c == 0)
            return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0)
                terms_.erase(it);
        }
    }

    Poly& operator+=(const Poly& o)
    {
        for (const auto& [m, c] : o.terms_)
            add_term(m, c);
        return *this;
    }

    Poly& operator-=(const Poly& o)
    {
        for (const auto& [m, c] : o.terms_)
            add_term(m, -c);
        return *this;
    }

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }

    friend Poly operator-(Poly a)
    {
        for (auto& [m, c] : a.terms_)
            c = -c;
        return a;
    }

    friend Poly operator*(const Poly& a, const Poly& b)
    {
        Poly r;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_)
                r.add_term(ma * mb, ca * cb);
        return r;
    }

    Poly& operator*=(const Poly& o) { return *this = *this * o; }

    friend Poly operator*(const Rational& s, Poly a)
    {
        if (s == 0)
            return Poly{};
        for (auto& [m, c] : a.terms_)
            c *= s;
        return a;
    }

    friend bool operator==(const Poly&, const Poly&) = default;

    /// Renders with the given variable names, terms in descending graded
    /// lex order, e.g. "2*x^2*y - 1/2*x + 3".
    std::string to_string(std::span<const std::string> names) const
    {
        if (terms_.empty())
            return "0";
        std::string out;
        bool first = true;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [m, c] = *it;
            Rational mag = abs(c);
            if (first) {
                if (c < 0)
                    out += "-";
            } else {
                out += c < 0 ? " - " : " + ";
            }
            first = false;
            std::string mono;
            for (std::size_t i = 0; i < m.width(); ++i) {
                if (m[i] == 0)
                    continue;
                if (!mono.empty())
                    mono += "*";
                mono += i < names.size() ? names[i] : "v" + std::to_string(i);
                if (m[i] > 1)
                    mono += "^" + std::to_string(m[i]);
            }
            if (mono.empty())
                out += mag.get_str();
            else if (mag == 1)
                out += mono;
            else
                out += mag.get_str() + "*" + mono;
        }
        return out;
    }

private:
    Terms terms_;
};

inline Poly pow(const Poly& base, std::uint32_t e)
{
    Poly result(1);
    Poly b = base;
    while (e > 0) {
        if (e & 1u)
            result *= b;
        e >>= 1;
        if (e > 0)
            b *= b;
    }
    return result;
}

} // namespace mhs
