#pragma once

// Independent reference computations. Nothing here calls the Leibniz
// evaluator, the convolution product or the rewriting engine.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mhs/algebra.hpp"

namespace oracle {

using mhs::Monomial;
using mhs::Poly;
using mhs::Rational;

inline Poly derivative(const Poly& p, std::size_t var)
{
    Poly out;
    for (const auto& [m, c] : p.terms()) {
        if (m[var] == 0)
            continue;
        std::vector<std::uint32_t> e(m.exponents().begin(), m.exponents().end());
        --e[var];
        out.add_term(Monomial(e), c * Rational(m[var] + 0));
    }
    return out;
}

/// (1/k!) d^k/dvar^k
inline Poly divided_derivative(const Poly& p, std::size_t var, unsigned k)
{
    Poly out = p;
    Rational fact = 1;
    for (unsigned i = 1; i <= k; ++i) {
        out = derivative(out, var);
        fact *= i;
    }
    return Rational(1 / fact) * out;
}

inline Rational binomial(unsigned n, unsigned k)
{
    Rational r = 1;
    for (unsigned i = 1; i <= k; ++i)
        r = r * Rational(n - k + i) / Rational(i);
    return r;
}

/// Coefficients of (a_0 + a_1 t + ...)(b_0 + b_1 t + ...) mod t^{len}.
inline std::vector<Poly> series_product(const std::vector<Poly>& a, const std::vector<Poly>& b)
{
    std::vector<Poly> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < a.size(); ++j)
            c[i + j] += a[i] * b[j];
    return c;
}

/// All results of rewriting the multiset of t-indices with every possible
/// choice of pair at every step. Result (scalar-word, index) where the word
/// records the sorted lambda factors used; index 0 means the empty product
/// and -1 means zero.
inline std::set<std::pair<std::multiset<std::pair<int, int>>, int>> all_rewrites(std::multiset<int> factors, int n,
                                                                                 std::multiset<std::pair<int, int>> used = {})
{
    if (factors.size() <= 1)
        return {{used, factors.empty() ? 0 : *factors.begin()}};
    std::set<std::pair<std::multiset<std::pair<int, int>>, int>> out;
    std::vector<int> f(factors.begin(), factors.end());
    for (std::size_t p = 0; p < f.size(); ++p)
        for (std::size_t q = p + 1; q < f.size(); ++q) {
            const int i = f[p], j = f[q];
            if (i + j > n) {
                out.insert({{}, -1});
                continue;
            }
            std::multiset<int> rest;
            for (std::size_t k = 0; k < f.size(); ++k)
                if (k != p && k != q)
                    rest.insert(f[k]);
            rest.insert(i + j);
            auto u = used;
            u.insert({std::min(i, j), std::max(i, j)});
            for (auto&& r : all_rewrites(rest, n, u))
                out.insert(r);
        }
    return out;
}

/// Coefficient of t^k in f(d0(x_v) + sum_l images[l-1][v] t^l), the Taylor
/// expansion that a classical order-n Hasse-Schmidt derivation encodes. d0 and
/// the images are polynomials in `width` target variables.
inline Poly taylor_coefficient(const Poly& f, const std::vector<Poly>& d0, const std::vector<std::vector<Poly>>& images,
                               std::size_t width, unsigned k)
{
    const Poly t = Poly::variable(width);
    std::vector<Poly> sub;
    for (std::size_t v = 0; v < d0.size(); ++v) {
        Poly s = d0[v];
        Poly tl = Poly(1);
        for (const auto& level : images) {
            tl = tl * t;
            s += level[v] * tl;
        }
        sub.push_back(s);
    }
    Poly full;
    for (const auto& [m, c] : f.terms()) {
        Poly term = Poly(c);
        for (std::size_t v = 0; v < m.width(); ++v)
            term = term * mhs::pow(sub[v], m[v]);
        full += term;
    }
    Poly out;
    for (const auto& [m, c] : full.terms()) {
        if (m[width] != k)
            continue;
        std::vector<std::uint32_t> e(m.exponents().begin(), m.exponents().end());
        e.resize(width);
        out.add_term(Monomial(e), c);
    }
    return out;
}

} // namespace oracle
