#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mhs/algebra.hpp"

namespace mhs {

/// Seeded source of pseudorandom test data. Draws are reduced with plain
/// modular arithmetic rather than std distributions, so a seed produces the
/// same elements under every standard library.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    std::uint64_t next() { return rng_(); }

    // Uniform integer in [lo, hi].
    std::int64_t uniform(std::int64_t lo, std::int64_t hi)
    {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(rng_() % span);
    }

    bool coin() { return (rng_() & 1u) != 0; }

    /// Element of degree <= max_degree with coefficients in {-3..3}. Every
    /// normal monomial gets an independent coefficient draw.
    Element element(const Algebra& alg, std::uint32_t max_degree)
    {
        if (alg.is_product())
            return make_pair(alg, element(alg.left(), max_degree), element(alg.right(), max_degree));
        Poly p;
        for (const auto& m : alg.normal_monomials(max_degree))
            p.add_term(m, Rational(uniform(-3, 3)));
        return normal_form(p, alg);
    }

    /// Free-cover monomial (may lie in the ideal) with degree in [lo, hi].
    Monomial monomial(const Algebra& alg, std::uint32_t lo, std::uint32_t hi)
    {
        const std::size_t n = alg.variable_count();
        std::vector<std::uint32_t> e(n, 0);
        if (n == 0)
            return Monomial{};
        auto d = static_cast<std::uint32_t>(uniform(lo, hi));
        for (std::uint32_t k = 0; k < d; ++k)
            ++e[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(n) - 1))];
        return Monomial(std::move(e));
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(i) - 1))]);
    }

private:
    std::mt19937_64 rng_;
};

/// Deterministic element for (alg, max_degree, seed).
inline Element sample_element(const Algebra& alg, std::uint32_t max_degree, std::uint64_t seed)
{
    Sampler s(seed);
    return s.element(alg, max_degree);
}

} // namespace mhs
