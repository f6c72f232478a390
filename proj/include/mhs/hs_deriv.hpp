#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mhs/trivial_ext.hpp"

namespace mhs {

/// A multi Hasse-Schmidt derivation presented by its level-0 morphisms
/// D_0^i : A -> B_i and the generator images D_i(x) in B_i. Everything else
/// follows from the Leibniz rule.
///
/// For a quotient A the images are read on the free cover; hs_verify checks
/// that the ideal is killed.
class DerivationSpec {
public:
    DerivationSpec(SystemRef sys, std::vector<Morphism> level0, std::vector<std::vector<Element>> images,
                   std::string name = {})
        : sys_(std::move(sys)), level0_(std::move(level0)), images_(std::move(images)), name_(std::move(name))
    {
        const int n = sys_->order();
        const Algebra& a = sys_->base();
        if (static_cast<int>(level0_.size()) != n)
            throw Error(ErrorCode::invalid_argument, "need " + std::to_string(n) + " level-0 morphisms");
        if (static_cast<int>(images_.size()) != n)
            throw Error(ErrorCode::invalid_argument, "need generator images for " + std::to_string(n) + " levels");
        for (int i = 1; i <= n; ++i) {
            const auto& d0 = level0_[static_cast<std::size_t>(i - 1)];
            if (!(d0.source() == a) || !(d0.target() == sys_->level(i)))
                throw Error(ErrorCode::algebra_mismatch, "D0^" + std::to_string(i) + " must map " + a.display_name() +
                                                             " -> " + sys_->level(i).display_name());
            const auto& row = images_[static_cast<std::size_t>(i - 1)];
            if (row.size() != a.variable_count())
                throw Error(ErrorCode::invalid_argument, "level " + std::to_string(i) + " needs one image per variable");
            for (const auto& e : row)
                if (!(e.owner() == sys_->level(i)))
                    throw Error(ErrorCode::algebra_mismatch,
                                "D" + std::to_string(i) + " images must live in " + sys_->level(i).display_name());
        }
    }

    int order() const noexcept { return sys_->order(); }
    const SystemRef& system() const noexcept { return sys_; }
    const Algebra& source() const noexcept { return sys_->base(); }
    const std::string& name() const noexcept { return name_; }

    const Morphism& level0(int i) const
    {
        if (i < 1 || i > order())
            throw Error(ErrorCode::level_out_of_range, "no D0^" + std::to_string(i));
        return level0_[static_cast<std::size_t>(i - 1)];
    }
    const std::vector<Morphism>& level0_maps() const noexcept { return level0_; }

    const Element& image(int i, std::size_t var) const
    {
        if (i < 1 || i > order())
            throw Error(ErrorCode::level_out_of_range, "no level " + std::to_string(i));
        return images_[static_cast<std::size_t>(i - 1)].at(var);
    }
    const std::vector<std::vector<Element>>& images() const noexcept { return images_; }

    DerivationSpec renamed(std::string name) const
    {
        DerivationSpec d = *this;
        d.name_ = std::move(name);
        return d;
    }

    // Level-0 morphisms and generator images; the system is not compared.
    friend bool operator==(const DerivationSpec& a, const DerivationSpec& b) noexcept
    {
        return a.level0_ == b.level0_ && a.images_ == b.images_;
    }

private:
    SystemRef sys_;
    std::vector<Morphism> level0_;
    std::vector<std::vector<Element>> images_;
    std::string name_;
};

/// (D_0, D_1, ..., D_n) from A to a single algebra B.
class ClassicalSpec {
public:
    ClassicalSpec(Morphism d0, std::vector<std::vector<Element>> images, std::string name = {})
        : d0_(std::move(d0)), images_(std::move(images)), name_(std::move(name))
    {
        if (images_.empty())
            throw Error(ErrorCode::invalid_argument, "a Hasse-Schmidt derivation needs order n >= 1");
        for (const auto& row : images_) {
            if (row.size() != d0_.source().variable_count())
                throw Error(ErrorCode::invalid_argument, "each level needs one image per variable");
            for (const auto& e : row)
                if (!(e.owner() == d0_.target()))
                    throw Error(ErrorCode::algebra_mismatch, "images must live in " + d0_.target().display_name());
        }
    }

    int order() const noexcept { return static_cast<int>(images_.size()); }
    const Algebra& source() const noexcept { return d0_.source(); }
    const Algebra& target() const noexcept { return d0_.target(); }
    const Morphism& d0() const noexcept { return d0_; }
    const std::string& name() const noexcept { return name_; }
    const std::vector<std::vector<Element>>& images() const noexcept { return images_; }

    const Element& image(int i, std::size_t var) const
    {
        if (i < 1 || i > order())
            throw Error(ErrorCode::level_out_of_range, "no level " + std::to_string(i));
        return images_[static_cast<std::size_t>(i - 1)].at(var);
    }

    friend bool operator==(const ClassicalSpec& a, const ClassicalSpec& b) noexcept
    {
        return a.d0_ == b.d0_ && a.images_ == b.images_;
    }

private:
    Morphism d0_;
    std::vector<std::vector<Element>> images_;
    std::string name_;
};

/// The classical spec as a multi spec over the multiplication system on B.
inline DerivationSpec as_multi(const ClassicalSpec& e)
{
    auto sys = unvalidated(make_multiplication_system(e.d0(), e.order()));
    return DerivationSpec(sys, std::vector<Morphism>(static_cast<std::size_t>(e.order()), e.d0()), e.images(), e.name());
}

// ---------------------------------------------------------------------------
// Leibniz-rule evaluation

/// Evaluates D_i on free-cover monomials by splitting m = u * v and applying
///   D_i(uv) = D_0^i(u) D_i(v) + D_0^i(v) D_i(u) + sum_{j+k=i, 0<j,k<i} phi_{j,k}(D_j u, D_k v).
/// The canonical split peels the first declared variable that occurs. With a
/// sampler attached, every split is a random proper divisor instead. Results
/// are memoized per evaluator, so an evaluator must not be shared between
/// threads.
class LeibnizEvaluator {
public:
    explicit LeibnizEvaluator(const DerivationSpec& spec, Sampler* random = nullptr)
        : spec_(spec), rng_(random), memo_(static_cast<std::size_t>(spec.order()) + 1),
          level0_memo_(static_cast<std::size_t>(spec.order()) + 1)
    {
    }

    Element monomial(int level, const Monomial& m)
    {
        const auto& sys = *spec_.system();
        if (level == 0)
            return normal_form(Poly::term(m, 1), sys.base());
        if (m.is_one())
            return sys.level(level).zero();
        auto& memo = memo_[static_cast<std::size_t>(level)];
        if (auto it = memo.find(m); it != memo.end())
            return it->second;
        Element result;
        if (m.degree() == 1) {
            std::size_t var = 0;
            while (m[var] == 0)
                ++var;
            result = spec_.image(level, var);
        } else {
            auto [u, v] = split(m);
            result = leibniz(level, u, v);
        }
        memo.emplace(m, result);
        return result;
    }

    Element eval(int level, const Poly& f)
    {
        const auto& sys = *spec_.system();
        if (level < 0 || level > sys.order())
            throw Error(ErrorCode::level_out_of_range, "level " + std::to_string(level) + " outside 0.." +
                                                           std::to_string(sys.order()));
        if (level == 0)
            return normal_form(f, sys.base());
        Element acc = sys.level(level).zero();
        for (const auto& [m, c] : f.terms())
            acc += c * monomial(level, m);
        return acc;
    }

    Element level0(int level, const Monomial& m)
    {
        auto& memo = level0_memo_[static_cast<std::size_t>(level)];
        if (auto it = memo.find(m); it != memo.end())
            return it->second;
        Element r = spec_.level0(level).apply(Poly::term(m, 1));
        memo.emplace(m, r);
        return r;
    }

private:
    Element leibniz(int i, const Monomial& u, const Monomial& v)
    {
        const auto& sys = *spec_.system();
        Element acc = level0(i, u) * monomial(i, v) + level0(i, v) * monomial(i, u);
        for (int j = 1; j < i; ++j)
            acc += sys.phi(j, i - j)(monomial(j, u), monomial(i - j, v));
        return acc;
    }

    std::pair<Monomial, Monomial> split(const Monomial& m)
    {
        if (!rng_) {
            std::size_t var = 0;
            while (m[var] == 0)
                ++var;
            Monomial u = Monomial::variable(var);
            return {u, m / u};
        }
        const auto ex = m.exponents();
        for (;;) {
            std::vector<std::uint32_t> e(ex.size());
            for (std::size_t k = 0; k < ex.size(); ++k)
                e[k] = static_cast<std::uint32_t>(rng_->uniform(0, ex[k]));
            Monomial u(std::move(e));
            if (!u.is_one() && u != m)
                return {u, m / u};
        }
    }

    const DerivationSpec& spec_;
    Sampler* rng_;
    std::vector<std::map<Monomial, Element>> memo_;
    std::vector<std::map<Monomial, Element>> level0_memo_;
};

/// D_i(f) for f in A (i = 0 is the identity on A).
inline Element hs_eval(const DerivationSpec& spec, int level, const Element& f)
{
    if (!(f.owner() == spec.source()))
        throw Error(ErrorCode::algebra_mismatch, "hs_eval argument must live in " + spec.source().display_name());
    LeibnizEvaluator ev(spec);
    return ev.eval(level, f.poly());
}

/// D_i on a free-cover polynomial.
inline Element hs_eval(const DerivationSpec& spec, int level, const Poly& f)
{
    if (f.width() > spec.source().variable_count())
        throw Error(ErrorCode::unknown_variable, "polynomial uses variables outside " + spec.source().display_name());
    LeibnizEvaluator ev(spec);
    return ev.eval(level, f);
}

/// Sampled verification of the multi Hasse-Schmidt axioms:
/// level-0 maps are homomorphisms, generator-image extension does not depend
/// on the split order, a quotient's ideal is killed at every level, and the
/// Leibniz identity holds on sampled pairs.
inline ValidationReport hs_verify(const DerivationSpec& spec, int trials, std::uint64_t seed, std::uint32_t max_degree = 3)
{
    ValidationReport report;
    const auto& sys = *spec.system();
    const Algebra& a = spec.source();
    const int n = spec.order();
    const auto& names = a.variables();

    {
        std::string witness;
        for (int i = 1; i <= n && witness.empty(); ++i) {
            auto r = morphism_validate(spec.level0(i));
            if (const auto* f = r.first_failure())
                witness = "D0^" + std::to_string(i) + ": " + f->detail;
        }
        if (witness.empty())
            report.pass("level0-homomorphisms", static_cast<std::size_t>(n));
        else
            report.fail("level0-homomorphisms", static_cast<std::size_t>(n), witness);
    }

    Sampler rng(seed);
    LeibnizEvaluator canonical(spec);

    {
        constexpr int orders = 5;
        std::vector<Sampler> order_rngs;
        for (int k = 0; k < orders; ++k)
            order_rngs.emplace_back(rng.next());
        std::vector<LeibnizEvaluator> alternatives;
        for (auto& r : order_rngs)
            alternatives.emplace_back(spec, &r);
        std::string witness;
        int t = 0;
        for (; t < trials && witness.empty(); ++t) {
            Monomial m = rng.monomial(a, 2, max_degree + 1);
            for (int i = 1; i <= n && witness.empty(); ++i) {
                Element c = canonical.monomial(i, m);
                for (auto& alt : alternatives) {
                    Element d = alt.monomial(i, m);
                    if (c != d) {
                        witness = "D" + std::to_string(i) + "(" + Poly::term(m, 1).to_string(names) +
                                  "): canonical split gives " + c.to_string() + ", another split gives " + d.to_string();
                        break;
                    }
                }
            }
        }
        if (witness.empty())
            report.pass("split-order-independent", static_cast<std::size_t>(t));
        else
            report.fail("split-order-independent", static_cast<std::size_t>(t), witness);
    }

    if (a.kind() == Algebra::Kind::quotient) {
        std::string witness;
        for (const auto& g : a.ideal())
            for (int i = 1; i <= n && witness.empty(); ++i) {
                Element v = canonical.monomial(i, g);
                if (!v.is_zero())
                    witness = "D" + std::to_string(i) + "(" + Poly::term(g, 1).to_string(names) + ") = " + v.to_string() +
                              " != 0";
            }
        if (witness.empty())
            report.pass("well-defined-on-quotient", a.ideal().size());
        else
            report.fail("well-defined-on-quotient", a.ideal().size(), witness);
    }

    {
        std::string witness;
        int t = 0;
        for (; t < trials && witness.empty(); ++t) {
            Element f = rng.element(a, max_degree);
            Element g = rng.element(a, max_degree);
            std::vector<Element> df{f}, dg{g};
            for (int i = 1; i <= n; ++i) {
                df.push_back(canonical.eval(i, f.poly()));
                dg.push_back(canonical.eval(i, g.poly()));
            }
            for (int i = 1; i <= n && witness.empty(); ++i) {
                Element lhs = canonical.eval(i, (f * g).poly());
                Element rhs = spec.level0(i)(f) * dg[static_cast<std::size_t>(i)] +
                              spec.level0(i)(g) * df[static_cast<std::size_t>(i)];
                for (int j = 1; j < i; ++j)
                    rhs += sys.phi(j, i - j)(df[static_cast<std::size_t>(j)], dg[static_cast<std::size_t>(i - j)]);
                if (lhs != rhs)
                    witness = "x=" + f.to_string() + ", y=" + g.to_string() + ": D" + std::to_string(i) +
                              "(xy)=" + lhs.to_string() + " but the Leibniz sum is " + rhs.to_string();
            }
        }
        if (witness.empty())
            report.pass("leibniz", static_cast<std::size_t>(t));
        else
            report.fail("leibniz", static_cast<std::size_t>(t), witness);
    }
    return report;
}

inline ValidationReport classical_verify(const ClassicalSpec& e, int trials, std::uint64_t seed, std::uint32_t max_degree = 3)
{
    return hs_verify(as_multi(e), trials, seed, max_degree);
}

inline Element classical_eval(const ClassicalSpec& e, int level, const Element& f) { return hs_eval(as_multi(e), level, f); }

// ---------------------------------------------------------------------------
// Correspondence with homomorphisms into the n-trivial extension

namespace detail {
inline std::string first_difference(const Morphism& f, const Morphism& g)
{
    const auto& names = f.source().variables();
    for (std::size_t v = 0; v < f.images().size() && v < g.images().size(); ++v)
        if (f.images()[v] != g.images()[v])
            return names[v] + " -> " + f.images()[v].to_string() + " vs " + g.images()[v].to_string();
    return "maps differ in source or target";
}
} // namespace detail

/// a -> (a, D_1(a), ..., D_n(a)) as a map A -> A x_n B_1 x ... x B_n.
class HomEvaluator {
public:
    explicit HomEvaluator(DerivationSpec spec) : spec_(std::move(spec)) {}

    ExtElement operator()(const Element& a) const
    {
        if (!(a.owner() == spec_.source()))
            throw Error(ErrorCode::algebra_mismatch, "argument must live in " + spec_.source().display_name());
        LeibnizEvaluator ev(spec_);
        std::vector<Element> c{a};
        for (int i = 1; i <= spec_.order(); ++i)
            c.push_back(ev.eval(i, a.poly()));
        return ExtElement(spec_.system(), std::move(c));
    }

    std::vector<ExtElement> generator_images() const
    {
        std::vector<ExtElement> out;
        for (std::size_t v = 0; v < spec_.source().variable_count(); ++v)
            out.push_back((*this)(spec_.source().variable(v)));
        return out;
    }

    const DerivationSpec& spec() const noexcept { return spec_; }

private:
    DerivationSpec spec_;
};

/// Requires a validated system and D_0^i = g_i for every level (pi o phi = Id).
/// Verifies the spec and spot-checks multiplicativity before returning.
inline HomEvaluator to_hom(const DerivationSpec& spec, int trials = 200, std::uint64_t seed = 0)
{
    const auto& sys = *spec.system();
    if (!sys.validated())
        throw Error(ErrorCode::unvalidated_system, "to_hom needs a validated structure system");
    for (int i = 1; i <= spec.order(); ++i)
        if (spec.level0(i) != sys.structural(i))
            throw Error(ErrorCode::dagger_violation, "D0^" + std::to_string(i) + " differs from g" + std::to_string(i),
                        detail::first_difference(spec.level0(i), sys.structural(i)));
    auto report = hs_verify(spec, trials, seed);
    if (const auto* f = report.first_failure())
        throw Error(ErrorCode::not_a_derivation, "spec fails " + f->name, f->detail);
    HomEvaluator hom(spec);
    Sampler rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int t = 0; t < std::min(trials, 20); ++t) {
        Element x = rng.element(spec.source(), 2), y = rng.element(spec.source(), 2);
        if (hom(x * y) != ext_mul(hom(x), hom(y)))
            throw Error(ErrorCode::not_a_derivation, "Phi(xy) != Phi(x)Phi(y)", "x=" + x.to_string() + ", y=" + y.to_string());
    }
    return hom;
}

/// Reads D_i(x) off coordinate i of the given generator images.
inline DerivationSpec from_hom(const SystemRef& sys, const std::vector<ExtElement>& images)
{
    const Algebra& a = sys->base();
    if (images.size() != a.variable_count())
        throw Error(ErrorCode::invalid_argument, "need one image per variable of " + a.display_name());
    std::vector<std::vector<Element>> levels(static_cast<std::size_t>(sys->order()));
    for (std::size_t v = 0; v < images.size(); ++v) {
        const auto& u = images[v];
        if (u.system() != sys)
            throw Error(ErrorCode::system_mismatch, "image of " + a.variables()[v] + " belongs to another system");
        if (u[0] != a.variable(v))
            throw Error(ErrorCode::dagger_violation, "coordinate 0 of the image of " + a.variables()[v] + " must be itself",
                        a.variables()[v] + " -> " + u.to_string());
        for (int i = 1; i <= sys->order(); ++i)
            levels[static_cast<std::size_t>(i - 1)].push_back(u[i]);
    }
    return DerivationSpec(sys, sys->structural_maps(), std::move(levels));
}

// ---------------------------------------------------------------------------
// Connecting chains and the maps alpha_1, beta_j, phi_{1j}^*

/// Homomorphisms phi_{ij} : B_i -> B_j for i < j with phi_{ik} = phi_{jk} o phi_{ij};
/// phi_{jj} is the identity.
class ConnectingChain {
public:
    ConnectingChain(std::vector<Algebra> levels, std::map<std::pair<int, int>, Morphism> maps)
        : levels_(std::move(levels)), maps_(std::move(maps))
    {
        const int n = length();
        if (n < 1)
            throw Error(ErrorCode::invalid_argument, "a chain needs at least one algebra");
        for (const auto& [key, f] : maps_) {
            const auto [i, j] = key;
            if (i < 1 || j > n || i >= j)
                throw Error(ErrorCode::level_out_of_range, "chain map phi" + std::to_string(i) + std::to_string(j));
            if (!(f.source() == level(i)) || !(f.target() == level(j)))
                throw Error(ErrorCode::algebra_mismatch, "chain map phi" + std::to_string(i) + std::to_string(j) +
                                                             " has the wrong source or target");
            auto r = morphism_validate(f);
            if (const auto* bad = r.first_failure())
                throw Error(ErrorCode::invalid_argument, "chain map is not well defined", bad->detail);
        }
        for (int d = 2; d < n; ++d)
            for (int i = 1; i + d <= n; ++i)
                if (!maps_.count({i, i + d}) && maps_.count({i, i + d - 1}) && maps_.count({i + d - 1, i + d}))
                    maps_.emplace(std::make_pair(i, i + d), morphism_compose(maps_.at({i + d - 1, i + d}), maps_.at({i, i + d - 1})));
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j)
                if (!maps_.count({i, j}))
                    throw Error(ErrorCode::invalid_argument, "chain is missing phi" + std::to_string(i) + std::to_string(j));
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j)
                for (int k = j + 1; k <= n; ++k) {
                    Morphism via = morphism_compose(map(j, k), map(i, j));
                    if (via != map(i, k))
                        throw Error(ErrorCode::chain_incompatible,
                                    "phi" + std::to_string(i) + std::to_string(k) + " != phi" + std::to_string(j) +
                                        std::to_string(k) + " o phi" + std::to_string(i) + std::to_string(j),
                                    detail::first_difference(map(i, k), via));
                }
    }

    /// Chain from consecutive maps B_1 -> B_2 -> ... -> B_n.
    static ConnectingChain from_steps(const Algebra& first, const std::vector<Morphism>& steps)
    {
        std::vector<Algebra> levels{first};
        std::map<std::pair<int, int>, Morphism> maps;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            if (!(steps[k].source() == levels.back()))
                throw Error(ErrorCode::chain_incompatible, "step " + std::to_string(k + 1) + " does not start at B" +
                                                               std::to_string(k + 1));
            levels.push_back(steps[k].target());
            const int i = static_cast<int>(k) + 1;
            maps.emplace(std::make_pair(i, i + 1), steps[k]);
        }
        return ConnectingChain(std::move(levels), std::move(maps));
    }

    int length() const noexcept { return static_cast<int>(levels_.size()); }

    const Algebra& level(int i) const
    {
        if (i < 1 || i > length())
            throw Error(ErrorCode::level_out_of_range, "chain has no B" + std::to_string(i));
        return levels_[static_cast<std::size_t>(i - 1)];
    }

    Morphism map(int i, int j) const
    {
        if (i == j)
            return Morphism::identity(level(i));
        auto it = maps_.find({i, j});
        if (it == maps_.end())
            throw Error(ErrorCode::level_out_of_range, "chain has no phi" + std::to_string(i) + std::to_string(j));
        return it->second;
    }

private:
    std::vector<Algebra> levels_;
    std::map<std::pair<int, int>, Morphism> maps_;
};

/// Levels from the chain, g_j = phi_{1j} o g1, and
/// phi_{i,j}(b, b') = phi_{i,i+j}(b) * phi_{j,i+j}(b').
inline StructureSystem connecting_system(const Algebra& base, const ConnectingChain& chain, const Morphism& g1)
{
    const int n = chain.length();
    std::vector<Algebra> levels;
    std::vector<Morphism> structural;
    for (int j = 1; j <= n; ++j) {
        levels.push_back(chain.level(j));
        structural.push_back(morphism_compose(chain.map(1, j), g1));
    }
    std::vector<BilinearMap> maps;
    for (int i = 1; i < n; ++i)
        for (int j = 1; i + j <= n; ++j)
            maps.push_back(BilinearMap{i, j, {MulForm{chain.level(i + j).one(), chain.map(i, i + j), chain.map(j, i + j)}}});
    return StructureSystem(base, std::move(levels), std::move(structural), std::move(maps));
}

/// (D_0, ..., D_n) -> ((phi_{1j} o D_0)_j, phi_{11} o D_1, ..., phi_{1n} o D_n).
inline DerivationSpec alpha1(const ClassicalSpec& e, const ConnectingChain& chain)
{
    if (chain.length() != e.order())
        throw Error(ErrorCode::level_out_of_range, "chain length " + std::to_string(chain.length()) +
                                                       " does not match order " + std::to_string(e.order()));
    if (!(chain.level(1) == e.target()))
        throw Error(ErrorCode::algebra_mismatch, "chain must start at the target " + e.target().display_name());
    auto sys = unvalidated(connecting_system(e.source(), chain, e.d0()));
    std::vector<Morphism> level0;
    std::vector<std::vector<Element>> images;
    for (int j = 1; j <= e.order(); ++j) {
        const Morphism f = chain.map(1, j);
        level0.push_back(morphism_compose(f, e.d0()));
        std::vector<Element> row;
        for (std::size_t v = 0; v < e.source().variable_count(); ++v)
            row.push_back(f(e.image(j, v)));
        images.push_back(std::move(row));
    }
    return DerivationSpec(sys, std::move(level0), std::move(images));
}

/// (E_0, E_1, ..., E_n) -> (E_0^j, phi_{1j} o E_1, ..., phi_{jj} o E_j) for a
/// spec in the starred class D_0^k = phi_{1k} o D_0^1.
inline ClassicalSpec beta_j(const DerivationSpec& spec, const ConnectingChain& chain, int j)
{
    const int n = spec.order();
    if (j < 1 || j > n)
        throw Error(ErrorCode::level_out_of_range, "beta_" + std::to_string(j) + " needs 1 <= j <= " + std::to_string(n));
    if (chain.length() != n)
        throw Error(ErrorCode::level_out_of_range, "chain length does not match the spec order");
    for (int k = 1; k <= n; ++k)
        if (!(chain.level(k) == spec.system()->level(k)))
            throw Error(ErrorCode::algebra_mismatch, "chain algebra B" + std::to_string(k) + " differs from the spec's");
    for (int k = 2; k <= n; ++k) {
        Morphism expected = morphism_compose(chain.map(1, k), spec.level0(1));
        if (spec.level0(k) != expected)
            throw Error(ErrorCode::not_starred, "D0^" + std::to_string(k) + " != phi1" + std::to_string(k) + " o D0^1",
                        detail::first_difference(spec.level0(k), expected));
    }
    std::vector<std::vector<Element>> images;
    for (int k = 1; k <= j; ++k) {
        const Morphism f = chain.map(k, j);
        std::vector<Element> row;
        for (std::size_t v = 0; v < spec.source().variable_count(); ++v)
            row.push_back(f(spec.image(k, v)));
        images.push_back(std::move(row));
    }
    return ClassicalSpec(spec.level0(j), std::move(images));
}

/// (D_0, ..., D_n) -> (phi o D_0, ..., phi o D_j).
inline ClassicalSpec phi_push(const ClassicalSpec& e, const Morphism& phi, int j)
{
    if (j < 1 || j > e.order())
        throw Error(ErrorCode::level_out_of_range, "push order " + std::to_string(j) + " outside 1.." + std::to_string(e.order()));
    if (!(phi.source() == e.target()))
        throw Error(ErrorCode::algebra_mismatch, "pushforward map must start at " + e.target().display_name());
    auto r = morphism_validate(phi);
    if (const auto* bad = r.first_failure())
        throw Error(ErrorCode::invalid_argument, "pushforward map is not well defined", bad->detail);
    std::vector<std::vector<Element>> images;
    for (int k = 1; k <= j; ++k) {
        std::vector<Element> row;
        for (std::size_t v = 0; v < e.source().variable_count(); ++v)
            row.push_back(phi(e.image(k, v)));
        images.push_back(std::move(row));
    }
    return ClassicalSpec(morphism_compose(phi, e.d0()), std::move(images));
}

/// (D_0, D_1, ..., D_n) -> (psi o D_0, psi_1 o D_1, ..., psi_n o D_n) into the
/// target system. Each square psi_{j+k} o phi_{j,k} = phi'_{j,k} o (psi_j x psi_k)
/// is checked on sampled pairs; a failure throws SquareViolation with the pair.
inline DerivationSpec psi_push(const DerivationSpec& spec, const std::vector<Morphism>& psis, const SystemRef& target,
                               int trials = 200, std::uint64_t seed = 0, std::uint32_t max_degree = 3)
{
    const int n = spec.order();
    const auto& src = *spec.system();
    if (static_cast<int>(psis.size()) != n || target->order() != n)
        throw Error(ErrorCode::level_out_of_range, "need one psi per level and a target system of order " + std::to_string(n));
    if (!(target->base() == spec.source()))
        throw Error(ErrorCode::algebra_mismatch, "target system has a different base algebra");
    for (int i = 1; i <= n; ++i) {
        const auto& psi = psis[static_cast<std::size_t>(i - 1)];
        if (!(psi.source() == src.level(i)) || !(psi.target() == target->level(i)))
            throw Error(ErrorCode::algebra_mismatch, "psi" + std::to_string(i) + " must map " + src.level(i).display_name() +
                                                         " -> " + target->level(i).display_name());
        auto r = morphism_validate(psi);
        if (const auto* bad = r.first_failure())
            throw Error(ErrorCode::invalid_argument, "psi" + std::to_string(i) + " is not well defined", bad->detail);
    }
    Sampler rng(seed);
    for (const auto& [key, phi] : src.bilinear()) {
        const auto [j, k] = key;
        const auto& psi_j = psis[static_cast<std::size_t>(j - 1)];
        const auto& psi_k = psis[static_cast<std::size_t>(k - 1)];
        const auto& psi_jk = psis[static_cast<std::size_t>(j + k - 1)];
        for (int t = 0; t < trials; ++t) {
            Element b = rng.element(src.level(j), max_degree), c = rng.element(src.level(k), max_degree);
            Element lhs = psi_jk(phi(b, c));
            Element rhs = target->phi(j, k)(psi_j(b), psi_k(c));
            if (lhs != rhs)
                throw Error(ErrorCode::square_violation,
                            "square (" + std::to_string(j) + "," + std::to_string(k) + ") does not commute",
                            "b=" + b.to_string() + ", b'=" + c.to_string() + ": psi(phi(b,b'))=" + lhs.to_string() +
                                " but phi'(psi b, psi b')=" + rhs.to_string());
        }
    }
    std::vector<Morphism> level0;
    std::vector<std::vector<Element>> images;
    for (int i = 1; i <= n; ++i) {
        const auto& psi = psis[static_cast<std::size_t>(i - 1)];
        level0.push_back(morphism_compose(psi, spec.level0(i)));
        std::vector<Element> row;
        for (const auto& e : spec.images()[static_cast<std::size_t>(i - 1)])
            row.push_back(psi(e));
        images.push_back(std::move(row));
    }
    return DerivationSpec(target, std::move(level0), std::move(images));
}

// ---------------------------------------------------------------------------
// Non-surjectivity certificates

/// Target variables used by `e` that are not images of source variables,
/// for a morphism whose images are distinct target variables (an inclusion
/// of a polynomial subalgebra). Empty means e lies in the image.
inline std::vector<std::string> outside_inclusion_image(const Morphism& f, const Element& e)
{
    const Algebra& t = f.target();
    if (t.is_product() || !(e.owner() == t))
        throw Error(ErrorCode::algebra_mismatch, "element must live in the polynomial target of the inclusion");
    std::set<std::size_t> hit;
    for (const auto& im : f.images()) {
        const auto& terms = im.poly().terms();
        if (terms.size() != 1 || terms.begin()->second != 1 || terms.begin()->first.degree() != 1)
            throw Error(ErrorCode::invalid_argument, "support test needs every image to be a target variable");
        std::size_t var = 0;
        while (terms.begin()->first[var] == 0)
            ++var;
        if (!hit.insert(var).second)
            throw Error(ErrorCode::invalid_argument, "support test needs distinct variable images");
    }
    std::set<std::size_t> outside;
    for (const auto& [m, c] : e.poly().terms())
        for (std::size_t v = 0; v < m.width(); ++v)
            if (m[v] > 0 && !hit.count(v))
                outside.insert(v);
    std::vector<std::string> names;
    for (auto v : outside)
        names.push_back(t.variables()[v]);
    return names;
}

namespace detail {
inline std::string join(const std::vector<std::string>& v, const char* sep = ", ")
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? sep : "") + v[i];
    return s;
}

inline std::string image_description(const Morphism& f)
{
    std::vector<std::string> vars;
    for (const auto& im : f.images())
        vars.push_back(im.to_string());
    return "Q[" + join(vars, ",") + "]";
}
} // namespace detail

/// A = B_1 = Q[x], B_2 = Q[x,y] with the inclusion, D = (Id, inclusion), D_1 = d/dx,
/// D_2 = y d/dx + 1/2 d^2/dx^2. The spec verifies, yet D_2(x) = y would have
/// to lie in the image of the inclusion for any preimage under alpha_1.
inline ValidationReport witness_alpha1_not_surjective(int trials = 200, std::uint64_t seed = 0)
{
    const Algebra a = Algebra::free({"x"}, "A");
    const Algebra b2 = Algebra::free({"x", "y"}, "B2");
    const Morphism incl(a, b2, {b2.variable("x")}, "phi12");
    auto chain = ConnectingChain::from_steps(a, {incl});
    auto sys = unvalidated(connecting_system(a, chain, Morphism::identity(a)));
    DerivationSpec d(sys, {Morphism::identity(a), incl}, {{a.one()}, {b2.variable("y")}}, "D");

    ValidationReport report;
    auto verified = hs_verify(d, trials, seed);
    if (verified.ok())
        report.pass("target-is-multi-hs", static_cast<std::size_t>(trials));
    else
        report.fail("target-is-multi-hs", static_cast<std::size_t>(trials), verified.first_failure()->detail);

    const Element& d2x = d.image(2, 0);
    auto outside = outside_inclusion_image(incl, d2x);
    if (!outside.empty())
        report.pass("obstruction", 1,
                    "D2(x) = " + d2x.to_string() + " uses " + detail::join(outside) + "; " + detail::join(outside) +
                        " not in " + detail::image_description(incl) + " = image(phi12)");
    else
        report.fail("obstruction", 1, "D2(x) = " + d2x.to_string() + " lies in image(phi12)");
    return report;
}

/// A = B_1 = Q[x], B_2 = Q[x,y], target (phi12, y d/dx, 1/2 y^2 d^2/dx^2) in
/// HSDer^2(A, B_2). A beta_2 preimage would need y d/dx = phi12 o D_1, so
/// D_1(x) = y in the image of the inclusion.
inline ValidationReport witness_beta_not_surjective(int trials = 200, std::uint64_t seed = 0)
{
    const Algebra a = Algebra::free({"x"}, "A");
    const Algebra b2 = Algebra::free({"x", "y"}, "B2");
    const Morphism incl(a, b2, {b2.variable("x")}, "phi12");
    const Element y = b2.variable("y");
    // y d/dx sends x to y; 1/2 y^2 d^2/dx^2 sends x to 0.
    ClassicalSpec target(incl, {{y}, {b2.zero()}}, "T");

    ValidationReport report;
    auto verified = classical_verify(target, trials, seed);
    if (verified.ok())
        report.pass("target-is-hs", static_cast<std::size_t>(trials));
    else
        report.fail("target-is-hs", static_cast<std::size_t>(trials), verified.first_failure()->detail);

    // Both y d/dx and 1/2 y^2 d^2/dx^2 are checked against their closed forms
    // on x^2: 2xy and y^2.
    const Element x2 = pow(a.variable("x"), 2);
    const Element bx = b2.variable("x");
    if (classical_eval(target, 1, x2) == Rational(2) * bx * y && classical_eval(target, 2, x2) == y * y)
        report.pass("target-matches-operators", 1);
    else
        report.fail("target-matches-operators", 1, "generator table does not reproduce y d/dx and 1/2 y^2 d^2/dx^2 on x^2");

    const Element& t1x = target.image(1, 0);
    auto outside = outside_inclusion_image(incl, t1x);
    if (!outside.empty())
        report.pass("obstruction", 1,
                    "y d/dx image requires (phi12 o D1)(x) = " + t1x.to_string() + ", i.e. " + detail::join(outside) +
                        " in " + detail::image_description(incl) + " = image(phi12)");
    else
        report.fail("obstruction", 1, "phi12 o D1 can reach " + t1x.to_string());
    return report;
}

} // namespace mhs
