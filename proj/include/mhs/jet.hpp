#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mhs/hs_deriv.hpp"

namespace mhs {

class LambdaSystem;
using LambdaRef = std::shared_ptr<const LambdaSystem>;

/// The scalar specialization B_i = A, phi_{i,j}(a, a') = lambda_{i,j} a a'.
/// lambda is symmetric by storage (one entry per unordered pair), and the
/// zero-index entries are 1.
class LambdaSystem {
public:
    using Table = std::map<std::pair<int, int>, Element>;

    static LambdaRef make(const Algebra& base, int n, const Table& table, std::string name = {})
    {
        if (base.is_product())
            throw Error(ErrorCode::invalid_argument, "lambda systems need a polynomial base algebra");
        if (n < 1)
            throw Error(ErrorCode::invalid_argument, "order must be >= 1");
        auto sys = std::shared_ptr<LambdaSystem>(new LambdaSystem);
        sys->base_ = base;
        sys->n_ = n;
        sys->name_ = std::move(name);
        for (const auto& [key, value] : table) {
            auto [i, j] = key;
            if (i > j)
                std::swap(i, j);
            if (i < 1 || i + j > n)
                throw Error(ErrorCode::level_out_of_range, "lambda(" + std::to_string(i) + "," + std::to_string(j) +
                                                               ") outside 1 <= i,j and i+j <= " + std::to_string(n));
            if (!(value.owner() == base))
                throw Error(ErrorCode::algebra_mismatch, "lambda values must live in " + base.display_name());
            auto [it, inserted] = sys->table_.emplace(std::make_pair(i, j), value);
            if (!inserted && it->second != value)
                throw Error(ErrorCode::invalid_argument, "conflicting entries for lambda(" + std::to_string(i) + "," +
                                                             std::to_string(j) + ")");
        }
        for (int i = 1; i < n; ++i)
            for (int j = i; i + j <= n; ++j)
                if (!sys->table_.count({i, j}))
                    throw Error(ErrorCode::invalid_argument,
                                "missing lambda(" + std::to_string(i) + "," + std::to_string(j) + ")");
        const LambdaSystem& self = *sys;
        StructureSystem structure =
            make_lambda_structure(base, n, [&self](int i, int j) { return self.lambda(i, j); }, sys->name_);
        // Bilinearity and symmetry hold by construction; associativity is the
        // exact cocycle identity checked by cocycle_failure().
        sys->structure_ = sys->cocycle_failure().empty() ? detail::SystemAccess::with_validation(std::move(structure))
                                                          : unvalidated(std::move(structure));
        return sys;
    }

    static LambdaRef constant(const Algebra& base, int n, const Element& value, std::string name = {})
    {
        Table t;
        for (int i = 1; i < n; ++i)
            for (int j = i; i + j <= n; ++j)
                t.emplace(std::make_pair(i, j), value);
        return make(base, n, t, std::move(name));
    }

    int order() const noexcept { return n_; }
    const Algebra& base() const noexcept { return base_; }
    const std::string& name() const noexcept { return name_; }
    const Table& table() const noexcept { return table_; }

    /// The lambda-scalar structure system; validated iff the table is
    /// associative.
    const SystemRef& structure() const noexcept { return structure_; }

    Element lambda(int i, int j) const
    {
        if (i == 0 || j == 0)
            return base_.one();
        if (i > j)
            std::swap(i, j);
        auto it = table_.find({i, j});
        if (it == table_.end())
            throw Error(ErrorCode::level_out_of_range, "no lambda(" + std::to_string(i) + "," + std::to_string(j) + ")");
        return it->second;
    }

    bool all_one() const
    {
        for (const auto& [k, v] : table_)
            if (v != base_.one())
                return false;
        return true;
    }

    /// Empty when lambda_{i,j} lambda_{i+j,k} = lambda_{j,k} lambda_{i,j+k} for
    /// all i,j,k >= 0 with i+j+k <= n; otherwise the first failing triple.
    std::string cocycle_failure() const
    {
        for (int i = 0; i <= n_; ++i)
            for (int j = 0; i + j <= n_; ++j)
                for (int k = 0; i + j + k <= n_; ++k) {
                    Element lhs = lambda(i, j) * lambda(i + j, k);
                    Element rhs = lambda(j, k) * lambda(i, j + k);
                    if (lhs != rhs)
                        return "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
                               "): lambda" + std::to_string(i) + std::to_string(j) + "*lambda" + std::to_string(i + j) +
                               std::to_string(k) + "=" + lhs.to_string() + " but lambda" + std::to_string(j) +
                               std::to_string(k) + "*lambda" + std::to_string(i) + std::to_string(j + k) + "=" +
                               rhs.to_string();
                }
        return {};
    }

private:
    LambdaSystem() = default;

    Algebra base_;
    int n_ = 0;
    std::string name_;
    Table table_;
    SystemRef structure_;
};

// ---------------------------------------------------------------------------
// Generators of J_n

struct Relation {
    enum class Kind {
        scaled,    // t_i t_j - lambda_{i,j} t_{i+j}, i+j <= n
        vanishing, // t_i t_j, i+j > n
    };
    Kind kind;
    int i;
    int j;

    friend bool operator==(const Relation&, const Relation&) = default;
};

/// One relation per unordered pair i <= j, listed by j then i.
inline std::vector<Relation> jn_relations(const LambdaSystem& sys)
{
    const int n = sys.order();
    std::vector<Relation> out;
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= j; ++i)
            out.push_back({i + j <= n ? Relation::Kind::scaled : Relation::Kind::vanishing, i, j});
    return out;
}

namespace detail {
inline std::string t_product(int i, int j, const char* sep)
{
    if (i == j)
        return "t" + std::string(sep) + std::to_string(i) + "^2";
    return "t" + std::string(sep) + std::to_string(i) + "t" + sep + std::to_string(j);
}
} // namespace detail

/// TeX rendering with symbolic lambdas, e.g. "t_1^2-\lambda_{1,1}t_2".
inline std::string to_latex(const Relation& r)
{
    std::string s = detail::t_product(r.i, r.j, "_");
    if (r.kind == Relation::Kind::scaled)
        s += "-\\lambda_{" + std::to_string(r.i) + "," + std::to_string(r.j) + "}t_" + std::to_string(r.i + r.j);
    return s;
}

/// "\langle g_1,g_2,... \rangle" for the whole list.
inline std::string to_latex(const std::vector<Relation>& rels)
{
    std::string s = "\\langle ";
    for (std::size_t k = 0; k < rels.size(); ++k)
        s += (k ? "," : "") + to_latex(rels[k]);
    return s + " \\rangle";
}

/// Plain rendering with the actual lambda value, e.g. "t1^2 - (x)*t2".
inline std::string to_string(const Relation& r, const LambdaSystem& sys)
{
    std::string s = r.i == r.j ? "t" + std::to_string(r.i) + "^2" : "t" + std::to_string(r.i) + "*t" + std::to_string(r.j);
    if (r.kind == Relation::Kind::scaled)
        s += " - (" + sys.lambda(r.i, r.j).to_string() + ")*t" + std::to_string(r.i + r.j);
    return s;
}

// ---------------------------------------------------------------------------
// Polynomials in t_1..t_n over A and their canonical forms

/// Sum of a(alpha) t^alpha with a(alpha) in A. Monomial index k-1 holds the
/// exponent of t_k.
class JetPoly {
public:
    JetPoly(Algebra base, int n) : base_(std::move(base)), n_(n) {}

    static JetPoly t(const Algebra& base, int n, int k)
    {
        if (k < 1 || k > n)
            throw Error(ErrorCode::level_out_of_range, "t" + std::to_string(k) + " does not exist for n = " + std::to_string(n));
        JetPoly p(base, n);
        p.add_term(Monomial::variable(static_cast<std::size_t>(k - 1)), base.one());
        return p;
    }

    static JetPoly constant(int n, const Element& a)
    {
        JetPoly p(a.owner(), n);
        p.add_term(Monomial{}, a);
        return p;
    }

    const Algebra& base() const noexcept { return base_; }
    int order() const noexcept { return n_; }
    const std::map<Monomial, Element>& terms() const noexcept { return terms_; }

    void add_term(const Monomial& m, const Element& a)
    {
        if (m.width() > static_cast<std::size_t>(n_))
            throw Error(ErrorCode::level_out_of_range, "t-monomial uses an index above " + std::to_string(n_));
        if (a.is_zero())
            return;
        auto [it, inserted] = terms_.try_emplace(m, a);
        if (!inserted) {
            it->second += a;
            if (it->second.is_zero())
                terms_.erase(it);
        }
    }

    friend JetPoly operator+(JetPoly a, const JetPoly& b)
    {
        for (const auto& [m, c] : b.terms_)
            a.add_term(m, c);
        return a;
    }

    friend JetPoly operator*(const Rational& s, JetPoly a)
    {
        JetPoly r(a.base_, a.n_);
        for (const auto& [m, c] : a.terms_)
            r.add_term(m, s * c);
        return r;
    }

    friend JetPoly operator-(const JetPoly& a) { return Rational(-1) * a; }
    friend JetPoly operator-(JetPoly a, const JetPoly& b) { return a + (-b); }

    friend JetPoly operator*(const JetPoly& a, const JetPoly& b)
    {
        JetPoly r(a.base_, std::max(a.n_, b.n_));
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_)
                r.add_term(ma * mb, ca * cb);
        return r;
    }

    friend bool operator==(const JetPoly& a, const JetPoly& b) noexcept
    {
        return a.base_ == b.base_ && a.n_ == b.n_ && a.terms_ == b.terms_;
    }

private:
    Algebra base_;
    int n_;
    std::map<Monomial, Element> terms_;
};

/// a_0 + a_1 t_1 + ... + a_n t_n, the canonical representative in
/// A[t_1..t_n]/J_n.
class TruncatedPoly {
public:
    TruncatedPoly(LambdaRef sys, std::vector<Element> coeffs) : sys_(std::move(sys)), coeffs_(std::move(coeffs))
    {
        if (static_cast<int>(coeffs_.size()) != sys_->order() + 1)
            throw Error(ErrorCode::invalid_argument, "truncated polynomial needs " + std::to_string(sys_->order() + 1) +
                                                         " coefficients");
        for (const auto& c : coeffs_)
            if (!(c.owner() == sys_->base()))
                throw Error(ErrorCode::algebra_mismatch, "coefficients must live in " + sys_->base().display_name());
    }

    const LambdaRef& system() const noexcept { return sys_; }
    const std::vector<Element>& coeffs() const noexcept { return coeffs_; }
    const Element& operator[](int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }

    JetPoly to_jet() const
    {
        JetPoly p(sys_->base(), sys_->order());
        for (int i = 0; i <= sys_->order(); ++i)
            p.add_term(i == 0 ? Monomial{} : Monomial::variable(static_cast<std::size_t>(i - 1)), coeffs_[static_cast<std::size_t>(i)]);
        return p;
    }

    /// "x^2 + 2*x*t1 + t2"; multi-term coefficients are parenthesized.
    std::string to_string() const
    {
        std::string s;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            const Element& c = coeffs_[i];
            if (c.is_zero())
                continue;
            std::string coef = c.to_string();
            std::string term;
            if (i == 0) {
                term = coef;
            } else {
                const std::string t = "t" + std::to_string(i);
                if (c == sys_->base().one())
                    term = t;
                else if (c == -sys_->base().one())
                    term = "-" + t;
                else if (c.poly().size() == 1)
                    term = coef + "*" + t;
                else
                    term = "(" + coef + ")*" + t;
            }
            if (s.empty())
                s = term;
            else if (term.front() == '-')
                s += " - " + term.substr(1);
            else
                s += " + " + term;
        }
        return s.empty() ? "0" : s;
    }

    friend bool operator==(const TruncatedPoly& a, const TruncatedPoly& b) noexcept
    {
        return a.sys_ == b.sys_ && a.coeffs_ == b.coeffs_;
    }

private:
    LambdaRef sys_;
    std::vector<Element> coeffs_;
};

/// Rewrites one t-monomial by repeatedly replacing a pair t_i t_j with
/// lambda_{i,j} t_{i+j} (or 0 when i+j > n). The canonical strategy pairs the
/// two smallest indices; with a sampler the pair is chosen at random.
/// Returns (scalar, index) with index 0 standing for t_0 = 1, or nullopt for 0.
inline std::optional<std::pair<Element, int>> rewrite_monomial(const Monomial& alpha, const LambdaSystem& sys,
                                                               Sampler* random = nullptr)
{
    const int n = sys.order();
    if (alpha.width() > static_cast<std::size_t>(n))
        throw Error(ErrorCode::level_out_of_range, "t-monomial uses an index above " + std::to_string(n));
    std::vector<int> factors;
    for (std::size_t k = 0; k < alpha.width(); ++k)
        for (std::uint32_t e = 0; e < alpha[k]; ++e)
            factors.push_back(static_cast<int>(k) + 1);
    Element scalar = sys.base().one();
    while (factors.size() >= 2) {
        std::size_t p = 0, q = 1;
        if (random) {
            p = static_cast<std::size_t>(random->uniform(0, static_cast<std::int64_t>(factors.size()) - 1));
            do
                q = static_cast<std::size_t>(random->uniform(0, static_cast<std::int64_t>(factors.size()) - 1));
            while (q == p);
        } else {
            std::sort(factors.begin(), factors.end());
        }
        const int i = factors[p], j = factors[q];
        if (i + j > n)
            return std::nullopt;
        scalar *= sys.lambda(i, j);
        factors.erase(factors.begin() + static_cast<std::ptrdiff_t>(std::max(p, q)));
        factors.erase(factors.begin() + static_cast<std::ptrdiff_t>(std::min(p, q)));
        factors.push_back(i + j);
    }
    if (scalar.is_zero())
        return std::nullopt;
    return std::make_pair(scalar, factors.empty() ? 0 : factors.front());
}

/// Canonical form of f in A[t_1..t_n]/J_n.
inline TruncatedPoly reduce(const JetPoly& f, const LambdaRef& sys, Sampler* random = nullptr)
{
    if (!(f.base() == sys->base()))
        throw Error(ErrorCode::algebra_mismatch, "t-polynomial coefficients must live in " + sys->base().display_name());
    std::vector<Element> coeffs(static_cast<std::size_t>(sys->order()) + 1, sys->base().zero());
    for (const auto& [alpha, a] : f.terms())
        if (auto r = rewrite_monomial(alpha, *sys, random))
            coeffs[static_cast<std::size_t>(r->second)] += a * r->first;
    return TruncatedPoly(sys, std::move(coeffs));
}

/// Closed form of t^alpha: zero when sum i*alpha_i > n, else
///   prod_i prod_{l=1}^{alpha_i - 1} lambda_{l i, i}
///   * lambda_{alpha_1, 2 alpha_2} * lambda_{alpha_1 + 2 alpha_2, 3 alpha_3} * ...
/// times t_{sum i alpha_i}.
inline std::optional<std::pair<Element, int>> monomial_scalar(const Monomial& alpha, const LambdaSystem& sys)
{
    const int n = sys.order();
    if (alpha.width() > static_cast<std::size_t>(n))
        throw Error(ErrorCode::level_out_of_range, "t-monomial uses an index above " + std::to_string(n));
    std::uint64_t weight = 0;
    for (std::size_t k = 0; k < alpha.width(); ++k)
        weight += (k + 1) * static_cast<std::uint64_t>(alpha[k]);
    if (weight > static_cast<std::uint64_t>(n))
        return std::nullopt;
    Element scalar = sys.base().one();
    for (int i = 1; i <= n; ++i) {
        const auto a = static_cast<int>(alpha[static_cast<std::size_t>(i - 1)]);
        for (int l = 1; l <= a - 1; ++l)
            scalar *= sys.lambda(l * i, i);
    }
    int s = static_cast<int>(alpha[0]);
    for (int i = 2; i <= n; ++i) {
        const int step = i * static_cast<int>(alpha[static_cast<std::size_t>(i - 1)]);
        scalar *= sys.lambda(s, step);
        s += step;
    }
    if (scalar.is_zero())
        return std::nullopt;
    return std::make_pair(scalar, s);
}

inline TruncatedPoly operator+(const TruncatedPoly& f, const TruncatedPoly& g)
{
    if (f.system() != g.system())
        throw Error(ErrorCode::system_mismatch, "truncated polynomials over different lambda systems");
    std::vector<Element> c;
    for (std::size_t i = 0; i < f.coeffs().size(); ++i)
        c.push_back(f.coeffs()[i] + g.coeffs()[i]);
    return TruncatedPoly(f.system(), std::move(c));
}

inline TruncatedPoly operator*(const TruncatedPoly& f, const TruncatedPoly& g)
{
    if (f.system() != g.system())
        throw Error(ErrorCode::system_mismatch, "truncated polynomials over different lambda systems");
    return reduce(f.to_jet() * g.to_jet(), f.system());
}

// ---------------------------------------------------------------------------
// A x_n A  <->  A[t_1..t_n]/J_n

/// (a_0, ..., a_n) -> sum a_i t_i.
inline TruncatedPoly iso_phi(const LambdaRef& sys, const ExtElement& u)
{
    if (u.system() != sys->structure())
        throw Error(ErrorCode::system_mismatch, "element is not over this lambda system's extension ring");
    return TruncatedPoly(sys, u.coords());
}

/// sum a_i t_i -> (a_0, ..., a_n).
inline ExtElement iso_psi(const TruncatedPoly& f) { return ExtElement(f.system()->structure(), f.coeffs()); }

/// Product in B[t]/<t^{n+1}> on coefficient vectors.
inline std::vector<Element> series_mul(const std::vector<Element>& a, const std::vector<Element>& b)
{
    const std::size_t len = a.size();
    std::vector<Element> c;
    for (std::size_t k = 0; k < len; ++k) {
        Element acc = a[0].owner().zero();
        for (std::size_t i = 0; i <= k; ++i)
            acc += a[i] * b[k - i];
        c.push_back(std::move(acc));
    }
    return c;
}

/// With every lambda equal to 1, ext_mul must agree with truncated power
/// series multiplication under (a_0..a_n) -> sum a_i t^i.
inline ValidationReport remark_lambda_one(const LambdaRef& sys, const ExtElement& u, const ExtElement& v)
{
    if (!sys->all_one())
        throw Error(ErrorCode::lambda_not_one, "every lambda must equal 1");
    ValidationReport report;
    auto prod = ext_mul(u, v);
    auto series = series_mul(u.coords(), v.coords());
    if (prod.coords() == series)
        report.pass("power-series", 1);
    else
        report.fail("power-series", 1,
                    "u=" + u.to_string() + ", v=" + v.to_string() + ": ext_mul gives " + prod.to_string() +
                        " but the series product is " + ExtElement(u.system(), series).to_string());
    return report;
}

// ---------------------------------------------------------------------------
// Jet-valued homomorphisms

/// a -> sum_i D_i(a) t^i in B[t]/<t^{n+1}>, presented as a truncated
/// polynomial over the all-ones lambda system on B.
class JetHom {
public:
    explicit JetHom(ClassicalSpec e)
        : spec_(as_multi(e)), classical_(std::move(e)),
          ones_(LambdaSystem::constant(classical_.target(), classical_.order(), classical_.target().one()))
    {
    }

    TruncatedPoly operator()(const Element& a) const
    {
        if (!(a.owner() == classical_.source()))
            throw Error(ErrorCode::algebra_mismatch, "argument must live in " + classical_.source().display_name());
        LeibnizEvaluator ev(spec_);
        std::vector<Element> c{classical_.d0()(a)};
        for (int i = 1; i <= classical_.order(); ++i)
            c.push_back(ev.eval(i, a.poly()));
        return TruncatedPoly(ones_, std::move(c));
    }

    const LambdaRef& jets() const noexcept { return ones_; }

private:
    DerivationSpec spec_;
    ClassicalSpec classical_;
    LambdaRef ones_;
};

inline TruncatedPoly jet_hom_eval(const ClassicalSpec& e, const Element& a) { return JetHom(e)(a); }

/// a -> a + sum_i D_i(a) t_i into A[t_1..t_n]/J_n for a spec with every
/// level-0 map the identity.
class CorollaryHom {
public:
    CorollaryHom(DerivationSpec spec, LambdaRef sys) : spec_(std::move(spec)), sys_(std::move(sys)) {}

    TruncatedPoly operator()(const Element& a) const
    {
        if (!(a.owner() == sys_->base()))
            throw Error(ErrorCode::algebra_mismatch, "argument must live in " + sys_->base().display_name());
        LeibnizEvaluator ev(spec_);
        std::vector<Element> c{a};
        for (int i = 1; i <= sys_->order(); ++i)
            c.push_back(ev.eval(i, a.poly()));
        return TruncatedPoly(sys_, std::move(c));
    }

    const DerivationSpec& spec() const noexcept { return spec_; }
    const LambdaRef& system() const noexcept { return sys_; }

private:
    DerivationSpec spec_;
    LambdaRef sys_;
};

inline CorollaryHom corollary_hom(const DerivationSpec& spec, const LambdaRef& sys, int trials = 50, std::uint64_t seed = 0)
{
    if (spec.system() != sys->structure())
        throw Error(ErrorCode::system_mismatch, "spec must be declared over the lambda system's structure");
    const Morphism id = Morphism::identity(sys->base());
    for (int i = 1; i <= spec.order(); ++i)
        if (spec.level0(i) != id)
            throw Error(ErrorCode::dagger_violation, "D0^" + std::to_string(i) + " is not the identity",
                        detail::first_difference(spec.level0(i), id));
    auto report = hs_verify(spec, trials, seed);
    if (const auto* f = report.first_failure())
        throw Error(ErrorCode::not_a_derivation, "spec fails " + f->name, f->detail);
    return CorollaryHom(spec, sys);
}

/// Inverse direction: D_i(x) is read off coefficient i of the image of x.
inline DerivationSpec corollary_spec(const LambdaRef& sys, const std::vector<TruncatedPoly>& images)
{
    const Algebra& a = sys->base();
    if (images.size() != a.variable_count())
        throw Error(ErrorCode::invalid_argument, "need one image per variable of " + a.display_name());
    std::vector<std::vector<Element>> levels(static_cast<std::size_t>(sys->order()));
    for (std::size_t v = 0; v < images.size(); ++v) {
        if (images[v].system() != sys)
            throw Error(ErrorCode::system_mismatch, "image over a different lambda system");
        if (images[v][0] != a.variable(v))
            throw Error(ErrorCode::dagger_violation, "image of " + a.variables()[v] + " is not congruent to it mod (t)",
                        a.variables()[v] + " -> " + images[v].to_string());
        for (int i = 1; i <= sys->order(); ++i)
            levels[static_cast<std::size_t>(i - 1)].push_back(images[v][i]);
    }
    return DerivationSpec(sys->structure(),
                          std::vector<Morphism>(static_cast<std::size_t>(sys->order()), Morphism::identity(a)),
                          std::move(levels));
}

} // namespace mhs
