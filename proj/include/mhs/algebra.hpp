#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mhs/error.hpp"
#include "mhs/poly.hpp"

namespace mhs {

namespace detail {
struct AlgebraData;
}

class Element;

/// A finitely presented commutative Q-algebra: a free polynomial ring, its
/// quotient by a monomial ideal, or a binary product of two algebras.
///
/// Algebras are cheap handles to immutable data. Two handles compare equal
/// when their presentations agree; the display name does not take part.
class Algebra {
public:
    enum class Kind { free, quotient, product };

    Algebra() = default;

    static Algebra free(std::vector<std::string> variables, std::string name = {});
    static Algebra quotient(std::vector<std::string> variables, std::vector<Monomial> generators, std::string name = {});
    static Algebra product(Algebra left, Algebra right, std::string name = {});

    Kind kind() const noexcept;
    bool is_product() const noexcept { return kind() == Kind::product; }
    bool valid() const noexcept { return data_ != nullptr; }

    const std::vector<std::string>& variables() const noexcept;
    std::size_t variable_count() const noexcept { return variables().size(); }
    std::size_t index_of(std::string_view variable) const;
    const std::vector<Monomial>& ideal() const noexcept;
    const Algebra& left() const noexcept;
    const Algebra& right() const noexcept;
    const std::string& name() const noexcept;

    Algebra renamed(std::string name) const;

    // True when m is divisible by an ideal generator (zero in the algebra).
    bool kills(const Monomial& m) const noexcept;

    /// Monomials of degree <= max_degree that survive the quotient, in
    /// ascending graded lex order.
    std::vector<Monomial> normal_monomials(std::uint32_t max_degree) const;

    Element zero() const;
    Element one() const;
    Element constant(const Rational& c) const;
    Element variable(std::size_t index) const;
    Element variable(std::string_view name) const;

    /// "Q[x,y]/<y>", "Q[x] x Q[x]", ...
    std::string description() const;
    std::string display_name() const;

    friend bool operator==(const Algebra& a, const Algebra& b) noexcept;

private:
    explicit Algebra(std::shared_ptr<const detail::AlgebraData> d) : data_(std::move(d)) {}
    std::shared_ptr<const detail::AlgebraData> data_;
};

namespace detail {
struct AlgebraData {
    Algebra::Kind kind = Algebra::Kind::free;
    std::vector<std::string> variables;
    std::vector<Monomial> ideal;
    Algebra left;
    Algebra right;
    std::string name;
};

inline const std::vector<std::string>& empty_names()
{
    static const std::vector<std::string> names;
    return names;
}

inline const std::vector<Monomial>& empty_ideal()
{
    static const std::vector<Monomial> gens;
    return gens;
}
} // namespace detail

/// An element of an Algebra, always held in normal form: a Poly with no term
/// divisible by an ideal generator, or an ordered pair for product algebras.
class Element {
public:
    Element() = default;

    const Algebra& owner() const noexcept { return owner_; }
    const Poly& poly() const noexcept { return poly_; }
    const Element& first() const noexcept { return parts_[0]; }
    const Element& second() const noexcept { return parts_[1]; }

    bool is_zero() const noexcept
    {
        if (owner_.is_product())
            return parts_[0].is_zero() && parts_[1].is_zero();
        return poly_.is_zero();
    }

    std::string to_string() const
    {
        if (owner_.is_product())
            return "(" + parts_[0].to_string() + ", " + parts_[1].to_string() + ")";
        return poly_.to_string(owner_.variables());
    }

    friend Element normal_form(const Poly& p, const Algebra& alg);
    friend Element make_pair(const Algebra& product, Element first, Element second);

    friend Element operator+(const Element& a, const Element& b) { return combine(a, b, Op::add); }
    friend Element operator-(const Element& a, const Element& b) { return combine(a, b, Op::sub); }
    friend Element operator*(const Element& a, const Element& b) { return combine(a, b, Op::mul); }

    friend Element operator-(const Element& a)
    {
        Element r = a;
        if (r.owner_.is_product()) {
            r.parts_[0] = -r.parts_[0];
            r.parts_[1] = -r.parts_[1];
        } else {
            r.poly_ = -r.poly_;
        }
        return r;
    }

    friend Element operator*(const Rational& s, const Element& a)
    {
        Element r = a;
        if (r.owner_.is_product()) {
            r.parts_[0] = s * r.parts_[0];
            r.parts_[1] = s * r.parts_[1];
        } else {
            r.poly_ = s * r.poly_;
        }
        return r;
    }

    Element& operator+=(const Element& o) { return *this = *this + o; }
    Element& operator*=(const Element& o) { return *this = *this * o; }

    friend bool operator==(const Element& a, const Element& b) noexcept
    {
        return a.owner_ == b.owner_ && a.poly_ == b.poly_ && a.parts_ == b.parts_;
    }

private:
    enum class Op { add, sub, mul };

    static Element combine(const Element& a, const Element& b, Op op);

    Algebra owner_;
    Poly poly_;
    std::vector<Element> parts_;
};

/// Deletes every term divisible by an ideal generator of `alg`.
inline Element normal_form(const Poly& p, const Algebra& alg)
{
    if (alg.is_product())
        throw Error(ErrorCode::invalid_argument, "normal_form needs a polynomial algebra, got " + alg.display_name());
    if (p.width() > alg.variable_count())
        throw Error(ErrorCode::unknown_variable,
                    "polynomial mentions variable #" + std::to_string(p.width() - 1) + " not declared in " +
                        alg.display_name());
    Element e;
    e.owner_ = alg;
    if (alg.kind() == Algebra::Kind::quotient) {
        for (const auto& [m, c] : p.terms())
            if (!alg.kills(m))
                e.poly_.add_term(m, c);
    } else {
        e.poly_ = p;
    }
    return e;
}

inline Element make_pair(const Algebra& product, Element first, Element second)
{
    if (!product.is_product())
        throw Error(ErrorCode::algebra_mismatch, "pair element needs a product algebra, got " + product.display_name());
    if (!(first.owner() == product.left()) || !(second.owner() == product.right()))
        throw Error(ErrorCode::algebra_mismatch, "pair components do not match the factors of " + product.display_name());
    Element e;
    e.owner_ = product;
    e.parts_ = {std::move(first), std::move(second)};
    return e;
}

inline Element Element::combine(const Element& a, const Element& b, Op op)
{
    if (!(a.owner_ == b.owner_))
        throw Error(ErrorCode::algebra_mismatch,
                    "operands live in " + a.owner_.display_name() + " and " + b.owner_.display_name());
    if (a.owner_.is_product())
        return make_pair(a.owner_, combine(a.parts_[0], b.parts_[0], op), combine(a.parts_[1], b.parts_[1], op));
    switch (op) {
    case Op::add: {
        Element r = a;
        r.poly_ += b.poly_;
        return r;
    }
    case Op::sub: {
        Element r = a;
        r.poly_ -= b.poly_;
        return r;
    }
    case Op::mul: break;
    }
    return normal_form(a.poly_ * b.poly_, a.owner_);
}

inline Element pow(const Element& base, std::uint32_t e)
{
    Element result = base.owner().one();
    Element b = base;
    while (e > 0) {
        if (e & 1u)
            result *= b;
        e >>= 1;
        if (e > 0)
            b *= b;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Algebra implementation

inline Algebra Algebra::free(std::vector<std::string> variables, std::string name)
{
    for (std::size_t i = 0; i < variables.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (variables[i] == variables[j])
                throw Error(ErrorCode::invalid_argument, "duplicate variable '" + variables[i] + "'");
    auto d = std::make_shared<detail::AlgebraData>();
    d->kind = Kind::free;
    d->variables = std::move(variables);
    d->name = std::move(name);
    return Algebra(std::move(d));
}

inline Algebra Algebra::quotient(std::vector<std::string> variables, std::vector<Monomial> generators, std::string name)
{
    Algebra base = free(std::move(variables), std::move(name));
    if (generators.empty())
        return base;
    for (const auto& g : generators) {
        if (g.is_one())
            throw Error(ErrorCode::invalid_argument, "ideal generator 1 gives the zero ring");
        if (g.width() > base.variable_count())
            throw Error(ErrorCode::unknown_variable, "ideal generator uses an undeclared variable");
    }
    // Keep a minimal generating set: drop duplicates and multiples.
    std::sort(generators.begin(), generators.end());
    generators.erase(std::unique(generators.begin(), generators.end()), generators.end());
    std::vector<Monomial> minimal;
    for (const auto& g : generators) {
        bool redundant = false;
        for (const auto& h : minimal)
            if (h.divides(g))
                redundant = true;
        if (!redundant)
            minimal.push_back(g);
    }
    auto d = std::make_shared<detail::AlgebraData>(*base.data_);
    d->kind = Kind::quotient;
    d->ideal = std::move(minimal);
    return Algebra(std::move(d));
}

inline Algebra Algebra::product(Algebra left, Algebra right, std::string name)
{
    if (!left.valid() || !right.valid())
        throw Error(ErrorCode::invalid_argument, "product of an empty algebra handle");
    auto d = std::make_shared<detail::AlgebraData>();
    d->kind = Kind::product;
    d->left = std::move(left);
    d->right = std::move(right);
    d->name = std::move(name);
    return Algebra(std::move(d));
}

inline Algebra::Kind Algebra::kind() const noexcept { return data_ ? data_->kind : Kind::free; }

inline const std::vector<std::string>& Algebra::variables() const noexcept
{
    return data_ ? data_->variables : detail::empty_names();
}

inline std::size_t Algebra::index_of(std::string_view variable) const
{
    const auto& vars = variables();
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == variable)
            return i;
    throw Error(ErrorCode::unknown_variable, "variable '" + std::string(variable) + "' is not declared in " + display_name());
}

inline const std::vector<Monomial>& Algebra::ideal() const noexcept
{
    return data_ ? data_->ideal : detail::empty_ideal();
}

inline const Algebra& Algebra::left() const noexcept { return data_->left; }
inline const Algebra& Algebra::right() const noexcept { return data_->right; }

inline const std::string& Algebra::name() const noexcept
{
    static const std::string none;
    return data_ ? data_->name : none;
}

inline Algebra Algebra::renamed(std::string name) const
{
    auto d = std::make_shared<detail::AlgebraData>(*data_);
    d->name = std::move(name);
    return Algebra(std::move(d));
}

inline bool Algebra::kills(const Monomial& m) const noexcept
{
    for (const auto& g : ideal())
        if (g.divides(m))
            return true;
    return false;
}

inline std::vector<Monomial> Algebra::normal_monomials(std::uint32_t max_degree) const
{
    std::vector<Monomial> out;
    const std::size_t n = variable_count();
    std::vector<std::uint32_t> e(n, 0);
    // Enumerate exponent vectors with total degree <= max_degree.
    auto rec = [&](auto&& self, std::size_t i, std::uint32_t left) -> void {
        if (i == n) {
            Monomial m(e);
            if (!kills(m))
                out.push_back(std::move(m));
            return;
        }
        for (std::uint32_t k = 0; k <= left; ++k) {
            e[i] = k;
            self(self, i + 1, left - k);
        }
        e[i] = 0;
    };
    rec(rec, 0, max_degree);
    std::sort(out.begin(), out.end());
    return out;
}

inline Element Algebra::zero() const { return constant(0); }
inline Element Algebra::one() const { return constant(1); }

inline Element Algebra::constant(const Rational& c) const
{
    if (is_product())
        return make_pair(*this, left().constant(c), right().constant(c));
    return normal_form(Poly(c), *this);
}

inline Element Algebra::variable(std::size_t index) const
{
    if (is_product() || index >= variable_count())
        throw Error(ErrorCode::unknown_variable, "no variable #" + std::to_string(index) + " in " + display_name());
    return normal_form(Poly::variable(index), *this);
}

inline Element Algebra::variable(std::string_view name) const { return variable(index_of(name)); }

inline std::string Algebra::description() const
{
    if (!data_)
        return "<none>";
    if (is_product())
        return "(" + left().display_name() + " x " + right().display_name() + ")";
    std::string s = "Q[";
    for (std::size_t i = 0; i < variables().size(); ++i)
        s += (i ? "," : "") + variables()[i];
    s += "]";
    if (kind() == Kind::quotient) {
        s += "/<";
        for (std::size_t i = 0; i < ideal().size(); ++i)
            s += (i ? "," : "") + Poly::term(ideal()[i], 1).to_string(variables());
        s += ">";
    }
    return s;
}

inline std::string Algebra::display_name() const
{
    return name().empty() ? description() : name();
}

inline bool operator==(const Algebra& a, const Algebra& b) noexcept
{
    if (a.data_ == b.data_)
        return true;
    if (!a.data_ || !b.data_)
        return false;
    const auto& x = *a.data_;
    const auto& y = *b.data_;
    if (x.kind != y.kind)
        return false;
    if (x.kind == Algebra::Kind::product)
        return x.left == y.left && x.right == y.right;
    return x.variables == y.variables && x.ideal == y.ideal;
}

// ---------------------------------------------------------------------------
// Morphisms

/// Unital Q-algebra map given by the images of the source variables. The
/// source must be a polynomial algebra (free or quotient); products occur
/// only as targets.
class Morphism {
public:
    Morphism() = default;

    Morphism(Algebra source, Algebra target, std::vector<Element> images, std::string name = {})
        : source_(std::move(source)), target_(std::move(target)), images_(std::move(images)), name_(std::move(name))
    {
        if (source_.is_product())
            throw Error(ErrorCode::invalid_argument, "morphisms out of a product algebra are not supported");
        if (images_.size() != source_.variable_count())
            throw Error(ErrorCode::invalid_argument, "morphism needs one image per source variable (" +
                                                         std::to_string(source_.variable_count()) + "), got " +
                                                         std::to_string(images_.size()));
        for (const auto& im : images_)
            if (!(im.owner() == target_))
                throw Error(ErrorCode::algebra_mismatch,
                            "image " + im.to_string() + " does not live in " + target_.display_name());
        monomial_images_ = !target_.is_product();
        for (const auto& im : images_)
            if (im.poly().size() > 1)
                monomial_images_ = false;
    }

    static Morphism identity(const Algebra& a)
    {
        std::vector<Element> images;
        for (std::size_t i = 0; i < a.variable_count(); ++i)
            images.push_back(a.variable(i));
        return Morphism(a, a, std::move(images), "id");
    }

    const Algebra& source() const noexcept { return source_; }
    const Algebra& target() const noexcept { return target_; }
    const std::vector<Element>& images() const noexcept { return images_; }
    const Element& image(std::size_t i) const { return images_.at(i); }
    const std::string& name() const noexcept { return name_; }

    Morphism renamed(std::string name) const
    {
        Morphism m = *this;
        m.name_ = std::move(name);
        return m;
    }

    Element apply(const Element& u) const
    {
        if (!(u.owner() == source_))
            throw Error(ErrorCode::algebra_mismatch,
                        "morphism source is " + source_.display_name() + " but element lives in " +
                            u.owner().display_name());
        return apply(u.poly());
    }

    /// Substitution on the free cover of the source.
    Element apply(const Poly& p) const
    {
        if (p.width() > source_.variable_count())
            throw Error(ErrorCode::unknown_variable, "polynomial uses variables outside " + source_.display_name());
        if (monomial_images_)
            return apply_monomial_images(p);
        std::vector<std::vector<Element>> powers(images_.size());
        Element acc = target_.zero();
        for (const auto& [m, c] : p.terms()) {
            Element t = target_.constant(c);
            for (std::size_t i = 0; i < m.width(); ++i) {
                if (m[i] == 0)
                    continue;
                auto& pw = powers[i];
                if (pw.empty())
                    pw.push_back(target_.one());
                while (pw.size() <= m[i])
                    pw.push_back(pw.back() * images_[i]);
                t *= pw[m[i]];
            }
            acc += t;
        }
        return acc;
    }

    Element operator()(const Element& u) const { return apply(u); }

    friend bool operator==(const Morphism& a, const Morphism& b) noexcept
    {
        return a.source_ == b.source_ && a.target_ == b.target_ && a.images_ == b.images_;
    }

    std::string to_string() const
    {
        std::string s = "{";
        for (std::size_t i = 0; i < images_.size(); ++i)
            s += (i ? ", " : " ") + source_.variables()[i] + " -> " + images_[i].to_string();
        return s + (images_.empty() ? "}" : " }");
    }

private:
    // Every image is zero or a single term, so substitution maps terms to
    // terms.
    Element apply_monomial_images(const Poly& p) const
    {
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            Rational coef = c;
            Monomial mono;
            bool vanished = false;
            for (std::size_t i = 0; i < m.width() && !vanished; ++i) {
                if (m[i] == 0)
                    continue;
                const Poly& im = images_[i].poly();
                if (im.is_zero()) {
                    vanished = true;
                    break;
                }
                const auto& [im_mono, im_coef] = *im.terms().begin();
                for (std::uint32_t k = 0; k < m[i]; ++k) {
                    coef *= im_coef;
                    mono = mono * im_mono;
                }
            }
            if (!vanished)
                out.add_term(mono, coef);
        }
        return normal_form(out, target_);
    }

    Algebra source_;
    Algebra target_;
    std::vector<Element> images_;
    std::string name_;
    bool monomial_images_ = false;
};

/// Lists every source ideal generator whose image is nonzero; an empty
/// failure list means the substitution is a well-defined homomorphism.
inline ValidationReport morphism_validate(const Morphism& f)
{
    ValidationReport report;
    const auto& names = f.source().variables();
    for (const auto& g : f.source().ideal()) {
        Element im = f.apply(Poly::term(g, 1));
        std::string gen = Poly::term(g, 1).to_string(names);
        if (im.is_zero())
            report.pass("kills " + gen, 1);
        else
            report.fail("kills " + gen, 1, gen + " -> " + im.to_string() + " != 0");
    }
    return report;
}

/// x -> g(f(x)).
inline Morphism morphism_compose(const Morphism& g, const Morphism& f)
{
    if (!(f.target() == g.source()))
        throw Error(ErrorCode::algebra_mismatch,
                    "cannot compose: " + f.target().display_name() + " vs " + g.source().display_name());
    std::vector<Element> images;
    images.reserve(f.images().size());
    for (const auto& im : f.images())
        images.push_back(g.apply(im));
    return Morphism(f.source(), g.target(), std::move(images));
}

} // namespace mhs
