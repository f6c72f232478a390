#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mhs/algebra.hpp"
#include "mhs/sample.hpp"

namespace mhs {

/// (b, b') -> scale * left(b) * right(b').
struct MulForm {
    Element scale;
    Morphism left;
    Morphism right;

    Element operator()(const Element& b, const Element& c) const { return scale * left(b) * right(c); }
    MulForm swapped() const { return {scale, right, left}; }
};

/// phi_{i,j} : B_i x B_j -> B_{i+j}, the sum of its forms.
struct BilinearMap {
    int i = 0;
    int j = 0;
    std::vector<MulForm> forms;

    Element operator()(const Element& b, const Element& c) const
    {
        Element acc = forms.front().scale.owner().zero();
        for (const auto& f : forms)
            acc += f(b, c);
        return acc;
    }

    BilinearMap swapped() const
    {
        BilinearMap m{j, i, {}};
        for (const auto& f : forms)
            m.forms.push_back(f.swapped());
        return m;
    }
};

class StructureSystem;
using SystemRef = std::shared_ptr<const StructureSystem>;

namespace detail {
struct SystemAccess;
}

/// The datum (A; B_1..B_n; g_1..g_n; phi_{i,j}) of an n-trivial extension.
///
/// Level 0 is A itself, and phi_{0,j}, phi_{j,0} are the module actions
/// through g_j; they are never stored. A missing phi_{j,i} is filled in as the
/// mirror of phi_{i,j}, which makes the pair symmetric by construction.
class StructureSystem {
public:
    StructureSystem(Algebra base, std::vector<Algebra> levels, std::vector<Morphism> structural,
                    std::vector<BilinearMap> bilinear, std::string name = {})
        : base_(std::move(base)), levels_(std::move(levels)), structural_(std::move(structural)), name_(std::move(name))
    {
        const int n = order();
        if (base_.is_product())
            throw Error(ErrorCode::invalid_argument, "the base algebra must be a polynomial algebra");
        if (n < 1)
            throw Error(ErrorCode::invalid_argument, "a structure system needs order n >= 1");
        if (structural_.size() != levels_.size())
            throw Error(ErrorCode::invalid_argument, "need one structural morphism per level");
        for (int i = 1; i <= n; ++i) {
            const auto& g = structural_[static_cast<std::size_t>(i - 1)];
            require_map(g, base_, level(i), "structural morphism g" + std::to_string(i));
        }
        for (auto& m : bilinear) {
            if (m.i < 1 || m.j < 1 || m.i + m.j > n)
                throw Error(ErrorCode::level_out_of_range,
                            "phi(" + std::to_string(m.i) + "," + std::to_string(m.j) + ") is outside 1 <= i,j and i+j <= " +
                                std::to_string(n));
            if (m.forms.empty())
                throw Error(ErrorCode::invalid_argument, "phi(" + std::to_string(m.i) + "," + std::to_string(m.j) + ") has no forms");
            const std::string tag = "phi(" + std::to_string(m.i) + "," + std::to_string(m.j) + ")";
            for (const auto& f : m.forms) {
                if (!(f.scale.owner() == level(m.i + m.j)))
                    throw Error(ErrorCode::algebra_mismatch, tag + " scale must live in B" + std::to_string(m.i + m.j));
                require_map(f.left, level(m.i), level(m.i + m.j), tag + " left map");
                require_map(f.right, level(m.j), level(m.i + m.j), tag + " right map");
            }
            auto key = std::make_pair(m.i, m.j);
            if (bilinear_.count(key))
                throw Error(ErrorCode::invalid_argument, tag + " declared twice");
            bilinear_.emplace(key, std::move(m));
        }
        for (int i = 1; i < n; ++i)
            for (int j = 1; i + j <= n; ++j)
                if (!bilinear_.count({i, j})) {
                    auto mirror = bilinear_.find({j, i});
                    if (mirror == bilinear_.end())
                        throw Error(ErrorCode::invalid_argument,
                                    "missing phi(" + std::to_string(i) + "," + std::to_string(j) + ")");
                    bilinear_.emplace(std::make_pair(i, j), mirror->second.swapped());
                }
    }

    int order() const noexcept { return static_cast<int>(levels_.size()); }
    const Algebra& base() const noexcept { return base_; }
    const std::string& name() const noexcept { return name_; }
    bool validated() const noexcept { return validated_; }

    const Algebra& level(int i) const
    {
        if (i < 0 || i > order())
            throw Error(ErrorCode::level_out_of_range, "level " + std::to_string(i) + " outside 0.." + std::to_string(order()));
        return i == 0 ? base_ : levels_[static_cast<std::size_t>(i - 1)];
    }

    const Morphism& structural(int i) const
    {
        if (i < 1 || i > order())
            throw Error(ErrorCode::level_out_of_range, "structural morphism g" + std::to_string(i) + " does not exist");
        return structural_[static_cast<std::size_t>(i - 1)];
    }

    const std::vector<Morphism>& structural_maps() const noexcept { return structural_; }

    const BilinearMap& phi(int i, int j) const
    {
        auto it = bilinear_.find({i, j});
        if (it == bilinear_.end())
            throw Error(ErrorCode::level_out_of_range, "no phi(" + std::to_string(i) + "," + std::to_string(j) + ")");
        return it->second;
    }

    const std::map<std::pair<int, int>, BilinearMap>& bilinear() const noexcept { return bilinear_; }

private:
    static void require_map(const Morphism& f, const Algebra& src, const Algebra& dst, const std::string& what)
    {
        if (!(f.source() == src) || !(f.target() == dst))
            throw Error(ErrorCode::algebra_mismatch, what + " must map " + src.display_name() + " -> " + dst.display_name() +
                                                         ", got " + f.source().display_name() + " -> " +
                                                         f.target().display_name());
        auto report = morphism_validate(f);
        if (!report.ok())
            throw Error(ErrorCode::invalid_argument, what + " is not well defined", report.first_failure()->detail);
    }

    friend struct detail::SystemAccess;

    Algebra base_;
    std::vector<Algebra> levels_;
    std::vector<Morphism> structural_;
    std::map<std::pair<int, int>, BilinearMap> bilinear_;
    std::string name_;
    bool validated_ = false;
};

namespace detail {
struct SystemAccess {
    static SystemRef with_validation(StructureSystem sys)
    {
        sys.validated_ = true;
        return std::make_shared<const StructureSystem>(std::move(sys));
    }
};
} // namespace detail

/// phi_{i,j}(b, b'), with level 0 acting through the structural morphisms.
inline Element bilinear_eval(const StructureSystem& sys, int i, int j, const Element& b, const Element& c)
{
    if (i < 0 || j < 0 || i + j > sys.order())
        throw Error(ErrorCode::level_out_of_range,
                    "phi(" + std::to_string(i) + "," + std::to_string(j) + ") with n = " + std::to_string(sys.order()));
    if (!(b.owner() == sys.level(i)) || !(c.owner() == sys.level(j)))
        throw Error(ErrorCode::algebra_mismatch, "phi(" + std::to_string(i) + "," + std::to_string(j) +
                                                     ") arguments live in " + b.owner().display_name() + " and " +
                                                     c.owner().display_name());
    if (i == 0 && j == 0)
        return b * c;
    if (i == 0)
        return sys.structural(j)(b) * c;
    if (j == 0)
        return b * sys.structural(i)(c);
    return sys.phi(i, j)(b, c);
}

namespace detail {
inline std::string show(const Element& e) { return e.to_string(); }
} // namespace detail

/// Sampled check of the three hypotheses that make the direct sum a ring:
/// A-bilinearity of every phi, symmetry, and associativity over all level
/// triples with i+j+k <= n. Stops each condition at its first counterexample.
inline ValidationReport system_validate(const StructureSystem& sys, int trials, std::uint64_t seed,
                                        std::uint32_t max_degree = 3)
{
    ValidationReport report;
    Sampler rng(seed);
    const int n = sys.order();
    auto sample = [&](int level) { return rng.element(sys.level(level), max_degree); };

    for (const auto& [key, phi] : sys.bilinear()) {
        const auto [i, j] = key;
        const std::string tag = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        std::string witness;
        int t = 0;
        for (; t < trials && witness.empty(); ++t) {
            Element a = sample(0), b = sample(i), b2 = sample(i), c = sample(j), c2 = sample(j);
            Element base = phi(b, c);
            Element ga = sys.structural(i + j)(a);
            if (phi(sys.structural(i)(a) * b, c) != ga * base)
                witness = "a=" + a.to_string() + ", b=" + b.to_string() + ", b'=" + c.to_string() +
                          ": phi(a.b, b') != a.phi(b, b')";
            else if (phi(b, sys.structural(j)(a) * c) != ga * base)
                witness = "a=" + a.to_string() + ", b=" + b.to_string() + ", b'=" + c.to_string() +
                          ": phi(b, a.b') != a.phi(b, b')";
            else if (phi(b + b2, c) != base + phi(b2, c))
                witness = "b1=" + b.to_string() + ", b2=" + b2.to_string() + ", b'=" + c.to_string() +
                          ": phi not additive in the first slot";
            else if (phi(b, c + c2) != base + phi(b, c2))
                witness = "b=" + b.to_string() + ", b1'=" + c.to_string() + ", b2'=" + c2.to_string() +
                          ": phi not additive in the second slot";
        }
        if (witness.empty())
            report.pass("bilinear" + tag, static_cast<std::size_t>(t));
        else
            report.fail("bilinear" + tag, static_cast<std::size_t>(t), witness);
    }

    for (const auto& [key, phi] : sys.bilinear()) {
        const auto [i, j] = key;
        const std::string tag = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        std::string witness;
        int t = 0;
        for (; t < trials && witness.empty(); ++t) {
            Element b = sample(i), c = sample(j);
            Element lhs = phi(b, c);
            Element rhs = sys.phi(j, i)(c, b);
            if (lhs != rhs)
                witness = "b=" + b.to_string() + ", b'=" + c.to_string() + ": phi" + tag + "(b,b')=" + lhs.to_string() +
                          " but phi(" + std::to_string(j) + "," + std::to_string(i) + ")(b',b)=" + rhs.to_string();
        }
        if (witness.empty())
            report.pass("symmetric" + tag, static_cast<std::size_t>(t));
        else
            report.fail("symmetric" + tag, static_cast<std::size_t>(t), witness);
    }

    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j)
            for (int k = 0; i + j + k <= n; ++k) {
                const std::string tag = "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")";
                std::string witness;
                int t = 0;
                for (; t < trials && witness.empty(); ++t) {
                    Element x = sample(i), y = sample(j), z = sample(k);
                    Element lhs = bilinear_eval(sys, i + j, k, bilinear_eval(sys, i, j, x, y), z);
                    Element rhs = bilinear_eval(sys, i, j + k, x, bilinear_eval(sys, j, k, y, z));
                    if (lhs != rhs)
                        witness = "m" + std::to_string(i) + "=" + x.to_string() + ", m" + std::to_string(j) + "=" +
                                  y.to_string() + ", m" + std::to_string(k) + "=" + z.to_string() +
                                  ": (mm)m=" + lhs.to_string() + " but m(mm)=" + rhs.to_string();
                }
                if (witness.empty())
                    report.pass("associative" + tag, static_cast<std::size_t>(t));
                else
                    report.fail("associative" + tag, static_cast<std::size_t>(t), witness);
            }
    return report;
}

/// Runs system_validate and, on success, returns the system with its
/// validated flag set. Throws UnvalidatedSystem with the first witness
/// otherwise.
inline SystemRef certify(StructureSystem sys, int trials, std::uint64_t seed)
{
    auto report = system_validate(sys, trials, seed);
    if (const auto* f = report.first_failure())
        throw Error(ErrorCode::unvalidated_system, "system fails " + f->name, f->detail);
    return detail::SystemAccess::with_validation(std::move(sys));
}

inline SystemRef certify(const SystemRef& sys, int trials, std::uint64_t seed)
{
    if (sys->validated())
        return sys;
    return certify(StructureSystem(*sys), trials, seed);
}

inline SystemRef unvalidated(StructureSystem sys) { return std::make_shared<const StructureSystem>(std::move(sys)); }

// ---------------------------------------------------------------------------
// Elements of A x_n B_1 x ... x B_n

class ExtElement {
public:
    ExtElement(SystemRef sys, std::vector<Element> coords) : sys_(std::move(sys)), coords_(std::move(coords))
    {
        if (static_cast<int>(coords_.size()) != sys_->order() + 1)
            throw Error(ErrorCode::invalid_argument, "extension element needs " + std::to_string(sys_->order() + 1) +
                                                         " coordinates, got " + std::to_string(coords_.size()));
        for (int i = 0; i <= sys_->order(); ++i)
            if (!(coords_[static_cast<std::size_t>(i)].owner() == sys_->level(i)))
                throw Error(ErrorCode::algebra_mismatch, "coordinate " + std::to_string(i) + " must live in " +
                                                             sys_->level(i).display_name());
    }

    const SystemRef& system() const noexcept { return sys_; }
    const std::vector<Element>& coords() const noexcept { return coords_; }
    const Element& operator[](int i) const { return coords_.at(static_cast<std::size_t>(i)); }

    std::string to_string() const
    {
        std::string s = "(";
        for (std::size_t i = 0; i < coords_.size(); ++i)
            s += (i ? "; " : "") + coords_[i].to_string();
        return s + ")";
    }

    friend bool operator==(const ExtElement& a, const ExtElement& b) noexcept
    {
        return a.sys_ == b.sys_ && a.coords_ == b.coords_;
    }

private:
    SystemRef sys_;
    std::vector<Element> coords_;
};

namespace detail {
inline void same_system(const ExtElement& u, const ExtElement& v)
{
    if (u.system() != v.system())
        throw Error(ErrorCode::system_mismatch, "operands belong to different structure systems");
}

// Convolution product without the validation gate.
inline ExtElement convolve(const ExtElement& u, const ExtElement& v)
{
    same_system(u, v);
    const auto& sys = *u.system();
    std::vector<Element> out;
    for (int k = 0; k <= sys.order(); ++k) {
        Element acc = sys.level(k).zero();
        for (int j = 0; j <= k; ++j)
            acc += bilinear_eval(sys, j, k - j, u[j], v[k - j]);
        out.push_back(std::move(acc));
    }
    return ExtElement(u.system(), std::move(out));
}
} // namespace detail

inline ExtElement ext_add(const ExtElement& u, const ExtElement& v)
{
    detail::same_system(u, v);
    std::vector<Element> out;
    for (std::size_t i = 0; i < u.coords().size(); ++i)
        out.push_back(u.coords()[i] + v.coords()[i]);
    return ExtElement(u.system(), std::move(out));
}

inline ExtElement ext_sub(const ExtElement& u, const ExtElement& v)
{
    detail::same_system(u, v);
    std::vector<Element> out;
    for (std::size_t i = 0; i < u.coords().size(); ++i)
        out.push_back(u.coords()[i] - v.coords()[i]);
    return ExtElement(u.system(), std::move(out));
}

/// k-th coordinate is sum_{j+l=k} phi_{j,l}(u_j, v_l). Only defined over a
/// validated system.
inline ExtElement ext_mul(const ExtElement& u, const ExtElement& v)
{
    detail::same_system(u, v);
    if (!u.system()->validated())
        throw Error(ErrorCode::unvalidated_system, "ext_mul needs a system that passed system_validate");
    return detail::convolve(u, v);
}

inline ExtElement ext_zero(const SystemRef& sys)
{
    std::vector<Element> c;
    for (int i = 0; i <= sys->order(); ++i)
        c.push_back(sys->level(i).zero());
    return ExtElement(sys, std::move(c));
}

inline ExtElement ext_embed(const SystemRef& sys, const Element& a)
{
    if (!(a.owner() == sys->base()))
        throw Error(ErrorCode::algebra_mismatch, "ext_embed needs an element of the base algebra");
    std::vector<Element> c{a};
    for (int i = 1; i <= sys->order(); ++i)
        c.push_back(sys->level(i).zero());
    return ExtElement(sys, std::move(c));
}

inline ExtElement ext_unit(const SystemRef& sys) { return ext_embed(sys, sys->base().one()); }

inline ExtElement operator+(const ExtElement& u, const ExtElement& v) { return ext_add(u, v); }
inline ExtElement operator-(const ExtElement& u, const ExtElement& v) { return ext_sub(u, v); }
inline ExtElement operator*(const ExtElement& u, const ExtElement& v) { return ext_mul(u, v); }

inline ExtElement sample_ext(Sampler& rng, const SystemRef& sys, std::uint32_t max_degree)
{
    std::vector<Element> c;
    for (int i = 0; i <= sys->order(); ++i)
        c.push_back(rng.element(sys->level(i), max_degree));
    return ExtElement(sys, std::move(c));
}

/// Exact ring-law check on sampled triples. Runs on unvalidated systems too,
/// so a broken phi shows up here as a concrete witness.
inline ValidationReport ring_axiom_suite(const SystemRef& sys, int trials, std::uint64_t seed,
                                         std::uint32_t max_degree = 2)
{
    using detail::convolve;
    Sampler rng(seed);
    const ExtElement one = ext_unit(sys);
    std::string assoc, comm, dist, unit, embed;
    int t = 0;
    for (; t < trials; ++t) {
        ExtElement u = sample_ext(rng, sys, max_degree);
        ExtElement v = sample_ext(rng, sys, max_degree);
        ExtElement w = sample_ext(rng, sys, max_degree);
        const std::string triple = "u=" + u.to_string() + ", v=" + v.to_string() + ", w=" + w.to_string();
        ExtElement uv = convolve(u, v);
        if (assoc.empty()) {
            ExtElement lhs = convolve(uv, w), rhs = convolve(u, convolve(v, w));
            if (lhs != rhs)
                assoc = triple + ": (uv)w=" + lhs.to_string() + " but u(vw)=" + rhs.to_string();
        }
        if (comm.empty()) {
            ExtElement vu = convolve(v, u);
            if (uv != vu)
                comm = "u=" + u.to_string() + ", v=" + v.to_string() + ": uv=" + uv.to_string() + " but vu=" + vu.to_string();
        }
        if (dist.empty()) {
            ExtElement lhs = convolve(u, ext_add(v, w)), rhs = ext_add(uv, convolve(u, w));
            if (lhs != rhs)
                dist = triple + ": u(v+w)=" + lhs.to_string() + " but uv+uw=" + rhs.to_string();
        }
        if (unit.empty()) {
            if (convolve(one, u) != u || convolve(u, one) != u)
                unit = "u=" + u.to_string() + ": 1*u != u";
        }
        if (embed.empty()) {
            const Element& a = u[0];
            const Element& b = v[0];
            if (convolve(ext_embed(sys, a), ext_embed(sys, b)) != ext_embed(sys, a * b))
                embed = "a=" + a.to_string() + ", a'=" + b.to_string() + ": embed(a)embed(a') != embed(aa')";
        }
    }
    ValidationReport report;
    auto record = [&](const char* name, const std::string& w) {
        if (w.empty())
            report.pass(name, static_cast<std::size_t>(t));
        else
            report.fail(name, static_cast<std::size_t>(t), w);
    };
    record("associative", assoc);
    record("commutative", comm);
    record("distributive", dist);
    record("unit", unit);
    record("embedding", embed);
    return report;
}

// ---------------------------------------------------------------------------
// Common constructions

/// All B_i = A, g_i = id, phi_{i,j}(a, a') = lambda(i, j) * a * a'.
inline StructureSystem make_lambda_structure(const Algebra& base, int n, const std::function<Element(int, int)>& lambda,
                                             std::string name = {})
{
    const Morphism id = Morphism::identity(base);
    std::vector<BilinearMap> maps;
    for (int i = 1; i < n; ++i)
        for (int j = 1; i + j <= n; ++j)
            maps.push_back(BilinearMap{i, j, {MulForm{lambda(i, j), id, id}}});
    return StructureSystem(base, std::vector<Algebra>(static_cast<std::size_t>(n), base),
                           std::vector<Morphism>(static_cast<std::size_t>(n), id), std::move(maps), std::move(name));
}

/// B_1 = ... = B_n = target, every g_i = structure, every phi the product on
/// the target. Classical Hasse-Schmidt data lives over this system.
inline StructureSystem make_multiplication_system(const Morphism& structure, int n, std::string name = {})
{
    const Algebra& target = structure.target();
    const Morphism id = Morphism::identity(target);
    std::vector<BilinearMap> maps;
    for (int i = 1; i < n; ++i)
        for (int j = 1; i + j <= n; ++j)
            maps.push_back(BilinearMap{i, j, {MulForm{target.one(), id, id}}});
    return StructureSystem(structure.source(), std::vector<Algebra>(static_cast<std::size_t>(n), target),
                           std::vector<Morphism>(static_cast<std::size_t>(n), structure), std::move(maps), std::move(name));
}

} // namespace mhs
