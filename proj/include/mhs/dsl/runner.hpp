#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mhs/dsl/ast.hpp"
#include "mhs/dsl/printer.hpp"
#include "mhs/jet.hpp"

namespace mhs::dsl {

struct RunOptions {
    std::optional<int> trials;          // replaces the per-command default of 200
    std::optional<std::uint64_t> seed;  // replaces the per-command default of 0
};

/// Outcome of one command. status is "pass" or "fail"; a failure always
/// carries a witness.
struct Record {
    std::string command;
    std::string status;
    std::optional<std::string> witness;
    std::vector<std::pair<std::string, std::string>> values;
    std::vector<CheckResult> checks;

    bool passed() const noexcept { return status == "pass"; }
};

struct RunResult {
    std::vector<Record> records;
    std::vector<Diagnostic> diagnostics;
    int exit_code = 0; // 0 all pass, 1 a command failed, 2 resolution error
};

/// "level0 = [...]; D1(x) = ...; ..." on generators, in declaration order.
inline std::string describe(const DerivationSpec& spec)
{
    const Algebra& a = spec.source();
    std::string s = "level0 = [";
    for (int i = 1; i <= spec.order(); ++i)
        s += (i > 1 ? ", " : "") + spec.level0(i).to_string();
    s += "]";
    for (int i = 1; i <= spec.order(); ++i)
        for (std::size_t v = 0; v < a.variable_count(); ++v)
            s += "; D" + std::to_string(i) + "(" + a.variables()[v] + ") = " + spec.image(i, v).to_string();
    return s;
}

inline std::string describe(const ClassicalSpec& e)
{
    const Algebra& a = e.source();
    std::string s = "level0 = " + e.d0().to_string();
    for (int i = 1; i <= e.order(); ++i)
        for (std::size_t v = 0; v < a.variable_count(); ++v)
            s += "; E" + std::to_string(i) + "(" + a.variables()[v] + ") = " + e.image(i, v).to_string();
    return s;
}

class Runner {
public:
    explicit Runner(RunOptions options = {}) : options_(options) {}

    RunResult run(const Script& script)
    {
        RunResult result;
        for (const auto& item : script.items) {
            try {
                if (const auto* c = std::get_if<Command>(&item)) {
                    result.records.push_back(command(*c));
                    if (!result.records.back().passed())
                        result.exit_code = 1;
                } else {
                    std::visit(
                        [this](const auto& d) {
                            if constexpr (!std::is_same_v<std::decay_t<decltype(d)>, Command>)
                                declare(d);
                        },
                        item);
                }
            } catch (const Resolve& r) {
                result.diagnostics.push_back({Diagnostic::Severity::error, r.loc, r.message, r.witness});
                result.exit_code = 2;
                return result;
            }
        }
        return result;
    }

private:
    using Value = std::variant<Algebra, Morphism, SystemRef, LambdaRef, DerivationSpec, ClassicalSpec>;

    struct Resolve {
        SourceLoc loc;
        std::string message;
        std::optional<std::string> witness;
    };

    [[noreturn]] static void fail(SourceLoc loc, std::string message, std::optional<std::string> witness = std::nullopt)
    {
        throw Resolve{loc, std::move(message), std::move(witness)};
    }

    [[noreturn]] static void fail(SourceLoc loc, const Error& e)
    {
        fail(loc, e.what(), e.witness().empty() ? std::nullopt : std::optional<std::string>(e.witness()));
    }

    // ---- environment

    static const char* kind_name(const Value& v)
    {
        static constexpr const char* names[] = {"algebra", "morphism", "system", "lambda table", "derivation", "classical derivation"};
        return names[v.index()];
    }

    const Value& lookup(const std::string& name, SourceLoc loc) const
    {
        auto it = env_.find(name);
        if (it == env_.end())
            fail(loc, "unknown name '" + name + "'");
        return it->second;
    }

    template <typename T>
    const T& get(const std::string& name, SourceLoc loc, const char* what) const
    {
        const Value& v = lookup(name, loc);
        if (const T* p = std::get_if<T>(&v))
            return *p;
        fail(loc, "'" + name + "' is a " + kind_name(v) + ", expected " + what);
    }

    const Algebra& algebra(const std::string& n, SourceLoc l) const { return get<Algebra>(n, l, "an algebra"); }
    const Morphism& morphism(const std::string& n, SourceLoc l) const { return get<Morphism>(n, l, "a morphism"); }
    const LambdaRef& lambda(const std::string& n, SourceLoc l) const { return get<LambdaRef>(n, l, "a lambda table"); }
    const DerivationSpec& derivation(const std::string& n, SourceLoc l) const { return get<DerivationSpec>(n, l, "a derivation"); }
    const ClassicalSpec& classical(const std::string& n, SourceLoc l) const
    {
        return get<ClassicalSpec>(n, l, "a classical derivation");
    }

    // A lambda table stands for its scalar structure system.
    SystemRef system(const std::string& n, SourceLoc l) const
    {
        const Value& v = lookup(n, l);
        if (const auto* s = std::get_if<SystemRef>(&v))
            return *s;
        if (const auto* t = std::get_if<LambdaRef>(&v))
            return (*t)->structure();
        fail(l, "'" + n + "' is a " + kind_name(v) + ", expected a system or lambda table");
    }

    LambdaRef lambda_of(const SystemRef& sys) const
    {
        for (const auto& [name, v] : env_)
            if (const auto* t = std::get_if<LambdaRef>(&v); t && (*t)->structure() == sys)
                return *t;
        return nullptr;
    }

    std::vector<Morphism> morphisms(const NameList& names, SourceLoc l) const
    {
        std::vector<Morphism> out;
        for (const auto& n : names)
            out.push_back(morphism(n, l));
        return out;
    }

    void define(const std::string& name, Value v, SourceLoc loc)
    {
        if (env_.count(name))
            fail(loc, "'" + name + "' is already declared");
        env_.emplace(name, std::move(v));
    }

    // ---- expressions

    static std::optional<Rational> constant_of(const Expr& e)
    {
        auto sub = [&](std::size_t k) { return constant_of(e.args[k]); };
        switch (e.kind) {
        case Expr::Kind::number:
            return e.value;
        case Expr::Kind::name:
        case Expr::Kind::pair:
            return std::nullopt;
        case Expr::Kind::neg:
            if (auto a = sub(0))
                return Rational(-*a);
            return std::nullopt;
        case Expr::Kind::pow:
            if (auto a = sub(0)) {
                Rational r = 1;
                for (std::uint32_t k = 0; k < e.exponent; ++k)
                    r *= *a;
                return r;
            }
            return std::nullopt;
        default:
            break;
        }
        auto a = sub(0), b = sub(1);
        if (!a || !b)
            return std::nullopt;
        switch (e.kind) {
        case Expr::Kind::add:
            return Rational(*a + *b);
        case Expr::Kind::sub:
            return Rational(*a - *b);
        case Expr::Kind::mul:
            return Rational(*a * *b);
        default:
            if (*b == 0)
                return std::nullopt;
            return Rational(*a / *b);
        }
    }

    static Rational divisor(const Expr& e)
    {
        auto d = constant_of(e.args[1]);
        if (!d || *d == 0)
            fail(e.loc, "can only divide by a nonzero rational constant");
        return *d;
    }

    static Element element(const Expr& e, const Algebra& alg)
    {
        switch (e.kind) {
        case Expr::Kind::number:
            return alg.constant(e.value);
        case Expr::Kind::name:
            if (alg.is_product())
                fail(e.loc, "elements of " + alg.display_name() + " are pairs (a, b); '" + e.name + "' is not one");
            for (std::size_t v = 0; v < alg.variable_count(); ++v)
                if (alg.variables()[v] == e.name)
                    return alg.variable(v);
            fail(e.loc, "UnknownVariable: '" + e.name + "' is not a variable of " + alg.display_name());
        case Expr::Kind::pair:
            if (!alg.is_product())
                fail(e.loc, "pair given but " + alg.display_name() + " is not a product");
            return make_pair(alg, element(e.args[0], alg.left()), element(e.args[1], alg.right()));
        case Expr::Kind::add:
            return element(e.args[0], alg) + element(e.args[1], alg);
        case Expr::Kind::sub:
            return element(e.args[0], alg) - element(e.args[1], alg);
        case Expr::Kind::mul:
            return element(e.args[0], alg) * element(e.args[1], alg);
        case Expr::Kind::div: {
            const Rational d = divisor(e);
            return Rational(1 / d) * element(e.args[0], alg);
        }
        case Expr::Kind::neg:
            return -element(e.args[0], alg);
        case Expr::Kind::pow:
            return pow(element(e.args[0], alg), e.exponent);
        }
        fail(e.loc, "malformed expression");
    }

    // Names t1..tn are jet variables unless A declares a variable of that name.
    static JetPoly jet(const Expr& e, const Algebra& alg, int n)
    {
        switch (e.kind) {
        case Expr::Kind::number:
            return JetPoly::constant(n, alg.constant(e.value));
        case Expr::Kind::name: {
            for (std::size_t v = 0; v < alg.variable_count(); ++v)
                if (alg.variables()[v] == e.name)
                    return JetPoly::constant(n, alg.variable(v));
            if (e.name.size() > 1 && e.name[0] == 't' &&
                e.name.find_first_not_of("0123456789", 1) == std::string::npos && e.name.size() < 6) {
                const int k = std::stoi(e.name.substr(1));
                if (k < 1 || k > n)
                    fail(e.loc, "LevelOutOfRange: '" + e.name + "' needs 1 <= index <= " + std::to_string(n));
                return JetPoly::t(alg, n, k);
            }
            fail(e.loc, "UnknownVariable: '" + e.name + "' is neither a variable of " + alg.display_name() +
                            " nor t1..t" + std::to_string(n));
        }
        case Expr::Kind::pair:
            fail(e.loc, "pairs are not allowed in t-polynomials");
        case Expr::Kind::add:
            return jet(e.args[0], alg, n) + jet(e.args[1], alg, n);
        case Expr::Kind::sub:
            return jet(e.args[0], alg, n) - jet(e.args[1], alg, n);
        case Expr::Kind::mul:
            return jet(e.args[0], alg, n) * jet(e.args[1], alg, n);
        case Expr::Kind::div: {
            const Rational d = divisor(e);
            return Rational(1 / d) * jet(e.args[0], alg, n);
        }
        case Expr::Kind::neg:
            return -jet(e.args[0], alg, n);
        case Expr::Kind::pow: {
            JetPoly r = JetPoly::constant(n, alg.one());
            const JetPoly b = jet(e.args[0], alg, n);
            for (std::uint32_t k = 0; k < e.exponent; ++k)
                r = r * b;
            return r;
        }
        }
        fail(e.loc, "malformed expression");
    }

    // ---- declarations

    void declare(const AlgebraDecl& d)
    {
        try {
            const Algebra cover = Algebra::free(d.variables);
            std::vector<Monomial> gens;
            for (const auto& g : d.ideal) {
                const Element m = element(g, cover);
                if (m.poly().size() != 1)
                    fail(g.loc, "ideal generators must be monomials, got " + print(g));
                gens.push_back(m.poly().terms().begin()->first);
            }
            define(d.name, Algebra::quotient(d.variables, gens, d.name), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    void declare(const MorphismDecl& d)
    {
        const Algebra& src = algebra(d.source, d.loc);
        const Algebra& tgt = algebra(d.target, d.loc);
        if (src.is_product())
            fail(d.loc, "morphisms out of a product are not supported");
        std::vector<std::optional<Element>> images(src.variable_count());
        for (const auto& [var, value] : d.images) {
            auto it = std::find(src.variables().begin(), src.variables().end(), var);
            if (it == src.variables().end())
                fail(value.loc, "UnknownVariable: '" + var + "' is not a variable of " + src.display_name());
            auto& slot = images[static_cast<std::size_t>(it - src.variables().begin())];
            if (slot)
                fail(value.loc, "image of '" + var + "' given twice");
            slot = element(value, tgt);
        }
        std::vector<Element> imgs;
        for (std::size_t v = 0; v < images.size(); ++v) {
            if (!images[v])
                fail(d.loc, "morphism '" + d.name + "' gives no image for '" + src.variables()[v] + "'");
            imgs.push_back(*images[v]);
        }
        try {
            Morphism f(src, tgt, std::move(imgs), d.name);
            check_morphism(f, d.loc);
            define(d.name, std::move(f), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    static void check_morphism(const Morphism& f, SourceLoc loc)
    {
        const auto report = morphism_validate(f);
        if (const auto* bad = report.first_failure())
            fail(loc, "morphism '" + f.name() + "' is not well defined: it must " + bad->name, bad->detail);
    }

    void declare(const LambdaDecl& d)
    {
        const Algebra& base = algebra(d.over, d.loc);
        std::optional<Element> fallback;
        LambdaSystem::Table table;
        for (const auto& e : d.entries) {
            const Element v = element(e.value, base);
            if (e.fallback) {
                if (fallback)
                    fail(e.value.loc, "default entry given twice");
                fallback = v;
                continue;
            }
            const auto key = std::minmax(e.i, e.j);
            if (table.count(key))
                fail(e.value.loc, "lambda(" + std::to_string(key.first) + "," + std::to_string(key.second) + ") given twice");
            table.emplace(key, v);
        }
        if (fallback)
            for (int i = 1; i < d.n; ++i)
                for (int j = i; i + j <= d.n; ++j)
                    table.emplace(std::make_pair(i, j), *fallback);
        try {
            define(d.name, LambdaSystem::make(base, d.n, table, d.name), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    // Declared systems are certified by a fixed sampled validation so that
    // hom-level commands may use them; failures leave them unvalidated.
    static SystemRef admit(StructureSystem sys)
    {
        if (system_validate(sys, 20, 0, 2).ok())
            return mhs::detail::SystemAccess::with_validation(std::move(sys));
        return unvalidated(std::move(sys));
    }

    void declare(const SystemDecl& d)
    {
        const Algebra& base = algebra(d.base, d.loc);
        if (static_cast<int>(d.levels.size()) != d.n || static_cast<int>(d.structural.size()) != d.n)
            fail(d.loc, "system '" + d.name + "' needs exactly n = " + std::to_string(d.n) + " levels and structural maps");
        std::vector<Algebra> levels;
        for (const auto& l : d.levels)
            levels.push_back(algebra(l, d.loc));
        const auto structural = morphisms(d.structural, d.loc);
        std::vector<BilinearMap> maps;
        for (const auto& p : d.phis) {
            if (p.i < 1 || p.j < 1 || p.i + p.j > d.n)
                fail(d.loc, "LevelOutOfRange: phi(" + std::to_string(p.i) + "," + std::to_string(p.j) +
                                ") needs 1 <= i,j and i+j <= " + std::to_string(d.n));
            BilinearMap m{p.i, p.j, {}};
            const Algebra& target = levels[static_cast<std::size_t>(p.i + p.j - 1)];
            for (const auto& f : p.forms)
                m.forms.push_back({element(f.scale, target), morphism(f.left, d.loc), morphism(f.right, d.loc)});
            maps.push_back(std::move(m));
        }
        try {
            define(d.name, admit(StructureSystem(base, levels, structural, maps, d.name)), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    std::vector<std::vector<Element>> images(const std::vector<ImageDecl>& decls, const Algebra& source, int n,
                                             const std::function<Algebra(int)>& level, SourceLoc loc) const
    {
        std::vector<std::vector<Element>> out;
        std::vector<std::vector<bool>> seen;
        for (int i = 1; i <= n; ++i) {
            out.emplace_back(source.variable_count(), level(i).zero());
            seen.emplace_back(source.variable_count(), false);
        }
        for (const auto& im : decls) {
            if (im.level < 1 || im.level > n)
                fail(im.value.loc, "LevelOutOfRange: level " + std::to_string(im.level) + " outside 1.." + std::to_string(n));
            auto it = std::find(source.variables().begin(), source.variables().end(), im.variable);
            if (it == source.variables().end())
                fail(im.value.loc, "UnknownVariable: '" + im.variable + "' is not a variable of " + source.display_name());
            const auto v = static_cast<std::size_t>(it - source.variables().begin());
            const auto i = static_cast<std::size_t>(im.level - 1);
            if (seen[i][v])
                fail(im.value.loc, "image at level " + std::to_string(im.level) + " of '" + im.variable + "' given twice");
            seen[i][v] = true;
            out[i][v] = element(im.value, level(im.level));
        }
        (void)loc;
        return out;
    }

    void declare(const DerivationDecl& d)
    {
        const SystemRef sys = system(d.over, d.loc);
        const int n = sys->order();
        std::vector<Morphism> level0 = sys->structural_maps();
        if (d.level0) {
            if (static_cast<int>(d.level0->size()) != n)
                fail(d.loc, "level0 needs " + std::to_string(n) + " morphisms");
            level0 = morphisms(*d.level0, d.loc);
        }
        auto imgs = images(d.images, sys->base(), n, [&](int i) { return sys->level(i); }, d.loc);
        try {
            define(d.name, DerivationSpec(sys, std::move(level0), std::move(imgs), d.name), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    void declare(const ClassicalDecl& d)
    {
        const Algebra& src = algebra(d.source, d.loc);
        const Algebra& tgt = algebra(d.target, d.loc);
        const Morphism& d0 = morphism(d.level0, d.loc);
        if (!(d0.source() == src) || !(d0.target() == tgt))
            fail(d.loc, "level0 '" + d.level0 + "' must map " + d.source + " -> " + d.target);
        if (d.n < 1)
            fail(d.loc, "order must be >= 1");
        auto imgs = images(d.images, src, d.n, [&](int) { return tgt; }, d.loc);
        try {
            define(d.name, ClassicalSpec(d0, std::move(imgs), d.name), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    // ---- call arguments

    template <typename Node>
    static const NamedArg* named(const Node& c, std::string_view key)
    {
        for (const auto& a : c.named)
            if (a.key == key)
                return &a;
        return nullptr;
    }

    template <typename Node>
    static void allow(const Node& c, std::size_t positional, std::initializer_list<std::string_view> keys)
    {
        if (c.positional.size() != positional)
            fail(c.loc, "expected " + std::to_string(positional) + " positional argument(s), got " +
                            std::to_string(c.positional.size()));
        for (const auto& a : c.named)
            if (std::find(keys.begin(), keys.end(), a.key) == keys.end())
                fail(a.loc, "unknown argument '" + a.key + "'");
    }

    template <typename Node>
    static const Expr* expr_arg(const Node& c, std::string_view key, bool required)
    {
        const NamedArg* a = named(c, key);
        if (!a) {
            if (required)
                fail(c.loc, "missing argument '" + std::string(key) + "='");
            return nullptr;
        }
        const Expr* e = std::get_if<Expr>(&a->value);
        if (!e)
            fail(a->loc, "argument '" + a->key + "' must be an expression");
        return e;
    }

    template <typename Node>
    static std::optional<std::int64_t> int_arg(const Node& c, std::string_view key, bool required = false)
    {
        const Expr* e = expr_arg(c, key, required);
        if (!e)
            return std::nullopt;
        if (e->kind != Expr::Kind::number || e->value.get_den() != 1 || !e->value.get_num().fits_slong_p())
            fail(e->loc, "argument '" + std::string(key) + "' must be a non-negative integer");
        return e->value.get_num().get_si();
    }

    template <typename Node>
    static std::string name_arg(const Node& c, std::string_view key)
    {
        const Expr* e = expr_arg(c, key, true);
        if (e->kind != Expr::Kind::name)
            fail(e->loc, "argument '" + std::string(key) + "' must be a name");
        return e->name;
    }

    template <typename Node>
    static NameList list_arg(const Node& c, std::string_view key)
    {
        const NamedArg* a = named(c, key);
        if (!a)
            fail(c.loc, "missing argument '" + std::string(key) + "=[...]'");
        const NameList* l = std::get_if<NameList>(&a->value);
        if (!l)
            fail(a->loc, "argument '" + a->key + "' must be a list [a, b, ...]");
        return *l;
    }

    ConnectingChain chain(const Algebra& first, const NameList& steps, SourceLoc loc) const
    {
        try {
            return ConnectingChain::from_steps(first, morphisms(steps, loc));
        } catch (const Error& e) {
            fail(loc, e);
        }
    }

    int trials_of(const Command& c) const
    {
        if (auto t = int_arg(c, "trials")) {
            if (*t < 1 || *t > 100000)
                fail(c.loc, "trials must lie in 1..100000");
            return static_cast<int>(*t);
        }
        return options_.trials.value_or(200);
    }

    std::uint64_t seed_of(const Command& c) const
    {
        if (auto s = int_arg(c, "seed"))
            return static_cast<std::uint64_t>(*s);
        return options_.seed.value_or(0);
    }

    void declare(const CallDecl& d)
    {
        try {
            define(d.name, call(d), d.loc);
        } catch (const Error& e) {
            fail(d.loc, e);
        }
    }

    Value call(const CallDecl& d)
    {
        const std::string f = d.kind + "." + d.function;
        if (f == "algebra.product") {
            allow(d, 2, {});
            return Algebra::product(algebra(d.positional[0], d.loc), algebra(d.positional[1], d.loc), d.name);
        }
        if (f == "morphism.identity") {
            allow(d, 1, {});
            return Morphism::identity(algebra(d.positional[0], d.loc)).renamed(d.name);
        }
        if (f == "morphism.compose") {
            allow(d, 2, {});
            return morphism_compose(morphism(d.positional[0], d.loc), morphism(d.positional[1], d.loc)).renamed(d.name);
        }
        if (f == "system.connecting") {
            allow(d, 0, {"base", "chain", "g1"});
            const Morphism& g1 = morphism(name_arg(d, "g1"), d.loc);
            auto ch = chain(g1.target(), list_arg(d, "chain"), d.loc);
            return admit(connecting_system(algebra(name_arg(d, "base"), d.loc), ch, g1));
        }
        if (f == "system.multiplication") {
            allow(d, 1, {"n"});
            const auto n = int_arg(d, "n", true);
            if (*n < 1 || *n > 64)
                fail(d.loc, "order must lie in 1..64");
            return admit(make_multiplication_system(morphism(d.positional[0], d.loc), static_cast<int>(*n), d.name));
        }
        if (f == "derivation.alpha1") {
            allow(d, 1, {"chain"});
            const ClassicalSpec& e = classical(d.positional[0], d.loc);
            return alpha1(e, chain(e.target(), list_arg(d, "chain"), d.loc)).renamed(d.name);
        }
        if (f == "derivation.psi_push") {
            allow(d, 1, {"along", "into", "trials", "seed"});
            const auto t = int_arg(d, "trials");
            const auto s = int_arg(d, "seed");
            return psi_push(derivation(d.positional[0], d.loc), morphisms(list_arg(d, "along"), d.loc),
                            system(name_arg(d, "into"), d.loc), t ? static_cast<int>(*t) : options_.trials.value_or(200),
                            s ? static_cast<std::uint64_t>(*s) : options_.seed.value_or(0))
                .renamed(d.name);
        }
        if (f == "classical.beta") {
            allow(d, 1, {"chain", "j"});
            const DerivationSpec& spec = derivation(d.positional[0], d.loc);
            return beta_j(spec, chain(spec.system()->level(1), list_arg(d, "chain"), d.loc),
                          static_cast<int>(*int_arg(d, "j", true)));
        }
        if (f == "classical.phi_push") {
            allow(d, 2, {"j"});
            return phi_push(classical(d.positional[0], d.loc), morphism(d.positional[1], d.loc),
                            static_cast<int>(*int_arg(d, "j", true)));
        }
        fail(d.loc, "unknown constructor '" + d.function + "' for " + d.kind);
    }

    // ---- commands

    Record command(const Command& c)
    {
        Record r{print(c), "pass", std::nullopt, {}, {}};
        const std::string& v = c.verb;
        try {
            if (v == "verify")
                verify(c, r);
            else if (v == "eval")
                eval(c, r);
            else if (v == "reduce")
                reduce_cmd(c, r);
            else if (v == "diagram-check")
                diagram(c, r);
            else if (v == "push")
                push(c, r);
            else if (v == "witness")
                witness(c, r);
            else if (v == "equal" || v == "distinct")
                equality(c, r, v == "equal");
            else if (v == "roundtrip")
                roundtrip(c, r);
            else if (v == "relations")
                relations(c, r);
            else if (v == "jet")
                jet_cmd(c, r);
            else
                fail(c.loc, "unknown command '" + v + "'");
        } catch (const Error& e) {
            fail(c.loc, e);
        }
        return r;
    }

    static void report_into(Record& r, const ValidationReport& rep)
    {
        r.checks = rep.checks;
        if (const auto* bad = rep.first_failure()) {
            r.status = "fail";
            r.witness = bad->name + ": " + bad->detail;
        }
    }

    static void mismatch(Record& r, std::string witness)
    {
        r.status = "fail";
        r.witness = std::move(witness);
    }

    void verify(const Command& c, Record& r)
    {
        allow(c, 1, {"trials", "seed"});
        const int trials = trials_of(c);
        const std::uint64_t seed = seed_of(c);
        const Value& target = lookup(c.positional[0], c.loc);
        ValidationReport rep;
        if (const auto* f = std::get_if<Morphism>(&target)) {
            rep = morphism_validate(*f);
        } else if (const auto* s = std::get_if<SystemRef>(&target)) {
            rep = system_validate(**s, trials, seed);
            rep.merge(ring_axiom_suite(*s, trials, seed), "ring ");
        } else if (const auto* l = std::get_if<LambdaRef>(&target)) {
            rep = verify_lambda(*l, trials, seed);
        } else if (const auto* d = std::get_if<DerivationSpec>(&target)) {
            rep = hs_verify(*d, trials, seed);
        } else if (const auto* e = std::get_if<ClassicalSpec>(&target)) {
            rep = classical_verify(*e, trials, seed);
        } else {
            fail(c.loc, "cannot verify an algebra");
        }
        report_into(r, rep);
    }

    static ValidationReport verify_lambda(const LambdaRef& l, int trials, std::uint64_t seed)
    {
        ValidationReport rep;
        const std::string bad = l->cocycle_failure();
        if (bad.empty())
            rep.pass("cocycle", 1);
        else
            rep.fail("cocycle", 1, bad);
        rep.merge(system_validate(*l->structure(), trials, seed), "system ");

        // monomial_scalar against stepwise rewriting on every t-monomial of weight <= n
        const int n = l->order();
        std::size_t count = 0;
        std::string scalar_bad;
        std::vector<std::uint32_t> alpha(static_cast<std::size_t>(n), 0);
        std::function<void(int, int)> walk = [&](int idx, int weight) {
            if (!scalar_bad.empty())
                return;
            if (idx > n) {
                const Monomial m{alpha};
                std::vector<std::string> names;
                for (int k = 1; k <= n; ++k)
                    names.push_back("t" + std::to_string(k));
                ++count;
                auto a = monomial_scalar(m, *l);
                auto b = rewrite_monomial(m, *l);
                if (a != b)
                    scalar_bad = "t-exponents " + Poly::term(m, 1).to_string(names) + ": closed form " +
                                 (a ? a->first.to_string() + "*t" + std::to_string(a->second) : "0") + " but rewriting " +
                                 (b ? b->first.to_string() + "*t" + std::to_string(b->second) : "0");
                return;
            }
            for (int e = 0; weight + idx * e <= n; ++e) {
                alpha[static_cast<std::size_t>(idx - 1)] = static_cast<std::uint32_t>(e);
                walk(idx + 1, weight + idx * e);
            }
            alpha[static_cast<std::size_t>(idx - 1)] = 0;
        };
        walk(1, 0);
        if (scalar_bad.empty())
            rep.pass("monomial-scalar", count);
        else
            rep.fail("monomial-scalar", count, scalar_bad);

        Sampler rng(seed);
        std::string iso_bad;
        const bool associative = bad.empty();
        for (int t = 0; t < trials && iso_bad.empty(); ++t) {
            const ExtElement u = sample_ext(rng, l->structure(), 2);
            const ExtElement v = sample_ext(rng, l->structure(), 2);
            if (iso_psi(iso_phi(l, u)) != u)
                iso_bad = "iso_psi(iso_phi(u)) != u for u = " + u.to_string();
            else if (associative && iso_phi(l, ext_mul(u, v)) != iso_phi(l, u) * iso_phi(l, v))
                iso_bad = "u=" + u.to_string() + ", v=" + v.to_string() + ": iso_phi(u*v) = " +
                          iso_phi(l, ext_mul(u, v)).to_string() + " but iso_phi(u)*iso_phi(v) = " +
                          (iso_phi(l, u) * iso_phi(l, v)).to_string();
            else if (associative && l->all_one() && !remark_lambda_one(l, u, v).ok())
                iso_bad = remark_lambda_one(l, u, v).first_failure()->detail;
        }
        if (!associative)
            rep.fail("isomorphism", 0, "lambda table is not a cocycle, so A x_n A is not associative");
        else if (iso_bad.empty())
            rep.pass("isomorphism", static_cast<std::size_t>(trials));
        else
            rep.fail("isomorphism", static_cast<std::size_t>(trials), iso_bad);
        return rep;
    }

    void eval(const Command& c, Record& r)
    {
        allow(c, 1, {"level", "of", "expect"});
        const Value& target = lookup(c.positional[0], c.loc);
        const Expr* of = expr_arg(c, "of", true);
        const Expr* expect = expr_arg(c, "expect", false);
        Element value;
        Algebra codomain;
        std::string label = c.positional[0];
        if (const auto* f = std::get_if<Morphism>(&target)) {
            value = (*f)(element(*of, f->source()));
            codomain = f->target();
        } else {
            const auto level = int_arg(c, "level", true);
            std::optional<DerivationSpec> found;
            if (const auto* d = std::get_if<DerivationSpec>(&target))
                found = *d;
            else if (const auto* e = std::get_if<ClassicalSpec>(&target))
                found = as_multi(*e);
            else
                fail(c.loc, "cannot evaluate a " + std::string(kind_name(target)));
            const DerivationSpec& spec = *found;
            if (*level < 0 || *level > spec.order())
                fail(c.loc, "LevelOutOfRange: level " + std::to_string(*level) + " outside 0.." + std::to_string(spec.order()));
            const int i = static_cast<int>(*level);
            value = hs_eval(spec, i, element(*of, spec.source()));
            codomain = i == 0 ? spec.source() : spec.system()->level(i);
            label += "_" + std::to_string(i);
        }
        r.values.emplace_back("value", value.to_string());
        if (expect) {
            const Element want = element(*expect, codomain);
            if (want != value)
                mismatch(r, label + "(" + print(*of) + ") = " + value.to_string() + ", expected " + want.to_string());
        }
    }

    static std::string coefficient_list(const TruncatedPoly& f)
    {
        std::string s = "[";
        for (std::size_t k = 0; k < f.coeffs().size(); ++k)
            s += (k ? "; " : "") + f.coeffs()[k].to_string();
        return s + "]";
    }

    void reduce_cmd(const Command& c, Record& r)
    {
        allow(c, 1, {"of", "expect", "orders", "seed"});
        const LambdaRef& l = lambda(c.positional[0], c.loc);
        const Expr* of = expr_arg(c, "of", true);
        const JetPoly f = jet(*of, l->base(), l->order());
        const TruncatedPoly red = reduce(f, l);
        r.values.emplace_back("canonical", red.to_string());
        r.values.emplace_back("coefficients", coefficient_list(red));
        if (const auto orders = int_arg(c, "orders")) {
            Sampler rng(seed_of(c));
            for (std::int64_t k = 0; k < *orders; ++k) {
                const TruncatedPoly other = reduce(f, l, &rng);
                if (other != red) {
                    mismatch(r, "random rewrite order " + std::to_string(k) + " gives " + other.to_string() + ", canonical " +
                                    red.to_string());
                    return;
                }
            }
            r.checks.push_back({"confluence", true, static_cast<std::size_t>(*orders), {}});
        }
        if (const Expr* expect = expr_arg(c, "expect", false)) {
            const TruncatedPoly want = reduce(jet(*expect, l->base(), l->order()), l);
            if (want != red)
                mismatch(r, print(*of) + " reduces to " + red.to_string() + ", expected " + want.to_string());
        }
    }

    void diagram(const Command& c, Record& r)
    {
        allow(c, 1, {"chain", "j", "trials", "seed"});
        const ClassicalSpec& e = classical(c.positional[0], c.loc);
        const ConnectingChain ch = chain(e.target(), list_arg(c, "chain"), c.loc);
        const DerivationSpec a = alpha1(e, ch);
        r.values.emplace_back("alpha1", describe(a));
        ValidationReport alpha_report = hs_verify(a, trials_of(c), seed_of(c));
        r.checks = alpha_report.checks;
        if (const auto* bad = alpha_report.first_failure()) {
            mismatch(r, "alpha1 output fails " + bad->name + ": " + bad->detail);
            return;
        }
        int lo = 1, hi = e.order();
        if (const auto j = int_arg(c, "j")) {
            if (*j < 1 || *j > e.order())
                fail(c.loc, "LevelOutOfRange: j must lie in 1.." + std::to_string(e.order()));
            lo = hi = static_cast<int>(*j);
        }
        for (int j = lo; j <= hi; ++j) {
            const ClassicalSpec lhs = beta_j(a, ch, j);
            const ClassicalSpec rhs = phi_push(e, ch.map(1, j), j);
            r.values.emplace_back("beta" + std::to_string(j), describe(lhs));
            const bool same = lhs == rhs;
            r.checks.push_back({"beta" + std::to_string(j) + " o alpha1 = phi1" + std::to_string(j) + "*", same, 1,
                                same ? "" : describe(lhs) + " vs " + describe(rhs)});
            if (!same && r.passed())
                mismatch(r, "j=" + std::to_string(j) + ": beta_j(alpha1(E)) = " + describe(lhs) + " but phi_push = " + describe(rhs));
        }
    }

    void push(const Command& c, Record& r)
    {
        allow(c, 1, {"along", "into", "trials", "seed"});
        const DerivationSpec& spec = derivation(c.positional[0], c.loc);
        const auto psis = morphisms(list_arg(c, "along"), c.loc);
        const SystemRef into = system(name_arg(c, "into"), c.loc);
        const int trials = trials_of(c);
        const std::uint64_t seed = seed_of(c);
        std::optional<DerivationSpec> out;
        try {
            out = psi_push(spec, psis, into, trials, seed);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::square_violation)
                throw;
            mismatch(r, std::string(e.what()) + (e.witness().empty() ? "" : " [" + e.witness() + "]"));
            return;
        }
        r.values.emplace_back("pushed", describe(*out));
        ValidationReport rep = hs_verify(*out, trials, seed);
        Sampler rng(seed);
        std::string bad;
        for (int t = 0; t < trials && bad.empty(); ++t) {
            const Element f = rng.element(spec.source(), 3);
            for (int i = 1; i <= spec.order() && bad.empty(); ++i) {
                const Element lhs = hs_eval(*out, i, f);
                const Element rhs = psis[static_cast<std::size_t>(i - 1)](hs_eval(spec, i, f));
                if (lhs != rhs)
                    bad = "f=" + f.to_string() + ", level " + std::to_string(i) + ": pushed gives " + lhs.to_string() +
                          " but psi(D(f)) = " + rhs.to_string();
            }
        }
        if (bad.empty())
            rep.pass("commutes-with-psi", static_cast<std::size_t>(trials));
        else
            rep.fail("commutes-with-psi", static_cast<std::size_t>(trials), bad);
        report_into(r, rep);
    }

    void witness(const Command& c, Record& r)
    {
        allow(c, 1, {"trials", "seed"});
        const std::string& which = c.positional[0];
        ValidationReport rep;
        if (which == "ej2")
            rep = witness_alpha1_not_surjective(trials_of(c), seed_of(c));
        else if (which == "ej4")
            rep = witness_beta_not_surjective(trials_of(c), seed_of(c));
        else
            fail(c.loc, "unknown witness scenario '" + which + "' (expected ej2 or ej4)");
        if (const auto* cert = rep.find("obstruction"))
            r.values.emplace_back("certificate", cert->detail);
        report_into(r, rep);
    }

    void equality(const Command& c, Record& r, bool want_equal)
    {
        allow(c, 2, {});
        const Value& a = lookup(c.positional[0], c.loc);
        const Value& b = lookup(c.positional[1], c.loc);
        if (a.index() != b.index())
            fail(c.loc, "cannot compare a " + std::string(kind_name(a)) + " with a " + kind_name(b));
        bool same = false;
        std::string da, db;
        if (const auto* x = std::get_if<DerivationSpec>(&a)) {
            const auto& y = std::get<DerivationSpec>(b);
            same = *x == y;
            da = describe(*x);
            db = describe(y);
        } else if (const auto* x = std::get_if<ClassicalSpec>(&a)) {
            const auto& y = std::get<ClassicalSpec>(b);
            same = *x == y;
            da = describe(*x);
            db = describe(y);
        } else if (const auto* x = std::get_if<Morphism>(&a)) {
            const auto& y = std::get<Morphism>(b);
            same = *x == y;
            da = x->to_string();
            db = y.to_string();
        } else if (const auto* x = std::get_if<Algebra>(&a)) {
            const auto& y = std::get<Algebra>(b);
            same = *x == y;
            da = x->description();
            db = y.description();
        } else if (const auto* x = std::get_if<LambdaRef>(&a)) {
            const auto& y = std::get<LambdaRef>(b);
            same = (*x)->base() == y->base() && (*x)->order() == y->order() && (*x)->table() == y->table();
            da = c.positional[0];
            db = c.positional[1];
        } else {
            same = std::get<SystemRef>(a) == std::get<SystemRef>(b);
            da = c.positional[0];
            db = c.positional[1];
        }
        r.values.emplace_back(c.positional[0], da);
        r.values.emplace_back(c.positional[1], db);
        if (same != want_equal)
            mismatch(r, c.positional[0] + (same ? " equals " : " differs from ") + c.positional[1] + ": " + da +
                            (same ? "" : " vs " + db));
    }

    void roundtrip(const Command& c, Record& r)
    {
        allow(c, 1, {"trials", "seed"});
        const DerivationSpec& spec = derivation(c.positional[0], c.loc);
        try {
            const HomEvaluator hom = to_hom(spec, trials_of(c), seed_of(c));
            const auto images = hom.generator_images();
            for (std::size_t v = 0; v < images.size(); ++v)
                r.values.emplace_back("Phi(" + spec.source().variables()[v] + ")", images[v].to_string());
            const DerivationSpec back = from_hom(spec.system(), images);
            if (!(back == spec))
                mismatch(r, "from_hom(to_hom(D)) = " + describe(back) + " but D = " + describe(spec));
        } catch (const Error& e) {
            mismatch(r, std::string(e.what()) + (e.witness().empty() ? "" : " [" + e.witness() + "]"));
        }
    }

    static std::string strip_latex(std::string s)
    {
        for (const char* token : {"\\langle", "\\rangle", "$"})
            for (std::size_t p; (p = s.find(token)) != std::string::npos;)
                s.erase(p, std::char_traits<char>::length(token));
        s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
        return s;
    }

    void relations(const Command& c, Record& r)
    {
        allow(c, 1, {"expect"});
        const LambdaRef& l = lambda(c.positional[0], c.loc);
        const std::string text = to_latex(jn_relations(*l));
        r.values.emplace_back("relations", text);
        if (const NamedArg* a = named(c, "expect")) {
            const std::string* want = std::get_if<std::string>(&a->value);
            if (!want)
                fail(a->loc, "argument 'expect' must be a string");
            if (strip_latex(*want) != strip_latex(text))
                mismatch(r, "J_" + std::to_string(l->order()) + " = " + text + ", expected " + *want);
        }
    }

    void jet_cmd(const Command& c, Record& r)
    {
        allow(c, 1, {"of", "expect", "trials", "seed"});
        const Value& target = lookup(c.positional[0], c.loc);
        const Expr* of = expr_arg(c, "of", true);
        std::optional<TruncatedPoly> value;
        if (const auto* e = std::get_if<ClassicalSpec>(&target)) {
            value = jet_hom_eval(*e, element(*of, e->source()));
        } else if (const auto* d = std::get_if<DerivationSpec>(&target)) {
            const LambdaRef l = lambda_of(d->system());
            if (!l)
                fail(c.loc, "'" + c.positional[0] + "' must be declared over a lambda table");
            try {
                value = corollary_hom(*d, l, trials_of(c), seed_of(c))(element(*of, d->source()));
            } catch (const Error& e) {
                mismatch(r, std::string(e.what()) + (e.witness().empty() ? "" : " [" + e.witness() + "]"));
                return;
            }
        } else {
            fail(c.loc, "jet needs a classical derivation or a derivation over a lambda table");
        }
        r.values.emplace_back("jet", value->to_string());
        if (const Expr* expect = expr_arg(c, "expect", false)) {
            const LambdaRef& l = value->system();
            const TruncatedPoly want = reduce(jet(*expect, l->base(), l->order()), l);
            if (want != *value)
                mismatch(r, "jet(" + print(*of) + ") = " + value->to_string() + ", expected " + want.to_string());
        }
    }

    RunOptions options_;
    std::map<std::string, Value> env_;
};

inline RunResult run(const Script& script, RunOptions options = {}) { return Runner(options).run(script); }

} // namespace mhs::dsl
