#pragma once

#include <string>
#include <variant>

#include "mhs/dsl/ast.hpp"

namespace mhs::dsl {

namespace detail {

// Binding strength: sums 1, products 2, negation 3, powers 4, atoms 5.
inline int precedence(const Expr& e)
{
    switch (e.kind) {
    case Expr::Kind::add:
    case Expr::Kind::sub:
        return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div:
        return 2;
    case Expr::Kind::neg:
        return 3;
    case Expr::Kind::pow:
        return 4;
    default:
        return 5;
    }
}

} // namespace detail

/// Minimal parenthesization that reparses to the same tree.
inline std::string print(const Expr& e)
{
    auto wrap = [](const Expr& sub, bool paren) { return paren ? "(" + print(sub) + ")" : print(sub); };
    const int p = detail::precedence(e);
    switch (e.kind) {
    case Expr::Kind::number:
        return e.value.get_str();
    case Expr::Kind::name:
        return e.name;
    case Expr::Kind::add:
    case Expr::Kind::sub:
        return wrap(e.args[0], detail::precedence(e.args[0]) < p) + (e.kind == Expr::Kind::add ? " + " : " - ") +
               wrap(e.args[1], detail::precedence(e.args[1]) <= p);
    case Expr::Kind::mul:
    case Expr::Kind::div:
        return wrap(e.args[0], detail::precedence(e.args[0]) < p) + (e.kind == Expr::Kind::mul ? "*" : "/") +
               wrap(e.args[1], detail::precedence(e.args[1]) <= p);
    case Expr::Kind::neg:
        return "-" + wrap(e.args[0], detail::precedence(e.args[0]) < p);
    case Expr::Kind::pow:
        return wrap(e.args[0], detail::precedence(e.args[0]) <= p) + "^" + std::to_string(e.exponent);
    case Expr::Kind::pair:
        return "(" + print(e.args[0]) + ", " + print(e.args[1]) + ")";
    }
    return {};
}

inline std::string print(const NameList& names)
{
    std::string s = "[";
    for (std::size_t k = 0; k < names.size(); ++k)
        s += (k ? ", " : "") + names[k];
    return s + "]";
}

inline std::string print(const ArgValue& v)
{
    if (const auto* e = std::get_if<Expr>(&v))
        return print(*e);
    if (const auto* l = std::get_if<NameList>(&v))
        return print(*l);
    return "\"" + std::get<std::string>(v) + "\"";
}

inline std::string print(const AlgebraDecl& d)
{
    std::string s = "algebra " + d.name + " = poly(";
    for (std::size_t k = 0; k < d.variables.size(); ++k)
        s += (k ? ", " : "") + d.variables[k];
    s += ")";
    if (!d.ideal.empty()) {
        s += " mod <";
        for (std::size_t k = 0; k < d.ideal.size(); ++k)
            s += (k ? ", " : "") + print(d.ideal[k]);
        s += ">";
    }
    return s;
}

inline std::string print(const MorphismDecl& d)
{
    std::string s = "morphism " + d.name + " : " + d.source + " -> " + d.target + " {";
    for (std::size_t k = 0; k < d.images.size(); ++k)
        s += std::string(k ? ", " : " ") + d.images[k].first + " -> " + print(d.images[k].second);
    return s + " }";
}

inline std::string print(const LambdaDecl& d)
{
    std::string s = "lambda " + d.name + "(n=" + std::to_string(d.n) + ", over=" + d.over + ") {";
    for (std::size_t k = 0; k < d.entries.size(); ++k) {
        const auto& e = d.entries[k];
        s += k ? "; " : " ";
        s += e.fallback ? "*" : "(" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
        s += " -> " + print(e.value);
    }
    return s + " }";
}

inline std::string print(const SystemDecl& d)
{
    std::string s = "system " + d.name + "(n=" + std::to_string(d.n) + ", base=" + d.base + ", levels=" + print(d.levels) +
                    ", structural=" + print(d.structural) + ") {";
    for (std::size_t k = 0; k < d.phis.size(); ++k) {
        const auto& p = d.phis[k];
        s += std::string(k ? "; " : " ") + "phi(" + std::to_string(p.i) + "," + std::to_string(p.j) + ") = sum[";
        for (std::size_t f = 0; f < p.forms.size(); ++f)
            s += (f ? ", " : "") + std::string("form(scale=") + print(p.forms[f].scale) + ", left=" + p.forms[f].left +
                 ", right=" + p.forms[f].right + ")";
        s += "]";
    }
    return s + " }";
}

namespace detail {
inline std::string images(const std::vector<ImageDecl>& images, const char* label, bool first)
{
    std::string s;
    for (const auto& im : images) {
        s += first ? " " : "; ";
        first = false;
        s += label + std::to_string(im.level) + "(" + im.variable + ") = " + print(im.value);
    }
    return s;
}
} // namespace detail

inline std::string print(const DerivationDecl& d)
{
    std::string s = "derivation " + d.name + " over " + d.over + " {";
    if (d.level0)
        s += " level0 = " + print(*d.level0);
    return s + detail::images(d.images, "D", !d.level0) + " }";
}

inline std::string print(const ClassicalDecl& d)
{
    return "classical " + d.name + "(n=" + std::to_string(d.n) + ", source=" + d.source + ", target=" + d.target +
           ") { level0 = " + d.level0 + detail::images(d.images, "E", false) + " }";
}

inline std::string print(const CallDecl& d)
{
    std::string s = d.kind + " " + d.name + " = " + d.function + "(";
    bool first = true;
    for (const auto& p : d.positional) {
        s += (first ? "" : ", ") + p;
        first = false;
    }
    for (const auto& a : d.named) {
        s += (first ? "" : ", ") + a.key + "=" + print(a.value);
        first = false;
    }
    return s + ")";
}

inline std::string print(const Command& c)
{
    std::string s = c.verb;
    if (c.verb == "push")
        s += " psi*";
    for (const auto& p : c.positional)
        s += " " + p;
    for (const auto& a : c.named)
        s += " " + a.key + "=" + print(a.value);
    return s;
}

inline std::string print(const Item& item)
{
    return std::visit([](const auto& x) { return print(x); }, item);
}

/// One statement per line.
inline std::string print(const Script& script)
{
    std::string s;
    for (const auto& item : script.items)
        s += print(item) + "\n";
    return s;
}

} // namespace mhs::dsl
