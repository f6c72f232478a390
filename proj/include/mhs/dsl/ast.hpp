#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mhs/poly.hpp"

namespace mhs::dsl {

/// Position of a token. Locations never take part in AST equality, so a
/// reparsed pretty-print compares equal to the original.
struct SourceLoc {
    int line = 1;
    int column = 1;

    std::string str() const { return std::to_string(line) + ":" + std::to_string(column); }
    friend bool operator==(const SourceLoc&, const SourceLoc&) noexcept { return true; }
};

struct Expr {
    enum class Kind { number, name, add, sub, mul, div, neg, pow, pair };

    Kind kind = Kind::number;
    Rational value;          // number
    std::string name;        // name
    std::uint32_t exponent = 0; // pow
    std::vector<Expr> args;  // operands
    SourceLoc loc;

    static Expr number(Rational v, SourceLoc at = {})
    {
        Expr e;
        e.value = std::move(v);
        e.loc = at;
        return e;
    }

    static Expr variable(std::string n, SourceLoc at = {})
    {
        Expr e;
        e.kind = Kind::name;
        e.name = std::move(n);
        e.loc = at;
        return e;
    }

    static Expr node(Kind k, std::vector<Expr> operands, SourceLoc at = {})
    {
        Expr e;
        e.kind = k;
        e.args = std::move(operands);
        e.loc = at;
        return e;
    }

    friend bool operator==(const Expr& a, const Expr& b)
    {
        return a.kind == b.kind && a.value == b.value && a.name == b.name && a.exponent == b.exponent && a.args == b.args;
    }
};

using NameList = std::vector<std::string>;
using ArgValue = std::variant<Expr, NameList, std::string>; // expression | [names] | "string"

struct NamedArg {
    std::string key;
    ArgValue value;
    SourceLoc loc;
    friend bool operator==(const NamedArg&, const NamedArg&) = default;
};

/// algebra A = poly(x, y) mod <y>
struct AlgebraDecl {
    std::string name;
    NameList variables;
    std::vector<Expr> ideal;
    SourceLoc loc;
    friend bool operator==(const AlgebraDecl&, const AlgebraDecl&) = default;
};

/// morphism f : A -> B { x -> ..., y -> ... }
struct MorphismDecl {
    std::string name;
    std::string source;
    std::string target;
    std::vector<std::pair<std::string, Expr>> images;
    SourceLoc loc;
    friend bool operator==(const MorphismDecl&, const MorphismDecl&) = default;
};

struct LambdaEntry {
    int i = 0;
    int j = 0;
    bool fallback = false; // "* -> value" fills every unlisted pair
    Expr value;
    friend bool operator==(const LambdaEntry&, const LambdaEntry&) = default;
};

/// lambda L(n=2, over=A) { (1,1) -> x; * -> 1 }
struct LambdaDecl {
    std::string name;
    int n = 0;
    std::string over;
    std::vector<LambdaEntry> entries;
    SourceLoc loc;
    friend bool operator==(const LambdaDecl&, const LambdaDecl&) = default;
};

struct FormDecl {
    Expr scale;
    std::string left;
    std::string right;
    friend bool operator==(const FormDecl&, const FormDecl&) = default;
};

struct PhiDecl {
    int i = 0;
    int j = 0;
    std::vector<FormDecl> forms;
    friend bool operator==(const PhiDecl&, const PhiDecl&) = default;
};

/// system S(n=2, base=A, levels=[..], structural=[..]) { phi(1,1) = sum[form(...)] }
struct SystemDecl {
    std::string name;
    int n = 0;
    std::string base;
    NameList levels;
    NameList structural;
    std::vector<PhiDecl> phis;
    SourceLoc loc;
    friend bool operator==(const SystemDecl&, const SystemDecl&) = default;
};

struct ImageDecl {
    int level = 0;
    std::string variable;
    Expr value;
    friend bool operator==(const ImageDecl&, const ImageDecl&) = default;
};

/// derivation D over S { level0 = [..]; D1(x) = ... }
struct DerivationDecl {
    std::string name;
    std::string over;
    std::optional<NameList> level0;
    std::vector<ImageDecl> images;
    SourceLoc loc;
    friend bool operator==(const DerivationDecl&, const DerivationDecl&) = default;
};

/// classical E(n=2, source=A, target=B) { level0 = g; E1(x) = ... }
struct ClassicalDecl {
    std::string name;
    int n = 0;
    std::string source;
    std::string target;
    std::string level0;
    std::vector<ImageDecl> images;
    SourceLoc loc;
    friend bool operator==(const ClassicalDecl&, const ClassicalDecl&) = default;
};

/// kind NAME = function(positional..., key=value...), e.g.
/// algebra P = product(B, B) or derivation A1 = alpha1(E, chain=[f]).
struct CallDecl {
    std::string kind;
    std::string name;
    std::string function;
    NameList positional;
    std::vector<NamedArg> named;
    SourceLoc loc;
    friend bool operator==(const CallDecl&, const CallDecl&) = default;
};

/// verb positional... key=value...
struct Command {
    std::string verb;
    NameList positional;
    std::vector<NamedArg> named;
    SourceLoc loc;

    const NamedArg* find(std::string_view key) const
    {
        for (const auto& a : named)
            if (a.key == key)
                return &a;
        return nullptr;
    }

    friend bool operator==(const Command&, const Command&) = default;
};

using Item = std::variant<AlgebraDecl, MorphismDecl, LambdaDecl, SystemDecl, DerivationDecl, ClassicalDecl, CallDecl, Command>;

struct Script {
    std::vector<Item> items;
    friend bool operator==(const Script&, const Script&) = default;
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    SourceLoc loc;
    std::string message;
    std::optional<std::string> witness;

    std::string str() const
    {
        std::string s = loc.str() + ": " + (severity == Severity::error ? "error" : "warning") + ": " + message;
        if (witness)
            s += " [" + *witness + "]";
        return s;
    }
};

} // namespace mhs::dsl
