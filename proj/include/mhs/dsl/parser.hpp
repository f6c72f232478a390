#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mhs/dsl/ast.hpp"
#include "mhs/dsl/lexer.hpp"

namespace mhs::dsl {

inline constexpr std::array<std::string_view, 6> declaration_keywords{"algebra", "morphism", "lambda",
                                                                      "system",  "derivation", "classical"};
inline constexpr std::array<std::string_view, 11> command_verbs{"verify", "eval",      "reduce",    "diagram-check",
                                                                "push",   "witness",   "equal",     "distinct",
                                                                "roundtrip", "relations", "jet"};

inline bool is_statement_keyword(std::string_view w)
{
    return std::find(declaration_keywords.begin(), declaration_keywords.end(), w) != declaration_keywords.end() ||
           std::find(command_verbs.begin(), command_verbs.end(), w) != command_verbs.end();
}

struct ParseResult {
    Script script;
    std::vector<Diagnostic> diagnostics;

    bool ok() const noexcept
    {
        return std::none_of(diagnostics.begin(), diagnostics.end(),
                            [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
    }
};

/// Recursive-descent parser. A syntax error inside a statement is recorded
/// and parsing resumes at the next statement keyword that starts a line.
class Parser {
public:
    explicit Parser(std::string_view source) : toks_(tokenize(source, diags_)) {}

    ParseResult parse()
    {
        ParseResult r;
        while (peek().kind != Token::Kind::end) {
            if (accept(";"))
                continue;
            const std::size_t start = pos_;
            try {
                r.script.items.push_back(statement());
            } catch (const Failure&) {
                recover(start);
            }
        }
        r.diagnostics = std::move(diags_);
        std::stable_sort(r.diagnostics.begin(), r.diagnostics.end(), [](const Diagnostic& a, const Diagnostic& b) {
            return a.loc.line != b.loc.line ? a.loc.line < b.loc.line : a.loc.column < b.loc.column;
        });
        return r;
    }

    // Parses a standalone expression (used for --expr style inputs and tests).
    std::optional<Expr> parse_expression()
    {
        try {
            Expr e = expr();
            if (peek().kind != Token::Kind::end)
                fail(peek(), "unexpected '" + peek().text + "' after expression");
            return e;
        } catch (const Failure&) {
            return std::nullopt;
        }
    }

    const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    struct Failure {};

    // Skips to the next line that starts outside any brace block opened by
    // the failed statement, or to a line starting with a statement keyword.
    void recover(std::size_t start)
    {
        int depth = 0;
        for (std::size_t k = start; k < pos_; ++k)
            depth += toks_[k].is("{") ? 1 : toks_[k].is("}") ? -1 : 0;
        if (pos_ == start)
            ++pos_;
        for (; peek().kind != Token::Kind::end; ++pos_) {
            const Token& t = peek();
            if (t.line_start && ((depth <= 0 && pos_ > start) ||
                                 (t.kind == Token::Kind::ident && is_statement_keyword(t.text))))
                return;
            depth += t.is("{") ? 1 : t.is("}") ? -1 : 0;
        }
    }
    using Header = std::map<std::string, std::pair<ArgValue, SourceLoc>>;

    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }

    Token take()
    {
        Token t = peek();
        if (pos_ < toks_.size() - 1)
            ++pos_;
        return t;
    }

    bool accept(std::string_view p)
    {
        if (peek().kind == Token::Kind::punct && peek().text == p) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const Token& at, std::string message)
    {
        diags_.push_back({Diagnostic::Severity::error, at.loc, std::move(message), std::nullopt});
        throw Failure{};
    }

    static std::string describe(const Token& t) { return t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'"; }

    void expect(std::string_view p, std::string_view context)
    {
        if (!accept(p))
            fail(peek(), "expected '" + std::string(p) + "' " + std::string(context) + ", found " + describe(peek()));
    }

    std::string ident(std::string_view what)
    {
        if (peek().kind != Token::Kind::ident)
            fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
        return take().text;
    }

    void keyword(std::string_view word)
    {
        if (peek().kind != Token::Kind::ident || peek().text != word)
            fail(peek(), "expected '" + std::string(word) + "', found " + describe(peek()));
        ++pos_;
    }

    int integer(std::string_view what)
    {
        if (peek().kind != Token::Kind::integer)
            fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
        const Token t = take();
        if (t.text.size() > 9)
            fail(t, std::string(what) + " is too large");
        return std::stoi(t.text);
    }

    NameList name_list()
    {
        expect("[", "to open a name list");
        NameList names;
        if (accept("]"))
            return names;
        do
            names.push_back(ident("a name"));
        while (accept(","));
        expect("]", "to close the name list");
        return names;
    }

    void separators()
    {
        while (accept(";") || accept(","))
            ;
    }

    // ---- expressions

    Expr expr()
    {
        Expr lhs = term();
        for (;;) {
            const SourceLoc at = peek().loc;
            if (accept("+"))
                lhs = Expr::node(Expr::Kind::add, {std::move(lhs), term()}, at);
            else if (accept("-"))
                lhs = Expr::node(Expr::Kind::sub, {std::move(lhs), term()}, at);
            else
                return lhs;
        }
    }

    Expr term()
    {
        Expr lhs = unary();
        for (;;) {
            const SourceLoc at = peek().loc;
            if (accept("*"))
                lhs = Expr::node(Expr::Kind::mul, {std::move(lhs), unary()}, at);
            else if (accept("/"))
                lhs = Expr::node(Expr::Kind::div, {std::move(lhs), unary()}, at);
            else
                return lhs;
        }
    }

    Expr unary()
    {
        const SourceLoc at = peek().loc;
        if (accept("-"))
            return Expr::node(Expr::Kind::neg, {unary()}, at);
        return power();
    }

    Expr power()
    {
        Expr base = atom();
        const SourceLoc at = peek().loc;
        if (accept("^")) {
            Expr p = Expr::node(Expr::Kind::pow, {std::move(base)}, at);
            p.exponent = static_cast<std::uint32_t>(integer("an integer exponent"));
            return p;
        }
        return base;
    }

    Expr atom()
    {
        const Token& t = peek();
        if (t.kind == Token::Kind::integer) {
            const Token n = take();
            return Expr::number(Rational(mpz_class(n.text)), n.loc);
        }
        if (t.kind == Token::Kind::ident)
            return Expr::variable(take().text, t.loc);
        if (accept("(")) {
            const SourceLoc at = t.loc;
            Expr first = expr();
            if (accept(",")) {
                Expr second = expr();
                expect(")", "to close the pair");
                return Expr::node(Expr::Kind::pair, {std::move(first), std::move(second)}, at);
            }
            expect(")", "to close the parenthesized expression");
            return first;
        }
        fail(t, "expected an expression, found " + describe(t));
    }

    ArgValue arg_value()
    {
        if (peek().is("["))
            return name_list();
        if (peek().kind == Token::Kind::string)
            return take().text;
        return expr();
    }

    // (key=value, ...)
    Header header()
    {
        Header h;
        expect("(", "to open the parameter list");
        if (accept(")"))
            return h;
        do {
            const Token key = peek();
            const std::string k = ident("a parameter name");
            expect("=", "after parameter '" + k + "'");
            if (!h.emplace(k, std::make_pair(arg_value(), key.loc)).second)
                fail(key, "duplicate parameter '" + k + "'");
        } while (accept(","));
        expect(")", "to close the parameter list");
        return h;
    }

    const std::pair<ArgValue, SourceLoc>& required(const Header& h, const std::string& key, const Token& at)
    {
        auto it = h.find(key);
        if (it == h.end())
            fail(at, "missing parameter '" + key + "'");
        return it->second;
    }

    int header_int(const Header& h, const std::string& key, const Token& at)
    {
        const auto& [v, loc] = required(h, key, at);
        const Expr* e = std::get_if<Expr>(&v);
        if (!e || e->kind != Expr::Kind::number || e->value.get_den() != 1 || e->value < 0 || e->value > 1000)
            fail(Token{Token::Kind::ident, key, loc, false}, "parameter '" + key + "' must be a small non-negative integer");
        return static_cast<int>(e->value.get_num().get_si());
    }

    std::string header_name(const Header& h, const std::string& key, const Token& at)
    {
        const auto& [v, loc] = required(h, key, at);
        const Expr* e = std::get_if<Expr>(&v);
        if (!e || e->kind != Expr::Kind::name)
            fail(Token{Token::Kind::ident, key, loc, false}, "parameter '" + key + "' must be a name");
        return e->name;
    }

    NameList header_names(const Header& h, const std::string& key, const Token& at)
    {
        const auto& [v, loc] = required(h, key, at);
        const NameList* l = std::get_if<NameList>(&v);
        if (!l)
            fail(Token{Token::Kind::ident, key, loc, false}, "parameter '" + key + "' must be a list [a, b, ...]");
        return *l;
    }

    void only_keys(const Header& h, std::initializer_list<std::string_view> keys)
    {
        for (const auto& [k, v] : h)
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                fail(Token{Token::Kind::ident, k, v.second, false}, "unknown parameter '" + k + "'");
    }

    // name(arg, key=value, ...) for call declarations
    void call_arguments(CallDecl& d)
    {
        expect("(", "to open the argument list");
        if (accept(")"))
            return;
        do {
            if (peek().kind == Token::Kind::ident && peek(1).is("=")) {
                const Token key = take();
                take();
                d.named.push_back({key.text, arg_value(), key.loc});
            } else {
                if (!d.named.empty())
                    fail(peek(), "positional argument after named arguments");
                d.positional.push_back(ident("an argument name"));
            }
        } while (accept(","));
        expect(")", "to close the argument list");
    }

    // ---- statements

    Item statement()
    {
        const Token head = peek();
        if (head.kind != Token::Kind::ident || !is_statement_keyword(head.text))
            fail(head, "expected a declaration or command, found " + describe(head));
        take();
        const std::string& w = head.text;
        if (w == "algebra")
            return algebra(head);
        if (w == "morphism")
            return morphism(head);
        if (w == "lambda")
            return lambda(head);
        if (w == "system")
            return system(head);
        if (w == "derivation")
            return derivation(head);
        if (w == "classical")
            return classical(head);
        return command(head);
    }

    CallDecl call(const Token& head, std::string name, std::string function)
    {
        CallDecl d{head.text, std::move(name), std::move(function), {}, {}, head.loc};
        call_arguments(d);
        return d;
    }

    Item algebra(const Token& head)
    {
        std::string name = ident("an algebra name");
        expect("=", "after the algebra name");
        const std::string fn = ident("'poly' or 'product'");
        if (fn != "poly")
            return call(head, std::move(name), fn);
        AlgebraDecl d{std::move(name), {}, {}, head.loc};
        expect("(", "after 'poly'");
        if (!peek().is(")"))
            do
                d.variables.push_back(ident("a variable name"));
            while (accept(","));
        expect(")", "to close the variable list");
        if (peek().kind == Token::Kind::ident && peek().text == "mod") {
            take();
            expect("<", "to open the ideal");
            do
                d.ideal.push_back(expr());
            while (accept(","));
            expect(">", "to close the ideal");
        }
        return d;
    }

    Item morphism(const Token& head)
    {
        std::string name = ident("a morphism name");
        if (accept("=")) {
            std::string fn = ident("'identity' or 'compose'");
            return call(head, std::move(name), std::move(fn));
        }
        MorphismDecl d{std::move(name), {}, {}, {}, head.loc};
        expect(":", "after the morphism name");
        d.source = ident("a source algebra");
        expect("->", "between source and target");
        d.target = ident("a target algebra");
        expect("{", "to open the image list");
        separators();
        while (!accept("}")) {
            std::string var = ident("a variable name");
            expect("->", "after '" + var + "'");
            d.images.emplace_back(std::move(var), expr());
            separators();
        }
        return d;
    }

    Item lambda(const Token& head)
    {
        LambdaDecl d{ident("a lambda table name"), 0, {}, {}, head.loc};
        const Header h = header();
        only_keys(h, {"n", "over"});
        d.n = header_int(h, "n", head);
        d.over = header_name(h, "over", head);
        expect("{", "to open the lambda table");
        separators();
        while (!accept("}")) {
            LambdaEntry e;
            if (accept("*")) {
                e.fallback = true;
            } else {
                expect("(", "to open an index pair");
                e.i = integer("an index");
                expect(",", "between indices");
                e.j = integer("an index");
                expect(")", "to close the index pair");
            }
            expect("->", "after the index pair");
            e.value = expr();
            d.entries.push_back(std::move(e));
            separators();
        }
        return d;
    }

    Item system(const Token& head)
    {
        std::string name = ident("a system name");
        if (accept("=")) {
            std::string fn = ident("a system constructor");
            return call(head, std::move(name), std::move(fn));
        }
        SystemDecl d{std::move(name), 0, {}, {}, {}, {}, head.loc};
        const Header h = header();
        only_keys(h, {"n", "base", "levels", "structural"});
        d.n = header_int(h, "n", head);
        d.base = header_name(h, "base", head);
        d.levels = header_names(h, "levels", head);
        d.structural = header_names(h, "structural", head);
        expect("{", "to open the system body");
        separators();
        while (!accept("}")) {
            keyword("phi");
            PhiDecl p;
            expect("(", "after 'phi'");
            p.i = integer("an index");
            expect(",", "between indices");
            p.j = integer("an index");
            expect(")", "to close the index pair");
            expect("=", "after phi(i,j)");
            const bool listed = peek().kind == Token::Kind::ident && peek().text == "sum";
            if (listed) {
                take();
                expect("[", "after 'sum'");
            }
            do
                p.forms.push_back(form());
            while (listed && accept(","));
            if (listed)
                expect("]", "to close the form list");
            d.phis.push_back(std::move(p));
            separators();
        }
        return d;
    }

    FormDecl form()
    {
        const Token at = peek();
        keyword("form");
        const Header h = header();
        only_keys(h, {"scale", "left", "right"});
        FormDecl f;
        auto it = h.find("scale");
        if (it == h.end()) {
            f.scale = Expr::number(1);
        } else if (const Expr* e = std::get_if<Expr>(&it->second.first)) {
            f.scale = *e;
        } else {
            fail(at, "parameter 'scale' must be an expression");
        }
        f.left = header_name(h, "left", at);
        f.right = header_name(h, "right", at);
        return f;
    }

    // D2(x) = expr ; the leading letters are free, the digits give the level
    ImageDecl image()
    {
        const Token t = peek();
        const std::string label = ident("an image such as D1(x)");
        const auto digits = label.find_first_of("0123456789");
        if (digits == std::string::npos || digits == 0 ||
            label.find_first_not_of("0123456789", digits) != std::string::npos || label.size() - digits > 4)
            fail(t, "expected an image label like D1 or E2, found '" + label + "'");
        ImageDecl d;
        d.level = std::stoi(label.substr(digits));
        expect("(", "after '" + label + "'");
        d.variable = ident("a variable name");
        expect(")", "to close '" + label + "('");
        expect("=", "after '" + label + "(" + d.variable + ")'");
        d.value = expr();
        return d;
    }

    Item derivation(const Token& head)
    {
        std::string name = ident("a derivation name");
        if (accept("=")) {
            std::string fn = ident("a derivation constructor");
            return call(head, std::move(name), std::move(fn));
        }
        DerivationDecl d{std::move(name), {}, std::nullopt, {}, head.loc};
        keyword("over");
        d.over = ident("a system or lambda table");
        expect("{", "to open the derivation body");
        separators();
        while (!accept("}")) {
            if (peek().kind == Token::Kind::ident && peek().text == "level0") {
                const Token t = take();
                if (d.level0)
                    fail(t, "level0 given twice");
                expect("=", "after 'level0'");
                d.level0 = name_list();
            } else {
                d.images.push_back(image());
            }
            separators();
        }
        return d;
    }

    Item classical(const Token& head)
    {
        std::string name = ident("a classical derivation name");
        if (accept("=")) {
            std::string fn = ident("a classical constructor");
            return call(head, std::move(name), std::move(fn));
        }
        ClassicalDecl d{std::move(name), 0, {}, {}, {}, {}, head.loc};
        const Header h = header();
        only_keys(h, {"n", "source", "target"});
        d.n = header_int(h, "n", head);
        d.source = header_name(h, "source", head);
        d.target = header_name(h, "target", head);
        expect("{", "to open the classical body");
        separators();
        while (!accept("}")) {
            if (peek().kind == Token::Kind::ident && peek().text == "level0") {
                const Token t = take();
                if (!d.level0.empty())
                    fail(t, "level0 given twice");
                expect("=", "after 'level0'");
                d.level0 = ident("a morphism name");
            } else {
                d.images.push_back(image());
            }
            separators();
        }
        if (d.level0.empty())
            fail(head, "classical derivation '" + d.name + "' needs 'level0 = <morphism>'");
        return d;
    }

    Item command(const Token& head)
    {
        Command c{head.text, {}, {}, head.loc};
        if (c.verb == "push") {
            if (!(peek().kind == Token::Kind::ident && peek().text == "psi" && peek(1).is("*")))
                fail(peek(), "expected 'psi*' after 'push'");
            pos_ += 2;
        }
        for (;;) {
            const Token& t = peek();
            if (t.kind == Token::Kind::end || t.is(";"))
                break;
            if (t.kind == Token::Kind::ident && t.line_start && is_statement_keyword(t.text))
                break;
            if (t.kind != Token::Kind::ident)
                fail(t, "expected an argument, found " + describe(t));
            if (peek(1).is("=")) {
                const Token key = take();
                take();
                for (const auto& a : c.named)
                    if (a.key == key.text)
                        fail(key, "duplicate argument '" + key.text + "'");
                c.named.push_back({key.text, arg_value(), key.loc});
            } else {
                if (!c.named.empty())
                    fail(t, "positional argument '" + t.text + "' after named arguments");
                c.positional.push_back(take().text);
            }
        }
        return c;
    }

    std::vector<Diagnostic> diags_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

inline ParseResult parse(std::string_view source) { return Parser(source).parse(); }

} // namespace mhs::dsl
