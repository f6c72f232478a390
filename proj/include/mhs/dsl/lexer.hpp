#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "mhs/dsl/ast.hpp"

namespace mhs::dsl {

struct Token {
    enum class Kind { ident, integer, string, punct, end };

    Kind kind = Kind::end;
    std::string text;
    SourceLoc loc;
    bool line_start = false; // first token on its line

    bool is(std::string_view p) const { return (kind == Kind::punct || kind == Kind::ident) && text == p; }
};

/// Splits ASCII source into tokens. '#' starts a comment running to end of
/// line. "diagram-check" lexes as a single identifier. Unknown characters
/// produce a diagnostic and are skipped.
inline std::vector<Token> tokenize(std::string_view src, std::vector<Diagnostic>& diags)
{
    std::vector<Token> out;
    int line = 1, col = 1;
    bool fresh_line = true;
    std::size_t k = 0;
    auto advance = [&](std::size_t count) {
        for (std::size_t c = 0; c < count; ++c, ++k) {
            if (src[k] == '\n') {
                ++line;
                col = 1;
                fresh_line = true;
            } else {
                ++col;
            }
        }
    };
    auto push = [&](Token::Kind kind, std::string text, SourceLoc at) {
        out.push_back({kind, std::move(text), at, fresh_line});
        fresh_line = false;
    };
    while (k < src.size()) {
        const char c = src[k];
        const SourceLoc at{line, col};
        if (c == '#') {
            while (k < src.size() && src[k] != '\n')
                advance(1);
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t e = k;
            while (e < src.size() && (std::isalnum(static_cast<unsigned char>(src[e])) || src[e] == '_'))
                ++e;
            std::string word(src.substr(k, e - k));
            if (word == "diagram" && src.substr(e, 6) == "-check") {
                word = "diagram-check";
                e += 6;
            }
            push(Token::Kind::ident, word, at);
            advance(e - k);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t e = k;
            while (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e])))
                ++e;
            push(Token::Kind::integer, std::string(src.substr(k, e - k)), at);
            advance(e - k);
        } else if (c == '"') {
            std::size_t e = k + 1;
            while (e < src.size() && src[e] != '"' && src[e] != '\n')
                ++e;
            if (e >= src.size() || src[e] != '"') {
                diags.push_back({Diagnostic::Severity::error, at, "unterminated string literal", std::nullopt});
                advance(e - k);
                continue;
            }
            push(Token::Kind::string, std::string(src.substr(k + 1, e - k - 1)), at);
            advance(e + 1 - k);
        } else if (c == '-' && k + 1 < src.size() && src[k + 1] == '>') {
            push(Token::Kind::punct, "->", at);
            advance(2);
        } else if (std::string_view("()[]{}<>,;=:+-*/^").find(c) != std::string_view::npos) {
            push(Token::Kind::punct, std::string(1, c), at);
            advance(1);
        } else {
            diags.push_back({Diagnostic::Severity::error, at, std::string("unexpected character '") + c + "'", std::nullopt});
            advance(1);
        }
    }
    out.push_back({Token::Kind::end, "", {line, col}, true});
    return out;
}

} // namespace mhs::dsl
