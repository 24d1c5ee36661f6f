#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "protoforge/term.hpp"

namespace protoforge {

struct SourceLocation {
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceLocation loc, const std::string& msg)
      : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg),
        loc_(loc) {}
  SourceLocation location() const { return loc_; }

 private:
  SourceLocation loc_;
};

enum class TokenKind { Ident, Number, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourceLocation loc;
};

// Tokenizer shared by the term, formula and protocol readers. Punctuation
// tokens are single characters except "=>". '#' and "//" start comments.
class Lexer {
 public:
  explicit Lexer(std::string_view src, SourceLocation start = {});

  const Token& peek(std::size_t ahead = 0) const;
  Token next();
  bool accept(std::string_view punct_or_word);
  Token expect(std::string_view punct_or_word);
  Token expect_ident();
  bool at_end() const { return peek().kind == TokenKind::End; }
  [[noreturn]] void fail(const std::string& msg) const;

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// Resolution of bare identifiers and n[..] while reading terms.
struct TermScope {
  // Identifiers mapped to a fixed term (role parameters, formula binders).
  std::map<std::string, Term, std::less<>> idents;
  // n[y] denotes the sessionless variable y (nonce variables of a role).
  std::set<std::string, std::less<>> nonce_vars;
};

Term parse_term(Lexer& lex, const TermScope& scope = {});
Term parse_term(std::string_view text, const TermScope& scope = {});
// Comma separated list; an empty string yields an empty list.
TermList parse_term_list(std::string_view text, const TermScope& scope = {});

}  // namespace protoforge
