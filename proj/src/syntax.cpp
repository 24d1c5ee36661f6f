#include "protoforge/syntax.hpp"

#include <cctype>

namespace protoforge {

Lexer::Lexer(std::string_view src, SourceLocation start) {
  int line = start.line;
  int col = start.column;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token tok;
    tok.loc = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
        ++j;
      tok.kind = TokenKind::Ident;
      tok.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      tok.kind = TokenKind::Number;
      tok.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '=' && i + 1 < src.size() && src[i + 1] == '>') {
      tok.kind = TokenKind::Punct;
      tok.text = "=>";
      advance(2);
    } else if (std::string_view("()<>,[]{}|.?@&!:=").find(c) != std::string_view::npos) {
      tok.kind = TokenKind::Punct;
      tok.text = std::string(1, c);
      advance(1);
    } else {
      throw ParseError({line, col}, std::string("unexpected character '") + c + "'");
    }
    tokens_.push_back(std::move(tok));
  }
  Token end;
  end.loc = {line, col};
  tokens_.push_back(end);
}

const Token& Lexer::peek(std::size_t ahead) const {
  std::size_t k = std::min(pos_ + ahead, tokens_.size() - 1);
  return tokens_[k];
}

Token Lexer::next() {
  Token t = peek();
  if (pos_ < tokens_.size() - 1) ++pos_;
  return t;
}

bool Lexer::accept(std::string_view s) {
  const Token& t = peek();
  if (t.kind != TokenKind::End && t.text == s) {
    next();
    return true;
  }
  return false;
}

Token Lexer::expect(std::string_view s) {
  if (peek().kind == TokenKind::End || peek().text != s)
    fail("expected '" + std::string(s) + "'" +
         (peek().kind == TokenKind::End ? std::string(" at end of input") : ", got '" + peek().text + "'"));
  return next();
}

Token Lexer::expect_ident() {
  if (peek().kind != TokenKind::Ident)
    fail(peek().kind == TokenKind::End ? "expected identifier at end of input"
                                       : "expected identifier, got '" + peek().text + "'");
  return next();
}

void Lexer::fail(const std::string& msg) const { throw ParseError(peek().loc, msg); }

namespace {

SessionId parse_sid(Lexer& lex) {
  Token t = lex.expect_ident();
  if (t.text.size() < 2 || t.text[0] != 's')
    throw ParseError(t.loc, "expected session id of the form sN, got '" + t.text + "'");
  for (std::size_t i = 1; i < t.text.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
      throw ParseError(t.loc, "expected session id of the form sN, got '" + t.text + "'");
  SessionId s = static_cast<SessionId>(std::stoul(t.text.substr(1)));
  if (s == kNoSession) throw ParseError(t.loc, "session ids start at s1");
  return s;
}

// Label inside n[..] or n.eps[..]: identifiers, numbers and dots.
std::string parse_label(Lexer& lex) {
  std::string label;
  while (lex.peek().kind == TokenKind::Ident || lex.peek().kind == TokenKind::Number ||
         (lex.peek().text == "." && !label.empty())) {
    label += lex.next().text;
  }
  if (label.empty()) lex.fail("expected a nonce label");
  return label;
}

Term binary(Lexer& lex, const TermScope& scope, Term (*make)(Term, Term)) {
  lex.expect("(");
  Term a = parse_term(lex, scope);
  lex.expect(",");
  Term b = parse_term(lex, scope);
  lex.expect(")");
  return make(a, b);
}

Term unary(Lexer& lex, const TermScope& scope, Term (*make)(Term)) {
  lex.expect("(");
  Term a = parse_term(lex, scope);
  lex.expect(")");
  return make(a);
}

}  // namespace

Term parse_term(Lexer& lex, const TermScope& scope) {
  const Token& t = lex.peek();
  SourceLocation loc = t.loc;
  try {
    if (t.kind == TokenKind::Punct && t.text == "<") {
      lex.next();
      TermList items{parse_term(lex, scope)};
      while (lex.accept(",")) items.push_back(parse_term(lex, scope));
      lex.expect(">");
      return Term::tuple(items);
    }
    if (t.kind == TokenKind::Punct && t.text == "?") {
      lex.next();
      std::string name = lex.expect_ident().text;
      SessionId sid = kNoSession;
      if (lex.accept("@")) sid = parse_sid(lex);
      return Term::var(name, sid);
    }
    if (t.kind != TokenKind::Ident) lex.fail("expected a term, got '" + t.text + "'");
    std::string word = lex.next().text;
    const std::string& follow = lex.peek().text;
    if (follow == "(") {
      if (word == "pair") return binary(lex, scope, &Term::pair);
      if (word == "encs") return binary(lex, scope, &Term::encs);
      if (word == "enca") return binary(lex, scope, &Term::enca);
      if (word == "sign") return binary(lex, scope, &Term::sign);
      if (word == "shk") return binary(lex, scope, &Term::shk);
      if (word == "h") return unary(lex, scope, &Term::hash);
      if (word == "pub") return unary(lex, scope, &Term::pub);
      if (word == "priv") return unary(lex, scope, &Term::priv);
      throw ParseError(loc, "unknown function symbol '" + word + "'");
    }
    if (word == "n" && follow == "[") {
      lex.next();
      std::string label = parse_label(lex);
      SessionId sid = kNoSession;
      if (lex.accept("@")) sid = parse_sid(lex);
      lex.expect("]");
      if (sid != kNoSession) return Term::session_nonce(label, sid);
      if (scope.nonce_vars.count(label)) return Term::var(label);
      return Term::free_name(label);
    }
    if (word == "n" && follow == "." && lex.peek(1).text == "eps" && lex.peek(2).text == "[") {
      lex.next();
      lex.next();
      lex.next();
      if (lex.accept("{")) {
        std::vector<SessionId> sids;
        if (!lex.accept("}")) {
          sids.push_back(parse_sid(lex));
          while (lex.accept(",")) sids.push_back(parse_sid(lex));
          lex.expect("}");
        }
        lex.expect("|");
        Term inner = parse_term(lex, scope);
        lex.expect("]");
        return Term::abstraction_nonce(std::move(sids), inner);
      }
      std::string label = parse_label(lex);
      lex.expect("]");
      return Term::intruder_nonce(label);
    }
    if (auto it = scope.idents.find(word); it != scope.idents.end()) return it->second;
    return Term::agent(word);
  } catch (const std::invalid_argument& e) {
    throw ParseError(loc, e.what());
  }
}

Term parse_term(std::string_view text, const TermScope& scope) {
  Lexer lex(text);
  Term t = parse_term(lex, scope);
  if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
  return t;
}

TermList parse_term_list(std::string_view text, const TermScope& scope) {
  Lexer lex(text);
  TermList out;
  if (lex.at_end()) return out;
  out.push_back(parse_term(lex, scope));
  while (lex.accept(",")) out.push_back(parse_term(lex, scope));
  if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
  return out;
}

}  // namespace protoforge
