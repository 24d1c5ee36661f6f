#include "protoforge/dsl.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "protoforge/syntax.hpp"

namespace protoforge {

namespace {

struct Line {
  int number;
  std::string text;
};

bool blank(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '#' || (c == '/' && i + 1 < s.size() && s[i + 1] == '/')) return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

Event parse_event(Lexer& lex, const TermScope& scope) {
  Token kw = lex.expect_ident();
  if (kw.text == "snd") return Event::snd(parse_term(lex, scope));
  if (kw.text == "rcv") return Event::rcv(parse_term(lex, scope));
  if (kw.text == "status") {
    std::string pred = lex.expect_ident().text;
    TermList args;
    lex.expect("(");
    if (!lex.accept(")")) {
      args.push_back(parse_term(lex, scope));
      while (lex.accept(",")) args.push_back(parse_term(lex, scope));
      lex.expect(")");
    }
    return Event::status(pred, std::move(args));
  }
  throw ParseError(kw.loc, "expected snd, rcv or status, got '" + kw.text + "'");
}

}  // namespace

Protocol parse_protocol(std::string_view text) {
  std::vector<Line> lines;
  {
    std::istringstream in{std::string(text)};
    std::string l;
    int n = 0;
    while (std::getline(in, l)) {
      ++n;
      if (!blank(l)) lines.push_back({n, l});
    }
  }
  if (lines.empty()) throw ParseError({1, 1}, "empty protocol");

  Protocol p;
  {
    Lexer lex(lines[0].text, {lines[0].number, 1});
    lex.expect("protocol");
    p.name = lex.expect_ident().text;
    lex.expect("(");
    if (lex.peek().kind != TokenKind::Number) lex.fail("expected the number of roles");
    p.k = std::stoul(lex.next().text);
    lex.expect(")");
    if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
  }

  TermScope scope;
  Role* current = nullptr;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    Lexer lex(lines[i].text, {lines[i].number, 1});
    if (lex.peek().text == "role") {
      Token kw = lex.next();
      if (lex.peek().kind != TokenKind::Number) lex.fail("expected a role index");
      Token idx = lex.next();
      std::size_t j = std::stoul(idx.text);
      if (j != p.roles.size() + 1)
        throw ParseError(idx.loc, "roles must be numbered 1.." + std::to_string(p.k) + " in order");
      Role r;
      scope = TermScope{};
      lex.expect("params");
      while (lex.peek().kind == TokenKind::Ident && lex.peek().text != "nonces") {
        Token name = lex.next();
        if (scope.idents.count(name.text)) throw ParseError(name.loc, "duplicate parameter '" + name.text + "'");
        Term x = Term::agent_var(name.text);
        scope.idents.emplace(name.text, x);
        r.params.push_back(x);
      }
      if (lex.accept("nonces")) {
        while (lex.peek().kind == TokenKind::Ident) {
          Token name = lex.next();
          if (scope.idents.count(name.text) || scope.nonce_vars.count(name.text))
            throw ParseError(name.loc, "nonce '" + name.text + "' clashes with another binder");
          scope.nonce_vars.insert(name.text);
          r.nonces.push_back(Term::var(name.text));
        }
      }
      lex.expect(":");
      if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
      (void)kw;
      p.roles.push_back(std::move(r));
      current = &p.roles.back();
      continue;
    }
    if (!current) lex.fail("event outside of a role");
    current->body.push_back(parse_event(lex, scope));
    if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
  }
  if (p.roles.size() != p.k)
    throw ParseError({lines.back().number, 1}, "protocol declares " + std::to_string(p.k) + " roles, found " +
                                                   std::to_string(p.roles.size()));
  return p;
}

Event parse_event(std::string_view text) {
  Lexer lex(text);
  Event e = parse_event(lex, {});
  if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
  return e;
}

ExecutionTrace parse_execution(std::string_view text) {
  ExecutionTrace exec;
  std::istringstream in{std::string(text)};
  std::string l;
  int n = 0;
  while (std::getline(in, l)) {
    ++n;
    if (blank(l)) continue;
    Lexer lex(l, {n, 1});
    Token idx = lex.next();
    if (idx.kind != TokenKind::Number || std::stoul(idx.text) != exec.size() + 1)
      throw ParseError(idx.loc, "expected event number " + std::to_string(exec.size() + 1));
    lex.expect(".");
    lex.expect("[");
    Token sid = lex.expect_ident();
    if (sid.text.size() < 2 || sid.text[0] != 's' ||
        sid.text.find_first_not_of("0123456789", 1) != std::string::npos || sid.text == "s0")
      throw ParseError(sid.loc, "expected a session id s1, s2, ...");
    lex.expect("]");
    TraceEvent te;
    te.sid = SessionId(std::stoul(sid.text.substr(1)));
    te.event = parse_event(lex, {});
    if (!lex.at_end()) lex.fail("trailing input '" + lex.peek().text + "'");
    exec.events.push_back(std::move(te));
  }
  return exec;
}

Protocol load_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_protocol(ss.str());
}

RolePrinting::RolePrinting(const Role& r) {
  for (Term y : r.nonces) nonces.insert(std::string(y.label()));
}

std::string role_to_string(const Role& r, std::size_t index) {
  std::ostringstream os;
  os << "role " << index << " params";
  for (Term x : r.params) os << " " << x.label();
  if (!r.nonces.empty()) {
    os << " nonces";
    for (Term y : r.nonces) os << " " << y.label();
  }
  os << ":\n";
  RolePrinting rp(r);
  for (const Event& e : r.body) os << "  " << to_string(e, rp.options()) << "\n";
  return os.str();
}

std::string protocol_to_string(const Protocol& p) {
  std::ostringstream os;
  os << "protocol " << p.name << " (" << p.k << ")\n";
  for (std::size_t j = 0; j < p.roles.size(); ++j) os << role_to_string(p.roles[j], j + 1);
  return os.str();
}

}  // namespace protoforge
