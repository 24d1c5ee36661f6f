#include "protoforge/logic.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "protoforge/syntax.hpp"

namespace protoforge {

namespace {

using K = FormulaKind;

Formula make(FormulaNode n) {
  switch (n.kind) {
    case K::True: break;
    case K::Learn:
    case K::Compromised: n.free = vars(n.term); break;
    case K::Status:
      for (Term t : n.args) {
        TermSet v = vars(t);
        n.free.insert(v.begin(), v.end());
      }
      break;
    case K::Not:
    case K::Sometime: n.free = n.left->free; break;
    case K::Or:
      n.free = n.left->free;
      n.free.insert(n.right->free.begin(), n.right->free.end());
      break;
    case K::Exists:
      n.free = n.left->free;
      n.free.erase(n.term);
      break;
  }
  return std::make_shared<const FormulaNode>(std::move(n));
}

Formula mk(K kind, Term term = {}, std::string pred = {}, TermList args = {}, Formula l = {}, Formula r = {}) {
  FormulaNode n;
  n.kind = kind;
  n.term = term;
  n.pred = std::move(pred);
  n.args = std::move(args);
  n.left = std::move(l);
  n.right = std::move(r);
  return make(std::move(n));
}

Tri tri_not(Tri a) { return a == Tri::True ? Tri::False : a == Tri::False ? Tri::True : Tri::Unknown; }

Tri tri_or(Tri a, Tri b) {
  if (a == Tri::True || b == Tri::True) return Tri::True;
  if (a == Tri::False && b == Tri::False) return Tri::False;
  return Tri::Unknown;
}

bool unbound_free(const FormulaNode& f, const Substitution& env) {
  return std::any_of(f.free.begin(), f.free.end(), [&](Term x) { return !env.contains(x); });
}

}  // namespace

namespace fml {

Formula truth() { return mk(K::True); }
Formula falsity() { return neg(truth()); }
Formula learn(Term t) { return mk(K::Learn, t); }
Formula status(std::string pred, TermList args) { return mk(K::Status, Term(), std::move(pred), std::move(args)); }
Formula compromised(Term u) { return mk(K::Compromised, u); }
Formula honest(Term u) { return neg(compromised(u)); }
Formula neg(Formula f) { return mk(K::Not, Term(), {}, {}, std::move(f)); }
Formula disj(Formula a, Formula b) { return mk(K::Or, Term(), {}, {}, std::move(a), std::move(b)); }
Formula conj(Formula a, Formula b) { return neg(disj(neg(std::move(a)), neg(std::move(b)))); }
Formula implies(Formula a, Formula b) { return disj(neg(std::move(a)), std::move(b)); }
Formula exists(Term x, Formula f) {
  if (x.sym() != Sym::Var) throw std::invalid_argument("only variables can be quantified");
  return mk(K::Exists, x, {}, {}, std::move(f));
}
Formula forall(Term x, Formula f) { return neg(exists(x, neg(std::move(f)))); }
Formula sometime(Formula f) { return mk(K::Sometime, Term(), {}, {}, std::move(f)); }

Formula conj(std::span<const Formula> fs) {
  if (fs.empty()) return truth();
  Formula out = fs[0];
  for (std::size_t i = 1; i < fs.size(); ++i) out = conj(out, fs[i]);
  return out;
}

Formula disj(std::span<const Formula> fs) {
  if (fs.empty()) return falsity();
  Formula out = fs[0];
  for (std::size_t i = 1; i < fs.size(); ++i) out = disj(out, fs[i]);
  return out;
}

Formula exists(std::span<const Term> xs, Formula f) {
  for (std::size_t i = xs.size(); i-- > 0;) f = exists(xs[i], std::move(f));
  return f;
}

}  // namespace fml

Term formula_var(std::string_view name) { return Term::var(name); }

TermSet free_vars(const Formula& f) { return f->free; }

namespace {

bool psi_layer(const Formula& f) {
  switch (f->kind) {
    case K::True:
    case K::Status: return true;
    case K::Not: return psi_layer(f->left);
    case K::Or: return psi_layer(f->left) && psi_layer(f->right);
    default: return false;
  }
}

void check_rec(const Formula& f, TermSet& bound, std::vector<std::string>& out) {
  switch (f->kind) {
    case K::Sometime:
      if (!psi_layer(f->left)) out.push_back("only true, status events, ! and | may appear under sometime");
      check_rec(f->left, bound, out);
      break;
    case K::Exists:
      if (!bound.insert(f->term).second) out.push_back("variable " + to_string(f->term) + " is quantified twice");
      check_rec(f->left, bound, out);
      break;
    case K::Not: check_rec(f->left, bound, out); break;
    case K::Or:
      check_rec(f->left, bound, out);
      check_rec(f->right, bound, out);
      break;
    case K::Compromised:
      if (!f->term.is_agent() && !f->term.is_variable()) out.push_back("C expects an agent or a variable");
      break;
    default: break;
  }
}

}  // namespace

std::vector<std::string> check_formula(const Formula& f) {
  std::vector<std::string> out;
  TermSet bound;
  check_rec(f, bound, out);
  for (Term x : f->free) out.push_back("free variable " + to_string(x));
  return out;
}

// Parsing

namespace {

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : lex_(text) {}

  Formula parse() {
    Formula f = formula(TermScope{});
    if (!lex_.at_end()) lex_.fail("trailing input '" + lex_.peek().text + "'");
    return f;
  }

 private:
  bool at_quantifier() const {
    const Token& t = lex_.peek();
    return t.kind == TokenKind::Ident && (t.text == "exists" || t.text == "forall");
  }

  Formula formula(const TermScope& scope) {
    if (at_quantifier()) return quantified(scope);
    Formula a = disjunction(scope);
    if (lex_.accept("=>")) return fml::implies(a, formula(scope));
    return a;
  }

  Formula quantified(const TermScope& scope) {
    bool ex = lex_.next().text == "exists";
    TermScope inner = scope;
    TermList xs;
    while (lex_.peek().kind == TokenKind::Ident) {
      Token name = lex_.next();
      Term x = formula_var(name.text);
      inner.idents[name.text] = x;
      xs.push_back(x);
    }
    if (xs.empty()) lex_.fail("expected a variable after the quantifier");
    lex_.expect(".");
    Formula body = formula(inner);
    for (std::size_t i = xs.size(); i-- > 0;) body = ex ? fml::exists(xs[i], body) : fml::forall(xs[i], body);
    return body;
  }

  Formula disjunction(const TermScope& scope) {
    Formula f = conjunction(scope);
    while (lex_.accept("|")) f = fml::disj(f, conjunction(scope));
    return f;
  }

  Formula conjunction(const TermScope& scope) {
    Formula f = unary(scope);
    while (lex_.accept("&")) f = fml::conj(f, unary(scope));
    return f;
  }

  Formula unary(const TermScope& scope) {
    if (lex_.accept("!")) return fml::neg(unary(scope));
    if (lex_.accept("sometime")) {
      SourceLocation loc = lex_.peek().loc;
      Formula f = unary(scope);
      if (!psi_layer(f)) throw ParseError(loc, "only true, status events, ! and | may appear under sometime");
      return fml::sometime(f);
    }
    if (at_quantifier()) return quantified(scope);
    return atom(scope);
  }

  TermList args(const TermScope& scope) {
    lex_.expect("(");
    TermList out;
    if (lex_.accept(")")) return out;
    out.push_back(parse_term(lex_, scope));
    while (lex_.accept(",")) out.push_back(parse_term(lex_, scope));
    lex_.expect(")");
    return out;
  }

  Term single(const TermScope& scope, const Token& kw) {
    TermList a = args(scope);
    if (a.size() != 1) throw ParseError(kw.loc, kw.text + " takes one argument");
    return a[0];
  }

  Formula atom(const TermScope& scope) {
    if (lex_.accept("(")) {
      Formula f = formula(scope);
      lex_.expect(")");
      return f;
    }
    Token t = lex_.expect_ident();
    if (t.text == "true") return fml::truth();
    if (t.text == "false") return fml::falsity();
    if (lex_.peek().text != "(") throw ParseError(t.loc, "expected a formula, got '" + t.text + "'");
    if (t.text == "learn") return fml::learn(single(scope, t));
    if (t.text == "C" || t.text == "NC") {
      Term u = single(scope, t);
      if (!u.is_agent() && !u.is_variable()) throw ParseError(t.loc, t.text + " expects an agent or a variable");
      return t.text == "C" ? fml::compromised(u) : fml::honest(u);
    }
    return fml::status(t.text, args(scope));
  }

  Lexer lex_;
};

void collect_bound(const Formula& f, std::set<std::string, std::less<>>& out) {
  if (f->kind == K::Exists) out.insert(std::string(f->term.label()));
  if (f->left) collect_bound(f->left, out);
  if (f->right) collect_bound(f->right, out);
}

bool is_conj(const Formula& f) {
  return f->kind == K::Not && f->left->kind == K::Or && f->left->left->kind == K::Not &&
         f->left->right->kind == K::Not;
}

void conjuncts(const Formula& f, std::vector<Formula>& out) {
  if (is_conj(f)) {
    conjuncts(f->left->left->left, out);
    conjuncts(f->left->right->left, out);
  } else {
    out.push_back(f);
  }
}

void disjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == K::Or) {
    disjuncts(f->left, out);
    disjuncts(f->right, out);
  } else {
    out.push_back(f);
  }
}

class Printer {
 public:
  explicit Printer(const Formula& f) {
    collect_bound(f, bound_);
    opts_.bare_vars = &bound_;
  }

  std::string print(const Formula& f, bool top) {
    switch (f->kind) {
      case K::True: return "true";
      case K::Learn: return "learn(" + term(f->term) + ")";
      case K::Compromised: return "C(" + term(f->term) + ")";
      case K::Status: {
        std::string s = f->pred + "(";
        for (std::size_t i = 0; i < f->args.size(); ++i) s += (i ? "," : "") + term(f->args[i]);
        return s + ")";
      }
      case K::Sometime: return "sometime " + print(f->left, false);
      case K::Or: {
        std::vector<Formula> ds;
        disjuncts(f, ds);
        return join(ds, " | ", top);
      }
      case K::Exists: {
        std::string s = "exists";
        Formula g = f;
        while (g->kind == K::Exists) {
          s += " " + term(g->term);
          g = g->left;
        }
        s += " . " + print(g, true);
        return top ? s : "(" + s + ")";
      }
      case K::Not: {
        if (is_conj(f)) {
          std::vector<Formula> cs;
          conjuncts(f, cs);
          return join(cs, " & ", top);
        }
        Formula g = f->left;
        if (g->kind == K::True) return "false";
        if (g->kind == K::Compromised) return "NC(" + term(g->term) + ")";
        return "!" + print(g, false);
      }
    }
    return "";
  }

 private:
  std::string term(Term t) const { return to_string(t, opts_); }

  std::string join(const std::vector<Formula>& fs, const char* sep, bool top) {
    std::string s;
    for (std::size_t i = 0; i < fs.size(); ++i) s += (i ? sep : "") + print(fs[i], false);
    return top ? s : "(" + s + ")";
  }

  std::set<std::string, std::less<>> bound_;
  PrintOptions opts_;
};

}  // namespace

Formula parse_formula(std::string_view text) { return FormulaParser(text).parse(); }

std::string to_string(const Formula& f) { return Printer(f).print(f, true); }

Formula substitute(const Formula& f, const Substitution& s) {
  switch (f->kind) {
    case K::True: return f;
    case K::Learn: return fml::learn(s.apply(f->term));
    case K::Compromised: return fml::compromised(s.apply(f->term));
    case K::Status: return fml::status(f->pred, s.apply(f->args));
    case K::Not: return fml::neg(substitute(f->left, s));
    case K::Sometime: return fml::sometime(substitute(f->left, s));
    case K::Or: return fml::disj(substitute(f->left, s), substitute(f->right, s));
    case K::Exists: {
      // Bound variables shadow the substitution.
      Substitution inner;
      for (const auto& [x, v] : s.bindings())
        if (x != f->term) inner.bind(x, v);
      return fml::exists(f->term, substitute(f->left, inner));
    }
  }
  return f;
}

std::size_t formula_size(const Formula& f) {
  switch (f->kind) {
    case K::True:
    case K::Learn:
    case K::Compromised: return 0;
    case K::Status: return 1;
    case K::Not: return formula_size_neg(f->left);
    case K::Or: return std::max(formula_size(f->left), formula_size(f->right));
    case K::Exists:
    case K::Sometime: return formula_size(f->left);
  }
  return 0;
}

std::size_t formula_size_neg(const Formula& f) {
  switch (f->kind) {
    case K::True:
    case K::Learn:
    case K::Compromised:
    case K::Sometime: return 0;
    case K::Status: return 1;
    case K::Not: return formula_size(f->left);
    case K::Or: return formula_size_neg(f->left) + formula_size_neg(f->right);
    case K::Exists: return formula_size_neg(f->left);
  }
  return 0;
}

// Attack formulas

namespace {

struct Classifier {
  std::vector<AttackViolation> out;
  std::map<Term, std::size_t> positive_status_uses;

  void atomic(Term t, const char* where) {
    if (t.is_agent() || t.is_variable()) return;
    out.push_back({1, std::string(where) + " argument " + to_string(t) + " is not an agent or a variable"});
  }

  // pos: polarity in the matrix. neg_diamond: inside a negatively occurring
  // sometime, with psi_pos the polarity relative to its body.
  void visit(const Formula& f, bool pos, bool neg_diamond, bool psi_pos) {
    switch (f->kind) {
      case K::True: break;
      case K::Learn:
        atomic(f->term, "learn");
        if (!pos) out.push_back({2, "learn(" + to_string(f->term) + ") occurs negatively"});
        break;
      case K::Compromised: atomic(f->term, "C"); break;
      case K::Status:
        for (Term t : f->args) atomic(t, f->pred.c_str());
        if (pos)
          for (Term t : f->args)
            if (t.is_variable()) ++positive_status_uses[t];
        if (neg_diamond && !psi_pos)
          out.push_back({4, "status event " + f->pred + " occurs negatively under a negative sometime"});
        break;
      case K::Not: visit(f->left, !pos, neg_diamond, !psi_pos); break;
      case K::Or:
        visit(f->left, pos, neg_diamond, psi_pos);
        visit(f->right, pos, neg_diamond, psi_pos);
        break;
      case K::Sometime:
        if (!pos) visit(f->left, pos, true, true);
        else visit(f->left, pos, neg_diamond, psi_pos);
        break;
      case K::Exists: out.push_back({0, "quantifier inside the matrix"}); break;
    }
  }
};

}  // namespace

AttackClassification classify_attack(const Formula& f) {
  AttackClassification r;
  AttackFormula a;
  a.formula = f;
  Formula m = f;
  TermSet seen;
  while (m->kind == K::Exists) {
    if (!seen.insert(m->term).second)
      r.violations.push_back({0, "variable " + to_string(m->term) + " is quantified twice"});
    a.prefix.push_back(m->term);
    m = m->left;
  }
  a.matrix = m;
  for (Term x : f->free) r.violations.push_back({0, "free variable " + to_string(x)});
  for (const std::string& e : check_formula(m))
    if (e.rfind("free variable", 0) != 0) r.violations.push_back({0, e});
  Classifier c;
  c.visit(m, true, false, true);
  for (const auto& [x, n] : c.positive_status_uses)
    if (n > 1)
      c.out.push_back({3, "variable " + to_string(x) + " occurs " + std::to_string(n) + " times in positive status events"});
  r.violations.insert(r.violations.end(), c.out.begin(), c.out.end());
  std::stable_sort(r.violations.begin(), r.violations.end(),
                   [](const AttackViolation& x, const AttackViolation& y) { return x.condition < y.condition; });
  if (r.violations.empty()) r.attack = std::move(a);
  return r;
}

// Semantics

TermList default_witness_pool(const ExecutionTrace& exec, std::span<const Term> t0) {
  TermSet pool;
  for (const TraceEvent& e : exec.events)
    for (Term t : e.event.terms()) {
      collect_subterms(t, pool);
      TermSet ag = agents(t);
      pool.insert(ag.begin(), ag.end());
    }
  for (Term t : t0) {
    pool.insert(t);
    TermSet ag = agents(t);
    pool.insert(ag.begin(), ag.end());
  }
  pool.insert(Term::attacker());
  std::string label = "fresh";
  for (int i = 1; pool.count(Term::intruder_nonce(label)); ++i) label = "fresh" + std::to_string(i);
  pool.insert(Term::intruder_nonce(label));
  return TermList(pool.begin(), pool.end());
}

Evaluator::Evaluator(const std::vector<TraceEvent>& events, std::span<const Term> t0, TermList pool,
                     DeductionOptions opts)
    : events_(events), t0_(t0.begin(), t0.end()), pool_(std::move(pool)), opts_(opts) {}

Evaluator Evaluator::symbolic(const std::vector<TraceEvent>& events, std::span<const Term> t0) {
  Evaluator ev(events, t0, {});
  ev.symbolic_ = true;
  ev.marker_ = Term::intruder_nonce("*");
  TermSet args;
  for (const TraceEvent& e : events)
    if (e.event.kind == EventKind::Status) args.insert(e.event.args.begin(), e.event.args.end());
  ev.status_args_.assign(args.begin(), args.end());
  ev.status_args_.push_back(ev.marker_);
  return ev;
}

bool Evaluator::learnable(Term m, std::size_t len) {
  if (!kb_) {
    kb_ = std::make_unique<KnowledgeBase>(opts_);
    kb_->add_level(t0_);
    level_of_len_.push_back(kb_->levels());
    for (const TraceEvent& e : events_) {
      if (e.event.kind == EventKind::Snd) {
        Term msg = e.event.msg;
        kb_->add_level(std::span<const Term>(&msg, 1));
      }
      level_of_len_.push_back(kb_->levels());
    }
  }
  return kb_->derivable_at(level_of_len_.at(len), m);
}

bool Evaluator::compromised(Term u) {
  if (auto it = compromised_.find(u); it != compromised_.end()) return it->second;
  bool c = is_compromised(u, t0_);
  compromised_.emplace(u, c);
  return c;
}

// ∃x.(a ∨ b) = (∃x.a) ∨ (∃x.b), and ∃x.a = a when x is not free in a (the
// pool is never empty). Keeps disjunctive formulas from enumerating the
// variables of every disjunct together.
Formula miniscope(const Formula& f) {
  switch (f->kind) {
    case K::Not: return fml::neg(miniscope(f->left));
    case K::Or: return fml::disj(miniscope(f->left), miniscope(f->right));
    case K::Exists: {
      Formula body = miniscope(f->left);
      if (!body->free.count(f->term)) return body;
      if (body->kind == K::Or)
        return fml::disj(miniscope(fml::exists(f->term, body->left)), miniscope(fml::exists(f->term, body->right)));
      return fml::exists(f->term, body);
    }
    default: return f;
  }
}

Tri Evaluator::status_at(const FormulaNode& f, std::size_t len, const Substitution& env) {
  if (len == 0) return Tri::False;
  const Event& last = events_[len - 1].event;
  if (last.kind != EventKind::Status || last.pred != f.pred || last.args.size() != f.args.size()) return Tri::False;
  bool ground = true;
  Substitution s;
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    Term a = env.apply(f.args[i]);
    Term b = last.args[i];
    ground = ground && a.is_ground() && b.is_ground();
    auto next = symbolic_ ? unify(a, b, s) : match(a, b, s);
    if (!next) return Tri::False;
    s = std::move(*next);
  }
  return ground ? Tri::True : Tri::Unknown;
}

Tri Evaluator::eval(const Formula& f, std::size_t len, const Substitution& env) {
  switch (f->kind) {
    case K::True: return Tri::True;
    case K::Learn: {
      Term m = env.apply(f->term);
      if (symbolic_ || !m.is_ground()) return Tri::Unknown;
      return learnable(m, len) ? Tri::True : Tri::False;
    }
    case K::Compromised: {
      Term u = env.apply(f->term);
      if (!u.is_ground() || u == marker_) return Tri::Unknown;
      return compromised(u) ? Tri::True : Tri::False;
    }
    case K::Status: return status_at(*f, len, env);
    case K::Not: return tri_not(eval(f->left, len, env));
    case K::Or: {
      Tri a = eval(f->left, len, env);
      if (a == Tri::True) return a;
      return tri_or(a, eval(f->right, len, env));
    }
    case K::Sometime: {
      Tri r = Tri::False;
      for (std::size_t i = 0; i <= len && r != Tri::True; ++i) r = tri_or(r, eval(f->left, i, env));
      return r;
    }
    case K::Exists: {
      Tri probe = eval(f->left, len, env);
      if (probe != Tri::Unknown || unbound_free(*f, env)) return probe;
      Tri r = Tri::False;
      // A symbolic witness is an instance of some status argument of the
      // trace, or matches no status event at all (the marker).
      for (Term c : symbolic_ ? status_args_ : pool_) {
        Substitution e2 = env;
        e2.bind(f->term, c);
        Tri v = eval(f->left, len, e2);
        if (v == Tri::True) return v;
        r = tri_or(r, v);
      }
      return r;
    }
  }
  return Tri::Unknown;
}

bool Evaluator::holds(const Formula& f, std::size_t len) {
  if (symbolic_) throw std::logic_error("holds() needs a ground trace");
  return eval(miniscope(f), len, {}) == Tri::True;
}

std::optional<Substitution> Evaluator::find(const Formula& f, std::size_t len, const Substitution& env) {
  if (f->kind == K::Or) {
    if (auto w = find(f->left, len, env)) return w;
    return find(f->right, len, env);
  }
  if (f->kind != K::Exists) {
    if (eval(f, len, env) == Tri::True) return env;
    return std::nullopt;
  }
  if (eval(f->left, len, env) == Tri::False) return std::nullopt;
  for (Term c : pool_) {
    Substitution e2 = env;
    e2.bind(f->term, c);
    if (eval(f->left, len, e2) == Tri::False) continue;
    if (auto w = find(f->left, len, e2)) return w;
  }
  return std::nullopt;
}

std::optional<Substitution> Evaluator::witness(const Formula& f) {
  if (symbolic_) throw std::logic_error("witness() needs a ground trace");
  return find(miniscope(f), events_.size(), {});
}

Satisfaction satisfies(const ExecutionTrace& exec, std::span<const Term> t0, const Formula& f,
                       std::optional<TermList> pool, DeductionOptions opts) {
  Evaluator ev(exec.events, t0, pool ? std::move(*pool) : default_witness_pool(exec, t0), opts);
  Satisfaction s;
  if (auto w = ev.witness(f)) {
    s.sat = true;
    s.witness = std::move(*w);
  }
  return s;
}

// Annotations

namespace {

void reject_predicates(const Protocol& p, std::initializer_list<std::string> preds) {
  for (const Role& r : p.roles)
    for (const Event& e : r.body)
      if (e.kind == EventKind::Status && std::find(preds.begin(), preds.end(), e.pred) != preds.end())
        throw std::invalid_argument("predicate " + e.pred + " already occurs in protocol " + p.name);
}

std::string param_name(const Protocol& p, std::size_t role, std::size_t i) {
  return std::string(p.role(role).params.at(i).label());
}

}  // namespace

AnnotatedProtocol annotate_secrecy(const Protocol& p, std::size_t role, Term target) {
  reject_predicates(p, {"Secret"});
  if (role == 0 || role > p.k) throw std::invalid_argument("no role " + std::to_string(role));
  AnnotatedProtocol out{p, nullptr};
  Role& r = out.protocol.role(role);
  TermList args = r.params;
  args.push_back(target);
  r.body.insert(r.body.begin(), Event::status("Secret", args));

  TermList xs;
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < p.k; ++i) xs.push_back(formula_var("x" + param_name(p, role, i)));
  Term y = formula_var("x");
  TermList sargs = xs;
  sargs.push_back(y);
  parts.push_back(fml::sometime(fml::status("Secret", sargs)));
  for (Term x : xs) parts.push_back(fml::honest(x));
  parts.push_back(fml::learn(y));
  TermList prefix = xs;
  prefix.push_back(y);
  out.attack = fml::exists(prefix, fml::conj(parts));
  return out;
}

AnnotatedProtocol annotate_aliveness(const Protocol& p) {
  reject_predicates(p, {"Start", "End"});
  AnnotatedProtocol out{p, nullptr};
  for (std::size_t j = 1; j <= p.k; ++j) {
    Role& r = out.protocol.role(j);
    r.body.insert(r.body.begin(), Event::status("Start", {r.params.at(j - 1)}));
    r.body.push_back(Event::status("End", r.params));
  }
  TermList ys;
  for (std::size_t i = 0; i < p.k; ++i) ys.push_back(formula_var("y" + param_name(p, 1, i)));
  std::vector<Formula> parts{fml::status("End", ys)};
  std::vector<Formula> missing;
  for (Term y : ys) {
    parts.push_back(fml::honest(y));
    missing.push_back(fml::neg(fml::sometime(fml::status("Start", {y}))));
  }
  parts.push_back(fml::disj(missing));
  out.attack = fml::exists(ys, fml::conj(parts));
  return out;
}

AnnotatedProtocol annotate_weak_agreement(const Protocol& p) {
  std::vector<std::string> ends;
  for (std::size_t j = 1; j <= p.k; ++j) ends.push_back("End_" + std::to_string(j));
  for (const Role& r : p.roles)
    for (const Event& e : r.body)
      if (e.kind == EventKind::Status &&
          (e.pred == "Start" || std::find(ends.begin(), ends.end(), e.pred) != ends.end()))
        throw std::invalid_argument("predicate " + e.pred + " already occurs in protocol " + p.name);

  AnnotatedProtocol out{p, nullptr};
  TermList prefix;
  std::vector<Formula> cases;
  for (std::size_t j = 1; j <= p.k; ++j) {
    Role& r = out.protocol.role(j);
    std::vector<Event> starts;
    for (std::size_t i = 0; i < p.k; ++i) starts.push_back(Event::status("Start", {r.params[j - 1], r.params[i]}));
    r.body.insert(r.body.begin(), starts.begin(), starts.end());
    r.body.push_back(Event::status(ends[j - 1], r.params));

    TermList ys;
    for (std::size_t i = 0; i < p.k; ++i) ys.push_back(formula_var("y" + std::to_string(j) + param_name(p, 1, i)));
    prefix.insert(prefix.end(), ys.begin(), ys.end());
    std::vector<Formula> parts{fml::status(ends[j - 1], ys)};
    std::vector<Formula> missing;
    for (std::size_t i = 0; i < p.k; ++i) {
      parts.push_back(fml::honest(ys[i]));
      if (i != j - 1) missing.push_back(fml::neg(fml::sometime(fml::status("Start", {ys[i], ys[j - 1]}))));
    }
    parts.push_back(fml::disj(missing));
    cases.push_back(fml::conj(parts));
  }
  out.attack = fml::exists(prefix, fml::disj(cases));
  return out;
}

}  // namespace protoforge
