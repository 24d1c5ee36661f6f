#include "protoforge/term.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace protoforge {

struct TermNode {
  Sym sym = Sym::Agent;
  NameKind kind = NameKind::Free;
  std::string_view label;
  SessionId sid = kNoSession;
  std::array<const TermNode*, 2> args{nullptr, nullptr};
  std::vector<SessionId> sessions;
  const TermNode* payload = nullptr;
  std::size_t hash = 0;
  bool ground = true;
  unsigned depth = 1;
  std::size_t size = 1;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t arity_of(Sym s) {
  switch (s) {
    case Sym::Pub:
    case Sym::Priv:
    case Sym::Hash:
      return 1;
    case Sym::Shk:
    case Sym::Pair:
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
      return 2;
    default:
      return 0;
  }
}

struct NodeHash {
  std::size_t operator()(const TermNode* n) const { return n->hash; }
};

struct NodeEq {
  bool operator()(const TermNode* a, const TermNode* b) const {
    return a->sym == b->sym && a->kind == b->kind && a->label.data() == b->label.data() &&
           a->label.size() == b->label.size() && a->sid == b->sid && a->args == b->args &&
           a->sessions == b->sessions && a->payload == b->payload;
  }
};

}  // namespace

class TermTable {
 public:
  static TermTable& instance() {
    static TermTable table;
    return table;
  }

  std::string_view intern(std::string_view s) {
    {
      std::shared_lock lock(string_mu_);
      auto it = strings_.find(std::string(s));
      if (it != strings_.end()) return *it;
    }
    std::unique_lock lock(string_mu_);
    return *strings_.emplace(s).first;
  }

  Term make(TermNode proto) {
    std::size_t h = std::hash<int>{}(static_cast<int>(proto.sym));
    h = mix(h, static_cast<std::size_t>(proto.kind));
    h = mix(h, std::hash<std::string_view>{}(proto.label));
    h = mix(h, proto.sid);
    for (std::size_t i = 0; i < arity_of(proto.sym); ++i) h = mix(h, proto.args[i]->hash);
    for (SessionId s : proto.sessions) h = mix(h, s);
    if (proto.payload) h = mix(h, proto.payload->hash);
    proto.hash = h;

    bool ground = proto.sym != Sym::Var && proto.sym != Sym::AgentVar;
    unsigned depth = 0;
    std::size_t size = 1;
    for (std::size_t i = 0; i < arity_of(proto.sym); ++i) {
      ground = ground && proto.args[i]->ground;
      depth = std::max(depth, proto.args[i]->depth);
      size += proto.args[i]->size;
    }
    proto.ground = ground;
    proto.depth = depth + 1;
    proto.size = size;

    {
      std::shared_lock lock(mu_);
      auto it = index_.find(&proto);
      if (it != index_.end()) return Term(*it);
    }
    std::unique_lock lock(mu_);
    auto it = index_.find(&proto);
    if (it != index_.end()) return Term(*it);
    nodes_.push_back(std::move(proto));
    const TermNode* n = &nodes_.back();
    index_.insert(n);
    return Term(n);
  }

 private:
  std::shared_mutex string_mu_;
  std::unordered_set<std::string> strings_;
  std::shared_mutex mu_;
  std::deque<TermNode> nodes_;
  std::unordered_set<const TermNode*, NodeHash, NodeEq> index_;
};

namespace {

TermNode atom(Sym s, std::string_view label, SessionId sid = kNoSession) {
  TermNode n;
  n.sym = s;
  n.label = TermTable::instance().intern(label);
  n.sid = sid;
  return n;
}

Term compound(Sym s, Term a, Term b = Term()) {
  TermNode n;
  n.sym = s;
  n.args[0] = a.node();
  n.args[1] = b.node();
  return TermTable::instance().make(std::move(n));
}

void require_agent_like(Term t, const char* what) {
  if (t.is_null() || (t.sym() != Sym::Agent && t.sym() != Sym::AgentVar))
    throw std::invalid_argument(std::string(what) + " expects an agent or agent variable");
}

void require(Term t) {
  if (t.is_null()) throw std::invalid_argument("null term argument");
}

}  // namespace

Term Term::agent(std::string_view name) {
  if (name.empty()) throw std::invalid_argument("empty agent name");
  return TermTable::instance().make(atom(Sym::Agent, name));
}

Term Term::attacker() { return agent("eps"); }

Term Term::agent_var(std::string_view name) {
  if (name.empty()) throw std::invalid_argument("empty variable name");
  return TermTable::instance().make(atom(Sym::AgentVar, name));
}

Term Term::var(std::string_view name, SessionId sid) {
  if (name.empty()) throw std::invalid_argument("empty variable name");
  return TermTable::instance().make(atom(Sym::Var, name, sid));
}

Term Term::free_name(std::string_view label) {
  TermNode n = atom(Sym::Name, label);
  n.kind = NameKind::Free;
  return TermTable::instance().make(std::move(n));
}

Term Term::session_nonce(std::string_view label, SessionId sid) {
  if (sid == kNoSession) throw std::invalid_argument("session nonce needs a session id");
  TermNode n = atom(Sym::Name, label, sid);
  n.kind = NameKind::Session;
  return TermTable::instance().make(std::move(n));
}

Term Term::intruder_nonce(std::string_view label) {
  TermNode n = atom(Sym::Name, label);
  n.kind = NameKind::Intruder;
  return TermTable::instance().make(std::move(n));
}

Term Term::abstraction_nonce(std::vector<SessionId> sessions, Term abstracted) {
  require(abstracted);
  std::sort(sessions.begin(), sessions.end());
  sessions.erase(std::unique(sessions.begin(), sessions.end()), sessions.end());
  TermNode n = atom(Sym::Name, "");
  n.kind = NameKind::Abstraction;
  n.sessions = std::move(sessions);
  n.payload = abstracted.node();
  return TermTable::instance().make(std::move(n));
}

Term Term::pub(Term a) {
  require_agent_like(a, "pub");
  return compound(Sym::Pub, a);
}

Term Term::priv(Term a) {
  require_agent_like(a, "priv");
  return compound(Sym::Priv, a);
}

Term Term::shk(Term a, Term b) {
  require_agent_like(a, "shk");
  require_agent_like(b, "shk");
  if (compare(b, a) < 0) std::swap(a, b);
  return compound(Sym::Shk, a, b);
}

Term Term::hash(Term t) {
  require(t);
  return compound(Sym::Hash, t);
}

Term Term::pair(Term a, Term b) {
  require(a);
  require(b);
  return compound(Sym::Pair, a, b);
}

Term Term::encs(Term m, Term k) {
  require(m);
  require(k);
  return compound(Sym::Encs, m, k);
}

Term Term::enca(Term m, Term k) {
  require(m);
  require(k);
  return compound(Sym::Enca, m, k);
}

Term Term::sign(Term m, Term k) {
  require(m);
  require(k);
  return compound(Sym::Sign, m, k);
}

Term Term::tuple(std::span<const Term> items) {
  if (items.empty()) throw std::invalid_argument("empty tuple");
  Term t = items.back();
  for (std::size_t i = items.size() - 1; i-- > 0;) t = pair(items[i], t);
  return t;
}

Term Term::rebuild(Term t, std::span<const Term> args) {
  switch (t.sym()) {
    case Sym::Pub: return pub(args[0]);
    case Sym::Priv: return priv(args[0]);
    case Sym::Shk: return shk(args[0], args[1]);
    case Sym::Hash: return hash(args[0]);
    case Sym::Pair: return pair(args[0], args[1]);
    case Sym::Encs: return encs(args[0], args[1]);
    case Sym::Enca: return enca(args[0], args[1]);
    case Sym::Sign: return sign(args[0], args[1]);
    default: return t;
  }
}

Sym Term::sym() const { return node_->sym; }
NameKind Term::name_kind() const { return node_->kind; }
std::string_view Term::label() const { return node_->label; }
SessionId Term::sid() const { return node_->sid; }
const std::vector<SessionId>& Term::sessions() const { return node_->sessions; }
Term Term::payload() const { return Term(node_->payload); }
std::size_t Term::arity() const { return arity_of(node_->sym); }

Term Term::arg(std::size_t i) const {
  assert(i < arity());
  return Term(node_->args[i]);
}

bool Term::is_ground() const { return node_->ground; }
std::size_t Term::hash_value() const { return node_ ? node_->hash : 0; }
unsigned Term::depth() const { return node_->depth; }
std::size_t Term::size() const { return node_->size; }

bool Term::is_attacker() const { return sym() == Sym::Agent && label() == "eps"; }

bool Term::is_crypto() const {
  Sym s = sym();
  return s == Sym::Encs || s == Sym::Enca || s == Sym::Sign || s == Sym::Hash;
}

bool Term::is_key() const {
  Sym s = sym();
  return s == Sym::Pub || s == Sym::Priv || s == Sym::Shk;
}

bool Term::is_intruder_name() const {
  return sym() == Sym::Name &&
         (name_kind() == NameKind::Intruder || name_kind() == NameKind::Abstraction);
}

int compare(Term a, Term b) {
  if (a == b) return 0;
  if (a.is_null()) return -1;
  if (b.is_null()) return 1;
  if (a.sym() != b.sym()) return a.sym() < b.sym() ? -1 : 1;
  switch (a.sym()) {
    case Sym::AgentVar:
    case Sym::Agent:
    case Sym::Var:
    case Sym::Name: {
      if (a.name_kind() != b.name_kind()) return a.name_kind() < b.name_kind() ? -1 : 1;
      if (int c = a.label().compare(b.label()); c != 0) return c < 0 ? -1 : 1;
      if (a.sid() != b.sid()) return a.sid() < b.sid() ? -1 : 1;
      if (a.sessions() != b.sessions()) return a.sessions() < b.sessions() ? -1 : 1;
      return compare(a.payload(), b.payload());
    }
    default:
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (int c = compare(a.arg(i), b.arg(i)); c != 0) return c;
      return 0;
  }
}

bool operator<(Term a, Term b) { return compare(a, b) < 0; }

bool is_intruder_axiom(Term t) {
  switch (t.sym()) {
    case Sym::Agent: return true;
    case Sym::Name: return t.is_intruder_name();
    case Sym::Priv: return t.arg(0).is_attacker();
    case Sym::Shk: return t.arg(0).is_attacker() || t.arg(1).is_attacker();
    case Sym::Pub: return t.arg(0).is_agent();
    default: return false;
  }
}

namespace {

std::string sid_text(SessionId s) { return "s" + std::to_string(s); }

void print(std::ostream& os, Term t, const PrintOptions& o) {
  switch (t.sym()) {
    case Sym::AgentVar:
    case Sym::Agent:
      os << t.label();
      return;
    case Sym::Var:
      if (t.sid() == kNoSession) {
        if (o.nonce_vars && o.nonce_vars->count(t.label())) {
          os << "n[" << t.label() << "]";
          return;
        }
        if (o.bare_vars && o.bare_vars->count(t.label())) {
          os << t.label();
          return;
        }
        os << "?" << t.label();
        return;
      }
      os << "?" << t.label() << "@" << sid_text(t.sid());
      return;
    case Sym::Name:
      switch (t.name_kind()) {
        case NameKind::Free: os << "n[" << t.label() << "]"; return;
        case NameKind::Session: os << "n[" << t.label() << "@" << sid_text(t.sid()) << "]"; return;
        case NameKind::Intruder: os << "n.eps[" << t.label() << "]"; return;
        case NameKind::Abstraction: {
          os << "n.eps[{";
          for (std::size_t i = 0; i < t.sessions().size(); ++i)
            os << (i ? "," : "") << sid_text(t.sessions()[i]);
          os << "}|";
          print(os, t.payload(), o);
          os << "]";
          return;
        }
      }
      return;
    case Sym::Pair: {
      os << "<";
      print(os, t.left(), o);
      Term rest = t.right();
      while (rest.is_pair()) {
        os << ",";
        print(os, rest.left(), o);
        rest = rest.right();
      }
      os << ",";
      print(os, rest, o);
      os << ">";
      return;
    }
    default: {
      static const char* heads[] = {"", "", "", "", "pub", "priv", "shk", "h", "pair", "encs", "enca", "sign"};
      os << heads[static_cast<int>(t.sym())] << "(";
      for (std::size_t i = 0; i < t.arity(); ++i) {
        if (i) os << ",";
        print(os, t.arg(i), o);
      }
      os << ")";
    }
  }
}

}  // namespace

std::string to_string(Term t, const PrintOptions& opts) {
  if (t.is_null()) return "<null>";
  std::ostringstream os;
  print(os, t, opts);
  return os.str();
}

std::string to_string(const TermSet& ts) {
  std::string s = "{";
  bool first = true;
  for (Term t : ts) {
    if (!first) s += ", ";
    first = false;
    s += to_string(t);
  }
  return s + "}";
}

std::ostream& operator<<(std::ostream& os, Term t) { return os << to_string(t); }

void collect_subterms(Term t, TermSet& out) {
  if (!out.insert(t).second) return;
  switch (t.sym()) {
    case Sym::Hash:
    case Sym::Pair:
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
      for (std::size_t i = 0; i < t.arity(); ++i) collect_subterms(t.arg(i), out);
      break;
    default:
      break;
  }
}

TermSet subterms(Term t) {
  TermSet out;
  collect_subterms(t, out);
  return out;
}

TermSet subterms(std::span<const Term> ts) {
  TermSet out;
  for (Term t : ts) collect_subterms(t, out);
  return out;
}

TermSet crypt_subterms(Term t) {
  TermSet out;
  for (Term s : subterms(t))
    if (s.is_crypto()) out.insert(s);
  return out;
}

namespace {

void collect_plaintext(Term t, TermSet& out) {
  switch (t.sym()) {
    case Sym::Hash:
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
      collect_plaintext(t.arg(0), out);
      break;
    case Sym::Pair:
      collect_plaintext(t.left(), out);
      collect_plaintext(t.right(), out);
      break;
    default:
      out.insert(t);
  }
}

template <typename Pred>
void collect_all(Term t, TermSet& out, Pred pred) {
  if (pred(t)) out.insert(t);
  if (t.sym() == Sym::Name && t.name_kind() == NameKind::Abstraction) return;
  for (std::size_t i = 0; i < t.arity(); ++i) collect_all(t.arg(i), out, pred);
}

}  // namespace

TermSet plaintext(Term t) {
  TermSet out;
  collect_plaintext(t, out);
  return out;
}

TermSet lg_keys(Term t) {
  TermSet out;
  for (Term s : subterms(t)) {
    if (s.sym() == Sym::Pub) out.insert(Term::priv(s.arg(0)));
    if (s.sym() == Sym::Priv || s.sym() == Sym::Shk) out.insert(s);
  }
  return out;
}

TermList components(Term t) {
  TermList out;
  while (t.is_pair()) {
    TermList left = components(t.left());
    out.insert(out.end(), left.begin(), left.end());
    t = t.right();
  }
  out.push_back(t);
  return out;
}

TermSet vars(Term t) {
  TermSet out;
  if (t.is_ground()) return out;
  collect_all(t, out, [](Term s) { return s.is_variable(); });
  return out;
}

TermSet names(Term t) {
  TermSet out;
  collect_all(t, out, [](Term s) { return s.is_name(); });
  return out;
}

TermSet agents(Term t) {
  TermSet out;
  collect_all(t, out, [](Term s) { return s.is_agent(); });
  return out;
}

std::optional<Term> subterm_at(Term t, std::span<const unsigned> position) {
  for (unsigned p : position) {
    if (p == 0 || p > t.arity()) return std::nullopt;
    t = t.arg(p - 1);
  }
  return t;
}

bool Substitution::bind(Term x, Term v) {
  if (!x.is_variable()) throw std::invalid_argument("binding a non-variable: " + protoforge::to_string(x));
  return map_.emplace(x, v).second;
}

std::optional<Term> Substitution::lookup(Term x) const {
  auto it = map_.find(x);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Term Substitution::apply(Term t) const {
  if (map_.empty() || t.is_ground()) return t;
  if (t.is_variable()) {
    auto it = map_.find(t);
    return it == map_.end() ? t : it->second;
  }
  std::array<Term, 2> args;
  bool changed = false;
  for (std::size_t i = 0; i < t.arity(); ++i) {
    args[i] = apply(t.arg(i));
    changed = changed || args[i] != t.arg(i);
  }
  return changed ? Term::rebuild(t, std::span<const Term>(args.data(), t.arity())) : t;
}

TermList Substitution::apply(std::span<const Term> ts) const {
  TermList out;
  out.reserve(ts.size());
  for (Term t : ts) out.push_back(apply(t));
  return out;
}

Substitution Substitution::then(const Substitution& next) const {
  Substitution out;
  for (const auto& [x, v] : map_) out.map_.emplace(x, next.apply(v));
  for (const auto& [x, v] : next.map_) out.map_.emplace(x, v);
  return out;
}

std::string Substitution::to_string() const {
  std::string s = "{";
  bool first = true;
  for (const auto& [x, v] : map_) {
    if (!first) s += ", ";
    first = false;
    s += protoforge::to_string(x) + " -> " + protoforge::to_string(v);
  }
  return s + "}";
}

namespace {

bool occurs(Term x, Term t) {
  if (t.is_ground()) return false;
  if (t == x) return true;
  for (std::size_t i = 0; i < t.arity(); ++i)
    if (occurs(x, t.arg(i))) return true;
  return false;
}

bool bind_checked(Term x, Term v, Substitution& s) {
  if (x.sym() == Sym::AgentVar && v.sym() != Sym::Agent && v.sym() != Sym::AgentVar) return false;
  if (occurs(x, v)) return false;
  Substitution one;
  one.bind(x, v);
  s = s.then(one);
  return true;
}

using Equations = std::vector<std::pair<Term, Term>>;

bool solve(Equations eqs, Substitution& s) {
  while (!eqs.empty()) {
    auto [a, b] = eqs.back();
    eqs.pop_back();
    a = s.apply(a);
    b = s.apply(b);
    if (a == b) continue;
    // Prefer binding an untyped variable so x:agent-var ~ y:var binds y.
    if (b.sym() == Sym::Var || (b.sym() == Sym::AgentVar && a.sym() != Sym::Var)) std::swap(a, b);
    if (a.is_variable()) {
      if (!bind_checked(a, b, s)) return false;
      continue;
    }
    if (a.sym() != b.sym() || a.arity() == 0) return false;
    if (a.sym() == Sym::Shk && !(a.is_ground() && b.is_ground())) {
      Equations straight = eqs;
      straight.emplace_back(a.arg(0), b.arg(0));
      straight.emplace_back(a.arg(1), b.arg(1));
      Substitution attempt = s;
      if (solve(straight, attempt)) {
        s = attempt;
        return true;
      }
      eqs.emplace_back(a.arg(0), b.arg(1));
      eqs.emplace_back(a.arg(1), b.arg(0));
      continue;
    }
    for (std::size_t i = a.arity(); i-- > 0;) eqs.emplace_back(a.arg(i), b.arg(i));
  }
  return true;
}

bool match_into(Term p, Term t, Substitution& s) {
  if (p.is_variable()) {
    if (auto bound = s.lookup(p)) return *bound == t;
    if (p.sym() == Sym::AgentVar && t.sym() != Sym::Agent && t.sym() != Sym::AgentVar) return false;
    s.bind(p, t);
    return true;
  }
  if (p.is_ground()) return p == t;
  if (p.sym() != t.sym()) return false;
  if (p.sym() == Sym::Shk) {
    Substitution attempt = s;
    if (match_into(p.arg(0), t.arg(0), attempt) && match_into(p.arg(1), t.arg(1), attempt)) {
      s = attempt;
      return true;
    }
    return match_into(p.arg(0), t.arg(1), s) && match_into(p.arg(1), t.arg(0), s);
  }
  for (std::size_t i = 0; i < p.arity(); ++i)
    if (!match_into(p.arg(i), t.arg(i), s)) return false;
  return true;
}

}  // namespace

std::optional<Substitution> unify(Term a, Term b, const Substitution& base) {
  Substitution s = base;
  if (!solve({{a, b}}, s)) return std::nullopt;
  return s;
}

std::optional<Substitution> mgu(Term a, Term b) { return unify(a, b, Substitution{}); }

std::optional<Substitution> match(Term pattern, Term target, const Substitution& base) {
  Substitution s = base;
  if (!match_into(pattern, target, s)) return std::nullopt;
  return s;
}

}  // namespace protoforge
