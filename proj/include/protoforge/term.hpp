#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protoforge {

using SessionId = std::uint32_t;
inline constexpr SessionId kNoSession = 0;

// Head symbol of a term. The declaration order is also the primary sort key
// of the structural order, so agent variables sort before agents.
enum class Sym : std::uint8_t {
  AgentVar,
  Agent,
  Var,
  Name,
  Pub,
  Priv,
  Shk,
  Hash,
  Pair,
  Encs,
  Enca,
  Sign,
};

enum class NameKind : std::uint8_t {
  Free,         // honest constant name, n[label]
  Session,      // session nonce, n[label@sN]
  Intruder,     // attacker nonce, n.eps[label]
  Abstraction,  // n.eps[{s1,..}|term]
};

struct TermNode;

// Handle on an interned, immutable term. Two handles compare equal iff the
// terms are syntactically equal, so == is a pointer comparison.
class Term {
 public:
  Term() = default;

  static Term agent(std::string_view name);
  static Term attacker();
  static Term agent_var(std::string_view name);
  static Term var(std::string_view name, SessionId sid = kNoSession);
  static Term free_name(std::string_view label);
  static Term session_nonce(std::string_view label, SessionId sid);
  static Term intruder_nonce(std::string_view label);
  static Term abstraction_nonce(std::vector<SessionId> sessions, Term abstracted);

  static Term pub(Term agent);
  static Term priv(Term agent);
  static Term shk(Term a, Term b);
  static Term hash(Term t);
  static Term pair(Term a, Term b);
  static Term encs(Term m, Term k);
  static Term enca(Term m, Term k);
  static Term sign(Term m, Term k);
  // Right-nested tuple <t1,<t2,...>>. A one-element tuple is the element.
  static Term tuple(std::span<const Term> items);
  // Rebuild a compound term with new arguments, keeping the head symbol.
  static Term rebuild(Term t, std::span<const Term> args);

  bool is_null() const { return node_ == nullptr; }
  explicit operator bool() const { return node_ != nullptr; }

  Sym sym() const;
  NameKind name_kind() const;
  std::string_view label() const;
  SessionId sid() const;
  const std::vector<SessionId>& sessions() const;
  Term payload() const;

  std::size_t arity() const;
  Term arg(std::size_t i) const;
  Term left() const { return arg(0); }
  Term right() const { return arg(1); }

  bool is_ground() const;
  std::size_t hash_value() const;
  unsigned depth() const;
  std::size_t size() const;

  bool is_variable() const { return sym() == Sym::Var || sym() == Sym::AgentVar; }
  bool is_agent() const { return sym() == Sym::Agent; }
  bool is_attacker() const;
  bool is_name() const { return sym() == Sym::Name; }
  bool is_pair() const { return sym() == Sym::Pair; }
  // encs, enca, sign, h
  bool is_crypto() const;
  // pub, priv, shk
  bool is_key() const;
  // Name in N_eps: intruder and abstraction nonces.
  bool is_intruder_name() const;

  const TermNode* node() const { return node_; }

  friend bool operator==(Term a, Term b) { return a.node_ == b.node_; }
  friend bool operator!=(Term a, Term b) { return a.node_ != b.node_; }
  friend bool operator<(Term a, Term b);

 private:
  explicit Term(const TermNode* n) : node_(n) {}
  const TermNode* node_ = nullptr;
  friend class TermTable;
};

// Total structural order, stable across runs.
int compare(Term a, Term b);

using TermSet = std::set<Term>;
using TermList = std::vector<Term>;

// Intruder leaves: agents, N_eps, priv(eps), shk(_,eps), pub(agent).
bool is_intruder_axiom(Term t);

struct PrintOptions {
  // Sessionless variables with these names print as n[y] (role bodies).
  const std::set<std::string, std::less<>>* nonce_vars = nullptr;
  // Sessionless variables with these names print bare (formula binders).
  const std::set<std::string, std::less<>>* bare_vars = nullptr;
};

std::string to_string(Term t, const PrintOptions& opts = {});
std::string to_string(const TermSet& ts);
std::ostream& operator<<(std::ostream& os, Term t);

// St(t): keys and abstraction nonces are atomic.
TermSet subterms(Term t);
void collect_subterms(Term t, TermSet& out);
TermSet subterms(std::span<const Term> ts);
TermSet crypt_subterms(Term t);
TermSet plaintext(Term t);
TermSet lg_keys(Term t);
TermList components(Term t);
// Variables, names and agents, looking inside keys.
TermSet vars(Term t);
TermSet names(Term t);
TermSet agents(Term t);
// t|_p with 1-based argument indices; empty optional if p is not a position.
std::optional<Term> subterm_at(Term t, std::span<const unsigned> position);

class Substitution {
 public:
  Substitution() = default;

  // Adds x -> v. Returns false if x is already bound.
  bool bind(Term x, Term v);
  std::optional<Term> lookup(Term x) const;
  bool contains(Term x) const { return map_.count(x) != 0; }
  Term apply(Term t) const;
  TermList apply(std::span<const Term> ts) const;
  // Applies `next` to every binding, then adds the bindings of `next` whose
  // variable is not already bound.
  Substitution then(const Substitution& next) const;
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::map<Term, Term>& bindings() const { return map_; }
  std::string to_string() const;

  friend bool operator==(const Substitution& a, const Substitution& b) { return a.map_ == b.map_; }

 private:
  std::map<Term, Term> map_;
};

// Most general unifier with occurs check. Agent variables only bind to
// agents or agent variables. shk is commutative: both argument orders are
// tried, the stored order first.
std::optional<Substitution> mgu(Term a, Term b);
// Extends an idempotent substitution so that it unifies a and b.
std::optional<Substitution> unify(Term a, Term b, const Substitution& base);
// One-sided matching: finds s with pattern.apply(s) == target. Only
// variables of `pattern` are bound.
std::optional<Substitution> match(Term pattern, Term target, const Substitution& base = {});

}  // namespace protoforge

template <>
struct std::hash<protoforge::Term> {
  std::size_t operator()(protoforge::Term t) const noexcept { return t.hash_value(); }
};
