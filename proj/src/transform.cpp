#include "protoforge/transform.hpp"

#include <set>
#include <stdexcept>

namespace protoforge {

std::string to_string(TagVariant v) { return v == TagVariant::Full ? "full" : "nonces-only"; }

Term tag_term(Term u, Term tag) {
  switch (u.sym()) {
    case Sym::Pair: return Term::pair(tag_term(u.left(), tag), tag_term(u.right(), tag));
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign: {
      Term args[2] = {Term::pair(tag, tag_term(u.left(), tag)), tag_term(u.right(), tag)};
      return Term::rebuild(u, args);
    }
    case Sym::Hash: return Term::hash(Term::pair(tag, tag_term(u.arg(0), tag)));
    default: return u;
  }
}

Event tag_event(const Event& e, Term tag) {
  Event out = e;
  if (e.kind == EventKind::Status) {
    for (Term& a : out.args) a = tag_term(a, tag);
  } else {
    out.msg = tag_term(e.msg, tag);
  }
  return out;
}

bool is_k_tag(Term t, std::size_t k, TagScheme scheme) {
  if (k == 0) return false;
  if (scheme.hashed) {
    if (t.sym() != Sym::Hash) return false;
    t = t.arg(0);
  }
  for (std::size_t i = 0; i < k; ++i) {
    Term entry = t;
    if (i + 1 < k) {
      if (!t.is_pair()) return false;
      entry = t.left();
      t = t.right();
    }
    if (scheme.variant == TagVariant::Full) {
      if (!entry.is_pair()) return false;
      Term who = entry.left();
      if (!who.is_agent() && !who.is_variable()) return false;
    }
  }
  return true;
}

bool is_k_tagged(Term t, std::size_t k, TagScheme scheme) {
  if (!scheme.hashed) {
    for (Term c : crypt_subterms(t)) {
      Term first = c.arg(0);
      if (!first.is_pair() || !is_k_tag(first.left(), k, scheme)) return false;
    }
    return true;
  }
  // A hashed tag is itself a hash; it is opaque and exempt.
  switch (t.sym()) {
    case Sym::Pair: return is_k_tagged(t.left(), k, scheme) && is_k_tagged(t.right(), k, scheme);
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
    case Sym::Hash: {
      Term first = t.arg(0);
      if (!first.is_pair() || !is_k_tag(first.left(), k, scheme)) return false;
      if (!is_k_tagged(first.right(), k, scheme)) return false;
      return t.arity() == 1 || is_k_tagged(t.right(), k, scheme);
    }
    default: return true;
  }
}

Term untag(Term t) {
  switch (t.sym()) {
    case Sym::Pair: return Term::pair(untag(t.left()), untag(t.right()));
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
      if (!t.left().is_pair()) return t;
      {
        Term args[2] = {untag(t.left().right()), untag(t.right())};
        return Term::rebuild(t, args);
      }
    case Sym::Hash:
      if (!t.arg(0).is_pair()) return t;
      return Term::hash(untag(t.arg(0).right()));
    default: return t;
  }
}

namespace {

void used_labels(const Protocol& p, std::set<std::string>& out) {
  for (const Role& r : p.roles) {
    for (Term x : r.params) out.insert(std::string(x.label()));
    for (Term y : r.nonces) out.insert(std::string(y.label()));
    for (const Event& e : r.body)
      for (Term x : event_vars(e)) out.insert(std::string(x.label()));
  }
}

}  // namespace

Transformation transform(const Protocol& p, TagScheme scheme) {
  if (p.roles.size() != p.k) throw std::invalid_argument("protocol declares a different number of roles");
  for (std::size_t j = 1; j <= p.k; ++j)
    if (p.role(j).params.size() != p.k)
      throw std::invalid_argument("role " + std::to_string(j) + " does not have " + std::to_string(p.k) + " parameters");

  std::set<std::string> used;
  used_labels(p, used);

  Transformation out;
  out.scheme = scheme;
  out.protocol.name = p.name;
  out.protocol.k = p.k;
  for (std::size_t j = 1; j <= p.k; ++j) {
    const Role& src = p.role(j);
    Role r;
    r.params = src.params;
    r.nonces = src.nonces;

    TermList zs;
    for (std::size_t i = 0; i < p.k; ++i) {
      std::string base = "z_" + std::string(src.params[i].label());
      std::string name = base;
      for (int n = 1; used.count(name); ++n) name = base + "_" + std::to_string(n);
      zs.push_back(Term::var(name));
    }
    r.nonces.push_back(zs[j - 1]);

    TermList us;
    for (std::size_t i = 0; i < p.k; ++i)
      us.push_back(scheme.variant == TagVariant::Full ? Term::pair(src.params[i], zs[i]) : zs[i]);
    for (std::size_t i = 0; i < p.k; ++i) r.body.push_back(i + 1 == j ? Event::snd(us[i]) : Event::rcv(us[i]));

    Term tau = Term::tuple(us);
    if (scheme.hashed) tau = Term::hash(tau);
    for (const Event& e : src.body) r.body.push_back(tag_event(e, tau));

    out.protocol.roles.push_back(std::move(r));
    out.roles.push_back({zs, tau});
  }
  return out;
}

}  // namespace protoforge
