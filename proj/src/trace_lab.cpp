#include "protoforge/trace_lab.hpp"

#include <algorithm>
#include <stdexcept>

namespace protoforge {

TagView::TagView(const ExecutionTrace& exec, std::size_t k) : exec_(exec), k_(k) {
  std::map<SessionId, TermList> msgs;
  for (const TraceEvent& e : exec.events) {
    TermList& m = msgs[e.sid];
    if (e.event.is_communication() && m.size() < k) m.push_back(e.event.msg);
  }
  for (auto& [sid, m] : msgs) {
    if (k > 0 && m.size() == k) {
      Term tau = Term::tuple(m);
      expected_[sid] = tau;
      tags_.insert(tau);
    } else {
      expected_[sid] = std::nullopt;
    }
  }
}

std::optional<Term> TagView::expected_tag(SessionId sid) const {
  auto it = expected_.find(sid);
  return it == expected_.end() ? std::nullopt : it->second;
}

SessionSet TagView::same_tag_as(SessionId sid) const {
  auto tau = expected_tag(sid);
  if (!tau) return {sid};
  SessionSet out;
  for (const auto& [s, t] : expected_)
    if (t == tau) out.insert(s);
  return out;
}

std::vector<SessionSet> TagView::classes() const {
  std::vector<SessionSet> out;
  SessionSet seen;
  for (const auto& [sid, t] : expected_) {
    if (seen.count(sid)) continue;
    SessionSet c = same_tag_as(sid);
    seen.insert(c.begin(), c.end());
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<Term> TagView::head_tag(Term t) const {
  if (!t.is_crypto() || !t.arg(0).is_pair()) return std::nullopt;
  Term tau = t.arg(0).left();
  if (!tags_.count(tau)) return std::nullopt;
  return tau;
}

std::optional<Term> expected_tag(const ExecutionTrace& exec, std::size_t k, SessionId sid) {
  return TagView(exec, k).expected_tag(sid);
}

SessionSet same_tag_as(const ExecutionTrace& exec, std::size_t k, SessionId sid) {
  return TagView(exec, k).same_tag_as(sid);
}

std::optional<Term> head_tag(const ExecutionTrace& exec, std::size_t k, Term t) {
  return TagView(exec, k).head_tag(t);
}

TermSet tags_of(const ExecutionTrace& exec, SessionId sid) {
  TermSet out;
  for (const TraceEvent& e : exec.events) {
    if (e.sid != sid) continue;
    for (Term t : e.event.terms())
      for (Term c : crypt_subterms(t)) {
        if (!c.arg(0).is_pair()) throw std::invalid_argument("untagged subterm " + to_string(c));
        out.insert(c.arg(0).left());
      }
  }
  return out;
}

namespace {

std::vector<SessionId> as_vector(const SessionSet& s) { return {s.begin(), s.end()}; }

WellFormedness violation(int cond, std::size_t i, SessionId sid, Term w, std::string msg) {
  return {cond, i, sid, w, std::move(msg)};
}

}  // namespace

WellFormedness check_well_formed(const ExecutionTrace& exec, std::size_t k, TagScheme scheme) {
  if (scheme.hashed) throw std::invalid_argument("well-formedness is defined for unhashed tags only");
  for (std::size_t i = 0; i < exec.events.size(); ++i) {
    const TraceEvent& e = exec.events[i];
    for (Term t : e.event.terms())
      for (Term c : crypt_subterms(t))
        if (!c.arg(0).is_pair() || !is_k_tag(c.arg(0).left(), k, scheme))
          return violation(1, i + 1, e.sid, c, "not " + std::to_string(k) + "-tagged: " + to_string(c));
  }

  TagView view(exec, k);
  for (std::size_t i = 0; i < exec.events.size(); ++i) {
    const TraceEvent& e = exec.events[i];
    auto tau = view.expected_tag(e.sid);
    for (Term t : e.event.terms())
      for (Term c : crypt_subterms(t)) {
        Term tag = c.arg(0).left();
        if (tag != tau)
          return violation(2, i + 1, e.sid, tag,
                           "tag " + to_string(tag) + " differs from the expected tag of s" + std::to_string(e.sid));
      }
  }

  for (std::size_t i = 0; i < exec.events.size(); ++i) {
    const TraceEvent& e = exec.events[i];
    SessionSet S = view.same_tag_as(e.sid);
    for (Term t : e.event.terms())
      for (Term n : names(t)) {
        bool allowed = (n.name_kind() == NameKind::Abstraction && n.sessions() == as_vector(S)) ||
                       (n.name_kind() == NameKind::Session && S.count(n.sid()));
        if (!allowed)
          return violation(3, i + 1, e.sid, n,
                           "name " + to_string(n) + " is foreign to the tag class of s" + std::to_string(e.sid));
      }
  }
  return {};
}

namespace {

struct Abstractor {
  const TagView& view;
  std::vector<SessionId> cls;
  std::optional<Term> tau;

  Term fresh(Term t) const { return Term::abstraction_nonce(cls, t); }

  Term run(Term t) const {
    switch (t.sym()) {
      case Sym::Name:
        // Names already abstracted for this class are kept.
        if (t.name_kind() == NameKind::Abstraction && t.sessions() == cls) return t;
        if (!tau || t.name_kind() != NameKind::Session) return fresh(t);
        return std::binary_search(cls.begin(), cls.end(), t.sid()) ? t : fresh(t);
      case Sym::Pair: return Term::pair(run(t.left()), run(t.right()));
      case Sym::Encs:
      case Sym::Enca:
      case Sym::Sign:
      case Sym::Hash: {
        if (!tau || !t.arg(0).is_pair() || t.arg(0).left() != *tau) return fresh(t);
        TermList args;
        for (std::size_t i = 0; i < t.arity(); ++i) args.push_back(run(t.arg(i)));
        return Term::rebuild(t, args);
      }
      default: return t;
    }
  }
};

}  // namespace

Term abstract_term(Term t, const TagView& view, SessionId sid) {
  Abstractor a{view, as_vector(view.same_tag_as(sid)), view.expected_tag(sid)};
  return a.run(t);
}

Term abstract_term(Term t, const ExecutionTrace& exec, std::size_t k, SessionId sid) {
  return abstract_term(t, TagView(exec, k), sid);
}

ExecutionTrace abstract_trace(const ExecutionTrace& exec, std::size_t k) {
  TagView view(exec, k);
  ExecutionTrace out;
  for (const TraceEvent& e : exec.events) {
    TraceEvent a = e;
    if (a.event.kind == EventKind::Status) {
      for (Term& t : a.event.args) t = abstract_term(t, view, e.sid);
    } else {
      a.event.msg = abstract_term(a.event.msg, view, e.sid);
    }
    out.events.push_back(std::move(a));
  }
  return out;
}

namespace {

void alien(const TagView& view, std::optional<Term> tau, Term t, TermSet& out) {
  switch (t.sym()) {
    case Sym::Name:
      if (t.name_kind() == NameKind::Session && tau && view.expected_tag(t.sid()) == tau) return;
      out.insert(t);
      return;
    case Sym::Pair:
      alien(view, tau, t.left(), out);
      alien(view, tau, t.right(), out);
      return;
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
    case Sym::Hash: {
      auto head = view.head_tag(t);
      if (!(tau && head == tau)) out.insert(t);
      for (std::size_t i = 0; i < t.arity(); ++i) alien(view, head, t.arg(i), out);
      return;
    }
    default: return;
  }
}

}  // namespace

TermSet alien_subterms(const TagView& view, std::optional<Term> tau, Term t) {
  TermSet out;
  alien(view, tau, t, out);
  return out;
}

TermSet alien_subterms(const ExecutionTrace& exec, std::size_t k, std::optional<Term> tau, Term t) {
  return alien_subterms(TagView(exec, k), tau, t);
}

bool is_class_closed(const TagView& view, const SessionSet& S) {
  for (const SessionSet& c : view.classes()) {
    std::size_t in = 0;
    for (SessionId s : c) in += S.count(s);
    if (in != 0 && in != c.size()) return false;
  }
  return true;
}

ExecutionTrace restrict_to(const ExecutionTrace& exec, std::size_t k, const SessionSet& S) {
  if (!is_class_closed(TagView(exec, k), S))
    throw std::invalid_argument("session set splits a tag class");
  ExecutionTrace out;
  for (const TraceEvent& e : exec.events)
    if (S.count(e.sid)) out.events.push_back(e);
  return out;
}

namespace {

using K = FormulaKind;

struct WitnessSessions {
  const ExecutionTrace& exec;
  Evaluator ev;

  bool holds(const Formula& f, std::size_t len) { return ev.eval(f, len, {}) == Tri::True; }

  SessionSet last(std::size_t len) const {
    if (len == 0) return {};
    return {exec.events[len - 1].sid};
  }

  SessionSet pos(const Formula& f, std::size_t len) {
    switch (f->kind) {
      case K::True:
      case K::Learn:
      case K::Compromised: return {};
      case K::Status: return last(len);
      case K::Not: return neg(f->left, len);
      case K::Or: return holds(f->left, len) ? pos(f->left, len) : pos(f->right, len);
      case K::Sometime:
        for (std::size_t i = 0; i <= len; ++i)
          if (holds(f->left, i)) return pos(f->left, i);
        return {};
      case K::Exists: break;
    }
    throw std::invalid_argument("witness sessions need a quantifier-free formula");
  }

  SessionSet neg(const Formula& f, std::size_t len) {
    switch (f->kind) {
      case K::True:
      case K::Learn:
      case K::Compromised:
      case K::Sometime: return {};
      case K::Status: return last(len);
      case K::Not: return pos(f->left, len);
      case K::Or: {
        SessionSet a = neg(f->left, len);
        SessionSet b = neg(f->right, len);
        a.insert(b.begin(), b.end());
        return a;
      }
      case K::Exists: break;
    }
    throw std::invalid_argument("witness sessions need a quantifier-free formula");
  }
};

bool has_quantifier(const Formula& f) {
  if (!f) return false;
  if (f->kind == K::Exists) return true;
  return has_quantifier(f->left) || has_quantifier(f->right);
}

}  // namespace

SessionSet witness_sessions(const ExecutionTrace& exec, const Formula& f, std::span<const Term> t0,
                            DeductionOptions opts) {
  if (has_quantifier(f) || !f->free.empty())
    throw std::invalid_argument("witness sessions need a ground quantifier-free formula");
  WitnessSessions ws{exec, Evaluator(exec.events, t0, {}, opts)};
  if (!ws.holds(f, exec.size())) throw std::invalid_argument("formula does not hold on the trace");
  return ws.pos(f, exec.size());
}

}  // namespace protoforge
