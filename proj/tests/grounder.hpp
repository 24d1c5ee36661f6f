#pragma once

// Exhaustive attack search for tiny protocols: every interleaving without
// symmetry reduction, grounding each event's variables over the subterms of
// the ground prefix as the event is taken, and checking receives with the
// closure oracle.

#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "protoforge/dsl.hpp"
#include "protoforge/logic.hpp"
#include "protoforge/protocol.hpp"

namespace protoforge::testing {

class Grounder {
 public:
  Grounder(const Protocol& p, Formula attack, TermList t0, TermList pool, std::size_t per_role)
      : p_(p), attack_(std::move(attack)), t0_(std::move(t0)), pool_(std::move(pool)), per_role_(per_role) {}

  // A valid execution satisfying the formula, if any.
  std::optional<ExecutionTrace> find() {
    State st;
    st.count.assign(p_.k + 1, 0);
    st.known = t0_;
    if (search(st)) return st.exec;
    return std::nullopt;
  }

 private:
  struct Session {
    std::size_t role;
    Substitution renaming;
    std::size_t next;
  };
  struct State {
    std::vector<Session> sessions;
    std::vector<std::size_t> count;
    Substitution sigma;
    TermList known;
    ExecutionTrace exec;
  };

  // Extends the ground prefix by one step of an existing or a new session.
  bool search(State& st) {
    if (satisfies(st.exec, t0_, attack_).sat) return true;
    for (std::size_t i = 0; i < st.sessions.size(); ++i)
      if (st.sessions[i].next < p_.role(st.sessions[i].role).body.size() && step(st, i)) return true;
    for (std::size_t j = 1; j <= p_.k; ++j) {
      if (st.count[j] >= per_role_ || p_.role(j).body.empty()) continue;
      std::size_t arity = p_.role(j).params.size();
      std::vector<std::size_t> idx(arity, 0);
      while (true) {
        TermList alpha;
        for (std::size_t x : idx) alpha.push_back(pool_[x]);
        State c = st;
        SessionId sid = SessionId(c.sessions.size() + 1);
        c.sessions.push_back({j, session_renaming(p_.role(j), sid, alpha), 0});
        ++c.count[j];
        if (step(c, c.sessions.size() - 1)) {
          st = std::move(c);
          return true;
        }
        std::size_t i = 0;
        while (i < arity && ++idx[i] == pool_.size()) idx[i++] = 0;
        if (i == arity) break;
      }
    }
    return false;
  }

  bool step(State& st, std::size_t i) {
    const Session& s = st.sessions[i];
    Event e = p_.role(s.role).body[s.next].apply(s.renaming).apply(st.sigma);
    TermSet open;
    for (Term t : e.terms())
      for (Term x : vars(t)) open.insert(x);
    return assign(st, i, e, TermList(open.begin(), open.end()), 0, st.sigma);
  }

  bool assign(State& st, std::size_t i, const Event& e, const TermList& open, std::size_t v,
              const Substitution& sigma) {
    if (v == open.size()) {
      Event g = e.apply(sigma);
      if (g.kind == EventKind::Rcv && !brute_force_deducible(st.known, g.msg)) return false;
      State c = st;
      c.sigma = sigma;
      if (g.kind == EventKind::Snd) c.known.push_back(g.msg);
      c.exec.events.push_back({g, SessionId(i + 1), c.sessions[i].role});
      ++c.sessions[i].next;
      if (!search(c)) return false;
      st = std::move(c);
      return true;
    }
    for (Term val : candidates(st, e, sigma)) {
      Substitution b;
      b.bind(open[v], val);
      if (assign(st, i, e, open, v + 1, sigma.then(b))) return true;
    }
    return false;
  }

  TermList candidates(const State& st, const Event& e, const Substitution& sigma) const {
    TermSet out(pool_.begin(), pool_.end());
    out.insert(Term::intruder_nonce("g"));
    for (Term t : t0_) out.insert(t);
    for (const TraceEvent& te : st.exec.events)
      for (Term t : te.event.terms())
        for (Term u : subterms(t)) out.insert(u);
    for (Term t : e.apply(sigma).terms())
      for (Term u : subterms(t))
        if (u.is_ground()) out.insert(u);
    return TermList(out.begin(), out.end());
  }

  const Protocol& p_;
  Formula attack_;
  TermList t0_;
  TermList pool_;
  std::size_t per_role_;
};

// Random two-role protocols of three messages that run to completion
// between honest agents. Each message carries one or two values known to
// its sender under a random wrapper.
class TinyProtocols {
 public:
  explicit TinyProtocols(std::uint64_t seed) : rng_(seed) {}

  Protocol next() {
    while (true) {
      Protocol p = parse_protocol(text());
      if (check_protocol(p).empty()) return p;
    }
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  // Values: 0 = A, 1 = B, 2 = nonce of role 1, 3 = nonce of role 2.
  static std::string render(std::size_t value, std::size_t role) {
    switch (value) {
      case 0: return "A";
      case 1: return "B";
      case 2: return role == 1 ? "n[y]" : "?u";
      default: return role == 2 ? "n[w]" : "?v";
    }
  }

  std::string text() {
    std::ostringstream r1, r2;
    std::vector<bool> known1{true, true, true, false}, known2{true, true, false, true};
    for (int m = 0; m < 3; ++m) {
      std::size_t sender = m % 2 == 0 ? 1 : 2;
      std::vector<bool>& ks = sender == 1 ? known1 : known2;
      std::vector<std::size_t> vals;
      std::size_t n = 1 + pick(2);
      for (std::size_t i = 0; i < n; ++i) {
        // Nonces are drawn twice as often as agent names.
        static constexpr std::size_t kWeighted[] = {0, 1, 2, 2, 3, 3};
        std::size_t v;
        do v = kWeighted[pick(6)];
        while (!ks[v]);
        vals.push_back(v);
      }
      std::size_t wrap = pick(4);
      auto build = [&](std::size_t role) {
        std::string body = render(vals[0], role);
        if (vals.size() > 1) body = "<" + body + ", " + render(vals[1], role) + ">";
        std::string to = sender == 1 ? "B" : "A";
        std::string from = sender == 1 ? "A" : "B";
        switch (wrap) {
          case 0: return "enca(" + body + ", pub(" + to + "))";
          case 1: return "encs(" + body + ", shk(A, B))";
          case 2: return "sign(<" + body + ", " + from + ">, priv(" + from + "))";
          default: return body;
        }
      };
      std::string snd = build(sender), rcv = build(3 - sender);
      (sender == 1 ? r1 : r2) << "  snd " << snd << "\n";
      (sender == 1 ? r2 : r1) << "  rcv " << rcv << "\n";
      for (std::size_t v : vals) (sender == 1 ? known2 : known1)[v] = true;
    }
    return "protocol Tiny (2)\nrole 1 params A B nonces y:\n" + r1.str() + "role 2 params A B nonces w:\n" + r2.str();
  }

  std::mt19937_64 rng_;
};

}  // namespace protoforge::testing
