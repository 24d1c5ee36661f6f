#include "protoforge/protocol.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace protoforge {

Event Event::apply(const Substitution& s) const {
  Event e = *this;
  if (kind == EventKind::Status) {
    e.args = s.apply(args);
  } else {
    e.msg = s.apply(msg);
  }
  return e;
}

bool Event::is_ground() const {
  for (Term t : terms())
    if (!t.is_ground()) return false;
  return true;
}

std::string to_string(const Event& e, const PrintOptions& opts) {
  switch (e.kind) {
    case EventKind::Snd: return "snd " + to_string(e.msg, opts);
    case EventKind::Rcv: return "rcv " + to_string(e.msg, opts);
    case EventKind::Status: {
      std::string s = "status " + e.pred + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? "," : "") + to_string(e.args[i], opts);
      return s + ")";
    }
  }
  return "";
}

TermSet event_vars(const Event& e) {
  TermSet out;
  for (Term t : e.terms()) {
    TermSet v = vars(t);
    out.insert(v.begin(), v.end());
  }
  return out;
}

TermSet event_plaintext(const Event& e) {
  TermSet out;
  for (Term t : e.terms()) {
    TermSet p = plaintext(t);
    out.insert(p.begin(), p.end());
  }
  return out;
}

std::vector<RoleViolation> check_role(const Role& role, std::size_t k) {
  std::vector<RoleViolation> out;
  using K = RoleViolation::Kind;
  if (role.params.size() != k)
    out.push_back({K::Arity, 0, Term(),
                   "role has " + std::to_string(role.params.size()) + " parameters, expected " + std::to_string(k)});
  TermSet params(role.params.begin(), role.params.end());
  TermSet nonces(role.nonces.begin(), role.nonces.end());
  for (Term x : role.params)
    if (x.sym() != Sym::AgentVar) out.push_back({K::Malformed, 0, x, "parameter is not an agent variable"});
  for (Term y : role.nonces)
    if (y.sym() != Sym::Var || y.sid() != kNoSession) out.push_back({K::Malformed, 0, y, "nonce is not a variable"});

  TermSet received_vars, received_plain;
  for (std::size_t i = 0; i < role.body.size(); ++i) {
    const Event& e = role.body[i];
    for (Term t : e.terms())
      if (t.is_null()) out.push_back({K::Malformed, i + 1, Term(), "missing message"});
    TermSet vs = event_vars(e);
    for (Term x : vs) {
      if (x.sym() == Sym::AgentVar && !params.count(x))
        out.push_back({K::AgentVariableNotParameter, i + 1, x, "agent variable " + to_string(x) + " is not a parameter"});
      if (x.sid() != kNoSession) out.push_back({K::Malformed, i + 1, x, "role variables carry no session"});
    }
    if (e.kind == EventKind::Rcv) {
      received_vars.insert(vs.begin(), vs.end());
      TermSet pt = event_plaintext(e);
      received_plain.insert(pt.begin(), pt.end());
      continue;
    }
    for (Term x : vs) {
      if (params.count(x) || nonces.count(x) || x.sym() == Sym::AgentVar) continue;
      if (!received_vars.count(x))
        out.push_back({K::Origination, i + 1, x, to_string(x) + " is used before it is received"});
    }
    for (Term x : event_plaintext(e)) {
      if (!x.is_variable() || params.count(x) || nonces.count(x)) continue;
      if (!received_plain.count(x))
        out.push_back({K::PlaintextOrigination, i + 1, x,
                       to_string(x) + " appears in plaintext but was never received in plaintext"});
    }
  }
  return out;
}

std::vector<RoleViolation> check_protocol(const Protocol& p) {
  std::vector<RoleViolation> out;
  if (p.roles.size() != p.k)
    out.push_back({RoleViolation::Kind::Arity, 0, Term(),
                   "protocol declares " + std::to_string(p.k) + " roles but defines " + std::to_string(p.roles.size())});
  for (std::size_t j = 0; j < p.roles.size(); ++j)
    for (RoleViolation v : check_role(p.roles[j], p.k)) {
      v.message = "role " + std::to_string(j + 1) + ": " + v.message;
      out.push_back(std::move(v));
    }
  return out;
}

Substitution session_renaming(const Role& role, SessionId sid, const TermList& agents) {
  if (agents.size() != role.params.size())
    throw std::invalid_argument("session s" + std::to_string(sid) + " has " + std::to_string(agents.size()) +
                                " agents, the role has " + std::to_string(role.params.size()) + " parameters");
  Substitution s;
  for (std::size_t i = 0; i < role.params.size(); ++i) {
    if (!agents[i].is_agent()) throw std::invalid_argument("session participants must be agents");
    s.bind(role.params[i], agents[i]);
  }
  for (Term y : role.nonces) s.bind(y, Term::session_nonce(y.label(), sid));
  for (const Event& e : role.body)
    for (Term x : event_vars(e))
      if (!s.contains(x)) s.bind(x, Term::var(x.label(), sid));
  return s;
}

SymbolicTrace symbolic_trace(const Protocol& p, const Scenario& sc) {
  SymbolicTrace tr;
  std::map<SessionId, std::size_t> progress;
  for (const Step& st : sc.steps) {
    if (st.role == 0 || st.role > p.roles.size()) throw std::invalid_argument("unknown role " + std::to_string(st.role));
    auto it = tr.sessions.find(st.sid);
    if (it == tr.sessions.end()) {
      auto a = sc.agents.find(st.sid);
      if (a == sc.agents.end()) throw std::invalid_argument("no agents for session s" + std::to_string(st.sid));
      SessionInfo info{st.role, a->second, session_renaming(p.role(st.role), st.sid, a->second)};
      it = tr.sessions.emplace(st.sid, std::move(info)).first;
    } else if (it->second.role != st.role) {
      throw std::invalid_argument("session s" + std::to_string(st.sid) + " used by two roles");
    }
    std::size_t q = progress[st.sid]++;
    const Role& role = p.role(st.role);
    if (q >= role.body.size())
      throw std::invalid_argument("session s" + std::to_string(st.sid) + " exceeds the length of role " +
                                  std::to_string(st.role));
    tr.events.push_back({role.body[q].apply(it->second.renaming), st.sid, st.role});
  }
  return tr;
}

ExecutionTrace instantiate(const SymbolicTrace& tr, const Substitution& sigma) {
  ExecutionTrace exec;
  for (const TraceEvent& e : tr.events) exec.events.push_back({e.event.apply(sigma), e.sid, e.role});
  return exec;
}

ExecutionTrace prefix(const ExecutionTrace& exec, std::size_t len) {
  ExecutionTrace out;
  out.events.assign(exec.events.begin(), exec.events.begin() + static_cast<std::ptrdiff_t>(std::min(len, exec.size())));
  return out;
}

std::vector<SessionId> session_ids(const ExecutionTrace& exec) {
  std::vector<SessionId> out;
  for (const TraceEvent& e : exec.events)
    if (std::find(out.begin(), out.end(), e.sid) == out.end()) out.push_back(e.sid);
  std::sort(out.begin(), out.end());
  return out;
}

TermList knowledge(const ExecutionTrace& exec, std::size_t len) {
  TermList out;
  for (std::size_t i = 0; i < len && i < exec.size(); ++i)
    if (exec.events[i].event.kind == EventKind::Snd) out.push_back(exec.events[i].event.msg);
  return out;
}

TermList knowledge(const ExecutionTrace& exec) { return knowledge(exec, exec.size()); }

Validity check_validity(const ExecutionTrace& exec, std::span<const Term> t0, DeductionOptions opts) {
  KnowledgeBase kb(opts);
  kb.add_level(t0);
  for (std::size_t i = 0; i < exec.size(); ++i) {
    const Event& e = exec.events[i].event;
    if (!e.is_ground()) return {false, i + 1};
    if (e.kind == EventKind::Rcv && !kb.derivable(e.msg)) return {false, i + 1};
    if (e.kind == EventKind::Snd) {
      Term m = e.msg;
      kb.add_level(std::span<const Term>(&m, 1));
    }
  }
  return {};
}

bool is_compromised(Term agent, std::span<const Term> t0) {
  if (!agent.is_agent()) return false;
  if (agent.is_attacker()) return true;
  KnowledgeBase kb;
  kb.add_level(t0);
  if (kb.derivable(Term::priv(agent))) return true;
  // shk(a,v) with v != eps is never an intruder leaf, so it must be analyzed.
  for (Term t : kb.analyzed()) {
    if (t.sym() != Sym::Shk) continue;
    Term a = t.arg(0), b = t.arg(1);
    if ((a == agent && !b.is_attacker()) || (b == agent && !a.is_attacker())) return true;
  }
  return false;
}

bool is_dishonest(const TermList& agents, std::span<const Term> t0) {
  return std::any_of(agents.begin(), agents.end(), [&](Term a) { return is_compromised(a, t0); });
}

std::set<SessionId> dishonest_sessions(const std::map<SessionId, TermList>& alpha, std::span<const Term> t0) {
  std::set<SessionId> out;
  for (const auto& [sid, agents] : alpha)
    if (is_dishonest(agents, t0)) out.insert(sid);
  return out;
}

std::string to_string(const ExecutionTrace& exec) {
  std::ostringstream os;
  for (std::size_t i = 0; i < exec.size(); ++i)
    os << (i + 1) << ". [s" << exec.events[i].sid << "] " << to_string(exec.events[i].event) << "\n";
  return os.str();
}

}  // namespace protoforge
