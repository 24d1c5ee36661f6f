#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "protoforge/deduction.hpp"
#include "protoforge/term.hpp"

namespace protoforge {

enum class EventKind { Snd, Rcv, Status };

struct Event {
  EventKind kind = EventKind::Snd;
  Term msg;              // snd / rcv
  std::string pred;      // status
  TermList args;         // status

  static Event snd(Term m) { return {EventKind::Snd, m, {}, {}}; }
  static Event rcv(Term m) { return {EventKind::Rcv, m, {}, {}}; }
  static Event status(std::string p, TermList a) { return {EventKind::Status, Term(), std::move(p), std::move(a)}; }

  bool is_communication() const { return kind != EventKind::Status; }
  TermList terms() const { return kind == EventKind::Status ? args : TermList{msg}; }
  Event apply(const Substitution& s) const;
  bool is_ground() const;

  friend bool operator==(const Event& a, const Event& b) {
    return a.kind == b.kind && a.msg == b.msg && a.pred == b.pred && a.args == b.args;
  }
};

std::string to_string(const Event& e, const PrintOptions& opts = {});
TermSet event_vars(const Event& e);
TermSet event_plaintext(const Event& e);

// λ params. ν nonces. body. Parameters are agent variables, nonces are
// sessionless variables.
struct Role {
  TermList params;
  TermList nonces;
  std::vector<Event> body;
};

struct Protocol {
  std::string name;
  std::size_t k = 0;
  std::vector<Role> roles;  // role j is roles[j - 1]

  const Role& role(std::size_t j) const { return roles.at(j - 1); }
  Role& role(std::size_t j) { return roles.at(j - 1); }
};

struct RoleViolation {
  enum class Kind { Arity, AgentVariableNotParameter, Origination, PlaintextOrigination, Malformed };
  Kind kind;
  std::size_t event = 0;  // 1-based, 0 when not tied to an event
  Term variable;
  std::string message;
};

std::vector<RoleViolation> check_role(const Role& role, std::size_t k);
std::vector<RoleViolation> check_protocol(const Protocol& p);

struct Step {
  std::size_t role = 0;
  SessionId sid = kNoSession;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Scenario {
  std::vector<Step> steps;
  std::map<SessionId, TermList> agents;  // α
};

struct TraceEvent {
  Event event;
  SessionId sid = kNoSession;
  std::size_t role = 0;  // 0 when unknown
};

struct SessionInfo {
  std::size_t role = 0;
  TermList agents;
  Substitution renaming;  // σ_{r,sid}
};

struct SymbolicTrace {
  std::vector<TraceEvent> events;
  std::map<SessionId, SessionInfo> sessions;
};

// Throws std::invalid_argument when a session runs past its role or a
// session id is used by two roles.
SymbolicTrace symbolic_trace(const Protocol& p, const Scenario& sc);
Substitution session_renaming(const Role& role, SessionId sid, const TermList& agents);

struct ExecutionTrace {
  std::vector<TraceEvent> events;
  std::size_t size() const { return events.size(); }
};

ExecutionTrace instantiate(const SymbolicTrace& tr, const Substitution& sigma);
ExecutionTrace prefix(const ExecutionTrace& exec, std::size_t len);
std::vector<SessionId> session_ids(const ExecutionTrace& exec);

// Messages sent among the first `len` events.
TermList knowledge(const ExecutionTrace& exec, std::size_t len);
TermList knowledge(const ExecutionTrace& exec);

struct Validity {
  bool valid = true;
  std::size_t failing = 0;  // 1-based index of the first undeducible receive
};

Validity check_validity(const ExecutionTrace& exec, std::span<const Term> t0, DeductionOptions opts = {});
inline bool is_valid(const ExecutionTrace& exec, std::span<const Term> t0, DeductionOptions opts = {}) {
  return check_validity(exec, t0, opts).valid;
}

// T0 ⊢ priv(a) or T0 ⊢ shk(a,v) for some v ≠ eps. T0 is a set of atoms.
bool is_compromised(Term agent, std::span<const Term> t0);
bool is_dishonest(const TermList& agents, std::span<const Term> t0);
std::set<SessionId> dishonest_sessions(const std::map<SessionId, TermList>& alpha, std::span<const Term> t0);

std::string to_string(const ExecutionTrace& exec);

}  // namespace protoforge
