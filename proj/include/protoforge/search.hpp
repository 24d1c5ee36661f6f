#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "protoforge/deduction.hpp"
#include "protoforge/logic.hpp"
#include "protoforge/protocol.hpp"
#include "protoforge/solver.hpp"
#include "protoforge/term.hpp"

namespace protoforge {

// ‖φ‖ of the matrix. Throws std::invalid_argument when φ is not an attack
// formula.
std::size_t session_bound(const Formula& attack);

// One honest agent and one compromised agent: the first of each kind among
// the agents of T0, else a and eps.
TermList default_agent_pool(std::span<const Term> t0);

struct SearchConfig {
  std::optional<std::size_t> bound;  // sessions per role; ‖φ‖ when empty
  std::optional<std::size_t> honest_bound;
  std::optional<std::size_t> dishonest_bound;
  bool honest_only = false;  // no session with a compromised participant
  TermList agent_pool;       // default_agent_pool(t0) when empty
  TermList t0;
  DeductionOptions deduction;
  bool transformed = false;  // the protocol is the output of transform
  std::size_t threads = 1;
  double timeout_s = 0;       // 0 disables the deadline
  std::size_t max_nodes = 0;  // 0 disables the node budget
};

// Session limits per role after defaults are applied.
struct SessionLimits {
  std::size_t total = 0;
  std::size_t honest = 0;
  std::size_t dishonest = 0;
};
SessionLimits session_limits(const SearchConfig& cfg, const Formula* attack = nullptr);

// Partition of the pool into interchangeable agents: swapping two agents of
// a class maps T0 to itself, and agents named by the formula stay fixed.
std::vector<TermList> agent_classes(const TermList& pool, std::span<const Term> t0, const Formula* attack = nullptr);

// Every interleaving of role prefixes within the limits, up to session
// renaming (sessions are numbered by first step) and agent symmetry. Stops
// early when `emit` returns false.
void enumerate_scenarios(const Protocol& p, const SearchConfig& cfg,
                         const std::function<bool(const Scenario&)>& emit, const Formula* attack = nullptr);

// Long-term keys in plaintext positions that are not known to the
// intruder, for some instantiation of the role parameters over the pool.
struct KeyLeak {
  std::size_t role = 0;
  TermList agents;
  Term key;
};
std::vector<KeyLeak> check_key_hypothesis(const Protocol& p, std::span<const Term> t0, const TermList& pool);

struct AttackReport {
  Scenario scenario;
  std::vector<TraceEvent> symbolic;
  Substitution grounding;
  ExecutionTrace exec;
  Substitution witness;
  std::vector<Proof> proofs;  // one per receive, in order
};

// Independent re-check: the trace is the grounding of the scenario, it is
// valid and it satisfies the formula.
bool replay(const Protocol& p, const AttackReport& r, const Formula& attack, std::span<const Term> t0,
            DeductionOptions opts = {});

// Timeout covers every inconclusive search: deadline, node budget, or a
// status grounding too large to enumerate.
enum class Verdict { Secure, Attack, HypothesisViolation, Timeout };
std::string to_string(Verdict v);

struct SearchStats {
  std::size_t nodes = 0;
  std::size_t candidates = 0;
  std::size_t solved_forms = 0;
};

struct VerifyResult {
  Verdict verdict = Verdict::Secure;
  SessionLimits limits;
  TermList agent_pool;
  // Secure for any number of sessions (transformed protocols) rather than
  // within the limits only.
  bool unbounded = false;
  std::optional<AttackReport> attack;
  std::vector<KeyLeak> leaks;
  std::string message;
  SearchStats stats;
};

// Throws std::invalid_argument when φ is not an attack formula or T0 holds
// a term that is not a ground agent, name or key.
VerifyResult verify(const Protocol& p, const Formula& attack, const SearchConfig& cfg);

}  // namespace protoforge
