#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "protoforge/deduction.hpp"
#include "protoforge/protocol.hpp"
#include "protoforge/term.hpp"

namespace protoforge {

// Levels order the knowledge: an item is usable by constraints of a
// strictly greater level. A trace event at position p has level 2p, so a
// receive sees exactly the messages sent before it; T0 has level 0.
struct KnowledgeItem {
  Term term;
  std::size_t level = 0;
};

struct Constraint {
  Term goal;
  std::size_t level = 0;
};

class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  static ConstraintSystem from_trace(const std::vector<TraceEvent>& events, std::span<const Term> t0);

  void add_knowledge(Term t, std::size_t level);
  void add_constraint(Term goal, std::size_t level);
  // Goal deducible from all the knowledge.
  void add_goal(Term goal);
  // Applies s to every item and constraint.
  void apply(const Substitution& s);

  const std::vector<KnowledgeItem>& knowledge() const { return items_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Substitution& substitution() const { return sigma_; }
  std::size_t top_level() const;

 private:
  std::vector<KnowledgeItem> items_;
  std::vector<Constraint> constraints_;
  Substitution sigma_;
};

struct SolverContext {
  // Long-term keys in T0 or K_eps are the only derivable ones; the caller
  // checks this with the key hypothesis.
  TermList t0;
  // Candidate owners of a variable asymmetric key.
  TermList agents;
  DeductionOptions deduction;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  const std::atomic<bool>* cancel = nullptr;
};

// Every remaining constraint has a variable goal: the substitution is a
// solution for any deducible choice of those variables.
struct SolvedForm {
  Substitution sigma;
  std::vector<Constraint> open;
};

enum class SolveStatus { Exhausted, Stopped, Timeout };

// Enumerates solved forms until `emit` returns false. Distinct branches may
// produce the same solved form.
SolveStatus solve_symbolic(const ConstraintSystem& cs, const SolverContext& ctx,
                           const std::function<bool(const SolvedForm&)>& emit);

// Ground solutions: the variables left open become distinct fresh intruder
// nonces, and each solution is checked against the original constraints
// with the deduction engine before it is emitted.
SolveStatus solve(const ConstraintSystem& cs, const SolverContext& ctx,
                  const std::function<bool(const Substitution&)>& emit);

// Whether the ground instance cs·s satisfies every constraint.
bool check_solution(const ConstraintSystem& cs, const Substitution& s, DeductionOptions opts = {});

// Grounds the variables of sf.open (and any other variable of `terms`) with
// fresh intruder nonces not occurring in `terms`.
Substitution ground_open(const SolvedForm& sf, std::span<const Term> terms);

}  // namespace protoforge
