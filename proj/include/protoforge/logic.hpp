#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "protoforge/deduction.hpp"
#include "protoforge/protocol.hpp"
#include "protoforge/term.hpp"

namespace protoforge {

enum class FormulaKind { True, Learn, Status, Compromised, Not, Or, Exists, Sometime };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FormulaKind kind = FormulaKind::True;
  Term term;          // learn, C, bound variable of exists
  std::string pred;   // status
  TermList args;      // status
  Formula left;       // not, or, exists, sometime
  Formula right;      // or
  TermSet free;       // free variables, filled by the constructors below
};

namespace fml {

Formula truth();
Formula falsity();
Formula learn(Term t);
Formula status(std::string pred, TermList args);
Formula compromised(Term u);
Formula honest(Term u);  // NC(u)
Formula neg(Formula f);
Formula disj(Formula a, Formula b);
Formula conj(Formula a, Formula b);
Formula implies(Formula a, Formula b);
Formula exists(Term x, Formula f);
Formula forall(Term x, Formula f);
Formula sometime(Formula f);
// Left-nested fold; an empty list gives true (conj) or false (disj).
Formula conj(std::span<const Formula> fs);
Formula disj(std::span<const Formula> fs);
Formula exists(std::span<const Term> xs, Formula f);

}  // namespace fml

// Formula variables are sessionless Var terms.
Term formula_var(std::string_view name);

// Structural problems: ψ-layer violations under sometime, free variables,
// variables quantified twice. Empty when the formula is well formed.
std::vector<std::string> check_formula(const Formula& f);

// Syntax: exists/forall x y . φ, sometime, learn(t), C(u), NC(u), true,
// false, P(t1,..,tn), !, &, |, =>. Quantifier bodies extend to the right.
Formula parse_formula(std::string_view text);
std::string to_string(const Formula& f);

Formula substitute(const Formula& f, const Substitution& s);
TermSet free_vars(const Formula& f);

// ‖φ‖
std::size_t formula_size(const Formula& f);
// ‖φ‖⁻
std::size_t formula_size_neg(const Formula& f);

struct AttackViolation {
  int condition;  // 1-4; 0 for shape problems (not ∃*-prenex, not closed)
  std::string message;
};

struct AttackFormula {
  TermList prefix;
  Formula matrix;
  Formula formula;
};

struct AttackClassification {
  std::optional<AttackFormula> attack;
  std::vector<AttackViolation> violations;
  bool ok() const { return attack.has_value(); }
};

AttackClassification classify_attack(const Formula& f);

// St(exec) ∪ agents(exec) ∪ agents(T0) ∪ {eps} ∪ T0 ∪ {one fresh intruder nonce}.
TermList default_witness_pool(const ExecutionTrace& exec, std::span<const Term> t0);

// Pushes existentials through disjunctions.
Formula miniscope(const Formula& f);

enum class Tri { False, Unknown, True };

// Trace semantics. Existentials range over the witness pool. In symbolic
// mode the events may contain variables: learn is undetermined, status
// atoms use unification, and quantifiers range over the status arguments
// of the trace plus a marker that matches no status event. A False answer
// in symbolic mode holds for every instance of the trace, provided
// quantified variables only occur directly as status arguments.
class Evaluator {
 public:
  Evaluator(const std::vector<TraceEvent>& events, std::span<const Term> t0, TermList pool,
            DeductionOptions opts = {});
  static Evaluator symbolic(const std::vector<TraceEvent>& events, std::span<const Term> t0);

  bool holds(const Formula& f) { return holds(f, events_.size()); }
  bool holds(const Formula& f, std::size_t len);
  // Bindings of the leading existentials (across top-level disjunctions)
  // for a satisfied formula.
  std::optional<Substitution> witness(const Formula& f);
  Tri eval(const Formula& f, std::size_t len, const Substitution& env);
  bool learnable(Term m, std::size_t len);
  bool compromised(Term u);

  const TermList& pool() const { return pool_; }

 private:
  Tri status_at(const FormulaNode& f, std::size_t len, const Substitution& env);
  std::optional<Substitution> find(const Formula& f, std::size_t len, const Substitution& env);

  const std::vector<TraceEvent>& events_;
  TermList t0_;
  TermList pool_;
  DeductionOptions opts_;
  bool symbolic_ = false;
  Term marker_;
  TermList status_args_;
  std::unique_ptr<KnowledgeBase> kb_;
  std::vector<std::size_t> level_of_len_;
  std::unordered_map<Term, bool> compromised_;
};

struct Satisfaction {
  bool sat = false;
  Substitution witness;
};

Satisfaction satisfies(const ExecutionTrace& exec, std::span<const Term> t0, const Formula& f,
                       std::optional<TermList> pool = std::nullopt, DeductionOptions opts = {});

struct AnnotatedProtocol {
  Protocol protocol;
  Formula attack;
};

// Secret(x1..xk, target) becomes the first event of role j.
AnnotatedProtocol annotate_secrecy(const Protocol& p, std::size_t role, Term target);
// Start(x_j) first and End(x1..xk) last in every role.
AnnotatedProtocol annotate_aliveness(const Protocol& p);
// Start(x_j, x_i) for i = 1..k first and End_j(x1..xk) last in role j. The
// attack formula quantifies the k*k variables up front over the disjunction
// of the per-role cases.
AnnotatedProtocol annotate_weak_agreement(const Protocol& p);

}  // namespace protoforge
