#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "protoforge/term.hpp"

namespace protoforge {

enum class Rule {
  Hypothesis,   // leaf from the knowledge set
  Axiom,        // intruder leaf: agent, N_eps, K_eps, pub(a)
  Pair,
  Encs,
  Enca,
  Sign,
  Hash,
  ProjLeft,
  ProjRight,
  DecryptSym,   // encs(u,v), v |- u
  DecryptAsym,  // enca(u,pub(v)), priv(v) |- u
  OpenSign,     // sign(u,v) |- u, only when enabled
};

const char* rule_name(Rule r);
bool is_composition(Rule r);
bool is_decomposition(Rule r);

struct ProofNode;
using Proof = std::shared_ptr<const ProofNode>;

struct ProofNode {
  Rule rule;
  Term conclusion;
  std::vector<Proof> premises;
};

struct DeductionOptions {
  bool open_signatures = false;
};

// Knowledge split into nested levels T1 ⊆ T2 ⊆ ... Each level is closed
// under decomposition when it is added. Proofs are built simple with
// respect to the whole chain: left-minimal, no decomposition of a composed
// term, and every decomposed or hypothesis pair is projected right away.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(DeductionOptions opts = {});

  // Appends a level holding all previous terms plus `added`.
  void add_level(std::span<const Term> added);
  std::size_t levels() const { return level_hyps_.size(); }

  bool derivable(Term t) { return levels() && derivable_at(levels(), t); }
  bool derivable_at(std::size_t level, Term t);
  // Smallest 1-based level deriving t.
  std::optional<std::size_t> min_level(Term t);
  // Null if t is not derivable at the top level.
  Proof proof(Term t);
  // Terms obtained by hypothesis or decomposition at the top level.
  TermSet analyzed() const;
  bool is_hypothesis(std::size_t level, Term t) const;

 private:
  struct Entry {
    std::size_t level;
    Rule rule;
    Term parent;
    Term key;
    std::size_t seq;  // insertion order; an entry only depends on earlier ones
  };

  void insert(Term t, std::size_t level, Rule rule, Term parent, Term key);
  void saturate(std::size_t level);
  bool synth(std::size_t level, Term t, std::unordered_map<Term, bool>& memo);
  // Proof of t from entries inserted before `bound`.
  Proof build(Term t, std::size_t bound);
  Proof build_analysis(Term t);

  DeductionOptions opts_;
  std::unordered_map<Term, Entry> known_;
  std::vector<Term> pending_;
  std::vector<TermSet> level_hyps_;
  std::vector<std::unordered_map<Term, bool>> memo_;
  std::map<std::pair<Term, std::size_t>, Proof> proofs_;
  std::unordered_map<Term, Proof> analysis_proofs_;
};

struct DeductionResult {
  Proof proof;       // null when not deducible
  TermSet saturated; // analyzed knowledge, reported on failure
  bool deducible() const { return proof != nullptr; }
};

DeductionResult deduce(std::span<const Term> knowledge, Term goal, DeductionOptions opts = {});
bool deducible(std::span<const Term> knowledge, Term goal, DeductionOptions opts = {});

// Checks that every node is an instance of a rule and every hypothesis is
// in `knowledge`.
bool check_proof(const Proof& p, std::span<const Term> knowledge, DeductionOptions opts = {});
// Checks the three simplicity conditions against a chain of nested sets.
// On failure `why` describes the first violation.
bool is_simple(const Proof& p, std::span<const TermList> chain, std::string* why = nullptr,
               DeductionOptions opts = {});
// Returns p unchanged when it is already simple, otherwise a simple proof
// of the same conclusion from the first level where p is valid.
Proof simplify(const Proof& p, std::span<const TermList> chain, DeductionOptions opts = {});
// Every node is labelled by a term of St(T ∪ {u}) or an intruder leaf.
bool check_locality(const Proof& p, std::span<const Term> knowledge, Term goal);

std::size_t proof_size(const Proof& p);
std::string proof_to_string(const Proof& p);
void for_each_node(const Proof& p, const std::function<void(const ProofNode&)>& fn);

}  // namespace protoforge
