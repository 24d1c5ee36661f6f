#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "protoforge/logic.hpp"
#include "protoforge/protocol.hpp"
#include "protoforge/term.hpp"
#include "protoforge/transform.hpp"

namespace protoforge {

using SessionSet = std::set<SessionId>;

// Expected tags and tag classes of an execution of a k-party transformed
// protocol. A missing expected tag (fewer than k communication events) is
// an empty optional.
class TagView {
 public:
  TagView(const ExecutionTrace& exec, std::size_t k);

  std::size_t k() const { return k_; }
  const ExecutionTrace& exec() const { return exec_; }
  std::optional<Term> expected_tag(SessionId sid) const;
  // Every defined expected tag of the trace.
  const TermSet& expected_tags() const { return tags_; }
  // Sessions with the same defined expected tag, or {sid} when undefined.
  SessionSet same_tag_as(SessionId sid) const;
  // Partition of the sessions of the trace into tag classes.
  std::vector<SessionSet> classes() const;
  // tau when t = f(<tau,u>,..) for a crypto symbol f and tau is an
  // expected tag of the trace.
  std::optional<Term> head_tag(Term t) const;

 private:
  const ExecutionTrace& exec_;
  std::size_t k_;
  std::map<SessionId, std::optional<Term>> expected_;
  TermSet tags_;
};

std::optional<Term> expected_tag(const ExecutionTrace& exec, std::size_t k, SessionId sid);
SessionSet same_tag_as(const ExecutionTrace& exec, std::size_t k, SessionId sid);
std::optional<Term> head_tag(const ExecutionTrace& exec, std::size_t k, Term t);

// Position-1.1 subterms of the cryptographic subterms of the events of sid.
// Throws std::invalid_argument when a cryptographic subterm has no pair at
// position 1.
TermSet tags_of(const ExecutionTrace& exec, SessionId sid);

struct WellFormedness {
  int condition = 0;      // 0 when well formed, otherwise 1, 2 or 3
  std::size_t event = 0;  // 1-based index of the offending event
  SessionId sid = kNoSession;
  Term witness;           // untagged ciphertext, foreign tag or foreign name
  std::string message;
  bool ok() const { return condition == 0; }
};

// Throws std::invalid_argument for hashed schemes, whose tags are not
// expected tags.
WellFormedness check_well_formed(const ExecutionTrace& exec, std::size_t k, TagScheme scheme = {});
inline bool is_well_formed(const ExecutionTrace& exec, std::size_t k, TagScheme scheme = {}) {
  return check_well_formed(exec, k, scheme).ok();
}

// Replaces foreign names and cryptographic subterms not tagged with the
// session's expected tag by abstraction nonces indexed by its tag class.
Term abstract_term(Term t, const TagView& view, SessionId sid);
Term abstract_term(Term t, const ExecutionTrace& exec, std::size_t k, SessionId sid);
ExecutionTrace abstract_trace(const ExecutionTrace& exec, std::size_t k);

// Subterms the abstraction treats as foreign under the active tag `tau`.
TermSet alien_subterms(const TagView& view, std::optional<Term> tau, Term t);
TermSet alien_subterms(const ExecutionTrace& exec, std::size_t k, std::optional<Term> tau, Term t);

// Events of the sessions in S, in order. Throws std::invalid_argument when
// S splits a tag class.
ExecutionTrace restrict_to(const ExecutionTrace& exec, std::size_t k, const SessionSet& S);
bool is_class_closed(const TagView& view, const SessionSet& S);

// Sessions witnessing that a ground quantifier-free formula holds on exec.
// Disjunctions take the first satisfied branch; sometime takes the shortest
// satisfying prefix. Throws std::invalid_argument when the formula is not
// ground and quantifier-free or does not hold.
SessionSet witness_sessions(const ExecutionTrace& exec, const Formula& f, std::span<const Term> t0,
                            DeductionOptions opts = {});

}  // namespace protoforge
