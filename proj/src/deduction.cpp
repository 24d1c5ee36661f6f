#include "protoforge/deduction.hpp"

#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace protoforge {

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Hypothesis: return "hyp";
    case Rule::Axiom: return "axiom";
    case Rule::Pair: return "pair";
    case Rule::Encs: return "encs";
    case Rule::Enca: return "enca";
    case Rule::Sign: return "sign";
    case Rule::Hash: return "h";
    case Rule::ProjLeft: return "proj1";
    case Rule::ProjRight: return "proj2";
    case Rule::DecryptSym: return "decs";
    case Rule::DecryptAsym: return "deca";
    case Rule::OpenSign: return "open-sign";
  }
  return "?";
}

bool is_composition(Rule r) {
  return r == Rule::Pair || r == Rule::Encs || r == Rule::Enca || r == Rule::Sign || r == Rule::Hash;
}

bool is_decomposition(Rule r) {
  return r == Rule::ProjLeft || r == Rule::ProjRight || r == Rule::DecryptSym || r == Rule::DecryptAsym ||
         r == Rule::OpenSign;
}

namespace {

Proof node(Rule r, Term c, std::vector<Proof> ps = {}) {
  return std::make_shared<const ProofNode>(ProofNode{r, c, std::move(ps)});
}

Rule compose_rule(Sym s) {
  switch (s) {
    case Sym::Pair: return Rule::Pair;
    case Sym::Encs: return Rule::Encs;
    case Sym::Enca: return Rule::Enca;
    case Sym::Sign: return Rule::Sign;
    default: return Rule::Hash;
  }
}

bool composable(Term t) {
  Sym s = t.sym();
  return s == Sym::Pair || s == Sym::Encs || s == Sym::Enca || s == Sym::Sign || s == Sym::Hash;
}

}  // namespace

KnowledgeBase::KnowledgeBase(DeductionOptions opts) : opts_(opts) {}

void KnowledgeBase::insert(Term t, std::size_t level, Rule rule, Term parent, Term key) {
  if (!known_.emplace(t, Entry{level, rule, parent, key, known_.size()}).second) return;
  switch (t.sym()) {
    case Sym::Pair:
      insert(t.left(), level, Rule::ProjLeft, t, Term());
      insert(t.right(), level, Rule::ProjRight, t, Term());
      break;
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign:
      pending_.push_back(t);
      break;
    default:
      break;
  }
}

void KnowledgeBase::add_level(std::span<const Term> added) {
  TermSet hyps = level_hyps_.empty() ? TermSet{} : level_hyps_.back();
  for (Term t : added) {
    if (!t.is_ground()) throw std::invalid_argument("knowledge must be ground: " + to_string(t));
    hyps.insert(t);
  }
  level_hyps_.push_back(std::move(hyps));
  memo_.emplace_back();
  std::size_t level = levels();
  for (Term t : added) insert(t, level, Rule::Hypothesis, Term(), Term());
  saturate(level);
}

void KnowledgeBase::saturate(std::size_t level) {
  bool progress = true;
  while (progress) {
    progress = false;
    std::unordered_map<Term, bool> scratch;
    std::vector<Term> still;
    std::vector<Term> work;
    work.swap(pending_);
    for (Term c : work) {
      Term key;
      Rule rule;
      if (c.sym() == Sym::Encs) {
        key = c.right();
        rule = Rule::DecryptSym;
      } else if (c.sym() == Sym::Enca) {
        if (c.right().sym() != Sym::Pub) continue;  // never openable
        key = Term::priv(c.right().arg(0));
        rule = Rule::DecryptAsym;
      } else {
        if (!opts_.open_signatures) continue;
        rule = Rule::OpenSign;
      }
      if (key.is_null() || synth(level, key, scratch)) {
        insert(c.left(), level, rule, c, key);
        progress = true;
        scratch.clear();
      } else {
        still.push_back(c);
      }
    }
    // Entries queued by insert() during this round are retried next round.
    still.insert(still.end(), pending_.begin(), pending_.end());
    pending_.swap(still);
  }
}

bool KnowledgeBase::synth(std::size_t level, Term t, std::unordered_map<Term, bool>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  bool ok = false;
  if (auto it = known_.find(t); it != known_.end() && it->second.level <= level) {
    ok = true;
  } else if (is_intruder_axiom(t)) {
    ok = true;
  } else if (composable(t)) {
    ok = true;
    for (std::size_t i = 0; i < t.arity() && ok; ++i) ok = synth(level, t.arg(i), memo);
  }
  memo.emplace(t, ok);
  return ok;
}

bool KnowledgeBase::derivable_at(std::size_t level, Term t) {
  if (level == 0 || level > levels()) return false;
  if (!t.is_ground()) return false;
  return synth(level, t, memo_[level - 1]);
}

std::optional<std::size_t> KnowledgeBase::min_level(Term t) {
  for (std::size_t l = 1; l <= levels(); ++l)
    if (derivable_at(l, t)) return l;
  return std::nullopt;
}

bool KnowledgeBase::is_hypothesis(std::size_t level, Term t) const {
  return level >= 1 && level <= levels() && level_hyps_[level - 1].count(t);
}

TermSet KnowledgeBase::analyzed() const {
  TermSet out;
  for (const auto& [t, e] : known_) out.insert(t);
  return out;
}

Proof KnowledgeBase::proof(Term t) {
  if (!derivable(t)) return nullptr;
  return build(t, std::numeric_limits<std::size_t>::max());
}

Proof KnowledgeBase::build(Term t, std::size_t bound) {
  if (auto it = proofs_.find({t, bound}); it != proofs_.end()) return it->second;
  std::size_t level = *min_level(t);
  Proof p;
  auto known = known_.find(t);
  if (t.is_pair()) {
    p = node(Rule::Pair, t, {build(t.left(), bound), build(t.right(), bound)});
  } else if (known != known_.end() && known->second.level <= level && known->second.seq < bound) {
    p = build_analysis(t);
  } else if (is_intruder_axiom(t)) {
    p = node(Rule::Axiom, t);
  } else {
    std::vector<Proof> ps;
    for (std::size_t i = 0; i < t.arity(); ++i) ps.push_back(build(t.arg(i), bound));
    p = node(compose_rule(t.sym()), t, std::move(ps));
  }
  proofs_.emplace(std::pair{t, bound}, p);
  return p;
}

Proof KnowledgeBase::build_analysis(Term t) {
  if (auto it = analysis_proofs_.find(t); it != analysis_proofs_.end()) return it->second;
  const Entry& e = known_.at(t);
  Proof p;
  switch (e.rule) {
    case Rule::Hypothesis:
      p = node(Rule::Hypothesis, t);
      break;
    case Rule::ProjLeft:
    case Rule::ProjRight:
    case Rule::OpenSign:
      p = node(e.rule, t, {build_analysis(e.parent)});
      break;
    default:
      p = node(e.rule, t, {build_analysis(e.parent), build(e.key, e.seq)});
      break;
  }
  analysis_proofs_.emplace(t, p);
  return p;
}

DeductionResult deduce(std::span<const Term> knowledge, Term goal, DeductionOptions opts) {
  KnowledgeBase kb(opts);
  kb.add_level(knowledge);
  DeductionResult r;
  r.proof = goal.is_ground() ? kb.proof(goal) : nullptr;
  if (!r.proof) r.saturated = kb.analyzed();
  return r;
}

bool deducible(std::span<const Term> knowledge, Term goal, DeductionOptions opts) {
  KnowledgeBase kb(opts);
  kb.add_level(knowledge);
  return kb.derivable(goal);
}

void for_each_node(const Proof& p, const std::function<void(const ProofNode&)>& fn) {
  fn(*p);
  for (const Proof& q : p->premises) for_each_node(q, fn);
}

std::size_t proof_size(const Proof& p) {
  std::size_t n = 0;
  for_each_node(p, [&](const ProofNode&) { ++n; });
  return n;
}

namespace {

bool step_ok(const ProofNode& n, const std::unordered_set<Term>& hyps, DeductionOptions opts) {
  const Term c = n.conclusion;
  auto prem = [&](std::size_t i) { return n.premises[i]->conclusion; };
  switch (n.rule) {
    case Rule::Hypothesis: return n.premises.empty() && hyps.count(c);
    case Rule::Axiom: return n.premises.empty() && is_intruder_axiom(c);
    case Rule::Pair:
    case Rule::Encs:
    case Rule::Enca:
    case Rule::Sign:
      return n.premises.size() == 2 && c.sym() == (n.rule == Rule::Pair   ? Sym::Pair
                                                   : n.rule == Rule::Encs ? Sym::Encs
                                                   : n.rule == Rule::Enca ? Sym::Enca
                                                                          : Sym::Sign) &&
             prem(0) == c.arg(0) && prem(1) == c.arg(1);
    case Rule::Hash: return n.premises.size() == 1 && c.sym() == Sym::Hash && prem(0) == c.arg(0);
    case Rule::ProjLeft: return n.premises.size() == 1 && prem(0).is_pair() && prem(0).left() == c;
    case Rule::ProjRight: return n.premises.size() == 1 && prem(0).is_pair() && prem(0).right() == c;
    case Rule::DecryptSym:
      return n.premises.size() == 2 && prem(0).sym() == Sym::Encs && prem(0).left() == c &&
             prem(0).right() == prem(1);
    case Rule::DecryptAsym:
      return n.premises.size() == 2 && prem(0).sym() == Sym::Enca && prem(0).left() == c &&
             prem(0).right().sym() == Sym::Pub && prem(1) == Term::priv(prem(0).right().arg(0));
    case Rule::OpenSign:
      return opts.open_signatures && n.premises.size() == 1 && prem(0).sym() == Sym::Sign && prem(0).left() == c;
  }
  return false;
}

bool leaves_in(const Proof& p, const std::unordered_set<Term>& hyps) {
  bool ok = true;
  for_each_node(p, [&](const ProofNode& n) {
    if (n.rule == Rule::Hypothesis && !hyps.count(n.conclusion)) ok = false;
  });
  return ok;
}

}  // namespace

bool check_proof(const Proof& p, std::span<const Term> knowledge, DeductionOptions opts) {
  if (!p) return false;
  std::unordered_set<Term> hyps(knowledge.begin(), knowledge.end());
  bool ok = true;
  for_each_node(p, [&](const ProofNode& n) { ok = ok && step_ok(n, hyps, opts); });
  return ok;
}

bool is_simple(const Proof& p, std::span<const TermList> chain, std::string* why, DeductionOptions opts) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (!p) return fail("null proof");
  KnowledgeBase kb(opts);
  std::vector<std::unordered_set<Term>> sets;
  std::unordered_set<Term> acc;
  for (const TermList& level : chain) {
    kb.add_level(level);
    acc.insert(level.begin(), level.end());
    sets.push_back(acc);
  }

  // Left-minimality: every subproof only uses hypotheses of the smallest
  // level deriving its conclusion.
  std::string msg;
  std::function<bool(const Proof&)> left_min = [&](const Proof& q) {
    auto lvl = kb.min_level(q->conclusion);
    if (!lvl) {
      msg = "conclusion not derivable from the chain: " + to_string(q->conclusion);
      return false;
    }
    if (!leaves_in(q, sets[*lvl - 1])) {
      msg = "subproof of " + to_string(q->conclusion) + " is not left-minimal";
      return false;
    }
    for (const Proof& r : q->premises)
      if (!left_min(r)) return false;
    return true;
  };
  if (!left_min(p)) return fail(msg);

  // No decomposition of a composed term; decomposed or hypothesis pairs are
  // only used as the major premise of a projection.
  std::function<bool(const Proof&, const ProofNode*, std::size_t)> walk = [&](const Proof& q, const ProofNode* parent,
                                                                             std::size_t index) {
    if (is_decomposition(q->rule) && is_composition(q->premises[0]->rule)) {
      msg = "decomposition of a composed term at " + to_string(q->conclusion);
      return false;
    }
    bool produced = q->rule == Rule::Hypothesis || q->rule == Rule::Axiom || is_decomposition(q->rule);
    if (q->conclusion.is_pair() && produced) {
      bool projected = parent && index == 0 && (parent->rule == Rule::ProjLeft || parent->rule == Rule::ProjRight);
      if (!projected) {
        msg = "pair " + to_string(q->conclusion) + " is not projected";
        return false;
      }
    }
    for (std::size_t i = 0; i < q->premises.size(); ++i)
      if (!walk(q->premises[i], q.get(), i)) return false;
    return true;
  };
  if (!walk(p, nullptr, 0)) return fail(msg);
  return true;
}

Proof simplify(const Proof& p, std::span<const TermList> chain, DeductionOptions opts) {
  std::size_t valid_at = 0;
  TermList acc;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    acc.insert(acc.end(), chain[i].begin(), chain[i].end());
    if (check_proof(p, acc, opts)) {
      valid_at = i + 1;
      break;
    }
  }
  if (valid_at == 0) throw std::invalid_argument("proof is not valid for any level of the chain");
  auto prefix = chain.subspan(0, valid_at);
  if (is_simple(p, prefix, nullptr, opts)) return p;
  KnowledgeBase kb(opts);
  for (const TermList& level : prefix) kb.add_level(level);
  return kb.proof(p->conclusion);
}

bool check_locality(const Proof& p, std::span<const Term> knowledge, Term goal) {
  TermSet allowed = subterms(knowledge);
  collect_subterms(goal, allowed);
  bool ok = true;
  for_each_node(p, [&](const ProofNode& n) {
    if (!allowed.count(n.conclusion) && !is_intruder_axiom(n.conclusion)) ok = false;
  });
  return ok;
}

std::string proof_to_string(const Proof& p) {
  std::ostringstream os;
  std::function<void(const Proof&, int)> rec = [&](const Proof& q, int indent) {
    os << std::string(static_cast<std::size_t>(indent) * 2, ' ') << to_string(q->conclusion) << "  ["
       << rule_name(q->rule) << "]\n";
    for (const Proof& r : q->premises) rec(r, indent + 1);
  };
  if (p) rec(p, 0);
  return os.str();
}

}  // namespace protoforge
