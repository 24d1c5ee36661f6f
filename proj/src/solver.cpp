#include "protoforge/solver.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>

namespace protoforge {

namespace {

constexpr std::size_t kGoalLevel = std::numeric_limits<std::size_t>::max() / 4;

}  // namespace

ConstraintSystem ConstraintSystem::from_trace(const std::vector<TraceEvent>& events, std::span<const Term> t0) {
  ConstraintSystem cs;
  for (Term t : t0) cs.add_knowledge(t, 0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i].event;
    if (e.kind == EventKind::Snd) cs.add_knowledge(e.msg, 2 * (i + 1));
    if (e.kind == EventKind::Rcv) cs.add_constraint(e.msg, 2 * (i + 1));
  }
  return cs;
}

void ConstraintSystem::add_knowledge(Term t, std::size_t level) { items_.push_back({sigma_.apply(t), level}); }

void ConstraintSystem::add_constraint(Term goal, std::size_t level) {
  constraints_.push_back({sigma_.apply(goal), level});
}

void ConstraintSystem::add_goal(Term goal) { add_constraint(goal, kGoalLevel); }

void ConstraintSystem::apply(const Substitution& s) {
  for (KnowledgeItem& k : items_) k.term = s.apply(k.term);
  for (Constraint& c : constraints_) c.goal = s.apply(c.goal);
  sigma_ = sigma_.then(s);
}

std::size_t ConstraintSystem::top_level() const {
  std::size_t top = 0;
  for (const KnowledgeItem& k : items_) top = std::max(top, k.level);
  for (const Constraint& c : constraints_)
    if (c.level != kGoalLevel) top = std::max(top, c.level);
  return top;
}

namespace {

struct Item {
  Term term;
  std::size_t level = 0;
  bool done = false;
};

struct State {
  Substitution sigma;
  std::vector<Item> items;
  std::vector<Constraint> open;
  std::vector<Constraint> solved;
};

struct Interrupted {
  SolveStatus status;
};

bool is_composed(Term t) {
  switch (t.sym()) {
    case Sym::Pair:
    case Sym::Hash:
    case Sym::Encs:
    case Sym::Enca:
    case Sym::Sign: return true;
    default: return false;
  }
}

class Solver {
 public:
  Solver(const SolverContext& ctx, const std::function<bool(const SolvedForm&)>& emit) : ctx_(ctx), emit_(emit) {
    owners_ = ctx.agents;
    owners_.push_back(Term::attacker());
    std::sort(owners_.begin(), owners_.end());
    owners_.erase(std::unique(owners_.begin(), owners_.end()), owners_.end());
  }

  bool run(State st) {
    budget();
    if (!analyze(st)) return false;

    std::vector<Constraint> open;
    for (const Constraint& c : st.open) (c.goal.is_variable() ? st.solved : open).push_back(c);
    st.open = std::move(open);
    if (st.open.empty()) return emit_(SolvedForm{st.sigma, st.solved});

    auto pick = std::min_element(st.open.begin(), st.open.end(),
                                 [](const Constraint& a, const Constraint& b) { return a.level < b.level; });
    Constraint c = *pick;
    st.open.erase(pick);
    Term m = c.goal;

    if (m.is_ground()) {
      if (is_intruder_axiom(m) || (m.is_key() && key_known(m))) return run(std::move(st));
      for (const Item& it : st.items)
        if (it.level < c.level && it.term == m) return run(std::move(st));
    }
    for (std::size_t i = 0; i < st.items.size(); ++i) {
      const Item& it = st.items[i];
      if (it.level >= c.level || it.term.is_variable() || it.term.is_pair()) continue;
      if (m.is_ground() && it.term.is_ground()) continue;
      auto s = mgu(m, it.term);
      if (!s) continue;
      State b = st;
      apply(b, *s);
      if (!run(std::move(b))) return false;
    }
    if (is_composed(m)) {
      for (std::size_t i = 0; i < m.arity(); ++i) st.open.push_back({m.arg(i), c.level});
      return run(std::move(st));
    }
    return true;
  }

 private:
  void budget() {
    if (++steps_ % 256 != 0) return;
    if (ctx_.cancel && ctx_.cancel->load(std::memory_order_relaxed)) throw Interrupted{SolveStatus::Stopped};
    if (ctx_.deadline && std::chrono::steady_clock::now() > *ctx_.deadline) throw Interrupted{SolveStatus::Timeout};
  }

  bool key_known(Term k) const {
    if (is_intruder_axiom(k)) return true;
    for (Term t : ctx_.t0) {
      if (t == k) return true;
      if (k.sym() == Sym::Shk && t.sym() == Sym::Shk && t.arg(0) == k.arg(1) && t.arg(1) == k.arg(0)) return true;
    }
    return false;
  }

  // Knowledge levels at or after `from`.
  static std::vector<std::size_t> times(const State& st, std::size_t from) {
    std::set<std::size_t> out;
    for (const Item& it : st.items)
      if (it.level >= from) out.insert(it.level);
    return {out.begin(), out.end()};
  }

  static void apply(State& st, const Substitution& s) {
    st.sigma = st.sigma.then(s);
    for (Item& it : st.items) {
      Term t = s.apply(it.term);
      if (t != it.term) {
        it.term = t;
        it.done = false;
      }
    }
    for (Constraint& c : st.open) c.goal = s.apply(c.goal);
    std::vector<Constraint> solved;
    for (Constraint c : st.solved) {
      c.goal = s.apply(c.goal);
      (c.goal.is_variable() ? solved : st.open).push_back(c);
    }
    st.solved = std::move(solved);
  }

  // Closes the knowledge under decomposition. Branches where the decision
  // depends on the rest of the run are explored recursively; the current
  // state continues as the branch that does not decrypt.
  bool analyze(State& st) {
    for (std::size_t i = 0; i < st.items.size(); ++i) {
      if (st.items[i].done) continue;
      st.items[i].done = true;
      Term t = st.items[i].term;
      std::size_t lv = st.items[i].level;
      switch (t.sym()) {
        case Sym::Pair:
          st.items.push_back({t.left(), lv});
          st.items.push_back({t.right(), lv});
          break;
        case Sym::Sign:
          if (ctx_.deduction.open_signatures) st.items.push_back({t.arg(0), lv});
          break;
        case Sym::Enca: {
          Term k = t.arg(1);
          if (k.sym() == Sym::Pub) {
            if (k.arg(0).is_agent() && key_known(Term::priv(k.arg(0)))) st.items.push_back({t.arg(0), lv});
          } else if (k.sym() == Sym::Var) {
            for (Term a : owners_) {
              if (!key_known(Term::priv(a))) continue;
              Substitution s;
              s.bind(k, Term::pub(a));
              State b = st;
              apply(b, s);
              if (!run(std::move(b))) return false;
            }
          }
          break;
        }
        case Sym::Encs: {
          Term k = t.arg(1);
          if (k.is_ground() && k.is_key()) {
            if (key_known(k)) st.items.push_back({t.arg(0), lv});
            break;
          }
          // The key may only become known later in the run.
          for (std::size_t q : times(st, lv)) {
            State b = st;
            b.items.push_back({t.arg(0), q});
            b.open.push_back({k, q + 1});
            if (!run(std::move(b))) return false;
          }
          break;
        }
        default: break;
      }
    }
    return true;
  }

  const SolverContext& ctx_;
  const std::function<bool(const SolvedForm&)>& emit_;
  TermList owners_;
  std::size_t steps_ = 0;
};

}  // namespace

SolveStatus solve_symbolic(const ConstraintSystem& cs, const SolverContext& ctx,
                           const std::function<bool(const SolvedForm&)>& emit) {
  State st;
  st.sigma = cs.substitution();
  for (const KnowledgeItem& k : cs.knowledge()) st.items.push_back({k.term, k.level});
  st.open = cs.constraints();
  Solver solver(ctx, emit);
  try {
    return solver.run(std::move(st)) ? SolveStatus::Exhausted : SolveStatus::Stopped;
  } catch (const Interrupted& i) {
    return i.status;
  }
}

Substitution ground_open(const SolvedForm& sf, std::span<const Term> terms) {
  std::set<std::string, std::less<>> used;
  TermSet open;
  for (Term t : terms) {
    Term u = sf.sigma.apply(t);
    for (Term n : names(u))
      if (n.name_kind() == NameKind::Intruder) used.insert(std::string(n.label()));
    for (Term x : vars(u))
      if (x.is_variable()) open.insert(x);
  }
  for (const Constraint& c : sf.open) open.insert(c.goal);
  Substitution g;
  std::size_t next = 1;
  for (Term x : open) {
    if (x.sym() == Sym::AgentVar) {
      g.bind(x, Term::attacker());
      continue;
    }
    std::string label;
    do label = "x" + std::to_string(next++);
    while (used.count(label));
    g.bind(x, Term::intruder_nonce(label));
  }
  return g;
}

bool check_solution(const ConstraintSystem& cs, const Substitution& s, DeductionOptions opts) {
  std::map<std::size_t, TermList> by_level;
  for (const KnowledgeItem& k : cs.knowledge()) {
    Term t = s.apply(k.term);
    if (!t.is_ground()) return false;
    by_level[k.level].push_back(t);
  }
  KnowledgeBase kb(opts);
  kb.add_level({});
  std::vector<std::size_t> levels;
  for (auto& [lv, ts] : by_level) {
    kb.add_level(ts);
    levels.push_back(lv);
  }
  for (const Constraint& c : cs.constraints()) {
    Term g = s.apply(c.goal);
    if (!g.is_ground()) return false;
    std::size_t n = std::lower_bound(levels.begin(), levels.end(), c.level) - levels.begin();
    if (!kb.derivable_at(n + 1, g)) return false;
  }
  return true;
}

SolveStatus solve(const ConstraintSystem& cs, const SolverContext& ctx,
                  const std::function<bool(const Substitution&)>& emit) {
  TermList terms;
  for (const KnowledgeItem& k : cs.knowledge()) terms.push_back(k.term);
  for (const Constraint& c : cs.constraints()) terms.push_back(c.goal);
  std::set<std::map<Term, Term>> seen;
  return solve_symbolic(cs, ctx, [&](const SolvedForm& sf) {
    Substitution full = sf.sigma.then(ground_open(sf, terms));
    if (!check_solution(cs, full, ctx.deduction)) return true;
    if (!seen.insert(full.bindings()).second) return true;
    return emit(full);
  });
}

}  // namespace protoforge
