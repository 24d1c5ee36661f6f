#include "protoforge/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace protoforge {

std::size_t session_bound(const Formula& attack) {
  AttackClassification cls = classify_attack(attack);
  if (!cls.ok()) throw std::invalid_argument("not an attack formula: " + cls.violations.front().message);
  return formula_size(cls.attack->matrix);
}

TermList default_agent_pool(std::span<const Term> t0) {
  std::optional<Term> honest, dishonest;
  for (Term t : t0)
    for (Term a : agents(t)) {
      bool c = is_compromised(a, t0);
      if (c && !dishonest) dishonest = a;
      if (!c && !honest) honest = a;
    }
  if (!honest) {
    for (char ch = 'a'; ch <= 'z' && !honest; ++ch) {
      Term a = Term::agent(std::string(1, ch));
      if (!is_compromised(a, t0)) honest = a;
    }
  }
  return {*honest, dishonest.value_or(Term::attacker())};
}

SessionLimits session_limits(const SearchConfig& cfg, const Formula* attack) {
  SessionLimits l;
  l.total = cfg.bound ? *cfg.bound : (attack ? session_bound(*attack) : 1);
  l.honest = std::min(l.total, cfg.honest_bound.value_or(l.total));
  l.dishonest = cfg.honest_only ? 0 : std::min(l.total, cfg.dishonest_bound.value_or(l.total));
  return l;
}

namespace {

Term rename_agents(Term t, Term a, Term b) {
  if (t == a) return b;
  if (t == b) return a;
  if (t.arity() == 0) return t;
  std::vector<Term> args;
  for (std::size_t i = 0; i < t.arity(); ++i) args.push_back(rename_agents(t.arg(i), a, b));
  return Term::rebuild(t, args);
}

// shk is commutative; store it with ordered arguments.
Term normalize_key(Term t) {
  if (t.sym() == Sym::Shk && t.arg(1) < t.arg(0)) return Term::shk(t.arg(1), t.arg(0));
  return t;
}

void formula_agents(const Formula& f, TermSet& out) {
  if (!f) return;
  if (f->term) {
    TermSet a = agents(f->term);
    out.insert(a.begin(), a.end());
  }
  for (Term t : f->args) {
    TermSet a = agents(t);
    out.insert(a.begin(), a.end());
  }
  formula_agents(f->left, out);
  formula_agents(f->right, out);
}

bool swappable(Term a, Term b, std::span<const Term> t0) {
  TermSet before, after;
  for (Term t : t0) {
    before.insert(normalize_key(t));
    after.insert(normalize_key(rename_agents(t, a, b)));
  }
  return before == after;
}

bool key_known(Term k, std::span<const Term> t0) {
  if (is_intruder_axiom(k)) return true;
  k = normalize_key(k);
  for (Term t : t0)
    if (normalize_key(t) == k) return true;
  return false;
}

// α tuples for a new session, introducing unused agents of a class in
// pool order.
class AgentChooser {
 public:
  AgentChooser(const TermList& pool, std::vector<TermList> classes) : pool_(pool), classes_(std::move(classes)) {}

  std::vector<TermList> tuples(std::size_t arity, const TermSet& used) const {
    std::vector<TermList> out;
    TermList cur;
    extend(arity, used, cur, out);
    return out;
  }

 private:
  void extend(std::size_t arity, const TermSet& used, TermList& cur, std::vector<TermList>& out) const {
    if (cur.size() == arity) {
      out.push_back(cur);
      return;
    }
    for (Term a : pool_) {
      if (!used.count(a) && !first_unused(a, used)) continue;
      TermSet u = used;
      u.insert(a);
      cur.push_back(a);
      extend(arity, u, cur, out);
      cur.pop_back();
    }
  }

  bool first_unused(Term a, const TermSet& used) const {
    for (const TermList& c : classes_) {
      if (std::find(c.begin(), c.end(), a) == c.end()) continue;
      for (Term b : c)
        if (!used.count(b)) return b == a;
    }
    return false;
  }

  TermList pool_;
  std::vector<TermList> classes_;
};

class HonestyCache {
 public:
  explicit HonestyCache(std::span<const Term> t0) : t0_(t0.begin(), t0.end()) {}
  bool dishonest(const TermList& alpha) {
    auto it = cache_.find(alpha);
    if (it != cache_.end()) return it->second;
    bool d = is_dishonest(alpha, t0_);
    cache_.emplace(alpha, d);
    return d;
  }

 private:
  TermList t0_;
  std::map<TermList, bool> cache_;
};

TermList pool_of(const SearchConfig& cfg) {
  return cfg.agent_pool.empty() ? default_agent_pool(cfg.t0) : cfg.agent_pool;
}

}  // namespace

std::vector<TermList> agent_classes(const TermList& pool, std::span<const Term> t0, const Formula* attack) {
  TermSet fixed;
  if (attack) formula_agents(*attack, fixed);
  std::vector<TermList> classes;
  for (Term a : pool) {
    bool placed = false;
    if (!fixed.count(a))
      for (TermList& c : classes)
        if (!fixed.count(c.front()) && swappable(c.front(), a, t0)) {
          c.push_back(a);
          placed = true;
          break;
        }
    if (!placed) classes.push_back({a});
  }
  return classes;
}

void enumerate_scenarios(const Protocol& p, const SearchConfig& cfg,
                         const std::function<bool(const Scenario&)>& emit, const Formula* attack) {
  SessionLimits lim = session_limits(cfg, attack);
  TermList pool = pool_of(cfg);
  AgentChooser chooser(pool, agent_classes(pool, cfg.t0, attack));
  HonestyCache honesty(cfg.t0);

  struct Run {
    std::size_t role;
    std::size_t next;
  };
  std::vector<Run> runs;
  Scenario sc;
  TermSet used;
  std::vector<std::size_t> total(p.k + 1), honest(p.k + 1), dishonest(p.k + 1);

  std::function<bool()> dfs = [&]() -> bool {
    if (!emit(sc)) return false;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].next >= p.role(runs[i].role).body.size()) continue;
      ++runs[i].next;
      sc.steps.push_back({runs[i].role, SessionId(i + 1)});
      bool go = dfs();
      sc.steps.pop_back();
      --runs[i].next;
      if (!go) return false;
    }
    for (std::size_t j = 1; j <= p.k; ++j) {
      if (total[j] >= lim.total || p.role(j).body.empty()) continue;
      for (const TermList& alpha : chooser.tuples(p.role(j).params.size(), used)) {
        bool d = honesty.dishonest(alpha);
        std::size_t& count = d ? dishonest[j] : honest[j];
        if (count >= (d ? lim.dishonest : lim.honest)) continue;
        SessionId sid = SessionId(runs.size() + 1);
        TermSet saved = used;
        used.insert(alpha.begin(), alpha.end());
        ++count;
        ++total[j];
        runs.push_back({j, 1});
        sc.agents[sid] = alpha;
        sc.steps.push_back({j, sid});
        bool go = dfs();
        sc.steps.pop_back();
        sc.agents.erase(sid);
        runs.pop_back();
        --total[j];
        --count;
        used = std::move(saved);
        if (!go) return false;
      }
    }
    return true;
  };
  dfs();
}

std::vector<KeyLeak> check_key_hypothesis(const Protocol& p, std::span<const Term> t0, const TermList& pool) {
  std::vector<KeyLeak> out;
  std::set<std::pair<std::size_t, Term>> seen;
  for (std::size_t j = 1; j <= p.k; ++j) {
    const Role& r = p.role(j);
    TermSet plain;
    for (const Event& e : r.body) {
      TermSet pt = event_plaintext(e);
      plain.insert(pt.begin(), pt.end());
    }
    std::vector<std::size_t> idx(r.params.size(), 0);
    while (true) {
      Substitution s;
      TermList alpha;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        alpha.push_back(pool[idx[i]]);
        s.bind(r.params[i], pool[idx[i]]);
      }
      for (Term t : plain) {
        if (t.sym() != Sym::Priv && t.sym() != Sym::Shk) continue;
        Term k = s.apply(t);
        if (!k.is_ground() || key_known(k, t0)) continue;
        if (seen.insert({j, t}).second) out.push_back({j, alpha, k});
      }
      std::size_t i = 0;
      while (i < idx.size() && ++idx[i] == pool.size()) idx[i++] = 0;
      if (i == idx.size() || pool.empty()) break;
    }
  }
  return out;
}

bool replay(const Protocol& p, const AttackReport& r, const Formula& attack, std::span<const Term> t0,
            DeductionOptions opts) {
  SymbolicTrace st = symbolic_trace(p, r.scenario);
  if (st.events.size() != r.symbolic.size()) return false;
  for (std::size_t i = 0; i < st.events.size(); ++i)
    if (!(st.events[i].event == r.symbolic[i].event) || st.events[i].sid != r.symbolic[i].sid) return false;
  ExecutionTrace exec = instantiate(st, r.grounding);
  if (exec.size() != r.exec.size()) return false;
  for (std::size_t i = 0; i < exec.size(); ++i)
    if (!(exec.events[i].event == r.exec.events[i].event)) return false;
  return is_valid(exec, t0, opts) && satisfies(exec, t0, attack, std::nullopt, opts).sat;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Secure: return "secure";
    case Verdict::Attack: return "attack";
    case Verdict::HypothesisViolation: return "hypothesis-violation";
    case Verdict::Timeout: return "timeout";
  }
  return "?";
}

namespace {

using K = FormulaKind;
using Clock = std::chrono::steady_clock;

// Positive literals of one disjunct that pin down trace events or goals.
struct Goals {
  std::vector<const FormulaNode*> last;                   // status atoms on the last event
  std::vector<std::vector<const FormulaNode*>> sometime;  // atoms that hold on one common event
  std::vector<Term> learn;
};

void split_disjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == K::Or) {
    split_disjuncts(f->left, out);
    split_disjuncts(f->right, out);
  } else {
    out.push_back(f);
  }
}

// Status atoms that must hold together, read off a conjunction.
void positive_atoms(const Formula& f, bool pos, std::vector<const FormulaNode*>& out) {
  if (f->kind == K::Not) return positive_atoms(f->left, !pos, out);
  if (f->kind == K::Or && !pos) {
    positive_atoms(f->left, false, out);
    positive_atoms(f->right, false, out);
  }
  if (f->kind == K::Status && pos) out.push_back(f.get());
}

void collect_goals(const Formula& f, bool pos, Goals& g) {
  switch (f->kind) {
    case K::Not: return collect_goals(f->left, !pos, g);
    case K::Or:
      if (!pos) {
        collect_goals(f->left, false, g);
        collect_goals(f->right, false, g);
      }
      return;
    case K::Status:
      if (pos) g.last.push_back(f.get());
      return;
    case K::Learn:
      if (pos) g.learn.push_back(f->term);
      return;
    case K::Sometime:
      if (pos) {
        std::vector<const FormulaNode*> atoms;
        positive_atoms(f->left, true, atoms);
        if (!atoms.empty()) g.sometime.push_back(std::move(atoms));
      }
      return;
    default: return;
  }
}

std::optional<Substitution> unify_status(const FormulaNode& atom, const Event& e, const Substitution& base) {
  if (e.kind != EventKind::Status || e.pred != atom.pred || e.args.size() != atom.args.size()) return std::nullopt;
  Substitution s = base;
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    auto u = unify(s.apply(atom.args[i]), s.apply(e.args[i]), s);
    if (!u) return std::nullopt;
    s = *u;
  }
  return s;
}

struct Block {
  std::size_t from = 0, to = 0;
  bool pure = false;
  bool has_snd = false;
  bool cut = false;
};

struct Run {
  std::size_t role = 0;
  TermList alpha;
  Substitution renaming;
  bool dishonest = false;
  std::size_t next = 0;
  bool finished = false;
  bool cut = false;
};

struct Node {
  std::vector<Run> runs;
  std::vector<TraceEvent> events;
  std::vector<Step> steps;
  std::vector<std::size_t> total, honest, dishonest;
  TermSet used;
  bool all_pure = true;
  std::size_t last_pure_role = 0;
  SessionId last_sid = kNoSession;
  bool last_has_snd = true;
  bool terminal = false;
};

struct Move {
  SessionId sid = kNoSession;  // kNoSession starts a new session
  std::size_t role = 0;
  TermList alpha;
  bool dishonest = false;
  Block block;
  // Out of canonical order unless it is the last block of the trace.
  bool terminal = false;
};

class Verifier {
 public:
  Verifier(const Protocol& p, const AttackFormula& af, const SearchConfig& cfg, SessionLimits lim, TermList pool)
      : p_(p),
        af_(af),
        cfg_(cfg),
        lim_(lim),
        pool_(std::move(pool)),
        chooser_(pool_, agent_classes(pool_, cfg.t0, &af.formula)),
        honesty_(cfg.t0) {
    for (const Formula& d : disjuncts()) {
      Goals g;
      collect_goals(d, true, g);
      goals_.push_back(std::move(g));
    }
    ctx_.t0 = cfg.t0;
    ctx_.agents = pool_;
    ctx_.deduction = cfg.deduction;
    ctx_.cancel = &stop_;
    if (cfg.timeout_s > 0)
      ctx_.deadline = Clock::now() + std::chrono::microseconds(static_cast<long long>(cfg.timeout_s * 1e6));
  }

  VerifyResult run() {
    VerifyResult res;
    Node root;
    root.total.assign(p_.k + 1, 0);
    root.honest = root.total;
    root.dishonest = root.total;

    // Shallow nodes are explored in order; their subtrees are shared out.
    std::vector<Node> frontier;
    std::optional<AttackReport> found;
    std::function<void(const Node&, int)> shallow = [&](const Node& n, int depth) {
      if (found || interrupted()) return;
      if (depth == kSplitDepth) {
        frontier.push_back(n);
        return;
      }
      ++nodes_;
      if (auto r = candidates(n)) {
        found = std::move(r);
        return;
      }
      for (const Move& m : moves(n)) {
        Node c = child(n, m);
        if (!m.block.pure && !satisfiable(c)) continue;
        shallow(c, depth + 1);
        if (found) return;
      }
    };
    try {
      shallow(root, 0);
    } catch (const Stop&) {
    }

    if (!found && !interrupted()) {
      std::vector<std::optional<AttackReport>> results(frontier.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= frontier.size() || i > best_.load()) return;
          try {
            dfs(frontier[i], i, results[i]);
          } catch (const Stop&) {
          }
          if (results[i]) {
            std::size_t cur = best_.load();
            while (i < cur && !best_.compare_exchange_weak(cur, i)) {
            }
          }
        }
      };
      std::size_t nt = std::max<std::size_t>(1, cfg_.threads);
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(worker);
      worker();
      for (std::thread& t : pool) t.join();
      if (best_.load() < frontier.size()) found = std::move(results[best_.load()]);
    }

    res.stats = {nodes_.load(), candidates_.load(), solved_forms_.load()};
    if (found) {
      res.verdict = Verdict::Attack;
      res.attack = std::move(found);
    } else if (timed_out_.load() || budget_out_.load() || truncated_.load()) {
      res.verdict = Verdict::Timeout;
      res.message = timed_out_.load()    ? "time limit reached"
                    : budget_out_.load() ? "node budget exhausted"
                                         : "status argument groundings exceed the enumeration cap";
    } else {
      res.verdict = Verdict::Secure;
    }
    return res;
  }

 private:
  static constexpr int kSplitDepth = 2;
  struct Stop {};

  std::vector<Formula> disjuncts() const {
    std::vector<Formula> out;
    split_disjuncts(af_.matrix, out);
    return out;
  }

  bool interrupted() const { return timed_out_.load() || budget_out_.load(); }

  void tick(std::size_t index) {
    std::size_t n = ++nodes_;
    if (cfg_.max_nodes && n > cfg_.max_nodes) {
      budget_out_ = true;
      stop_ = true;
    }
    if (ctx_.deadline && Clock::now() > *ctx_.deadline) {
      timed_out_ = true;
      stop_ = true;
    }
    if (stop_.load() || index > best_.load()) throw Stop{};
  }

  void dfs(const Node& n, std::size_t index, std::optional<AttackReport>& out) {
    tick(index);
    if ((out = candidates(n))) return;
    for (const Move& m : moves(n)) {
      Node c = child(n, m);
      if (!m.block.pure && !satisfiable(c)) continue;
      dfs(c, index, out);
      if (out) return;
    }
  }

  Block block_at(const Role& r, std::size_t q) const {
    Block b;
    b.from = q;
    b.pure = r.body[q].kind != EventKind::Rcv;
    std::size_t end = b.pure ? q : q + 1;
    while (end < r.body.size() && r.body[end].kind != EventKind::Rcv) ++end;
    b.to = end;
    return b;
  }

  // The full block and its cuts before each status event.
  std::vector<Block> blocks_at(const Role& r, std::size_t q) const {
    Block full = block_at(r, q);
    std::vector<Block> out;
    for (std::size_t c = q + 1; c < full.to; ++c)
      if (r.body[c].kind == EventKind::Status) {
        Block b = full;
        b.to = c;
        b.cut = true;
        out.push_back(b);
      }
    out.insert(out.begin(), full);
    for (Block& b : out)
      for (std::size_t i = b.from; i < b.to; ++i) b.has_snd = b.has_snd || r.body[i].kind == EventKind::Snd;
    return out;
  }

  std::vector<Move> moves(const Node& n) {
    std::vector<Move> out;
    if (n.terminal) return out;
    for (std::size_t i = 0; i < n.runs.size(); ++i) {
      const Run& run = n.runs[i];
      if (run.finished) continue;
      SessionId sid = SessionId(i + 1);
      // A receive block could swap with a previous block that sends
      // nothing; that order is only kept when it decides the last event.
      bool terminal = n.last_sid > sid && !n.last_has_snd;
      for (const Block& b : blocks_at(p_.role(run.role), run.next))
        out.push_back({sid, run.role, run.alpha, run.dishonest, b, terminal});
    }
    for (std::size_t j = 1; j <= p_.k; ++j) {
      const Role& r = p_.role(j);
      if (r.body.empty() || n.total[j] >= lim_.total) continue;
      // Blocks without a receive go first, ordered by role.
      bool terminal = r.body.front().kind != EventKind::Rcv && (!n.all_pure || j < n.last_pure_role);
      for (const TermList& alpha : chooser_.tuples(r.params.size(), n.used)) {
        bool d = dishonest(alpha);
        if ((d ? n.dishonest[j] : n.honest[j]) >= (d ? lim_.dishonest : lim_.honest)) continue;
        for (const Block& b : blocks_at(r, 0)) out.push_back({kNoSession, j, alpha, d, b, terminal});
      }
    }
    return out;
  }

  bool dishonest(const TermList& alpha) {
    std::lock_guard<std::mutex> lock(honesty_mutex_);
    return honesty_.dishonest(alpha);
  }

  Node child(const Node& n, const Move& m) const {
    Node c = n;
    SessionId sid = m.sid;
    if (sid == kNoSession) {
      sid = SessionId(c.runs.size() + 1);
      Run r;
      r.role = m.role;
      r.alpha = m.alpha;
      r.renaming = session_renaming(p_.role(m.role), sid, m.alpha);
      r.dishonest = m.dishonest;
      c.runs.push_back(std::move(r));
      c.used.insert(m.alpha.begin(), m.alpha.end());
      ++c.total[m.role];
      ++(m.dishonest ? c.dishonest : c.honest)[m.role];
    }
    Run& r = c.runs[sid - 1];
    const Role& role = p_.role(r.role);
    for (std::size_t q = m.block.from; q < m.block.to; ++q) {
      c.events.push_back({role.body[q].apply(r.renaming), sid, r.role});
      c.steps.push_back({r.role, sid});
    }
    r.next = m.block.to;
    r.cut = m.block.cut;
    r.finished = m.block.cut || r.next == role.body.size();
    if (m.block.pure) {
      c.last_pure_role = m.role;
    } else {
      c.all_pure = false;
    }
    c.last_sid = sid;
    c.last_has_snd = m.block.has_snd;
    c.terminal = m.terminal;
    return c;
  }

  bool satisfiable(const Node& n) {
    ConstraintSystem cs = ConstraintSystem::from_trace(n.events, cfg_.t0);
    bool any = false;
    SolveStatus st = solve_symbolic(cs, ctx_, [&](const SolvedForm&) {
      any = true;
      return false;
    });
    if (st == SolveStatus::Timeout) {
      timed_out_ = true;
      stop_ = true;
      throw Stop{};
    }
    if (!any && st == SolveStatus::Stopped) throw Stop{};
    return any;
  }

  std::optional<AttackReport> candidates(const Node& n) {
    if (auto r = check(n.events, n.steps, n)) return r;
    // A cut session may contribute the status event it stopped before as
    // the last event of the trace.
    for (std::size_t i = 0; i < n.runs.size(); ++i) {
      const Run& run = n.runs[i];
      if (!run.cut) continue;
      std::vector<TraceEvent> ev = n.events;
      std::vector<Step> steps = n.steps;
      ev.push_back({p_.role(run.role).body[run.next].apply(run.renaming), SessionId(i + 1), run.role});
      steps.push_back({run.role, SessionId(i + 1)});
      if (auto r = check(ev, steps, n)) return r;
    }
    return std::nullopt;
  }

  std::optional<AttackReport> check(const std::vector<TraceEvent>& events, const std::vector<Step>& steps,
                                    const Node& n) {
    ++candidates_;
    if (Evaluator::symbolic(events, cfg_.t0).eval(af_.formula, events.size(), {}) == Tri::False) return std::nullopt;
    std::set<std::string> tried;
    for (const Goals& g : goals_) {
      std::optional<AttackReport> out;
      match(g, events, 0, 0, Substitution{}, [&](const Substitution& theta) {
        ConstraintSystem cs = ConstraintSystem::from_trace(events, cfg_.t0);
        Substitution trace_part;
        for (const auto& [x, v] : theta.bindings())
          if (x.sid() != kNoSession) trace_part.bind(x, v);
        cs.apply(trace_part);
        std::string key = trace_part.to_string();
        for (Term t : g.learn) {
          Term u = theta.apply(t);
          bool formula_var = false;
          for (Term x : vars(u)) formula_var = formula_var || x.sid() == kNoSession;
          if (formula_var) continue;
          cs.add_goal(u);
          key += "|" + protoforge::to_string(u);
        }
        if (!tried.insert(key).second) return true;
        out = solve_goal(cs, events, steps, n);
        return !out;
      });
      if (out) return out;
    }
    return std::nullopt;
  }

  // Binds the status atoms of g to events of the trace, one choice at a
  // time.
  bool match(const Goals& g, const std::vector<TraceEvent>& events, std::size_t li, std::size_t si,
             const Substitution& theta, const std::function<bool(const Substitution&)>& leaf) {
    if (li < g.last.size()) {
      if (events.empty()) return true;
      auto s = unify_status(*g.last[li], events.back().event, theta);
      return !s || match(g, events, li + 1, si, *s, leaf);
    }
    if (si < g.sometime.size()) {
      for (const TraceEvent& e : events) {
        std::optional<Substitution> s = theta;
        for (const FormulaNode* atom : g.sometime[si]) {
          if (s) s = unify_status(*atom, e.event, *s);
        }
        if (s && !match(g, events, li, si + 1, *s, leaf)) return false;
      }
      return true;
    }
    return leaf(theta);
  }

  std::optional<AttackReport> solve_goal(const ConstraintSystem& cs, const std::vector<TraceEvent>& events,
                                         const std::vector<Step>& steps, const Node& n) {
    TermList terms;
    for (const TraceEvent& e : events)
      for (Term t : e.event.terms()) terms.push_back(t);
    std::optional<AttackReport> out;
    SolveStatus st = solve_symbolic(cs, ctx_, [&](const SolvedForm& sf) {
      ++solved_forms_;
      Substitution full = sf.sigma.then(ground_open(sf, terms));
      for (Term t : terms)
        if (!full.apply(t).is_ground()) return true;
      out = attack_from(full, events, steps, n);
      if (!out) out = status_variants(sf, full, events, steps, n);
      return !out;
    });
    if (st == SolveStatus::Timeout) {
      timed_out_ = true;
      stop_ = true;
      throw Stop{};
    }
    if (!out && st == SolveStatus::Stopped) throw Stop{};
    return out;
  }

  // Variables in status arguments may need a specific value; they range
  // over the witness pool of the fresh grounding.
  std::optional<AttackReport> status_variants(const SolvedForm& sf, const Substitution& fresh,
                                              const std::vector<TraceEvent>& events, const std::vector<Step>& steps,
                                              const Node& n) {
    TermSet status_vars;
    for (const TraceEvent& e : events)
      if (e.event.kind == EventKind::Status)
        for (Term t : e.event.args)
          for (Term x : vars(sf.sigma.apply(t))) status_vars.insert(x);
    if (status_vars.empty()) return std::nullopt;
    ExecutionTrace exec = ground(events, fresh);
    TermList pool = default_witness_pool(exec, cfg_.t0);
    TermList xs(status_vars.begin(), status_vars.end());
    std::size_t combos = 1;
    for (std::size_t i = 0; i < xs.size() && combos <= kMaxStatusCombos; ++i) combos *= pool.size();
    if (combos > kMaxStatusCombos) {
      truncated_ = true;
      return std::nullopt;
    }
    std::vector<std::size_t> idx(xs.size(), 0);
    while (true) {
      Substitution g;
      for (std::size_t i = 0; i < xs.size(); ++i) g.bind(xs[i], pool[idx[i]]);
      Substitution rest;
      for (const auto& [x, v] : fresh.bindings())
        if (!sf.sigma.contains(x) && !status_vars.count(x)) rest.bind(x, v);
      Substitution full = sf.sigma.then(g).then(rest);
      if (auto r = attack_from(full, events, steps, n)) return r;
      std::size_t i = 0;
      while (i < idx.size() && ++idx[i] == pool.size()) idx[i++] = 0;
      if (i == idx.size()) return std::nullopt;
    }
  }

  static ExecutionTrace ground(const std::vector<TraceEvent>& events, const Substitution& s) {
    ExecutionTrace exec;
    for (const TraceEvent& e : events) exec.events.push_back({e.event.apply(s), e.sid, e.role});
    return exec;
  }

  std::optional<AttackReport> attack_from(const Substitution& full, const std::vector<TraceEvent>& events,
                                          const std::vector<Step>& steps, const Node& n) {
    ExecutionTrace exec = ground(events, full);
    for (const TraceEvent& e : exec.events)
      if (!e.event.is_ground()) return std::nullopt;
    if (!is_valid(exec, cfg_.t0, cfg_.deduction)) return std::nullopt;
    Satisfaction s = satisfies(exec, cfg_.t0, af_.formula, std::nullopt, cfg_.deduction);
    if (!s.sat) return std::nullopt;

    AttackReport r;
    r.scenario.steps = steps;
    for (std::size_t i = 0; i < n.runs.size(); ++i) r.scenario.agents[SessionId(i + 1)] = n.runs[i].alpha;
    r.symbolic = events;
    TermSet trace_vars;
    for (const TraceEvent& e : events)
      for (Term x : event_vars(e.event)) trace_vars.insert(x);
    for (Term x : trace_vars) r.grounding.bind(x, full.apply(x));
    r.exec = exec;
    r.witness = s.witness;
    TermList known = cfg_.t0;
    for (const TraceEvent& e : exec.events) {
      if (e.event.kind == EventKind::Rcv) r.proofs.push_back(deduce(known, e.event.msg, cfg_.deduction).proof);
      if (e.event.kind == EventKind::Snd) known.push_back(e.event.msg);
    }
    return r;
  }

  static constexpr std::size_t kMaxStatusCombos = 4096;

  const Protocol& p_;
  const AttackFormula& af_;
  const SearchConfig& cfg_;
  SessionLimits lim_;
  TermList pool_;
  AgentChooser chooser_;
  HonestyCache honesty_;
  std::mutex honesty_mutex_;
  std::vector<Goals> goals_;
  SolverContext ctx_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> timed_out_{false};
  std::atomic<bool> budget_out_{false};
  std::atomic<bool> truncated_{false};
  std::atomic<std::size_t> best_{static_cast<std::size_t>(-1)};
  std::atomic<std::size_t> nodes_{0}, candidates_{0}, solved_forms_{0};
};

}  // namespace

VerifyResult verify(const Protocol& p, const Formula& attack, const SearchConfig& cfg) {
  AttackClassification cls = classify_attack(attack);
  if (!cls.ok()) throw std::invalid_argument("not an attack formula: " + cls.violations.front().message);
  for (Term t : cfg.t0)
    if (!t.is_ground() || !(t.is_agent() || t.is_name() || t.is_key()))
      throw std::invalid_argument("T0 must consist of ground atoms, got " + to_string(t));
  VerifyResult res;
  res.limits = session_limits(cfg, &attack);
  res.agent_pool = pool_of(cfg);
  res.leaks = check_key_hypothesis(p, cfg.t0, res.agent_pool);
  if (!res.leaks.empty()) {
    res.verdict = Verdict::HypothesisViolation;
    res.message = "long-term key " + to_string(res.leaks.front().key) + " occurs in plaintext of role " +
                  std::to_string(res.leaks.front().role);
    return res;
  }
  Verifier v(p, *cls.attack, cfg, res.limits, res.agent_pool);
  VerifyResult out = v.run();
  out.limits = res.limits;
  out.agent_pool = res.agent_pool;
  out.unbounded = cfg.transformed && out.verdict == Verdict::Secure;
  return out;
}

}  // namespace protoforge
