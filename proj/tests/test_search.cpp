#include "doctest.h"

#include <chrono>
#include <functional>

#include "grounder.hpp"
#include "oracles.hpp"
#include "protoforge/dsl.hpp"
#include "protoforge/search.hpp"
#include "protoforge/syntax.hpp"
#include "protoforge/transform.hpp"

using namespace protoforge;

namespace {

std::string fixture(const std::string& name) { return std::string(PROTOFORGE_FIXTURES) + "/" + name; }

Term T(const char* s) { return parse_term(s); }

TermList lowe_t0() { return parse_term_list("a, b, c, priv(c)"); }

Scenario lowe_scenario() {
  Scenario sc;
  sc.steps = {{1, 1}, {2, 2}, {2, 2}, {1, 1}, {1, 1}};
  sc.agents[1] = {Term::agent("a"), Term::agent("c")};
  sc.agents[2] = {Term::agent("a"), Term::agent("b")};
  return sc;
}

bool has_lowe_grounding(const Substitution& s) {
  // Up to session renaming: the role-1 session and the role-2 session
  // exchange their nonces.
  for (const auto& [x, v] : s.bindings()) {
    if (x.label() != "z" || !v.is_name() || v.name_kind() != NameKind::Session || v.label() != "y2") continue;
    Term back = Term::var("z2", v.sid());
    if (s.lookup(back) == Term::session_nonce("y", x.sid())) return true;
  }
  return false;
}

std::size_t count_scenarios(const Protocol& p, const SearchConfig& cfg) {
  std::size_t n = 0;
  enumerate_scenarios(p, cfg, [&](const Scenario&) {
    ++n;
    return true;
  });
  return n;
}

// Words over session labels where label i + 1 first occurs after label i,
// each label occurs at most `len` times and at most `bound` labels occur.
std::size_t canonical_words(std::size_t len, std::size_t bound) {
  std::function<std::size_t(std::vector<std::size_t>&)> go = [&](std::vector<std::size_t>& used) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < used.size(); ++i)
      if (used[i] < len) {
        ++used[i];
        n += go(used);
        --used[i];
      }
    if (used.size() < bound) {
      used.push_back(1);
      n += go(used);
      used.pop_back();
    }
    return n;
  };
  std::vector<std::size_t> used;
  return go(used);
}

}  // namespace

TEST_CASE("session bound is the formula size") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  CHECK(session_bound(annotate_secrecy(ns, 2, Term::var("y2")).attack) == 1);
  CHECK(session_bound(annotate_weak_agreement(ns).attack) == 1);
  CHECK(session_bound(parse_formula("exists x y . P(x) & Q(y) & learn(x)")) == 2);
  CHECK_THROWS_AS(session_bound(parse_formula("exists x . P(x) | Q(x)")), std::invalid_argument);
}

TEST_CASE("default agent pool has one honest and one compromised agent") {
  TermList pool = default_agent_pool(lowe_t0());
  CHECK(pool == TermList{Term::agent("a"), Term::agent("c")});
  CHECK(default_agent_pool(parse_term_list("b")) == TermList{Term::agent("b"), Term::attacker()});
}

TEST_CASE("agent classes follow the symmetries of T0") {
  TermList pool = parse_term_list("a, b, c");
  auto classes = agent_classes(pool, lowe_t0());
  REQUIRE(classes.size() == 2);
  CHECK(classes[0] == TermList{Term::agent("a"), Term::agent("b")});
  Formula f = parse_formula("exists x . P(x, a)");
  CHECK(agent_classes(pool, lowe_t0(), &f).size() == 3);
  // shk is commutative, so shk(a, c) lets a and c swap.
  auto shared = agent_classes(pool, parse_term_list("shk(a, c)"));
  REQUIRE(shared.size() == 2);
  CHECK(shared[0] == TermList{Term::agent("a"), Term::agent("c")});
}

TEST_CASE("scenario counts") {
  Protocol one = parse_protocol("protocol One (1)\nrole 1 params A:\n  snd A\n");
  SearchConfig cfg;
  cfg.agent_pool = parse_term_list("a");
  cfg.bound = 0;
  CHECK(count_scenarios(one, cfg) == 1);
  cfg.bound = 1;
  CHECK(count_scenarios(one, cfg) == 2);
  cfg.bound = 3;
  CHECK(count_scenarios(one, cfg) == 4);

  Protocol two = parse_protocol("protocol Two (1)\nrole 1 params A:\n  snd A\n  snd <A, A>\n");
  for (std::size_t b = 0; b <= 3; ++b) {
    cfg.bound = b;
    CHECK(count_scenarios(two, cfg) == canonical_words(2, b));
  }

  // Two interchangeable agents: a second session either reuses a or
  // introduces b, never b first.
  cfg.agent_pool = parse_term_list("a, b");
  cfg.bound = 1;
  CHECK(count_scenarios(one, cfg) == 2);
  cfg.bound = 2;
  CHECK(count_scenarios(one, cfg) == 1 + 1 + 2);

  // Honesty limits.
  cfg.t0 = parse_term_list("a, b, priv(b)");
  cfg.honest_only = true;
  CHECK(count_scenarios(one, cfg) == 1 + 1 + 1);
}

TEST_CASE("NS scenarios include the Lowe scenario") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  SearchConfig cfg;
  cfg.bound = 1;
  cfg.t0 = lowe_t0();
  cfg.agent_pool = parse_term_list("a, b, c");
  Scenario want = lowe_scenario();
  bool found = false;
  enumerate_scenarios(ns, cfg, [&](const Scenario& sc) {
    found = sc.steps == want.steps && sc.agents == want.agents;
    return !found;
  });
  CHECK(found);
}

TEST_CASE("solver finds the Lowe substitution") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  SymbolicTrace tr = symbolic_trace(ns, lowe_scenario());
  ConstraintSystem cs = ConstraintSystem::from_trace(tr.events, lowe_t0());
  SolverContext ctx;
  ctx.t0 = lowe_t0();
  bool lowe = false;
  std::size_t n = 0;
  SolveStatus st = solve(cs, ctx, [&](const Substitution& s) {
    ++n;
    CHECK(is_valid(instantiate(tr, s), lowe_t0()));
    lowe = lowe || (s.lookup(Term::var("z", 1)) == T("n[y2@s2]") && s.lookup(Term::var("z2", 2)) == T("n[y@s1]"));
    return true;
  });
  CHECK(st == SolveStatus::Exhausted);
  CHECK(n > 0);
  CHECK(lowe);

  // Without priv(c) the first message cannot be opened and z2 is never n[y@s1].
  TermList t0 = parse_term_list("a, b, c");
  ConstraintSystem honest = ConstraintSystem::from_trace(tr.events, t0);
  ctx.t0 = t0;
  solve(honest, ctx, [&](const Substitution& s) {
    CHECK(s.lookup(Term::var("z2", 2)) != T("n[y@s1]"));
    return true;
  });
}

TEST_CASE("solver base cases") {
  SolverContext ctx;
  SUBCASE("no receive and a satisfiable ground goal") {
    std::vector<TraceEvent> events{{Event::snd(T("<n[k], a>")), 1, 1}};
    ConstraintSystem cs = ConstraintSystem::from_trace(events, {});
    cs.add_goal(T("n[k]"));
    std::vector<Substitution> sols;
    solve(cs, ctx, [&](const Substitution& s) {
      sols.push_back(s);
      return true;
    });
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].empty());
  }
  SUBCASE("symmetric encryption under an unknown key") {
    ConstraintSystem cs;
    cs.add_knowledge(T("n[n]"), 0);
    cs.add_constraint(T("encs(n[n], n[k])"), 2);
    std::size_t n = 0;
    CHECK(solve(cs, ctx, [&](const Substitution&) { return ++n, true; }) == SolveStatus::Exhausted);
    CHECK(n == 0);
    CHECK(!testing::brute_force_deducible({T("n[n]")}, T("encs(n[n], n[k])")));
  }
  SUBCASE("a key learned after the ciphertext") {
    ConstraintSystem cs;
    cs.add_knowledge(T("encs(n[s], n[k])"), 2);
    cs.add_knowledge(T("n[k]"), 4);
    cs.add_constraint(T("n[s]"), 3);
    std::size_t n = 0;
    solve(cs, ctx, [&](const Substitution&) { return ++n, true; });
    CHECK(n == 0);
    ConstraintSystem later;
    later.add_knowledge(T("encs(n[s], n[k])"), 2);
    later.add_knowledge(T("n[k]"), 4);
    later.add_constraint(T("n[s]"), 6);
    solve(later, ctx, [&](const Substitution&) { return ++n, true; });
    CHECK(n == 1);
  }
  SUBCASE("variable key of an asymmetric ciphertext") {
    ctx.t0 = lowe_t0();
    ctx.agents = parse_term_list("a, c");
    ConstraintSystem cs;
    cs.add_knowledge(T("a"), 0);
    cs.add_knowledge(T("priv(c)"), 0);
    cs.add_knowledge(T("enca(n[s], ?k@s1)"), 2);
    cs.add_constraint(T("?k@s1"), 1);
    cs.add_goal(T("n[s]"));
    std::vector<Substitution> sols;
    solve(cs, ctx, [&](const Substitution& s) {
      sols.push_back(s);
      return true;
    });
    bool opened = false;
    for (const Substitution& s : sols) opened = opened || s.lookup(Term::var("k", 1)) == T("pub(c)");
    CHECK(opened);
  }
}

TEST_CASE("key hypothesis") {
  Protocol leak = parse_protocol("protocol KeyLeak (1)\nrole 1 params A B:\n  snd <A, shk(A, B)>\n");
  auto leaks = check_key_hypothesis(leak, lowe_t0(), parse_term_list("a, c"));
  REQUIRE(!leaks.empty());
  CHECK(leaks.front().key.sym() == Sym::Shk);
  Formula f = parse_formula("exists x . learn(x) & sometime P(x)");
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  CHECK(verify(leak, f, cfg).verdict == Verdict::HypothesisViolation);
  Protocol ns = load_protocol(fixture("ns.proto"));
  CHECK(check_key_hypothesis(ns, lowe_t0(), parse_term_list("a, b, c")).empty());
}

TEST_CASE("verify finds the Lowe attack") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  AnnotatedProtocol s = annotate_secrecy(ns, 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  cfg.agent_pool = parse_term_list("a, b, c");
  VerifyResult r = verify(s.protocol, s.attack, cfg);
  REQUIRE(r.verdict == Verdict::Attack);
  CHECK(r.limits.total == 1);
  CHECK(!r.unbounded);
  REQUIRE(r.attack);
  CHECK(has_lowe_grounding(r.attack->grounding));
  CHECK(replay(s.protocol, *r.attack, s.attack, cfg.t0));
  std::size_t receives = 0;
  for (const TraceEvent& e : r.attack->exec.events) receives += e.event.kind == EventKind::Rcv;
  CHECK(r.attack->proofs.size() == receives);

  // Same report with several threads.
  cfg.threads = 4;
  VerifyResult again = verify(s.protocol, s.attack, cfg);
  REQUIRE(again.attack);
  CHECK(to_string(again.attack->exec) == to_string(r.attack->exec));

  // An honest responder without a compromised agent is safe.
  cfg.t0 = parse_term_list("a, b");
  cfg.agent_pool = parse_term_list("a, b");
  CHECK(verify(s.protocol, s.attack, cfg).verdict == Verdict::Secure);
}

TEST_CASE("verify on transformed NS") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  AnnotatedProtocol s = annotate_secrecy(ns, 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  cfg.agent_pool = parse_term_list("a, b, c");
  cfg.transformed = true;

  Transformation full = transform(s.protocol, {TagVariant::Full, false});
  cfg.honest_only = true;
  VerifyResult r = verify(full.protocol, s.attack, cfg);
  CHECK(r.verdict == Verdict::Secure);
  CHECK(r.unbounded);

  Transformation nonces = transform(s.protocol, {TagVariant::NoncesOnly, false});
  cfg.honest_only = false;
  cfg.honest_bound = 1;
  cfg.dishonest_bound = 1;
  cfg.bound = 2;
  VerifyResult a = verify(nonces.protocol, s.attack, cfg);
  REQUIRE(a.verdict == Verdict::Attack);
  CHECK(replay(nonces.protocol, *a.attack, s.attack, cfg.t0));
}

TEST_CASE("verify without sessions") {
  Protocol empty;
  empty.name = "Empty";
  Formula f = parse_formula("exists x . sometime P(x) & learn(x)");
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  CHECK(verify(empty, f, cfg).verdict == Verdict::Secure);
}

TEST_CASE("node budget gives a timeout verdict") {
  Protocol ns = load_protocol(fixture("ns.proto"));
  AnnotatedProtocol s = annotate_secrecy(ns, 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = parse_term_list("a, b");
  cfg.agent_pool = parse_term_list("a, b");
  cfg.bound = 2;
  cfg.max_nodes = 3;
  CHECK(verify(s.protocol, s.attack, cfg).verdict == Verdict::Timeout);
}

TEST_CASE("verify agrees with the exhaustive grounder") {
  testing::TinyProtocols gen(5);
  TermList t0 = lowe_t0();
  // Two honest agents, so that partners in a session can differ.
  TermList pool = parse_term_list("a, b, c");
  std::size_t attacks = 0, secure = 0;
  for (int i = 0; i < 30; ++i) {
    Protocol p = gen.next();
    AnnotatedProtocol ap = i % 3 == 0   ? annotate_secrecy(p, 1 + i % 2, Term::var(i % 2 ? "w" : "y"))
                           : i % 3 == 1 ? annotate_aliveness(p)
                                        : annotate_weak_agreement(p);
    SearchConfig cfg;
    cfg.t0 = t0;
    cfg.agent_pool = pool;
    VerifyResult r = verify(ap.protocol, ap.attack, cfg);
    REQUIRE(r.verdict != Verdict::Timeout);
    if (r.verdict == Verdict::HypothesisViolation) continue;
    testing::Grounder brute(ap.protocol, ap.attack, t0, pool, r.limits.total);
    auto exec = brute.find();
    INFO(protocol_to_string(ap.protocol));
    INFO(to_string(ap.attack));
    if (exec) INFO(to_string(*exec));
    CHECK(exec.has_value() == (r.verdict == Verdict::Attack));
    if (r.attack) CHECK(replay(ap.protocol, *r.attack, ap.attack, t0));
    ++(r.attack ? attacks : secure);
  }
  MESSAGE("attacks " << attacks << ", secure " << secure);
  CHECK(attacks > 0);
  CHECK(secure > 0);
}

TEST_CASE("verify rejects a compound T0") {
  AnnotatedProtocol s = annotate_secrecy(load_protocol(fixture("ns.proto")), 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = parse_term_list("a, b, <c, priv(c)>");
  CHECK_THROWS_AS(verify(s.protocol, s.attack, cfg), std::invalid_argument);
}
