// Acceptance checks, one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "corpus.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "protoforge/dsl.hpp"
#include "protoforge/search.hpp"
#include "protoforge/syntax.hpp"
#include "protoforge/trace_lab.hpp"
#include "protoforge/transform.hpp"

using namespace protoforge;

namespace {

std::string fixture(const std::string& name) { return std::string(PROTOFORGE_FIXTURES) + "/" + name; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

TermList lowe_t0() { return parse_term_list("a, b, c, priv(c)"); }

// z of a role-1 session bound to the role-2 nonce of another session, and z2
// of that session bound to the role-1 nonce: the Lowe substitution up to
// session renaming.
bool has_lowe_grounding(const AttackReport& r) {
  for (const auto& [x, v] : r.grounding.bindings()) {
    if (x.label() != "z" || v.sym() != Sym::Name || v.label() != "y2") continue;
    SessionId s1 = x.sid(), s2 = v.sid();
    auto back = r.grounding.lookup(Term::var("z2", s2));
    if (back && *back == Term::session_nonce("y", s1)) return true;
  }
  return false;
}

Outcome lowe_attack() {
  auto start = std::chrono::steady_clock::now();
  AnnotatedProtocol s = annotate_secrecy(load_protocol(fixture("ns.proto")), 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  cfg.agent_pool = parse_term_list("a, b, c");
  VerifyResult r = verify(s.protocol, s.attack, cfg);
  double t = seconds_since(start);
  std::ostringstream d;
  d << "verdict " << to_string(r.verdict) << ", bound " << r.limits.total << ", " << t << " s";
  if (r.verdict != protoforge::Verdict::Attack || !r.attack) return {false, d.str()};
  d << ", grounding " << r.attack->grounding.to_string();
  bool replayed = replay(s.protocol, *r.attack, s.attack, cfg.t0);
  if (!replayed) d << ", replay failed";
  return {session_bound(s.attack) == 1 && r.limits.total == 1 && has_lowe_grounding(*r.attack) && replayed && t < 10,
          d.str()};
}

Outcome compiled_protocol() {
  AnnotatedProtocol s = annotate_secrecy(load_protocol(fixture("ns.proto")), 2, Term::var("y2"));
  SearchConfig cfg;
  cfg.t0 = lowe_t0();
  cfg.agent_pool = parse_term_list("a, b, c");
  cfg.transformed = true;
  std::ostringstream d;

  auto start = std::chrono::steady_clock::now();
  cfg.honest_only = true;
  VerifyResult full = verify(transform(s.protocol, {TagVariant::Full, false}).protocol, s.attack, cfg);
  double t1 = seconds_since(start);
  d << "full tags, honest only: " << to_string(full.verdict) << (full.unbounded ? " (unbounded)" : "") << ", " << t1
    << " s; ";

  start = std::chrono::steady_clock::now();
  Protocol nonces = transform(s.protocol, {TagVariant::NoncesOnly, false}).protocol;
  cfg.honest_only = false;
  cfg.honest_bound = 1;
  cfg.dishonest_bound = 1;
  cfg.bound = 2;
  VerifyResult weak = verify(nonces, s.attack, cfg);
  double t2 = seconds_since(start);
  d << "nonces only, one honest and one dishonest session per role: " << to_string(weak.verdict) << ", " << t2
    << " s";
  bool lowe = weak.attack && has_lowe_grounding(*weak.attack) && replay(nonces, *weak.attack, s.attack, cfg.t0);
  if (weak.attack) d << ", grounding " << weak.attack->grounding.to_string();
  return {full.verdict == protoforge::Verdict::Secure && full.unbounded && t1 < 60 &&
              weak.verdict == protoforge::Verdict::Attack && lowe && t2 < 60,
          d.str()};
}

Outcome formula_sizes() {
  std::ostringstream d;
  bool ok = true;
  struct Case {
    const char* file;
    std::size_t role;
    const char* nonce;
  };
  for (Case c : {Case{"ns.proto", 2, "y2"}, Case{"relay.proto", 1, "x"}}) {
    Protocol p = load_protocol(fixture(c.file));
    std::size_t s = formula_size(annotate_secrecy(p, c.role, Term::var(c.nonce)).attack);
    std::size_t a = formula_size(annotate_aliveness(p).attack);
    std::size_t w = formula_size(annotate_weak_agreement(p).attack);
    d << "k=" << p.k << ": S " << s << ", A " << a << ", WA " << w << "; ";
    ok = ok && p.k == (c.file == std::string("ns.proto") ? 2u : 3u) && s == 1 && a == 1 && w == 1;
  }
  return {ok, d.str()};
}

std::string strip_comments(const std::string& path) {
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

Outcome golden_role() {
  Transformation tr = transform(load_protocol(fixture("ns.proto")));
  const Role& r = tr.protocol.role(2);
  bool text = role_to_string(r, 2) == strip_comments(fixture("ns_transformed_role2.txt"));

  // The listing built term by term: tau = <<A,z_A>,<B,z_B>>.
  Term A = Term::agent_var("A"), B = Term::agent_var("B");
  Term zA = Term::var("z_A"), zB = Term::var("z_B"), y2 = Term::var("y2"), z2 = Term::var("z2");
  Term tau = Term::pair(Term::pair(A, zA), Term::pair(B, zB));
  std::vector<Event> expected = {
      Event::rcv(Term::pair(A, zA)),
      Event::snd(Term::pair(B, zB)),
      Event::rcv(Term::enca(Term::pair(tau, Term::pair(z2, A)), Term::pub(B))),
      Event::snd(Term::enca(Term::pair(tau, Term::pair(z2, y2)), Term::pub(A))),
      Event::rcv(Term::enca(Term::pair(tau, y2), Term::pub(B))),
  };
  bool terms = r.body == expected && r.params == TermList{A, B} && r.nonces == TermList{y2, zB};
  return {text && terms, std::string("printed listing ") + (text ? "matches" : "differs") + ", terms " +
                             (terms ? "identical" : "differ")};
}

Outcome deduction_oracle() {
  testing::TermGenerator gen(20240607);
  // Depth counts every symbol, keys included: pub(a) has depth 2.
  auto shallow = [&] {
    Term t;
    do t = gen.term(3);
    while (t.depth() > 3);
    return t;
  };
  int mismatches = 0, yes = 0;
  std::string first;
  for (int i = 0; i < 10000; ++i) {
    TermList kb;
    std::size_t n = 1 + gen.pick(8);
    for (std::size_t j = 0; j < n; ++j) kb.push_back(shallow());
    TermSet st = subterms(kb);
    Term goal = gen.pick(2) ? shallow() : *std::next(st.begin(), static_cast<long>(gen.pick(st.size())));
    bool sig = gen.pick(4) == 0;
    DeductionResult r = deduce(kb, goal, {sig});
    bool oracle = testing::brute_force_deducible(kb, goal, sig);
    bool proof_ok = !r.deducible() || check_proof(r.proof, kb, {sig});
    if (r.deducible() != oracle || !proof_ok) {
      if (!mismatches) first = to_string(goal) + " from " + to_string(TermSet(kb.begin(), kb.end()));
      ++mismatches;
    }
    yes += oracle;
  }
  std::ostringstream d;
  d << "10000 queries, " << yes << " deducible, " << mismatches << " disagreements";
  if (mismatches) d << ", first: " << first;
  return {mismatches == 0 && yes > 0 && yes < 10000, d.str()};
}

// Criteria 6 to 8 share one corpus.
struct CorpusTally {
  int cases = 0, invalid = 0, perturbed = 0, attacks = 0;
  int bar_valid = 0, bar_attack = 0;            // counterexamples
  int restriction = 0, ws = 0;                  // counterexamples
  int disjoint = 0, disequal = 0;               // counterexamples
  int sets = 0, ws_instances = 0, pairs = 0;    // checked instances
  int sampled = 0;                              // traces whose closed sets were sampled
  std::string first;
};

const CorpusTally& corpus() {
  static const CorpusTally tally = [] {
    CorpusTally t;
    testing::CorpusGenerator gen(testing::corpus_protocols(PROTOFORGE_FIXTURES), 1009);
    std::mt19937_64 rng(17);
    auto note = [&](int& counter, const std::optional<std::string>& r) {
      if (!r) return;
      ++counter;
      if (t.first.empty()) t.first = *r;
    };
    for (; t.cases < 2000; ++t.cases) {
      testing::CorpusCase cc = gen.next();
      if (!is_valid(cc.exec, cc.t0)) {
        ++t.invalid;
        continue;
      }
      if (TagView(cc.exec, cc.k).classes().size() > 1) ++t.perturbed;
      ExecutionTrace abs = abstract_trace(cc.exec, cc.k);
      // closed_sets enumerates every union of classes up to six classes.
      if (TagView(abs, cc.k).classes().size() > 6) ++t.sampled;
      bool attack = false;
      int count = 0;
      note(t.bar_valid, testing::check_bar_valid(cc, abs));
      note(t.bar_attack, testing::check_bar_attack(cc, abs, &attack));
      t.attacks += attack;
      note(t.restriction, testing::check_restriction(cc, abs, rng, &count));
      t.sets += count;
      note(t.ws, testing::check_ws_bound(cc, abs, &count));
      t.ws_instances += count;
      note(t.disjoint, testing::check_disjointness(cc, abs));
      note(t.disequal, testing::check_disequality(cc, rng, &count));
      t.pairs += count;
    }
    return t;
  }();
  return tally;
}

Outcome abstraction_properties() {
  const CorpusTally& t = corpus();
  std::ostringstream d;
  d << t.cases << " executions (" << t.perturbed << " with several tag classes, " << t.invalid << " invalid), "
    << t.attacks << " attack instances; counterexamples: well-formed/valid " << t.bar_valid << ", attack "
    << t.bar_attack;
  if (!t.first.empty()) d << "; first: " << t.first;
  return {t.cases >= 1000 && t.invalid == 0 && t.perturbed > 0 && t.attacks > 0 && t.bar_valid == 0 &&
              t.bar_attack == 0,
          d.str()};
}

Outcome restriction_properties() {
  const CorpusTally& t = corpus();
  std::ostringstream d;
  d << t.sets << " class-closed restrictions, " << t.ws_instances << " satisfied instances; counterexamples: "
    << "restriction " << t.restriction << ", witness-session bound " << t.ws;
  if (t.sampled) d << "; " << t.sampled << " traces had too many classes to enumerate every closed set";
  return {t.cases >= 1000 && t.sampled == 0 && t.sets > 0 && t.ws_instances > 0 && t.restriction == 0 && t.ws == 0, d.str()};
}

Outcome disjointness_properties() {
  const CorpusTally& t = corpus();
  std::ostringstream d;
  d << t.cases << " executions, " << t.pairs << " term pairs; counterexamples: shared names " << t.disjoint
    << ", identified terms " << t.disequal;
  return {t.cases >= 1000 && t.pairs > 0 && t.disjoint == 0 && t.disequal == 0, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "Lowe attack on NS secrecy", lowe_attack},
      {2, "compiled NS: secure with full tags, attack with nonce tags", compiled_protocol},
      {3, "formula sizes of the canned properties", formula_sizes},
      {4, "transformed NS role 2 golden listing", golden_role},
      {5, "deduction agrees with the closure oracle", deduction_oracle},
      {6, "abstraction: well formed, valid, keeps attacks", abstraction_properties},
      {7, "restriction validity and witness-session bound", restriction_properties},
      {8, "name disjointness and disequality preservation", disjointness_properties},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << c.number << " " << c.name << ": " << v.detail << std::endl;
  }
  return failed ? 1 : 0;
}
