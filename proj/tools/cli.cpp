#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "protoforge/dsl.hpp"
#include "protoforge/search.hpp"
#include "protoforge/syntax.hpp"
#include "protoforge/trace_lab.hpp"
#include "protoforge/transform.hpp"

namespace protoforge::cli {

namespace {

using json = nlohmann::ordered_json;

// Input files by path, as read when the run started.
using Inputs = std::map<std::string, std::string>;

struct Outcome {
  json result;
  int exit = kOk;
  json stats;  // machine dependent, left out of replay comparisons
};

// User errors: bad input files, options or terms.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& input(const Inputs& in, const std::string& path) {
  auto it = in.find(path);
  if (it == in.end()) throw Failure("input " + path + " is missing from the run");
  return it->second;
}

Protocol read_protocol(const Inputs& in, const std::string& path) {
  try {
    return parse_protocol(input(in, path));
  } catch (const ParseError& e) {
    throw Failure(path + ":" + e.what());
  }
}

Term read_term(const std::string& text) {
  try {
    return parse_term(text);
  } catch (const ParseError& e) {
    throw Failure("in term '" + text + "': " + e.what());
  }
}

TermList read_terms(const json& list) {
  TermList out;
  for (const json& t : list) out.push_back(read_term(t.get<std::string>()));
  return out;
}

// Splits "a, b, priv(c)" at top-level commas.
std::vector<std::string> split_terms(const std::string& text) {
  TermList ts;
  try {
    ts = parse_term_list(text);
  } catch (const ParseError& e) {
    throw Failure("in term list '" + text + "': " + e.what());
  }
  std::vector<std::string> out;
  for (Term t : ts) out.push_back(to_string(t));
  return out;
}

json strings(const TermList& ts) {
  json out = json::array();
  for (Term t : ts) out.push_back(to_string(t));
  return out;
}

json bindings(const Substitution& s) {
  json out = json::array();
  for (const auto& [x, v] : s.bindings()) out.push_back({to_string(x), to_string(v)});
  return out;
}

Substitution read_bindings(const json& j) {
  Substitution s;
  for (const json& b : j) s.bind(read_term(b.at(0)), read_term(b.at(1)));
  return s;
}

json events(const std::vector<TraceEvent>& es) {
  json out = json::array();
  for (const TraceEvent& te : es) out.push_back({{"sid", te.sid}, {"role", te.role}, {"event", to_string(te.event)}});
  return out;
}

std::vector<TraceEvent> read_events(const json& j) {
  std::vector<TraceEvent> out;
  for (const json& e : j)
    out.push_back({parse_event(e.at("event").get<std::string>()), e.at("sid"), e.value("role", std::size_t(0))});
  return out;
}

json proof_json(const Proof& p) {
  json j = {{"rule", rule_name(p->rule)}, {"conclusion", to_string(p->conclusion)}};
  if (!p->premises.empty()) {
    j["premises"] = json::array();
    for (const Proof& q : p->premises) j["premises"].push_back(proof_json(q));
  }
  return j;
}

Proof read_proof(const json& j) {
  static const std::map<std::string, Rule> rules = [] {
    std::map<std::string, Rule> m;
    for (int r = int(Rule::Hypothesis); r <= int(Rule::OpenSign); ++r) m[rule_name(Rule(r))] = Rule(r);
    return m;
  }();
  auto it = rules.find(j.at("rule").get<std::string>());
  if (it == rules.end()) throw Failure("unknown proof rule " + j.at("rule").dump());
  auto node = std::make_shared<ProofNode>();
  node->rule = it->second;
  node->conclusion = read_term(j.at("conclusion"));
  if (j.contains("premises"))
    for (const json& q : j.at("premises")) node->premises.push_back(read_proof(q));
  return node;
}

std::vector<std::string> trace_lines(const ExecutionTrace& exec) {
  std::vector<std::string> out;
  std::istringstream in(to_string(exec));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TagScheme scheme_of(const json& cfg) {
  TagScheme s;
  s.variant = cfg.at("variant") == "nonces-only" ? TagVariant::NoncesOnly : TagVariant::Full;
  s.hashed = cfg.at("hashed");
  return s;
}

DeductionOptions deduction_of(const json& cfg) {
  DeductionOptions o;
  o.open_signatures = cfg.value("open_signatures", false);
  return o;
}

// ---- check ----

const char* kind_name(RoleViolation::Kind k) {
  switch (k) {
    case RoleViolation::Kind::Arity: return "arity";
    case RoleViolation::Kind::AgentVariableNotParameter: return "agent-variable-not-parameter";
    case RoleViolation::Kind::Origination: return "origination";
    case RoleViolation::Kind::PlaintextOrigination: return "plaintext-origination";
    case RoleViolation::Kind::Malformed: return "malformed";
  }
  return "?";
}

Outcome run_check(const json& cfg, const Inputs& in, std::ostream& out) {
  std::string path = cfg.at("protocol");
  Outcome o;
  Protocol p;
  try {
    p = parse_protocol(input(in, path));
  } catch (const ParseError& e) {
    out << path << ":" << e.what() << "\n";
    o.result = {{"ok", false},
                {"parse_error", {{"line", e.location().line}, {"column", e.location().column}, {"message", e.what()}}}};
    o.exit = kNegative;
    return o;
  }
  json vs = json::array();
  for (const RoleViolation& v : check_protocol(p)) {
    out << path << ": " << kind_name(v.kind) << ": " << v.message;
    if (v.event) out << " (event " << v.event << ")";
    out << "\n";
    vs.push_back({{"kind", kind_name(v.kind)},
                  {"event", v.event},
                  {"variable", v.variable ? json(to_string(v.variable)) : json()},
                  {"message", v.message}});
  }
  if (vs.empty()) out << path << ": ok, protocol " << p.name << " with " << p.k << " roles\n";
  o.result = {{"ok", vs.empty()}, {"protocol", p.name}, {"roles", p.k}, {"violations", vs}};
  o.exit = vs.empty() ? kOk : kNegative;
  return o;
}

// ---- transform ----

Outcome run_transform(const json& cfg, const Inputs& in, std::ostream& out) {
  Protocol p = read_protocol(in, cfg.at("protocol"));
  if (!check_protocol(p).empty()) throw Failure("the protocol is not well formed; run check for details");
  Transformation t = transform(p, scheme_of(cfg));
  std::size_t role = cfg.at("role");
  if (role > t.protocol.k) throw Failure("role " + std::to_string(role) + " does not exist");
  std::string text = role ? role_to_string(t.protocol.role(role), role) : protocol_to_string(t.protocol);
  out << text;
  json tags = json::array();
  for (std::size_t j = 0; j < t.roles.size(); ++j)
    tags.push_back(to_string(t.roles[j].tag, RolePrinting(t.protocol.roles[j]).options()));
  Outcome o;
  o.result = {{"text", text}, {"tags", tags}};
  return o;
}

// ---- verify ----

struct Property {
  Protocol protocol;
  Formula attack;
};

std::map<std::string, std::string> property_fields(const std::string& spec, std::size_t from) {
  std::map<std::string, std::string> out;
  std::istringstream in(spec.substr(from));
  for (std::string kv; std::getline(in, kv, ':');) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure("expected key=value in property, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

Property annotate(const Protocol& p, const std::string& spec) {
  if (spec == "aliveness") {
    AnnotatedProtocol a = annotate_aliveness(p);
    return {a.protocol, a.attack};
  }
  if (spec == "weak-agreement") {
    AnnotatedProtocol a = annotate_weak_agreement(p);
    return {a.protocol, a.attack};
  }
  if (spec.rfind("formula:", 0) == 0) {
    try {
      return {p, parse_formula(spec.substr(8))};
    } catch (const ParseError& e) {
      throw Failure(std::string("in formula: ") + e.what());
    }
  }
  if (spec.rfind("secrecy:", 0) == 0) {
    auto f = property_fields(spec, 8);
    if (!f.count("role") || !f.count("nonce")) throw Failure("secrecy needs role=J and nonce=Y");
    std::size_t role = 0;
    try {
      role = std::stoul(f["role"]);
    } catch (const std::exception&) {
      throw Failure("role must be a number, got '" + f["role"] + "'");
    }
    if (role == 0 || role > p.k) throw Failure("role " + f["role"] + " does not exist");
    Term y = Term::var(f["nonce"]);
    const Role& r = p.role(role);
    bool bound = std::find(r.nonces.begin(), r.nonces.end(), y) != r.nonces.end();
    for (const Event& e : r.body) bound = bound || event_vars(e).count(y);
    if (!bound) throw Failure("role " + f["role"] + " has no nonce or variable " + f["nonce"]);
    AnnotatedProtocol a = annotate_secrecy(p, role, y);
    return {a.protocol, a.attack};
  }
  throw Failure("unknown property '" + spec +
                "'; use secrecy:role=J:nonce=Y, aliveness, weak-agreement or formula:<attack formula>");
}

std::string limits_text(const SessionLimits& l) {
  return std::to_string(l.total) + " per role (honest " + std::to_string(l.honest) + ", dishonest " +
         std::to_string(l.dishonest) + ")";
}

json report_json(const AttackReport& r) {
  json steps = json::array(), agents = json::array(), proofs = json::array();
  for (const Step& s : r.scenario.steps) steps.push_back({{"role", s.role}, {"sid", s.sid}});
  for (const auto& [sid, as] : r.scenario.agents) agents.push_back({{"sid", sid}, {"agents", strings(as)}});
  for (const Proof& p : r.proofs) proofs.push_back(proof_json(p));
  return {{"scenario", {{"steps", steps}, {"agents", agents}}},
          {"symbolic", events(r.symbolic)},
          {"grounding", bindings(r.grounding)},
          {"execution", events(r.exec.events)},
          {"witness", bindings(r.witness)},
          {"proofs", proofs}};
}

AttackReport read_report(const json& j) {
  AttackReport r;
  for (const json& s : j.at("scenario").at("steps")) r.scenario.steps.push_back({s.at("role"), s.at("sid")});
  for (const json& a : j.at("scenario").at("agents")) r.scenario.agents[a.at("sid")] = read_terms(a.at("agents"));
  r.symbolic = read_events(j.at("symbolic"));
  r.grounding = read_bindings(j.at("grounding"));
  r.exec.events = read_events(j.at("execution"));
  r.witness = read_bindings(j.at("witness"));
  for (const json& p : j.at("proofs")) r.proofs.push_back(read_proof(p));
  return r;
}

Outcome run_verify(const json& cfg, const Inputs& in, std::ostream& out) {
  Protocol base = read_protocol(in, cfg.at("protocol"));
  if (!check_protocol(base).empty()) throw Failure("the protocol is not well formed; run check for details");
  Property prop = annotate(base, cfg.at("property"));
  if (cfg.at("transformed")) prop.protocol = transform(prop.protocol, scheme_of(cfg)).protocol;

  SearchConfig sc;
  sc.t0 = read_terms(cfg.at("t0"));
  sc.agent_pool = read_terms(cfg.at("pool"));
  if (cfg.at("bound") != "auto") sc.bound = std::stoul(cfg.at("bound").get<std::string>());
  if (!cfg.at("honest_bound").is_null()) sc.honest_bound = cfg.at("honest_bound").get<std::size_t>();
  if (!cfg.at("dishonest_bound").is_null()) sc.dishonest_bound = cfg.at("dishonest_bound").get<std::size_t>();
  sc.honest_only = cfg.at("honest_only");
  sc.deduction = deduction_of(cfg);
  sc.transformed = cfg.at("transformed");
  sc.threads = cfg.at("threads");
  sc.timeout_s = cfg.at("timeout_s");
  sc.max_nodes = cfg.at("max_nodes");

  VerifyResult r;
  try {
    r = verify(prop.protocol, prop.attack, sc);
  } catch (const std::invalid_argument& e) {
    throw Failure(e.what());
  }

  out << "protocol " << prop.protocol.name << ", property " << cfg.at("property").get<std::string>() << "\n";
  out << "formula: " << to_string(prop.attack) << "\n";
  out << "sessions: " << limits_text(r.limits) << ", agents";
  for (Term a : r.agent_pool) out << " " << a;
  out << "\n";
  switch (r.verdict) {
    case Verdict::Secure:
      out << "verdict: secure "
          << (r.unbounded ? "for any number of sessions (transformed protocol)" : "within the session bound") << "\n";
      break;
    case Verdict::Attack: out << "verdict: attack\n"; break;
    case Verdict::HypothesisViolation: out << "verdict: hypothesis-violation: " << r.message << "\n"; break;
    case Verdict::Timeout: out << "verdict: timeout, no conclusion: " << r.message << "\n"; break;
  }
  if (r.attack) {
    out << "participants:";
    for (const auto& [sid, as] : r.attack->scenario.agents) {
      out << " s" << sid << "(";
      for (std::size_t i = 0; i < as.size(); ++i) out << (i ? "," : "") << as[i];
      out << ")";
    }
    out << "\nexecution:\n" << to_string(r.attack->exec);
    out << "grounding: " << r.attack->grounding.to_string() << "\n";
    out << "witness: " << r.attack->witness.to_string() << "\n";
  }

  json leaks = json::array();
  for (const KeyLeak& l : r.leaks) leaks.push_back({{"role", l.role}, {"agents", strings(l.agents)}, {"key", to_string(l.key)}});
  Outcome o;
  o.result = {{"verdict", to_string(r.verdict)},
              {"unbounded", r.unbounded},
              {"limits", {{"total", r.limits.total}, {"honest", r.limits.honest}, {"dishonest", r.limits.dishonest}}},
              {"agent_pool", strings(r.agent_pool)},
              {"message", r.message},
              {"leaks", leaks},
              {"analyzed_protocol", protocol_to_string(prop.protocol)},
              {"formula", to_string(prop.attack)},
              {"attack", r.attack ? report_json(*r.attack) : json()}};
  o.stats = {{"nodes", r.stats.nodes}, {"candidates", r.stats.candidates}, {"solved_forms", r.stats.solved_forms}};
  switch (r.verdict) {
    case Verdict::Secure: o.exit = kOk; break;
    case Verdict::Attack: o.exit = kAttack; break;
    case Verdict::HypothesisViolation: o.exit = kHypothesis; break;
    case Verdict::Timeout: o.exit = kTimeout; break;
  }
  return o;
}

// ---- deduce ----

Outcome run_deduce(const json& cfg, const Inputs&, std::ostream& out) {
  TermList kb = read_terms(cfg.at("knowledge"));
  Term goal = read_term(cfg.at("goal"));
  DeductionResult d = deduce(kb, goal, deduction_of(cfg));
  Outcome o;
  if (d.deducible()) {
    out << proof_to_string(d.proof);
    o.result = {{"deducible", true}, {"proof", proof_json(d.proof)}};
    return o;
  }
  out << "not deducible: " << goal << "\nanalyzed knowledge: " << to_string(d.saturated) << "\n";
  TermList sat(d.saturated.begin(), d.saturated.end());
  o.result = {{"deducible", false}, {"analyzed", strings(sat)}};
  o.exit = kNegative;
  return o;
}

// ---- trace-lab ----

std::optional<std::set<SessionId>> read_sessions(const std::string& text) {
  std::set<SessionId> out;
  std::istringstream in(text);
  for (std::string s; std::getline(in, s, ',');) {
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    if (!s.empty() && s.front() == 's') s.erase(s.begin());
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(s, &used);
      if (used != s.size() || v == 0) return std::nullopt;
      out.insert(SessionId(v));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

json sessions_json(const SessionSet& s) {
  json out = json::array();
  for (SessionId x : s) out.push_back(x);
  return out;
}

// JSON (an event array, {"events": [...]} or a verify manifest with an
// attack) or the numbered text format.
ExecutionTrace read_trace(const std::string& path, const std::string& text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || (text[first] != '[' && text[first] != '{')) {
    try {
      return parse_execution(text);
    } catch (const ParseError& e) {
      throw Failure(path + ":" + e.what());
    }
  }
  try {
    json j = json::parse(text);
    ExecutionTrace exec;
    if (j.is_array()) {
      exec.events = read_events(j);
    } else if (j.contains("events")) {
      exec.events = read_events(j.at("events"));
    } else if (j.contains("result") && j.at("result").contains("attack") && !j.at("result").at("attack").is_null()) {
      exec.events = read_events(j.at("result").at("attack").at("execution"));
    } else {
      throw Failure(path + ": no events in the JSON document");
    }
    return exec;
  } catch (const json::exception& e) {
    throw Failure(path + ": " + e.what());
  } catch (const ParseError& e) {
    throw Failure(path + ": in event: " + e.what());
  }
}

Outcome run_trace_lab(const json& cfg, const Inputs& in, std::ostream& out) {
  std::string path = cfg.at("trace");
  ExecutionTrace exec = read_trace(path, input(in, path));
  std::size_t k = cfg.at("k");
  TagScheme scheme = scheme_of(cfg);
  TermList t0 = read_terms(cfg.at("t0"));
  DeductionOptions opts = deduction_of(cfg);
  std::string check = cfg.at("check");
  Outcome o;
  auto validity = [&](const ExecutionTrace& e) {
    Validity v = check_validity(e, t0, opts);
    return json{{"valid", v.valid}, {"failing", v.failing}};
  };

  if (check == "well-formed") {
    WellFormedness w;
    try {
      w = check_well_formed(exec, k, scheme);
    } catch (const std::invalid_argument& e) {
      throw Failure(e.what());
    }
    if (w.ok()) {
      out << "well formed\n";
    } else {
      out << "not well formed: condition " << w.condition << " at event " << w.event << " (s" << w.sid
          << "): " << w.message << "\n";
    }
    o.result = {{"well_formed", w.ok()},
                {"condition", w.condition},
                {"event", w.event},
                {"sid", w.sid},
                {"witness", w.witness ? json(to_string(w.witness)) : json()},
                {"message", w.message}};
    o.exit = w.ok() ? kOk : kNegative;
    return o;
  }
  if (check == "abstract") {
    ExecutionTrace a = abstract_trace(exec, k);
    out << to_string(a);
    o.result = {{"trace", trace_lines(a)}, {"input", validity(exec)}, {"output", validity(a)}};
    if (scheme.hashed) {
      o.result["output"]["well_formed"] = nullptr;
    } else {
      o.result["output"]["well_formed"] = is_well_formed(a, k, scheme);
    }
    return o;
  }
  if (check.rfind("restrict:", 0) == 0) {
    auto S = read_sessions(check.substr(9));
    if (!S) throw Failure("expected restrict:<sessions>, e.g. restrict:1,3");
    TagView view(exec, k);
    if (!is_class_closed(view, *S)) {
      out << "the session set splits a tag class\n";
      json classes = json::array();
      for (const SessionSet& c : view.classes()) classes.push_back(sessions_json(c));
      o.result = {{"class_closed", false}, {"classes", classes}};
      o.exit = kNegative;
      return o;
    }
    ExecutionTrace r = restrict_to(exec, k, *S);
    out << to_string(r);
    o.result = {{"class_closed", true}, {"trace", trace_lines(r)}, {"validity", validity(r)}};
    return o;
  }
  if (check.rfind("ws:", 0) == 0) {
    Formula f;
    try {
      f = parse_formula(check.substr(3));
    } catch (const ParseError& e) {
      throw Failure(std::string("in formula: ") + e.what());
    }
    if (!satisfies(exec, t0, f, std::nullopt, opts).sat) {
      out << "the formula does not hold on the trace\n";
      o.result = {{"holds", false}};
      o.exit = kNegative;
      return o;
    }
    SessionSet ws;
    try {
      ws = witness_sessions(exec, f, t0, opts);
    } catch (const std::invalid_argument& e) {
      throw Failure(e.what());
    }
    std::size_t bound = formula_size(f);
    out << "witness sessions:";
    for (SessionId s : ws) out << " s" << s;
    out << "\nsize bound: " << ws.size() << " <= " << bound << (ws.size() <= bound ? "" : " violated") << "\n";
    o.result = {{"holds", true}, {"sessions", sessions_json(ws)}, {"size", bound}, {"within_bound", ws.size() <= bound}};
    o.exit = ws.size() <= bound ? kOk : kNegative;
    return o;
  }
  throw Failure("unknown check '" + check + "'; use well-formed, abstract, restrict:<sessions> or ws:<formula>");
}

using Command = std::function<Outcome(const json&, const Inputs&, std::ostream&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m = {{"check", run_check},
                                                   {"transform", run_transform},
                                                   {"verify", run_verify},
                                                   {"deduce", run_deduce},
                                                   {"trace-lab", run_trace_lab}};
  return m;
}

// Files named by a command's configuration.
std::vector<std::string> input_paths(const std::string& cmd, const json& cfg) {
  if (cmd == "trace-lab") return {cfg.at("trace")};
  if (cmd == "deduce") return {};
  return {cfg.at("protocol")};
}

// Re-runs a manifest from its embedded inputs and compares the results.
// Attack reports and proofs are also re-checked on their own.
int replay(const std::string& path, std::ostream& out) {
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Failure(path + ": " + e.what());
  }
  if (m.value("schema_version", 0) != kSchemaVersion)
    throw Failure(path + ": unsupported schema version " + m.value("schema_version", json()).dump());
  std::string cmd = m.at("command");
  if (!commands().count(cmd)) throw Failure(path + ": unknown command " + cmd);
  Inputs in;
  for (const json& f : m.at("inputs")) in[f.at("path")] = f.at("content");
  const json& recorded = m.at("result");

  if (cmd == "verify" && !recorded.at("attack").is_null()) {
    Protocol p = parse_protocol(recorded.at("analyzed_protocol").get<std::string>());
    Formula f = parse_formula(recorded.at("formula").get<std::string>());
    if (!protoforge::replay(p, read_report(recorded.at("attack")), f, read_terms(m.at("config").at("t0")),
                            deduction_of(m.at("config")))) {
      out << "replay: the recorded attack does not re-validate\n";
      return kNegative;
    }
  }
  if (cmd == "deduce" && recorded.at("deducible")) {
    Proof p = read_proof(recorded.at("proof"));
    if (p->conclusion != read_term(m.at("config").at("goal")) ||
        !check_proof(p, read_terms(m.at("config").at("knowledge")), deduction_of(m.at("config")))) {
      out << "replay: the recorded proof does not check\n";
      return kNegative;
    }
  }

  std::ostream sink(nullptr);
  Outcome o = commands().at(cmd)(m.at("config"), in, sink);
  if (o.result != recorded || o.exit != m.value("exit_code", -1)) {
    out << "replay: " << cmd << " result differs from the manifest\n" << json::diff(recorded, o.result).dump(2) << "\n";
    return kNegative;
  }
  out << "replay: ok (" << cmd << ", exit " << o.exit << ")\n";
  return kOk;
}

int execute(const std::string& cmd, const json& cfg, const std::string& json_path, std::uint64_t seed,
            std::ostream& out) {
  Inputs in;
  json files = json::array();
  for (const std::string& p : input_paths(cmd, cfg)) {
    in[p] = read_file(p);
    files.push_back({{"path", p}, {"content", in[p]}});
  }
  bool json_stdout = json_path == "-";
  std::ostream sink(nullptr);
  auto start = std::chrono::steady_clock::now();
  Outcome o = commands().at(cmd)(cfg, in, json_stdout ? sink : out);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!json_path.empty()) {
    json m = {{"schema_version", kSchemaVersion},
              {"tool", {{"name", "protoforge"}, {"version", kToolVersion}}},
              {"command", cmd},
              {"seed", seed},
              {"inputs", files},
              {"config", cfg},
              {"result", o.result},
              {"exit_code", o.exit},
              {"stats", o.stats},
              {"wall_clock_s", wall}};
    if (json_stdout) {
      out << m.dump(2) << "\n";
    } else {
      std::ofstream f(json_path);
      if (!f) throw Failure("cannot write " + json_path);
      f << m.dump(2) << "\n";
    }
  }
  return o.exit;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Protocol verifier for Dolev-Yao protocols with bounded session search."};
  app.name("protoforge");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(0, 1);

  std::string json_path, replay_path;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double timeout_s = 0;
  app.add_option("--json", json_path, "Write the run manifest as JSON to FILE ('-' for stdout)");
  app.add_option("--seed", seed, "Recorded in the manifest; the analyses themselves are deterministic");
  app.add_option("--threads", threads, "Worker threads for verify")->check(CLI::PositiveNumber);
  app.add_option("--timeout-s", timeout_s, "Wall-clock limit for verify, 0 for none")->check(CLI::NonNegativeNumber);
  app.add_option("--replay", replay_path, "Re-run the manifest in FILE and compare its result");

  std::string protocol, variant = "full", property, t0, pool, bound = "auto", knowledge, goal, trace, check;
  bool hashed = false, transformed = false, honest_only = false, open_sig = false;
  std::size_t role = 0, max_nodes = 0, k = 0;
  std::optional<std::size_t> honest_bound, dishonest_bound;
  auto variant_opt = [&](CLI::App* sub) {
    sub->add_option("--variant", variant, "Tag variant")->check(CLI::IsMember({"full", "nonces-only"}));
    sub->add_flag("--hashed", hashed, "Tag with h(tau)");
  };

  CLI::App* c_check = app.add_subcommand("check", "Parse a protocol and check that its roles are well formed");
  c_check->add_option("protocol", protocol, "Protocol file")->required();

  CLI::App* c_transform = app.add_subcommand("transform", "Print the tagged protocol");
  c_transform->add_option("protocol", protocol, "Protocol file")->required();
  variant_opt(c_transform);
  c_transform->add_option("--role", role, "Print only role J");

  CLI::App* c_verify = app.add_subcommand("verify", "Search for an attack within the session bound");
  c_verify->add_option("protocol", protocol, "Protocol file")->required();
  c_verify->add_option("--property", property,
                       "secrecy:role=J:nonce=Y, aliveness, weak-agreement or formula:<attack formula>")
      ->required();
  c_verify->add_option("--t0", t0, "Initial intruder knowledge, e.g. \"a,b,c,priv(c)\"");
  c_verify->add_option("--pool", pool, "Agents of the sessions (default: one honest and one compromised agent)");
  c_verify->add_flag("--transformed", transformed, "Verify the tagged protocol");
  variant_opt(c_verify);
  c_verify->add_option("--bound", bound, "Sessions per role, or auto for the formula size");
  c_verify->add_option("--honest-bound", honest_bound, "Sessions per role with honest participants only");
  c_verify->add_option("--dishonest-bound", dishonest_bound, "Sessions per role with a compromised participant");
  c_verify->add_flag("--honest-only", honest_only, "Only sessions between honest agents");
  c_verify->add_flag("--open-signatures", open_sig, "The intruder reads signed messages");
  c_verify->add_option("--max-nodes", max_nodes, "Search node budget, 0 for none");

  CLI::App* c_deduce = app.add_subcommand("deduce", "Decide whether the intruder deduces a term");
  c_deduce->add_option("--knowledge", knowledge, "Comma separated terms")->required();
  c_deduce->add_option("--goal", goal, "Term to deduce")->required();
  c_deduce->add_flag("--open-signatures", open_sig, "The intruder reads signed messages");

  CLI::App* c_trace = app.add_subcommand("trace-lab", "Inspect an execution of a tagged protocol");
  c_trace->add_option("trace", trace, "Execution file, one event per line as printed by verify")->required();
  c_trace->add_option("--k", k, "Number of roles of the protocol")->required();
  c_trace->add_option("--check", check, "well-formed, abstract, restrict:<sessions> or ws:<formula>")->required();
  c_trace->add_option("--t0", t0, "Initial intruder knowledge for validity and formulas");
  c_trace->add_flag("--open-signatures", open_sig, "The intruder reads signed messages");
  variant_opt(c_trace);

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kError;
  }

  try {
    if (!replay_path.empty()) {
      if (!app.get_subcommands().empty()) throw Failure("--replay takes no subcommand");
      return replay(replay_path, out);
    }
    if (app.get_subcommands().empty()) {
      err << app.help();
      return kError;
    }
    CLI::App* sub = app.get_subcommands().front();
    std::string cmd = sub->get_name();
    json cfg;
    if (sub == c_check) {
      cfg = {{"protocol", protocol}};
    } else if (sub == c_transform) {
      cfg = {{"protocol", protocol}, {"variant", variant}, {"hashed", hashed}, {"role", role}};
    } else if (sub == c_verify) {
      if (bound != "auto" && bound.find_first_not_of("0123456789") != std::string::npos)
        throw Failure("--bound takes auto or a number");
      cfg = {{"protocol", protocol},
             {"property", property},
             {"t0", split_terms(t0)},
             {"pool", split_terms(pool)},
             {"transformed", transformed},
             {"variant", variant},
             {"hashed", hashed},
             {"bound", bound.empty() ? "auto" : bound},
             {"honest_bound", honest_bound ? json(*honest_bound) : json()},
             {"dishonest_bound", dishonest_bound ? json(*dishonest_bound) : json()},
             {"honest_only", honest_only},
             {"open_signatures", open_sig},
             {"threads", threads},
             {"timeout_s", timeout_s},
             {"max_nodes", max_nodes}};
    } else if (sub == c_deduce) {
      cfg = {{"knowledge", split_terms(knowledge)}, {"goal", to_string(read_term(goal))}, {"open_signatures", open_sig}};
    } else {
      cfg = {{"trace", trace},      {"k", k},
             {"check", check},      {"t0", split_terms(t0)},
             {"variant", variant},  {"hashed", hashed},
             {"open_signatures", open_sig}};
    }
    return execute(cmd, cfg, json_path, seed, out);
  } catch (const Failure& e) {
    err << "error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "error: malformed manifest: " << e.what() << "\n";
  }
  return kError;
}

}  // namespace protoforge::cli
