#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fixture(const std::string& name) { return std::string(PROTOFORGE_FIXTURES) + "/" + name; }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "protoforge");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = protoforge::cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Scratch directory removed at the end of each test case.
struct Scratch {
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("protoforge_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }
  fs::path dir;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) {
  std::ifstream in(fixture(name));
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

const std::vector<std::string> kLowe = {"verify",   fixture("ns.proto"), "--property", "secrecy:role=2:nonce=y2",
                                        "--t0",     "a,b,c,priv(c)",     "--pool",     "a,b,c",
                                        "--bound", "auto"};

std::vector<std::string> with(std::vector<std::string> args, const std::vector<std::string>& more) {
  args.insert(args.end(), more.begin(), more.end());
  return args;
}

}  // namespace

TEST_CASE("check") {
  Scratch s;
  Run ok = cli({"check", fixture("ns.proto")});
  CHECK(ok.code == protoforge::cli::kOk);
  CHECK(ok.out.find("ok") != std::string::npos);

  Run leak = cli({"check", fixture("leak.proto")});
  CHECK(leak.code == protoforge::cli::kNegative);
  CHECK(leak.out.find("plaintext-origination") != std::string::npos);

  Run empty = cli({"check", s.write("empty.proto", "")});
  CHECK(empty.code == protoforge::cli::kNegative);
  CHECK(empty.out.find("empty.proto:1:1:") != std::string::npos);

  Run bad = cli({"check", s.write("bad.proto", "protocol P (1)\nrole 1 params A:\n  snd enca(A\n")});
  CHECK(bad.code == protoforge::cli::kNegative);
  CHECK(bad.out.find("bad.proto:3:") != std::string::npos);

  CHECK(cli({"check", s.path("missing.proto")}).code == protoforge::cli::kError);
}

TEST_CASE("transform prints the golden role") {
  Run r = cli({"transform", fixture("ns.proto"), "--role", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == golden("ns_transformed_role2.txt"));
  CHECK(cli({"transform", fixture("ns.proto"), "--role", "3"}).code == protoforge::cli::kError);
  Run hashed = cli({"transform", fixture("ns.proto"), "--hashed", "--variant", "nonces-only"});
  CHECK(hashed.code == 0);
  CHECK(hashed.out.find("h(") != std::string::npos);
}

TEST_CASE("verify exit codes") {
  Scratch s;
  Run lowe = cli(kLowe);
  CHECK(lowe.code == protoforge::cli::kAttack);
  CHECK(lowe.out.find("verdict: attack") != std::string::npos);

  Run secure = cli(with(kLowe, {"--transformed", "--honest-only"}));
  CHECK(secure.code == protoforge::cli::kOk);
  CHECK(secure.out.find("any number of sessions") != std::string::npos);

  std::string keyleak = s.write("keyleak.proto", "protocol KeyLeak (2)\nrole 1 params A B:\n  snd <A, shk(A, B)>\nrole 2 params A B:\n  rcv <A, ?k>\n");
  Run hyp = cli({"verify", keyleak, "--property", "formula:exists x . learn(x) & sometime P(x)", "--t0", "a,c,priv(c)"});
  CHECK(hyp.code == protoforge::cli::kHypothesis);

  Run budget = cli({"verify", fixture("ns.proto"), "--property", "secrecy:role=2:nonce=y2", "--t0", "a,b", "--pool",
                    "a,b", "--bound", "2", "--max-nodes", "3"});
  CHECK(budget.code == protoforge::cli::kTimeout);

  CHECK(cli({"verify", fixture("ns.proto"), "--property", "secrecy:role=3:nonce=y2"}).code == protoforge::cli::kError);
  CHECK(cli({"verify", fixture("ns.proto"), "--property", "secrecy:role=2:nonce=q"}).code == protoforge::cli::kError);
  CHECK(cli({"verify", fixture("ns.proto"), "--property", "aliveness", "--t0", "a,<b,c>"}).code ==
        protoforge::cli::kError);
  CHECK(cli({"verify", fixture("ns.proto"), "--property", "aliveness", "--bound", "x"}).code ==
        protoforge::cli::kError);
  CHECK(cli({"verify", fixture("ns.proto"), "--property", "weak-agreement", "--t0", "a,b,c,priv(c)", "--pool",
             "a,b,c"}).code ==
        protoforge::cli::kAttack);
}

TEST_CASE("verify manifest replays") {
  Scratch s;
  std::string report = s.path("report.json");
  Run r = cli(with(kLowe, {"--json", report, "--seed", "7"}));
  REQUIRE(r.code == protoforge::cli::kAttack);
  json m = json::parse(slurp(report));
  CHECK(m["schema_version"] == protoforge::cli::kSchemaVersion);
  CHECK(m["command"] == "verify");
  CHECK(m["seed"] == 7);
  CHECK(m["exit_code"] == protoforge::cli::kAttack);
  CHECK(m["inputs"][0]["content"] == slurp(fixture("ns.proto")));
  CHECK(m["result"]["verdict"] == "attack");
  CHECK(m["result"]["attack"]["proofs"].size() == 2);

  Run replay = cli({"--replay", report});
  CHECK(replay.code == 0);
  CHECK(replay.out.find("replay: ok") != std::string::npos);

  // A forged execution fails the independent re-check.
  json forged = m;
  forged["result"]["attack"]["execution"][4]["event"] = "rcv enca(<n[y@s1],n[y@s1]>,pub(a))";
  std::ofstream(s.path("forged.json")) << forged.dump();
  CHECK(cli({"--replay", s.path("forged.json")}).code == protoforge::cli::kNegative);

  // A different recorded verdict is a mismatch.
  json changed = m;
  changed["result"]["attack"] = nullptr;
  changed["result"]["verdict"] = "secure";
  std::ofstream(s.path("changed.json")) << changed.dump();
  Run mismatch = cli({"--replay", s.path("changed.json")});
  CHECK(mismatch.code == protoforge::cli::kNegative);
  CHECK(mismatch.out.find("differs") != std::string::npos);

  json future = m;
  future["schema_version"] = protoforge::cli::kSchemaVersion + 1;
  std::ofstream(s.path("future.json")) << future.dump();
  CHECK(cli({"--replay", s.path("future.json")}).code == protoforge::cli::kError);
}

TEST_CASE("verify reports are deterministic") {
  Scratch s;
  std::vector<std::string> args = {"verify", fixture("ns.proto"), "--property", "secrecy:role=2:nonce=y2",
                                   "--t0", "a,b,c,priv(c)", "--pool", "a,b,c", "--transformed", "--variant",
                                   "nonces-only", "--bound", "2", "--honest-bound", "1", "--dishonest-bound", "1"};
  Run one = cli(with(args, {"--json", s.path("one.json")}));
  Run four = cli(with(args, {"--json", s.path("four.json"), "--threads", "4"}));
  REQUIRE(one.code == protoforge::cli::kAttack);
  CHECK(four.code == one.code);
  json a = json::parse(slurp(s.path("one.json"))), b = json::parse(slurp(s.path("four.json")));
  CHECK(a["result"] == b["result"]);
  CHECK(cli({"--replay", s.path("four.json")}).code == 0);

  // The JSON manifest on stdout replaces the text report.
  Run stdout_json = cli(with(kLowe, {"--json", "-"}));
  CHECK(json::parse(stdout_json.out)["result"]["verdict"] == "attack");
}

TEST_CASE("deduce") {
  Scratch s;
  std::string report = s.path("deduce.json");
  Run yes = cli({"deduce", "--knowledge", "encs(n[n],shk(a,b)), shk(a,b)", "--goal", "<n[n],shk(a,b)>", "--json", report});
  CHECK(yes.code == 0);
  CHECK(yes.out.find("[decs]") != std::string::npos);
  json m = json::parse(slurp(report));
  CHECK(m["result"]["proof"]["rule"] == "pair");
  CHECK(cli({"--replay", report}).code == 0);

  json forged = m;
  forged["result"]["proof"]["premises"][0] = {{"rule", "hyp"}, {"conclusion", "n[n]"}};
  std::ofstream(s.path("forged.json")) << forged.dump();
  CHECK(cli({"--replay", s.path("forged.json")}).code == protoforge::cli::kNegative);

  Run no = cli({"deduce", "--knowledge", "encs(n[n],shk(a,b))", "--goal", "n[n]"});
  CHECK(no.code == protoforge::cli::kNegative);
  CHECK(no.out.find("not deducible") != std::string::npos);
  CHECK(cli({"deduce", "--knowledge", "enca(", "--goal", "a"}).code == protoforge::cli::kError);
}

TEST_CASE("trace-lab") {
  Scratch s;
  std::string report = s.path("attack.json");
  std::vector<std::string> args = {"verify", fixture("ns.proto"), "--property", "secrecy:role=2:nonce=y2",
                                   "--t0", "a,b,c,priv(c)", "--pool", "a,b,c", "--transformed", "--variant",
                                   "nonces-only", "--bound", "2", "--honest-bound", "1", "--dishonest-bound", "1",
                                   "--json", report};
  REQUIRE(cli(args).code == protoforge::cli::kAttack);
  json attack = json::parse(slurp(report))["result"]["attack"];

  // The plain Lowe execution has no tags.
  Run untagged = cli({"trace-lab", fixture("ns_lowe_trace.txt"), "--k", "2", "--check", "well-formed"});
  CHECK(untagged.code == protoforge::cli::kNegative);
  CHECK(untagged.out.find("condition 1") != std::string::npos);

  // The abstraction of the attack is well formed and valid.
  std::string out = s.path("abstract.json");
  Run abs = cli({"trace-lab", report, "--k", "2", "--variant", "nonces-only", "--check", "abstract", "--t0",
                 "a,b,c,priv(c)", "--json", out});
  CHECK(abs.code == 0);
  json a = json::parse(slurp(out))["result"];
  CHECK(a["input"]["valid"] == true);
  CHECK(a["output"]["valid"] == true);
  CHECK(a["output"]["well_formed"] == true);
  CHECK(cli({"--replay", out}).code == 0);

  // JSON event arrays are accepted; the attack needs one honest session.
  std::string events = s.write("events.json", attack["execution"].dump());
  std::string secret;
  for (const json& e : attack["execution"])
    if (e["event"].get<std::string>().rfind("status", 0) == 0) secret = e["event"].get<std::string>().substr(7);
  REQUIRE(!secret.empty());
  std::string nonce = secret.substr(secret.rfind(',') + 1);
  nonce.pop_back();
  Run ws = cli({"trace-lab", events, "--k", "2", "--t0", "a,b,c,priv(c)", "--check",
                "ws:sometime " + secret + " & learn(" + nonce + ")"});
  CHECK(ws.code == 0);
  CHECK(ws.out.find("size bound: 1 <= 1") != std::string::npos);
  Run nows = cli({"trace-lab", events, "--k", "2", "--check", "ws:learn(n[y@s9])"});
  CHECK(nows.code == protoforge::cli::kNegative);

  Run split = cli({"trace-lab", events, "--k", "2", "--check", "restrict:1,2"});
  Run whole = cli({"trace-lab", events, "--k", "2", "--check", "restrict:1,2,3"});
  CHECK(whole.code == 0);
  CHECK((split.code == 0 || split.out.find("splits a tag class") != std::string::npos));
  CHECK(cli({"trace-lab", events, "--k", "2", "--check", "restrict:x"}).code == protoforge::cli::kError);
  CHECK(cli({"trace-lab", events, "--k", "2", "--check", "nonsense"}).code == protoforge::cli::kError);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == protoforge::cli::kError);
  CHECK(cli({"frobnicate"}).code == protoforge::cli::kError);
  CHECK(cli({"verify", fixture("ns.proto")}).code == protoforge::cli::kError);
  CHECK(cli({"--help"}).code == 0);
}
