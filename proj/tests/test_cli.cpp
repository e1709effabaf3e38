#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lad_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run lad(const std::string& args) {
  static const fs::path log = scratch("log") / "stdout.txt";
  const std::string cmd = std::string("\"") + LAD_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// a small scenario so most commands run fast
fs::path small_spec(const fs::path& dir) {
  const auto p = dir / "spec.json";
  std::ofstream(p) << R"({"nodes": 60, "steps": 40, "continuity": 1.0, "continuity_at_change": 0.0, "seed": 3,
    "segments": [{"start": 0, "label": "start", "communities": 3, "p_in": 0.4, "p_ex": 0.05},
                 {"start": 20, "label": "change_point", "communities": 2, "p_in": 0.4, "p_ex": 0.05},
                 {"start": 30, "label": "event", "communities": 2, "p_in": 0.4, "p_ex": 0.3}]})";
  return p;
}

}  // namespace

TEST_CASE("generate is byte-identical across runs") {
  const auto a = scratch("gen_a");
  const auto b = scratch("gen_b");
  REQUIRE(lad("generate pure --seed 7 --out " + q(a)).code == 0);
  const auto r = lad("generate pure --seed 7 --out " + q(b));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("T = 151, nodes = 500") != std::string::npos);
  CHECK(slurp(a / "graph.edges") == slurp(b / "graph.edges"));
  CHECK(slurp(a / "truth.json") == slurp(b / "truth.json"));
  const auto truth = nlohmann::json::parse(slurp(a / "truth.json"));
  CHECK(truth.size() == 7);
  for (const auto& p : truth) CHECK(p["label"] == "change_point");
}

TEST_CASE("generate hybrid lists events and change points") {
  const auto d = scratch("gen_hybrid");
  const auto r = lad("generate --preset hybrid --seed 7 --out " + q(d));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("3 change points, 4 events") != std::string::npos);
}

TEST_CASE("generate rejects unknown presets") {
  const auto d = scratch("gen_bad");
  CHECK(lad("generate nonsense --out " + q(d)).code == 2);
  CHECK(lad("generate --out " + q(d)).code == 2);
  CHECK(fs::is_empty(d));
}

TEST_CASE("generate from a spec file") {
  const auto d = scratch("gen_spec");
  const auto r = lad("generate --spec " + q(small_spec(d)) + " --out " + q(d));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("T = 40, nodes = 60") != std::string::npos);
  std::ofstream(d / "broken.json") << "{not json";
  CHECK(lad("generate --spec " + q(d / "broken.json") + " --out " + q(d / "x")).code == 1);
}

TEST_CASE("detect and eval recover the pure schedule") {
  const auto d = scratch("pure");
  REQUIRE(lad("generate pure --seed 7 --out " + q(d)).code == 0);
  REQUIRE(lad("detect --input " + q(d / "graph.edges") + " --rank full --out " + q(d)).code == 0);
  CHECK(fs::exists(d / "scores.csv"));
  CHECK(fs::exists(d / "spectrum.csv"));
  const auto r = lad("eval --ranked " + q(d / "ranked.json") + " --truth " + q(d / "truth.json") + " --top-n 7");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("H@7 = 7/7 (100%)") != std::string::npos);
  const auto m = nlohmann::json::parse(slurp(d / "metrics.json"));
  CHECK(m["hits_at_n"] == 1.0);

  const auto c = lad("correlate --input " + q(d / "graph.edges") + " --scores " + q(d / "scores.csv") +
                     " --out " + q(d));
  REQUIRE(c.code == 0);
  const auto csv = slurp(d / "correlation.csv");
  for (const char* p : {"connected_components", "transitivity", "edge_count", "avg_degree", "avg_edge_weight"})
    CHECK(csv.find(p) != std::string::npos);
}

TEST_CASE("detect with a rank writes that many spectrum columns") {
  const auto d = scratch("rank6");
  REQUIRE(lad("generate resampled --seed 1 --out " + q(d)).code == 0);
  REQUIRE(lad("detect --input " + q(d / "graph.edges") + " --rank 6 --out " + q(d)).code == 0);
  std::ifstream in(d / "spectrum.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "sigma_1,sigma_2,sigma_3,sigma_4,sigma_5,sigma_6");
  std::string row;
  std::getline(in, row);
  CHECK(std::count(row.begin(), row.end(), ',') == 5);
}

TEST_CASE("detect with the activity embedding") {
  const auto d = scratch("activity");
  REQUIRE(lad("generate --spec " + q(small_spec(d)) + " --out " + q(d)).code == 0);
  const auto r = lad("detect --input " + q(d / "graph.edges") + " --embedding activity --out " + q(d));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "activity.csv"));
  CHECK(slurp(d / "activity.csv").rfind("v_1,v_2,", 0) == 0);
  CHECK(fs::exists(d / "ranked.json"));
}

TEST_CASE("detect output is byte-identical across runs") {
  const auto d = scratch("det_repeat");
  REQUIRE(lad("generate --spec " + q(small_spec(d)) + " --out " + q(d)).code == 0);
  REQUIRE(lad("detect --input " + q(d / "graph.edges") + " --out " + q(d / "a")).code == 0);
  REQUIRE(lad("detect --input " + q(d / "graph.edges") + " --out " + q(d / "b")).code == 0);
  for (const char* f : {"scores.csv", "ranked.json", "spectrum.csv"}) CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
}

TEST_CASE("detect errors and exit codes") {
  const auto d = scratch("det_err");
  REQUIRE(lad("generate --spec " + q(small_spec(d)) + " --out " + q(d)).code == 0);
  const auto edges = q(d / "graph.edges");
  CHECK(lad("detect --input " + edges + " --long-window 40 --out " + q(d / "w")).code == 2);
  CHECK_FALSE(fs::exists(d / "w"));
  CHECK(lad("detect --input " + edges + " --short-window 6 --long-window 5 --out " + q(d / "w")).code == 2);
  CHECK(lad("detect --input " + edges + " --rank zero --out " + q(d / "w")).code == 2);
  CHECK(lad("detect --input " + edges + " --embedding bogus --out " + q(d / "w")).code == 2);
  CHECK(lad("detect --out " + q(d / "w")).code == 2);
  CHECK(lad("detect --input " + q(d / "missing.edges") + " --out " + q(d / "w")).code == 1);
  std::ofstream(d / "bad.edges") << "0 0 1\n0 1\n";
  const auto r = lad("detect --input " + q(d / "bad.edges") + " --out " + q(d / "w"));
  CHECK(r.code == 1);
  CHECK(r.out.find("line 2") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "w"));
}

TEST_CASE("eval errors and exit codes") {
  const auto d = scratch("eval_err");
  std::ofstream(d / "ranked.json") << R"([{"t": 3, "z_star": 0.5}, {"t": 1, "z_star": 0.1}, {"t": 2, "z_star": 0.0}])";
  std::ofstream(d / "truth.json") << R"([{"t": 3, "label": "event"}])";
  std::ofstream(d / "empty.json") << "[]";
  std::ofstream(d / "late.json") << R"([{"t": 30, "label": "event"}])";
  const auto ok = lad("eval --ranked " + q(d / "ranked.json") + " --truth " + q(d / "truth.json"));
  CHECK(ok.code == 0);
  CHECK(ok.out.find("H@1 = 1/1 (100%)") != std::string::npos);
  CHECK(lad("eval --ranked " + q(d / "ranked.json") + " --truth " + q(d / "truth.json") + " --top-n 4").code == 2);
  CHECK(lad("eval --ranked " + q(d / "ranked.json") + " --truth " + q(d / "empty.json")).code == 2);
  CHECK(lad("eval --ranked " + q(d / "ranked.json") + " --truth " + q(d / "late.json")).code == 2);
  CHECK(lad("eval --ranked " + q(d / "nope.json") + " --truth " + q(d / "truth.json")).code == 1);
  CHECK(lad("eval --ranked " + q(d / "ranked.json")).code == 2);
}

TEST_CASE("correlate flags constant scores as undefined") {
  const auto d = scratch("corr_const");
  REQUIRE(lad("generate --spec " + q(small_spec(d)) + " --out " + q(d)).code == 0);
  std::ofstream sc(d / "scores.csv");
  sc << "t,z_short,z_long,z,z_star\n";
  for (int t = 0; t < 40; ++t) sc << t << ",0,0,0,0\n";
  sc.close();
  const auto r = lad("correlate --input " + q(d / "graph.edges") + " --scores " + q(d / "scores.csv") + " --out " + q(d));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("undefined") != std::string::npos);
  const auto csv = slurp(d / "correlation.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find(",nan") != std::string::npos);

  std::ofstream(d / "short.csv") << "t,z_short,z_long,z,z_star\n0,0,0,0,0\n";
  CHECK(lad("correlate --input " + q(d / "graph.edges") + " --scores " + q(d / "short.csv") + " --out " + q(d)).code == 2);
}

TEST_CASE("help exits cleanly") {
  const auto r = lad("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("detect") != std::string::npos);
  CHECK(lad("").code == 2);
}
