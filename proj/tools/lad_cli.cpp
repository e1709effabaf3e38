// lad: generate SBM scenarios, score dynamic graphs, evaluate rankings and
// correlate scores with graph properties.
//
// Exit codes: 0 success, 1 I/O or parse failure, 2 usage or validation error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lad/lad.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

class UsageError : public lad::Error {
 public:
  using lad::Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lad::IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw lad::ParseError("'" + path + "': " + e.what(), 0);
  }
}

/// Writes every file only after all contents are ready; each file goes
/// through a temporary and a rename so readers never see partial output.
void commit(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw lad::IoError("cannot create '" + dir.string() + "': " + ec.message());
  for (const auto& [name, content] : files) {
    const fs::path target = dir / name;
    const fs::path tmp = dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw lad::IoError("cannot write '" + tmp.string() + "'");
      out << content;
      if (!out.flush()) throw lad::IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw lad::IoError("cannot move into '" + target.string() + "': " + ec.message());
  }
}

std::string percent(double fraction) {
  char buf[32];
  const double p = fraction * 100.0;
  if (std::abs(p - std::round(p)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%.0f%%", p);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f%%", p);
  }
  return buf;
}

struct GenerateArgs {
  std::string preset;
  std::string spec_file;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

struct DetectArgs {
  std::string input;
  std::string preset;
  std::uint64_t seed = 0;
  bool directed = false;
  std::size_t short_window = 5;
  std::size_t long_window = 10;
  std::string rank = "auto";
  std::string embedding = "laplacian";
  std::string out = ".";
  std::size_t top_n = 10;
};

struct EvalArgs {
  std::string ranked;
  std::string truth;
  std::size_t top_n = 0;
  std::string out;
};

struct CorrelateArgs {
  std::string input;
  std::string scores;
  bool directed = false;
  std::size_t window = 5;
  std::string out = ".";
};

lad::ScenarioSpec resolve_scenario(const std::string& preset, const std::string& spec_file,
                                   std::optional<std::uint64_t> seed) {
  if (preset.empty() == spec_file.empty()) {
    throw UsageError("give exactly one of a preset name or --spec");
  }
  if (!preset.empty()) {
    if (preset != "pure" && preset != "hybrid" && preset != "resampled") {
      throw UsageError("unknown preset '" + preset + "' (expected pure, hybrid or resampled)");
    }
    return lad::preset(preset, seed.value_or(0));
  }
  auto spec = lad::scenario_from_json(read_json(spec_file));
  if (seed) spec.seed = *seed;
  return spec;
}

int run_generate(const GenerateArgs& a) {
  const auto spec = resolve_scenario(a.preset, a.spec_file, a.seed);
  const auto scenario = lad::generate_scenario(spec);

  std::ostringstream edges;
  lad::write_snapshots(edges, scenario.graph);
  commit(a.out, {{"graph.edges", edges.str()},
                 {"truth.json", lad::truth_to_json(scenario.truth).dump(2) + "\n"}});

  std::size_t changes = 0;
  std::size_t events = 0;
  std::cout << "T = " << scenario.graph.size() << ", nodes = " << scenario.graph.global_node_count()
            << ", seed = " << spec.seed << "\n";
  for (const auto& p : scenario.truth) {
    (p.label == lad::SegmentLabel::event ? events : changes) += 1;
    std::cout << "  t = " << p.t << "  " << lad::to_string(p.label) << "\n";
  }
  std::cout << changes << " change points, " << events << " events\n";
  return 0;
}

lad::EmbeddingKind embedding_from_args(const DetectArgs& a, std::size_t nodes) {
  if (a.embedding == "activity") return lad::EmbeddingKind::activity();
  if (a.embedding != "laplacian") throw UsageError("unknown embedding '" + a.embedding + "'");
  if (a.rank == "full") return lad::EmbeddingKind::full_spectrum();
  if (a.rank == "auto") {
    return nodes <= 500 ? lad::EmbeddingKind::full_spectrum() : lad::EmbeddingKind::truncated_spectrum(6);
  }
  std::size_t k = 0;
  if (!lad::detail::parse_number(std::string_view(a.rank), k) || k == 0) {
    throw UsageError("--rank must be 'full', 'auto' or a positive integer");
  }
  return lad::EmbeddingKind::truncated_spectrum(k);
}

int run_detect(const DetectArgs& a) {
  if (a.input.empty() == a.preset.empty()) throw UsageError("give exactly one of --input or --preset");
  const lad::TemporalGraph g =
      a.preset.empty() ? lad::load_snapshots(a.input, a.directed)
                       : lad::generate_scenario(resolve_scenario(a.preset, "", a.seed)).graph;

  lad::DetectorConfig cfg;
  cfg.short_window = a.short_window;
  cfg.long_window = a.long_window;
  cfg.embedding = embedding_from_args(a, g.global_node_count());
  cfg.validate(g.size());

  const auto embeddings = lad::embed_sequence(g, cfg.embedding);
  const auto scores = lad::score_series(embeddings, cfg);

  std::ostringstream scores_csv;
  lad::write_scores_csv(scores_csv, scores);
  std::ostringstream emb_csv;
  const bool activity = cfg.embedding.type() == lad::EmbeddingKind::Type::activity_vector;
  lad::write_embedding_csv(emb_csv, embeddings, activity ? "v" : "sigma");
  commit(a.out, {{"scores.csv", scores_csv.str()},
                 {"ranked.json", lad::ranked_to_json(scores).dump(2) + "\n"},
                 {activity ? "activity.csv" : "spectrum.csv", emb_csv.str()}});

  std::cout << "T = " << g.size() << ", nodes = " << g.global_node_count()
            << ", embedding = " << cfg.embedding.name() << ", s = " << cfg.short_window
            << ", l = " << cfg.long_window << "\n";
  const std::size_t show = std::min(a.top_n, scores.ranked.size());
  std::cout << "top " << show << ":";
  for (std::size_t i = 0; i < show; ++i) std::cout << ' ' << scores.ranked[i];
  std::cout << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto ranked_entries = lad::ranked_from_json(read_json(a.ranked));
  const auto truth_points = lad::truth_from_json(read_json(a.truth));

  std::vector<std::size_t> ranked;
  std::size_t max_t = 0;
  for (const auto& e : ranked_entries) {
    ranked.push_back(e.t);
    max_t = std::max(max_t, e.t);
  }
  std::vector<std::size_t> truth;
  for (const auto& p : truth_points) {
    if (ranked.empty() || p.t > max_t) {
      throw lad::ValidationError("ground-truth time " + std::to_string(p.t) +
                                 " lies outside the ranked time range");
    }
    truth.push_back(p.t);
  }
  if (truth.empty()) throw lad::UndefinedError("Hits@n is undefined for an empty ground truth");
  const std::size_t n = a.top_n > 0 ? a.top_n : truth.size();
  if (n > ranked.size()) {
    throw UsageError("--top-n " + std::to_string(n) + " exceeds the " +
                     std::to_string(ranked.size()) + " ranked points");
  }
  const auto r = lad::count_hits(ranked, truth, n);

  nlohmann::json metrics = {{"n", r.n},
                            {"hits", r.hits},
                            {"truth", r.truth_size},
                            {"hits_at_n", r.fraction()}};
  const fs::path out = a.out.empty() ? fs::path(a.ranked).parent_path() : fs::path(a.out);
  commit(out.empty() ? fs::path(".") : out, {{"metrics.json", metrics.dump(2) + "\n"}});

  std::cout << "H@" << r.n << " = " << r.hits << "/" << r.truth_size << " (" << percent(r.fraction())
            << ")\n";
  return 0;
}

int run_correlate(const CorrelateArgs& a) {
  const auto g = lad::load_snapshots(a.input, a.directed);
  std::ifstream in(a.scores);
  if (!in) throw lad::IoError("cannot open '" + a.scores + "'");
  const auto scores = lad::read_scores_csv(in);
  const auto rep = lad::correlation_report(scores, g, a.window);

  std::ostringstream csv;
  lad::write_correlation_csv(csv, rep);
  commit(a.out, {{"correlation.csv", csv.str()}});
  lad::print_correlation_table(std::cout, rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplacian-spectrum anomaly detection for dynamic graphs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate an SBM scenario with ground truth");
  generate->add_option("scenario", gen.preset, "Preset name: pure | hybrid | resampled");
  generate->add_option("--preset", gen.preset, "Preset name: pure | hybrid | resampled");
  generate->add_option("--spec", gen.spec_file, "Scenario spec JSON file");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--out", gen.out, "Output directory")->capture_default_str();

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Score every snapshot of a dynamic graph");
  detect->add_option("--input", det.input, "Edge-list file ('t u v [w]' per line)");
  detect->add_option("--preset", det.preset, "Generate a preset scenario in memory instead of --input");
  detect->add_option("--seed", det.seed, "Seed for --preset")->capture_default_str();
  detect->add_flag("--directed", det.directed, "Treat edges as directed");
  detect->add_option("--short-window", det.short_window, "Short window s")->capture_default_str();
  detect->add_option("--long-window", det.long_window, "Long window l")->capture_default_str();
  detect->add_option("--rank", det.rank, "Spectrum length: full | auto | k")->capture_default_str();
  detect->add_option("--embedding", det.embedding, "laplacian | activity")
      ->check(CLI::IsMember({"laplacian", "activity"}))
      ->capture_default_str();
  detect->add_option("--out", det.out, "Output directory")->capture_default_str();
  detect->add_option("--top-n", det.top_n, "How many ranked points to print")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Hits@n of a ranking against ground truth");
  eval->add_option("--ranked", ev.ranked, "ranked.json from detect")->required();
  eval->add_option("--truth", ev.truth, "truth.json from generate")->required();
  eval->add_option("--top-n", ev.top_n, "n (defaults to the ground-truth size)");
  eval->add_option("--out", ev.out, "Directory for metrics.json (defaults to the ranked file's)");

  CorrelateArgs cor;
  auto* correlate = app.add_subcommand("correlate", "Rank-correlate scores with graph-property outliers");
  correlate->add_option("--input", cor.input, "Edge-list file")->required();
  correlate->add_option("--scores", cor.scores, "scores.csv from detect")->required();
  correlate->add_flag("--directed", cor.directed, "Treat edges as directed");
  correlate->add_option("--window", cor.window, "Moving window for outlier scores")->capture_default_str();
  correlate->add_option("--out", cor.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*detect) return run_detect(det);
    if (*eval) return run_eval(ev);
    if (*correlate) return run_correlate(cor);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const lad::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lad::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lad::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const lad::UndefinedError& e) {
    std::cerr << "undefined: " << e.what() << "\n";
    return kExitUsage;
  } catch (const lad::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
