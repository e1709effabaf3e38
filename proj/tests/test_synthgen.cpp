#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <utility>

#include "lad/spectral.hpp"
#include "lad/synthgen.hpp"

using namespace lad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::set<std::pair<NodeId, NodeId>> edge_set(const Snapshot& s) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const auto& e : s.edges()) out.insert({e.source, e.target});
  return out;
}

double jaccard(const Snapshot& a, const Snapshot& b) {
  const auto x = edge_set(a);
  const auto y = edge_set(b);
  std::size_t inter = 0;
  for (const auto& e : x) inter += y.count(e);
  const std::size_t uni = x.size() + y.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::size_t> truth_times(const Scenario& sc) {
  std::vector<std::size_t> out;
  for (const auto& p : sc.truth) out.push_back(p.t);
  return out;
}

ScenarioSpec small_spec(double normal, double at_change) {
  ScenarioSpec s;
  s.node_count = 30;
  s.total_steps = 12;
  s.continuity_rate_normal = normal;
  s.continuity_rate_at_change = at_change;
  s.seed = 5;
  s.segments = {{0, {{15, 15}, 0.4, 0.05}, SegmentLabel::start},
                {4, {{15, 15}, 0.4, 0.5}, SegmentLabel::event},
                {8, {{10, 10, 10}, 0.6, 0.02}, SegmentLabel::change_point}};
  return s;
}

}  // namespace

TEST_CASE("deterministic SBM draws") {
  Rng rng(1);
  const auto s = sample_sbm({2, 2}, 1.0, 0.0, rng);
  CHECK(s.edges().size() == 2);
  CHECK(graph_stats(s).connected_components == 2);
  const auto sv = full_spectrum(laplacian(s, 4)).values;
  CHECK((sv.array() < 1e-8).count() == 2);

  const auto none = sample_sbm({3, 3}, 0.0, 0.0, rng);
  CHECK(none.empty());
  CHECK(none.node_count() == 6);
}

TEST_CASE("SBM draws are simple unit-weight undirected graphs") {
  Rng rng(2);
  const auto s = sample_sbm({20, 30}, 0.5, 0.3, rng);
  CHECK_FALSE(s.directed());
  for (const auto& e : s.edges()) {
    CHECK(e.source < e.target);
    CHECK(e.weight == 1.0);
  }
}

TEST_CASE("mean SBM edge count matches its expectation") {
  // 2 * C(250, 2) * 0.25 + 250^2 * 0.05
  const double expected = 2.0 * (250.0 * 249.0 / 2.0) * 0.25 + 250.0 * 250.0 * 0.05;
  CHECK(expected == 18687.5);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    total += static_cast<double>(sample_sbm({250, 250}, 0.25, 0.05, rng).edges().size());
  }
  CHECK_THAT(total / 100.0, WithinRel(expected, 0.02));
}

TEST_CASE("SBM model validation") {
  Rng rng(3);
  CHECK_THROWS_AS(sample_sbm({}, 0.5, 0.5, rng), ValidationError);
  CHECK_THROWS_AS(sample_sbm({3, 0}, 0.5, 0.5, rng), ValidationError);
  CHECK_THROWS_AS(sample_sbm({3}, 1.5, 0.5, rng), ValidationError);
  CHECK_THROWS_AS(sample_sbm({3}, 0.5, -0.1, rng), ValidationError);
  CHECK(equal_blocks(500, 3) == std::vector<std::size_t>{166, 166, 168});
  CHECK_THROWS_AS(equal_blocks(3, 4), ValidationError);
}

TEST_CASE("full continuity keeps the previous snapshot") {
  Rng rng(4);
  const SbmModel m{{10, 10}, 0.3, 0.1};
  const auto prev = sample_sbm(m, rng);
  const auto next = evolve_with_continuity(prev, m, 1.0, rng);
  CHECK(edge_set(next) == edge_set(prev));
}

TEST_CASE("zero continuity matches a fresh draw") {
  const SbmModel m{{12, 12}, 0.3, 0.1};
  Rng a(9);
  Rng b(9);
  const auto prev = Snapshot::from_edges(0, 24, {{0, 1, 1.0}, {5, 20, 1.0}});
  CHECK(edge_set(evolve_with_continuity(prev, m, 0.0, a)) == edge_set(sample_sbm(m, b)));
}

TEST_CASE("zero continuity edge counts follow the model distribution") {
  // blocks {4,4}: 12 intra pairs at 0.5 and 16 inter pairs at 0.25
  const SbmModel m{{4, 4}, 0.5, 0.25};
  std::vector<double> pin(13), pex(17);
  for (int k = 0; k <= 12; ++k) pin[static_cast<std::size_t>(k)] = std::tgamma(13) / (std::tgamma(k + 1) * std::tgamma(13 - k)) * std::pow(0.5, 12);
  for (int k = 0; k <= 16; ++k)
    pex[static_cast<std::size_t>(k)] =
        std::tgamma(17) / (std::tgamma(k + 1) * std::tgamma(17 - k)) * std::pow(0.25, k) * std::pow(0.75, 16 - k);
  std::vector<double> pmf(29, 0.0);
  for (std::size_t i = 0; i < pin.size(); ++i)
    for (std::size_t j = 0; j < pex.size(); ++j) pmf[i + j] += pin[i] * pex[j];

  // five bins with roughly equal mass
  const std::vector<std::size_t> edges_hi{6, 8, 10, 11, 28};
  std::vector<double> expected(5, 0.0);
  for (std::size_t c = 0, b = 0; c < pmf.size(); ++c) {
    if (c > edges_hi[b]) ++b;
    expected[b] += pmf[c];
  }
  std::vector<double> observed(5, 0.0);
  const auto complete = [] {
    std::vector<Edge> e;
    for (NodeId u = 0; u < 8; ++u)
      for (NodeId v = u + 1; v < 8; ++v) e.push_back({u, v, 1.0});
    return Snapshot::from_edges(0, 8, std::move(e));
  }();
  const int draws = 200;
  for (int seed = 0; seed < draws; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 1000);
    const std::size_t c = evolve_with_continuity(complete, m, 0.0, rng).edges().size();
    std::size_t b = 0;
    while (c > edges_hi[b]) ++b;
    observed[b] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < 5; ++b) {
    const double e = expected[b] * draws;
    chi2 += (observed[b] - e) * (observed[b] - e) / e;
  }
  // 4 degrees of freedom, upper 1% point
  CHECK(chi2 < 13.277);
}

TEST_CASE("zero continuity pair marginals equal the model probabilities", "[property]") {
  const SbmModel m{{3, 3}, 0.7, 0.2};
  const auto prev = Snapshot::from_edges(0, 6, {{0, 3, 1.0}, {1, 2, 1.0}});
  const int draws = 4000;
  std::vector<std::vector<int>> hits(6, std::vector<int>(6, 0));
  Rng rng(77);
  for (int i = 0; i < draws; ++i) {
    const auto s = evolve_with_continuity(prev, m, 0.0, rng);
    for (const auto& e : s.edges()) ++hits[e.source][e.target];
  }
  for (NodeId u = 0; u < 6; ++u) {
    for (NodeId v = u + 1; v < 6; ++v) {
      const double p = (u < 3) == (v < 3) ? 0.7 : 0.2;
      const double sd = std::sqrt(p * (1 - p) / draws);
      CHECK_THAT(hits[u][v] / static_cast<double>(draws), WithinAbs(p, 5.0 * sd));
    }
  }
}

TEST_CASE("high continuity keeps edge sets similar") {
  const SbmModel m{{50, 50}, 0.25, 0.05};
  double j90 = 0.0;
  double j0 = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto prev = sample_sbm(m, rng);
    j90 += jaccard(prev, evolve_with_continuity(prev, m, 0.9, rng));
    j0 += jaccard(prev, evolve_with_continuity(prev, m, 0.0, rng));
  }
  j90 /= 100.0;
  j0 /= 100.0;
  CHECK(j90 > 0.7);
  CHECK(j0 < 0.15);
}

TEST_CASE("evolution validates its inputs") {
  Rng rng(6);
  const SbmModel m{{4, 4}, 0.3, 0.1};
  const auto prev = Snapshot::from_edges(0, 7, {});
  CHECK_THROWS_AS(evolve_with_continuity(prev, m, 0.5, rng), ValidationError);
  const auto ok = Snapshot::from_edges(0, 8, {});
  CHECK_THROWS_AS(evolve_with_continuity(ok, m, 1.5, rng), ValidationError);
}

TEST_CASE("pure preset schedule") {
  const auto sc = generate_scenario(pure_preset(7));
  CHECK(sc.graph.size() == 151);
  CHECK(sc.graph.global_node_count() == 500);
  CHECK(truth_times(sc) == std::vector<std::size_t>{16, 31, 61, 76, 91, 106, 136});
  for (const auto& p : sc.truth) CHECK(p.label == SegmentLabel::change_point);
  // continuity 1 between change points freezes the graph
  CHECK(sc.graph[20] == sc.graph[17].relabeled(20, 500));
  CHECK_FALSE(sc.graph[16] == sc.graph[15].relabeled(16, 500));
}

TEST_CASE("hybrid preset schedule") {
  const auto spec = hybrid_preset(7);
  CHECK(spec.continuity_rate_normal == 0.9);
  CHECK(spec.continuity_rate_at_change == 0.0);
  const auto sc = generate_scenario(spec);
  std::vector<std::size_t> events;
  std::vector<std::size_t> changes;
  for (const auto& p : sc.truth) (p.label == SegmentLabel::event ? events : changes).push_back(p.t);
  CHECK(events == std::vector<std::size_t>{16, 61, 91, 136});
  CHECK(changes == std::vector<std::size_t>{31, 76, 106});
  for (const auto& seg : spec.segments) {
    if (seg.label == SegmentLabel::event) CHECK(seg.model.p_ex == 0.15);
  }
}

TEST_CASE("resampled preset uses zero continuity throughout") {
  const auto spec = resampled_preset(7);
  CHECK(spec.continuity_rate_normal == 0.0);
  CHECK(spec.continuity_rate_at_change == 0.0);
  const auto hyb = hybrid_preset(7);
  REQUIRE(spec.segments.size() == hyb.segments.size());
  for (std::size_t i = 0; i < spec.segments.size(); ++i) CHECK(spec.segments[i].start == hyb.segments[i].start);
  CHECK_THROWS_AS(preset("unknown", 1), ConfigurationError);
}

TEST_CASE("an event affects exactly one snapshot") {
  const auto sc = generate_scenario(small_spec(1.0, 0.0));
  CHECK_FALSE(sc.graph[4] == sc.graph[3].relabeled(4, 30));
  CHECK(sc.graph[5] == sc.graph[3].relabeled(5, 30));
  CHECK(sc.graph[7] == sc.graph[3].relabeled(7, 30));
  CHECK_FALSE(sc.graph[8] == sc.graph[7].relabeled(8, 30));
}

TEST_CASE("generated snapshots are simple, undirected and unit-weight", "[property]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto spec = small_spec(0.5, 0.0);
    spec.seed = seed;
    const auto sc = generate_scenario(spec);
    for (const auto& s : sc.graph.snapshots()) {
      CHECK_FALSE(s.directed());
      for (const auto& e : s.edges()) {
        CHECK(e.source != e.target);
        CHECK(e.weight == 1.0);
      }
    }
  }
}

TEST_CASE("same seed gives the same scenario") {
  const auto a = generate_scenario(small_spec(0.9, 0.0));
  const auto b = generate_scenario(small_spec(0.9, 0.0));
  for (std::size_t t = 0; t < a.graph.size(); ++t) CHECK(a.graph[t] == b.graph[t]);
  CHECK(a.truth == b.truth);
  auto other = small_spec(0.9, 0.0);
  other.seed = 6;
  CHECK_FALSE(generate_scenario(other).graph[0] == a.graph[0]);
}

TEST_CASE("scenario validation") {
  auto s = small_spec(0.9, 0.0);
  s.segments[2].start = 4;
  CHECK_THROWS_AS(generate_scenario(s), ValidationError);
  s = small_spec(0.9, 0.0);
  s.segments[0].start = 1;
  CHECK_THROWS_AS(generate_scenario(s), ValidationError);
  s = small_spec(0.9, 0.0);
  s.segments[1].model.block_sizes = {10, 10};
  CHECK_THROWS_AS(generate_scenario(s), ValidationError);
  s = small_spec(0.9, 0.0);
  s.segments[2].start = 12;
  CHECK_THROWS_AS(generate_scenario(s), ValidationError);
  s = small_spec(1.2, 0.0);
  CHECK_THROWS_AS(generate_scenario(s), ValidationError);
}

TEST_CASE("scenario spec json") {
  const auto j = nlohmann::json::parse(R"({
    "nodes": 12, "steps": 9, "continuity": 0.5, "seed": 3,
    "segments": [
      {"start": 0, "label": "start", "communities": 3, "p_in": 0.8, "p_ex": 0.1},
      {"start": 4, "label": "event", "block_sizes": [6, 6], "p_in": 0.8, "p_ex": 0.4}
    ]})");
  const auto s = scenario_from_json(j);
  CHECK(s.node_count == 12);
  CHECK(s.continuity_rate_normal == 0.5);
  CHECK(s.continuity_rate_at_change == 0.0);
  CHECK(s.segments[0].model.block_sizes == std::vector<std::size_t>{4, 4, 4});
  CHECK(s.segments[1].label == SegmentLabel::event);
  CHECK(generate_scenario(s).graph.size() == 9);

  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"nodes": 4})")), ParseError);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                      R"({"nodes": 4, "steps": 3, "segments": [{"start": 0, "label": "bogus", "communities": 2, "p_in": 1, "p_ex": 0}]})")),
                  ValidationError);
}

TEST_CASE("ground truth json round trip") {
  const std::vector<GroundTruthPoint> truth{{16, SegmentLabel::event}, {31, SegmentLabel::change_point}};
  const auto j = truth_to_json(truth);
  CHECK(j.dump() == R"([{"label":"event","t":16},{"label":"change_point","t":31}])");
  CHECK(truth_from_json(j) == truth);
  CHECK_THROWS_AS(truth_from_json(nlohmann::json::object()), ParseError);
}
