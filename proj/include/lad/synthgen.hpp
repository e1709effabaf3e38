#pragma once

// Stochastic block model scenarios for dynamic graphs.
//
// A scenario is a list of segments, each an SBM (block sizes, intra-block
// probability p_in, inter-block probability p_ex). Each snapshot evolves
// from the previous non-event snapshot: every node pair keeps its previous
// state with the continuity rate c and is redrawn from the current model
// otherwise. Change points switch the model for good; an event is a single
// snapshot that later steps do not inherit.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lad/error.hpp"
#include "lad/graph.hpp"

namespace lad {

/// 64-bit Mersenne Twister with a portable [0, 1) mapping, so a given seed
/// yields the same draws with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class SegmentLabel { start, change_point, event };

inline std::string to_string(SegmentLabel l) {
  switch (l) {
    case SegmentLabel::start: return "start";
    case SegmentLabel::change_point: return "change_point";
    case SegmentLabel::event: return "event";
  }
  return "?";
}

inline SegmentLabel label_from_string(const std::string& s) {
  if (s == "start") return SegmentLabel::start;
  if (s == "change_point") return SegmentLabel::change_point;
  if (s == "event") return SegmentLabel::event;
  throw ValidationError("unknown segment label '" + s + "'");
}

struct SbmModel {
  std::vector<std::size_t> block_sizes;
  double p_in = 0.0;
  double p_ex = 0.0;

  std::size_t node_count() const {
    return std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
  }

  void validate() const {
    if (block_sizes.empty()) throw ValidationError("SBM needs at least one block");
    for (auto b : block_sizes)
      if (b == 0) throw ValidationError("SBM block sizes must be positive");
    if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_ex >= 0.0 && p_ex <= 1.0)) {
      throw ValidationError("SBM probabilities must lie in [0, 1]");
    }
  }
};

/// `communities` blocks of equal size over `nodes` ids; the remainder goes to the last block.
inline std::vector<std::size_t> equal_blocks(std::size_t nodes, std::size_t communities) {
  if (communities == 0 || communities > nodes) {
    throw ValidationError("cannot split " + std::to_string(nodes) + " nodes into " +
                          std::to_string(communities) + " blocks");
  }
  std::vector<std::size_t> sizes(communities, nodes / communities);
  sizes.back() += nodes % communities;
  return sizes;
}

struct SegmentSpec {
  std::size_t start = 0;
  SbmModel model;
  SegmentLabel label = SegmentLabel::start;
};

struct ScenarioSpec {
  std::size_t node_count = 500;
  std::size_t total_steps = 151;
  double continuity_rate_normal = 1.0;
  double continuity_rate_at_change = 0.0;
  std::uint64_t seed = 0;
  std::vector<SegmentSpec> segments;

  void validate() const {
    if (node_count == 0) throw ValidationError("scenario needs at least one node");
    if (total_steps == 0) throw ValidationError("scenario needs at least one step");
    for (double c : {continuity_rate_normal, continuity_rate_at_change}) {
      if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("continuity rates must lie in [0, 1]");
    }
    if (segments.empty() || segments.front().start != 0) {
      throw ValidationError("the first segment must start at t = 0");
    }
    if (segments.front().label != SegmentLabel::start) {
      throw ValidationError("the first segment must be labelled 'start'");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      seg.model.validate();
      if (seg.model.node_count() != node_count) {
        throw ValidationError("segment at t = " + std::to_string(seg.start) + " covers " +
                              std::to_string(seg.model.node_count()) + " nodes, expected " +
                              std::to_string(node_count));
      }
      if (seg.start >= total_steps) {
        throw ValidationError("segment at t = " + std::to_string(seg.start) +
                              " lies beyond the last step");
      }
      if (i > 0) {
        if (seg.label == SegmentLabel::start) {
          throw ValidationError("only the first segment may be labelled 'start'");
        }
        if (seg.start <= segments[i - 1].start) {
          throw ValidationError("segments overlap or are out of order at t = " +
                                std::to_string(seg.start));
        }
      }
    }
  }
};

struct GroundTruthPoint {
  std::size_t t = 0;
  SegmentLabel label = SegmentLabel::change_point;

  friend bool operator==(const GroundTruthPoint&, const GroundTruthPoint&) = default;
};

struct Scenario {
  TemporalGraph graph;
  std::vector<GroundTruthPoint> truth;
};

namespace detail {

/// Upper-triangular edge indicator for an undirected simple graph.
class PairState {
 public:
  explicit PairState(std::size_t n) : n_(n), bits_(n < 2 ? 0 : n * (n - 1) / 2, 0) {}

  static PairState from_snapshot(const Snapshot& s) {
    if (s.directed()) throw ValidationError("SBM evolution needs an undirected snapshot");
    PairState st(s.node_count());
    for (const auto& e : s.edges()) {
      if (e.source != e.target) st.bits_[st.index(e.source, e.target)] = 1;
    }
    return st;
  }

  std::size_t node_count() const noexcept { return n_; }

  /// Pairs are visited in (u, v), u < v, lexicographic order; the draw order is part of
  /// the reproducibility contract.
  void evolve(const std::vector<std::uint32_t>& block_of, const SbmModel& m, double continuity,
              Rng& rng) {
    if (continuity >= 1.0) return;
    std::size_t k = 0;
    for (std::size_t u = 0; u < n_; ++u) {
      for (std::size_t v = u + 1; v < n_; ++v, ++k) {
        if (continuity > 0.0 && rng.uniform() < continuity) continue;
        const double p = block_of[u] == block_of[v] ? m.p_in : m.p_ex;
        bits_[k] = rng.bernoulli(p) ? 1 : 0;
      }
    }
  }

  Snapshot to_snapshot(std::size_t time_index) const {
    std::vector<Edge> edges;
    std::size_t k = 0;
    for (std::size_t u = 0; u < n_; ++u) {
      for (std::size_t v = u + 1; v < n_; ++v, ++k) {
        if (bits_[k]) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0});
      }
    }
    return Snapshot::from_edges(time_index, n_, std::move(edges), false);
  }

 private:
  std::size_t index(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    // rows 0..u-1 hold (n-1) + (n-2) + ... + (n-u) pairs
    return u * (2 * n_ - u - 1) / 2 + (v - u - 1);
  }

  std::size_t n_;
  std::vector<std::uint8_t> bits_;
};

inline std::vector<std::uint32_t> block_membership(const std::vector<std::size_t>& sizes) {
  std::vector<std::uint32_t> out;
  for (std::size_t b = 0; b < sizes.size(); ++b) out.insert(out.end(), sizes[b], static_cast<std::uint32_t>(b));
  return out;
}

}  // namespace detail

/// Undirected, loop-free, unit-weight SBM draw.
inline Snapshot sample_sbm(const SbmModel& model, Rng& rng) {
  model.validate();
  detail::PairState st(model.node_count());
  st.evolve(detail::block_membership(model.block_sizes), model, 0.0, rng);
  return st.to_snapshot(0);
}

inline Snapshot sample_sbm(std::vector<std::size_t> block_sizes, double p_in, double p_ex, Rng& rng) {
  return sample_sbm(SbmModel{std::move(block_sizes), p_in, p_ex}, rng);
}

/// Keeps each pair's state from `prev` with probability `continuity`, redraws it from `model` otherwise.
inline Snapshot evolve_with_continuity(const Snapshot& prev, const SbmModel& model, double continuity,
                                       Rng& rng) {
  model.validate();
  if (!(continuity >= 0.0 && continuity <= 1.0)) {
    throw ValidationError("continuity rate must lie in [0, 1]");
  }
  if (prev.node_count() != model.node_count()) {
    throw ValidationError("previous snapshot has " + std::to_string(prev.node_count()) +
                          " nodes, model has " + std::to_string(model.node_count()));
  }
  auto st = detail::PairState::from_snapshot(prev);
  st.evolve(detail::block_membership(model.block_sizes), model, continuity, rng);
  return st.to_snapshot(prev.time_index() + 1);
}

/// Walks the segments and produces the dynamic graph with its ground truth
/// (every segment start except t = 0).
///
/// Change points and event onsets are drawn from their model with the
/// at-change continuity rate; every other step uses the normal rate. An event
/// snapshot is a one-off branch: the following step evolves from the
/// pre-event snapshot under the pre-event model, so later steps do not see it.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::map<std::size_t, const SegmentSpec*> at;
  for (const auto& seg : spec.segments) at[seg.start] = &seg;

  const SbmModel* base = &spec.segments.front().model;
  detail::PairState st(spec.node_count);
  st.evolve(detail::block_membership(base->block_sizes), *base, 0.0, rng);

  std::vector<Snapshot> snaps;
  snaps.reserve(spec.total_steps);
  snaps.push_back(st.to_snapshot(0));

  Scenario out;
  for (std::size_t t = 1; t < spec.total_steps; ++t) {
    auto it = at.find(t);
    if (it == at.end()) {
      st.evolve(detail::block_membership(base->block_sizes), *base, spec.continuity_rate_normal, rng);
      snaps.push_back(st.to_snapshot(t));
      continue;
    }
    const auto& seg = *it->second;
    out.truth.push_back({t, seg.label});
    const auto blocks = detail::block_membership(seg.model.block_sizes);
    if (seg.label == SegmentLabel::event) {
      auto branch = st;
      branch.evolve(blocks, seg.model, spec.continuity_rate_at_change, rng);
      snaps.push_back(branch.to_snapshot(t));
    } else {
      base = &seg.model;
      st.evolve(blocks, seg.model, spec.continuity_rate_at_change, rng);
      snaps.push_back(st.to_snapshot(t));
    }
  }
  out.graph = TemporalGraph(std::move(snaps));
  return out;
}

// ---------------------------------------------------------------------------
// presets

namespace detail {

inline SegmentSpec segment(std::size_t start, SegmentLabel label, std::size_t nodes,
                           std::size_t communities, double p_in, double p_ex) {
  return {start, {equal_blocks(nodes, communities), p_in, p_ex}, label};
}

}  // namespace detail

/// Community-count changes only; the graph is frozen between change points.
inline ScenarioSpec pure_preset(std::uint64_t seed) {
  using detail::segment;
  constexpr std::size_t n = 500;
  constexpr auto cp = SegmentLabel::change_point;
  ScenarioSpec s;
  s.node_count = n;
  s.total_steps = 151;
  s.continuity_rate_normal = 1.0;
  s.continuity_rate_at_change = 0.0;
  s.seed = seed;
  s.segments = {
      segment(0, SegmentLabel::start, n, 4, 0.25, 0.05),
      segment(16, cp, n, 10, 0.25, 0.05),
      segment(31, cp, n, 2, 0.5, 0.05),
      segment(61, cp, n, 4, 0.25, 0.05),
      segment(76, cp, n, 10, 0.25, 0.05),
      segment(91, cp, n, 2, 0.5, 0.05),
      segment(106, cp, n, 4, 0.25, 0.05),
      segment(136, cp, n, 10, 0.25, 0.05),
  };
  return s;
}

/// One-step events (raised p_ex) interleaved with change points.
inline ScenarioSpec hybrid_preset(std::uint64_t seed) {
  using detail::segment;
  constexpr std::size_t n = 500;
  constexpr auto cp = SegmentLabel::change_point;
  constexpr auto ev = SegmentLabel::event;
  ScenarioSpec s;
  s.node_count = n;
  s.total_steps = 151;
  s.continuity_rate_normal = 0.9;
  s.continuity_rate_at_change = 0.0;
  s.seed = seed;
  s.segments = {
      segment(0, SegmentLabel::start, n, 4, 0.25, 0.05),
      segment(16, ev, n, 4, 0.25, 0.15),
      segment(31, cp, n, 10, 0.25, 0.05),
      segment(61, ev, n, 10, 0.25, 0.15),
      segment(76, cp, n, 2, 0.5, 0.05),
      segment(91, ev, n, 2, 0.5, 0.15),
      segment(106, cp, n, 4, 0.25, 0.05),
      segment(136, ev, n, 4, 0.25, 0.15),
  };
  return s;
}

/// Hybrid schedule, but every snapshot is redrawn from scratch.
inline ScenarioSpec resampled_preset(std::uint64_t seed) {
  auto s = hybrid_preset(seed);
  s.continuity_rate_normal = 0.0;
  s.continuity_rate_at_change = 0.0;
  return s;
}

inline ScenarioSpec preset(const std::string& name, std::uint64_t seed) {
  if (name == "pure") return pure_preset(seed);
  if (name == "hybrid") return hybrid_preset(seed);
  if (name == "resampled") return resampled_preset(seed);
  throw ConfigurationError("unknown preset '" + name + "' (expected pure, hybrid or resampled)");
}

// ---------------------------------------------------------------------------
// files

/// Scenario spec file. Each segment gives either "block_sizes" or
/// "communities" (equal blocks over "nodes"):
///
///   {"nodes": 500, "steps": 151, "continuity": 0.9, "continuity_at_change": 0.0,
///    "seed": 7, "segments": [{"start": 0, "label": "start", "communities": 4,
///                              "p_in": 0.25, "p_ex": 0.05}, ...]}
inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s;
    s.node_count = j.at("nodes").get<std::size_t>();
    s.total_steps = j.at("steps").get<std::size_t>();
    s.continuity_rate_normal = j.value("continuity", 1.0);
    s.continuity_rate_at_change = j.value("continuity_at_change", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& js : j.at("segments")) {
      SegmentSpec seg;
      seg.start = js.at("start").get<std::size_t>();
      seg.label = label_from_string(js.value("label", seg.start == 0 ? "start" : "change_point"));
      if (js.contains("block_sizes")) {
        seg.model.block_sizes = js.at("block_sizes").get<std::vector<std::size_t>>();
      } else {
        seg.model.block_sizes = equal_blocks(s.node_count, js.at("communities").get<std::size_t>());
      }
      seg.model.p_in = js.at("p_in").get<double>();
      seg.model.p_ex = js.at("p_ex").get<double>();
      s.segments.push_back(std::move(seg));
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario spec: ") + e.what(), 0);
  }
}

inline nlohmann::json truth_to_json(const std::vector<GroundTruthPoint>& truth) {
  auto arr = nlohmann::json::array();
  for (const auto& p : truth) arr.push_back({{"t", p.t}, {"label", to_string(p.label)}});
  return arr;
}

inline std::vector<GroundTruthPoint> truth_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("ground truth must be a JSON array", 0);
  std::vector<GroundTruthPoint> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("t") || !e["t"].is_number_unsigned()) {
      throw ParseError("ground-truth entries need a nonnegative integer 't'", 0);
    }
    GroundTruthPoint p;
    p.t = e["t"].get<std::size_t>();
    p.label = label_from_string(e.value("label", std::string("change_point")));
    out.push_back(p);
  }
  return out;
}

}  // namespace lad
