#pragma once

// Dual sliding-window anomaly scoring over a sequence of snapshot embeddings.
//
// For every timestep t past the startup period, the embeddings of the s (short)
// and l (long) preceding steps are L2-normalized and stacked as columns of a
// context matrix; its top left singular vector is the "normal behaviour" of
// that window. The score of t against a window is 1 - cos(angle) between the
// normalized embedding at t and that vector. The two window scores are
// aggregated by max, and the ranking statistic is the positive part of the
// step-to-step increase of the aggregate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lad/error.hpp"
#include "lad/graph.hpp"
#include "lad/spectral.hpp"

namespace lad {

struct DetectorConfig {
  std::size_t short_window = 5;
  std::size_t long_window = 10;
  EmbeddingKind embedding = EmbeddingKind::full_spectrum();

  void validate(std::size_t steps) const {
    if (short_window < 1) throw ConfigurationError("short window must be at least 1");
    if (short_window > long_window) {
      throw ConfigurationError("short window (" + std::to_string(short_window) +
                               ") exceeds long window (" + std::to_string(long_window) + ")");
    }
    if (long_window >= steps) {
      throw ConfigurationError("long window (" + std::to_string(long_window) +
                               ") must be smaller than the number of snapshots (" +
                               std::to_string(steps) + ")");
    }
  }
};

struct AnomalyScoreSeries {
  std::vector<double> z_short;
  std::vector<double> z_long;
  std::vector<double> z;
  std::vector<double> z_star;
  /// All time indices, by z_star descending; ties keep the earlier step first.
  std::vector<std::size_t> ranked;

  std::size_t size() const noexcept { return z.size(); }
};

struct NormalBehavior {
  Eigen::VectorXd vector;
  /// Every context column was zero; `vector` is then the zero vector.
  bool degenerate = false;
};

namespace detail {

inline Eigen::VectorXd unit_or_zero(const Eigen::VectorXd& v) {
  const double nrm = v.norm();
  return nrm > 0.0 ? Eigen::VectorXd(v / nrm) : Eigen::VectorXd::Zero(v.size());
}

}  // namespace detail

/// Top left singular vector of the column-stacked, L2-normalized context,
/// unit length and oriented entrywise nonnegative.
///
/// Computed from the w x w Gram matrix C^T C: with v its top eigenvector the
/// left singular vector is C v / ||C v||.
inline NormalBehavior normal_behavior(std::span<const SignatureVector> context) {
  if (context.empty()) throw ConfigurationError("normal behaviour needs at least one context vector");
  const Eigen::Index dim = context.front().values.size();
  const auto w = static_cast<Eigen::Index>(context.size());
  Eigen::MatrixXd c(dim, w);
  for (Eigen::Index j = 0; j < w; ++j) {
    const auto& v = context[static_cast<std::size_t>(j)].values;
    if (v.size() != dim) throw DimensionError("context vectors differ in length");
    c.col(j) = detail::unit_or_zero(v);
  }
  if (dim == 0 || c.isZero(0.0)) return {Eigen::VectorXd::Zero(dim), true};

  const Eigen::MatrixXd gram = c.transpose() * c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd top = es.eigenvectors().col(w - 1);
  Eigen::VectorXd u = c * top;
  u /= u.norm();
  detail::perron_orient(u);
  return {u, false};
}

/// 1 - cos(angle) between `current` (normalized here) and the unit vector
/// `typical`. Both vectors zero gives 0; exactly one zero gives 1.
inline double z_score(const Eigen::VectorXd& current, const Eigen::VectorXd& typical) {
  if (current.size() != typical.size()) {
    throw DimensionError("embedding length " + std::to_string(current.size()) +
                         " does not match normal behaviour length " +
                         std::to_string(typical.size()));
  }
  const Eigen::VectorXd cur = detail::unit_or_zero(current);
  if (cur.isZero(0.0) && typical.isZero(0.0)) return 0.0;
  return std::max(0.0, 1.0 - cur.dot(typical));
}

inline std::vector<std::size_t> rank_by_score(const std::vector<double>& score) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&score](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return idx;
}

/// Scores every timestep of an embedding sequence. Steps 0..l are startup
/// and score 0; step t > l is compared against steps [t-s, t) and [t-l, t).
inline AnomalyScoreSeries score_series(std::span<const SignatureVector> embeddings,
                                       const DetectorConfig& cfg) {
  const std::size_t steps = embeddings.size();
  cfg.validate(steps);
  const Eigen::Index dim = embeddings.front().values.size();
  for (const auto& e : embeddings) {
    if (e.values.size() != dim) throw DimensionError("embeddings differ in length");
  }

  AnomalyScoreSeries out;
  out.z_short.assign(steps, 0.0);
  out.z_long.assign(steps, 0.0);
  out.z.assign(steps, 0.0);
  out.z_star.assign(steps, 0.0);

  const std::size_t s = cfg.short_window;
  const std::size_t l = cfg.long_window;
  for (std::size_t t = l + 1; t < steps; ++t) {
    const auto& current = embeddings[t].values;
    const auto short_ctx = normal_behavior(embeddings.subspan(t - s, s));
    out.z_short[t] = z_score(current, short_ctx.vector);
    if (s == l) {
      out.z_long[t] = out.z_short[t];
    } else {
      const auto long_ctx = normal_behavior(embeddings.subspan(t - l, l));
      out.z_long[t] = z_score(current, long_ctx.vector);
    }
    out.z[t] = std::max(out.z_short[t], out.z_long[t]);
    out.z_star[t] = std::max(out.z[t] - out.z[t - 1], 0.0);
  }
  out.ranked = rank_by_score(out.z_star);
  return out;
}

inline AnomalyScoreSeries run_lad(const TemporalGraph& g, const DetectorConfig& cfg,
                                  const EmbedOptions& opt = {}) {
  cfg.validate(g.size());
  const auto embeddings = embed_sequence(g, cfg.embedding, opt);
  return score_series(embeddings, cfg);
}

// ---------------------------------------------------------------------------
// score files

inline void write_scores_csv(std::ostream& out, const AnomalyScoreSeries& sc) {
  out << "t,z_short,z_long,z,z_star\n";
  for (std::size_t t = 0; t < sc.size(); ++t) {
    out << t << ',' << detail::format_double(sc.z_short[t]) << ','
        << detail::format_double(sc.z_long[t]) << ',' << detail::format_double(sc.z[t]) << ','
        << detail::format_double(sc.z_star[t]) << '\n';
  }
}

inline AnomalyScoreSeries read_scores_csv(std::istream& in) {
  AnomalyScoreSeries sc;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!header) {
      if (line != "t,z_short,z_long,z,z_star") throw ParseError("unexpected scores header", line_no);
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::size_t t = 0;
    double v[4];
    if (f.size() != 5 || !detail::parse_number(f[0], t) || !detail::parse_number(f[1], v[0]) ||
        !detail::parse_number(f[2], v[1]) || !detail::parse_number(f[3], v[2]) ||
        !detail::parse_number(f[4], v[3])) {
      throw ParseError("expected 't,z_short,z_long,z,z_star'", line_no);
    }
    if (t != sc.z.size()) throw ParseError("time indices must be consecutive from 0", line_no);
    sc.z_short.push_back(v[0]);
    sc.z_long.push_back(v[1]);
    sc.z.push_back(v[2]);
    sc.z_star.push_back(v[3]);
  }
  if (!header) throw ParseError("empty scores file", 0);
  sc.ranked = rank_by_score(sc.z_star);
  return sc;
}

/// JSON array of {"t", "z_star"} in ranked order.
inline nlohmann::json ranked_to_json(const AnomalyScoreSeries& sc) {
  auto arr = nlohmann::json::array();
  for (auto t : sc.ranked) arr.push_back({{"t", t}, {"z_star", sc.z_star[t]}});
  return arr;
}

struct RankedEntry {
  std::size_t t = 0;
  double z_star = 0.0;
};

inline std::vector<RankedEntry> ranked_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("ranked file must hold a JSON array", 0);
  std::vector<RankedEntry> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("t") || !e["t"].is_number_unsigned()) {
      throw ParseError("ranked entries need a nonnegative integer 't'", 0);
    }
    out.push_back({e["t"].get<std::size_t>(), e.value("z_star", 0.0)});
  }
  return out;
}

}  // namespace lad
