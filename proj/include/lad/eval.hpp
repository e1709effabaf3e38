#pragma once

// Evaluation: Hits@n against ground truth, moving-window outlier scores of
// graph properties, and Spearman rank correlation between those outlier
// scores and the anomaly score series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lad/detector.hpp"
#include "lad/error.hpp"
#include "lad/graph.hpp"

namespace lad {

struct HitsResult {
  std::size_t hits = 0;
  std::size_t truth_size = 0;
  std::size_t n = 0;

  double fraction() const { return static_cast<double>(hits) / static_cast<double>(truth_size); }
};

inline HitsResult count_hits(std::span<const std::size_t> ranked, std::span<const std::size_t> truth,
                             std::size_t n) {
  const std::set<std::size_t> truth_set(truth.begin(), truth.end());
  if (truth_set.empty()) throw UndefinedError("Hits@n is undefined for an empty ground truth");
  if (n < 1) throw ConfigurationError("n must be at least 1");
  if (n > ranked.size()) {
    throw ConfigurationError("n = " + std::to_string(n) + " exceeds the " +
                             std::to_string(ranked.size()) + " ranked points");
  }
  HitsResult r{0, truth_set.size(), n};
  for (std::size_t i = 0; i < n; ++i) r.hits += truth_set.count(ranked[i]);
  return r;
}

/// |top-n(ranked) ∩ truth| / |truth|
inline double hits_at_n(std::span<const std::size_t> ranked, std::span<const std::size_t> truth,
                        std::size_t n) {
  return count_hits(ranked, truth, n).fraction();
}

/// y_t = |a_t - mean(a[t-w, t))| / sd(a[t-w, t)), sample sd (divisor w - 1).
///
/// Positions t < w score 0. A window with zero spread scores 0 when a_t
/// equals its mean; otherwise the score is unbounded and is replaced by the
/// largest finite score of the series (1 if that is not positive).
inline std::vector<double> property_outlier_scores(std::span<const double> series, std::size_t w) {
  if (w < 2) throw ConfigurationError("outlier window must be at least 2");
  if (series.size() <= w) {
    throw ConfigurationError("outlier window " + std::to_string(w) +
                             " needs a series longer than the window (got " +
                             std::to_string(series.size()) + ")");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> y(series.size(), 0.0);
  for (std::size_t t = w; t < series.size(); ++t) {
    const auto win = series.subspan(t - w, w);
    double mean = 0.0;
    double mag = 0.0;
    for (double v : win) {
      mean += v;
      mag = std::max(mag, std::abs(v));
    }
    mean /= static_cast<double>(w);
    double ss = 0.0;
    for (double v : win) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(w - 1));
    const double dev = std::abs(series[t] - mean);
    // rounding noise of a constant window is not spread
    const double eps = 1e-12 * std::max(mag, std::abs(series[t]));
    if (sd <= eps) {
      y[t] = dev <= eps ? 0.0 : inf;
    } else {
      y[t] = dev / sd;
    }
  }
  double finite_max = 0.0;
  for (double v : y)
    if (std::isfinite(v)) finite_max = std::max(finite_max, v);
  const double sentinel = finite_max > 0.0 ? finite_max : 1.0;
  for (double& v : y)
    if (!std::isfinite(v)) v = sentinel;
  return y;
}

/// Ranks starting at 1; tied values share the average of their ranks.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of the average-rank vectors.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman inputs differ in length");
  if (a.size() < 2) throw ConfigurationError("spearman needs at least two observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0;
  double da = 0.0;
  double db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) throw UndefinedError("rank correlation is undefined for a constant input");
  return std::clamp(num / std::sqrt(da * db), -1.0, 1.0);
}

struct CorrelationRow {
  std::string property;
  /// Empty when the correlation is undefined (one side constant).
  std::optional<double> rho;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  std::size_t window = 0;
};

struct TrackedProperty {
  const char* name;
  double (*extract)(const GraphStats&);
};

inline constexpr TrackedProperty kTrackedProperties[] = {
    {"connected_components", [](const GraphStats& s) { return static_cast<double>(s.connected_components); }},
    {"transitivity", [](const GraphStats& s) { return s.transitivity; }},
    {"edge_count", [](const GraphStats& s) { return static_cast<double>(s.edge_count); }},
    {"avg_degree", [](const GraphStats& s) { return s.avg_degree; }},
    {"avg_edge_weight", [](const GraphStats& s) { return s.avg_edge_weight; }},
};

/// Spearman correlation between each property's outlier scores (window w)
/// and the aggregated z series. Rows are sorted by |rho| descending,
/// undefined rows last.
inline CorrelationReport correlation_report(const AnomalyScoreSeries& scores, const TemporalGraph& g,
                                            std::size_t w) {
  if (scores.size() != g.size()) {
    throw ValidationError("score series covers " + std::to_string(scores.size()) +
                          " steps but the graph has " + std::to_string(g.size()));
  }
  std::vector<GraphStats> stats;
  stats.reserve(g.size());
  for (const auto& s : g.snapshots()) stats.push_back(graph_stats(s));

  CorrelationReport rep;
  rep.window = w;
  for (const auto& prop : kTrackedProperties) {
    std::vector<double> series;
    series.reserve(stats.size());
    for (const auto& st : stats) series.push_back(prop.extract(st));
    const auto outliers = property_outlier_scores(series, w);
    CorrelationRow row{prop.name, std::nullopt};
    try {
      row.rho = spearman(outliers, scores.z);
    } catch (const UndefinedError&) {
    }
    rep.rows.push_back(std::move(row));
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const CorrelationRow& a, const CorrelationRow& b) {
    if (a.rho.has_value() != b.rho.has_value()) return a.rho.has_value();
    return a.rho && std::abs(*a.rho) > std::abs(*b.rho);
  });
  return rep;
}

inline void write_correlation_csv(std::ostream& out, const CorrelationReport& rep) {
  out << "property,rho\n";
  for (const auto& r : rep.rows) {
    out << r.property << ',' << (r.rho ? detail::format_double(*r.rho) : std::string("nan")) << '\n';
  }
}

inline void print_correlation_table(std::ostream& out, const CorrelationReport& rep) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%-22s %10s\n", "property", "spearman");
  out << buf;
  for (const auto& r : rep.rows) {
    if (r.rho) {
      std::snprintf(buf, sizeof(buf), "%-22s %9.1f%%\n", r.property.c_str(), *r.rho * 100.0);
    } else {
      std::snprintf(buf, sizeof(buf), "%-22s %10s\n", r.property.c_str(), "undefined");
    }
    out << buf;
  }
  out << "(outlier window " << rep.window << ")\n";
}

}  // namespace lad
