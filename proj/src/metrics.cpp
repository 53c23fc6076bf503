//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "chg/error.hpp"

namespace chg {

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  if (scores.empty()) throw MetricError("roc_auc: empty input");
  if (scores.size() != labels.size())
    throw MetricError("roc_auc: " + std::to_string(scores.size()) +
                      " scores vs " + std::to_string(labels.size()) +
                      " labels");
  long long n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const long long n_neg = static_cast<long long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw SingleClassError("roc_auc: labels contain a single class");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Midranks: each tie run shares the average of its 1-based rank range.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scores[order[j + 1]] == scores[order[i]])
      ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double u =
      pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                         static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AucReport multi_task_auc(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<double>>& labels) {
  if (scores.size() != labels.size())
    throw MetricError("multi_task_auc: row count mismatch");
  if (scores.empty()) throw MetricError("multi_task_auc: empty input");
  const std::size_t n_tasks = labels[0].size();
  for (std::size_t r = 0; r < scores.size(); ++r)
    if (scores[r].size() != n_tasks || labels[r].size() != n_tasks)
      throw MetricError("multi_task_auc: ragged rows");

  AucReport rep;
  rep.per_task.assign(n_tasks, std::numeric_limits<double>::quiet_NaN());
  double total = 0.0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t r = 0; r < scores.size(); ++r) {
      if (std::isnan(labels[r][t])) continue;
      s.push_back(scores[r][t]);
      y.push_back(labels[r][t] > 0.5 ? 1 : 0);
    }
    try {
      if (s.empty()) throw SingleClassError("task has no labels");
      const double auc = roc_auc(s, y);
      rep.per_task[t] = auc;
      total += auc;
      ++rep.used_tasks;
    } catch (const SingleClassError&) {
      ++rep.skipped_tasks;
    }
  }
  if (rep.used_tasks == 0)
    throw SingleClassError("multi_task_auc: no task has both classes");
  rep.mean = total / rep.used_tasks;
  return rep;
}

double rmse(const std::vector<double>& preds,
            const std::vector<double>& labels) {
  if (preds.empty()) throw MetricError("rmse: empty input");
  if (preds.size() != labels.size())
    throw MetricError("rmse: " + std::to_string(preds.size()) + " preds vs " +
                      std::to_string(labels.size()) + " labels");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - labels[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

namespace {

double euclidean(const Tensor& pts, int a, int b) {
  double acc = 0.0;
  for (int c = 0; c < pts.cols; ++c) {
    const double d = pts.at(a, c) - pts.at(b, c);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

ClusterMetrics cluster_metrics(const Tensor& points,
                               const std::vector<int>& groups) {
  if (points.rows != static_cast<int>(groups.size()))
    throw MetricError("cluster_metrics: one group id per row required");
  std::unordered_map<int, int> compact;
  std::vector<std::vector<int>> members;
  for (int r = 0; r < points.rows; ++r) {
    auto [it, fresh] =
        compact.emplace(groups[static_cast<std::size_t>(r)],
                        static_cast<int>(members.size()));
    if (fresh) members.emplace_back();
    members[static_cast<std::size_t>(it->second)].push_back(r);
  }
  const int k = static_cast<int>(members.size());
  if (k < 2)
    throw MetricError("degenerate clustering: fewer than two groups");
  for (const auto& m : members)
    if (m.size() < 2)
      throw MetricError("degenerate clustering: group with a single member");

  // Centroids and mean within-cluster distance to centroid.
  Tensor centroids(k, points.cols);
  std::vector<double> scatter(static_cast<std::size_t>(k), 0.0);
  for (int g = 0; g < k; ++g) {
    const auto& m = members[static_cast<std::size_t>(g)];
    for (int r : m)
      for (int c = 0; c < points.cols; ++c)
        centroids.at(g, c) += points.at(r, c);
    for (int c = 0; c < points.cols; ++c)
      centroids.at(g, c) /= static_cast<double>(m.size());
    for (int r : m) {
      double acc = 0.0;
      for (int c = 0; c < points.cols; ++c) {
        const double d = points.at(r, c) - centroids.at(g, c);
        acc += d * d;
      }
      scatter[static_cast<std::size_t>(g)] += std::sqrt(acc);
    }
    scatter[static_cast<std::size_t>(g)] /= static_cast<double>(m.size());
  }

  ClusterMetrics out;
  for (int a = 0; a < k; ++a) {
    double worst = 0.0;
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      const double sep = euclidean(centroids, a, b);
      const double ratio =
          (scatter[static_cast<std::size_t>(a)] +
           scatter[static_cast<std::size_t>(b)]) /
          sep;  // coincident centroids yield +inf, reported as-is
      worst = std::max(worst, ratio);
    }
    out.dbi += worst;
  }
  out.dbi /= static_cast<double>(k);

  // Mean silhouette: a = mean intra-cluster distance (excluding self),
  // b = smallest mean distance to another cluster.
  std::vector<int> group_of(static_cast<std::size_t>(points.rows));
  for (int g = 0; g < k; ++g)
    for (int r : members[static_cast<std::size_t>(g)])
      group_of[static_cast<std::size_t>(r)] = g;
  double sil_sum = 0.0;
  for (int r = 0; r < points.rows; ++r) {
    const int own = group_of[static_cast<std::size_t>(r)];
    double a = 0.0;
    for (int o : members[static_cast<std::size_t>(own)])
      if (o != r) a += euclidean(points, r, o);
    a /= static_cast<double>(members[static_cast<std::size_t>(own)].size() -
                             1);
    double b = std::numeric_limits<double>::infinity();
    for (int g = 0; g < k; ++g) {
      if (g == own) continue;
      double mean_d = 0.0;
      for (int o : members[static_cast<std::size_t>(g)])
        mean_d += euclidean(points, r, o);
      mean_d /= static_cast<double>(members[static_cast<std::size_t>(g)].size());
      b = std::min(b, mean_d);
    }
    const double denom = std::max(a, b);
    sil_sum += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  out.silhouette = sil_sum / static_cast<double>(points.rows);
  return out;
}

}  // namespace chg
