//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: rank-based ROC-AUC, RMSE, and cluster quality scores
// (Davies-Bouldin index, mean silhouette) over Euclidean distance.

#pragma once

#include <vector>

#include "chg/tensor.hpp"

namespace chg {

// Mann-Whitney ROC-AUC with midranks for ties; labels are 0/1. Throws
// MetricError on empty or mismatched inputs and SingleClassError when only
// one class is present. Equals brute-force pair counting exactly.
double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

struct AucReport {
  double mean = 0.0;           // over tasks with both classes present
  int used_tasks = 0;
  int skipped_tasks = 0;
  std::vector<double> per_task;  // NaN for skipped tasks
};

// Column-per-task AUC. labels[i][t] is 0/1 or NaN for missing; rows with a
// missing label are excluded from that task only. Tasks with fewer than two
// classes after masking are skipped. Throws SingleClassError when every task
// is skipped.
AucReport multi_task_auc(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<double>>& labels);

// Root-mean-square error. Throws MetricError on empty or mismatched inputs.
double rmse(const std::vector<double>& preds,
            const std::vector<double>& labels);

struct ClusterMetrics {
  double dbi = 0.0;
  double silhouette = 0.0;
};

// Davies-Bouldin index and mean silhouette for row vectors grouped by id.
// Requires at least two groups and at least two members per group; throws
// MetricError otherwise. Group ids need not be contiguous. A point whose
// silhouette denominator is zero contributes zero.
ClusterMetrics cluster_metrics(const Tensor& points,
                               const std::vector<int>& groups);

}  // namespace chg
