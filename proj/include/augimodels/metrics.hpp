#pragma once

#include <span>
#include <vector>

namespace aug::metrics {

/// Fraction of exact matches. Requires equal, non-zero lengths.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Mann-Whitney estimate of ROC AUC (ties count one half). Labels are 0/1;
/// throws DegenerateInput unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Throws DegenerateInput on zero variance or fewer than two points.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace aug::metrics
