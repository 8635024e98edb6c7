#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace attiqa::metrics {

struct CorrelationResult {
  double value = 0.0;  // in [-1, 1]
  std::size_t n = 0;
};

/// Fractional (average) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of raw values.
/// Throws ValidationError on length mismatch, n < 2 or non-finite values, and
/// DegenerateInputError if either sequence is constant.
CorrelationResult plcc(std::span<const double> x, std::span<const double> y);

/// Spearman correlation: Pearson correlation of average ranks.
CorrelationResult srocc(std::span<const double> x, std::span<const double> y);

/// Even counts average the central pair. Throws ValidationError when empty.
double median(std::span<const double> values);

/// Fraction of positions where the two binary choices agree.
double win_rate(std::span<const int> model_choice, std::span<const int> human_choice);

}  // namespace attiqa::metrics
