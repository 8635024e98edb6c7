#include "attiqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "attiqa/error.hpp"

namespace attiqa::metrics {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw ValidationError("correlation needs at least two samples");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("non-finite value in correlation input");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("degenerate input: constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the mean of 1-based ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

CorrelationResult plcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw DegenerateInputError("degenerate input: constant sequence");
  return {pearson(x, y), x.size()};
}

CorrelationResult srocc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw DegenerateInputError("degenerate input: constant sequence");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return {pearson(rx, ry), x.size()};
}

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double win_rate(std::span<const int> model_choice, std::span<const int> human_choice) {
  if (model_choice.size() != human_choice.size()) throw ValidationError("win_rate: length mismatch");
  if (model_choice.empty()) throw ValidationError("win_rate: empty input");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < model_choice.size(); ++i) agree += model_choice[i] == human_choice[i];
  return static_cast<double>(agree) / static_cast<double>(model_choice.size());
}

}  // namespace attiqa::metrics
