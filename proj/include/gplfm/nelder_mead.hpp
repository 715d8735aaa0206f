#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace gplfm {

// Outcome of a bounded derivative-free minimization. best_trace holds the
// best objective value seen after every evaluation, so it is non-increasing
// and its length equals the number of evaluations actually spent.
struct OptimizerResult {
  Eigen::VectorXd best_point;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> best_trace;
  long evaluations = 0;

  bool found_finite() const { return std::isfinite(best_value); }
};

namespace detail {

// One Nelder-Mead run inside a box, sharing the global budget and trace.
// Candidate points are clamped to the box before evaluation.
class SimplexRun {
 public:
  SimplexRun(const std::function<double(const Eigen::VectorXd&)>& objective,
             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, long budget,
             OptimizerResult& result)
      : objective_(objective), lower_(lower), upper_(upper), budget_(budget), result_(result) {}

  double evaluate(const Eigen::VectorXd& point) {
    const Eigen::VectorXd clamped = point.cwiseMax(lower_).cwiseMin(upper_);
    double value = objective_(clamped);
    if (std::isnan(value)) value = std::numeric_limits<double>::infinity();
    ++result_.evaluations;
    if (value < result_.best_value) {
      result_.best_value = value;
      result_.best_point = clamped;
    }
    result_.best_trace.push_back(result_.best_value);
    return value;
  }

  bool exhausted() const { return result_.evaluations >= budget_; }

  // Standard reflect/expand/contract/shrink iteration from a start point.
  void run(const Eigen::VectorXd& start) {
    const int n = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> values;
    simplex.reserve(n + 1);
    simplex.push_back(start.cwiseMax(lower_).cwiseMin(upper_));
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd vertex = simplex[0];
      const double span = upper_(i) - lower_(i);
      double step = 0.10 * span;
      // Step inward when the start sits against the upper bound.
      if (vertex(i) + step > upper_(i)) step = -step;
      vertex(i) += step;
      simplex.push_back(vertex);
    }
    for (const auto& vertex : simplex) {
      if (exhausted()) return;
      values.push_back(evaluate(vertex));
    }

    const double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;
    while (!exhausted()) {
      // Order vertices best to worst.
      std::vector<int> order(simplex.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return values[a] < values[b]; });
      std::vector<Eigen::VectorXd> sorted_points;
      std::vector<double> sorted_values;
      for (int idx : order) {
        sorted_points.push_back(simplex[idx]);
        sorted_values.push_back(values[idx]);
      }
      simplex.swap(sorted_points);
      values.swap(sorted_values);

      if (converged(simplex, values)) return;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) centroid += simplex[i];
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd reflected = centroid + alpha * (centroid - simplex[n]);
      const double f_reflected = evaluate(reflected);
      if (f_reflected < values[0]) {
        if (exhausted()) return;
        const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
        const double f_expanded = evaluate(expanded);
        if (f_expanded < f_reflected) {
          simplex[n] = expanded;
          values[n] = f_expanded;
        } else {
          simplex[n] = reflected;
          values[n] = f_reflected;
        }
        continue;
      }
      if (f_reflected < values[n - 1]) {
        simplex[n] = reflected;
        values[n] = f_reflected;
        continue;
      }
      if (exhausted()) return;
      const bool outside = f_reflected < values[n];
      const Eigen::VectorXd pivot = outside ? reflected : simplex[n];
      const Eigen::VectorXd contracted = centroid + beta * (pivot - centroid);
      const double f_contracted = evaluate(contracted);
      if (f_contracted < std::min(f_reflected, values[n])) {
        simplex[n] = contracted;
        values[n] = f_contracted;
        continue;
      }
      // Shrink toward the best vertex.
      for (int i = 1; i <= n; ++i) {
        if (exhausted()) return;
        simplex[i] = simplex[0] + delta * (simplex[i] - simplex[0]);
        values[i] = evaluate(simplex[i]);
      }
    }
  }

 private:
  static bool converged(const std::vector<Eigen::VectorXd>& simplex,
                        const std::vector<double>& values) {
    double spread = 0.0;
    for (double v : values) {
      if (!std::isfinite(v)) return false;
      spread = std::max(spread, std::abs(v - values[0]));
    }
    double size = 0.0;
    for (const auto& vertex : simplex) {
      size = std::max(size, (vertex - simplex[0]).lpNorm<Eigen::Infinity>());
    }
    return spread <= 1e-12 * (1.0 + std::abs(values[0])) &&
           size <= 1e-10 * (1.0 + simplex[0].lpNorm<Eigen::Infinity>());
  }

  const std::function<double(const Eigen::VectorXd&)>& objective_;
  const Eigen::VectorXd& lower_;
  const Eigen::VectorXd& upper_;
  long budget_;
  OptimizerResult& result_;
};

}  // namespace detail

// Multi-start Nelder-Mead over a box. The first start is taken from `starts`
// when provided (extra entries seed further runs); remaining starts are drawn
// uniformly inside the box from `seed`. Any left-over budget after the last
// start polishes the incumbent. Deterministic given (inputs, seed); at most
// `budget` objective evaluations are spent.
inline OptimizerResult nelder_mead_minimize(
    const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, long budget, unsigned seed,
    const std::vector<Eigen::VectorXd>& starts = {}) {
  const int n = static_cast<int>(lower.size());
  if (upper.size() != n) throw std::invalid_argument("nelder_mead_minimize: bound sizes differ");
  for (int i = 0; i < n; ++i) {
    if (!(lower(i) < upper(i)))
      throw std::invalid_argument("nelder_mead_minimize: lower bound must be below upper");
  }
  if (budget < 2 * (n + 1)) throw std::invalid_argument("nelder_mead_minimize: budget too small");

  const int restart_count =
      static_cast<int>(std::clamp<long>(budget / (25L * (n + 1)), 2L, 8L));
  std::vector<Eigen::VectorXd> start_points = starts;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (static_cast<int>(start_points.size()) < restart_count) {
    Eigen::VectorXd point(n);
    for (int i = 0; i < n; ++i) point(i) = lower(i) + unif(rng) * (upper(i) - lower(i));
    start_points.push_back(point);
  }

  OptimizerResult result;
  result.best_point = start_points.front().cwiseMax(lower).cwiseMin(upper);
  const long per_start = budget / static_cast<long>(start_points.size() + 1);
  detail::SimplexRun runner(objective, lower, upper, budget, result);
  for (size_t r = 0; r < start_points.size(); ++r) {
    const long stage_end = std::min<long>(budget, static_cast<long>(r + 1) * per_start);
    detail::SimplexRun stage(objective, lower, upper, stage_end, result);
    if (result.evaluations >= stage_end) continue;
    stage.run(start_points[r]);
  }
  if (result.evaluations < budget && result.found_finite()) {
    runner.run(result.best_point);
  }
  return result;
}

}  // namespace gplfm
