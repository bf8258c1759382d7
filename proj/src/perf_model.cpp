/*
 * Copyright 2026 The opsched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "opsched/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "opsched/errors.hpp"

namespace opsched {

TunerConfig TunerConfig::defaults(int max_width) {
  TunerConfig c;
  c.max_width = max_width;
  for (int w = 1; w < max_width; w *= 2) c.coarse_lattice.push_back(w);
  c.coarse_lattice.push_back(max_width);
  return c;
}

void TunerConfig::validate() const {
  if (max_width < 1) throw std::invalid_argument("tuner max_width must be >= 1");
  if (coarse_lattice.empty()) throw std::invalid_argument("coarse lattice must be non-empty");
  for (std::size_t i = 0; i < coarse_lattice.size(); ++i) {
    const int w = coarse_lattice[i];
    if (w < 1 || w > max_width) {
      throw std::invalid_argument("coarse lattice width " + std::to_string(w) +
                                  " outside [1, max_width]");
    }
    if (i > 0 && coarse_lattice[i - 1] >= w) {
      throw std::invalid_argument("coarse lattice must be sorted and distinct");
    }
  }
  if (max_evals < 0) throw std::invalid_argument("max_evals must be >= 0");
  if (min_step < 1) throw std::invalid_argument("min_step must be >= 1");
}

TunedWidth hill_climb(const std::function<double(int)>& evaluate, const TunerConfig& config) {
  config.validate();
  std::map<int, double> measured;
  int lattice_evals = 0;
  for (int w : config.coarse_lattice) {
    measured[w] = evaluate(w);
    ++lattice_evals;
  }

  auto better = [](const std::pair<const int, double>& a, const std::pair<const int, double>& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  };

  int seed = config.coarse_lattice.front();
  for (int w : config.coarse_lattice) {
    if (measured[w] < measured[seed]) seed = w;
  }

  const auto pos = std::find(config.coarse_lattice.begin(), config.coarse_lattice.end(), seed);
  int gap = 0;
  if (pos != config.coarse_lattice.begin()) gap = std::max(gap, seed - *std::prev(pos));
  if (std::next(pos) != config.coarse_lattice.end()) gap = std::max(gap, *std::next(pos) - seed);
  int step = gap / 2;

  int refine_evals = 0;
  bool budget_left = true;
  while (budget_left && step >= config.min_step) {
    int best = seed;
    double best_ms = measured[seed];
    for (int cand : {seed - step, seed + step}) {
      cand = std::clamp(cand, 1, config.max_width);
      if (cand == seed) continue;
      auto it = measured.find(cand);
      if (it == measured.end()) {
        if (refine_evals >= config.max_evals) {
          budget_left = false;
          break;
        }
        it = measured.emplace(cand, evaluate(cand)).first;
        ++refine_evals;
      }
      // Candidates are visited low to high, so strict < keeps ties on the smaller width.
      if (it->second < best_ms) {
        best = cand;
        best_ms = it->second;
      }
    }
    if (best != seed) {
      seed = best;
    } else if (budget_left) {
      step /= 2;
    }
  }

  auto best_it = std::min_element(measured.begin(), measured.end(), better);
  TunedWidth out;
  out.width = best_it->first;
  out.predicted_ms = best_it->second;
  out.history.samples = std::move(measured);
  out.evaluations = lattice_evals + refine_evals;
  return out;
}

TunedWidth tune_op(const OpKey& key, const CostCurve& curve, const TunerConfig& config,
                   const NoiseModel& noise) {
  TunedWidth t = hill_climb([&](int w) { return measure(key, curve, w, noise); }, config);
  t.key = key;
  t.history.key = key;
  t.history.repeats = noise.repeats;
  t.history.noise_sigma = noise.sigma;
  t.history.seed = noise.seed;
  return t;
}

double predict(const std::map<int, double>& samples, int width) {
  if (samples.size() < 2) {
    throw InsufficientHistoryError("prediction needs >= 2 measured widths, have " +
                                   std::to_string(samples.size()));
  }
  auto hi = samples.lower_bound(width);
  if (hi != samples.end() && hi->first == width) return hi->second;
  if (hi == samples.begin()) return hi->second;
  if (hi == samples.end()) return std::prev(hi)->second;
  auto lo = std::prev(hi);
  const double frac =
      static_cast<double>(width - lo->first) / static_cast<double>(hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

double RegressionModel::predict(int width, double work) const {
  const double p = width;
  return coefficients[0] + coefficients[1] / p + coefficients[2] * p + coefficients[3] * work;
}

std::vector<RegressionRow> regression_rows(std::span<const ProfileHistory> histories) {
  std::vector<RegressionRow> rows;
  for (const auto& h : histories) {
    const double w = h.key.work_proxy();
    for (const auto& [width, ms] : h.samples) rows.push_back({width, ms, w});
  }
  return rows;
}

RegressionModel fit_regression(std::span<const RegressionRow> rows) {
  if (rows.size() < 4) {
    throw UnderdeterminedError("regression needs >= 4 rows, have " + std::to_string(rows.size()));
  }
  const bool use_work = std::any_of(rows.begin(), rows.end(),
                                    [&](const RegressionRow& r) { return r.work != rows[0].work; });
  const Eigen::Index cols = use_work ? 4 : 3;
  const auto n = static_cast<Eigen::Index>(rows.size());

  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.width < 1) throw std::invalid_argument("regression row width must be >= 1");
    const double p = r.width;
    design(i, 0) = 1.0;
    design(i, 1) = 1.0 / p;
    design(i, 2) = p;
    if (use_work) design(i, 3) = r.work;
    y(i) = r.ms;
  }

  // Unit-scale the columns so the rank test is not skewed by large work proxies.
  Eigen::VectorXd scale = design.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    throw UnderdeterminedError("regression design is rank-deficient (rank " +
                               std::to_string(qr.rank()) + " of " + std::to_string(cols) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);

  RegressionModel m;
  for (Eigen::Index j = 0; j < cols; ++j) m.coefficients[static_cast<std::size_t>(j)] = beta(j);
  m.residual_norm = (design * beta - y).norm();
  return m;
}

double accuracy(const std::function<double(int)>& predictor, const CostCurve& oracle,
                std::span<const int> held_out) {
  if (held_out.empty()) return 0.0;
  double sum = 0.0;
  for (int w : held_out) {
    const double truth = exec_time(oracle, w);
    sum += std::abs(predictor(w) - truth) / truth;
  }
  return sum / static_cast<double>(held_out.size());
}

}  // namespace opsched
