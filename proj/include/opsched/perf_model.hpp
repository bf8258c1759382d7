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

#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "opsched/cost_model.hpp"
#include "opsched/graph.hpp"
#include "opsched/profiler.hpp"

namespace opsched {

struct TunerConfig {
  int max_width = 68;
  std::vector<int> coarse_lattice;  // sorted, distinct, within [1, max_width]
  int max_evals = 16;               // budget for the refinement phase
  int min_step = 1;

  // Powers of two below max_width plus max_width itself.
  static TunerConfig defaults(int max_width);
  void validate() const;
};

struct TunedWidth {
  OpKey key;
  int width = 1;
  double predicted_ms = 0.0;
  ProfileHistory history;  // every evaluation made while climbing
  int evaluations = 0;

  bool operator==(const TunedWidth&) const = default;
};

using TunedTable = std::map<OpKey, TunedWidth>;

/// Two-phase width search.
///
/// Phase 1 measures every coarse-lattice width and seeds at the best one.
/// Phase 2 starts with a step of half the wider gap between the seed and its
/// lattice neighbours and repeatedly looks at seed +/- step (clamped to
/// [1, max_width]; widths already measured are reused, not re-measured). It
/// moves to the strictly better neighbour (larger gain first, then smaller
/// width), halves the step when neither improves, and stops once the step
/// drops below min_step or max_evals new measurements have been spent.
///
/// The result is the best measured width; `key` is left empty and the
/// history carries only samples.
TunedWidth hill_climb(const std::function<double(int)>& evaluate, const TunerConfig& config);

/// hill_climb over simulated measurements of `curve`, with key and history
/// metadata filled in.
TunedWidth tune_op(const OpKey& key, const CostCurve& curve, const TunerConfig& config,
                   const NoiseModel& noise = {});

/// History-based prediction: the measurement itself at a measured width,
/// linear interpolation in p between the two nearest measured widths inside
/// the span, and the nearest measurement outside it.
/// Throws InsufficientHistoryError with fewer than two samples.
double predict(const std::map<int, double>& samples, int width);
inline double predict(const ProfileHistory& history, int width) {
  return predict(history.samples, width);
}

struct RegressionRow {
  int width = 1;
  double ms = 0.0;
  double work = 1.0;  // OpKey::work_proxy()
};

/// Ordinary least squares on the basis [1, 1/p, p, w]. When every row has
/// the same w the w column is dropped (its coefficient is reported as 0).
struct RegressionModel {
  std::array<double, 4> coefficients{};  // intercept, 1/p, p, w
  double residual_norm = 0.0;

  double predict(int width, double work) const;
};

std::vector<RegressionRow> regression_rows(std::span<const ProfileHistory> histories);

// Throws UnderdeterminedError for fewer than four rows or a rank-deficient design.
RegressionModel fit_regression(std::span<const RegressionRow> rows);

/// Mean of |predicted - true| / true over `held_out` widths.
double accuracy(const std::function<double(int)>& predictor, const CostCurve& oracle,
                std::span<const int> held_out);

}  // namespace opsched
