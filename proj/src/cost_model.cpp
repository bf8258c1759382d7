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

#include "opsched/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "opsched/errors.hpp"

namespace opsched {

void CostCurve::validate() const {
  for (double v : {serial, work, spawn_overhead}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("cost curve terms must be finite and >= 0");
    }
  }
  if (serial == 0.0 && work == 0.0 && spawn_overhead == 0.0) {
    throw std::invalid_argument("cost curve has all terms zero");
  }
}

double exec_time(const CostCurve& curve, int width, const InterferenceContext& ctx) {
  if (width < 1) {
    throw std::invalid_argument("width must be >= 1, got " + std::to_string(width));
  }
  if (!(ctx.eta > 0.0 && ctx.eta <= 1.0)) {
    throw std::invalid_argument("eta must lie in (0, 1]");
  }
  const double p = static_cast<double>(width);
  const double solo = curve.serial + curve.work / p + curve.spawn_overhead * (p - 1.0);
  return ctx.shared ? solo / ctx.eta : solo;
}

int optimal_width(const CostCurve& curve, int max_width) {
  if (max_width < 1) {
    throw std::invalid_argument("max_width must be >= 1");
  }
  int best = 1;
  double best_ms = exec_time(curve, 1);
  for (int p = 2; p <= max_width; ++p) {
    const double t = exec_time(curve, p);
    if (t < best_ms) {
      best_ms = t;
      best = p;
    }
  }
  return best;
}

Calibration calibrate_from_samples(std::span<const WidthSample> samples) {
  std::set<int> widths;
  for (const auto& s : samples) {
    if (s.width < 1) throw std::invalid_argument("sample width must be >= 1");
    widths.insert(s.width);
  }
  if (widths.size() < 3) {
    throw UnderdeterminedError("calibration needs samples at >= 3 distinct widths, got " +
                               std::to_string(widths.size()));
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = samples[static_cast<size_t>(i)].width;
    design(i, 0) = 1.0;
    design(i, 1) = 1.0 / p;
    design(i, 2) = p - 1.0;
    y(i) = samples[static_cast<size_t>(i)].ms;
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);

  Calibration out;
  out.curve.serial = std::max(0.0, beta(0));
  out.curve.work = std::max(0.0, beta(1));
  out.curve.spawn_overhead = std::max(0.0, beta(2));
  const Eigen::Vector3d clamped(out.curve.serial, out.curve.work, out.curve.spawn_overhead);
  out.residual_norm = (design * clamped - y).norm();
  return out;
}

}  // namespace opsched
