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

#include <span>

namespace opsched {

/// Execution-time curve of one operation as a function of its thread count p:
///
///   T(p) = serial + work / p + spawn_overhead * (p - 1)
///
/// `serial` is the non-parallelizable part, `work` the perfectly divisible part,
/// and `spawn_overhead` the per-extra-thread management cost. All values are in
/// abstract milliseconds.
struct CostCurve {
  double serial = 0.0;
  double work = 0.0;
  double spawn_overhead = 0.0;

  bool operator==(const CostCurve&) const = default;

  // Throws std::invalid_argument when a term is negative/non-finite or all are zero.
  void validate() const;
};

inline constexpr double kDefaultSharedEta = 0.515;

/// Placement context of a grant. A shared grant sits on the spare hardware
/// thread of cores that already host another op and runs at `eta` of solo
/// throughput.
struct InterferenceContext {
  bool shared = false;
  double eta = kDefaultSharedEta;
};

/// Time to run `curve` on `width` threads. Solo time for unshared grants,
/// solo time divided by eta for shared grants. Throws std::invalid_argument
/// for width < 1 or eta outside (0, 1].
double exec_time(const CostCurve& curve, int width, const InterferenceContext& ctx = {});

/// Exhaustive argmin of unshared exec_time over 1..max_width, ties toward the
/// smaller width. Other width searches are checked against this.
int optimal_width(const CostCurve& curve, int max_width);

struct WidthSample {
  int width = 0;
  double ms = 0.0;
};

struct Calibration {
  CostCurve curve;
  double residual_norm = 0.0;  // L2 norm of (fitted - measured) after clamping
};

/// Least-squares fit of a CostCurve on the basis [1, 1/p, p-1]. Negative
/// coefficients are clamped to zero. Needs at least three distinct widths.
Calibration calibrate_from_samples(std::span<const WidthSample> samples);

}  // namespace opsched
