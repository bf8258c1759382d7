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

#include <cstdint>
#include <map>
#include <span>

#include "opsched/cost_model.hpp"
#include "opsched/graph.hpp"

namespace opsched {

/// Measured execution times of one op key, keyed by width. Each value is the
/// median of `repeats` noisy observations.
struct ProfileHistory {
  OpKey key;
  std::map<int, double> samples;
  int repeats = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ProfileHistory&) const = default;

  double total_sampled_ms() const;  // sum over widths of repeats * median
};

struct NoiseModel {
  int repeats = 1;
  double sigma = 0.0;  // relative std-dev of a multiplicative lognormal factor
  std::uint64_t seed = 0;
};

/// One simulated measurement: median over `noise.repeats` draws of
/// exec_time * exp(N(0, sigma)). Each (seed, key, width, repeat) has its own
/// random stream, so the value does not depend on measurement order.
double measure(const OpKey& key, const CostCurve& curve, int width, const NoiseModel& noise);

// Throws std::invalid_argument for empty, duplicate or non-positive widths.
ProfileHistory profile_op(const OpKey& key, const CostCurve& curve, std::span<const int> widths,
                          const NoiseModel& noise);

/// Share of total time spent profiling:
///   sampled / (sampled + total_steps * step_makespan)
double profiling_cost(std::span<const ProfileHistory> histories, std::int64_t total_steps,
                      double step_makespan);

}  // namespace opsched
