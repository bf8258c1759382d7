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

#include "opsched/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "opsched/rng.hpp"

namespace opsched {

double ProfileHistory::total_sampled_ms() const {
  double sum = 0.0;
  for (const auto& [w, ms] : samples) sum += ms * repeats;
  return sum;
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, const OpKey& key, int width, int repeat) {
  std::uint64_t s = mix_seed(seed, key.op_type);
  for (auto d : key.signature) s = mix_seed(s, static_cast<std::uint64_t>(d));
  s = mix_seed(s, static_cast<std::uint64_t>(width));
  return mix_seed(s, static_cast<std::uint64_t>(repeat));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double measure(const OpKey& key, const CostCurve& curve, int width, const NoiseModel& noise) {
  if (noise.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(noise.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  const double truth = exec_time(curve, width);
  if (noise.sigma == 0.0) return truth;
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(noise.repeats));
  for (int r = 0; r < noise.repeats; ++r) {
    Rng rng(stream_seed(noise.seed, key, width, r));
    draws.push_back(truth * std::exp(noise.sigma * rng.normal()));
  }
  return median(std::move(draws));
}

ProfileHistory profile_op(const OpKey& key, const CostCurve& curve, std::span<const int> widths,
                          const NoiseModel& noise) {
  if (widths.empty()) throw std::invalid_argument("profile_op needs at least one width");
  std::set<int> seen;
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("profile widths must be >= 1");
    if (!seen.insert(w).second) throw std::invalid_argument("profile widths must be distinct");
  }
  ProfileHistory h{key, {}, noise.repeats, noise.sigma, noise.seed};
  for (int w : widths) h.samples[w] = measure(key, curve, w, noise);
  return h;
}

double profiling_cost(std::span<const ProfileHistory> histories, std::int64_t total_steps,
                      double step_makespan) {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  double sampled = 0.0;
  for (const auto& h : histories) sampled += h.total_sampled_ms();
  if (sampled == 0.0) return 0.0;
  return sampled / (sampled + static_cast<double>(total_steps) * step_makespan);
}

}  // namespace opsched
