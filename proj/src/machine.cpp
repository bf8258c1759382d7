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

#include "opsched/machine.hpp"

#include <stdexcept>

#include "opsched/errors.hpp"

namespace opsched {

void MachineModel::validate() const {
  if (physical_cores < 1) throw std::invalid_argument("physical_cores must be >= 1");
  if (hw_threads_per_core < 1) throw std::invalid_argument("hw_threads_per_core must be >= 1");
  if (max_corun_per_core < 1) throw std::invalid_argument("max_corun_per_core must be >= 1");
  if (max_corun_per_core > hw_threads_per_core) {
    throw std::invalid_argument("max_corun_per_core must not exceed hw_threads_per_core");
  }
}

AllocationState::AllocationState(MachineModel machine)
    : machine_(machine), occupancy_(static_cast<std::size_t>(machine.physical_cores), 0) {
  machine_.validate();
}

std::optional<Allocation> AllocationState::allocate(const std::string& op_id, int width,
                                                    bool allow_ht) {
  if (width < 1) throw std::invalid_argument("allocation width must be >= 1");
  if (live_.contains(op_id)) throw ConsistencyError("op '" + op_id + "' is already live");

  Allocation a{op_id, width, {}, false};
  a.cores.reserve(static_cast<std::size_t>(width));
  for (int c = 0; c < machine_.physical_cores && static_cast<int>(a.cores.size()) < width; ++c) {
    if (occupancy_[static_cast<std::size_t>(c)] == 0) a.cores.push_back(c);
  }
  if (static_cast<int>(a.cores.size()) < width) {
    if (!allow_ht) return std::nullopt;
    for (int c = 0; c < machine_.physical_cores && static_cast<int>(a.cores.size()) < width; ++c) {
      const int occ = occupancy_[static_cast<std::size_t>(c)];
      if (occ > 0 && occ < machine_.max_corun_per_core) a.cores.push_back(c);
    }
    if (static_cast<int>(a.cores.size()) < width) return std::nullopt;
    a.shared = true;
  }

  for (int c : a.cores) ++occupancy_[static_cast<std::size_t>(c)];
  return live_.emplace(op_id, std::move(a)).first->second;
}

std::optional<Allocation> AllocationState::allocate_shared(const std::string& op_id, int width) {
  if (width < 1) throw std::invalid_argument("allocation width must be >= 1");
  if (live_.contains(op_id)) throw ConsistencyError("op '" + op_id + "' is already live");
  Allocation a{op_id, width, {}, true};
  for (int c = 0; c < machine_.physical_cores && static_cast<int>(a.cores.size()) < width; ++c) {
    const int occ = occupancy_[static_cast<std::size_t>(c)];
    if (occ > 0 && occ < machine_.max_corun_per_core) a.cores.push_back(c);
  }
  if (static_cast<int>(a.cores.size()) < width) return std::nullopt;
  for (int c : a.cores) ++occupancy_[static_cast<std::size_t>(c)];
  return live_.emplace(op_id, std::move(a)).first->second;
}

void AllocationState::release(const std::string& op_id) {
  auto it = live_.find(op_id);
  if (it == live_.end()) throw ConsistencyError("release of op '" + op_id + "' which is not live");
  for (int c : it->second.cores) --occupancy_[static_cast<std::size_t>(c)];
  live_.erase(it);
}

FreeCapacity AllocationState::free_capacity(bool allow_ht) const {
  FreeCapacity f;
  for (int occ : occupancy_) {
    if (occ == 0) {
      ++f.empty_cores;
    } else if (allow_ht && occ < machine_.max_corun_per_core) {
      f.shareable_slots += machine_.max_corun_per_core - occ;
    }
  }
  return f;
}

void AllocationState::check_invariants() const {
  std::vector<int> expect(occupancy_.size(), 0);
  for (const auto& [id, a] : live_) {
    if (static_cast<int>(a.cores.size()) != a.width) {
      throw ConsistencyError("allocation of '" + id + "' holds a core count != width");
    }
    for (int c : a.cores) ++expect[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < occupancy_.size(); ++c) {
    if (expect[c] != occupancy_[c]) {
      throw ConsistencyError("core " + std::to_string(c) + " occupancy disagrees with live set");
    }
    if (occupancy_[c] > machine_.max_corun_per_core) {
      throw ConsistencyError("core " + std::to_string(c) + " exceeds max_corun_per_core");
    }
  }
}

}  // namespace opsched
