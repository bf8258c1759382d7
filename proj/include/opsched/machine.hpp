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

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace opsched {

/// Manycore machine: physical cores with several hardware threads each.
/// `max_corun_per_core` bounds how many ops may share one core; two-way
/// sharing is the default. Tile/L2 grouping is not modeled and placement
/// ignores it.
struct MachineModel {
  int physical_cores = 68;
  int hw_threads_per_core = 4;
  int max_corun_per_core = 2;

  bool operator==(const MachineModel&) const = default;

  // Throws std::invalid_argument.
  void validate() const;
  int hw_thread_capacity() const { return physical_cores * hw_threads_per_core; }
};

struct Allocation {
  std::string op_id;
  int width = 0;
  std::vector<int> cores;  // in grant order
  bool shared = false;     // true iff some core already had an occupant

  bool operator==(const Allocation&) const = default;
};

struct FreeCapacity {
  int empty_cores = 0;
  int shareable_slots = 0;

  bool operator==(const FreeCapacity&) const = default;
};

/// Per-core occupancy plus the live allocations that produce it. Mutated by
/// the single-threaded simulator loop; copyable for what-if queries.
class AllocationState {
 public:
  explicit AllocationState(MachineModel machine);

  const MachineModel& machine() const { return machine_; }
  const std::vector<int>& occupancy() const { return occupancy_; }
  const std::map<std::string, Allocation>& live() const { return live_; }

  /// Grants `width` cores: empty cores first (lowest index), then, when
  /// allow_ht, cores below max_corun_per_core (lowest index). All-or-nothing;
  /// std::nullopt means would-block and leaves the state untouched.
  /// Throws std::invalid_argument for width < 1 and ConsistencyError if
  /// op_id is already live.
  std::optional<Allocation> allocate(const std::string& op_id, int width, bool allow_ht);

  /// Places `width` threads on occupied cores that still have a free slot,
  /// lowest index first, leaving empty cores alone. nullopt if too few.
  std::optional<Allocation> allocate_shared(const std::string& op_id, int width);

  // Throws ConsistencyError for an op that is not live.
  void release(const std::string& op_id);

  FreeCapacity free_capacity(bool allow_ht) const;

  // Throws ConsistencyError if occupancy disagrees with live allocations.
  void check_invariants() const;

  bool operator==(const AllocationState&) const = default;

 private:
  MachineModel machine_;
  std::vector<int> occupancy_;
  std::map<std::string, Allocation> live_;
};

}  // namespace opsched
