// Copyright 2026 The prulab developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRULAB_RNG_HPP
#define PRULAB_RNG_HPP

#include <cstdint>
#include <random>

namespace prulab {

/// 64-bit splitmix finalizer. Used both as the seed-mixing function for
/// derived per-draw seeds and to expand a master seed into engine state.
uint64_t splitmix64(uint64_t x);

/// Seed for draw `index` of the stream rooted at `master`. Parallel draws
/// must derive their seeds through this function so results do not depend
/// on scheduling.
uint64_t derive_seed(uint64_t master, uint64_t index);

/// Deterministic random source. Gaussian variates use an explicit
/// Box-Muller transform instead of std::normal_distribution, whose output
/// sequence is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(splitmix64(seed)) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform integer in [0, bound).
  uint64_t uniform_int(uint64_t bound);

  /// Standard normal variate.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace prulab

#endif
