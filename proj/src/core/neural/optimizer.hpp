// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "neural/model.hpp"

namespace molswap::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::array<double, 2> lr{1e-4, 1e-4};  // indexed by parameter group
};

struct AdamState {
  std::int64_t step = 0;
};

// One Adam update from the accumulated gradients, then float32 rounding of
// every value. Throws kNonFiniteGradient before touching any parameter.
void adam_step(ModelWeights& w, AdamState& state, const AdamConfig& cfg);

}  // namespace molswap::nn
