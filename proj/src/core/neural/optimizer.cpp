// SPDX-License-Identifier: Apache-2.0
#include "neural/optimizer.hpp"

#include <cmath>

#include "common/error.hpp"

namespace molswap::nn {

void adam_step(ModelWeights& w, AdamState& state, const AdamConfig& cfg) {
  for (const auto& p : w.params()) {
    if (!p.grad.allFinite()) fail(ErrorCode::kNonFiniteGradient, "non-finite gradient in " + p.name);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& p : w.params()) {
    const double lr = cfg.lr.at(static_cast<std::size_t>(p.group));
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
    if (lr == 0.0) continue;
    p.value.array() -= lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
    round_to_storage(p.value);
  }
}

}  // namespace molswap::nn
