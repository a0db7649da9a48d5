#pragma once

#include <cstdint>
#include <vector>

#include "dgu/param_store.hpp"

namespace dgu {

struct AdamConfig {
  double lr{1e-4};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step{0};

  static AdamState init(const ParamStore& params);
};

// Bias-corrected Adam update applied in place. Fails fast on non-finite
// gradients.
void adam_step(ParamStore& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamConfig& cfg);

}  // namespace dgu
