#pragma once

#include <functional>

#include "dgu/param_store.hpp"
#include "dgu/rng.hpp"
#include "dgu/tape.hpp"

namespace dgu {

// Builds a taped scalar loss from bound parameters.
using TapedLoss = std::function<Var(Tape&, const BoundParams&)>;

// Compares reverse-mode gradients against central finite differences on a
// random coordinate subset (at least min_coords, or every coordinate when
// the store is small). Returns the worst guarded relative error.
double grad_check(const TapedLoss& f, ParamStore& params, double eps, Rng& rng,
                  std::size_t min_coords = 32);

}  // namespace dgu
