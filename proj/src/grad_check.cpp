#include "dgu/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dgu {

namespace {

double eval_loss(const TapedLoss& f, const ParamStore& params) {
  Tape tape;
  BoundParams bp = tape.bind(params);
  return f(tape, bp).scalar();
}

}  // namespace

double grad_check(const TapedLoss& f, ParamStore& params, double eps, Rng& rng,
                  std::size_t min_coords) {
  if (eps < 1e-8 || eps > 1e-3) {
    throw std::invalid_argument("grad_check: eps outside [1e-8, 1e-3]");
  }
  std::vector<Matrix> analytic;
  {
    Tape tape;
    BoundParams bp = tape.bind(params);
    Var loss = f(tape, bp);
    analytic = tape.backward(loss, bp);
  }

  const std::size_t total = params.total_size();
  std::vector<std::size_t> coords;
  if (total <= min_coords) {
    coords.resize(total);
    for (std::size_t i = 0; i < total; ++i) coords[i] = i;
  } else {
    for (std::size_t i = 0; i < min_coords; ++i) coords.push_back(rng.index(total));
  }

  // Map a flat coordinate to (entry, offset-within-entry).
  auto locate = [&](std::size_t flat) {
    std::size_t e = 0;
    while (e + 1 < params.count() && params.offset(e + 1) <= flat) ++e;
    return std::pair<std::size_t, std::size_t>(e, flat - params.offset(e));
  };

  double worst = 0.0;
  for (std::size_t flat : coords) {
    auto [e, off] = locate(flat);
    double& coord = params.value(e)[off];
    const double saved = coord;
    coord = saved + eps;
    const double up = eval_loss(f, params);
    coord = saved - eps;
    const double down = eval_loss(f, params);
    coord = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[e][off];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-3});
    worst = std::max(worst, std::fabs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace dgu
