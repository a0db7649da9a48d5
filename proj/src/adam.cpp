#include "dgu/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dgu {

AdamState AdamState::init(const ParamStore& params) {
  AdamState s;
  s.m.reserve(params.count());
  s.v.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Matrix& p = params.value(i);
    s.m.push_back(Matrix::zeros(p.rows(), p.cols()));
    s.v.push_back(Matrix::zeros(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(ParamStore& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.count() || state.m.size() != params.count()) {
    throw std::invalid_argument("adam_step: misaligned gradient or state");
  }
  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.count(); ++i) {
    Matrix& p = params.value(i);
    const Matrix& g = grads[i];
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adam_step: gradient shape " +
                                  g.shape_str() + " vs parameter " +
                                  p.shape_str());
    }
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      if (!std::isfinite(gj)) {
        throw std::runtime_error("adam_step: non-finite gradient in " +
                                 params.entry(i).name);
      }
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace dgu
