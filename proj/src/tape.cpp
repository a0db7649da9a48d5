#include "dgu/tape.hpp"

#include <cmath>
#include <numbers>

namespace dgu {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a,
                              const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

void check_same_tape(const char* op, Var a, Var b) {
  if (a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op) +
                                ": operands come from different tapes");
  }
}

bool needs_grad(Var a) { return a.tape()->requires_grad(a.id()); }
bool needs_grad(Var a, Var b) { return needs_grad(a) || needs_grad(b); }
bool needs_grad(Var a, Var b, Var c) {
  return needs_grad(a) || needs_grad(b) || needs_grad(c);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu_grad_scalar(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double sech2 = 1.0 - t * t;
  return 0.5 * (1.0 + t) + 0.5 * x * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

double sigmoid_scalar(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double gelu_scalar(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

const Matrix& Var::value() const {
  return tape_->nodes_[static_cast<std::size_t>(id_)].value;
}

double Var::scalar() const {
  const Matrix& m = value();
  if (m.size() != 1) {
    throw std::logic_error("Var::scalar on non-scalar node " + m.shape_str());
  }
  return m[0];
}

Var Tape::emit(Matrix value, bool requires_grad,
               std::function<void(Tape&, const Matrix&)> backward) {
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), std::move(backward), requires_grad});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  return emit(std::move(value), false, nullptr);
}

Var Tape::leaf(Matrix value) { return emit(std::move(value), true, nullptr); }

BoundParams Tape::bind(const ParamStore& params) {
  BoundParams bp;
  bp.store = &params;
  bp.vars.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    bp.vars.push_back(leaf(params.value(i)));
  }
  return bp;
}

void Tape::accumulate(int id, const Matrix& g) {
  auto i = static_cast<std::size_t>(id);
  if (!nodes_[i].requires_grad) return;  // constants never collect gradients
  if (grad_set_[i]) {
    add_in_place(grads_[i], g);
  } else {
    grads_[i] = g;
    grad_set_[i] = true;
  }
}

const Matrix& Tape::grad(int id) const {
  return grads_[static_cast<std::size_t>(id)];
}

bool Tape::has_grad(int id) const {
  return grad_set_[static_cast<std::size_t>(id)];
}

std::vector<Matrix> Tape::backward(Var loss, const BoundParams& params) {
  if (nodes_.empty()) {
    throw std::logic_error("Tape::backward on an empty tape");
  }
  if (backward_done_) {
    throw std::logic_error("Tape::backward called twice on one tape");
  }
  if (loss.tape() != this) {
    throw std::invalid_argument("Tape::backward: loss from another tape");
  }
  if (loss.value().size() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be scalar, got " +
                                loss.value().shape_str());
  }
  backward_done_ = true;
  grads_.assign(nodes_.size(), Matrix());
  grad_set_.assign(nodes_.size(), false);
  accumulate(loss.id(), Matrix::full(1, 1, 1.0));
  for (int i = loss.id(); i >= 0; --i) {
    auto idx = static_cast<std::size_t>(i);
    if (!grad_set_[idx] || !nodes_[idx].requires_grad) continue;
    if (nodes_[idx].backward) nodes_[idx].backward(*this, grads_[idx]);
  }
  std::vector<Matrix> out;
  out.reserve(params.vars.size());
  for (std::size_t i = 0; i < params.vars.size(); ++i) {
    const Var v = params.vars[i];
    if (v.id() >= 0 && has_grad(v.id())) {
      out.push_back(grad(v.id()));
    } else {
      const Matrix& p = params.store->value(i);
      out.push_back(Matrix::zeros(p.rows(), p.cols()));
    }
  }
  return out;
}

Matrix Tape::grad_of(Var v) const {
  if (!backward_done_) {
    throw std::logic_error("Tape::grad_of before backward");
  }
  if (v.id() >= 0 && has_grad(v.id())) return grad(v.id());
  return Matrix::zeros(v.rows(), v.cols());
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
  grad_set_.clear();
  backward_done_ = false;
}

std::vector<std::pair<std::size_t, std::size_t>> Tape::node_shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  shapes.reserve(nodes_.size());
  for (const auto& n : nodes_) shapes.emplace_back(n.value.rows(), n.value.cols());
  return shapes;
}

// ---- primitives ----------------------------------------------------------

Var add(Var a, Var b) {
  check_same_tape("add", a, b);
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Matrix out = dgu::add(av, bv);
  const int ia = a.id(), ib = b.id();
  return t.emit(std::move(out), needs_grad(a, b),
                [ia, ib](Tape& tp, const Matrix& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, g);
                });
}

Var sub(Var a, Var b) {
  check_same_tape("sub", a, b);
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) shape_error("sub", av, bv);
  Matrix out = dgu::sub(av, bv);
  const int ia = a.id(), ib = b.id();
  return t.emit(std::move(out), needs_grad(a, b),
                [ia, ib](Tape& tp, const Matrix& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, dgu::scale(g, -1.0));
                });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape();
  Matrix out = dgu::scale(a.value(), c);
  const int ia = a.id();
  return t.emit(std::move(out), needs_grad(a),
                [ia, c](Tape& tp, const Matrix& g) {
                  tp.accumulate(ia, dgu::scale(g, c));
                });
}

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  Tape& t = *a.tape();
  Matrix out = dgu::matmul(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.emit(std::move(out), needs_grad(a, b),
                [ia, ib](Tape& tp, const Matrix& g) {
                  const Matrix& av = tp.value_of(ia);
                  const Matrix& bv = tp.value_of(ib);
                  tp.accumulate(ia, matmul_nt(g, bv));
                  tp.accumulate(ib, matmul_tn(av, g));
                });
}

Var linear(Var x, Var w, Var bias) {
  check_same_tape("linear", x, w);
  check_same_tape("linear", x, bias);
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = bias.value();
  if (xv.cols() != wv.rows()) shape_error("linear", xv, wv);
  if (bv.rows() != 1 || bv.cols() != wv.cols()) shape_error("linear", wv, bv);
  Matrix out = dgu::matmul(xv, wv);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += bv.at(0, c);
  }
  const int ix = x.id(), iw = w.id(), ib = bias.id();
  return t.emit(std::move(out), needs_grad(x, w, bias),
                [ix, iw, ib](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value_of(ix);
    const Matrix& wv = tp.value_of(iw);
    tp.accumulate(ix, matmul_nt(g, wv));
    tp.accumulate(iw, matmul_tn(xv, g));
    Matrix db(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) db.at(0, c) += g.at(r, c);
    }
    tp.accumulate(ib, db);
  });
}

Var gelu(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = gelu_scalar(av[i]);
  const int ia = a.id();
  return t.emit(std::move(out), needs_grad(a),
                [ia](Tape& tp, const Matrix& g) {
    const Matrix& av = tp.value_of(ia);
    Matrix dx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx[i] = g[i] * gelu_grad_scalar(av[i]);
    }
    tp.accumulate(ia, dx);
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = sigmoid_scalar(av[i]);
  const int ia = a.id();
  const int self = static_cast<int>(t.node_count());
  return t.emit(std::move(out), needs_grad(a),
                [ia, self](Tape& tp, const Matrix& g) {
    const Matrix& sv = tp.value_of(self);
    Matrix dx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx[i] = g[i] * sv[i] * (1.0 - sv[i]);
    }
    tp.accumulate(ia, dx);
  });
}

Var layer_norm(Var x, Var gain, Var shift, double eps) {
  check_same_tape("layer_norm", x, gain);
  check_same_tape("layer_norm", x, shift);
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Matrix& gv = gain.value();
  const Matrix& sv = shift.value();
  if (gv.rows() != 1 || gv.cols() != xv.cols()) shape_error("layer_norm", xv, gv);
  if (sv.rows() != 1 || sv.cols() != xv.cols()) shape_error("layer_norm", xv, sv);

  const std::size_t R = xv.rows(), C = xv.cols();
  // Normalized rows are cached for the backward pass.
  Matrix xhat(R, C);
  std::vector<double> inv_std(R);
  for (std::size_t r = 0; r < R; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < C; ++c) mu += xv.at(r, c);
    mu /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = xv.at(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(C);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < C; ++c) xhat.at(r, c) = (xv.at(r, c) - mu) * is;
  }
  Matrix out(R, C);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      out.at(r, c) = xhat.at(r, c) * gv.at(0, c) + sv.at(0, c);
    }
  }
  const int ix = x.id(), ig = gain.id(), is_ = shift.id();
  return t.emit(
      std::move(out), needs_grad(x, gain, shift),
      [ix, ig, is_, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& tp, const Matrix& g) {
        const Matrix& gv = tp.value_of(ig);
        const std::size_t R = g.rows(), C = g.cols();
        Matrix dgain(1, C), dshift(1, C), dx(R, C);
        for (std::size_t r = 0; r < R; ++r) {
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const double go = g.at(r, c);
            dgain.at(0, c) += go * xhat.at(r, c);
            dshift.at(0, c) += go;
            const double dxh = go * gv.at(0, c);
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * xhat.at(r, c);
          }
          mean_dxhat /= static_cast<double>(C);
          mean_dxhat_xhat /= static_cast<double>(C);
          for (std::size_t c = 0; c < C; ++c) {
            const double dxh = g.at(r, c) * gv.at(0, c);
            dx.at(r, c) = inv_std[r] * (dxh - mean_dxhat -
                                        xhat.at(r, c) * mean_dxhat_xhat);
          }
        }
        tp.accumulate(ix, dx);
        tp.accumulate(ig, dgain);
        tp.accumulate(is_, dshift);
      });
}

Var concat_cols(Var a, Var b) {
  check_same_tape("concat_cols", a, b);
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
  Matrix out(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out.at(r, c) = av.at(r, c);
    for (std::size_t c = 0; c < bv.cols(); ++c) {
      out.at(r, av.cols() + c) = bv.at(r, c);
    }
  }
  const int ia = a.id(), ib = b.id();
  const std::size_t ac = av.cols(), bc = bv.cols();
  return t.emit(std::move(out), needs_grad(a, b),
                [ia, ib, ac, bc](Tape& tp, const Matrix& g) {
                  Matrix da(g.rows(), ac), db(g.rows(), bc);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    for (std::size_t c = 0; c < ac; ++c) da.at(r, c) = g.at(r, c);
                    for (std::size_t c = 0; c < bc; ++c) {
                      db.at(r, c) = g.at(r, ac + c);
                    }
                  }
                  tp.accumulate(ia, da);
                  tp.accumulate(ib, db);
                });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  if (av.rows() == 0) {
    throw std::invalid_argument("mean_rows: empty matrix");
  }
  Matrix out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out.at(0, c) += av.at(r, c);
  }
  const double inv = 1.0 / static_cast<double>(av.rows());
  for (std::size_t c = 0; c < av.cols(); ++c) out.at(0, c) *= inv;
  const int ia = a.id();
  const std::size_t rows = av.rows();
  return t.emit(std::move(out), needs_grad(a),
                [ia, rows, inv](Tape& tp, const Matrix& g) {
                  Matrix dx(rows, g.cols());
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < g.cols(); ++c) {
                      dx.at(r, c) = g.at(0, c) * inv;
                    }
                  }
                  tp.accumulate(ia, dx);
                });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
  const int ia = a.id();
  const std::size_t rows = av.rows(), cols = av.cols();
  return t.emit(Matrix::full(1, 1, s), needs_grad(a),
                [ia, rows, cols](Tape& tp, const Matrix& g) {
                  tp.accumulate(ia, Matrix::full(rows, cols, g[0]));
                });
}

Var mean_all(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean_all: empty matrix");
  return scale(sum_all(a), 1.0 / n);
}

Var abs_val(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::fabs(av[i]);
  const int ia = a.id();
  return t.emit(std::move(out), needs_grad(a),
                [ia](Tape& tp, const Matrix& g) {
    const Matrix& av = tp.value_of(ia);
    Matrix dx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx[i] = g[i] * (av[i] > 0.0 ? 1.0 : (av[i] < 0.0 ? -1.0 : 0.0));
    }
    tp.accumulate(ia, dx);
  });
}

Var pow_int(Var a, int k) {
  if (k < 1) throw std::invalid_argument("pow_int: k must be >= 1");
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = std::pow(av[i], static_cast<double>(k));
  }
  const int ia = a.id();
  return t.emit(std::move(out), needs_grad(a),
                [ia, k](Tape& tp, const Matrix& g) {
    const Matrix& av = tp.value_of(ia);
    Matrix dx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx[i] = g[i] * static_cast<double>(k) *
              std::pow(av[i], static_cast<double>(k - 1));
    }
    tp.accumulate(ia, dx);
  });
}

Var sub_scalar(Var a, Var s) {
  check_same_tape("sub_scalar", a, s);
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  if (s.value().size() != 1) {
    throw std::invalid_argument("sub_scalar: subtrahend must be 1x1, got " +
                                s.value().shape_str());
  }
  const double sv = s.value()[0];
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - sv;
  const int ia = a.id(), is_ = s.id();
  return t.emit(std::move(out), needs_grad(a, s),
                [ia, is_](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
    tp.accumulate(is_, Matrix::full(1, 1, -s));
  });
}

Var stack_scalars(Tape& tape, const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("stack_scalars: empty input");
  Matrix out(xs.size(), 1);
  std::vector<int> ids(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].tape() != &tape) {
      throw std::invalid_argument("stack_scalars: node from another tape");
    }
    if (xs[i].value().size() != 1) {
      throw std::invalid_argument("stack_scalars: non-scalar element " +
                                  xs[i].value().shape_str());
    }
    out.at(i, 0) = xs[i].value()[0];
    ids[i] = xs[i].id();
  }
  bool rg = false;
  for (const Var& v : xs) rg = rg || needs_grad(v);
  return tape.emit(std::move(out), rg,
                   [ids = std::move(ids)](Tape& tp, const Matrix& g) {
                     for (std::size_t i = 0; i < ids.size(); ++i) {
                       tp.accumulate(ids[i], Matrix::full(1, 1, g.at(i, 0)));
                     }
                   });
}

Var flatten_head(Var m, std::size_t n) {
  Tape& t = *m.tape();
  const Matrix& mv = m.value();
  if (n == 0 || n > mv.size()) {
    throw std::invalid_argument("flatten_head: n=" + std::to_string(n) +
                                " out of range for " + mv.shape_str());
  }
  Matrix out(1, n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mv[i];
  const int im = m.id();
  const std::size_t rows = mv.rows(), cols = mv.cols();
  return t.emit(std::move(out), needs_grad(m),
                [im, rows, cols, n](Tape& tp, const Matrix& g) {
                  Matrix dx(rows, cols);
                  for (std::size_t i = 0; i < n; ++i) dx[i] = g[i];
                  tp.accumulate(im, dx);
                });
}

Var slice_reshape(Var flat, std::size_t offset, std::size_t rows,
                  std::size_t cols) {
  Tape& t = *flat.tape();
  const Matrix& fv = flat.value();
  if (fv.rows() != 1) {
    throw std::invalid_argument("slice_reshape: expected row vector, got " +
                                fv.shape_str());
  }
  if (offset + rows * cols > fv.size()) {
    throw std::invalid_argument("slice_reshape: window exceeds vector length");
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) out[i] = fv[offset + i];
  const int iflat = flat.id();
  const std::size_t len = fv.size();
  return t.emit(std::move(out), needs_grad(flat),
                [iflat, offset, len](Tape& tp, const Matrix& g) {
                  Matrix dx(1, len);
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    dx[offset + i] = g[i];
                  }
                  tp.accumulate(iflat, dx);
                });
}

double bce_logit_scalar(double logit, double label) {
  // max(z,0) - z*y + log(1 + exp(-|z|))
  return std::max(logit, 0.0) - logit * label +
         std::log1p(std::exp(-std::fabs(logit)));
}

double bce_with_logits(std::span<const double> logits,
                       std::span<const double> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("bce_with_logits: length mismatch or empty");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] < 0.0 || labels[i] > 1.0) {
      throw std::invalid_argument("bce_with_logits: label outside [0,1]");
    }
    s += bce_logit_scalar(logits[i], labels[i]);
  }
  return s / static_cast<double>(logits.size());
}

Var bce_with_logits(Var logits, const std::vector<double>& labels) {
  Tape& t = *logits.tape();
  const Matrix& lv = logits.value();
  if (lv.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument(
        "bce_with_logits: logits " + lv.shape_str() + " vs " +
        std::to_string(labels.size()) + " labels");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (labels[i] < 0.0 || labels[i] > 1.0) {
      throw std::invalid_argument("bce_with_logits: label outside [0,1]");
    }
    s += bce_logit_scalar(lv[i], labels[i]);
  }
  const double inv = 1.0 / static_cast<double>(labels.size());
  const int il = logits.id();
  return t.emit(Matrix::full(1, 1, s * inv), needs_grad(logits),
                [il, labels, inv](Tape& tp, const Matrix& g) {
                  const Matrix& lv = tp.value_of(il);
                  Matrix dx(lv.rows(), lv.cols());
                  for (std::size_t i = 0; i < lv.size(); ++i) {
                    dx[i] = g[0] * (sigmoid_scalar(lv[i]) - labels[i]) * inv;
                  }
                  tp.accumulate(il, dx);
                });
}

}  // namespace dgu
