#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "dgu/adam.hpp"
#include "dgu/grad_check.hpp"
#include "dgu/matrix.hpp"
#include "dgu/param_store.hpp"
#include "dgu/rng.hpp"
#include "dgu/tape.hpp"

using namespace dgu;

namespace {

ParamStore random_store(Rng& rng, std::initializer_list<std::pair<const char*, std::pair<int, int>>> shapes) {
  ParamStore s;
  for (const auto& [name, shape] : shapes) {
    Matrix m(shape.first, shape.second);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-1.0, 1.0);
    s.add(name, std::move(m));
  }
  return s;
}

}  // namespace

TEST_CASE("gelu fixed points") {
  Tape t;
  Var x = t.constant(Matrix::full(1, 3, 0.0));
  Var y = gelu(x);
  CHECK(y.value()[0] == 0.0);
  CHECK(gelu_scalar(0.0) == 0.0);
  // large positive x behaves like identity, large negative like zero
  CHECK(gelu_scalar(8.0) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(std::fabs(gelu_scalar(-8.0)) < 1e-9);
}

TEST_CASE("layer_norm of a constant row is the shift") {
  Tape t;
  Var x = t.constant(Matrix::full(2, 4, 3.7));
  Var gain = t.constant(Matrix::full(1, 4, 1.0));
  Var shift = t.constant(Matrix::full(1, 4, 0.0));
  Var y = layer_norm(x, gain, shift);
  for (std::size_t i = 0; i < y.value().size(); ++i) {
    CHECK(std::fabs(y.value()[i]) < 1e-12);
  }
}

TEST_CASE("linear with identity weight and zero bias") {
  Tape t;
  Matrix x(1, 3);
  x[0] = 0.5; x[1] = -1.0; x[2] = 2.0;
  Var vx = t.constant(x);
  Var w = t.constant(Matrix::identity(3));
  Var b = t.constant(Matrix::zeros(1, 3));
  Var y = linear(vx, w, b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(y.value()[i] == x[i]);
}

TEST_CASE("shape mismatch errors name both shapes") {
  Tape t;
  Var a = t.constant(Matrix::zeros(2, 3));
  Var b = t.constant(Matrix::zeros(4, 5));
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("2x3"),
                       std::invalid_argument);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("bce_with_logits reference values") {
  // sigma(0) = 0.5 against label 0.5 -> ln 2
  {
    Tape t;
    Var z = t.constant(Matrix::zeros(1, 1));
    Var l = bce_with_logits(z, {0.5});
    CHECK(l.scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  // stable-form evaluations at extreme logits
  {
    Tape t;
    Var z = t.constant(Matrix::full(1, 1, 20.0));
    Var l = bce_with_logits(z, {1.0});
    CHECK(l.scalar() == doctest::Approx(2.0611536181902037e-9).epsilon(1e-6));
  }
  {
    Tape t;
    Var z = t.constant(Matrix::full(1, 1, -20.0));
    Var l = bce_with_logits(z, {1.0});
    CHECK(l.scalar() == doctest::Approx(20.0).epsilon(1e-8));
  }
  {
    Tape t;
    Var z = t.constant(Matrix::zeros(1, 2));
    CHECK_THROWS_AS(bce_with_logits(z, {0.5, 1.5}), std::invalid_argument);
  }
}

TEST_CASE("bce stays finite across the working logit range") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double z = rng.uniform(-50.0, 50.0);
    const double y = rng.uniform();
    CHECK(std::isfinite(bce_logit_scalar(z, y)));
  }
}

TEST_CASE("backward of sum(W*x) broadcasts x") {
  ParamStore params;
  Matrix w(2, 2);
  w[0] = 0.3; w[1] = -0.7; w[2] = 1.1; w[3] = 0.2;
  params.add("w", w);
  Matrix x(2, 1);
  x[0] = 2.0; x[1] = -3.0;

  Tape tape;
  BoundParams bp = tape.bind(params);
  Var vx = tape.constant(x);
  Var loss = sum_all(matmul(bp.at("w"), vx));
  auto grads = tape.backward(loss, bp);
  // d/dW sum(W x) = ones * x^T: every row of the gradient equals x^T
  CHECK(grads[0].at(0, 0) == doctest::Approx(2.0));
  CHECK(grads[0].at(0, 1) == doctest::Approx(-3.0));
  CHECK(grads[0].at(1, 0) == doctest::Approx(2.0));
  CHECK(grads[0].at(1, 1) == doctest::Approx(-3.0));
}

TEST_CASE("untouched parameters get zero gradients") {
  Rng rng(5);
  ParamStore params = random_store(rng, {{"a", {2, 2}}, {"b", {3, 1}}});
  Tape tape;
  BoundParams bp = tape.bind(params);
  Var loss = sum_all(bp.at("a"));
  auto grads = tape.backward(loss, bp);
  for (std::size_t i = 0; i < grads[1].size(); ++i) CHECK(grads[1][i] == 0.0);
}

TEST_CASE("a tape supports exactly one backward call") {
  ParamStore params;
  params.add("a", Matrix::full(1, 1, 2.0));
  Tape tape;
  BoundParams bp = tape.bind(params);
  Var loss = sum_all(bp.at("a"));
  (void)tape.backward(loss, bp);
  CHECK_THROWS_AS(tape.backward(loss, bp), std::logic_error);

  Tape empty;
  BoundParams none;
  CHECK_THROWS_AS(empty.backward(Var(), none), std::logic_error);
}

TEST_CASE("adam first step moves by about lr") {
  ParamStore params;
  params.add("p", Matrix::full(1, 1, 1.0));
  AdamState st = AdamState::init(params);
  AdamConfig cfg;
  cfg.lr = 1e-3;
  adam_step(params, {Matrix::full(1, 1, 1.0)}, st, cfg);
  CHECK(params.value(0)[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-7));

  // zero gradient at fresh state leaves the parameter unchanged
  ParamStore p2;
  p2.add("p", Matrix::full(1, 1, 0.25));
  AdamState st2 = AdamState::init(p2);
  adam_step(p2, {Matrix::zeros(1, 1)}, st2, cfg);
  CHECK(p2.value(0)[0] == 0.25);

  // non-finite gradient fails fast
  AdamState st3 = AdamState::init(p2);
  CHECK_THROWS_AS(
      adam_step(p2, {Matrix::full(1, 1, std::nan(""))}, st3, cfg),
      std::runtime_error);
}

TEST_CASE("adam trajectories are deterministic") {
  auto run = [] {
    Rng rng(77);
    ParamStore params = random_store(rng, {{"w", {3, 3}}});
    AdamState st = AdamState::init(params);
    AdamConfig cfg;
    cfg.lr = 1e-2;
    for (int step = 0; step < 25; ++step) {
      Tape tape;
      BoundParams bp = tape.bind(params);
      Var loss = mean_all(pow_int(bp.at("w"), 2));
      auto grads = tape.backward(loss, bp);
      adam_step(params, grads, st, cfg);
    }
    return params.flatten();
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);
}

TEST_CASE("grad_check on a quadratic") {
  ParamStore params;
  params.add("theta", Matrix::full(1, 1, 3.0));
  Rng rng(1);
  const double err = grad_check(
      [](Tape& t, const BoundParams& bp) {
        return sum_all(pow_int(bp.at("theta"), 2));
      },
      params, 1e-5, rng);
  CHECK(err < 1e-6);
}

TEST_CASE("gradients match finite differences on every primitive") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    ParamStore params = random_store(
        rng, {{"x", {4, 6}},
              {"w", {6, 3}},
              {"b", {1, 3}},
              {"gain", {1, 6}},
              {"shift", {1, 6}},
              {"lhs", {5, 4}}});
    auto loss_fn = [](Tape& t, const BoundParams& bp) {
      Var x = bp.at("x");
      Var normed = layer_norm(x, bp.at("gain"), bp.at("shift"));
      Var mixed = matmul(bp.at("lhs"), normed);           // 5x6
      Var act = gelu(mixed);
      Var pooled = mean_rows(act);                        // 1x6
      Var lin = linear(pooled, bp.at("w"), bp.at("b"));   // 1x3
      Var sig = sigmoid(lin);
      Var joined = concat_cols(sig, abs_val(lin));        // 1x6
      Var shifted = sub_scalar(joined, mean_all(joined));
      Var p3 = pow_int(shifted, 3);
      Var a = add(sum_all(p3), scale(mean_all(sub(lin, lin)), 2.0));
      Var flat = flatten_head(act, 7);
      Var window = slice_reshape(flat, 2, 1, 4);
      Var logitvec = stack_scalars(t, {sum_all(window), a, mean_all(sig)});
      return bce_with_logits(logitvec, {1.0, 0.0, 0.5});
    };
    const double err = grad_check(loss_fn, params, 1e-5, rng, 48);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("flatten/unflatten round-trip") {
  Rng rng(9);
  ParamStore params =
      random_store(rng, {{"a", {3, 4}}, {"b", {1, 7}}, {"c", {5, 2}}});
  auto flat = params.flatten();
  CHECK(flat.size() == params.total_size());
  ParamStore copy = params;
  for (auto& v : flat) v += 0.5;
  copy.unflatten(flat);
  auto flat2 = copy.flatten();
  CHECK(flat2 == flat);
  std::vector<double> wrong(flat.size() + 1, 0.0);
  CHECK_THROWS_AS(copy.unflatten(wrong), std::invalid_argument);
}

TEST_CASE("param store binary checkpoint round-trips exactly") {
  Rng rng(123);
  ParamStore params =
      random_store(rng, {{"enc.w", {4, 4}}, {"dec.bias", {1, 9}}});
  const std::string path = "diffcore_ckpt_test.bin";
  params.save(path);
  ParamStore back = ParamStore::load(path);
  CHECK(back.same_manifest(params));
  CHECK(back.flatten() == params.flatten());
  std::remove(path.c_str());
}

TEST_CASE("primitives are pure functions of their inputs") {
  Rng rng(3);
  Matrix x(3, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-2.0, 2.0);
  Tape t1, t2;
  Var y1 = gelu(t1.constant(x));
  Var y2 = gelu(t2.constant(x));
  CHECK(y1.value().vec() == y2.value().vec());
}
