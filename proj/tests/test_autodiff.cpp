#include <doctest.h>

#include <cmath>

#include "autodiff.h"
#include "errors.h"
#include "testutil.h"

using namespace uie;
using test::grad_check;
using test::Projection;
using test::random_tensor;

namespace {

// Treats `x` as one fake parameter of an op graph and finite-differences it.
void check_op(const std::function<Var(Tape&, Var)>& op, std::vector<int> shape,
              double lo = -1.0, double hi = 1.0, double tol = 1e-6) {
  Rng rng = Rng::derive(11, {0xabc});
  Tensor x = random_tensor(shape, rng, lo, hi);
  ParamStore ps;
  ps.add("x", &x);
  auto build = [&](Tape& t) {
    Var xv = t.leaf(x, &x);
    return op(t, xv);
  };
  auto res = grad_check(ps, build);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < tol);
}

}  // namespace

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng = Rng::derive(3, {1});
  Tensor other = random_tensor({2, 3, 4}, rng, 0.2, 1.0);
  Projection proj({2, 3, 4});

  check_op([&](Tape& t, Var x) { return proj.apply(t, t.add(x, t.constant(other))); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.sub(t.constant(other), x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.mul(x, t.constant(other))); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.div(x, t.constant(other))); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.div(t.constant(other), x)); }, {2, 3, 4},
           0.5, 1.5, 1e-5);
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.affine(x, -2.5, 0.75)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.square(x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.sin_op(x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.tanh_op(x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return proj.apply(t, t.gelu(x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return t.mean(t.square(x)); }, {2, 3, 4});
  check_op([&](Tape& t, Var x) { return t.sum(t.mul(x, x)); }, {2, 3, 4});
}

TEST_CASE("scalar step-size gradient") {
  Rng rng = Rng::derive(5, {2});
  Tensor big = random_tensor({3, 4, 4}, rng);
  Tensor s = Tensor::scalar(0.37);
  ParamStore ps;
  ps.add("s", &s);
  Projection proj({3, 4, 4});
  auto build = [&](Tape& t) {
    Var sv = t.leaf(s, &s);
    return proj.apply(t, t.scale_by(t.constant(big), sv));
  };
  auto res = grad_check(ps, build);
  CHECK(res.max_rel_err < 1e-8);
}

TEST_CASE("conv2d forward matches direct summation and gradients check out") {
  Rng rng = Rng::derive(9, {3});
  Tensor x = random_tensor({2, 5, 6}, rng, -1, 1);
  Tensor w = random_tensor({3, 2, 3, 3}, rng, -1, 1);
  Tensor b = random_tensor({3}, rng, -1, 1);

  Tape t;
  Var out = t.conv2d(t.constant(x), t.constant(w), t.constant(b), 1, 1);
  const Tensor& o = t.val(out);
  REQUIRE(o.shape() == std::vector<int>{3, 5, 6});
  // direct triple loop
  for (int co = 0; co < 3; ++co)
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 6; ++xx) {
        double acc = b[co];
        for (int ci = 0; ci < 2; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = y - 1 + ky, ix = xx - 1 + kx;
              if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
              acc += w[((static_cast<int64_t>(co) * 2 + ci) * 3 + ky) * 3 + kx] * x.at(ci, iy, ix);
            }
        CHECK(o.at(co, y, xx) == doctest::Approx(acc).epsilon(1e-12));
      }

  Projection proj({3, 5, 6});
  ParamStore ps;
  ps.add("x", &x);
  ps.add("w", &w);
  ps.add("b", &b);
  auto build = [&](Tape& tt) {
    return proj.apply(tt, tt.conv2d(tt.leaf(x, &x), tt.leaf(w, &w), tt.leaf(b, &b), 1, 1));
  };
  auto res = grad_check(ps, build);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("strided conv2d gradient") {
  Rng rng = Rng::derive(10, {4});
  Tensor x = random_tensor({2, 6, 6}, rng, -1, 1);
  Tensor w = random_tensor({4, 2, 3, 3}, rng, -1, 1);
  Tensor b = random_tensor({4}, rng, -1, 1);
  Projection proj({4, 3, 3});
  ParamStore ps;
  ps.add("x", &x);
  ps.add("w", &w);
  ps.add("b", &b);
  auto build = [&](Tape& tt) {
    return proj.apply(tt, tt.conv2d(tt.leaf(x, &x), tt.leaf(w, &w), tt.leaf(b, &b), 2, 1));
  };
  CHECK(grad_check(ps, build).max_rel_err < 1e-6);
}

TEST_CASE("transposed conv doubles spatial dims and gradients check out") {
  Rng rng = Rng::derive(12, {5});
  Tensor x = random_tensor({3, 4, 5}, rng, -1, 1);
  Tensor w = random_tensor({3, 2, 2, 2}, rng, -1, 1);
  Tensor b = random_tensor({2}, rng, -1, 1);
  Tape t;
  Var out = t.conv_transpose2d(t.constant(x), t.constant(w), t.constant(b), 2);
  REQUIRE(t.val(out).shape() == std::vector<int>{2, 8, 10});

  Projection proj({2, 8, 10});
  ParamStore ps;
  ps.add("x", &x);
  ps.add("w", &w);
  ps.add("b", &b);
  auto build = [&](Tape& tt) {
    return proj.apply(tt, tt.conv_transpose2d(tt.leaf(x, &x), tt.leaf(w, &w), tt.leaf(b, &b), 2));
  };
  CHECK(grad_check(ps, build).max_rel_err < 1e-6);
}

TEST_CASE("depthwise conv gradient, with and without padding") {
  Rng rng = Rng::derive(13, {6});
  Tensor x = random_tensor({3, 6, 6}, rng, -1, 1);
  Tensor w = random_tensor({3, 3, 3}, rng, -1, 1);
  Tensor b = random_tensor({3}, rng, -1, 1);
  for (int pad : {0, 1}) {
    ParamStore ps;
    ps.add("x", &x);
    ps.add("w", &w);
    ps.add("b", &b);
    const int o = 6 + 2 * pad - 2;
    Projection proj({3, o, o});
    auto build = [&](Tape& tt) {
      return proj.apply(tt,
                        tt.depthwise_conv2d(tt.leaf(x, &x), tt.leaf(w, &w), tt.leaf(b, &b), pad));
    };
    CHECK(grad_check(ps, build).max_rel_err < 1e-6);
  }
}

TEST_CASE("channel layernorm: zero mean/unit variance and gradients") {
  Rng rng = Rng::derive(14, {7});
  Tensor x = random_tensor({5, 3, 3}, rng, -2, 2);
  Tensor gamma = Tensor::full({5}, 1.0);
  Tensor beta = Tensor::zeros({5});

  Tape t;
  Var out = t.layernorm_channels(t.constant(x), t.constant(gamma), t.constant(beta));
  const Tensor& o = t.val(out);
  for (int p = 0; p < 9; ++p) {
    double mu = 0, var = 0;
    for (int c = 0; c < 5; ++c) mu += o[c * 9 + p];
    mu /= 5;
    for (int c = 0; c < 5; ++c) var += (o[c * 9 + p] - mu) * (o[c * 9 + p] - mu);
    var /= 5;
    CHECK(std::abs(mu) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps shifts variance slightly
  }

  Rng rng2 = Rng::derive(15, {8});
  gamma = random_tensor({5}, rng2, 0.5, 1.5);
  beta = random_tensor({5}, rng2, -0.5, 0.5);
  ParamStore ps;
  ps.add("x", &x);
  ps.add("gamma", &gamma);
  ps.add("beta", &beta);
  Projection proj({5, 3, 3});
  auto build = [&](Tape& tt) {
    return proj.apply(tt, tt.layernorm_channels(tt.leaf(x, &x), tt.leaf(gamma, &gamma),
                                                tt.leaf(beta, &beta)));
  };
  auto res = grad_check(ps, build);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("matmul, transpose, softmax gradients") {
  Rng rng = Rng::derive(16, {9});
  Tensor a = random_tensor({3, 4}, rng, -1, 1);
  Tensor b = random_tensor({4, 5}, rng, -1, 1);
  {
    ParamStore ps;
    ps.add("a", &a);
    ps.add("b", &b);
    Projection proj({3, 5});
    auto build = [&](Tape& tt) {
      return proj.apply(tt, tt.matmul(tt.leaf(a, &a), tt.leaf(b, &b)));
    };
    CHECK(grad_check(ps, build).max_rel_err < 1e-6);
  }
  {
    ParamStore ps;
    ps.add("a", &a);
    Projection proj({4, 3});
    auto build = [&](Tape& tt) { return proj.apply(tt, tt.transpose(tt.leaf(a, &a))); };
    CHECK(grad_check(ps, build).max_rel_err < 1e-8);
  }
  {
    Tensor logits = random_tensor({4, 6}, rng, -2, 2);
    ParamStore ps;
    ps.add("logits", &logits);
    Projection proj({4, 6});
    auto build = [&](Tape& tt) { return proj.apply(tt, tt.softmax_rows(tt.leaf(logits, &logits))); };
    CHECK(grad_check(ps, build).max_rel_err < 1e-5);
  }
}

TEST_CASE("softmax rows sum to one and reject non-finite logits") {
  Rng rng = Rng::derive(17, {10});
  Tensor logits = random_tensor({6, 6}, rng, -5, 5);
  Tape t;
  const Tensor& s = t.val(t.softmax_rows(t.constant(logits)));
  for (int r = 0; r < 6; ++r) {
    double sum = 0;
    for (int c = 0; c < 6; ++c) sum += s.at(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor bad = logits;
  bad[3] = std::nan("");
  Tape t2;
  CHECK_THROWS_AS(t2.softmax_rows(t2.constant(bad)), NumericError);
}

TEST_CASE("reshape, concat, slice gradients") {
  Rng rng = Rng::derive(18, {11});
  Tensor x = random_tensor({4, 3, 2}, rng, -1, 1);
  Tensor y = random_tensor({2, 3, 2}, rng, -1, 1);
  {
    ParamStore ps;
    ps.add("x", &x);
    Projection proj({4, 6});
    auto build = [&](Tape& tt) { return proj.apply(tt, tt.reshape(tt.leaf(x, &x), {4, 6})); };
    CHECK(grad_check(ps, build).max_rel_err < 1e-8);
  }
  {
    ParamStore ps;
    ps.add("x", &x);
    ps.add("y", &y);
    Projection proj({6, 3, 2});
    auto build = [&](Tape& tt) {
      return proj.apply(tt, tt.concat_channels(tt.leaf(x, &x), tt.leaf(y, &y)));
    };
    CHECK(grad_check(ps, build).max_rel_err < 1e-8);
  }
  {
    ParamStore ps;
    ps.add("x", &x);
    Projection proj({2, 3, 2});
    auto build = [&](Tape& tt) { return proj.apply(tt, tt.slice_channels(tt.leaf(x, &x), 1, 3)); };
    CHECK(grad_check(ps, build).max_rel_err < 1e-8);
  }
}

TEST_CASE("shape violations throw") {
  Tape t;
  Var a = t.constant(Tensor::zeros({2, 3, 3}));
  Var b = t.constant(Tensor::zeros({3, 3, 3}));
  CHECK_THROWS_AS(t.add(a, b), ShapeError);
  CHECK_THROWS_AS(t.matmul(t.constant(Tensor::zeros({2, 3})), t.constant(Tensor::zeros({2, 3}))),
                  ShapeError);
  CHECK_THROWS_AS(t.conv2d(a, t.constant(Tensor::zeros({4, 5, 3, 3})), Tape::kNoVar, 1, 1),
                  ShapeError);
  CHECK_THROWS_AS(t.backward(a), ShapeError);
}

TEST_CASE("leaf deduplication accumulates gradient from repeated use") {
  Tensor x = Tensor::from({2}, {0.5, -0.25});
  Tape t;
  Var xa = t.leaf(x, &x);
  Var xb = t.leaf(x, &x);
  CHECK(xa == xb);
  Var out = t.sum(t.mul(xa, xb));  // sum of x^2
  t.backward(out);
  Tensor g = t.grad_for(&x);
  CHECK(g[0] == doctest::Approx(1.0));    // 2*0.5
  CHECK(g[1] == doctest::Approx(-0.5));   // 2*(-0.25)
}
