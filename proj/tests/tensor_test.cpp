#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mlstm/gradcheck.hpp"
#include "mlstm/params.hpp"
#include "mlstm/tape.hpp"
#include "mlstm/tensor.hpp"

using namespace mlstm;

namespace {

// Central-difference derivative of f with respect to the i-th entry of t.
double central_diff(const std::function<double()>& f, Tensor& t, int i, double eps) {
  const double saved = t.at(i);
  t.at(i) = saved + eps;
  const double lp = f();
  t.at(i) = saved - eps;
  const double lm = f();
  t.at(i) = saved;
  return (lp - lm) / (2.0 * eps);
}

double rel_err(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8}); }

}  // namespace

TEST(Tensor, ShapeInvariants) {
  EXPECT_THROW(Tensor::zeros({0}), DimensionError);
  EXPECT_THROW(Tensor::zeros({3, -1}), DimensionError);
  EXPECT_THROW(Tensor::zeros({2, 2, 2}), DimensionError);
  EXPECT_THROW(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.size(), 6);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 6.0);
}

TEST(Tensor, CopiesShareAndCloneDoesNot) {
  Tensor a = Tensor::row_vector({1.0, 2.0});
  Tensor b = a;
  b.at(0) = 7.0;
  EXPECT_DOUBLE_EQ(a.at(0), 7.0);
  Tensor c = a.clone();
  c.at(0) = 9.0;
  EXPECT_DOUBLE_EQ(a.at(0), 7.0);
}

TEST(Tensor, ChecksumDetectsMutation) {
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const uint64_t h0 = checksum(a);
  EXPECT_EQ(h0, checksum(a));
  a.at(3) = 4.0000001;
  EXPECT_NE(h0, checksum(a));
}

TEST(Affine, IdentityCase) {
  Tape tape;
  Var x = tape.input(Tensor::row_vector({3.0, -1.0}));
  Var W = tape.input(Tensor::from({2, 2}, {1, 0, 0, 1}));
  Var b = tape.input(Tensor::row_vector({0.0, 0.0}));
  Var y = tape.affine(x, W, b);
  EXPECT_DOUBLE_EQ(tape.value(y).at(0), 3.0);
  EXPECT_DOUBLE_EQ(tape.value(y).at(1), -1.0);
}

TEST(Affine, ZeroWeights) {
  Tape tape;
  Var x = tape.input(Tensor::row_vector({0.3, -2.0, 11.0}));
  Var W = tape.input(Tensor::zeros({2, 3}));
  Var b = tape.input(Tensor::row_vector({5.0, 5.0}));
  Var y = tape.affine(x, W, b);
  EXPECT_DOUBLE_EQ(tape.value(y).at(0), 5.0);
  EXPECT_DOUBLE_EQ(tape.value(y).at(1), 5.0);
}

TEST(Affine, ShapeMismatchNamesOperands) {
  Tape tape;
  Var x = tape.input(Tensor::row_vector({1.0, 2.0, 3.0}));
  Var W = tape.input(Tensor::zeros({2, 2}));
  Var b = tape.input(Tensor::row_vector({0.0, 0.0}));
  try {
    tape.affine(x, W, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("W[2x2]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x[3]"), std::string::npos);
  }
}

TEST(Affine, GradientsMatchCentralDifferences) {
  std::mt19937_64 rng(7);
  Tensor W = uniform_tensor({3, 2}, 1.0, rng);
  Tensor x = uniform_tensor({2}, 1.0, rng);
  Tensor b = uniform_tensor({3}, 1.0, rng);
  Tensor gW = Tensor::zeros({3, 2}), gx = Tensor::zeros({2}), gb = Tensor::zeros({3});

  auto loss = [&]() {
    Tape tape;
    Var y = tape.affine(tape.input(x), tape.input(W), tape.input(b));
    // weighted sum so every output coordinate matters differently
    Var w = tape.input(Tensor::row_vector({1.0, -2.0, 0.5}));
    return tape.value(tape.dot(y, w)).at(0);
  };
  {
    Tape tape;
    Var xv = tape.param(x, gx), Wv = tape.param(W, gW), bv = tape.param(b, gb);
    Var y = tape.affine(xv, Wv, bv);
    Var w = tape.input(Tensor::row_vector({1.0, -2.0, 0.5}));
    tape.backward(tape.dot(y, w));
  }
  const double eps = 1e-5;
  for (int i = 0; i < W.size(); ++i) EXPECT_LE(rel_err(gW.at(i), central_diff(loss, W, i, eps)), 1e-7);
  for (int i = 0; i < x.size(); ++i) EXPECT_LE(rel_err(gx.at(i), central_diff(loss, x, i, eps)), 1e-7);
  for (int i = 0; i < b.size(); ++i) EXPECT_LE(rel_err(gb.at(i), central_diff(loss, b, i, eps)), 1e-7);
}

TEST(MaskedSoftmax, UniformCase) {
  Tape tape;
  Var s = tape.input(Tensor::row_vector({0.0, 0.0, 0.0}));
  Var a = tape.masked_softmax(s, {true, true, true});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(tape.value(a).at(i), 1.0 / 3.0, 1e-15);
}

TEST(MaskedSoftmax, MaskedEntryExactlyZero) {
  // exp-normalization over the two unmasked scores 1 and 2
  Tape tape;
  Var s = tape.input(Tensor::row_vector({1.0, 2.0, 3.0}));
  Var a = tape.masked_softmax(s, {true, true, false});
  EXPECT_NEAR(tape.value(a).at(0), 0.2689414213699951, 1e-12);
  EXPECT_NEAR(tape.value(a).at(1), 0.7310585786300049, 1e-12);
  EXPECT_EQ(tape.value(a).at(2), 0.0);
}

TEST(MaskedSoftmax, AllFalseMaskRejected) {
  Tape tape;
  Var s = tape.input(Tensor::row_vector({1.0, 2.0}));
  EXPECT_THROW(tape.masked_softmax(s, {false, false}), InvalidInputError);
}

TEST(MaskedSoftmax, ProbabilityVectorProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(-50.0, 50.0);
  std::bernoulli_distribution coin(0.7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Tensor s = Tensor::zeros({n});
    std::vector<bool> mask(static_cast<size_t>(n));
    bool any = false;
    for (int i = 0; i < n; ++i) {
      s.at(i) = score(rng);
      mask[static_cast<size_t>(i)] = coin(rng);
      any = any || mask[static_cast<size_t>(i)];
    }
    if (!any) mask[0] = true;
    Tape tape;
    const Tensor& a = tape.value(tape.masked_softmax(tape.input(s), mask));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask[static_cast<size_t>(i)]) {
        EXPECT_GE(a.at(i), 0.0);
      } else {
        EXPECT_EQ(a.at(i), 0.0);
      }
      sum += a.at(i);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(MaskedSoftmax, ConstantShiftInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> score(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor s = Tensor::zeros({4});
    for (int i = 0; i < 4; ++i) s.at(i) = score(rng);
    Tensor shifted = s.clone();
    const double c = score(rng) * 10.0;
    std::vector<bool> mask{true, true, false, true};
    for (int i = 0; i < 4; ++i)
      if (mask[static_cast<size_t>(i)]) shifted.at(i) += c;
    Tape tape;
    const Tensor& a = tape.value(tape.masked_softmax(tape.input(s), mask));
    const Tensor& b = tape.value(tape.masked_softmax(tape.input(shifted), mask));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.at(i), b.at(i), 1e-12);
  }
}

TEST(MaskedSoftmax, BackwardMatchesCentralDifferences) {
  std::mt19937_64 rng(17);
  Tensor s = uniform_tensor({5}, 2.0, rng);
  Tensor w = uniform_tensor({5}, 1.0, rng);
  std::vector<bool> mask{true, false, true, true, false};
  Tensor gs = Tensor::zeros({5});
  auto loss = [&]() {
    Tape tape;
    Var a = tape.masked_softmax(tape.input(s), mask);
    return tape.value(tape.dot(a, tape.input(w))).at(0);
  };
  {
    Tape tape;
    Var sv = tape.param(s, gs);
    Var a = tape.masked_softmax(sv, mask);
    tape.backward(tape.dot(a, tape.input(w)));
  }
  for (int i = 0; i < 5; ++i) EXPECT_LE(rel_err(gs.at(i), central_diff(loss, s, i, 1e-5)), 1e-6);
}

TEST(Pointwise, SigmoidOfZeroIsHalf) {
  Tape tape;
  const Tensor& y = tape.value(tape.sigmoid(tape.input(Tensor::zeros({4}))));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.at(i), 0.5);
}

TEST(Pointwise, TanhOfZeroIsZero) {
  Tape tape;
  const Tensor& y = tape.value(tape.tanh(tape.input(Tensor::zeros({3}))));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y.at(i), 0.0);
}

TEST(Pointwise, Multiply) {
  Tape tape;
  Var a = tape.input(Tensor::row_vector({2.0, 3.0}));
  Var b = tape.input(Tensor::row_vector({4.0, 5.0}));
  const Tensor& y = tape.value(tape.mul(a, b));
  EXPECT_DOUBLE_EQ(y.at(0), 8.0);
  EXPECT_DOUBLE_EQ(y.at(1), 15.0);
}

TEST(Pointwise, ShapeMismatchRejected) {
  Tape tape;
  Var a = tape.input(Tensor::row_vector({1.0}));
  Var b = tape.input(Tensor::row_vector({1.0, 2.0}));
  EXPECT_THROW(tape.mul(a, b), DimensionError);
  EXPECT_THROW(tape.add(a, b), DimensionError);
}

TEST(Concat, Basics) {
  Tape tape;
  Var a = tape.input(Tensor::row_vector({1.0, 2.0}));
  Var b = tape.input(Tensor::row_vector({3.0}));
  const Tensor& y = tape.value(tape.concat(a, b));
  ASSERT_EQ(y.size(), 3);
  EXPECT_DOUBLE_EQ(y.at(0), 1.0);
  EXPECT_DOUBLE_EQ(y.at(2), 3.0);
}

TEST(Concat, ZeroLengthOperandImpossible) {
  // zero-length vectors violate the tensor shape contract at construction
  EXPECT_THROW(Tensor::zeros({0}), DimensionError);
}

TEST(Concat, BackwardSplitsGradient) {
  std::mt19937_64 rng(23);
  Tensor a = uniform_tensor({4}, 1.0, rng);
  Tensor b = uniform_tensor({3}, 1.0, rng);
  Tensor w = uniform_tensor({7}, 1.0, rng);
  Tensor ga = Tensor::zeros({4}), gb = Tensor::zeros({3});
  auto loss = [&]() {
    Tape tape;
    Var y = tape.concat(tape.input(a), tape.input(b));
    return tape.value(tape.dot(y, tape.input(w))).at(0);
  };
  {
    Tape tape;
    Var y = tape.concat(tape.param(a, ga), tape.param(b, gb));
    tape.backward(tape.dot(y, tape.input(w)));
  }
  for (int i = 0; i < 4; ++i) EXPECT_LE(rel_err(ga.at(i), central_diff(loss, a, i, 1e-5)), 1e-7);
  for (int i = 0; i < 3; ++i) EXPECT_LE(rel_err(gb.at(i), central_diff(loss, b, i, 1e-5)), 1e-7);
}

TEST(TapeOps, AttendAndStackBackward) {
  std::mt19937_64 rng(29);
  Tensor alpha = Tensor::row_vector({0.2, 0.5, 0.3});
  Tensor r0 = uniform_tensor({4}, 1.0, rng);
  Tensor r1 = uniform_tensor({4}, 1.0, rng);
  Tensor r2 = uniform_tensor({4}, 1.0, rng);
  Tensor w = uniform_tensor({4}, 1.0, rng);
  std::vector<bool> mask{true, true, false};
  Tensor gal = Tensor::zeros({3}), g0 = Tensor::zeros({4}), g1 = Tensor::zeros({4});
  auto loss = [&]() {
    Tape tape;
    std::vector<Var> rows{tape.input(r0), tape.input(r1), tape.input(r2)};
    Var a = tape.attend(tape.input(alpha), rows, mask);
    return tape.value(tape.dot(a, tape.input(w))).at(0);
  };
  {
    Tape tape;
    Tensor g2 = Tensor::zeros({4});
    std::vector<Var> rows{tape.param(r0, g0), tape.param(r1, g1), tape.param(r2, g2)};
    Var a = tape.attend(tape.param(alpha, gal), rows, mask);
    tape.backward(tape.dot(a, tape.input(w)));
    for (int i = 0; i < 4; ++i) EXPECT_EQ(g2.at(i), 0.0);  // masked row gets no gradient
  }
  for (int i = 0; i < 3; ++i) EXPECT_LE(rel_err(gal.at(i), central_diff(loss, alpha, i, 1e-5)), 1e-6);
  for (int i = 0; i < 4; ++i) EXPECT_LE(rel_err(g0.at(i), central_diff(loss, r0, i, 1e-5)), 1e-6);
  for (int i = 0; i < 4; ++i) EXPECT_LE(rel_err(g1.at(i), central_diff(loss, r1, i, 1e-5)), 1e-6);
}

TEST(TapeOps, ComposedChainBackward) {
  // sigmoid/tanh/mul/add/stack/pick_neg_log composed into one scalar
  std::mt19937_64 rng(31);
  Tensor x = uniform_tensor({3}, 1.5, rng);
  Tensor y = uniform_tensor({3}, 1.5, rng);
  Tensor gx = Tensor::zeros({3}), gy = Tensor::zeros({3});
  auto build = [&](Tape& tape, Var xv, Var yv) {
    Var s = tape.mul(tape.sigmoid(xv), tape.tanh(yv));
    Var t = tape.add(s, xv);
    Var probs = tape.masked_softmax(tape.add(t, tape.scale(yv, 0.5)), {true, true, true});
    return tape.pick_neg_log(probs, 1);
  };
  auto loss = [&]() {
    Tape tape;
    return tape.value(build(tape, tape.input(x), tape.input(y))).at(0);
  };
  {
    Tape tape;
    tape.backward(build(tape, tape.param(x, gx), tape.param(y, gy)));
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(rel_err(gx.at(i), central_diff(loss, x, i, 1e-5)), 1e-6);
    EXPECT_LE(rel_err(gy.at(i), central_diff(loss, y, i, 1e-5)), 1e-6);
  }
}

TEST(Tape, NonFiniteInputRejected) {
  Tape tape;
  Tensor bad = Tensor::row_vector({1.0, 2.0});
  bad.at(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(tape.input(bad), NumericError);
}

TEST(Tape, DeterministicForward) {
  std::mt19937_64 rng(37);
  Tensor W = uniform_tensor({4, 4}, 1.0, rng);
  Tensor x = uniform_tensor({4}, 1.0, rng);
  Tensor b = uniform_tensor({4}, 1.0, rng);
  Tensor out1, out2;
  {
    Tape tape;
    out1 = tape.value(tape.tanh(tape.affine(tape.input(x), tape.input(W), tape.input(b)))).clone();
  }
  {
    Tape tape;
    out2 = tape.value(tape.tanh(tape.affine(tape.input(x), tape.input(W), tape.input(b)))).clone();
  }
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out1.at(i), out2.at(i));
}

TEST(GradientCheck, LinearLoss) {
  ParameterStore store;
  std::mt19937_64 rng(41);
  store.add("a", uniform_tensor({3}, 1.0, rng));
  store.add("b", uniform_tensor({2, 2}, 1.0, rng));
  auto loss_fn = [&](bool want_grad) {
    Tape tape;
    Var sa = tape.sum(tape.param(store.value("a"), store.grad("a")));
    Var sb = tape.sum(tape.param(store.value("b"), store.grad("b")));
    Var total = tape.add(sa, sb);
    if (want_grad) tape.backward(total);
    return tape.value(total).at(0);
  };
  GradCheckReport report = gradient_check(loss_fn, store, 1e-5);
  EXPECT_LE(report.max_rel_err, 1e-10);
  store.zero_grads();
  loss_fn(true);
  for (const auto& e : store.entries())
    for (int i = 0; i < e.grad.size(); ++i) EXPECT_NEAR(e.grad.at(i), 1.0, 1e-12);
}

TEST(GradientCheck, SquaredNormLoss) {
  ParameterStore store;
  store.add("W", Tensor::row_vector({1.0, -2.0}));
  auto loss_fn = [&](bool want_grad) {
    Tape tape;
    Var w = tape.param(store.value("W"), store.grad("W"));
    Var l = tape.dot(w, w);
    if (want_grad) tape.backward(l);
    return tape.value(l).at(0);
  };
  GradCheckReport report = gradient_check(loss_fn, store, 1e-5);
  EXPECT_LE(report.max_rel_err, 1e-8);
  store.zero_grads();
  loss_fn(true);
  EXPECT_NEAR(store.grad("W").at(0), 2.0, 1e-9);
  EXPECT_NEAR(store.grad("W").at(1), -4.0, 1e-9);
}

TEST(GradientCheck, RejectsBadEpsilonAndNonFiniteLoss) {
  ParameterStore store;
  store.add("w", Tensor::row_vector({1.0}));
  auto ok = [&](bool) { return 0.0; };
  EXPECT_THROW(gradient_check(ok, store, 0.0), InvalidInputError);
  auto bad = [&](bool) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(gradient_check(bad, store, 1e-5), NumericError);
}
