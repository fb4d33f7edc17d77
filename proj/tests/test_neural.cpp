#include <gtest/gtest.h>

#include <cmath>

#include "fd_check.hpp"
#include "uavbc/neural.hpp"
#include "uavbc/rng.hpp"

using namespace uavbc;
using uavbc::testing::fd_check;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Scalar loop forward pass, no Eigen products.
std::vector<double> oracle_forward(const DenseNet& net, std::vector<double> x) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& L = net.layers[l];
    std::vector<double> y(static_cast<std::size_t>(L.weight.rows()));
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
      double s = L.bias(r);
      for (Eigen::Index c = 0; c < L.weight.cols(); ++c) s += L.weight(r, c) * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = (l + 1 < net.layers.size()) ? std::max(0.0, s) : s;
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace

TEST(DenseNet, ShapesAndInitBounds) {
  CounterRng rng(1);
  const DenseNet net = DenseNet::create({5, 16, 16, 3}, rng);
  EXPECT_EQ(net.parameter_count(), 5u * 16 + 16 + 16 * 16 + 16 + 16 * 3 + 3);
  for (Eigen::Index i = 0; i < net.layers[0].weight.size(); ++i)
    EXPECT_LE(std::fabs(net.layers[0].weight.data()[i]), 1.0 / std::sqrt(5.0));
  EXPECT_LE(net.layers[2].weight.cwiseAbs().maxCoeff(), 1e-3 / 4.0);
  EXPECT_THROW(DenseNet::zeros({3}), UsageError);
}

TEST(DenseNet, ForwardMatchesScalarOracle) {
  CounterRng rng(2);
  DenseNet net = DenseNet::create({4, 7, 6, 2}, rng, 1.0);
  const Matrix x = random_matrix(4, 9, rng);
  const Matrix y = forward(net, x).output();
  for (Eigen::Index j = 0; j < 9; ++j) {
    const auto o = oracle_forward(net, {x(0, j), x(1, j), x(2, j), x(3, j)});
    EXPECT_NEAR(y(0, j), o[0], 1e-12);
    EXPECT_NEAR(y(1, j), o[1], 1e-12);
  }
  EXPECT_THROW(forward(net, Matrix(random_matrix(3, 2, rng))), UsageError);
}

TEST(DenseNet, BackwardMatchesFiniteDifferences) {
  CounterRng rng(3);
  DenseNet net = DenseNet::create({4, 16, 16, 2}, rng, 1.0);
  const Matrix x = random_matrix(4, 8, rng);
  const Matrix w = random_matrix(2, 8, rng);
  auto loss = [&] { return forward(net, x).output().cwiseProduct(w).sum(); };
  const BackwardResult b = backward(net, forward(net, x), w);
  const auto rep = fd_check(net, flatten(b.grads), loss, 200, rng);
  EXPECT_EQ(rep.failed, 0u) << "worst relative error " << rep.worst_rel;
}

TEST(DenseNet, InputGradientMatchesFiniteDifferences) {
  CounterRng rng(4);
  const DenseNet net = DenseNet::create({3, 8, 1}, rng, 1.0);
  Matrix x = random_matrix(3, 1, rng);
  const Matrix g = backward(net, forward(net, x), Matrix::Ones(1, 1)).input_grad;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double h = 1e-6, o = x(i, 0);
    x(i, 0) = o + h;
    const double up = forward(net, x).output()(0, 0);
    x(i, 0) = o - h;
    const double down = forward(net, x).output()(0, 0);
    x(i, 0) = o;
    EXPECT_NEAR(g(i, 0), (up - down) / (2 * h), 1e-6);
  }
}

TEST(DenseNet, BackwardWithoutTapeIsUsageError) {
  const DenseNet net = DenseNet::zeros({2, 1});
  EXPECT_THROW(backward(net, ForwardTape{}, Matrix::Ones(1, 1)), UsageError);
}

TEST(DenseNet, FlattenAssignRoundTrip) {
  CounterRng rng(5);
  DenseNet a = DenseNet::create({3, 4, 2}, rng);
  DenseNet b = DenseNet::zeros({3, 4, 2});
  b.assign(a.flatten());
  EXPECT_EQ(a.flatten(), b.flatten());
  const DenseNet c = dense_net_from_json(nlohmann::json::parse(to_json(a).dump()));
  EXPECT_EQ(a.flatten(), c.flatten());
  EXPECT_THROW(b.assign(std::vector<double>(3)), UsageError);
}

TEST(Policy, LogOneMinusTanhSqIsStable) {
  for (double u : {-30.0, -5.0, -0.3, 0.0, 0.7, 4.0, 25.0}) {
    const double t = std::tanh(u);
    if (std::fabs(u) < 10) {
      EXPECT_NEAR(log_one_minus_tanh_sq(u), std::log(1 - t * t), 1e-10);
    }
    EXPECT_TRUE(std::isfinite(log_one_minus_tanh_sq(u)));
  }
}

TEST(Policy, ScaleClamp) {
  EXPECT_NEAR(policy_scale(0.0), std::log(2.0), 1e-15);
  EXPECT_EQ(policy_scale(-100.0), std::exp(kLogScaleMin));
  EXPECT_EQ(policy_scale(100.0), std::exp(kLogScaleMax));
  EXPECT_EQ(policy_scale_derivative(100.0), 0.0);
  EXPECT_NEAR(policy_scale_derivative(0.0), 0.5, 1e-15);
}

TEST(Policy, LogProbMatchesChangeOfVariables) {
  CounterRng rng(6);
  const Matrix out = random_matrix(4, 5, rng);
  const Matrix eps = random_matrix(2, 5, rng);
  const PolicyBatch p = squash(out, eps);
  const double pi = 3.14159265358979323846;
  for (Eigen::Index j = 0; j < 5; ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double s = std::log1p(std::exp(out(2 + i, j)));
      const double u = out(i, j) + s * eps(i, j);
      const double gauss = std::exp(-0.5 * eps(i, j) * eps(i, j)) / (s * std::sqrt(2 * pi));
      lp += std::log(gauss) - std::log(1.0 - std::tanh(u) * std::tanh(u));
      EXPECT_NEAR(p.action(i, j), std::tanh(u), 1e-14);
    }
    EXPECT_NEAR(p.log_prob(j), lp, 1e-9);
  }
  const FixedSampleLogProb f = log_prob_of(out, p.pre_tanh);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(f.log_prob(j), p.log_prob(j), 1e-9);
}

TEST(Policy, SquashBackwardMatchesFiniteDifferences) {
  CounterRng rng(7);
  Matrix out = random_matrix(6, 4, rng);
  const Matrix eps = random_matrix(3, 4, rng);
  const Matrix wa = random_matrix(3, 4, rng);
  const RowVector wl = random_matrix(1, 4, rng);
  auto loss = [&](const Matrix& o) {
    const PolicyBatch p = squash(o, eps);
    return p.action.cwiseProduct(wa).sum() + p.log_prob.dot(wl);
  };
  const Matrix g = squash_backward(squash(out, eps), wa, wl);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double h = 1e-6, o = out(i, j);
      out(i, j) = o + h;
      const double up = loss(out);
      out(i, j) = o - h;
      const double down = loss(out);
      out(i, j) = o;
      EXPECT_TRUE(uavbc::testing::grad_close(g(i, j), (up - down) / (2 * h))) << i << "," << j;
    }
}

TEST(Policy, FixedSampleGradientMatchesFiniteDifferences) {
  CounterRng rng(8);
  Matrix out = random_matrix(4, 3, rng);
  const Matrix u = random_matrix(2, 3, rng);
  const FixedSampleLogProb f = log_prob_of(out, u);
  for (Eigen::Index j = 0; j < 3; ++j)
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double h = 1e-6, o = out(i, j);
      out(i, j) = o + h;
      const double up = log_prob_of(out, u).log_prob(j);
      out(i, j) = o - h;
      const double down = log_prob_of(out, u).log_prob(j);
      out(i, j) = o;
      EXPECT_TRUE(uavbc::testing::grad_close(f.d_output(i, j), (up - down) / (2 * h)));
    }
}

TEST(Policy, SampleWithZeroNoiseIsMeanAction) {
  CounterRng rng(9);
  const DenseNet actor = DenseNet::create({5, 8, 4}, rng, 1.0);
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5};
  const PolicySample p = sample_policy(actor, s, std::vector<double>{0.0, 0.0});
  ASSERT_EQ(p.normalized_action.size(), 2u);
  EXPECT_DOUBLE_EQ(p.normalized_action[0], p.mean_action[0]);
  EXPECT_DOUBLE_EQ(p.normalized_action[1], p.mean_action[1]);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  DenseNet net = DenseNet::zeros({2, 1});
  Adam opt(net, {0.01});
  Gradients g = zero_gradients(net);
  g[0].weight << 3.0, -0.5;
  g[0].bias << 0.0;
  opt.step(net, g);
  // Bias-corrected first step is lr * sign(g) up to eps.
  EXPECT_NEAR(net.layers[0].weight(0, 0), -0.01, 1e-8);
  EXPECT_NEAR(net.layers[0].weight(0, 1), 0.01, 1e-8);
  EXPECT_EQ(net.layers[0].bias(0), 0.0);
}

TEST(Adam, MatchesHandRecurrence) {
  DenseNet net = DenseNet::zeros({1, 1});
  Adam opt(net, {0.1, 0.9, 0.999, 1e-8});
  double p = 0.0, m = 0.0, v = 0.0;
  const double grads[] = {1.0, -2.0, 0.5, 0.25};
  for (int t = 1; t <= 4; ++t) {
    const double gi = grads[t - 1];
    Gradients g = zero_gradients(net);
    g[0].weight(0, 0) = gi;
    opt.step(net, g);
    m = 0.9 * m + 0.1 * gi;
    v = 0.999 * v + 0.001 * gi * gi;
    p -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(net.layers[0].weight(0, 0), p, 1e-12);
  }
  ScalarAdam s({0.1, 0.9, 0.999, 1e-8});
  double q = 0.0;
  for (double gi : grads) q = s.step(q, gi);
  EXPECT_NEAR(q, p, 1e-12);
}

TEST(Adam, RejectsNonFiniteGradient) {
  DenseNet net = DenseNet::zeros({1, 1});
  Adam opt(net, {});
  Gradients g = zero_gradients(net);
  g[0].weight(0, 0) = std::nan("");
  EXPECT_THROW(opt.step(net, g), TrainingError);
}

TEST(Adam, JsonRoundTripContinuesIdentically) {
  CounterRng rng(10);
  DenseNet a = DenseNet::create({3, 4, 1}, rng, 1.0);
  Adam oa(a, {});
  Gradients g = zero_gradients(a);
  for (auto& l : g) l.weight.setConstant(0.3);
  oa.step(a, g);
  DenseNet b = a;
  Adam ob = Adam::from_json(nlohmann::json::parse(oa.to_json().dump()), b);
  oa.step(a, g);
  ob.step(b, g);
  EXPECT_EQ(a.flatten(), b.flatten());
}
