#pragma once

// Dense ReLU networks with an explicit forward tape, reverse-mode gradients,
// the tanh-squashed Gaussian policy head and a bias-corrected Adam optimizer.
// Samples are stored column-wise: an input batch is (input_dim x batch).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace uavbc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct DenseNet {
  std::vector<std::size_t> dims;
  std::vector<DenseLayer> layers;

  /// Fan-in uniform initialisation; the output layer is additionally scaled.
  static DenseNet create(std::vector<std::size_t> dims, CounterRng& rng, double output_scale = 1e-3) {
    DenseNet net = zeros(std::move(dims));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      DenseLayer& layer = net.layers[l];
      double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      if (l + 1 == net.layers.size()) bound *= output_scale;
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
    }
    return net;
  }

  static DenseNet zeros(std::vector<std::size_t> dims) {
    if (dims.size() < 2) throw UsageError("DenseNet: need at least input and output dims");
    DenseNet net;
    net.dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(net.dims[l]);
      const auto out = static_cast<Eigen::Index>(net.dims[l + 1]);
      net.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
    }
    return net;
  }

  std::size_t input_dim() const noexcept { return dims.front(); }
  std::size_t output_dim() const noexcept { return dims.back(); }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  /// Parameters layer by layer: weights row-major, then biases.
  std::vector<double> flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const DenseLayer& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
    }
    return flat;
  }

  void assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw UsageError("DenseNet::assign: parameter count mismatch");
    std::size_t i = 0;
    for (DenseLayer& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[i++];
    }
  }

  bool all_finite() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
  }
};

/// Gradients share the parameter layout of the network they belong to.
using Gradients = std::vector<DenseLayer>;

inline Gradients zero_gradients(const DenseNet& net) { return DenseNet::zeros(net.dims).layers; }

inline void accumulate(Gradients& into, const Gradients& g) {
  for (std::size_t l = 0; l < into.size(); ++l) {
    into[l].weight += g[l].weight;
    into[l].bias += g[l].bias;
  }
}

inline std::vector<double> flatten(const Gradients& g) {
  DenseNet tmp;
  tmp.layers = g;
  return tmp.flatten();
}

struct ForwardTape {
  Matrix input;
  std::vector<Matrix> pre;   // affine outputs per layer
  std::vector<Matrix> post;  // activations; last entry is the network output

  bool empty() const noexcept { return post.empty(); }
  const Matrix& output() const { return post.back(); }
};

/// Batched forward pass; hidden layers use ReLU, the output layer is linear.
inline ForwardTape forward(const DenseNet& net, const Matrix& input) {
  if (static_cast<std::size_t>(input.rows()) != net.input_dim())
    throw UsageError("forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
  ForwardTape tape;
  tape.input = input;
  const Matrix* x = &tape.input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    Matrix z = layer.weight * (*x);
    z.colwise() += layer.bias;
    tape.pre.push_back(z);
    if (l + 1 < net.layers.size())
      tape.post.push_back(z.cwiseMax(0.0));
    else
      tape.post.push_back(std::move(z));
    x = &tape.post.back();
  }
  return tape;
}

inline Vector forward(const DenseNet& net, const Vector& input) { return forward(net, Matrix(input)).output().col(0); }

struct BackwardResult {
  Gradients grads;
  Matrix input_grad;
};

/// Reverse pass given dLoss/dOutput (output_dim x batch).
inline BackwardResult backward(const DenseNet& net, const ForwardTape& tape, const Matrix& output_grad) {
  if (tape.empty()) throw UsageError("backward: no forward pass recorded");
  if (output_grad.rows() != tape.output().rows() || output_grad.cols() != tape.output().cols())
    throw UsageError("backward: output gradient shape mismatch");
  BackwardResult res;
  res.grads.resize(net.layers.size());
  Matrix delta = output_grad;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    if (l + 1 < net.layers.size()) delta = delta.cwiseProduct((tape.pre[l].array() > 0.0).cast<double>().matrix());
    const Matrix& prev = l == 0 ? tape.input : tape.post[l - 1];
    res.grads[l].weight = delta * prev.transpose();
    res.grads[l].bias = delta.rowwise().sum();
    delta = net.layers[l].weight.transpose() * delta;
  }
  res.input_grad = std::move(delta);
  return res;
}

// --- squashed Gaussian policy ------------------------------------------------

inline constexpr double kLogScaleMin = -20.0;
inline constexpr double kLogScaleMax = 2.0;

inline double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }
inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

/// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh_sq(double u) noexcept {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

/// Positive scale from a raw head output, clamped to [e^-20, e^2]. The
/// derivative is zero where the clamp is active.
inline double policy_scale(double raw) noexcept {
  return std::clamp(softplus(raw), std::exp(kLogScaleMin), std::exp(kLogScaleMax));
}
inline double policy_scale_derivative(double raw) noexcept {
  const double s = softplus(raw);
  return (s < std::exp(kLogScaleMin) || s > std::exp(kLogScaleMax)) ? 0.0 : sigmoid(raw);
}

/// Batched reparameterised sample. The actor output stacks location rows
/// [0, A) over raw-scale rows [A, 2A).
struct PolicyBatch {
  Matrix location;
  Matrix raw_scale;
  Matrix scale;
  Matrix noise;
  Matrix pre_tanh;
  Matrix action;
  RowVector log_prob;
};

inline PolicyBatch squash(const Matrix& actor_output, const Matrix& noise) {
  const Eigen::Index a_dim = actor_output.rows() / 2;
  if (actor_output.rows() != 2 * a_dim || noise.rows() != a_dim || noise.cols() != actor_output.cols())
    throw UsageError("squash: actor output / noise shape mismatch");
  PolicyBatch p;
  p.location = actor_output.topRows(a_dim);
  p.raw_scale = actor_output.bottomRows(a_dim);
  p.scale = p.raw_scale.unaryExpr([](double r) { return policy_scale(r); });
  p.noise = noise;
  p.pre_tanh = p.location + p.scale.cwiseProduct(noise);
  p.action = p.pre_tanh.array().tanh().matrix();
  p.log_prob = RowVector::Zero(actor_output.cols());
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < actor_output.cols(); ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < a_dim; ++i) {
      const double e = noise(i, j);
      lp += -0.5 * e * e - std::log(p.scale(i, j)) - half_log_two_pi - log_one_minus_tanh_sq(p.pre_tanh(i, j));
    }
    p.log_prob(j) = lp;
  }
  return p;
}

/// dLoss/d(actor output) for a loss depending on the sampled action and its
/// log-probability, both through the reparameterisation u = mu + sigma * eps.
inline Matrix squash_backward(const PolicyBatch& p, const Matrix& d_action, const RowVector& d_log_prob) {
  const Eigen::Index a_dim = p.location.rows();
  Matrix g(2 * a_dim, p.location.cols());
  for (Eigen::Index j = 0; j < p.location.cols(); ++j) {
    for (Eigen::Index i = 0; i < a_dim; ++i) {
      const double a = p.action(i, j);
      const double dadu = std::exp(log_one_minus_tanh_sq(p.pre_tanh(i, j)));
      const double du = d_action(i, j) * dadu + d_log_prob(j) * 2.0 * a;
      const double d_scale = du * p.noise(i, j) - d_log_prob(j) / p.scale(i, j);
      g(i, j) = du;
      g(a_dim + i, j) = d_scale * policy_scale_derivative(p.raw_scale(i, j));
    }
  }
  return g;
}

/// Log-density of given pre-tanh values under the head (no reparameterisation),
/// with its gradient w.r.t. the actor output. Used by the on-policy baseline.
struct FixedSampleLogProb {
  RowVector log_prob;
  Matrix d_output;  // d log_prob / d actor output, per column
};

inline FixedSampleLogProb log_prob_of(const Matrix& actor_output, const Matrix& pre_tanh) {
  const Eigen::Index a_dim = actor_output.rows() / 2;
  FixedSampleLogProb r;
  r.log_prob = RowVector::Zero(actor_output.cols());
  r.d_output = Matrix::Zero(actor_output.rows(), actor_output.cols());
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < actor_output.cols(); ++j) {
    for (Eigen::Index i = 0; i < a_dim; ++i) {
      const double mu = actor_output(i, j);
      const double raw = actor_output(a_dim + i, j);
      const double s = policy_scale(raw);
      const double z = (pre_tanh(i, j) - mu) / s;
      r.log_prob(j) += -0.5 * z * z - std::log(s) - half_log_two_pi - log_one_minus_tanh_sq(pre_tanh(i, j));
      r.d_output(i, j) = z / s;
      r.d_output(a_dim + i, j) = (-1.0 / s + z * z / s) * policy_scale_derivative(raw);
    }
  }
  return r;
}

struct PolicySample {
  std::vector<double> normalized_action;
  double log_prob = 0.0;
  std::vector<double> mean_action;
  std::vector<double> pre_tanh;
};

/// One action for one state; `noise` is a standard-normal vector of length A.
inline PolicySample sample_policy(const DenseNet& actor, std::span<const double> state, std::span<const double> noise) {
  const Vector s = Eigen::Map<const Vector>(state.data(), static_cast<Eigen::Index>(state.size()));
  const Matrix out = forward(actor, Matrix(s)).output();
  const Matrix eps = Eigen::Map<const Matrix>(noise.data(), static_cast<Eigen::Index>(noise.size()), 1);
  const PolicyBatch p = squash(out, eps);
  PolicySample r;
  r.log_prob = p.log_prob(0);
  for (Eigen::Index i = 0; i < p.action.rows(); ++i) {
    r.normalized_action.push_back(p.action(i, 0));
    r.mean_action.push_back(std::tanh(p.location(i, 0)));
    r.pre_tanh.push_back(p.pre_tanh(i, 0));
  }
  return r;
}

// --- optimizer -----------------------------------------------------------

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const DenseNet& net, AdamConfig cfg) : cfg_(cfg), m_(zero_gradients(net)), v_(zero_gradients(net)) {}

  /// One bias-corrected step; throws TrainingError on non-finite gradients.
  void step(DenseNet& net, const Gradients& g) {
    if (g.size() != net.layers.size()) throw UsageError("Adam: gradient layout mismatch");
    for (const DenseLayer& l : g)
      if (!l.weight.allFinite() || !l.bias.allFinite()) throw TrainingError("Adam: non-finite gradient");
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
      param.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
    };
    for (std::size_t l = 0; l < g.size(); ++l) {
      update(net.layers[l].weight, m_[l].weight, v_[l].weight, g[l].weight);
      update(net.layers[l].bias, m_[l].bias, v_[l].bias, g[l].bias);
    }
  }

  const AdamConfig& config() const noexcept { return cfg_; }
  long steps() const noexcept { return steps_; }

  nlohmann::json to_json() const {
    DenseNet m, v;
    m.layers = m_;
    v.layers = v_;
    return {{"lr", cfg_.lr}, {"beta1", cfg_.beta1}, {"beta2", cfg_.beta2}, {"eps", cfg_.eps},
            {"steps", steps_}, {"m", m.flatten()},  {"v", v.flatten()}};
  }

  static Adam from_json(const nlohmann::json& j, const DenseNet& net) {
    Adam a(net, {j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                 j.at("eps").get<double>()});
    a.steps_ = j.at("steps").get<long>();
    DenseNet m = DenseNet::zeros(net.dims), v = DenseNet::zeros(net.dims);
    m.assign(j.at("m").get<std::vector<double>>());
    v.assign(j.at("v").get<std::vector<double>>());
    a.m_ = std::move(m.layers);
    a.v_ = std::move(v.layers);
    return a;
  }

 private:
  AdamConfig cfg_;
  Gradients m_;
  Gradients v_;
  long steps_ = 0;
};

/// Adam for a single scalar parameter (the entropy temperature).
class ScalarAdam {
 public:
  ScalarAdam() = default;
  explicit ScalarAdam(AdamConfig cfg) : cfg_(cfg) {}

  double step(double param, double grad) {
    if (!std::isfinite(grad)) throw TrainingError("Adam: non-finite gradient");
    ++steps_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad * grad;
    const double mh = m_ / (1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_)));
    const double vh = v_ / (1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_)));
    return param - cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
  }

  nlohmann::json to_json() const {
    return {{"lr", cfg_.lr}, {"beta1", cfg_.beta1}, {"beta2", cfg_.beta2}, {"eps", cfg_.eps},
            {"steps", steps_}, {"m", m_},          {"v", v_}};
  }
  static ScalarAdam from_json(const nlohmann::json& j) {
    ScalarAdam a({j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                  j.at("eps").get<double>()});
    a.steps_ = j.at("steps").get<long>();
    a.m_ = j.at("m").get<double>();
    a.v_ = j.at("v").get<double>();
    return a;
  }

 private:
  AdamConfig cfg_;
  double m_ = 0.0;
  double v_ = 0.0;
  long steps_ = 0;
};

inline nlohmann::json to_json(const DenseNet& net) { return {{"dims", net.dims}, {"params", net.flatten()}}; }

inline DenseNet dense_net_from_json(const nlohmann::json& j) {
  DenseNet net = DenseNet::zeros(j.at("dims").get<std::vector<std::size_t>>());
  net.assign(j.at("params").get<std::vector<double>>());
  return net;
}

}  // namespace uavbc
