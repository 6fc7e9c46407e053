#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "exwarp/errors.hpp"
#include "exwarp/features.hpp"
#include "exwarp/grid.hpp"

namespace exwarp {

enum class Action : std::uint8_t { warp = 0, extrapolate = 1 };
inline constexpr int kActionCount = 2;

std::string to_string(Action a);

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <class Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;  // fan_in x fan_out; y = x W + b
  RowVectorX<Scalar> bias;
};

template <class Scalar>
struct ForwardCache {
  // inputs[0] is the network input; inputs[k] is the post-ReLU input of layer k.
  std::vector<MatrixX<Scalar>> inputs;
};

/// 44 -> 128 -> 256 -> 128 -> 2 MLP, ReLU after the first three layers, linear head.
/// Output column 0 is the warp reward, column 1 the extrapolate reward.
template <class Scalar>
class BasicQNetwork {
 public:
  static constexpr std::array<int, 5> kWidths{kStateWidth, 128, 256, 128, kActionCount};
  static constexpr int kLayerCount = 4;

  /// All-zero parameters with the canonical shapes.
  BasicQNetwork() {
    layers_.resize(kLayerCount);
    for (int k = 0; k < kLayerCount; ++k) {
      layers_[k].weights = MatrixX<Scalar>::Zero(kWidths[k], kWidths[k + 1]);
      layers_[k].bias = RowVectorX<Scalar>::Zero(kWidths[k + 1]);
    }
  }

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static BasicQNetwork initialized(std::uint64_t seed) {
    BasicQNetwork net;
    std::mt19937_64 rng(seed);
    for (auto& layer : net.layers_) {
      const double limit = std::sqrt(6.0 / double(layer.weights.rows() + layer.weights.cols()));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
        layer.weights.data()[i] = static_cast<Scalar>(dist(rng));
    }
    return net;
  }

  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  /// Visits every parameter in checkpoint order (per layer: weights row-major, then bias).
  template <class F>
  void for_each_parameter(F&& f) {
    for (auto& l : layers_) {
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) f(l.weights.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) f(l.bias.data()[i]);
    }
  }
  template <class F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : layers_) {
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) f(l.weights.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) f(l.bias.data()[i]);
    }
  }

  bool all_finite() const {
    bool ok = true;
    for_each_parameter([&](Scalar v) { ok = ok && std::isfinite(v); });
    return ok;
  }

  void check_finite() const {
    if (!all_finite()) throw PoisonedNetworkError("Q-network holds a non-finite parameter");
  }

  bool shapes_valid() const {
    if (layers_.size() != kLayerCount) return false;
    for (int k = 0; k < kLayerCount; ++k) {
      const auto& l = layers_[static_cast<std::size_t>(k)];
      if (l.weights.rows() != kWidths[k] || l.weights.cols() != kWidths[k + 1] ||
          l.bias.size() != kWidths[k + 1])
        return false;
    }
    return true;
  }

  /// Batch forward: inputs is batch x 44, result batch x 2.
  MatrixX<Scalar> forward_batch(const MatrixX<Scalar>& inputs, ForwardCache<Scalar>* cache = nullptr) const {
    if (inputs.cols() != kWidths[0]) throw DimensionError("Q-network input must have 44 columns");
    if (cache) {
      cache->inputs.clear();
      cache->inputs.push_back(inputs);
    }
    MatrixX<Scalar> x = inputs;
    for (int k = 0; k < kLayerCount; ++k) {
      const auto& l = layers_[static_cast<std::size_t>(k)];
      MatrixX<Scalar> z = x * l.weights;
      z.rowwise() += l.bias;
      if (k + 1 < kLayerCount) {
        z = z.cwiseMax(Scalar(0));
        if (cache) cache->inputs.push_back(z);
      }
      x = std::move(z);
    }
    return x;
  }

  std::array<Scalar, kActionCount> forward(std::span<const Scalar, kStateWidth> state) const {
    check_finite();
    MatrixX<Scalar> in(1, kStateWidth);
    for (int i = 0; i < kStateWidth; ++i) in(0, i) = state[static_cast<std::size_t>(i)];
    const MatrixX<Scalar> out = forward_batch(in);
    return {out(0, 0), out(0, 1)};
  }

  std::array<Scalar, kActionCount> forward(const StateVector& state) const {
    std::array<Scalar, kStateWidth> in{};
    for (int i = 0; i < kStateWidth; ++i) in[static_cast<std::size_t>(i)] = static_cast<Scalar>(state.value(i));
    return forward(std::span<const Scalar, kStateWidth>(in));
  }

  /// Parameter gradients given dLoss/dOutput (batch x 2) and the matching forward cache.
  BasicQNetwork backward(const ForwardCache<Scalar>& cache, const MatrixX<Scalar>& output_grad) const {
    BasicQNetwork grad;
    MatrixX<Scalar> delta = output_grad;
    for (int k = kLayerCount - 1; k >= 0; --k) {
      const auto& x = cache.inputs[static_cast<std::size_t>(k)];
      auto& g = grad.layers_[static_cast<std::size_t>(k)];
      g.weights.noalias() = x.transpose() * delta;
      g.bias = delta.colwise().sum();
      if (k > 0) {
        MatrixX<Scalar> upstream = delta * layers_[static_cast<std::size_t>(k)].weights.transpose();
        // ReLU derivative: pass where the activation was positive.
        delta = (x.array() > Scalar(0)).select(upstream, Scalar(0));
      }
    }
    return grad;
  }

  /// this -= rate * gradient
  void apply_sgd(const BasicQNetwork& gradient, Scalar rate) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      layers_[k].weights -= rate * gradient.layers_[k].weights;
      layers_[k].bias -= rate * gradient.layers_[k].bias;
    }
  }

  template <class T>
  BasicQNetwork<T> cast() const {
    BasicQNetwork<T> out;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      out.layers()[k].weights = layers_[k].weights.template cast<T>();
      out.layers()[k].bias = layers_[k].bias.template cast<T>();
    }
    return out;
  }

  bool operator==(const BasicQNetwork& other) const {
    for (std::size_t k = 0; k < layers_.size(); ++k)
      if (layers_[k].weights != other.layers_[k].weights || layers_[k].bias != other.layers_[k].bias)
        return false;
    return true;
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
};

using QNetwork = BasicQNetwork<float>;

struct Experience {
  StateVector state;
  Action action = Action::warp;
  double reward = 0.0;
  StateVector next_state;
  bool terminal = false;
};

template <class Scalar>
MatrixX<Scalar> decode_states(std::span<const Experience> batch, bool next) {
  MatrixX<Scalar> m(static_cast<Eigen::Index>(batch.size()), kStateWidth);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const StateVector& s = next ? batch[i].next_state : batch[i].state;
    for (int j = 0; j < kStateWidth; ++j) m(static_cast<Eigen::Index>(i), j) = static_cast<Scalar>(s.value(j));
  }
  return m;
}

template <class Scalar>
struct TdEvaluation {
  double loss = 0.0;
  BasicQNetwork<Scalar> gradient;
  MatrixX<Scalar> q;  // batch x 2 online predictions
};

/// Mean over the batch of (r + gamma * max_a' Q_target(s', a') - Q(s, a))^2; terminal
/// transitions drop the bootstrap term. Gradient is with respect to `net` only.
template <class Scalar>
TdEvaluation<Scalar> evaluate_td(const BasicQNetwork<Scalar>& net, const BasicQNetwork<Scalar>& target,
                                 std::span<const Experience> batch, double gamma) {
  if (batch.empty()) throw Error("TD loss needs a non-empty batch");
  ForwardCache<Scalar> cache;
  TdEvaluation<Scalar> out;
  out.q = net.forward_batch(decode_states<Scalar>(batch, false), &cache);
  const MatrixX<Scalar> next_q = target.forward_batch(decode_states<Scalar>(batch, true));
  const auto n = static_cast<Eigen::Index>(batch.size());
  MatrixX<Scalar> output_grad = MatrixX<Scalar>::Zero(n, kActionCount);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Experience& e = batch[static_cast<std::size_t>(i)];
    double y = e.reward;
    if (!e.terminal) y += gamma * static_cast<double>(std::max(next_q(i, 0), next_q(i, 1)));
    const auto a = static_cast<Eigen::Index>(e.action);
    const double err = y - static_cast<double>(out.q(i, a));
    sum += err * err;
    output_grad(i, a) = static_cast<Scalar>(-2.0 * err / static_cast<double>(n));
  }
  out.loss = sum / static_cast<double>(n);
  out.gradient = net.backward(cache, output_grad);
  return out;
}

double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Experience> batch,
               double gamma);

/// Argmax with ties toward warp, or a uniform action with probability epsilon.
Action select_action(const QNetwork& net, const StateVector& state, double epsilon,
                     std::mt19937_64& rng);
Action greedy_action(std::array<float, kActionCount> rewards);

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 1e-3;
  int batch_size = 64;
  std::size_t replay_capacity = 10000;
  int target_sync_every = 200;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_anneal_fraction = 0.5;
  std::size_t train_points = 3000;
  std::size_t test_points = 1000;
  int updates_per_point = 8;
  int log_every = 50;
  std::uint64_t rng_seed = 1;

  void validate() const;
  /// Linear anneal over the first `epsilon_anneal_fraction` of the collected points.
  double epsilon_at(std::size_t point) const;
};

/// Fixed-capacity ring buffer of experiences.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& operator[](std::size_t i) const { return items_[i]; }
  /// Uniform sampling with replacement.
  std::vector<Experience> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Experience> items_;
};

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  double mean_q_warp = 0.0;
  double mean_q_extrapolate = 0.0;
};

struct TrainStepResult {
  double loss = 0.0;
  double mean_q_warp = 0.0;
  double mean_q_extrapolate = 0.0;
};

/// One SGD step on a sampled batch. `step` counts completed steps and drives target sync.
TrainStepResult train_step(QNetwork& net, QNetwork& target, const ReplayBuffer& replay,
                           const TrainConfig& config, std::mt19937_64& rng, std::size_t& step);

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows);

struct RewardConfig {
  double psnr_scale = 1.0 / 48.13;
  double drop_penalty = -0.1;
  /// Charged to extrapolate actions that consume extrapolation work (not d3's no-new-frame).
  double extrapolate_cost = 0.1;
};

/// psnr_scale * dPSNR + dSSIM (+ drop_penalty if dropped), deltas of chosen minus alternative
/// against the ground truth.
double compute_reward(const Frame& chosen, const Frame& alternative, const Frame& ground_truth,
                      bool dropped, const RewardConfig& config = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const QNetwork& net);
QNetwork load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const QNetwork& net);
QNetwork decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace exwarp
