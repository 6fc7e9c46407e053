#pragma once

// Independent Q-network oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "exwarp/predictor.hpp"

namespace oracle {

/// Plain nested loops over the layers: y = relu(x W + b) for all but the last layer.
template <class Scalar>
std::vector<double> forward(const exwarp::BasicQNetwork<Scalar>& net, std::span<const double> input) {
  std::vector<double> x(input.begin(), input.end());
  const auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    std::vector<double> y(static_cast<std::size_t>(l.weights.cols()));
    for (Eigen::Index j = 0; j < l.weights.cols(); ++j) {
      double s = static_cast<double>(l.bias(j));
      for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
        s += x[static_cast<std::size_t>(i)] * static_cast<double>(l.weights(i, j));
      y[static_cast<std::size_t>(j)] = (k + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    x = std::move(y);
  }
  return x;
}

inline std::vector<double> state_values(const exwarp::StateVector& s) {
  std::vector<double> v(exwarp::kStateWidth);
  for (int i = 0; i < exwarp::kStateWidth; ++i) v[static_cast<std::size_t>(i)] = s.value(i);
  return v;
}

/// Scalar-loop TD loss.
template <class Scalar>
double td_loss(const exwarp::BasicQNetwork<Scalar>& net, const exwarp::BasicQNetwork<Scalar>& target,
               std::span<const exwarp::Experience> batch, double gamma) {
  double sum = 0.0;
  for (const exwarp::Experience& e : batch) {
    double y = e.reward;
    if (!e.terminal) {
      const auto next = forward(target, state_values(e.next_state));
      y += gamma * std::max(next[0], next[1]);
    }
    const auto q = forward(net, state_values(e.state));
    const double err = y - q[static_cast<std::size_t>(e.action)];
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size());
}

inline std::vector<exwarp::Experience> random_batch(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(0.0, 2.0);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<exwarp::Experience> batch(n);
  for (auto& e : batch) {
    for (int i = 0; i < exwarp::kStateWidth; ++i) {
      e.state.set(i, value(rng));
      e.next_state.set(i, value(rng));
    }
    e.action = coin(rng) ? exwarp::Action::extrapolate : exwarp::Action::warp;
    e.reward = reward(rng);
    e.terminal = coin(rng);
  }
  return batch;
}

struct GradientCheck {
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t refined = 0;  // parameters whose step had to shrink to avoid a ReLU kink
};

/// Central differences of the TD loss for every parameter of a double network. Only the
/// layers downstream of a perturbed parameter are recomputed; the loss itself is evaluated
/// from scratch on those activations, independent of the analytic backward pass.
inline GradientCheck finite_difference_check(const exwarp::BasicQNetwork<double>& net,
                                             const exwarp::BasicQNetwork<double>& target,
                                             std::span<const exwarp::Experience> batch, double gamma,
                                             double step = 1e-4) {
  using Mat = exwarp::MatrixX<double>;
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());

  std::vector<double> y(batch.size());
  Mat input(n, exwarp::kStateWidth);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto s = state_values(batch[i].state);
    for (int j = 0; j < exwarp::kStateWidth; ++j) input(static_cast<Eigen::Index>(i), j) = s[static_cast<std::size_t>(j)];
    y[i] = batch[i].reward;
    if (!batch[i].terminal) {
      const auto next = forward(target, state_values(batch[i].next_state));
      y[i] += gamma * std::max(next[0], next[1]);
    }
  }
  auto loss_of = [&](const Mat& out) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double err = y[static_cast<std::size_t>(i)] - out(i, static_cast<Eigen::Index>(batch[static_cast<std::size_t>(i)].action));
      s += err * err;
    }
    return s / static_cast<double>(n);
  };

  std::size_t result_refined = 0;

  // pre[k] = x_k W_k + b_k, x[k] = input of layer k
  std::vector<Mat> pre(depth), x(depth);
  x[0] = input;
  for (std::size_t k = 0; k < depth; ++k) {
    pre[k] = x[k] * layers[k].weights;
    pre[k].rowwise() += layers[k].bias;
    if (k + 1 < depth) x[k + 1] = pre[k].cwiseMax(0.0);
  }

  // Loss after adding `dz` to column c of layer k's pre-activation. `crossed` is set when
  // any ReLU input downstream changes sign, i.e. the difference straddles a kink.
  auto perturbed_loss = [&](std::size_t k, Eigen::Index c, const Eigen::VectorXd& dz, bool& crossed) {
    auto flips = [](const auto& a, const auto& b) {
      return ((a.array() > 0.0) != (b.array() > 0.0)).any();
    };
    if (k + 1 == depth) {
      Mat out = pre[k];
      out.col(c) += dz;
      return loss_of(out);
    }
    const Eigen::VectorXd moved = pre[k].col(c) + dz;
    crossed = crossed || flips(moved, pre[k].col(c));
    const Eigen::VectorXd before = pre[k].col(c).cwiseMax(0.0);
    const Eigen::VectorXd after = moved.cwiseMax(0.0);
    Mat z = pre[k + 1] + (after - before) * layers[k + 1].weights.row(c);
    for (std::size_t m = k + 2; m < depth; ++m) {
      crossed = crossed || flips(z, pre[m - 1]);
      Mat next = z.cwiseMax(0.0) * layers[m].weights;
      next.rowwise() += layers[m].bias;
      z = std::move(next);
    }
    return loss_of(z);
  };

  // Central difference at `step`, shrunk tenfold (down to step/1000) while it straddles a kink.
  auto central = [&](std::size_t k, Eigen::Index c, const Eigen::VectorXd& direction) {
    double h = step;
    for (int attempt = 0;; ++attempt, h /= 10) {
      bool crossed = false;
      const double plus = perturbed_loss(k, c, h * direction, crossed);
      const double minus = perturbed_loss(k, c, -h * direction, crossed);
      if (!crossed || attempt == 3) {
        if (attempt > 0) ++result_refined;
        return (plus - minus) / (2 * h);
      }
    }
  };

  const auto analytic = exwarp::evaluate_td(net, target, batch, gamma).gradient;
  GradientCheck result;
  std::size_t index = 0;
  auto compare = [&](double a, double numeric) {
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = index;
    }
    ++index;
  };
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& g = analytic.layers()[k];
    for (Eigen::Index r = 0; r < layers[k].weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layers[k].weights.cols(); ++c)
        compare(g.weights(r, c), central(k, c, x[k].col(r)));
    for (Eigen::Index c = 0; c < layers[k].bias.size(); ++c) compare(g.bias(c), central(k, c, ones));
  }
  result.refined = result_refined;
  result.parameters = index;
  return result;
}

}  // namespace oracle
