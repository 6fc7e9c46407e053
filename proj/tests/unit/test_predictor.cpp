#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "exwarp/errors.hpp"
#include "exwarp/predictor.hpp"
#include "helpers.hpp"
#include "qnet_oracle.hpp"

using namespace exwarp;

namespace {

QNetwork constant_net(float warp, float extrapolate) {
  QNetwork net;
  net.layers().back().bias << warp, extrapolate;
  return net;
}

StateVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 2.0);
  StateVector s;
  for (int i = 0; i < kStateWidth; ++i) s.set(i, d(rng));
  return s;
}

}  // namespace

TEST_CASE("zero network outputs zeros") {
  const QNetwork net;
  CHECK(net.shapes_valid());
  CHECK(net.parameter_count() == 44 * 128 + 128 + 128 * 256 + 256 + 256 * 128 + 128 + 128 * 2 + 2);
  std::mt19937_64 rng(1);
  const auto out = net.forward(random_state(rng));
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 0.0f);
}

TEST_CASE("hand-wired network propagates the first input to the warp output") {
  QNetwork net;
  for (auto& l : net.layers()) l.weights(0, 0) = 1.0f;
  StateVector s;
  s.set(0, 1.75);
  s.set(5, 3.0);
  const auto out = net.forward(s);
  CHECK(out[0] == doctest::Approx(1.75));
  CHECK(out[1] == 0.0f);
}

TEST_CASE("forward pass agrees with a scalar-loop oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const QNetwork net = QNetwork::initialized(1000 + trial);
    const StateVector s = random_state(rng);
    const auto got = net.forward(s);
    const auto want = oracle::forward(net, oracle::state_values(s));
    CHECK(std::abs(got[0] - want[0]) <= 1e-5);
    CHECK(std::abs(got[1] - want[1]) <= 1e-5);
  }
}

TEST_CASE("non-finite parameters poison the network") {
  QNetwork net = QNetwork::initialized(3);
  net.layers()[1].weights(4, 7) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(net.forward(StateVector{}), PoisonedNetworkError);
}

TEST_CASE("action selection") {
  std::mt19937_64 rng(5);
  CHECK(select_action(constant_net(2, 1), StateVector{}, 0.0, rng) == Action::warp);
  CHECK(select_action(constant_net(1, 1), StateVector{}, 0.0, rng) == Action::warp);
  CHECK(select_action(constant_net(1, 2), StateVector{}, 0.0, rng) == Action::extrapolate);

  auto sequence = [](std::uint64_t seed) {
    std::mt19937_64 r(seed);
    const QNetwork net = constant_net(5, 0);
    std::vector<Action> out;
    for (int i = 0; i < 64; ++i) out.push_back(select_action(net, StateVector{}, 1.0, r));
    return out;
  };
  const auto a = sequence(77);
  CHECK(a == sequence(77));
  CHECK(std::count(a.begin(), a.end(), Action::extrapolate) > 0);
  CHECK_THROWS_AS(select_action(constant_net(0, 0), StateVector{}, 1.5, rng), Error);
}

TEST_CASE("shifting both outputs leaves the greedy action unchanged") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    QNetwork net = QNetwork::initialized(50 + trial);
    const StateVector s = random_state(rng);
    const Action before = select_action(net, s, 0.0, rng);
    net.layers().back().bias.array() += 3.25f;
    CHECK(select_action(net, s, 0.0, rng) == before);
  }
}

TEST_CASE("TD loss definition") {
  std::mt19937_64 rng(2);
  const QNetwork net = constant_net(0.3f, -0.4f);
  std::vector<Experience> exact = oracle::random_batch(6, rng);
  for (auto& e : exact) e.reward = e.action == Action::warp ? 0.3f : -0.4f;
  CHECK(std::abs(td_loss(net, net, exact, 0.0)) <= 1e-12);

  std::vector<Experience> one = oracle::random_batch(1, rng);
  one[0].terminal = false;
  one[0].action = Action::extrapolate;
  one[0].reward = 0.5;
  const QNetwork target = constant_net(1.0f, 2.0f);
  const double want = std::pow(0.5 + 0.9 * 2.0 - (-0.4), 2);
  CHECK(td_loss(net, target, one, 0.9) == doctest::Approx(want).epsilon(1e-6));
  CHECK_THROWS_AS(td_loss(net, target, std::span<const Experience>{}, 0.9), Error);
}

TEST_CASE("TD loss matches the scalar oracle on random batches") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const QNetwork net = QNetwork::initialized(trial);
    const QNetwork target = QNetwork::initialized(trial + 500);
    const auto batch = oracle::random_batch(1 + trial % 9, rng);
    const double got = td_loss(net, target, batch, 0.95);
    CHECK(std::abs(got - oracle::td_loss(net, target, batch, 0.95)) <= 1e-6 * std::max(1.0, got));
  }
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(4);
  const auto net = QNetwork::initialized(11).cast<double>();
  const auto target = QNetwork::initialized(12).cast<double>();
  const auto batch = oracle::random_batch(5, rng);
  const oracle::GradientCheck check = oracle::finite_difference_check(net, target, batch, 0.95);
  CHECK(check.parameters == net.parameter_count());
  CHECK(check.max_relative_error <= 1e-3);
}

TEST_CASE("SGD on a frozen batch lowers the loss every step") {
  std::mt19937_64 rng(6);
  QNetwork net = QNetwork::initialized(8);
  const QNetwork frozen_target = net;
  auto batch = oracle::random_batch(16, rng);
  for (auto& e : batch) {
    e.terminal = true;
    e.reward = 0.5 * e.state.value(0) - 0.25;  // learnable from the input
  }
  double previous = td_loss(net, frozen_target, batch, 0.0);
  const double first = previous;
  for (int step = 0; step < 100; ++step) {
    const auto eval = evaluate_td(net, frozen_target, std::span<const Experience>(batch), 0.0);
    net.apply_sgd(eval.gradient, 1e-3f);
    const double now = td_loss(net, frozen_target, batch, 0.0);
    CHECK(now < previous);
    previous = now;
  }
  CHECK(previous < first);
}

TEST_CASE("train_step is deterministic and syncs the target network") {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.target_sync_every = 3;
  std::mt19937_64 data_rng(1);
  ReplayBuffer replay(32);
  for (auto& e : oracle::random_batch(20, data_rng)) replay.push(e);

  auto run = [&](std::uint64_t seed) {
    QNetwork net = QNetwork::initialized(2), target = net;
    std::mt19937_64 rng(seed);
    std::size_t step = 0;
    std::vector<QNetwork> trajectory;
    for (int i = 0; i < 6; ++i) {
      train_step(net, target, replay, cfg, rng, step);
      trajectory.push_back(net);
      if (step % 3 == 0) CHECK(target == net);
      else CHECK_FALSE(target == net);
    }
    CHECK(step == 6);
    return trajectory;
  };
  CHECK(run(42) == run(42));

  ReplayBuffer small(32);
  small.push(Experience{});
  QNetwork net, target;
  std::mt19937_64 rng(1);
  std::size_t step = 0;
  CHECK_THROWS_AS(train_step(net, target, small, cfg, rng, step), Error);
}

TEST_CASE("replay buffer is a ring") {
  ReplayBuffer r(3);
  for (int i = 0; i < 5; ++i) {
    Experience e;
    e.reward = i;
    r.push(e);
  }
  CHECK(r.size() == 3);
  CHECK(r[0].reward == 3);
  CHECK(r[1].reward == 4);
  CHECK(r[2].reward == 2);
  CHECK_THROWS_AS(ReplayBuffer(0), Error);
}

TEST_CASE("training config validation and epsilon schedule") {
  TrainConfig cfg;
  cfg.validate();
  CHECK(cfg.epsilon_at(0) == 1.0);
  CHECK(cfg.epsilon_at(750) == doctest::Approx(0.525));
  CHECK(cfg.epsilon_at(1500) == doctest::Approx(0.05));
  CHECK(cfg.epsilon_at(3000) == doctest::Approx(0.05));
  cfg.gamma = 1.0;
  cfg.epsilon_end = 1.5;
  cfg.batch_size = 0;
  try {
    cfg.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 3);
  }
}

TEST_CASE("reward examples and antisymmetry") {
  std::mt19937_64 rng(17);
  const Frame gt = testing::random_frame(32, 32, rng);
  const Frame a = testing::random_frame(32, 32, rng);
  Frame b = gt;
  b.pixels(3, 3) = {0, 0, 0};
  CHECK(compute_reward(a, a, gt, false) == 0.0);
  CHECK(compute_reward(a, a, gt, true) == doctest::Approx(-0.1));
  CHECK(compute_reward(gt, a, gt, false) > 0.0);
  CHECK(compute_reward(a, b, gt, false) == doctest::Approx(-compute_reward(b, a, gt, false)));
  CHECK_THROWS_AS(compute_reward(a, Frame(16, 16), gt, false), DimensionError);
}

TEST_CASE("checkpoint round trip and corruption") {
  const QNetwork net = QNetwork::initialized(99);
  const auto bytes = encode_checkpoint(net);
  CHECK(decode_checkpoint(bytes) == net);
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  std::vector<std::uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);
  std::vector<std::uint8_t> trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);

  const auto path = testing::scratch_dir("checkpoint") / "net.exwq";
  save_checkpoint(path, net);
  CHECK(load_checkpoint(path) == net);
}
