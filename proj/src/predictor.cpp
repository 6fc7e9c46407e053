#include "exwarp/predictor.hpp"

#include <cstring>
#include <ostream>
#include <sstream>

#include "exwarp/dataset.hpp"
#include "exwarp/metrics.hpp"

namespace exwarp {

std::string to_string(Action a) { return a == Action::warp ? "warp" : "extrapolate"; }

double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Experience> batch,
               double gamma) {
  return evaluate_td(net, target, batch, gamma).loss;
}

Action greedy_action(std::array<float, kActionCount> rewards) {
  return rewards[1] > rewards[0] ? Action::extrapolate : Action::warp;
}

Action select_action(const QNetwork& net, const StateVector& state, double epsilon,
                     std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("epsilon must lie in [0, 1]");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, kActionCount - 1);
      return static_cast<Action>(pick(rng));
    }
  }
  return greedy_action(net.forward(state));
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (!(gamma >= 0.0 && gamma < 1.0)) bad.push_back("train.gamma must lie in [0, 1)");
  if (!(learning_rate > 0.0)) bad.push_back("train.learning_rate must be positive");
  if (batch_size <= 0) bad.push_back("train.batch_size must be positive");
  if (replay_capacity < static_cast<std::size_t>(std::max(batch_size, 1)))
    bad.push_back("train.replay_capacity must hold at least one batch");
  if (target_sync_every <= 0) bad.push_back("train.target_sync_every must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) bad.push_back("train.epsilon_start must lie in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) bad.push_back("train.epsilon_end must lie in [0, 1]");
  if (!(epsilon_anneal_fraction > 0.0 && epsilon_anneal_fraction <= 1.0))
    bad.push_back("train.epsilon_anneal_fraction must lie in (0, 1]");
  if (train_points == 0) bad.push_back("train.train_points must be positive");
  if (test_points == 0) bad.push_back("train.test_points must be positive");
  if (updates_per_point <= 0) bad.push_back("train.updates_per_point must be positive");
  if (log_every <= 0) bad.push_back("train.log_every must be positive");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

double TrainConfig::epsilon_at(std::size_t point) const {
  const double horizon = epsilon_anneal_fraction * static_cast<double>(train_points);
  const double u = horizon > 0.0 ? std::min(1.0, static_cast<double>(point) / horizon) : 1.0;
  return epsilon_start + u * (epsilon_end - epsilon_start);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("replay capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
  } else {
    items_[next_] = std::move(e);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Experience> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  if (items_.empty()) throw Error("cannot sample an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Experience> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) batch.push_back(items_[pick(rng)]);
  return batch;
}

TrainStepResult train_step(QNetwork& net, QNetwork& target, const ReplayBuffer& replay,
                           const TrainConfig& config, std::mt19937_64& rng, std::size_t& step) {
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  if (replay.size() < batch_size)
    throw Error("replay buffer underfull: " + std::to_string(replay.size()) + " < batch size " +
                std::to_string(batch_size));
  const std::vector<Experience> batch = replay.sample(batch_size, rng);
  const TdEvaluation<float> eval = evaluate_td(net, target, batch, config.gamma);
  net.apply_sgd(eval.gradient, static_cast<float>(config.learning_rate));
  net.check_finite();
  ++step;
  if (step % static_cast<std::size_t>(config.target_sync_every) == 0) target = net;
  TrainStepResult r;
  r.loss = eval.loss;
  r.mean_q_warp = eval.q.col(0).template cast<double>().mean();
  r.mean_q_extrapolate = eval.q.col(1).template cast<double>().mean();
  return r;
}

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows) {
  out << "step,loss,epsilon,mean_q_warp,mean_q_extrapolate\n";
  char line[256];
  for (const TrainLogRow& r : rows) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.6f,%.9g,%.9g\n", r.step, r.loss, r.epsilon,
                  r.mean_q_warp, r.mean_q_extrapolate);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Reward

double compute_reward(const Frame& chosen, const Frame& alternative, const Frame& ground_truth,
                      bool dropped, const RewardConfig& config) {
  if (!chosen.same_size(alternative) || !chosen.same_size(ground_truth))
    throw DimensionError("reward frames differ in size");
  const double d_psnr = psnr(chosen, ground_truth) - psnr(alternative, ground_truth);
  const double d_ssim = ssim(chosen, ground_truth) - ssim(alternative, ground_truth);
  return config.psnr_scale * d_psnr + d_ssim + (dropped ? config.drop_penalty : 0.0);
}

// ---------------------------------------------------------------------------
// Checkpoint: "EXWQ", u32 version, u32 layer count, per layer (u32 rows, u32 cols,
// rows*cols float32 weights row-major, cols float32 biases). Little-endian.

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

void put_floats(std::vector<std::uint8_t>& out, const float* data, std::size_t n) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n * sizeof(float));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    read(&v, 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const QNetwork& net) {
  std::vector<std::uint8_t> out = {'E', 'X', 'W', 'Q'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.weights.rows()));
    put_u32(out, static_cast<std::uint32_t>(l.weights.cols()));
    put_floats(out, l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    put_floats(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

QNetwork decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "EXWQ", 4) != 0) throw FormatError("not a Q-network checkpoint");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint format version " + std::to_string(version) + " unsupported");
  const std::uint32_t count = in.u32();
  if (count != QNetwork::kLayerCount) throw FormatError("checkpoint has the wrong layer count");
  QNetwork net;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto& l = net.layers()[k];
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows != l.weights.rows() || cols != l.weights.cols())
      throw FormatError("checkpoint layer " + std::to_string(k) + " has shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    in.read(l.weights.data(), sizeof(float) * rows * cols);
    in.read(l.bias.data(), sizeof(float) * cols);
  }
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const QNetwork& net) {
  write_file_atomic(path, encode_checkpoint(net));
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace exwarp
