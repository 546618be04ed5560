#pragma once

// Dense networks with hand-written reverse mode, the diagonal Gaussian policy
// head, Adam, per-layer freezing and agent checkpoints.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "foilrl/random.hpp"

namespace foilrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Forward activations kept for backward(); one column per sample.
struct MlpCache {
  std::vector<Matrix> activations;  // input, then the output of every layer
  bool valid = false;
};

struct MlpGrads {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  void set_zero();
};

class Mlp {
 public:
  Mlp() = default;
  // tanh on every layer except the last, which is linear.
  explicit Mlp(const std::vector<int>& sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  DenseLayer& layer(std::size_t i) { return layers_[i]; }
  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
  std::size_t num_parameters() const;

  Vector forward(const Vector& x) const;
  // Columns of `x` are samples.
  Matrix forward_batch(const Matrix& x, MlpCache* cache = nullptr) const;

  // Accumulates parameter gradients of sum(upstream .* output) into `grads`
  // and returns the input gradient. Layers flagged in `frozen` get none.
  Matrix backward(const MlpCache& cache, const Matrix& upstream, MlpGrads& grads,
                  const std::vector<bool>& frozen = {}) const;

  MlpGrads zero_grads() const;

  // Orthogonal weights with gain sqrt(2) on hidden layers and `head_gain`
  // on the output layer; zero biases.
  void init_orthogonal(Rng& rng, double head_gain);
  void init_layer_orthogonal(std::size_t i, Rng& rng, double gain);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

double clamp_log_std(double s);
// Diagonal Gaussian log density; log-stds are clamped first.
double gaussian_log_prob(const Vector& mean, const Vector& log_std, const Vector& x);
// sum(s + 0.5 ln(2 pi e)) over the clamped log-stds.
double gaussian_entropy(const Vector& log_std);
Vector gaussian_sample(const Vector& mean, const Vector& log_std, Rng& rng);

struct PolicySample {
  Vector action;
  double log_prob = 0.0;
};
PolicySample gaussian_policy(const Vector& mean, const Vector& log_std, Rng& rng);

// Which layers may change. The log-std vector belongs to the last actor layer.
struct FreezeMask {
  std::vector<bool> actor;
  std::vector<bool> critic;

  static FreezeMask none(std::size_t actor_layers, std::size_t critic_layers);
  bool log_std_frozen() const { return !actor.empty() && actor.back(); }
  bool any() const;
  friend bool operator==(const FreezeMask&, const FreezeMask&) = default;
};

struct AgentGrads {
  MlpGrads actor;
  Vector log_std;
  MlpGrads critic;

  void set_zero();
  double squared_norm() const;
  void scale(double f);
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<Vector> m;
  std::vector<Vector> v;
};

struct AdamConfig {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline constexpr int kObservationSize = 18;
inline constexpr int kActionSize = 18;

class Agent {
 public:
  Agent() = default;
  Agent(const std::vector<int>& hidden, Rng& rng);

  Mlp actor;
  Vector log_std;
  Mlp critic;

  AgentGrads zero_grads() const;

  // Parameter blocks in a fixed order: actor (W, b) per layer, log-std,
  // critic (W, b) per layer.
  std::vector<Eigen::Map<Vector>> blocks();
  std::vector<bool> frozen_blocks(const FreezeMask& mask) const;
  std::vector<Eigen::Map<const Vector>> grad_blocks(const AgentGrads& g) const;

  AdamState fresh_adam() const;
  // Adam with bias correction; frozen blocks are skipped entirely.
  void adam_step(const AgentGrads& grads, AdamState& state, const AdamConfig& cfg,
                 const FreezeMask& mask);

  Vector act_mean(const Vector& obs) const { return actor.forward(obs); }
  double value(const Vector& obs) const { return critic.forward(obs)(0); }

  friend bool operator==(const Agent& a, const Agent& b);
};

std::vector<int> default_hidden_sizes();

}  // namespace foilrl
