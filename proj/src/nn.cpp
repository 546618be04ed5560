#include "foilrl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foilrl/errors.hpp"

namespace foilrl {

void MlpGrads::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

Mlp::Mlp(const std::vector<int>& sizes) : sizes_(sizes) {
  FOILRL_REQUIRE(sizes.size() >= 2, ShapeError, "Mlp: need at least input and output sizes");
  for (int s : sizes) FOILRL_REQUIRE(s > 0, ShapeError, "Mlp: layer sizes must be positive");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.push_back({Matrix::Zero(sizes[i + 1], sizes[i]), Vector::Zero(sizes[i + 1])});
  }
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector Mlp::forward(const Vector& x) const {
  FOILRL_REQUIRE(!layers_.empty(), ShapeError, "Mlp: empty network");
  FOILRL_REQUIRE(x.size() == input_size(), ShapeError,
                 "Mlp: input size " + std::to_string(x.size()) + ", expected " +
                     std::to_string(input_size()));
  Vector h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector z = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward_batch(const Matrix& x, MlpCache* cache) const {
  FOILRL_REQUIRE(!layers_.empty(), ShapeError, "Mlp: empty network");
  FOILRL_REQUIRE(x.rows() == input_size(), ShapeError,
                 "Mlp: input size " + std::to_string(x.rows()) + ", expected " +
                     std::to_string(input_size()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].weight * h;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.array().tanh();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  if (cache) cache->valid = true;
  return h;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& upstream, MlpGrads& grads,
                     const std::vector<bool>& frozen) const {
  FOILRL_REQUIRE(cache.valid && cache.activations.size() == layers_.size() + 1, ContractViolation,
                 "Mlp::backward without a matching forward cache");
  FOILRL_REQUIRE(upstream.rows() == output_size() &&
                     upstream.cols() == cache.activations.front().cols(),
                 ShapeError, "Mlp::backward: upstream gradient shape mismatch");
  FOILRL_REQUIRE(grads.weight.size() == layers_.size(), ShapeError,
                 "Mlp::backward: gradient buffer mismatch");
  Matrix delta = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      // tanh' = 1 - h^2, h being this layer's output
      delta.array() *= 1.0 - cache.activations[i + 1].array().square();
    }
    const bool is_frozen = i < frozen.size() && frozen[i];
    if (!is_frozen) {
      grads.weight[i].noalias() += delta * cache.activations[i].transpose();
      grads.bias[i].noalias() += delta.rowwise().sum();
    }
    delta = layers_[i].weight.transpose() * delta;
  }
  return delta;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  for (const auto& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

void Mlp::init_layer_orthogonal(std::size_t i, Rng& rng, double gain) {
  Matrix& w = layers_.at(i).weight;
  const Eigen::Index rows = w.rows();
  const Eigen::Index cols = w.cols();
  const bool transpose = rows < cols;
  const Eigen::Index m = transpose ? cols : rows;
  const Eigen::Index n = transpose ? rows : cols;
  Matrix a(m, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < m; ++r) a(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(m, n);
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  w = gain * (transpose ? Matrix(q.transpose()) : q);
  layers_[i].bias.setZero();
}

void Mlp::init_orthogonal(Rng& rng, double head_gain) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    init_layer_orthogonal(i, rng, i + 1 < layers_.size() ? std::sqrt(2.0) : head_gain);
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.sizes_ != b.sizes_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) {
      return false;
    }
  }
  return true;
}

double clamp_log_std(double s) { return std::clamp(s, kLogStdMin, kLogStdMax); }

double gaussian_log_prob(const Vector& mean, const Vector& log_std, const Vector& x) {
  FOILRL_REQUIRE(mean.size() == log_std.size() && mean.size() == x.size(), ShapeError,
                 "gaussian_log_prob: size mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double s = clamp_log_std(log_std(i));
    const double z = (x(i) - mean(i)) * std::exp(-s);
    lp += -0.5 * z * z - s - half_log_2pi;
  }
  return lp;
}

double gaussian_entropy(const Vector& log_std) {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (Eigen::Index i = 0; i < log_std.size(); ++i) h += clamp_log_std(log_std(i)) + c;
  return h;
}

Vector gaussian_sample(const Vector& mean, const Vector& log_std, Rng& rng) {
  FOILRL_REQUIRE(mean.size() == log_std.size(), ShapeError, "gaussian_sample: size mismatch");
  Vector x(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    x(i) = mean(i) + std::exp(clamp_log_std(log_std(i))) * rng.normal();
  }
  return x;
}

PolicySample gaussian_policy(const Vector& mean, const Vector& log_std, Rng& rng) {
  PolicySample s;
  s.action = gaussian_sample(mean, log_std, rng);
  s.log_prob = gaussian_log_prob(mean, log_std, s.action);
  return s;
}

FreezeMask FreezeMask::none(std::size_t actor_layers, std::size_t critic_layers) {
  return {std::vector<bool>(actor_layers, false), std::vector<bool>(critic_layers, false)};
}

bool FreezeMask::any() const {
  return std::any_of(actor.begin(), actor.end(), [](bool b) { return b; }) ||
         std::any_of(critic.begin(), critic.end(), [](bool b) { return b; });
}

void AgentGrads::set_zero() {
  actor.set_zero();
  log_std.setZero();
  critic.set_zero();
}

double AgentGrads::squared_norm() const {
  double s = log_std.squaredNorm();
  for (const MlpGrads* g : {&actor, &critic}) {
    for (const auto& w : g->weight) s += w.squaredNorm();
    for (const auto& b : g->bias) s += b.squaredNorm();
  }
  return s;
}

void AgentGrads::scale(double f) {
  log_std *= f;
  for (MlpGrads* g : {&actor, &critic}) {
    for (auto& w : g->weight) w *= f;
    for (auto& b : g->bias) b *= f;
  }
}

std::vector<int> default_hidden_sizes() { return {256, 256}; }

Agent::Agent(const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> a{kObservationSize};
  a.insert(a.end(), hidden.begin(), hidden.end());
  std::vector<int> c = a;
  a.push_back(kActionSize);
  c.push_back(1);
  actor = Mlp(a);
  critic = Mlp(c);
  actor.init_orthogonal(rng, 0.01);
  critic.init_orthogonal(rng, 1.0);
  log_std = Vector::Zero(kActionSize);
}

AgentGrads Agent::zero_grads() const {
  return {actor.zero_grads(), Vector::Zero(log_std.size()), critic.zero_grads()};
}

std::vector<Eigen::Map<Vector>> Agent::blocks() {
  std::vector<Eigen::Map<Vector>> out;
  for (std::size_t i = 0; i < actor.num_layers(); ++i) {
    auto& l = actor.layer(i);
    out.emplace_back(l.weight.data(), l.weight.size());
    out.emplace_back(l.bias.data(), l.bias.size());
  }
  out.emplace_back(log_std.data(), log_std.size());
  for (std::size_t i = 0; i < critic.num_layers(); ++i) {
    auto& l = critic.layer(i);
    out.emplace_back(l.weight.data(), l.weight.size());
    out.emplace_back(l.bias.data(), l.bias.size());
  }
  return out;
}

std::vector<Eigen::Map<const Vector>> Agent::grad_blocks(const AgentGrads& g) const {
  std::vector<Eigen::Map<const Vector>> out;
  for (std::size_t i = 0; i < g.actor.weight.size(); ++i) {
    out.emplace_back(g.actor.weight[i].data(), g.actor.weight[i].size());
    out.emplace_back(g.actor.bias[i].data(), g.actor.bias[i].size());
  }
  out.emplace_back(g.log_std.data(), g.log_std.size());
  for (std::size_t i = 0; i < g.critic.weight.size(); ++i) {
    out.emplace_back(g.critic.weight[i].data(), g.critic.weight[i].size());
    out.emplace_back(g.critic.bias[i].data(), g.critic.bias[i].size());
  }
  return out;
}

std::vector<bool> Agent::frozen_blocks(const FreezeMask& mask) const {
  FOILRL_REQUIRE(mask.actor.size() == actor.num_layers() &&
                     mask.critic.size() == critic.num_layers(),
                 ShapeError, "FreezeMask does not match the agent's layer count");
  std::vector<bool> out;
  for (bool f : mask.actor) {
    out.push_back(f);
    out.push_back(f);
  }
  out.push_back(mask.log_std_frozen());
  for (bool f : mask.critic) {
    out.push_back(f);
    out.push_back(f);
  }
  return out;
}

AdamState Agent::fresh_adam() const {
  AdamState s;
  auto self = const_cast<Agent*>(this)->blocks();
  for (const auto& b : self) {
    s.m.push_back(Vector::Zero(b.size()));
    s.v.push_back(Vector::Zero(b.size()));
  }
  return s;
}

void Agent::adam_step(const AgentGrads& grads, AdamState& state, const AdamConfig& cfg,
                      const FreezeMask& mask) {
  auto params = blocks();
  const auto g = grad_blocks(grads);
  const auto frozen = frozen_blocks(mask);
  FOILRL_REQUIRE(g.size() == params.size() && state.m.size() == params.size() &&
                     state.v.size() == params.size(),
                 ShapeError, "adam_step: parameter/gradient/moment block mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    FOILRL_REQUIRE(g[k].size() == params[k].size() && state.m[k].size() == params[k].size(),
                   ShapeError, "adam_step: block size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (frozen[k]) continue;
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g[k];
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g[k].cwiseAbs2();
    params[k].array() -= cfg.learning_rate * (state.m[k].array() / bc1) /
                         ((state.v[k].array() / bc2).sqrt() + cfg.epsilon);
  }
}

bool operator==(const Agent& a, const Agent& b) {
  return a.actor == b.actor && a.critic == b.critic && a.log_std == b.log_std;
}

}  // namespace foilrl
