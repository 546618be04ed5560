#include <doctest.h>

#include <cmath>
#include <numbers>

#include "foilrl/errors.hpp"
#include "foilrl/nn.hpp"
#include "foilrl/ppo.hpp"

using namespace foilrl;

namespace {

double mlp_objective(const Mlp& net, const Matrix& x, const Matrix& up) {
  return (net.forward_batch(x).array() * up.array()).sum();
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12) over all parameters.
double mlp_gradient_error(Mlp net, const Matrix& x, const Matrix& up) {
  MlpCache cache;
  net.forward_batch(x, &cache);
  MlpGrads g = net.zero_grads();
  net.backward(cache, up, g);
  const double h = 1e-6;
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto fd = [&](double& p, double analytic) {
      const double keep = p;
      p = keep + h;
      const double fp = mlp_objective(net, x, up);
      p = keep - h;
      const double fm = mlp_objective(net, x, up);
      p = keep;
      const double num = (fp - fm) / (2 * h);
      diff2 += (num - analytic) * (num - analytic);
      norm2 += num * num + analytic * analytic;
    };
    DenseLayer& layer = net.layer(l);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) fd(layer.weight.data()[i], g.weight[l].data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) fd(layer.bias(i), g.bias[l](i));
  }
  return std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-12);
}

}  // namespace

TEST_CASE("MLP gradients match central differences on 100 random cases") {
  Rng rng(11);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<int> sizes{1 + static_cast<int>(rng.below(6))};
    const int depth = 1 + static_cast<int>(rng.below(3));
    for (int d = 0; d < depth; ++d) sizes.push_back(1 + static_cast<int>(rng.below(8)));
    Mlp net(sizes);
    net.init_orthogonal(rng, 1.0);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      for (Eigen::Index i = 0; i < net.layer(l).bias.size(); ++i) net.layer(l).bias(i) = 0.3 * rng.normal();
    }
    const Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Matrix x = random_matrix(sizes.front(), batch, rng);
    const Matrix up = random_matrix(sizes.back(), batch, rng);
    worst = std::max(worst, mlp_gradient_error(net, x, up));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("backward returns the input gradient and honours frozen layers") {
  Rng rng(3);
  Mlp net({3, 5, 2});
  net.init_orthogonal(rng, 1.0);
  const Matrix x = random_matrix(3, 1, rng);
  const Matrix up = random_matrix(2, 1, rng);
  MlpCache cache;
  net.forward_batch(x, &cache);
  MlpGrads g = net.zero_grads();
  const Matrix dx = net.backward(cache, up, g, {true, false});
  CHECK(g.weight[0].norm() == 0.0);
  CHECK(g.weight[1].norm() > 0.0);
  for (Eigen::Index i = 0; i < 3; ++i) {
    Matrix xp = x, xm = x;
    xp(i, 0) += 1e-6;
    xm(i, 0) -= 1e-6;
    const double num = (mlp_objective(net, xp, up) - mlp_objective(net, xm, up)) / 2e-6;
    CHECK(dx(i, 0) == doctest::Approx(num).epsilon(1e-6));
  }
}

TEST_CASE("orthogonal initialization") {
  Rng rng(5);
  Mlp net({18, 64, 64, 18});
  net.init_orthogonal(rng, 0.01);
  const Matrix& w = net.layer(1).weight;
  const Matrix gram = w * w.transpose();
  CHECK((gram - 2.0 * Matrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix& head = net.layer(2).weight;
  CHECK((head * head.transpose() - 1e-4 * Matrix::Identity(18, 18)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(net.layer(0).bias.norm() == 0.0);
  CHECK(net.num_parameters() == 18 * 64 + 64 + 64 * 64 + 64 + 64 * 18 + 18);
}

TEST_CASE("Gaussian log-density and entropy match closed forms") {
  Rng rng(8);
  double worst_lp = 0.0, worst_h = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(18));
    Vector mean(d), log_std(d), x(d);
    double lp = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      mean(i) = rng.normal();
      log_std(i) = rng.uniform(-3.0, 1.5);
      x(i) = mean(i) + rng.normal() * std::exp(log_std(i));
      const double sd = std::exp(log_std(i));
      lp += -0.5 * std::pow((x(i) - mean(i)) / sd, 2) - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
      h += 0.5 * std::log(2 * std::numbers::pi * std::numbers::e * sd * sd);
    }
    worst_lp = std::max(worst_lp, std::abs(gaussian_log_prob(mean, log_std, x) - lp));
    worst_h = std::max(worst_h, std::abs(gaussian_entropy(log_std) - h));
  }
  CHECK(worst_lp < 1e-10);
  CHECK(worst_h < 1e-10);
}

TEST_CASE("log-std clamping") {
  CHECK(clamp_log_std(-10.0) == kLogStdMin);
  CHECK(clamp_log_std(3.0) == kLogStdMax);
  CHECK(clamp_log_std(0.5) == 0.5);
  Rng rng(1);
  const Vector mean = Vector::Zero(4);
  const Vector ls = Vector::Constant(4, -1.0);
  const PolicySample s = gaussian_policy(mean, ls, rng);
  CHECK(s.log_prob == doctest::Approx(gaussian_log_prob(mean, ls, s.action)));
}

TEST_CASE("first Adam step moves each parameter by the learning rate") {
  Rng rng(2);
  Agent a({8}, rng);
  const Agent before = a;
  AgentGrads g = a.zero_grads();
  g.actor.weight[0].setConstant(0.5);
  g.log_std.setConstant(-2.0);
  AdamState st = a.fresh_adam();
  AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  a.adam_step(g, st, cfg, FreezeMask::none(2, 2));
  CHECK(st.step == 1);
  CHECK(a.actor.layer(0).weight(0, 0) - before.actor.layer(0).weight(0, 0) ==
        doctest::Approx(-1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-9));
  CHECK(a.log_std(0) - before.log_std(0) == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(a.critic == before.critic);

  FreezeMask m = FreezeMask::none(2, 2);
  m.actor[0] = true;
  Agent b = before;
  AdamState st2 = b.fresh_adam();
  b.adam_step(g, st2, cfg, m);
  CHECK(b.actor.layer(0).weight == before.actor.layer(0).weight);
  CHECK(b.log_std != before.log_std);
}

TEST_CASE("agent layout") {
  Rng rng(4);
  Agent a(default_hidden_sizes(), rng);
  CHECK(a.actor.input_size() == kObservationSize);
  CHECK(a.actor.output_size() == kActionSize);
  CHECK(a.critic.output_size() == 1);
  CHECK(a.log_std.size() == kActionSize);
  CHECK(a.blocks().size() == 2 * a.actor.num_layers() + 1 + 2 * a.critic.num_layers());
  const auto frozen = a.frozen_blocks(FreezeMask{{true, true, false}, {false, false, false}});
  CHECK(frozen[0]);
  CHECK(frozen[3]);
  CHECK_FALSE(frozen[4]);
  CHECK_FALSE(frozen[6]);  // log-std follows the last actor layer
}

TEST_CASE("PPO loss gradient matches central differences") {
  Rng rng(21);
  Agent agent({6, 5}, rng);
  for (Eigen::Index k = 0; k < agent.log_std.size(); ++k) agent.log_std(k) = rng.uniform(-1.0, 0.5);
  PpoConfig cfg;
  cfg.clip_range = 0.5;
  cfg.entropy_coef = 0.01;
  RolloutBuffer buf;
  buf.allocate(12, 1);
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index k = 0; k < kObservationSize; ++k) buf.observations(k, i) = rng.uniform(-1, 1);
    const Vector mean = agent.act_mean(buf.observations.col(i));
    for (Eigen::Index k = 0; k < kActionSize; ++k) buf.actions(k, i) = mean(k) + 0.5 * rng.normal();
    // old log-probs near the current ones keep every ratio inside the clip range
    buf.log_probs(i) = gaussian_log_prob(mean, agent.log_std, buf.actions.col(i)) + 0.05 * rng.normal();
    buf.returns(i) = rng.normal();
  }
  Vector adv(12);
  for (Eigen::Index i = 0; i < 12; ++i) adv(i) = rng.normal();
  std::vector<std::size_t> idx(12);
  for (std::size_t i = 0; i < 12; ++i) idx[i] = i;
  const FreezeMask mask = FreezeMask::none(agent.actor.num_layers(), agent.critic.num_layers());

  auto loss = [&](const Agent& a) {
    UpdateStats s;
    compute_ppo_gradients(a, buf, adv, idx, cfg, mask, s);
    return s.policy_loss + cfg.value_coef * s.value_loss - cfg.entropy_coef * s.entropy;
  };
  UpdateStats s;
  double dev = 0.0;
  const AgentGrads g = compute_ppo_gradients(agent, buf, adv, idx, cfg, mask, s, &dev);
  REQUIRE(dev < cfg.clip_range);

  Agent probe = agent;
  auto blocks = probe.blocks();
  const auto grads = probe.grad_blocks(g);
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    for (Eigen::Index i = 0; i < blocks[bi].size(); i += 3) {
      const double keep = blocks[bi](i);
      blocks[bi](i) = keep + 1e-6;
      const double fp = loss(probe);
      blocks[bi](i) = keep - 1e-6;
      const double fm = loss(probe);
      blocks[bi](i) = keep;
      const double num = (fp - fm) / 2e-6;
      diff2 += std::pow(num - grads[bi](i), 2);
      norm2 += num * num + grads[bi](i) * grads[bi](i);
    }
  }
  CHECK(std::sqrt(diff2 / norm2) < 1e-5);
}
