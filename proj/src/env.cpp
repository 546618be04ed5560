#include "foilrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "foilrl/errors.hpp"

namespace foilrl {

const std::vector<std::string>& default_reset_names() {
  static const std::vector<std::string> names = {
      "naca0006", "naca0009", "naca0012", "naca0015", "naca0018", "naca1408", "naca1410",
      "naca1412", "naca2412", "naca2415", "naca4412", "naca4415", "naca4420", "naca6412",
      "naca6415", "naca7421", "naca8409", "naca8412", "naca8415", "naca9421"};
  return names;
}

void EnvConfig::validate() const {
  bounds.validate();
  FOILRL_REQUIRE(episode_max_length > 0, InvalidParams, "episode_max_length must be positive");
  FOILRL_REQUIRE(std::isfinite(sigma) && sigma >= 0.0, InvalidParams, "sigma must be >= 0");
  FOILRL_REQUIRE(max_reset_attempts > 0, InvalidParams, "max_reset_attempts must be positive");
  solver.validate();
  flow.validate();
}

std::array<double, kNumParams> alpha_vector(const EnvConfig& cfg) {
  cfg.bounds.validate();
  FOILRL_REQUIRE(cfg.episode_max_length > 0, InvalidParams, "episode_max_length must be positive");
  std::array<double, kNumParams> a{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    a[i] = (cfg.bounds.upper[i] - cfg.bounds.lower[i]) / cfg.episode_max_length;
  }
  return a;
}

double thickness_kernel(double mt, double mt0, double sigma) {
  FOILRL_REQUIRE(mt0 > 0.0, InvalidParams, "thickness_kernel: mt0 must be positive");
  FOILRL_REQUIRE(sigma >= 0.0, InvalidParams, "thickness_kernel: sigma must be >= 0");
  const double d = mt / mt0 - 1.0;
  return std::exp(-sigma * d * d);
}

Observation normalize_observation(const CstParams& p, const ParamBounds& b) {
  Observation o{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    o[i] = 2.0 * (p[i] - b.lower[i]) / (b.upper[i] - b.lower[i]) - 1.0;
  }
  return o;
}

CstParams denormalize_observation(const Observation& o, const ParamBounds& b) {
  CstParams p;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    p[i] = b.lower[i] + 0.5 * (o[i] + 1.0) * (b.upper[i] - b.lower[i]);
  }
  return p;
}

const char* to_string(StepReason r) {
  switch (r) {
    case StepReason::running: return "running";
    case StepReason::max_steps: return "max_steps";
    case StepReason::solver_failure: return "solver_failure";
    case StepReason::invalid_geometry: return "invalid_geometry";
  }
  return "unknown";
}

AirfoilEnv::AirfoilEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  solver_ = make_solver(cfg_.solver, cfg_.flow);
  alpha_ = alpha_vector(cfg_);
  state_.terminated = true;
}

AirfoilEnv::AirfoilEnv(EnvConfig cfg, AeroSolver solver) : cfg_(std::move(cfg)), solver_(std::move(solver)) {
  cfg_.validate();
  FOILRL_REQUIRE(static_cast<bool>(solver_), InvalidParams, "AirfoilEnv: empty solver");
  alpha_ = alpha_vector(cfg_);
  state_.terminated = true;
}

StepInfo AirfoilEnv::evaluate(const CstParams& p, bool& valid_geometry) {
  StepInfo info;
  const AirfoilGeometry geom = cst_to_geometry(p);
  info.mt = max_thickness(geom);
  valid_geometry = static_cast<bool>(is_valid(geom));
  if (!valid_geometry) return info;
  ++solver_calls_;
  AeroResult r;
  try {
    r = solver_(geom);
  } catch (const GeometryRejected&) {
    valid_geometry = false;
    return info;
  }
  if (!r.converged) return info;
  info.converged = true;
  info.cl = r.cl;
  info.cd = r.cd;
  info.ratio = r.cl / r.cd;
  info.kappa = r.confidence;
  return info;
}

bool AirfoilEnv::reset_to(const CstParams& params, const std::string& name) {
  FOILRL_REQUIRE(params.all_finite(), InvalidParams, "reset_to: non-finite parameters");
  state_ = EnvState{};
  state_.params = cfg_.bounds.clamp(params);
  state_.airfoil = name;
  bool valid = false;
  StepInfo info = evaluate(state_.params, valid);
  state_.initial = info;
  if (!valid || !info.converged || !(info.mt > 0.0)) {
    state_.terminated = true;
    return false;
  }
  info.lambda = 1.0;
  state_.initial = info;
  state_.mt0 = info.mt;
  state_.prev_term = info.kappa * info.ratio;
  state_.episode_return = state_.prev_term;
  state_.terminated = false;
  return true;
}

CstParams AirfoilEnv::reset(Rng& rng) {
  const auto& pool = cfg_.reset_pool;
  FOILRL_REQUIRE(!pool.empty(), ResetError, "reset: empty reset pool");
  for (int attempt = 0; attempt < cfg_.max_reset_attempts; ++attempt) {
    const auto& entry = pool[rng.below(pool.size())];
    if (reset_to(entry.params, entry.name)) return state_.params;
  }
  throw ResetError("reset: initial solve failed for " + std::to_string(cfg_.max_reset_attempts) +
                   " sampled pool airfoils");
}

StepOutcome AirfoilEnv::step(const Action& action) {
  FOILRL_REQUIRE(!state_.terminated, ContractViolation, "step on a terminated episode");
  CstParams next = state_.params;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    FOILRL_REQUIRE(!std::isnan(action[i]), InvalidParams, "step: NaN action component");
    const double a = std::clamp(action[i], -1.0, 1.0);
    next[i] = std::clamp(next[i] + alpha_[i] * a, cfg_.bounds.lower[i], cfg_.bounds.upper[i]);
  }
  state_.params = next;
  ++state_.step_index;

  StepOutcome out;
  bool valid = false;
  out.info = evaluate(next, valid);
  out.observation = next;
  if (!valid || !out.info.converged) {
    out.reward = -state_.prev_term;
    out.terminated = true;
    out.reason = valid ? StepReason::solver_failure : StepReason::invalid_geometry;
    state_.prev_term = 0.0;
  } else {
    out.info.lambda = thickness_kernel(out.info.mt, state_.mt0, cfg_.sigma);
    const double term = out.info.lambda * out.info.kappa * out.info.ratio;
    out.reward = term - state_.prev_term;
    state_.prev_term = term;
    if (state_.step_index >= cfg_.episode_max_length) {
      out.terminated = true;
      out.reason = StepReason::max_steps;
    }
  }
  state_.episode_return += out.reward;
  state_.terminated = out.terminated;
  return out;
}

namespace {

constexpr const char* kPoolCacheMagic = "# foilrl-reset-pool v1";

std::string bounds_fingerprint(const ParamBounds& b) {
  std::uint64_t h = 1469598103934665603ULL;
  char buf[64];
  for (std::size_t i = 0; i < kNumParams; ++i) {
    for (double v : {b.lower[i], b.upper[i]}) {
      std::snprintf(buf, sizeof buf, "%.17g;", v);
      for (const char* c = buf; *c; ++c) {
        h ^= static_cast<unsigned char>(*c);
        h *= 1099511628211ULL;
      }
    }
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, PoolEntry> read_pool_cache(const std::string& path, const std::string& fp) {
  std::map<std::string, PoolEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line) || line != kPoolCacheMagic) return out;
  if (!std::getline(in, line) || line != "# bounds " + fp) return out;
  if (!std::getline(in, line)) return out;  // column header
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    PoolEntry e;
    if (!std::getline(ss, e.name, ',')) return {};
    if (!std::getline(ss, cell, ',')) return {};
    try {
      e.residual = std::stod(cell);
      for (std::size_t i = 0; i < kNumParams; ++i) {
        if (!std::getline(ss, cell, ',')) return {};
        e.params[i] = std::stod(cell);
      }
    } catch (const std::exception&) {
      return {};
    }
    out[e.name] = e;
  }
  return out;
}

void write_pool_cache(const std::string& path, const std::string& fp,
                      const std::vector<PoolEntry>& entries) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) return;  // caching is best effort
    out << kPoolCacheMagic << "\n# bounds " << fp << "\nname,residual";
    for (std::size_t i = 0; i < kNumParams; ++i) out << ",p" << i;
    out << "\n";
    char buf[32];
    for (const auto& e : entries) {
      out << e.name;
      std::snprintf(buf, sizeof buf, ",%.17g", e.residual);
      out << buf;
      for (std::size_t i = 0; i < kNumParams; ++i) {
        std::snprintf(buf, sizeof buf, ",%.17g", e.params[i]);
        out << buf;
      }
      out << "\n";
    }
  }
  fs::rename(tmp, target, ec);
}

}  // namespace

std::vector<PoolEntry> load_reset_pool(const std::string& dir, const std::vector<std::string>& names,
                                       const std::string& cache_path, const ParamBounds& bounds) {
  const std::string fp = bounds_fingerprint(bounds);
  std::map<std::string, PoolEntry> cached;
  if (!cache_path.empty()) cached = read_pool_cache(cache_path, fp);
  std::vector<PoolEntry> out;
  bool dirty = false;
  for (const auto& name : names) {
    auto it = cached.find(name);
    if (it != cached.end()) {
      out.push_back(it->second);
      continue;
    }
    const RawAirfoil raw = read_airfoil_file((std::filesystem::path(dir) / (name + ".dat")).string());
    const CstFit fit = fit_cst(raw.points, bounds);
    out.push_back({name, fit.params, fit.residual});
    dirty = true;
  }
  if (dirty && !cache_path.empty()) {
    for (const auto& [name, e] : cached) {
      if (std::find(names.begin(), names.end(), name) == names.end()) out.push_back(e);
    }
    std::vector<PoolEntry> all = out;
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    write_pool_cache(cache_path, fp, all);
    out.resize(names.size());
  }
  return out;
}

}  // namespace foilrl
