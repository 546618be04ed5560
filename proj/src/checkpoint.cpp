#include "foilrl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "foilrl/errors.hpp"

namespace foilrl {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'I', 'L', 'R', 'L', 'C', 'K'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  put_u64(out, v);
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, sizeof d);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw IoError("checkpoint: truncated file");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

AgentCheckpoint make_checkpoint(Agent agent) {
  AgentCheckpoint ck;
  ck.adam = agent.fresh_adam();
  ck.mask = FreezeMask::none(agent.actor.num_layers(), agent.critic.num_layers());
  ck.agent = std::move(agent);
  return ck;
}

std::string serialize_checkpoint(const AgentCheckpoint& ck) {
  Agent agent = ck.agent;
  auto blocks = agent.blocks();
  FOILRL_REQUIRE(ck.adam.m.size() == blocks.size() && ck.adam.v.size() == blocks.size(), ShapeError,
                 "checkpoint: Adam state does not match the agent");
  nlohmann::json h;
  h["format_version"] = AgentCheckpoint::kFormatVersion;
  h["actor_sizes"] = agent.actor.sizes();
  h["critic_sizes"] = agent.critic.sizes();
  h["log_std_size"] = agent.log_std.size();
  h["timesteps"] = ck.timesteps;
  h["adam_step"] = ck.adam.step;
  h["freeze"] = {{"actor", ck.mask.actor}, {"critic", ck.mask.critic}};
  h["meta"] = ck.meta;
  const std::string header = h.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, AgentCheckpoint::kFormatVersion);
  put_u64(out, header.size());
  out += header;
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.size(); ++i) put_f64(out, b(i));
  }
  for (const auto* moments : {&ck.adam.m, &ck.adam.v}) {
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      FOILRL_REQUIRE((*moments)[k].size() == blocks[k].size(), ShapeError,
                     "checkpoint: Adam block size mismatch");
      for (Eigen::Index i = 0; i < (*moments)[k].size(); ++i) put_f64(out, (*moments)[k](i));
    }
  }
  return out;
}

AgentCheckpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw IoError("checkpoint: bad magic (not a foilrl checkpoint)");
  }
  const std::uint32_t version = r.u32();
  if (version != AgentCheckpoint::kFormatVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint64_t hlen = r.u64();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.bytes(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header: ") + e.what());
  }
  AgentCheckpoint ck;
  try {
    ck.agent.actor = Mlp(h.at("actor_sizes").get<std::vector<int>>());
    ck.agent.critic = Mlp(h.at("critic_sizes").get<std::vector<int>>());
    ck.agent.log_std = Vector::Zero(h.at("log_std_size").get<int>());
    ck.timesteps = h.at("timesteps").get<std::int64_t>();
    ck.adam.step = h.at("adam_step").get<std::int64_t>();
    ck.mask.actor = h.at("freeze").at("actor").get<std::vector<bool>>();
    ck.mask.critic = h.at("freeze").at("critic").get<std::vector<bool>>();
    ck.meta = h.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header: ") + e.what());
  }
  FOILRL_REQUIRE(ck.mask.actor.size() == ck.agent.actor.num_layers() &&
                     ck.mask.critic.size() == ck.agent.critic.num_layers(),
                 IoError, "checkpoint: freeze mask does not match the architecture");
  auto blocks = ck.agent.blocks();
  for (auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.f64();
  }
  for (auto* moments : {&ck.adam.m, &ck.adam.v}) {
    for (const auto& b : blocks) {
      Vector v(b.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.f64();
      moments->push_back(std::move(v));
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const AgentCheckpoint& ck, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ck);
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

AgentCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

namespace {

nlohmann::json mlp_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const DenseLayer& l = net.layer(i);
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      std::vector<double> row(l.weight.cols());
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row[c] = l.weight(r, c);
      w.push_back(row);
    }
    layers.push_back({{"weight", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"sizes", net.sizes()}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>());
  const auto& layers = j.at("layers");
  FOILRL_REQUIRE(layers.size() == net.num_layers(), ShapeError, "weights: layer count mismatch");
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    DenseLayer& l = net.layer(i);
    const auto& w = layers[i].at("weight");
    const auto b = layers[i].at("bias").get<std::vector<double>>();
    FOILRL_REQUIRE(w.size() == static_cast<std::size_t>(l.weight.rows()) &&
                       b.size() == static_cast<std::size_t>(l.bias.size()),
                   ShapeError, "weights: layer shape mismatch");
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      const auto row = w[r].get<std::vector<double>>();
      FOILRL_REQUIRE(row.size() == static_cast<std::size_t>(l.weight.cols()), ShapeError,
                     "weights: layer shape mismatch");
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = row[c];
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = b[k];
  }
  return net;
}

}  // namespace

nlohmann::json export_weights(const AgentCheckpoint& ck) {
  const Agent& a = ck.agent;
  return {{"format", "foilrl-weights"},
          {"format_version", kWeightsFormatVersion},
          {"actor", mlp_json(a.actor)},
          {"log_std", std::vector<double>(a.log_std.data(), a.log_std.data() + a.log_std.size())},
          {"critic", mlp_json(a.critic)},
          {"timesteps", ck.timesteps},
          {"meta", ck.meta}};
}

AgentCheckpoint import_weights(const nlohmann::json& j) {
  try {
    FOILRL_REQUIRE(j.at("format") == "foilrl-weights", IoError, "weights: not a foilrl weights file");
    FOILRL_REQUIRE(j.at("format_version") == kWeightsFormatVersion, IoError, "weights: unsupported version");
    Agent a;
    a.actor = mlp_from_json(j.at("actor"));
    a.critic = mlp_from_json(j.at("critic"));
    const auto ls = j.at("log_std").get<std::vector<double>>();
    a.log_std = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    FOILRL_REQUIRE(a.log_std.size() == a.actor.output_size(), ShapeError, "weights: log_std size mismatch");
    AgentCheckpoint ck = make_checkpoint(std::move(a));
    ck.timesteps = j.value("timesteps", std::int64_t{0});
    ck.meta = j.value("meta", nlohmann::json::object());
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("weights: malformed file: ") + e.what());
  }
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace foilrl
