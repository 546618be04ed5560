#pragma once

// Binary agent checkpoints:
//   8 bytes  magic "FOILRLCK"
//   u32      format version (little endian)
//   u64      header length (little endian)
//   header   UTF-8 JSON: architecture, counters, freeze mask, metadata
//   payload  little-endian float64 blocks: agent parameters in Agent::blocks()
//            order, then Adam first moments, then Adam second moments

#include <cstdint>
#include <string>

#include <json.hpp>

#include "foilrl/nn.hpp"

namespace foilrl {

struct AgentCheckpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  Agent agent;
  AdamState adam;
  FreezeMask mask;
  std::int64_t timesteps = 0;
  // Free-form provenance: env settings (sigma, fidelity), preset, config hash.
  nlohmann::json meta = nlohmann::json::object();
};

std::string serialize_checkpoint(const AgentCheckpoint& ck);
AgentCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const AgentCheckpoint& ck, const std::string& path);
AgentCheckpoint load_checkpoint(const std::string& path);

// Fresh checkpoint around a newly initialized agent.
AgentCheckpoint make_checkpoint(Agent agent);

inline constexpr int kWeightsFormatVersion = 1;

// Portable JSON copy of the network weights (no optimizer state). Doubles
// are written with round-trip precision, so import(export(c)) reproduces the
// agent bit for bit with a fresh Adam state and no frozen layers.
nlohmann::json export_weights(const AgentCheckpoint& ck);
AgentCheckpoint import_weights(const nlohmann::json& j);

// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace foilrl
