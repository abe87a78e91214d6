#pragma once

#include <string>
#include <utility>
#include <vector>

#include "predgame/nn/policy.hpp"
#include "predgame/nn/tensor.hpp"

namespace predgame::nn {

// Versioned binary tensor container. Layout:
//   magic "CPRB", u16 version,
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               little-endian f64 payload.
// Round-trips bit-exactly.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_tensors(const std::string& path, const std::vector<ConstNamedTensor>& tensors);
std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path);

// Policy checkpoints carry a "__meta" tensor describing the architecture so
// they can be reconstructed without outside information.
void save_policy(const std::string& path, const Policy& policy);
Policy load_policy(const std::string& path);

}  // namespace predgame::nn
