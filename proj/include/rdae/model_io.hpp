#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdae/model.hpp"

namespace rdae {

// Model file layout (little-endian):
//   "RDAM" | version u8 | seed u64 | flags u8 | tensor count u32
//   | per tensor: rank u8, dims u32 x rank, values f32 x N
//   | [whitening: mean f64 x3, matrix f64 x9, inverse f64 x9, epsilon f64]
//   | CRC-32 u32 over all preceding bytes
// flags: bits 0-2 trained phases (M1, M2, M3), bit 3 whitening block present.
// Tensors appear in DualModel::for_each_param order. Optimizer moments are
// not stored.
std::vector<std::uint8_t> serialize_model(const DualModel& model);
DualModel parse_model(std::span<const std::uint8_t> bytes);

void save_model(const DualModel& model, const std::string& path);
DualModel load_model(const std::string& path);

// The trailing CRC of the serialized model; bitstreams record it to bind
// themselves to the model that produced them.
std::uint32_t model_checksum(const DualModel& model);

}  // namespace rdae
