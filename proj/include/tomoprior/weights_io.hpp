#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tomoprior/error.hpp"
#include "tomoprior/generator.hpp"

namespace tomoprior {

// TPW1 layout, all integers little-endian:
//   "TPW1" | u32 version | u32 descriptor length | descriptor JSON |
//   f32 parameter blocks in layer order | u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kWeightFormatVersion = 1;

enum class WeightFileErrc {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  corrupt,
  bad_descriptor,
  shape_chain,
};

const char* to_string(WeightFileErrc code);

class WeightFileError : public DataError {
 public:
  WeightFileError(WeightFileErrc code, const std::string& what)
      : DataError(std::string(to_string(code)) + ": " + what), code_(code) {}
  WeightFileErrc code() const { return code_; }

 private:
  WeightFileErrc code_;
};

/// Canonical descriptor text (sorted keys, no whitespace).
std::string descriptor_json(const GeneratorWeights& weights);

std::vector<std::uint8_t> encode_weights(const GeneratorWeights& weights);
GeneratorWeights decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const GeneratorWeights& weights, const std::filesystem::path& path);
GeneratorWeights load_weights(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace tomoprior
