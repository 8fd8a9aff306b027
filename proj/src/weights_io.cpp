#include "tomoprior/weights_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <type_traits>

#include "json.hpp"

namespace tomoprior {

using json = nlohmann::json;

const char* to_string(WeightFileErrc code) {
  switch (code) {
    case WeightFileErrc::io: return "io error";
    case WeightFileErrc::bad_magic: return "bad magic";
    case WeightFileErrc::version_mismatch: return "version mismatch";
    case WeightFileErrc::truncated: return "truncated payload";
    case WeightFileErrc::corrupt: return "corrupt payload";
    case WeightFileErrc::bad_descriptor: return "bad descriptor";
    case WeightFileErrc::shape_chain: return "shape chain violation";
  }
  return "unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

constexpr char kMagic[4] = {'T', 'P', 'W', '1'};
constexpr std::size_t kHeader = 12;

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "linear";
}

[[noreturn]] void bad_descriptor(const std::string& what) {
  throw WeightFileError(WeightFileErrc::bad_descriptor, what);
}

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  bad_descriptor("unknown activation '" + name + "'");
}

json layer_to_json(const GeneratorLayer& layer) {
  json j;
  j["type"] = layer_kind(layer);
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    j["kernel"] = {c->kernel_h, c->kernel_w};
    j["stride"] = c->stride;
    j["in"] = c->in_channels;
    j["out"] = c->out_channels;
    j["bias"] = c->has_bias;
    j["activation"] = activation_name(c->activation);
    j["slope"] = c->slope;
  } else if (const auto* a = std::get_if<AttentionLayer>(&layer)) {
    j["channels"] = a->channels;
    j["reduced_channels"] = a->reduced_channels;
    j["pool"] = a->pool;
  } else {
    j["slot"] = std::get<ShortcutLayer>(layer).slot;
  }
  return j;
}

std::size_t count(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) bad_descriptor(std::string("field '") + key + "' must be a count");
  return v.get<std::size_t>();
}

/// Layer with correctly sized, zeroed parameter buffers.
GeneratorLayer layer_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv" || type == "deconv") {
    ConvLayer c;
    c.transposed = type == "deconv";
    const auto& k = j.at("kernel");
    if (!k.is_array() || k.size() != 2) bad_descriptor("kernel must be [h, w]");
    c.kernel_h = k[0].get<std::size_t>();
    c.kernel_w = k[1].get<std::size_t>();
    c.stride = count(j, "stride");
    c.in_channels = count(j, "in");
    c.out_channels = count(j, "out");
    c.has_bias = j.at("bias").get<bool>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.slope = j.at("slope").get<double>();
    c.weights.assign(c.weight_count(), 0.0f);
    c.bias.assign(c.has_bias ? c.out_channels : 0, 0.0f);
    return c;
  }
  if (type == "attention") {
    AttentionLayer a;
    a.channels = count(j, "channels");
    a.reduced_channels = count(j, "reduced_channels");
    a.pool = count(j, "pool");
    a.w_f.assign(a.reduced_channels * a.channels, 0.0f);
    a.w_g.assign(a.reduced_channels * a.channels, 0.0f);
    a.w_h.assign(a.channels * a.channels, 0.0f);
    return a;
  }
  if (type == "shortcut_save" || type == "shortcut_add")
    return ShortcutLayer{type == "shortcut_add", count(j, "slot")};
  bad_descriptor("unknown layer type '" + type + "'");
}

/// Every parameter buffer of a layer, in file order.
template <typename Layer>
auto blocks(Layer& layer) {
  using Block = std::conditional_t<std::is_const_v<Layer>, const std::vector<float>,
                                   std::vector<float>>;
  std::vector<Block*> out;
  if (auto* c = std::get_if<ConvLayer>(&layer)) {
    out = {&c->weights, &c->bias};
  } else if (auto* a = std::get_if<AttentionLayer>(&layer)) {
    out = {&a->w_f, &a->w_g, &a->w_h};
  }
  return out;
}

std::size_t parameter_count(const GeneratorLayer& layer) {
  std::size_t n = 0;
  for (const auto* b : blocks(layer)) n += b->size();
  if (std::holds_alternative<AttentionLayer>(layer)) n += 1;  // gamma
  return n;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::string descriptor_json(const GeneratorWeights& weights) {
  json j;
  j["format"] = "tomoprior.generator";
  j["input_side"] = weights.input_side;
  j["normalization_max"] = weights.normalization_max;
  j["ablation_no_attention"] = weights.ablation_no_attention;
  j["layers"] = json::array();
  for (const auto& layer : weights.layers) j["layers"].push_back(layer_to_json(layer));
  return j.dump();
}

std::vector<std::uint8_t> encode_weights(const GeneratorWeights& weights) {
  const std::string desc = descriptor_json(weights);
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(desc.size()));
  out.insert(out.end(), desc.begin(), desc.end());

  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& layer = weights.layers[i];
    // Sizes must agree with what the descriptor implies or the file is unreadable.
    GeneratorLayer expected = layer_from_json(layer_to_json(layer));
    auto have = blocks(layer);
    auto want = blocks(expected);
    for (std::size_t b = 0; b < have.size(); ++b)
      if (have[b]->size() != want[b]->size())
        throw InvalidInput("encode_weights: layer " + std::to_string(i) +
                           " parameter block " + std::to_string(b) + " has " +
                           std::to_string(have[b]->size()) + " values, expected " +
                           std::to_string(want[b]->size()));
    for (auto* b : have)
      for (float v : *b) put_u32(out, std::bit_cast<std::uint32_t>(v));
    if (const auto* a = std::get_if<AttentionLayer>(&layer))
      put_u32(out, std::bit_cast<std::uint32_t>(a->gamma));
  }
  put_u32(out, crc32(out));
  return out;
}

GeneratorWeights decode_weights(std::span<const std::uint8_t> bytes) {
  const std::size_t n = bytes.size();
  if (n < 4) {
    if (n == 0 || std::memcmp(bytes.data(), kMagic, n) == 0)
      throw WeightFileError(WeightFileErrc::truncated, "file ends inside the magic");
    throw WeightFileError(WeightFileErrc::bad_magic, "not a TPW1 file");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw WeightFileError(WeightFileErrc::bad_magic, "not a TPW1 file");
  if (n < kHeader)
    throw WeightFileError(WeightFileErrc::truncated, "file ends inside the header");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kWeightFormatVersion)
    throw WeightFileError(WeightFileErrc::version_mismatch,
                          "file version " + std::to_string(version) + ", reader supports " +
                              std::to_string(kWeightFormatVersion));
  const std::size_t desc_len = get_u32(bytes.data() + 8);
  if (n < kHeader + desc_len + 4)
    throw WeightFileError(WeightFileErrc::truncated, "file ends inside the descriptor");

  GeneratorWeights w;
  try {
    const auto* begin = reinterpret_cast<const char*>(bytes.data() + kHeader);
    const json j = json::parse(begin, begin + desc_len);
    if (j.at("format").get<std::string>() != "tomoprior.generator")
      bad_descriptor("unexpected format tag");
    w.input_side = j.at("input_side").get<std::size_t>();
    w.normalization_max = j.at("normalization_max").get<double>();
    w.ablation_no_attention = j.at("ablation_no_attention").get<bool>();
    for (const auto& lj : j.at("layers")) w.layers.push_back(layer_from_json(lj));
  } catch (const json::exception& e) {
    bad_descriptor(e.what());
  }

  std::size_t params = 0;
  for (const auto& layer : w.layers) params += parameter_count(layer);
  const std::size_t total = kHeader + desc_len + 4 * params + 4;
  if (n < total)
    throw WeightFileError(WeightFileErrc::truncated,
                          "expected " + std::to_string(total) + " bytes, found " +
                              std::to_string(n));
  if (n > total)
    throw WeightFileError(WeightFileErrc::corrupt,
                          std::to_string(n - total) + " trailing bytes after the checksum");
  const std::uint32_t stored = get_u32(bytes.data() + total - 4);
  if (crc32(bytes.first(total - 4)) != stored)
    throw WeightFileError(WeightFileErrc::corrupt, "checksum mismatch");

  const std::uint8_t* p = bytes.data() + kHeader + desc_len;
  auto next = [&p]() {
    const float v = std::bit_cast<float>(get_u32(p));
    p += 4;
    return v;
  };
  for (auto& layer : w.layers) {
    for (auto* b : blocks(layer))
      for (float& v : *b) v = next();
    if (auto* a = std::get_if<AttentionLayer>(&layer)) a->gamma = next();
  }

  validate_generator(w);
  return w;
}

void save_weights(const GeneratorWeights& weights, const std::filesystem::path& path) {
  validate_generator(weights);
  const auto bytes = encode_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFileError(WeightFileErrc::io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightFileError(WeightFileErrc::io, "write failed for " + path.string());
}

GeneratorWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(WeightFileErrc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace tomoprior
