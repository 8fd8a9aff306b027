#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tomoprior/geometry.hpp"
#include "tomoprior/tensor.hpp"

namespace tomoprior {

enum class Activation { linear, relu, leaky_relu };

/// Convolution (or transposed convolution when `transposed`) with odd
/// kernels and padding kernel/2.
///
/// Parameter layout: weights are [out][in][kh][kw] for a convolution and
/// [in][out][kh][kw] for a transposed one; `bias` has `out_channels` entries
/// when `has_bias`.
struct ConvLayer {
  bool transposed = false;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  bool has_bias = true;
  Activation activation = Activation::linear;
  double slope = 0.2;
  std::vector<float> weights;
  std::vector<float> bias;

  std::size_t weight_count() const {
    return kernel_h * kernel_w * in_channels * out_channels;
  }
};

/// Pooled self-attention block. w_f and w_g are [reduced][channels],
/// w_h is [channels][channels]. Output is gamma * attended + input.
struct AttentionLayer {
  std::size_t channels = 1;
  std::size_t reduced_channels = 1;
  std::size_t pool = 3;
  std::vector<float> w_f;
  std::vector<float> w_g;
  std::vector<float> w_h;
  float gamma = 0.0f;
};

/// Skip connection: `save` stores the current activation in `slot`, `add`
/// adds the stored activation (shapes must match).
struct ShortcutLayer {
  bool add = false;
  std::size_t slot = 0;
};

using GeneratorLayer = std::variant<ConvLayer, AttentionLayer, ShortcutLayer>;

/// Everything needed to run the generator: the layer list with parameters,
/// the image side it was built for and the normalization scale.
struct GeneratorWeights {
  std::size_t input_side = 0;
  double normalization_max = 1.0;
  bool ablation_no_attention = false;
  std::vector<GeneratorLayer> layers;
};

std::string layer_kind(const GeneratorLayer& layer);

/// Checks channel chaining, layer ordering (convolutions, at most one
/// attention block, transposed convolutions), parameter sizes, the ablation
/// flag and that an input_side x input_side image maps back to the same
/// shape. Throws WeightFileError(shape_chain) naming the offending layers.
void validate_generator(const GeneratorWeights& weights);

/// Attention map of a pooled tensor: row i is softmax_j(f_i . g_j).
/// Returned row-major, (m'n') x (m'n').
std::vector<double> attention_map(const FeatureTensor& x, const AttentionLayer& layer);

/// Non-overlapping average pooling; partial edge blocks average what they cover.
FeatureTensor average_pool(const FeatureTensor& x, std::size_t pool);

FeatureTensor self_attention_forward(const FeatureTensor& x,
                                     const AttentionLayer& layer);

FeatureTensor conv_forward(const FeatureTensor& x, const ConvLayer& layer,
                           std::size_t target_rows = 0, std::size_t target_cols = 0);

/// Scales by 1/normalization_max, runs every layer, scales back.
/// Throws InvalidInput on a side mismatch and DataError naming the layer
/// index if an activation becomes non-finite.
ImageGrid generator_forward(const ImageGrid& image, const GeneratorWeights& weights);

/// Encoder/decoder layout used to build fresh generators.
struct GeneratorLayout {
  std::vector<std::size_t> channels;  // encoder outputs
  std::vector<std::size_t> strides;   // one per encoder layer
  bool attention = true;
  std::size_t kernel = 3;
  double slope = 0.2;
};

/// Ten 3x3 convolutions (stride 2 on every second layer, 32 to 512
/// channels) mirrored by ten transposed convolutions.
GeneratorLayout default_layout(bool attention = true);

/// Builds a generator whose parameters are drawn from a seeded uniform
/// fan-in initializer. Attention gamma starts at 0.
GeneratorWeights make_generator(std::size_t input_side, const GeneratorLayout& layout,
                                double normalization_max, std::uint64_t seed);

}  // namespace tomoprior
