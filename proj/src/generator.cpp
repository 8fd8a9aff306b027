#include "tomoprior/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "tomoprior/error.hpp"
#include "tomoprior/weights_io.hpp"

namespace tomoprior {

FeatureTensor::FeatureTensor(std::size_t rows, std::size_t cols, std::size_t channels)
    : rows_(rows), cols_(cols), channels_(channels),
      values_(rows * cols * channels, 0.0) {
  if (rows == 0 || cols == 0 || channels == 0)
    throw InvalidInput("tensor: every dimension must be >= 1");
}

FeatureTensor::FeatureTensor(std::size_t rows, std::size_t cols, std::size_t channels,
                             std::vector<double> values)
    : FeatureTensor(rows, cols, channels) {
  if (values.size() != values_.size())
    throw InvalidInput("tensor: expected " + std::to_string(values_.size()) +
                       " values, got " + std::to_string(values.size()));
  values_ = std::move(values);
}

bool FeatureTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string layer_kind(const GeneratorLayer& layer) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer))
    return conv->transposed ? "deconv" : "conv";
  if (std::holds_alternative<AttentionLayer>(layer)) return "attention";
  return std::get<ShortcutLayer>(layer).add ? "shortcut_add" : "shortcut_save";
}

namespace {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

[[noreturn]] void chain_error(const std::string& what) {
  throw WeightFileError(WeightFileErrc::shape_chain, what);
}

std::string describe(std::size_t index, const GeneratorLayer& layer) {
  return "layer " + std::to_string(index) + " (" + layer_kind(layer) + ")";
}

std::size_t conv_out(std::size_t in, std::size_t stride) { return (in - 1) / stride + 1; }

/// Output extent of a transposed convolution before output padding.
std::size_t deconv_base(std::size_t in, std::size_t kernel, std::size_t stride) {
  return (in - 1) * stride + kernel - 2 * (kernel / 2);
}

/// Per-layer bookkeeping shared by validation and the forward pass: pops the
/// encoder size a strided transposed convolution should restore.
struct SizePlanner {
  std::vector<std::pair<std::size_t, std::size_t>> stack;

  void before_conv(const ConvLayer& c, const Shape& s) {
    if (!c.transposed && c.stride > 1) stack.emplace_back(s.rows, s.cols);
  }

  std::pair<std::size_t, std::size_t> deconv_target(const ConvLayer& c, const Shape& s) {
    if (c.stride == 1) return {deconv_base(s.rows, c.kernel_h, 1),
                               deconv_base(s.cols, c.kernel_w, 1)};
    if (!stack.empty()) {
      auto t = stack.back();
      stack.pop_back();
      return t;
    }
    return {s.rows * c.stride, s.cols * c.stride};
  }
};

double activate(double v, Activation a, double slope) {
  switch (a) {
    case Activation::linear: return v;
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::leaky_relu: return v > 0.0 ? v : slope * v;
  }
  return v;
}

}  // namespace

void validate_generator(const GeneratorWeights& weights) {
  if (weights.input_side == 0) chain_error("input_side must be >= 1");
  if (!(weights.normalization_max > 0.0) || !std::isfinite(weights.normalization_max))
    chain_error("normalization_max must be positive and finite");

  Shape shape{weights.input_side, weights.input_side, 1};
  std::string producer = "input (1 channel)";
  std::map<std::size_t, Shape> slots;
  SizePlanner planner;
  int phase = 0;  // 0 encoder, 1 after attention, 2 decoder
  std::size_t attention_count = 0;

  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& layer = weights.layers[i];
    const std::string name = describe(i, layer);

    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (c->kernel_h == 0 || c->kernel_w == 0 || c->kernel_h % 2 == 0 ||
          c->kernel_w % 2 == 0)
        chain_error(name + " needs odd, nonzero kernel sizes");
      if (c->stride == 0) chain_error(name + " has stride 0");
      if (c->in_channels == 0 || c->out_channels == 0)
        chain_error(name + " has zero channels");
      if (c->in_channels != shape.channels)
        chain_error(producer + " outputs " + std::to_string(shape.channels) +
                    " channels but " + name + " expects " +
                    std::to_string(c->in_channels));
      if (c->weights.size() != c->weight_count())
        chain_error(name + " carries " + std::to_string(c->weights.size()) +
                    " weights, expected " + std::to_string(c->weight_count()));
      if (c->bias.size() != (c->has_bias ? c->out_channels : 0))
        chain_error(name + " bias size does not match out channels");
      if (!c->transposed && phase != 0)
        chain_error(name + ": convolutions must precede attention and deconvolutions");
      if (c->transposed) {
        phase = 2;
        auto [tr, tc] = planner.deconv_target(*c, shape);
        const std::size_t br = deconv_base(shape.rows, c->kernel_h, c->stride);
        const std::size_t bc = deconv_base(shape.cols, c->kernel_w, c->stride);
        if (tr < br || tc < bc || tr - br >= c->stride || tc - bc >= c->stride)
          chain_error(name + " cannot produce a " + std::to_string(tr) + "x" +
                      std::to_string(tc) + " output from " +
                      std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
        shape = {tr, tc, c->out_channels};
      } else {
        planner.before_conv(*c, shape);
        shape = {conv_out(shape.rows, c->stride), conv_out(shape.cols, c->stride),
                 c->out_channels};
      }
      producer = name + " (out " + std::to_string(c->out_channels) + ")";
    } else if (const auto* a = std::get_if<AttentionLayer>(&layer)) {
      ++attention_count;
      if (attention_count > 1) chain_error(name + " is a second attention block");
      if (phase == 2) chain_error(name + " follows a deconvolution");
      phase = 1;
      if (a->channels != shape.channels)
        chain_error(producer + " outputs " + std::to_string(shape.channels) +
                    " channels but " + name + " expects " + std::to_string(a->channels));
      if (a->reduced_channels == 0 || a->pool == 0)
        chain_error(name + " needs reduced_channels >= 1 and pool >= 1");
      const std::size_t fg = a->reduced_channels * a->channels;
      if (a->w_f.size() != fg || a->w_g.size() != fg ||
          a->w_h.size() != a->channels * a->channels)
        chain_error(name + " projection sizes do not match its channel counts");
    } else {
      const auto& s = std::get<ShortcutLayer>(layer);
      if (s.add) {
        auto it = slots.find(s.slot);
        if (it == slots.end())
          chain_error(name + " adds slot " + std::to_string(s.slot) + " before it is saved");
        if (!(it->second == shape))
          chain_error(name + " adds slot " + std::to_string(s.slot) +
                      " of a different shape");
      } else {
        slots[s.slot] = shape;
      }
    }
  }

  if (weights.ablation_no_attention && attention_count != 0)
    chain_error("ablation flag set but the layer list has an attention block");
  if (!weights.ablation_no_attention && attention_count == 0 && !weights.layers.empty())
    chain_error("no attention block but the ablation flag is not set");
  if (shape.channels != 1)
    chain_error(producer + " outputs " + std::to_string(shape.channels) +
                " channels, the generator must end with 1");
  if (shape.rows != weights.input_side || shape.cols != weights.input_side)
    chain_error("output is " + std::to_string(shape.rows) + "x" +
                std::to_string(shape.cols) + ", expected " +
                std::to_string(weights.input_side) + "x" +
                std::to_string(weights.input_side));
}

FeatureTensor average_pool(const FeatureTensor& x, std::size_t pool) {
  const std::size_t pr = (x.rows() + pool - 1) / pool;
  const std::size_t pc = (x.cols() + pool - 1) / pool;
  FeatureTensor out(pr, pc, x.channels());
  for (std::size_t ch = 0; ch < x.channels(); ++ch) {
    for (std::size_t br = 0; br < pr; ++br) {
      for (std::size_t bc = 0; bc < pc; ++bc) {
        const std::size_t r1 = std::min(x.rows(), (br + 1) * pool);
        const std::size_t c1 = std::min(x.cols(), (bc + 1) * pool);
        double sum = 0.0;
        for (std::size_t r = br * pool; r < r1; ++r)
          for (std::size_t c = bc * pool; c < c1; ++c) sum += x.at(ch, r, c);
        out.at(ch, br, bc) =
            sum / static_cast<double>((r1 - br * pool) * (c1 - bc * pool));
      }
    }
  }
  return out;
}

namespace {

/// out[k][p] = sum_c w[k][c] x[c][p] for a 1x1 projection.
std::vector<double> project(const FeatureTensor& x, const std::vector<float>& w,
                            std::size_t out_channels) {
  const std::size_t np = x.plane();
  std::vector<double> out(out_channels * np, 0.0);
  for (std::size_t k = 0; k < out_channels; ++k) {
    double* dst = out.data() + k * np;
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double wkc = w[k * x.channels() + c];
      const auto src = x.channel(c);
      for (std::size_t p = 0; p < np; ++p) dst[p] += wkc * src[p];
    }
  }
  return out;
}

void check_attention_shape(const FeatureTensor& x, const AttentionLayer& layer) {
  if (x.channels() != layer.channels)
    throw InvalidInput("attention: tensor has " + std::to_string(x.channels()) +
                       " channels, weights expect " + std::to_string(layer.channels));
  if (layer.pool == 0 || layer.reduced_channels == 0)
    throw InvalidInput("attention: pool and reduced channels must be >= 1");
  const std::size_t fg = layer.reduced_channels * layer.channels;
  if (layer.w_f.size() != fg || layer.w_g.size() != fg ||
      layer.w_h.size() != layer.channels * layer.channels)
    throw InvalidInput("attention: projection sizes do not match channel counts");
}

std::vector<double> pooled_attention_map(const FeatureTensor& pooled,
                                         const AttentionLayer& layer) {
  const std::size_t np = pooled.plane();
  const std::size_t cr = layer.reduced_channels;
  const auto f = project(pooled, layer.w_f, cr);
  const auto g = project(pooled, layer.w_g, cr);

  std::vector<double> map(np * np, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    double* row = map.data() + i * np;
    for (std::size_t k = 0; k < cr; ++k) {
      const double fi = f[k * np + i];
      const double* gk = g.data() + k * np;
      for (std::size_t j = 0; j < np; ++j) row[j] += fi * gk[j];
    }
    const double peak = *std::max_element(row, row + np);
    double total = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < np; ++j) row[j] /= total;
  }
  return map;
}

}  // namespace

std::vector<double> attention_map(const FeatureTensor& x, const AttentionLayer& layer) {
  check_attention_shape(x, layer);
  return pooled_attention_map(average_pool(x, layer.pool), layer);
}

FeatureTensor self_attention_forward(const FeatureTensor& x, const AttentionLayer& layer) {
  check_attention_shape(x, layer);
  const FeatureTensor pooled = average_pool(x, layer.pool);
  const std::size_t np = pooled.plane();
  const auto map = pooled_attention_map(pooled, layer);
  const auto h = project(pooled, layer.w_h, layer.channels);

  // attended[c][i] = sum_j map[i][j] h[c][j]
  std::vector<double> attended(layer.channels * np, 0.0);
  for (std::size_t c = 0; c < layer.channels; ++c) {
    const double* hc = h.data() + c * np;
    for (std::size_t i = 0; i < np; ++i) {
      const double* row = map.data() + i * np;
      double acc = 0.0;
      for (std::size_t j = 0; j < np; ++j) acc += row[j] * hc[j];
      attended[c * np + i] = acc;
    }
  }

  const double gamma = layer.gamma;
  FeatureTensor out = x;
  const std::size_t pc = pooled.cols();
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t col = 0; col < x.cols(); ++col)
        out.at(c, r, col) =
            gamma * attended[c * np + (r / layer.pool) * pc + col / layer.pool] +
            x.at(c, r, col);
  return out;
}

FeatureTensor conv_forward(const FeatureTensor& x, const ConvLayer& layer,
                           std::size_t target_rows, std::size_t target_cols) {
  if (x.channels() != layer.in_channels)
    throw InvalidInput("conv: tensor has " + std::to_string(x.channels()) +
                       " channels, layer expects " + std::to_string(layer.in_channels));
  const std::size_t kh = layer.kernel_h;
  const std::size_t kw = layer.kernel_w;
  const long ph = static_cast<long>(kh / 2);
  const long pw = static_cast<long>(kw / 2);
  const long s = static_cast<long>(layer.stride);
  const std::size_t cin = layer.in_channels;
  const std::size_t cout = layer.out_channels;

  std::size_t orow, ocol;
  if (layer.transposed) {
    orow = target_rows ? target_rows : deconv_base(x.rows(), kh, layer.stride);
    ocol = target_cols ? target_cols : deconv_base(x.cols(), kw, layer.stride);
  } else {
    orow = conv_out(x.rows(), layer.stride);
    ocol = conv_out(x.cols(), layer.stride);
  }
  FeatureTensor out(orow, ocol, cout);
  const long in_r = static_cast<long>(x.rows());
  const long in_c = static_cast<long>(x.cols());
  const long out_r = static_cast<long>(orow);
  const long out_c = static_cast<long>(ocol);

  if (!layer.transposed) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t i = 0; i < cin; ++i) {
        const float* w = layer.weights.data() + (o * cin + i) * kh * kw;
        for (long y = 0; y < out_r; ++y) {
          for (long xo = 0; xo < out_c; ++xo) {
            double acc = 0.0;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long iy = y * s - ph + static_cast<long>(ky);
              if (iy < 0 || iy >= in_r) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long ix = xo * s - pw + static_cast<long>(kx);
                if (ix < 0 || ix >= in_c) continue;
                acc += static_cast<double>(w[ky * kw + kx]) *
                       x.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
            }
            out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(xo)) += acc;
          }
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < cin; ++i) {
      for (std::size_t o = 0; o < cout; ++o) {
        const float* w = layer.weights.data() + (i * cout + o) * kh * kw;
        for (long iy = 0; iy < in_r; ++iy) {
          for (long ix = 0; ix < in_c; ++ix) {
            const double v = x.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long y = iy * s - ph + static_cast<long>(ky);
              if (y < 0 || y >= out_r) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long xo = ix * s - pw + static_cast<long>(kx);
                if (xo < 0 || xo >= out_c) continue;
                out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(xo)) +=
                    v * static_cast<double>(w[ky * kw + kx]);
              }
            }
          }
        }
      }
    }
  }

  for (std::size_t o = 0; o < cout; ++o) {
    const double b = layer.has_bias ? static_cast<double>(layer.bias[o]) : 0.0;
    for (double& v : out.channel(o)) v = activate(v + b, layer.activation, layer.slope);
  }
  return out;
}

ImageGrid generator_forward(const ImageGrid& image, const GeneratorWeights& weights) {
  if (image.side() != weights.input_side)
    throw InvalidInput("generator: image side " + std::to_string(image.side()) +
                       " does not match the weights' input side " +
                       std::to_string(weights.input_side));
  if (!image.all_finite())
    throw InvalidInput("generator: input image contains non-finite values");

  const std::size_t n = image.side();
  std::vector<double> scaled(image.values().begin(), image.values().end());
  for (double& v : scaled) v /= weights.normalization_max;
  FeatureTensor x(n, n, 1, std::move(scaled));

  std::map<std::size_t, FeatureTensor> slots;
  SizePlanner planner;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& layer = weights.layers[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const Shape shape{x.rows(), x.cols(), x.channels()};
      if (c->transposed) {
        auto [tr, tc] = planner.deconv_target(*c, shape);
        x = conv_forward(x, *c, tr, tc);
      } else {
        planner.before_conv(*c, shape);
        x = conv_forward(x, *c);
      }
    } else if (const auto* a = std::get_if<AttentionLayer>(&layer)) {
      x = self_attention_forward(x, *a);
    } else {
      const auto& s = std::get<ShortcutLayer>(layer);
      if (!s.add) {
        slots[s.slot] = x;
      } else {
        auto it = slots.find(s.slot);
        if (it == slots.end() || it->second.size() != x.size())
          throw InvalidInput("generator: " + describe(i, layer) +
                             " has no matching saved activation");
        auto dst = x.values();
        auto src = it->second.values();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
    if (!x.all_finite())
      throw DataError("generator: non-finite activation after " + describe(i, layer));
  }

  if (x.channels() != 1 || x.rows() != n || x.cols() != n)
    throw InvalidInput("generator: output shape does not match the input image");

  ImageGrid out(n, image.pixel_size());
  auto dst = out.values();
  auto src = x.values();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k] * weights.normalization_max;
  return out;
}

GeneratorLayout default_layout(bool attention) {
  GeneratorLayout layout;
  layout.channels = {32, 32, 64, 64, 128, 128, 256, 256, 512, 512};
  layout.strides = {1, 2, 1, 2, 1, 2, 1, 2, 1, 2};
  layout.attention = attention;
  return layout;
}

GeneratorWeights make_generator(std::size_t input_side, const GeneratorLayout& layout,
                                double normalization_max, std::uint64_t seed) {
  if (layout.channels.size() != layout.strides.size())
    throw InvalidInput("make_generator: one stride per encoder layer is required");
  std::mt19937_64 rng(seed);
  auto fill = [&rng](std::vector<float>& dst, std::size_t count, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    dst.resize(count);
    for (auto& v : dst) v = static_cast<float>(dist(rng));
  };

  GeneratorWeights w;
  w.input_side = input_side;
  w.normalization_max = normalization_max;
  w.ablation_no_attention = !layout.attention;

  auto add_conv = [&](bool transposed, std::size_t in, std::size_t out,
                      std::size_t stride, Activation act) {
    ConvLayer c;
    c.transposed = transposed;
    c.kernel_h = c.kernel_w = layout.kernel;
    c.stride = stride;
    c.in_channels = in;
    c.out_channels = out;
    c.activation = act;
    c.slope = layout.slope;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * layout.kernel * layout.kernel));
    fill(c.weights, c.weight_count(), bound);
    fill(c.bias, out, bound);
    w.layers.emplace_back(std::move(c));
  };

  std::size_t prev = 1;
  for (std::size_t j = 0; j < layout.channels.size(); ++j) {
    add_conv(false, prev, layout.channels[j], layout.strides[j], Activation::leaky_relu);
    prev = layout.channels[j];
  }
  if (layout.attention && prev > 0) {
    AttentionLayer a;
    a.channels = prev;
    a.reduced_channels = std::max<std::size_t>(prev / 8, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    fill(a.w_f, a.reduced_channels * prev, bound);
    fill(a.w_g, a.reduced_channels * prev, bound);
    fill(a.w_h, prev * prev, bound);
    a.gamma = 0.0f;
    w.layers.emplace_back(std::move(a));
  }
  for (std::size_t j = layout.channels.size(); j-- > 0;) {
    const std::size_t out = j > 0 ? layout.channels[j - 1] : 1;
    add_conv(true, layout.channels[j], out, layout.strides[j],
             j > 0 ? Activation::leaky_relu : Activation::linear);
  }
  validate_generator(w);
  return w;
}

}  // namespace tomoprior
