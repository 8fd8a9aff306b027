#include "tomoprior/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tomoprior/error.hpp"
#include "tomoprior/random.hpp"

namespace tomoprior {

ImageGrid rasterize_ellipses(const std::vector<Ellipse>& ellipses, std::size_t side,
                             double pixel_size, const PhantomOptions& options) {
  ImageGrid image(side, pixel_size);
  const double scale = options.attenuation > 0.0
                           ? options.attenuation
                           : 4.0 / (static_cast<double>(side) * pixel_size);
  const std::size_t ss = std::max<std::size_t>(options.supersample, 1);
  const double n = static_cast<double>(side);

  struct Prepared {
    double value, ax2, ay2, cx, cy, c, s;
  };
  std::vector<Prepared> prepared;
  for (const auto& e : ellipses)
    prepared.push_back({e.value, e.axis_x * e.axis_x, e.axis_y * e.axis_y, e.center_x,
                        e.center_y, std::cos(e.angle), std::sin(e.angle)});

  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      double acc = 0.0;
      for (std::size_t sr = 0; sr < ss; ++sr) {
        for (std::size_t sc = 0; sc < ss; ++sc) {
          const double px = (static_cast<double>(c) + (sc + 0.5) / ss) / n * 2.0 - 1.0;
          const double py = 1.0 - (static_cast<double>(r) + (sr + 0.5) / ss) / n * 2.0;
          double v = 0.0;
          for (const auto& e : prepared) {
            const double dx = px - e.cx;
            const double dy = py - e.cy;
            const double u = dx * e.c + dy * e.s;
            const double w = -dx * e.s + dy * e.c;
            if (u * u / e.ax2 + w * w / e.ay2 <= 1.0) v += e.value;
          }
          acc += std::max(v, 0.0);
        }
      }
      image(r, c) = scale * acc / static_cast<double>(ss * ss);
    }
  }
  return image;
}

ImageGrid shepp_logan(std::size_t side, double pixel_size, const PhantomOptions& options) {
  constexpr double deg = std::numbers::pi / 180.0;
  const std::vector<Ellipse> ellipses = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0 * deg},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0 * deg},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  return rasterize_ellipses(ellipses, side, pixel_size, options);
}

ImageGrid random_phantom(std::size_t side, std::uint64_t seed, double pixel_size,
                         const PhantomOptions& options) {
  std::mt19937_64 rng(derive_seed(seed, 0x5048414e544f4dULL));
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<Ellipse> ellipses;
  const double bx = uniform(0.6, 0.8);
  const double by = uniform(0.6, 0.8);
  const double body_angle = uniform(0.0, std::numbers::pi);
  ellipses.push_back({1.0, bx, by, 0.0, 0.0, body_angle});

  const int inner = std::uniform_int_distribution<int>(4, 9)(rng);
  for (int k = 0; k < inner; ++k) {
    const double ax = uniform(0.05, 0.25);
    const double ay = uniform(0.05, 0.25);
    // Keep the inner ellipse inside the body: center within (body - axis).
    const double reach = std::max(0.0, std::min(bx, by) - std::max(ax, ay)) * 0.9;
    const double rad = reach * std::sqrt(uniform(0.0, 1.0));
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double contrast = uniform(0.0, 1.0) < 0.5 ? uniform(-0.6, -0.2) : uniform(0.2, 0.8);
    ellipses.push_back({contrast, ax, ay, rad * std::cos(phi), rad * std::sin(phi),
                        uniform(0.0, std::numbers::pi)});
  }
  return rasterize_ellipses(ellipses, side, pixel_size, options);
}

std::vector<ImageGrid> random_phantoms(std::size_t count, std::size_t side,
                                       std::uint64_t seed, double pixel_size) {
  std::vector<ImageGrid> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(random_phantom(side, derive_seed(seed, i), pixel_size));
  return out;
}

ImageGrid rotate90(const ImageGrid& image, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  const std::size_t n = image.side();
  ImageGrid out(n, image.pixel_size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t sr = r, sc = c;
      // out(r, c) = image(source) for a counter-clockwise turn.
      switch (turns) {
        case 0: break;
        case 1: sr = c; sc = n - 1 - r; break;
        case 2: sr = n - 1 - r; sc = n - 1 - c; break;
        case 3: sr = n - 1 - c; sc = r; break;
      }
      out(r, c) = image(sr, sc);
    }
  }
  return out;
}

}  // namespace tomoprior
