#include "tomoprior/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tomoprior/error.hpp"

namespace tomoprior {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class Writer {
 public:
  void magic(const char (&m)[5]) { out_.append(m, 4); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(double v) {
    const auto f = static_cast<float>(v);
    raw(&f, sizeof f);
  }
  const std::string& bytes() const { return out_; }

 private:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  void expect_magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(bytes_.data(), m, 4) != 0)
      throw DataError(path_ + ": not a " + std::string(m, 4) + " file");
    pos_ = 4;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, sizeof v);
    return v;
  }
  double f32() {
    float v;
    take(&v, sizeof v);
    return v;
  }
  std::vector<double> floats(std::size_t count) {
    if (count > (bytes_.size() - pos_) / 4)
      throw DataError(path_ + ": truncated payload");
    std::vector<double> out(count);
    for (auto& v : out) v = f32();
    if (pos_ != bytes_.size()) throw DataError(path_ + ": trailing bytes after payload");
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(path_ + ": truncated header");
  }
  void take(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw InvalidInput(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_image(const ImageGrid& image, const std::filesystem::path& path) {
  Writer w;
  w.magic("TPI1");
  w.u32(checked_u32(image.side(), "rows"));
  w.u32(checked_u32(image.side(), "cols"));
  w.f32(image.pixel_size());
  for (double v : image.values()) w.f32(v);
  write_file(path, w.bytes());
}

ImageGrid read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes, path.string());
  r.expect_magic("TPI1");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const double pixel_size = r.f32();
  if (rows != cols || rows == 0)
    throw DataError(path.string() + ": image must be square and non-empty");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw DataError(path.string() + ": invalid pixel size");
  auto values = r.floats(static_cast<std::size_t>(rows) * cols);
  ImageGrid image(rows, pixel_size, std::move(values));
  if (!image.all_finite()) throw DataError(path.string() + ": non-finite pixel values");
  return image;
}

void write_sinogram(const Sinogram& sino, const std::filesystem::path& path) {
  const auto& g = sino.geometry();
  Writer w;
  w.magic("TPS1");
  w.u32(checked_u32(g.num_detectors, "num_detectors"));
  w.f32(g.detector_spacing);
  w.u32(checked_u32(g.num_views, "num_views"));
  w.f32(g.angle_start);
  w.f32(g.angular_range);
  for (double v : sino.values()) w.f32(v);
  write_file(path, w.bytes());
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes, path.string());
  r.expect_magic("TPS1");
  ParallelGeometry g;
  g.num_detectors = r.u32();
  g.detector_spacing = r.f32();
  g.num_views = r.u32();
  g.angle_start = r.f32();
  g.angular_range = r.f32();
  // f32 storage can nudge pi just above pi.
  g.angular_range = std::min(g.angular_range, std::numbers::pi);
  try {
    g.validate();
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  auto values = r.floats(g.num_rays());
  Sinogram sino(g, std::move(values));
  if (!sino.all_finite()) throw DataError(path.string() + ": non-finite sinogram values");
  return sino;
}

ImageGrid read_raw_image(const std::filesystem::path& path, double pixel_size) {
  const std::string bytes = read_file(path);
  if (bytes.size() % 4 != 0 || bytes.empty())
    throw DataError(path.string() + ": raw image size is not a multiple of 4 bytes");
  const std::size_t count = bytes.size() / 4;
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (side * side != count) throw DataError(path.string() + ": raw image is not square");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 4 * i, 4);
    values[i] = f;
  }
  ImageGrid image(side, pixel_size, std::move(values));
  if (!image.all_finite()) throw DataError(path.string() + ": non-finite pixel values");
  return image;
}

namespace {

// Kept free of locals that change after setjmp.
void write_gray16(const std::filesystem::path& path, png_uint_32 side,
                  const std::vector<png_byte>& samples) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw DataError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, side, side, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 r = 0; r < side; ++r)
    png_write_row(png, samples.data() + static_cast<std::size_t>(r) * 2 * side);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const ImageGrid& image, const std::filesystem::path& path, double low,
               double high) {
  const auto v = image.values();
  if (v.empty()) throw InvalidInput("write_png: empty image");
  if (!(high > low)) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    low = *mn;
    high = *mx > *mn ? *mx : *mn + 1.0;
  }
  std::vector<png_byte> samples(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::clamp((v[i] - low) / (high - low), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    samples[2 * i] = static_cast<png_byte>(q >> 8);  // PNG samples are big-endian
    samples[2 * i + 1] = static_cast<png_byte>(q & 0xff);
  }
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  write_gray16(path, static_cast<png_uint_32>(image.side()), samples);
}

}  // namespace tomoprior
