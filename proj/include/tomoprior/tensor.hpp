#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tomoprior {

/// m x n x c activations stored channel-major: value(ch, r, c) lives at
/// (ch * rows + r) * cols + c.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(std::size_t rows, std::size_t cols, std::size_t channels);
  FeatureTensor(std::size_t rows, std::size_t cols, std::size_t channels,
                std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t channels() const { return channels_; }
  std::size_t plane() const { return rows_ * cols_; }
  std::size_t size() const { return values_.size(); }

  double& at(std::size_t ch, std::size_t r, std::size_t c) {
    return values_[(ch * rows_ + r) * cols_ + c];
  }
  double at(std::size_t ch, std::size_t r, std::size_t c) const {
    return values_[(ch * rows_ + r) * cols_ + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> channel(std::size_t ch) {
    return std::span<double>(values_).subspan(ch * plane(), plane());
  }
  std::span<const double> channel(std::size_t ch) const {
    return std::span<const double>(values_).subspan(ch * plane(), plane());
  }

  bool all_finite() const;

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

}  // namespace tomoprior
