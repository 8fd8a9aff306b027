#pragma once

// Loop-level reference formulas for the metrics, TV and attention tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double mse_loop(const std::vector<double>& x, const std::vector<double>& y, std::size_t m,
                       std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = x[i * n + j] - y[i * n + j];
      s += d * d;
    }
  return s / static_cast<double>(m * n);
}

inline double psnr_loop(const std::vector<double>& x, const std::vector<double>& y, std::size_t m,
                        std::size_t n) {
  double peak = y[0];
  for (double v : y) peak = std::max(peak, v);
  return 10.0 * std::log10(peak * peak / mse_loop(x, y, m, n));
}

// Whole-image SSIM with population moments.
inline double ssim_loop(const std::vector<double>& x, const std::vector<double>& y, double c1,
                        double c2) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  return (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

// Isotropic TV, forward differences, replicated last row/column.
inline double tv_loop(const std::vector<double>& x, std::size_t n, double eps) {
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double here = x[i * n + j];
      const double down = i + 1 < n ? x[(i + 1) * n + j] : here;
      const double right = j + 1 < n ? x[i * n + j + 1] : here;
      tv += std::sqrt((down - here) * (down - here) + (right - here) * (right - here) + eps * eps);
    }
  return tv;
}

// Self-attention with the full (m'n') x (m'n') map materialised. Tensors
// are channel-major [c][m][n]; w_f, w_g are [cr][c], w_h is [c][c].
struct AttentionOracle {
  std::vector<double> map;     // row-major
  std::vector<double> output;  // [c][m][n]
};

inline AttentionOracle attention_loop(const std::vector<double>& x, std::size_t m, std::size_t n,
                                      std::size_t c, std::size_t cr, const std::vector<double>& wf,
                                      const std::vector<double>& wg, const std::vector<double>& wh,
                                      double gamma, std::size_t pool = 3) {
  const std::size_t pm = (m + pool - 1) / pool, pn = (n + pool - 1) / pool;
  const std::size_t np = pm * pn;
  std::vector<double> xp(c * np, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t bi = 0; bi < pm; ++bi)
      for (std::size_t bj = 0; bj < pn; ++bj) {
        double s = 0.0;
        int count = 0;
        for (std::size_t i = bi * pool; i < std::min(m, bi * pool + pool); ++i)
          for (std::size_t j = bj * pool; j < std::min(n, bj * pool + pool); ++j) {
            s += x[(ch * m + i) * n + j];
            ++count;
          }
        xp[ch * np + bi * pn + bj] = s / count;
      }

  auto proj = [&](const std::vector<double>& w, std::size_t rows) {
    std::vector<double> out(rows * np, 0.0);
    for (std::size_t k = 0; k < rows; ++k)
      for (std::size_t p = 0; p < np; ++p)
        for (std::size_t ch = 0; ch < c; ++ch) out[k * np + p] += w[k * c + ch] * xp[ch * np + p];
    return out;
  };
  const auto f = proj(wf, cr), g = proj(wg, cr), h = proj(wh, c);

  AttentionOracle o;
  o.map.assign(np * np, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    std::vector<double> s(np, 0.0);
    for (std::size_t j = 0; j < np; ++j)
      for (std::size_t k = 0; k < cr; ++k) s[j] += f[k * np + i] * g[k * np + j];
    double denom = 0.0;
    for (std::size_t j = 0; j < np; ++j) denom += std::exp(s[j]);
    for (std::size_t j = 0; j < np; ++j) o.map[i * np + j] = std::exp(s[j]) / denom;
  }

  o.output.assign(c * m * n, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t p = (i / pool) * pn + j / pool;
        double att = 0.0;
        for (std::size_t q = 0; q < np; ++q) att += o.map[p * np + q] * h[ch * np + q];
        o.output[(ch * m + i) * n + j] = gamma * att + x[(ch * m + i) * n + j];
      }
  return o;
}

}  // namespace oracle
