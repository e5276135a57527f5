#ifndef LSPK_METRICS_HPP
#define LSPK_METRICS_HPP

#include "lspk/tensor.hpp"

#include <cmath>
#include <limits>

namespace lspk {

/// ||truth - estimate||_F / ||truth||_F
inline double relative_error(const DenseTensor& estimate, const DenseTensor& truth) {
  estimate.require_same_shape(truth);
  const double denom = frobenius_norm(truth);
  if (denom == 0.0) throw MetricError("relative error undefined for a zero reference tensor");
  return frobenius_norm(truth - estimate) / denom;
}

/// 10 log10(numel * ||truth||_inf^2 / ||estimate - truth||_F^2); +infinity for an exact match.
inline double psnr(const DenseTensor& estimate, const DenseTensor& truth) {
  estimate.require_same_shape(truth);
  const double peak = max_abs(truth);
  if (peak == 0.0) throw MetricError("PSNR undefined for a zero reference tensor");
  const double err = frobenius_norm(estimate - truth);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(truth.size()) * peak * peak / (err * err));
}

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

namespace detail {

inline Matrix gaussian_window(std::size_t rows, std::size_t cols, double sigma) {
  Matrix w(rows, cols);
  const double cr = (static_cast<double>(rows) - 1.0) / 2.0, cc = (static_cast<double>(cols) - 1.0) / 2.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double di = static_cast<double>(i) - cr, dj = static_cast<double>(j) - cc;
      w(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  return w / w.sum();
}

// Mean SSIM over valid window positions of one pair of 2D images, dynamic range 1.
inline double ssim_2d(const Matrix& x, const Matrix& y, const SsimOptions& opt) {
  const Eigen::Index wr = std::min<Eigen::Index>(static_cast<Eigen::Index>(opt.window), x.rows());
  const Eigen::Index wc = std::min<Eigen::Index>(static_cast<Eigen::Index>(opt.window), x.cols());
  const Matrix w = gaussian_window(static_cast<std::size_t>(wr), static_cast<std::size_t>(wc), opt.sigma);
  const double c1 = opt.k1 * opt.k1, c2 = opt.k2 * opt.k2;
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index r = 0; r + wr <= x.rows(); ++r)
    for (Eigen::Index c = 0; c + wc <= x.cols(); ++c) {
      const auto bx = x.block(r, c, wr, wc);
      const auto by = y.block(r, c, wr, wc);
      const double mx = w.cwiseProduct(bx).sum();
      const double my = w.cwiseProduct(by).sum();
      const double sxx = w.cwiseProduct(bx.cwiseProduct(bx)).sum() - mx * mx;
      const double syy = w.cwiseProduct(by.cwiseProduct(by)).sum() - my * my;
      const double sxy = w.cwiseProduct(bx.cwiseProduct(by)).sum() - mx * my;
      total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace detail

/// Single-scale SSIM (Gaussian window, sigma 1.5) per frontal slice, averaged
/// over all slices. Both tensors are mapped to [0, 1] with the truth's
/// min/max (left as is when the truth is constant). Slices smaller than the
/// window use a window shrunk to the slice size.
inline double ssim(const DenseTensor& estimate, const DenseTensor& truth, const SsimOptions& opt = {}) {
  estimate.require_same_shape(truth);
  double lo = truth[0], hi = truth[0];
  for (double v : truth.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = hi > lo ? 1.0 / (hi - lo) : 1.0;
  const double shift = hi > lo ? lo : 0.0;
  double total = 0.0;
  for (std::size_t f = 0; f < truth.faces(); ++f) {
    const Matrix x = (estimate.face(f).array() - shift) * scale;
    const Matrix y = (truth.face(f).array() - shift) * scale;
    total += detail::ssim_2d(x, y, opt);
  }
  return total / static_cast<double>(truth.faces());
}

struct MetricReport {
  double re = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

inline MetricReport evaluate(const DenseTensor& estimate, const DenseTensor& truth) {
  return {relative_error(estimate, truth), psnr(estimate, truth), ssim(estimate, truth)};
}

}  // namespace lspk

#endif  // LSPK_METRICS_HPP
