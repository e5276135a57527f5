#ifndef LSPK_REGULARIZERS_HPP
#define LSPK_REGULARIZERS_HPP

#include "lspk/tensor.hpp"
#include "lspk/tlinalg.hpp"
#include "lspk/transforms.hpp"

#include <cmath>
#include <sstream>

namespace lspk {

/// Log-sum penalty parameters: weight lambda and cusp parameter epsilon.
struct LspParams {
  double lambda = 0.0;
  double epsilon = 1.0;

  /// lambda >= 0 (0 is the degenerate quadratic case), epsilon > 0.
  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and >= 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be finite and > 0");
  }

  /// sqrt(lambda) < epsilon: lambda*LSP + 1/2||.||^2 is alpha-strongly convex.
  bool strongly_convex() const { return lambda < epsilon * epsilon; }
  double alpha() const { return 1.0 - lambda / (epsilon * epsilon); }

  /// epsilon^2 >= 4 lambda: (|z| + eps)^2 >= 4 lambda for every z.
  bool criterion_holds_everywhere() const { return epsilon * epsilon >= 4.0 * lambda; }
};

inline double lsp_value(const DenseTensor& x, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
  double s = 0.0;
  for (double v : x.data()) s += std::log1p(std::abs(v) / epsilon);
  return s;
}

/// 1/2 (x - |z|)^2 + lambda log(1 + x / eps), the scalar prox objective on x >= 0.
inline double lsp_prox_objective(double x, double abs_z, const LspParams& p) {
  const double d = x - abs_z;
  return 0.5 * d * d + p.lambda * std::log1p(x / p.epsilon);
}

/// Scalar prox of lambda*log(1 + |.|/eps). Candidates are 0 and the two
/// clamped stationary points; the one with the least objective wins, ties
/// going to the smaller magnitude. If (|z| + eps)^2 < 4 lambda the objective
/// is increasing on [0, inf) and the result is 0; *fallback is then set.
inline double lsp_prox_scalar(double z, const LspParams& p, bool* fallback = nullptr) {
  const double az = std::abs(z);
  const double s = az + p.epsilon;
  const bool scaled = s > 1e150;  // s^2 would overflow
  const double disc = scaled ? 1.0 - 4.0 * p.lambda / s / s : s * s - 4.0 * p.lambda;
  if (fallback) *fallback = disc < 0.0;
  if (disc < 0.0 || az == 0.0) return 0.0;
  const double r = scaled ? s * std::sqrt(disc) : std::sqrt(disc);
  const double z1 = std::max(0.0, 0.5 * ((az - p.epsilon) + r));
  const double z2 = std::max(0.0, 0.5 * ((az - p.epsilon) - r));
  double best = 0.0;
  double best_obj = lsp_prox_objective(0.0, az, p);
  for (double c : {z2, z1}) {
    const double obj = lsp_prox_objective(c, az, p);
    if (obj < best_obj) {
      best = c;
      best_obj = obj;
    }
  }
  return std::copysign(best, z);
}

struct ProxStats {
  std::size_t fallback_count = 0;  // entries where (|z| + eps)^2 < 4 lambda
};

/// Elementwise LSP prox.
inline DenseTensor lsp_prox(const DenseTensor& z, const LspParams& p, ProxStats* stats = nullptr) {
  p.validate();
  DenseTensor out(z.shape());
  std::size_t fallbacks = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    bool fb = false;
    out[k] = lsp_prox_scalar(z[k], p, &fb);
    fallbacks += fb;
  }
  if (stats) stats->fallback_count += fallbacks;
  return out;
}

struct CriterionReport {
  bool pass = true;
  double min_margin = 0.0;     // min over entries of (|z| + eps)^2 - 4 lambda
  std::size_t worst_index = 0; // flat row-major offset of the minimizing entry
  double worst_value = 0.0;
};

/// Checks (|z| + eps)^2 >= 4 lambda for every entry (non-strict).
inline CriterionReport check_criterion(const DenseTensor& z, const LspParams& p) {
  CriterionReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double a = std::abs(z[k]) + p.epsilon;
    const double margin = a * a - 4.0 * p.lambda;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_index = k;
      rep.worst_value = z[k];
    }
  }
  rep.pass = rep.min_margin >= 0.0;
  return rep;
}

namespace detail {

// Real tensor of shape r x 1 x rest holding the spatial-domain diagonal tubes
// S(k, k, :, ..., :) of the t-SVD core, r = min(n1, n2).
inline DenseTensor diagonal_tubes(const std::vector<FaceSvd>& svds, const Shape& shape, const TransformSpec& spec) {
  const std::size_t r = std::min(shape.rows(), shape.cols());
  ComplexTensor tl(shape.with_matrix(r, 1));
  for (std::size_t f = 0; f < svds.size(); ++f)
    for (std::size_t k = 0; k < r; ++k) tl.at(k, 0, f) = svds[f].sigma(static_cast<Eigen::Index>(k));
  return inverse(tl, spec);
}

}  // namespace detail

/// sum_k LSP(S(k, k, :, ..., :)) over the t-SVD core of x.
inline double nlsp_value(const DenseTensor& x, double epsilon, const TransformSpec& spec) {
  const auto svds = detail::face_svds(forward(x, spec), spec, false);
  return lsp_value(detail::diagonal_tubes(svds, x.shape(), spec), epsilon);
}

enum class NlspMode {
  SpatialTubes,           // LSP prox on the spatial-domain diagonal tubes of S
  TransformSingularValues // experimental: LSP prox on each face's singular values
};

/// Nuclear-LSP prox: U *_L prox_LSP(S) *_L V^* where Z = U *_L S *_L V^*.
/// The prox acts on the diagonal tubes of S; off-diagonal residue of S is
/// dropped. Throws ParameterError if some diagonal-tube entry violates
/// (|s| + eps)^2 >= 4 lambda.
inline DenseTensor nlsp_prox(const DenseTensor& z, const LspParams& p, const TransformSpec& spec,
                             NlspMode mode = NlspMode::SpatialTubes) {
  p.validate();
  const ComplexTensor zl = forward(z, spec);
  const auto svds = detail::face_svds(zl, spec, false);
  const std::size_t n1 = z.rows(), n2 = z.cols(), r = std::min(n1, n2), nf = z.faces();

  ComplexTensor dl(z.shape().with_matrix(r, 1));
  if (mode == NlspMode::SpatialTubes) {
    const DenseTensor tubes = detail::diagonal_tubes(svds, z.shape(), spec);
    const CriterionReport crit = check_criterion(tubes, p);
    if (!crit.pass) {
      std::ostringstream os;
      os << "nuclear LSP prox: (|s| + eps)^2 >= 4 lambda fails for lambda = " << p.lambda
         << ", epsilon = " << p.epsilon << " at core value " << crit.worst_value;
      throw ParameterError(os.str());
    }
    dl = forward(lsp_prox(tubes, p), spec);
  } else {
    for (std::size_t f = 0; f < nf; ++f)
      for (std::size_t k = 0; k < r; ++k)
        dl.at(k, 0, f) = lsp_prox_scalar(svds[f].sigma(static_cast<Eigen::Index>(k)), p);
  }

  ComplexTensor xl(z.shape());
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& s = svds[f];
    ComplexMatrix scaled_u = s.u.leftCols(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < r; ++k) scaled_u.col(static_cast<Eigen::Index>(k)) *= dl.at(k, 0, f);
    xl.set_face(f, scaled_u * s.v.leftCols(static_cast<Eigen::Index>(r)).adjoint());
  }
  return inverse(xl, spec);
}

}  // namespace lspk

#endif  // LSPK_REGULARIZERS_HPP
