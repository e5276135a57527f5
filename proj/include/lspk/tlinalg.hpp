#ifndef LSPK_TLINALG_HPP
#define LSPK_TLINALG_HPP

// Tensor-tensor algebra induced by a transform L:
//   facewise product   bdiag(C) = bdiag(A) bdiag(B)
//   t-product          A *_L B = L^{-1}(A_L facewise B_L)
//   conj. transpose    (A^*)_L faces = (A_L faces)^*
//   t-SVD              X = U *_L S *_L V^*

#include "lspk/tensor.hpp"
#include "lspk/transforms.hpp"

#include <Eigen/SVD>

namespace lspk {

/// Each output face is the matrix product of the corresponding input faces.
template <typename Scalar>
BasicTensor<Scalar> facewise_product(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.cols() != b.rows() || a.shape().rest() != b.shape().rest())
    throw DimensionError("facewise product of " + a.shape().str() + " and " + b.shape().str());
  const std::size_t n1 = a.rows(), n2 = a.cols(), k = b.cols(), nf = a.faces();
  BasicTensor<Scalar> c(a.shape().with_matrix(n1, k));
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  Scalar* pc = c.data().data();
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      const Scalar* arow = pa + (i * n2 + j) * nf;
      for (std::size_t q = 0; q < k; ++q) {
        const Scalar* brow = pb + (j * k + q) * nf;
        Scalar* crow = pc + (i * k + q) * nf;
        for (std::size_t f = 0; f < nf; ++f) crow[f] += arow[f] * brow[f];
      }
    }
  return c;
}

/// Faces a_f^* b_f, i.e. facewise_product(face-adjoint(a), b) without forming the adjoint.
inline ComplexTensor facewise_adjoint_product(const ComplexTensor& a, const ComplexTensor& b) {
  if (a.rows() != b.rows() || a.shape().rest() != b.shape().rest())
    throw DimensionError("facewise adjoint product of " + a.shape().str() + " and " + b.shape().str());
  const std::size_t n1 = a.rows(), n2 = a.cols(), k = b.cols(), nf = a.faces();
  ComplexTensor c(a.shape().with_matrix(n2, k));
  const Complex* pa = a.data().data();
  const Complex* pb = b.data().data();
  Complex* pc = c.data().data();
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      const Complex* arow = pa + (i * n2 + j) * nf;
      for (std::size_t q = 0; q < k; ++q) {
        const Complex* brow = pb + (i * k + q) * nf;
        Complex* crow = pc + (j * k + q) * nf;
        for (std::size_t f = 0; f < nf; ++f) crow[f] += std::conj(arow[f]) * brow[f];
      }
    }
  return c;
}

/// Per-face conjugate transpose.
inline ComplexTensor face_adjoint(const ComplexTensor& a) {
  ComplexTensor out(a.shape().with_matrix(a.cols(), a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t f = 0; f < a.faces(); ++f) out.at(j, i, f) = std::conj(a.at(i, j, f));
  return out;
}

/// A *_L X for a: n1 x n2 x rest and x: n2 x k x rest.
inline DenseTensor t_product(const DenseTensor& a, const DenseTensor& x, const TransformSpec& spec) {
  if (a.cols() != x.rows() || a.shape().rest() != x.shape().rest())
    throw DimensionError("t-product of " + a.shape().str() + " and " + x.shape().str());
  return inverse(facewise_product(forward(a, spec), forward(x, spec)), spec);
}

/// Rows idxs (1-based) of A *_L X, computed from the selected horizontal slices of A only.
inline DenseTensor t_product_slices(const DenseTensor& a, std::span<const std::size_t> idxs, const DenseTensor& x,
                                    const TransformSpec& spec) {
  return t_product(horizontal_subtensor(a, idxs), x, spec);
}

inline DenseTensor conj_transpose(const DenseTensor& a, const TransformSpec& spec) {
  return inverse(face_adjoint(forward(a, spec)), spec);
}

/// The tensor whose transform-domain faces are all I_n.
inline DenseTensor identity_tensor(std::size_t n, const std::vector<std::size_t>& rest, const TransformSpec& spec) {
  if (n < 1) throw DimensionError("identity tensor needs n >= 1");
  std::vector<std::size_t> dims{n, n};
  dims.insert(dims.end(), rest.begin(), rest.end());
  ComplexTensor faces{Shape(dims)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < faces.faces(); ++f) faces.at(i, i, f) = 1.0;
  return inverse(faces, spec);
}

struct TSVDFactors {
  DenseTensor u;  // n1 x n1 x rest, orthogonal
  DenseTensor s;  // n1 x n2 x rest, f-diagonal in the transform domain
  DenseTensor v;  // n2 x n2 x rest, orthogonal
};

namespace detail {

/// SVD of one transform-domain face, M = U diag(sigma) V^*.
struct FaceSvd {
  ComplexMatrix u;
  Eigen::VectorXd sigma;
  ComplexMatrix v;
};

// Makes the largest-magnitude entry (first on ties) of each left singular
// vector real positive; the matching right vector takes the same phase.
// Right vectors without a left partner are normalized on their own.
inline void fix_phases(FaceSvd& s) {
  auto pivot_phase = [](const auto& col) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index r = 0; r < col.size(); ++r)
      if (std::abs(col(r)) > mag + 1e-12 * std::max(1.0, mag)) {
        mag = std::abs(col(r));
        best = r;
      }
    const Complex p = col(best);
    return std::abs(p) > 0 ? std::conj(p) / std::abs(p) : Complex(1.0);
  };
  const Eigen::Index r = s.sigma.size();
  for (Eigen::Index k = 0; k < s.u.cols(); ++k) {
    const Complex c = pivot_phase(s.u.col(k));
    s.u.col(k) *= c;
    if (k < r && k < s.v.cols()) s.v.col(k) *= c;
  }
  for (Eigen::Index k = s.u.cols(); k < s.v.cols(); ++k) s.v.col(k) *= pivot_phase(s.v.col(k));
}

inline FaceSvd svd_of_face(const ComplexMatrix& m, bool real_face, bool full, std::size_t face) {
  FaceSvd out;
  const unsigned opts =
      full ? (Eigen::ComputeFullU | Eigen::ComputeFullV) : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (real_face) {
    Eigen::JacobiSVD<Matrix> svd(m.real(), opts);
    if (svd.info() != Eigen::Success)
      throw NumericalError("SVD failed on transform-domain face " + std::to_string(face));
    out.u = svd.matrixU().cast<Complex>();
    out.v = svd.matrixV().cast<Complex>();
    out.sigma = svd.singularValues();
  } else {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, opts);
    if (svd.info() != Eigen::Success)
      throw NumericalError("SVD failed on transform-domain face " + std::to_string(face));
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.sigma = svd.singularValues();
  }
  if (!out.sigma.allFinite() || !out.u.allFinite() || !out.v.allFinite())
    throw NumericalError("SVD produced non-finite factors on transform-domain face " + std::to_string(face));
  const double top = out.sigma.size() ? out.sigma(0) : 0.0;
  for (Eigen::Index k = 0; k < out.sigma.size(); ++k)
    if (out.sigma(k) < 1e-13 * top) out.sigma(k) = 0.0;
  fix_phases(out);
  return out;
}

/// Per-face SVDs of a transform-domain tensor of a real tensor. Faces whose
/// conjugate partner was already factored reuse the conjugated factors, so
/// the factor tensors map back to real tensors.
inline std::vector<FaceSvd> face_svds(const ComplexTensor& tl, const TransformSpec& spec, bool full) {
  const std::size_t nf = tl.faces();
  std::vector<FaceSvd> out(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t g = spec.conjugate_partner(f);
    if (g < f) {
      out[f] = {out[g].u.conjugate(), out[g].sigma, out[g].v.conjugate()};
      continue;
    }
    out[f] = svd_of_face(tl.face(f), g == f, full, f);
  }
  return out;
}

}  // namespace detail

/// t-SVD by full per-face SVDs in the transform domain.
inline TSVDFactors t_svd(const DenseTensor& x, const TransformSpec& spec) {
  const ComplexTensor xl = forward(x, spec);
  const std::size_t n1 = x.rows(), n2 = x.cols();
  const auto svds = detail::face_svds(xl, spec, true);
  ComplexTensor ul(x.shape().with_matrix(n1, n1)), sl(x.shape()), vl(x.shape().with_matrix(n2, n2));
  for (std::size_t f = 0; f < svds.size(); ++f) {
    ul.set_face(f, svds[f].u);
    vl.set_face(f, svds[f].v);
    for (Eigen::Index k = 0; k < svds[f].sigma.size(); ++k) sl.at(k, k, f) = svds[f].sigma(k);
  }
  return {inverse(ul, spec), inverse(sl, spec), inverse(vl, spec)};
}

}  // namespace lspk

#endif  // LSPK_TLINALG_HPP
