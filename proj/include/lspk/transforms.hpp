#ifndef LSPK_TRANSFORMS_HPP
#define LSPK_TRANSFORMS_HPP

// Invertible linear transforms L applied along modes 3..m:
//
//   L(A) = A x_3 U_{n3} x_4 ... x_m U_{nm}
//
// Every per-mode transform is realized as a square matrix U (plus its
// inverse). FFT modes longer than kFftMatrixThreshold use Eigen's FFT on the
// mode fibers instead of the dense DFT matrix. The constant rho of the
// rho-condition (U_m (x) ... (x) U_3)(...)^* = rho I is the product of the
// per-mode constants rho_i with U_i U_i^* = rho_i I.

#include "lspk/tensor.hpp"
#include "lspk/tensor_io.hpp"

#include <unsupported/Eigen/FFT>

#include <array>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lspk {

inline constexpr std::size_t kFftMatrixThreshold = 16;

/// Orthogonal wavelet scaling (low-pass reconstruction) filters.
inline std::vector<double> wavelet_filter(std::string_view name) {
  if (name == "haar" || name == "db1") return {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2};
  if (name == "db2")
    return {0.48296291314469025, 0.83651630373746899, 0.22414386804185735, -0.12940952255092145};
  if (name == "db5")
    return {0.16010239797419293,  0.6038292697971896,    0.7243085284377729,    0.13842814590132074,
            -0.24229488706638203, -0.032244869584638375, 0.07757149384004572,   -0.006241490212798274,
            -0.012580751999081999, 0.0033357252854737712};
  throw ParameterError("unsupported wavelet '" + std::string(name) + "' (haar, db1, db2, db5)");
}

/// Unnormalized DFT matrix F(k, j) = exp(-2 pi i k j / n); F F^* = n I.
inline ComplexMatrix dft_matrix(std::size_t n) {
  ComplexMatrix f(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      f(k, j) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n));
  return f;
}

/// Orthonormal DCT-II matrix (the convention of MATLAB's dct).
inline Matrix dct_matrix(std::size_t n) {
  Matrix c(n, n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = k == 0 ? std::sqrt(1.0 / dn) : std::sqrt(2.0 / dn);
    for (std::size_t j = 0; j < n; ++j)
      c(k, j) = w * std::cos(std::numbers::pi * (2.0 * j + 1.0) * k / (2.0 * dn));
  }
  return c;
}

/// Single-level periodized orthogonal DWT matrix: first half of the rows are
/// approximation coefficients, second half details. Odd n: the first n-1
/// samples are transformed and the last one is passed through.
inline Matrix dwt_matrix(std::size_t n, std::string_view wavelet) {
  const auto h = wavelet_filter(wavelet);
  const std::size_t len = h.size();
  Matrix w = Matrix::Zero(n, n);
  const std::size_t even = n - n % 2;
  if (even == 0) {
    w(0, 0) = 1.0;
    return w;
  }
  const std::size_t half = even / 2;
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t col = (2 * k + j) % even;
      const double g = (j % 2 == 0 ? 1.0 : -1.0) * h[len - 1 - j];
      w(k, col) += h[j];
      w(half + k, col) += g;
    }
  }
  if (n % 2) w(n - 1, n - 1) = 1.0;
  return w;
}

/// Unbound description of a transform, as named on the command line.
struct TransformKind {
  enum class Type { Identity, FFT, DCT, DWT, Explicit, PerMode };

  Type type = Type::FFT;
  std::string wavelet;                 // DWT
  std::vector<Matrix> matrices;        // Explicit, one per mode 3..m
  std::vector<TransformKind> per_mode; // PerMode (experimental mixed transforms)

  static TransformKind identity() { return {Type::Identity, {}, {}, {}}; }
  static TransformKind fft() { return {Type::FFT, {}, {}, {}}; }
  static TransformKind dct() { return {Type::DCT, {}, {}, {}}; }
  static TransformKind dwt(std::string wavelet = "db5") { return {Type::DWT, std::move(wavelet), {}, {}}; }
  static TransformKind explicit_matrices(std::vector<Matrix> m) { return {Type::Explicit, {}, std::move(m), {}}; }
  /// One kind per transformed mode. Mixed transforms are experimental.
  static TransformKind mixed(std::vector<TransformKind> kinds) { return {Type::PerMode, {}, {}, std::move(kinds)}; }

  std::string name() const {
    switch (type) {
      case Type::Identity: return "identity";
      case Type::FFT: return "fft";
      case Type::DCT: return "dct";
      case Type::DWT: return "dwt:" + wavelet;
      case Type::Explicit: return "explicit";
      case Type::PerMode: {
        std::string s = "mixed:";
        for (std::size_t i = 0; i < per_mode.size(); ++i) s += (i ? "," : "") + per_mode[i].name();
        return s;
      }
    }
    return "?";
  }
};

/// Parses "identity", "fft", "dct", "dwt:<wavelet>", "explicit:<p3>,<p4>,..."
/// (one TNS1 file of shape n x n x 1 per transformed mode) and
/// "mixed:<kind>,<kind>,..." with simple kinds per mode.
inline TransformKind parse_transform(std::string_view name) {
  auto split = [](std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      auto next = s.find(',', pos);
      out.emplace_back(s.substr(pos, next - pos));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    return out;
  };
  if (name == "identity") return TransformKind::identity();
  if (name == "fft") return TransformKind::fft();
  if (name == "dct") return TransformKind::dct();
  if (name.starts_with("dwt:")) {
    std::string w(name.substr(4));
    wavelet_filter(w);
    return TransformKind::dwt(w);
  }
  if (name == "dwt") return TransformKind::dwt("db5");
  if (name.starts_with("explicit:")) {
    std::vector<Matrix> mats;
    for (const auto& path : split(name.substr(9))) {
      if (path.empty()) throw ParameterError("explicit transform: empty path");
      const DenseTensor t = load_tns1(path);
      if (t.rows() != t.cols() || t.faces() != 1)
        throw ParameterError("explicit transform: " + path + " must hold an n x n x 1 tensor");
      mats.push_back(t.face(0));
    }
    return TransformKind::explicit_matrices(std::move(mats));
  }
  if (name.starts_with("mixed:")) {
    std::vector<TransformKind> kinds;
    for (const auto& part : split(name.substr(6))) {
      if (part.starts_with("explicit") || part.starts_with("mixed"))
        throw ParameterError("mixed transform parts must be identity, fft, dct or dwt:<wavelet>");
      kinds.push_back(parse_transform(part));
    }
    return TransformKind::mixed(std::move(kinds));
  }
  throw ParameterError("unknown transform '" + std::string(name) + "'");
}

/// One transformed mode: U, U^{-1}, rho_i.
struct ModeTransform {
  TransformKind::Type type;
  std::size_t n = 0;
  ComplexMatrix forward;
  ComplexMatrix inverse;
  double rho = 1.0;
  bool real = true;  // U has real entries
};

/// A transform bound to the extents n3..nm of the tensors it acts on.
class TransformSpec {
public:
  TransformSpec() = default;

  /// Builds per-mode matrices for the given rest extents (n3, ..., nm).
  /// Explicit matrices must be square, of matching size and invertible.
  static TransformSpec make(const TransformKind& kind, std::vector<std::size_t> rest) {
    TransformSpec spec;
    spec.kind_ = kind;
    spec.rest_ = std::move(rest);
    if (spec.rest_.empty()) throw DimensionError("transform needs at least one transformed mode");
    if (kind.type == TransformKind::Type::Explicit && kind.matrices.size() != spec.rest_.size())
      throw DimensionError("explicit transform has " + std::to_string(kind.matrices.size()) +
                           " matrices for " + std::to_string(spec.rest_.size()) + " transformed modes");
    if (kind.type == TransformKind::Type::PerMode && kind.per_mode.size() != spec.rest_.size())
      throw DimensionError("mixed transform has " + std::to_string(kind.per_mode.size()) + " parts for " +
                           std::to_string(spec.rest_.size()) + " transformed modes");
    spec.rho_ = 1.0;
    for (std::size_t p = 0; p < spec.rest_.size(); ++p) {
      const TransformKind& k = kind.type == TransformKind::Type::PerMode ? kind.per_mode[p] : kind;
      spec.modes_.push_back(build_mode(k, spec.rest_[p], p));
      spec.rho_ *= spec.modes_.back().rho;
    }
    spec.build_partners();
    return spec;
  }

  static TransformSpec make(const TransformKind& kind, const Shape& shape) { return make(kind, shape.rest()); }

  const TransformKind& kind() const noexcept { return kind_; }
  std::string name() const { return kind_.name(); }
  double rho() const noexcept { return rho_; }
  const std::vector<std::size_t>& rest() const noexcept { return rest_; }
  const std::vector<ModeTransform>& modes() const noexcept { return modes_; }
  std::size_t faces() const noexcept { return partner_.size(); }

  /// True if every U_i has real entries, so real tensors have real faces.
  bool is_real() const {
    return std::all_of(modes_.begin(), modes_.end(), [](const ModeTransform& m) { return m.real; });
  }

  /// For a real tensor, transform-domain face f equals the complex conjugate
  /// of face conjugate_partner(f). Faces that are their own partner are real.
  std::size_t conjugate_partner(std::size_t f) const { return partner_.at(f); }

  void require_compatible(const Shape& s) const {
    if (s.rest() != rest_)
      throw DimensionError("transform bound to trailing extents " + rest_str() + " applied to tensor " + s.str());
  }

  std::string rest_str() const {
    std::string s;
    for (std::size_t i = 0; i < rest_.size(); ++i) s += (i ? "x" : "") + std::to_string(rest_[i]);
    return s;
  }

private:
  static ModeTransform build_mode(const TransformKind& k, std::size_t n, std::size_t p) {
    ModeTransform m;
    m.type = k.type;
    m.n = n;
    const double dn = static_cast<double>(n);
    switch (k.type) {
      case TransformKind::Type::Identity:
        m.forward = m.inverse = ComplexMatrix::Identity(n, n);
        break;
      case TransformKind::Type::FFT:
        m.forward = dft_matrix(n);
        m.inverse = m.forward.adjoint() / dn;
        m.rho = dn;
        m.real = n <= 2;
        break;
      case TransformKind::Type::DCT: {
        const Matrix c = dct_matrix(n);
        m.forward = c.cast<Complex>();
        m.inverse = c.transpose().cast<Complex>();
        break;
      }
      case TransformKind::Type::DWT: {
        const Matrix w = dwt_matrix(n, k.wavelet);
        m.forward = w.cast<Complex>();
        m.inverse = w.transpose().cast<Complex>();
        break;
      }
      case TransformKind::Type::Explicit: {
        const Matrix& u = k.matrices[p];
        if (static_cast<std::size_t>(u.rows()) != n || static_cast<std::size_t>(u.cols()) != n)
          throw DimensionError("explicit matrix for mode " + std::to_string(p + 3) + " is " +
                               std::to_string(u.rows()) + "x" + std::to_string(u.cols()) + ", expected " +
                               std::to_string(n) + "x" + std::to_string(n));
        Eigen::FullPivLU<Matrix> lu(u);
        if (!lu.isInvertible())
          throw ParameterError("explicit matrix for mode " + std::to_string(p + 3) + " is singular");
        const Matrix inv = lu.solve(Matrix::Identity(n, n));
        if (!inv.allFinite() || (u * inv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
          throw ParameterError("explicit matrix for mode " + std::to_string(p + 3) + " is numerically singular");
        m.forward = u.cast<Complex>();
        m.inverse = inv.cast<Complex>();
        m.rho = (u * u.transpose()).trace() / dn;
        break;
      }
      case TransformKind::Type::PerMode:
        throw ParameterError("nested mixed transforms are not supported");
    }
    return m;
  }

  void build_partners() {
    std::size_t nf = 1;
    for (auto d : rest_) nf *= d;
    partner_.resize(nf);
    std::vector<std::size_t> idx(rest_.size());
    for (std::size_t f = 0; f < nf; ++f) {
      std::size_t rem = f;
      for (std::size_t p = rest_.size(); p-- > 0;) {
        idx[p] = rem % rest_[p];
        rem /= rest_[p];
      }
      std::size_t g = 0;
      for (std::size_t p = 0; p < rest_.size(); ++p) {
        std::size_t i = idx[p];
        if (modes_[p].type == TransformKind::Type::FFT) i = (rest_[p] - i) % rest_[p];
        g = g * rest_[p] + i;
      }
      partner_[f] = g;
    }
  }

  TransformKind kind_;
  std::vector<std::size_t> rest_;
  std::vector<ModeTransform> modes_;
  std::vector<std::size_t> partner_;
  double rho_ = 1.0;
};

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

// Applies u along 0-based mode `mode` in place of a copy; the result may have a
// different extent at that mode.
template <typename Out, typename In, typename MatScalar>
BasicTensor<Out> apply_mode_matrix(const BasicTensor<In>& t,
                                   const Eigen::Matrix<MatScalar, Eigen::Dynamic, Eigen::Dynamic>& u,
                                   std::size_t mode) {
  const auto& dims = t.shape().dims();
  const std::size_t n = dims[mode];
  if (static_cast<std::size_t>(u.cols()) != n)
    throw DimensionError("mode-" + std::to_string(mode + 1) + " product: matrix has " + std::to_string(u.cols()) +
                         " columns, tensor extent is " + std::to_string(n));
  std::size_t outer = 1, inner = 1;
  for (std::size_t p = 0; p < mode; ++p) outer *= dims[p];
  for (std::size_t p = mode + 1; p < dims.size(); ++p) inner *= dims[p];
  const std::size_t nout = static_cast<std::size_t>(u.rows());
  auto out_dims = dims;
  out_dims[mode] = nout;
  BasicTensor<Out> out{Shape(out_dims)};
  const In* src = t.data().data();
  Out* dst = out.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    const In* sblock = src + o * n * inner;
    Out* dblock = dst + o * nout * inner;
    for (std::size_t a = 0; a < nout; ++a) {
      Out* drow = dblock + a * inner;
      for (std::size_t b = 0; b < n; ++b) {
        const MatScalar w = u(a, b);
        if (w == MatScalar{}) continue;
        const In* srow = sblock + b * inner;
        for (std::size_t k = 0; k < inner; ++k) drow[k] += w * srow[k];
      }
    }
  }
  return out;
}

// FFT (or inverse FFT, scaled by 1/n) along 0-based mode `mode`, in place.
inline void fft_along_mode(ComplexTensor& t, std::size_t mode, bool inverse) {
  const auto& dims = t.shape().dims();
  const std::size_t n = dims[mode];
  std::size_t outer = 1, inner = 1;
  for (std::size_t p = 0; p < mode; ++p) outer *= dims[p];
  for (std::size_t p = mode + 1; p < dims.size(); ++p) inner *= dims[p];
  std::vector<Complex> in(n), out(n);
  auto& engine = fft_engine();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < inner; ++k) {
      Complex* base = t.data().data() + o * n * inner + k;
      for (std::size_t j = 0; j < n; ++j) in[j] = base[j * inner];
      if (inverse)
        engine.inv(out.data(), in.data(), static_cast<Eigen::Index>(n));
      else
        engine.fwd(out.data(), in.data(), static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) base[j * inner] = out[j];
    }
  }
}

inline void apply_transform(ComplexTensor& t, const TransformSpec& spec, bool inverse) {
  for (std::size_t p = 0; p < spec.modes().size(); ++p) {
    const auto& m = spec.modes()[p];
    const std::size_t mode = p + 2;
    if (m.type == TransformKind::Type::Identity) continue;
    if (m.type == TransformKind::Type::FFT && m.n > kFftMatrixThreshold) {
      fft_along_mode(t, mode, inverse);
    } else {
      t = apply_mode_matrix<Complex>(t, inverse ? m.inverse : m.forward, mode);
    }
  }
}

}  // namespace detail

/// Mode-i product B = A x_mode U with mode 1-based: B_(mode) = U * A_(mode).
template <typename Scalar, typename MatScalar>
auto mode_product(const BasicTensor<Scalar>& t, const Eigen::Matrix<MatScalar, Eigen::Dynamic, Eigen::Dynamic>& u,
                  std::size_t mode) {
  using Out = std::common_type_t<Scalar, MatScalar>;
  if (mode < 1 || mode > t.shape().order())
    throw DimensionError("mode " + std::to_string(mode) + " outside [1, " + std::to_string(t.shape().order()) + "]");
  return detail::apply_mode_matrix<Out>(t, u, mode - 1);
}

/// L(t): transform along modes 3..m.
inline ComplexTensor forward(const ComplexTensor& t, const TransformSpec& spec) {
  spec.require_compatible(t.shape());
  ComplexTensor out = t;
  detail::apply_transform(out, spec, false);
  return out;
}

inline ComplexTensor forward(const DenseTensor& t, const TransformSpec& spec) {
  return forward(to_complex(t), spec);
}

/// L^{-1}(t) without the real-result check.
inline ComplexTensor inverse_complex(const ComplexTensor& t, const TransformSpec& spec) {
  spec.require_compatible(t.shape());
  ComplexTensor out = t;
  detail::apply_transform(out, spec, true);
  return out;
}

/// Discards an imaginary residue of at most 1e-8 (1 + max|Re|); larger
/// residue means the input was not the image of a real tensor.
inline DenseTensor real_part_checked(const ComplexTensor& c) {
  double max_re = 0.0, max_im = 0.0;
  for (const auto& v : c.data()) {
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
  }
  if (!(max_im <= 1e-8 * (1.0 + max_re))) {
    std::ostringstream os;
    os << "inverse transform is not real: max |Im| = " << max_im << ", max |Re| = " << max_re;
    throw NonRealResultError(os.str());
  }
  DenseTensor out(c.shape());
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].real();
  if (!out.all_finite()) throw NumericalError("inverse transform produced non-finite entries");
  return out;
}

/// L^{-1}(t), required to be real.
inline DenseTensor inverse(const ComplexTensor& t, const TransformSpec& spec) {
  return real_part_checked(inverse_complex(t, spec));
}

struct TransformReport {
  bool pass = false;
  double rho = 0.0;           // product of measured per-mode constants
  double stored_rho = 0.0;
  double worst_deviation = 0.0;  // max entrywise |U U^* - rho_i I| and |U^* U - rho_i I| over modes
  std::vector<double> mode_rho;
  std::string message;
};

/// Audits the rho-condition mode by mode. Test-scale only: materializes every
/// per-mode matrix. A transform that cannot be built yields a failing report.
inline TransformReport verify_transform(const TransformKind& kind, const Shape& shape) {
  TransformReport rep;
  TransformSpec spec;
  try {
    spec = TransformSpec::make(kind, shape);
  } catch (const Error& e) {
    rep.message = e.what();
    return rep;
  }
  rep.stored_rho = spec.rho();
  rep.rho = 1.0;
  for (const auto& m : spec.modes()) {
    const ComplexMatrix uu = m.forward * m.forward.adjoint();
    const ComplexMatrix u2 = m.forward.adjoint() * m.forward;
    const double rho_i = uu.trace().real() / static_cast<double>(m.n);
    const ComplexMatrix target = rho_i * ComplexMatrix::Identity(m.n, m.n);
    const double dev = std::max((uu - target).cwiseAbs().maxCoeff(), (u2 - target).cwiseAbs().maxCoeff());
    rep.mode_rho.push_back(rho_i);
    rep.rho *= rho_i;
    rep.worst_deviation = std::max(rep.worst_deviation, dev);
  }
  const double rho_dev = std::abs(rep.rho - rep.stored_rho);
  rep.pass = rep.worst_deviation <= 1e-8 && rho_dev <= 1e-8 * std::max(1.0, rep.stored_rho);
  std::ostringstream os;
  os << (rep.pass ? "rho-condition holds" : "rho-condition violated") << ": rho = " << rep.rho
     << ", worst deviation = " << rep.worst_deviation;
  rep.message = os.str();
  return rep;
}

inline TransformReport verify_transform(const TransformSpec& spec) {
  std::vector<std::size_t> dims{1, 1};
  dims.insert(dims.end(), spec.rest().begin(), spec.rest().end());
  return verify_transform(spec.kind(), Shape(dims));
}

}  // namespace lspk

#endif  // LSPK_TRANSFORMS_HPP
