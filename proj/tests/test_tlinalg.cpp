#include "lspk/tlinalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lspk;

namespace {

std::vector<TransformKind> kinds() {
  return {TransformKind::fft(), TransformKind::dct(), TransformKind::dwt("db5")};
}

DenseTensor ones_tube(std::size_t n, const std::vector<std::size_t>& rest) {
  std::vector<std::size_t> dims{n, 1};
  dims.insert(dims.end(), rest.begin(), rest.end());
  DenseTensor t{Shape(dims)};
  for (auto& v : t.data()) v = 1.0;
  return t;
}

double orthogonality_defect(const DenseTensor& q, const TransformSpec& spec) {
  const DenseTensor qtq = t_product(conj_transpose(q, spec), q, spec);
  return max_abs_diff(qtq, identity_tensor(q.cols(), q.shape().rest(), spec));
}

}  // namespace

TEST(FacewiseProduct, MatchesPerFaceMatrixProduct) {
  std::mt19937_64 rng(1);
  const DenseTensor a = oracle::random_tensor(Shape{3, 4, 2, 3}, rng);
  const DenseTensor b = oracle::random_tensor(Shape{4, 2, 2, 3}, rng);
  const DenseTensor c = facewise_product(a, b);
  ASSERT_EQ(c.shape(), (Shape{3, 2, 2, 3}));
  for (std::size_t f = 0; f < a.faces(); ++f)
    EXPECT_LE((c.face(f) - a.face(f) * b.face(f)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FacewiseProduct, MismatchIsDimensionError) {
  EXPECT_THROW(facewise_product(DenseTensor(Shape{2, 3, 2}), DenseTensor(Shape{2, 3, 2})), DimensionError);
  EXPECT_THROW(facewise_product(DenseTensor(Shape{2, 3, 2}), DenseTensor(Shape{3, 3, 3})), DimensionError);
}

TEST(TProduct, FftMatchesCircularConvolution) {
  std::mt19937_64 rng(2);
  for (const auto& [sa, sx] : std::vector<std::pair<Shape, Shape>>{{Shape{3, 2, 4}, Shape{2, 3, 4}},
                                                                    {Shape{2, 3, 3, 4}, Shape{3, 2, 3, 4}},
                                                                    {Shape{1, 1, 5}, Shape{1, 1, 5}}}) {
    const DenseTensor a = oracle::random_tensor(sa, rng), x = oracle::random_tensor(sx, rng);
    const auto spec = TransformSpec::make(TransformKind::fft(), sa);
    EXPECT_LE(max_abs_diff(t_product(a, x, spec), oracle::circular_t_product(a, x)), 1e-11) << sa.str();
  }
}

TEST(TProduct, TubeExample) {
  // [1,2] * [3,4] under FFT is circular convolution: [1*3 + 2*4, 1*4 + 2*3].
  const DenseTensor a(Shape{1, 1, 2}, {1.0, 2.0}), x(Shape{1, 1, 2}, {3.0, 4.0});
  const auto spec = TransformSpec::make(TransformKind::fft(), a.shape());
  const DenseTensor c = t_product(a, x, spec);
  EXPECT_NEAR(c[0], 11.0, 1e-13);
  EXPECT_NEAR(c[1], 10.0, 1e-13);
}

TEST(TProduct, DctMatchesTransformDomainDefinition) {
  std::mt19937_64 rng(3);
  const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4, 3}, rng),
                    x = oracle::random_tensor(Shape{2, 2, 4, 3}, rng);
  const auto spec = TransformSpec::make(TransformKind::dct(), a.shape());
  const Matrix c3 = oracle::dct_matrix(4), c4 = oracle::dct_matrix(3);
  auto fwd = [&](const DenseTensor& t) { return oracle::mode_product(oracle::mode_product(t, c3, 3), c4, 4); };
  auto inv = [&](const DenseTensor& t) {
    return oracle::mode_product(oracle::mode_product(t, c3.transpose(), 3), c4.transpose(), 4);
  };
  const DenseTensor al = fwd(a), xl = fwd(x);
  DenseTensor cl(Shape{3, 2, 4, 3});
  for (std::size_t f = 0; f < al.faces(); ++f) cl.set_face(f, al.face(f) * xl.face(f));
  EXPECT_LE(max_abs_diff(t_product(a, x, spec), inv(cl)), 1e-12);
}

TEST(TProduct, Associativity) {
  std::mt19937_64 rng(4);
  for (const auto& kind : kinds()) {
    const Shape rest{1, 1, 3, 4};
    const auto spec = TransformSpec::make(kind, rest);
    const DenseTensor a = oracle::random_tensor(Shape{2, 3, 3, 4}, rng),
                      b = oracle::random_tensor(Shape{3, 2, 3, 4}, rng),
                      c = oracle::random_tensor(Shape{2, 2, 3, 4}, rng);
    EXPECT_LE(max_abs_diff(t_product(t_product(a, b, spec), c, spec), t_product(a, t_product(b, c, spec), spec)), 1e-11)
        << kind.name();
  }
}

TEST(TProduct, FrobeniusBound) {
  // ||A *_L X||_F <= sqrt(rho) ||A||_F ||X||_F
  std::mt19937_64 rng(5);
  for (const auto& kind : kinds())
    for (int rep = 0; rep < 20; ++rep) {
      const DenseTensor a = oracle::random_tensor(Shape{3, 2, 5, 2}, rng),
                        x = oracle::random_tensor(Shape{2, 3, 5, 2}, rng);
      const auto spec = TransformSpec::make(kind, a.shape());
      EXPECT_LE(frobenius_norm(t_product(a, x, spec)),
                std::sqrt(spec.rho()) * frobenius_norm(a) * frobenius_norm(x) * (1 + 1e-12))
          << kind.name();
    }
}

TEST(TProduct, IdentityIsNeutral) {
  std::mt19937_64 rng(6);
  for (const auto& kind : kinds()) {
    const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4, 3}, rng);
    const auto spec = TransformSpec::make(kind, a.shape());
    EXPECT_LE(max_abs_diff(t_product(identity_tensor(3, a.shape().rest(), spec), a, spec), a), 1e-12) << kind.name();
    EXPECT_LE(max_abs_diff(t_product(a, identity_tensor(2, a.shape().rest(), spec), spec), a), 1e-12) << kind.name();
  }
}

TEST(TProduct, FftIdentityIsUnitFirstFace) {
  const auto spec = TransformSpec::make(TransformKind::fft(), std::vector<std::size_t>{3, 2});
  const DenseTensor id = identity_tensor(2, {3, 2}, spec);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t f = 0; f < id.faces(); ++f)
        EXPECT_NEAR(id.at(i, j, f), (i == j && f == 0) ? 1.0 : 0.0, 1e-14);
}

TEST(TProduct, MismatchIsDimensionError) {
  const auto spec = TransformSpec::make(TransformKind::fft(), std::vector<std::size_t>{2});
  EXPECT_THROW(t_product(DenseTensor(Shape{2, 3, 2}), DenseTensor(Shape{2, 3, 2}), spec), DimensionError);
}

TEST(TProductSlices, EqualsRowsOfFullProduct) {
  std::mt19937_64 rng(7);
  const DenseTensor a = oracle::random_tensor(Shape{6, 3, 4}, rng), x = oracle::random_tensor(Shape{3, 2, 4}, rng);
  for (const auto& kind : kinds()) {
    const auto spec = TransformSpec::make(kind, a.shape());
    const DenseTensor full = t_product(a, x, spec);
    const std::vector<std::size_t> idxs{5, 2, 6};
    EXPECT_LE(max_abs_diff(t_product_slices(a, idxs, x, spec), horizontal_subtensor(full, idxs)), 1e-12) << kind.name();
  }
}

TEST(TProductSlices, RowOutOfRange) {
  const auto spec = TransformSpec::make(TransformKind::fft(), std::vector<std::size_t>{2});
  const std::vector<std::size_t> idxs{4};
  EXPECT_THROW(t_product_slices(DenseTensor(Shape{3, 2, 2}), idxs, DenseTensor(Shape{2, 1, 2}), spec), IndexError);
}

TEST(ConjTranspose, FftMatchesIndexReversal) {
  std::mt19937_64 rng(8);
  const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4, 3}, rng);
  const auto spec = TransformSpec::make(TransformKind::fft(), a.shape());
  EXPECT_LE(max_abs_diff(conj_transpose(a, spec), oracle::circular_transpose(a)), 1e-12);
}

TEST(ConjTranspose, OrthogonalTransformsTransposeFaces) {
  std::mt19937_64 rng(9);
  const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4, 2}, rng);
  for (const auto& kind : {TransformKind::dct(), TransformKind::dwt("db5")}) {
    const auto spec = TransformSpec::make(kind, a.shape());
    const DenseTensor at = conj_transpose(a, spec);
    for (std::size_t f = 0; f < a.faces(); ++f)
      EXPECT_LE((at.face(f) - a.face(f).transpose()).cwiseAbs().maxCoeff(), 1e-12) << kind.name();
  }
}

TEST(ConjTranspose, InvolutionAndAdjointIdentity) {
  std::mt19937_64 rng(10);
  for (const auto& kind : kinds()) {
    const DenseTensor a = oracle::random_tensor(Shape{3, 2, 5, 2}, rng),
                      x = oracle::random_tensor(Shape{2, 2, 5, 2}, rng),
                      y = oracle::random_tensor(Shape{3, 2, 5, 2}, rng);
    const auto spec = TransformSpec::make(kind, a.shape());
    EXPECT_LE(max_abs_diff(conj_transpose(conj_transpose(a, spec), spec), a), 1e-12) << kind.name();
    // <A x, y> = <x, A^* y>
    const double lhs = inner_product(t_product(a, x, spec), y);
    const double rhs = inner_product(x, t_product(conj_transpose(a, spec), y, spec));
    EXPECT_NEAR(lhs, rhs, 1e-10) << kind.name();
  }
}

TEST(ConjTranspose, ProductReversal) {
  std::mt19937_64 rng(11);
  const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4}, rng), b = oracle::random_tensor(Shape{2, 4, 4}, rng);
  for (const auto& kind : kinds()) {
    const auto spec = TransformSpec::make(kind, a.shape());
    EXPECT_LE(max_abs_diff(conj_transpose(t_product(a, b, spec), spec),
                           t_product(conj_transpose(b, spec), conj_transpose(a, spec), spec)),
              1e-12)
        << kind.name();
  }
}

TEST(TSvd, ReconstructsAndFactorsAreOrthogonal) {
  std::mt19937_64 rng(12);
  for (const auto& kind : kinds())
    for (const auto& s : {Shape{4, 3, 4}, Shape{2, 5, 3, 2}, Shape{3, 3, 2, 2}}) {
      const DenseTensor x = oracle::random_tensor(s, rng);
      const auto spec = TransformSpec::make(kind, s);
      const auto f = t_svd(x, spec);
      ASSERT_EQ(f.u.shape(), s.with_matrix(s.rows(), s.rows()));
      ASSERT_EQ(f.s.shape(), s);
      ASSERT_EQ(f.v.shape(), s.with_matrix(s.cols(), s.cols()));
      const DenseTensor rec = t_product(t_product(f.u, f.s, spec), conj_transpose(f.v, spec), spec);
      EXPECT_LE(max_abs_diff(rec, x), 1e-11) << kind.name() << " " << s.str();
      EXPECT_LE(orthogonality_defect(f.u, spec), 1e-11) << kind.name();
      EXPECT_LE(orthogonality_defect(f.v, spec), 1e-11) << kind.name();
    }
}

TEST(TSvd, CoreIsFDiagonalInTransformDomain) {
  std::mt19937_64 rng(13);
  const DenseTensor x = oracle::random_tensor(Shape{4, 3, 5}, rng);
  for (const auto& kind : kinds()) {
    const auto spec = TransformSpec::make(kind, x.shape());
    const ComplexTensor sl = forward(t_svd(x, spec).s, spec);
    for (std::size_t f = 0; f < sl.faces(); ++f)
      for (std::size_t i = 0; i < sl.rows(); ++i)
        for (std::size_t j = 0; j < sl.cols(); ++j) {
          if (i == j) {
            EXPECT_LE(std::abs(sl.at(i, j, f).imag()), 1e-10);
            EXPECT_GE(sl.at(i, j, f).real(), -1e-10);
            if (i > 0) {
              EXPECT_LE(std::abs(sl.at(i, j, f)), std::abs(sl.at(i - 1, j - 1, f)) + 1e-10);
            }
          } else {
            EXPECT_LE(std::abs(sl.at(i, j, f)), 1e-10) << kind.name();
          }
        }
  }
}

TEST(TSvd, SingularValuesPreserveEnergy) {
  std::mt19937_64 rng(14);
  const DenseTensor x = oracle::random_tensor(Shape{3, 4, 3, 2}, rng);
  for (const auto& kind : kinds()) {
    const auto spec = TransformSpec::make(kind, x.shape());
    EXPECT_NEAR(frobenius_norm(t_svd(x, spec).s), frobenius_norm(x), 1e-11) << kind.name();
  }
}

TEST(TSvd, RankOneTensorHasOneNonzeroTube) {
  // x = u *_L v^T with u, v tubes of ones: a single nonzero singular tube.
  const std::vector<std::size_t> rest{4};
  const auto spec = TransformSpec::make(TransformKind::fft(), rest);
  const DenseTensor u = ones_tube(3, rest), v = ones_tube(2, rest);
  const DenseTensor x = t_product(u, conj_transpose(v, spec), spec);
  const ComplexTensor sl = forward(t_svd(x, spec).s, spec);
  for (std::size_t f = 0; f < sl.faces(); ++f) EXPECT_LE(std::abs(sl.at(1, 1, f)), 1e-12);
  EXPECT_GT(std::abs(sl.at(0, 0, 0)), 1.0);
}

TEST(TSvd, DiagonalFacesAreTheirOwnCore) {
  // Nonnegative sorted diagonal faces under the identity transform.
  DenseTensor x(Shape{3, 3, 2});
  x.at(0, 0, 0) = 5;
  x.at(1, 1, 0) = 3;
  x.at(2, 2, 0) = 1;
  x.at(0, 0, 1) = 4;
  x.at(1, 1, 1) = 2;
  const auto spec = TransformSpec::make(TransformKind::identity(), x.shape());
  const auto f = t_svd(x, spec);
  EXPECT_LE(max_abs_diff(f.s, x), 1e-13);
}

TEST(TSvd, RealFactorsUnderFft) {
  std::mt19937_64 rng(15);
  const DenseTensor x = oracle::random_tensor(Shape{3, 3, 6}, rng);
  const auto spec = TransformSpec::make(TransformKind::fft(), x.shape());
  EXPECT_NO_THROW(t_svd(x, spec));
}

TEST(TSvd, NonFiniteInputNamesTheFace) {
  const auto spec = TransformSpec::make(TransformKind::identity(), std::vector<std::size_t>{3});
  ComplexTensor bad(Shape{2, 2, 3});
  bad.at(0, 0, 2) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  try {
    detail::face_svds(bad, spec, true);
    FAIL() << "expected a NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("face 2"), std::string::npos) << e.what();
  }
}
