#include "lspk/tensor.hpp"
#include "lspk/tensor_io.hpp"
#include "lspk/tlinalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

using namespace lspk;

namespace {

DenseTensor iota_tensor(const Shape& s) {
  DenseTensor t(s);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k + 1);
  return t;
}

}  // namespace

TEST(Shape, RejectsOrderBelowThree) {
  EXPECT_THROW(Shape({2, 3}), DimensionError);
  EXPECT_NO_THROW(Shape({2, 3, 1}));
}

TEST(Shape, RejectsZeroExtent) { EXPECT_THROW(Shape({2, 0, 3}), DimensionError); }

TEST(Shape, RejectsElementCountOverflow) {
  const std::size_t big = std::size_t{1} << 40;
  EXPECT_THROW(Shape({big, big, big}), DimensionError);
}

TEST(Shape, Accessors) {
  const Shape s{3, 2, 4, 5};
  EXPECT_EQ(s.order(), 4u);
  EXPECT_EQ(s.rows(), 3u);
  EXPECT_EQ(s.cols(), 2u);
  EXPECT_EQ(s.faces(), 20u);
  EXPECT_EQ(s.numel(), 120u);
  EXPECT_EQ(s.rest(), (std::vector<std::size_t>{4, 5}));
  EXPECT_EQ(s.with_matrix(7, 1), (Shape{7, 1, 4, 5}));
  EXPECT_EQ(s.str(), "3x2x4x5");
}

TEST(DenseTensor, RowMajorLastIndexFastest) {
  const DenseTensor t = iota_tensor(Shape{2, 3, 4});
  EXPECT_EQ(t(0, 0, 1), 2.0);
  EXPECT_EQ(t(0, 1, 0), 5.0);
  EXPECT_EQ(t(1, 0, 0), 13.0);
  EXPECT_EQ(t.at(1, 2, 3), t(1, 2, 3));
  EXPECT_THROW((void)t(2, 0, 0), IndexError);
  EXPECT_THROW((void)t.offset({0, 0}), DimensionError);
}

TEST(DenseTensor, RejectsNonFiniteData) {
  EXPECT_THROW(DenseTensor(Shape{1, 1, 2}, {1.0, std::nan("")}), NumericalError);
  EXPECT_THROW(DenseTensor(Shape{1, 1, 2}, {1.0, INFINITY}), NumericalError);
  EXPECT_THROW(DenseTensor(Shape{1, 1, 2}, {1.0}), DimensionError);
}

TEST(DenseTensor, FaceRoundTrip) {
  std::mt19937_64 rng(1);
  DenseTensor t = oracle::random_tensor(Shape{3, 2, 2, 3}, rng);
  DenseTensor u(t.shape());
  for (std::size_t f = 0; f < t.faces(); ++f) u.set_face(f, t.face(f));
  EXPECT_EQ(max_abs_diff(t, u), 0.0);
  EXPECT_THROW(u.set_face(0, Matrix::Zero(2, 2)), DimensionError);
}

TEST(DenseTensor, Arithmetic) {
  const DenseTensor a = iota_tensor(Shape{2, 2, 2});
  DenseTensor b = 2.0 * a;
  EXPECT_EQ(max_abs_diff(b - a, a), 0.0);
  EXPECT_EQ(max_abs_diff(a + a, b), 0.0);
  b.axpy(-2.0, a);
  EXPECT_EQ(max_abs(b), 0.0);
  EXPECT_THROW(a + DenseTensor(Shape{2, 2, 3}), DimensionError);
}

TEST(FrobeniusNorm, ZeroTensor) { EXPECT_EQ(frobenius_norm(DenseTensor(Shape{3, 4, 2, 2})), 0.0); }

TEST(FrobeniusNorm, SingleEntry) {
  DenseTensor t(Shape{2, 2, 2});
  t(1, 0, 1) = 3.0;
  EXPECT_EQ(frobenius_norm(t), 3.0);
}

TEST(FrobeniusNorm, MatchesScalarLoop) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseTensor t = oracle::random_tensor(Shape{2, 2, 2}, rng);
    EXPECT_NEAR(frobenius_norm(t), oracle::frobenius(t), 1e-12);
  }
}

TEST(InnerProduct, ZeroAnnihilates) {
  std::mt19937_64 rng(3);
  const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4}, rng);
  EXPECT_EQ(inner_product(a, DenseTensor(a.shape())), 0.0);
}

TEST(InnerProduct, HandSum) {
  const DenseTensor a(Shape{1, 1, 2}, {1.0, 2.0});
  EXPECT_EQ(inner_product(a, a), 5.0);
}

TEST(InnerProduct, MatchesScalarLoopAndIsSymmetric) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseTensor a = oracle::random_tensor(Shape{3, 2, 4}, rng);
    const DenseTensor b = oracle::random_tensor(Shape{3, 2, 4}, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 4; ++k) s += a(i, j, k) * b(i, j, k);
    EXPECT_NEAR(inner_product(a, b), s, 1e-12);
    EXPECT_EQ(inner_product(a, b), inner_product(b, a));
    EXPECT_NEAR(inner_product(a, a), frobenius_norm(a) * frobenius_norm(a), 1e-12);
  }
}

TEST(InnerProduct, ShapeMismatch) {
  EXPECT_THROW((void)inner_product(DenseTensor(Shape{2, 2, 2}), DenseTensor(Shape{2, 2, 3})), DimensionError);
}

TEST(InnerProduct, CauchySchwarz) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const DenseTensor a = oracle::random_tensor(Shape{3, 3, 2, 2}, rng);
    const DenseTensor b = oracle::random_tensor(Shape{3, 3, 2, 2}, rng);
    EXPECT_LE(std::abs(inner_product(a, b)), frobenius_norm(a) * frobenius_norm(b) * (1 + 1e-15));
  }
}

TEST(HorizontalSlice, Definitional) {
  const DenseTensor a = iota_tensor(Shape{3, 2, 2});
  const DenseTensor s = horizontal_slice(a, 2);
  ASSERT_EQ(s.shape(), (Shape{1, 2, 2}));
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(s(0, j, k), a(1, j, k));
}

TEST(HorizontalSlice, FirstSliceOfIdentityLikeTensor) {
  DenseTensor a(Shape{3, 3, 2});
  for (std::size_t i = 0; i < 3; ++i) a(i, i, 0) = 1.0;
  const DenseTensor s = horizontal_slice(a, 1);
  EXPECT_EQ(s(0, 0, 0), 1.0);
  EXPECT_EQ(frobenius_norm(s), 1.0);
}

TEST(HorizontalSlice, CopiesRatherThanAliases) {
  DenseTensor a = iota_tensor(Shape{2, 2, 2});
  const DenseTensor s = horizontal_slice(a, 1);
  a(0, 0, 0) = -100.0;
  EXPECT_EQ(s(0, 0, 0), 1.0);
}

TEST(HorizontalSlice, OutOfRange) {
  const DenseTensor a = iota_tensor(Shape{3, 2, 2});
  EXPECT_THROW(horizontal_slice(a, 0), IndexError);
  EXPECT_THROW(horizontal_slice(a, 4), IndexError);
}

TEST(HorizontalSlice, RestackIsBitwiseIdentity) {
  std::mt19937_64 rng(6);
  const DenseTensor a = oracle::random_tensor(Shape{5, 3, 2, 3}, rng);
  std::vector<DenseTensor> parts;
  for (std::size_t i = 1; i <= a.rows(); ++i) parts.push_back(horizontal_slice(a, i));
  const DenseTensor back = vertical_stack(std::span<const DenseTensor>(parts));
  EXPECT_EQ(back.shape(), a.shape());
  EXPECT_EQ(std::memcmp(back.data().data(), a.data().data(), a.size() * sizeof(double)), 0);
}

TEST(HorizontalSubtensor, FullSelectionAndSingleton) {
  const DenseTensor a = iota_tensor(Shape{3, 2, 2});
  EXPECT_EQ(max_abs_diff(horizontal_subtensor(a, {1, 2, 3}), a), 0.0);
  EXPECT_EQ(max_abs_diff(horizontal_subtensor(a, {2}), horizontal_slice(a, 2)), 0.0);
}

TEST(HorizontalSubtensor, OrderIsPreserved) {
  const DenseTensor a = iota_tensor(Shape{3, 2, 2});
  const DenseTensor s = horizontal_subtensor(a, {3, 1});
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(s(0, j, k), a(2, j, k));
      EXPECT_EQ(s(1, j, k), a(0, j, k));
    }
}

TEST(HorizontalSubtensor, Errors) {
  const DenseTensor a = iota_tensor(Shape{3, 2, 2});
  EXPECT_THROW(horizontal_subtensor(a, {1, 4}), IndexError);
  EXPECT_THROW(horizontal_subtensor(a, std::span<const std::size_t>{}), IndexError);
}

TEST(Bdiag, SingleFace) {
  const DenseTensor a = iota_tensor(Shape{2, 2, 1, 1});
  EXPECT_EQ((bdiag(a) - a.face(0)).norm(), 0.0);
}

TEST(Bdiag, ThirdOrderPlacement) {
  const DenseTensor a = iota_tensor(Shape{2, 2, 2});
  const Matrix m = bdiag(a);
  ASSERT_EQ(m.rows(), 4);
  ASSERT_EQ(m.cols(), 4);
  EXPECT_EQ((m.block(0, 0, 2, 2) - a.face(0)).norm(), 0.0);
  EXPECT_EQ((m.block(2, 2, 2, 2) - a.face(1)).norm(), 0.0);
  EXPECT_EQ(m.block(0, 2, 2, 2).norm(), 0.0);
  EXPECT_EQ(m.block(2, 0, 2, 2).norm(), 0.0);
}

TEST(Bdiag, ModeThreeIndexRunsFastestAlongTheDiagonal) {
  // Face (i3, i4) goes to block j = i3 + (i4 - 1) n3 (1-based).
  const Shape s{1, 1, 2, 3};
  DenseTensor a(s);
  for (std::size_t i3 = 0; i3 < 2; ++i3)
    for (std::size_t i4 = 0; i4 < 3; ++i4) a(0, 0, i3, i4) = static_cast<double>(10 * (i3 + 1) + (i4 + 1));
  const Matrix m = bdiag(a);
  for (std::size_t i3 = 0; i3 < 2; ++i3)
    for (std::size_t i4 = 0; i4 < 3; ++i4) {
      const auto j = static_cast<Eigen::Index>(i3 + i4 * 2);
      EXPECT_EQ(m(j, j), a(0, 0, i3, i4));
    }
}

TEST(Bdiag, FacewiseProductMatchesMatrixProduct) {
  std::mt19937_64 rng(7);
  const DenseTensor a = oracle::random_tensor(Shape{2, 3, 2}, rng);
  const DenseTensor b = oracle::random_tensor(Shape{3, 2, 2}, rng);
  const DenseTensor c = facewise_product(a, b);
  EXPECT_LE((bdiag(c) - bdiag(a) * bdiag(b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bdiag, IsLinear) {
  std::mt19937_64 rng(8);
  const DenseTensor a = oracle::random_tensor(Shape{2, 3, 2, 2}, rng);
  const DenseTensor b = oracle::random_tensor(Shape{2, 3, 2, 2}, rng);
  const Matrix lhs = bdiag(DenseTensor(0.5 * a + (-2.0) * b));
  const Matrix rhs = 0.5 * bdiag(a) - 2.0 * bdiag(b);
  EXPECT_EQ((lhs - rhs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tns1, RoundTrip) {
  std::mt19937_64 rng(9);
  const DenseTensor t = oracle::random_tensor(Shape{3, 1, 2, 2}, rng);
  std::stringstream ss;
  write_tns1(ss, t);
  const DenseTensor back = read_tns1(ss);
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(max_abs_diff(back, t), 0.0);
}

TEST(Tns1, LittleEndianLayout) {
  const DenseTensor t(Shape{1, 1, 1}, {1.0});
  std::stringstream ss;
  write_tns1(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 8u * 4u + 8u);
  EXPECT_EQ(bytes.substr(0, 4), "TNS1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3u);
  for (int k = 5; k < 12; ++k) EXPECT_EQ(bytes[static_cast<std::size_t>(k)], '\0');
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 1]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 2]), 0xF0u);
}

namespace {

std::string header(std::uint64_t m, std::initializer_list<std::uint64_t> dims) {
  std::string s = "TNS1";
  auto put = [&](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  };
  put(m);
  for (auto d : dims) put(d);
  return s;
}

}  // namespace

TEST(Tns1, RejectsMalformedInput) {
  std::stringstream bad_magic("TNS2" + header(3, {1, 1, 1}).substr(4) + std::string(8, '\0'));
  EXPECT_THROW(read_tns1(bad_magic), FormatError);

  std::stringstream low_order(header(2, {1, 1}) + std::string(8, '\0'));
  EXPECT_THROW(read_tns1(low_order), FormatError);

  std::stringstream short_payload(header(3, {1, 1, 2}) + std::string(8, '\0'));
  EXPECT_THROW(read_tns1(short_payload), FormatError);

  std::stringstream trailing(header(3, {1, 1, 1}) + std::string(9, '\0'));
  EXPECT_THROW(read_tns1(trailing), FormatError);

  std::stringstream zero_extent(header(3, {1, 0, 1}));
  EXPECT_THROW(read_tns1(zero_extent), FormatError);

  std::string nan_bits(8, '\0');
  nan_bits[6] = static_cast<char>(0xF8);
  nan_bits[7] = static_cast<char>(0x7F);
  std::stringstream nan_payload(header(3, {1, 1, 1}) + nan_bits);
  EXPECT_THROW(read_tns1(nan_payload), FormatError);

  std::stringstream truncated_header("TNS1\x03");
  EXPECT_THROW(read_tns1(truncated_header), FormatError);
}
