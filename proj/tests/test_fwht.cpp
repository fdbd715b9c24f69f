#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "peatwht/error.hpp"
#include "peatwht/fwht.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace peatwht;
using testing_support::hadamard_multiply;
using testing_support::random_vector;
using testing_support::xor_convolve;

TEST(HadamardMatrix, OrderZeroIsOne) {
  const auto h = hadamard_matrix(0);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h(0, 0), 1.0);
}

TEST(HadamardMatrix, NormalizedOrderOne) {
  const auto h = hadamard_matrix(1, true);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_DOUBLE_EQ(h(0, 0), r);
  EXPECT_DOUBLE_EQ(h(0, 1), r);
  EXPECT_DOUBLE_EQ(h(1, 0), r);
  EXPECT_DOUBLE_EQ(h(1, 1), -r);
}

TEST(HadamardMatrix, UnnormalizedGramIsScaledIdentity) {
  for (int m = 0; m <= 5; ++m) {
    const auto h = hadamard_matrix(m);
    const std::size_t n = h.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += h(i, k) * h(j, k);
        EXPECT_EQ(s, i == j ? static_cast<double>(n) : 0.0);
      }
  }
}

TEST(HadamardMatrix, EntriesAreSigns) {
  const auto h = hadamard_matrix(6);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) EXPECT_EQ(h(i, j), testing_support::hadamard_entry(i, j));
}

TEST(HadamardMatrix, RecursiveBlocks) {
  const auto small = hadamard_matrix(3);
  const auto big = hadamard_matrix(4);
  const std::size_t n = small.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_EQ(big(i, j), small(i, j));
      EXPECT_EQ(big(i, j + n), small(i, j));
      EXPECT_EQ(big(i + n, j), small(i, j));
      EXPECT_EQ(big(i + n, j + n), -small(i, j));
    }
}

TEST(HadamardMatrix, RejectsLargeOrders) {
  expect_code(ErrorCode::OrderTooLarge, [] { hadamard_matrix(13); });
  expect_code(ErrorCode::OrderTooLarge, [] { hadamard_matrix(-1); });
  EXPECT_NO_THROW(hadamard_matrix(kMaxMatrixOrder));
}

TEST(Fwht, ConstantSignal) {
  const std::vector<double> x{1, 1, 1, 1};
  EXPECT_EQ(fwht(x).coefficients, (std::vector<double>{4, 0, 0, 0}));
}

TEST(Fwht, LengthTwo) {
  const std::vector<double> x{1, -1};
  EXPECT_EQ(fwht(x).coefficients, (std::vector<double>{0, 2}));
}

TEST(Fwht, SmallExample) {
  const std::vector<double> x{3, 1, 2, 0};
  const auto expected = hadamard_multiply(x);
  EXPECT_EQ(fwht(x).coefficients, expected);
  EXPECT_EQ(expected, (std::vector<double>{6, 4, 2, 0}));
}

TEST(Fwht, LengthOneIsIdentity) {
  const std::vector<double> x{-2.5};
  EXPECT_EQ(fwht(x).coefficients, x);
  EXPECT_EQ(ifwht(fwht(x)), x);
}

TEST(Fwht, RejectsNonPowerOfTwo) {
  for (std::size_t n : {0u, 3u, 6u, 12u}) {
    const std::vector<double> x(n, 1.0);
    expect_code(ErrorCode::LengthNotPowerOfTwo, [&] { fwht(x); });
  }
}

TEST(Fwht, MatchesMatrixProductAcrossSizes) {
  Rng rng(101);
  for (std::size_t n = 1; n <= 4096; n *= 2) {
    const auto x = random_vector(rng, n);
    const auto fast = fwht(x).coefficients;
    const auto slow = hadamard_multiply(x);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(fast[i], slow[i], 1e-9) << "n=" << n << " i=" << i;
  }
}

TEST(Fwht, LargeSizesAgreeWithRecursiveSplit) {
  // H_{2n} [a; b] = [H a + H b; H a - H b].
  Rng rng(102);
  const std::size_t n = std::size_t{1} << 14;
  const auto a = random_vector(rng, n);
  const auto b = random_vector(rng, n);
  std::vector<double> ab(a);
  ab.insert(ab.end(), b.begin(), b.end());
  const auto ha = fwht(a).coefficients, hb = fwht(b).coefficients, hab = fwht(ab).coefficients;
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_NEAR(hab[i], ha[i] + hb[i], 1e-9);
    ASSERT_NEAR(hab[i + n], ha[i] - hb[i], 1e-9);
  }
}

TEST(Fwht, IntegerInvolutionIsExact) {
  Rng rng(103);
  for (std::size_t n = 1; n <= (std::size_t{1} << 16); n *= 4) {
    std::vector<double> x(n);
    for (auto& v : x) v = static_cast<double>(static_cast<long>(rng.below(201)) - 100);
    auto y = x;
    fwht_inplace(std::span<double>(y));
    fwht_inplace(std::span<double>(y));
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(y[i], static_cast<double>(n) * x[i]);
  }
}

TEST(Fwht, NormalizedIsIsometry) {
  Rng rng(104);
  for (std::size_t n = 1; n <= 1024; n *= 2) {
    const auto x = random_vector(rng, n);
    const auto y = fwht(x, true);
    EXPECT_TRUE(y.normalized);
    const double nx = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    const double ny = std::inner_product(y.coefficients.begin(), y.coefficients.end(), y.coefficients.begin(), 0.0);
    EXPECT_NEAR(ny, nx, 1e-9 * nx);
  }
}

TEST(Fwht, NormalizedMatchesNormalizedMatrix) {
  Rng rng(105);
  const auto h = hadamard_matrix(5, true);
  const auto x = random_vector(rng, h.size());
  const auto y = fwht(x, true).coefficients;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += h(i, j) * x[j];
    EXPECT_NEAR(y[i], s, 1e-12);
  }
}

TEST(Ifwht, ConstantCase) {
  EXPECT_EQ(ifwht(Spectrum{{4, 0, 0, 0}, false}), (std::vector<double>{1, 1, 1, 1}));
}

TEST(Ifwht, ExactRoundTripOnSmallIntegers) {
  const std::vector<double> x{3, 1, 2, 0};
  EXPECT_EQ(ifwht(fwht(x)), x);
}

TEST(Ifwht, RoundTripRandom) {
  Rng rng(106);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_vector(rng, 8);
    for (const bool normalized : {false, true}) {
      const auto back = ifwht(fwht(x, normalized));
      for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(back[i], x[i], 1e-12);
    }
  }
}

TEST(Ifwht, RejectsNonPowerOfTwo) {
  expect_code(ErrorCode::LengthNotPowerOfTwo, [] { ifwht(Spectrum{{1, 2, 3}, false}); });
}

TEST(StridedView, TransformsEveryStrideElement) {
  Rng rng(107);
  const std::size_t n = 16, stride = 3;
  std::vector<double> buffer(n * stride);
  for (auto& v : buffer) v = rng.uniform(-1, 1);
  const auto original = buffer;
  std::vector<double> column(n);
  for (std::size_t i = 0; i < n; ++i) column[i] = buffer[i * stride + 1];
  fwht_inplace(StridedView<double>(buffer.data() + 1, n, stride));
  const auto expected = hadamard_multiply(column);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(buffer[i * stride + 1], expected[i], 1e-12);
    EXPECT_EQ(buffer[i * stride], original[i * stride]);
    EXPECT_EQ(buffer[i * stride + 2], original[i * stride + 2]);
  }
}

TEST(Fwht, FloatKernelTracksDouble) {
  Rng rng(108);
  const auto x = random_vector(rng, 256);
  std::vector<float> xf(x.begin(), x.end());
  fwht_inplace(std::span<float>(xf));
  const auto y = fwht(x).coefficients;
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(xf[i], y[i], 1e-4);
}

TEST(DyadicConvolution, DeltaIsIdentity) {
  const std::vector<double> x{1, 0}, h{2.5, -1.5};
  EXPECT_EQ(dyadic_convolve_bruteforce(x, h), h);
}

TEST(DyadicConvolution, XorPermutation) {
  const std::vector<double> x{0, 1, 0, 0}, h{1, 2, 3, 4};
  EXPECT_EQ(dyadic_convolve_bruteforce(x, h), (std::vector<double>{2, 1, 4, 3}));
}

TEST(DyadicConvolution, TransformDomainProduct) {
  Rng rng(109);
  for (std::size_t n = 1; n <= 64; n *= 2) {
    const auto x = random_vector(rng, n);
    const auto h = random_vector(rng, n);
    const auto fx = fwht(x).coefficients, fh = fwht(h).coefficients;
    Spectrum product{std::vector<double>(n), false};
    for (std::size_t i = 0; i < n; ++i) product.coefficients[i] = fx[i] * fh[i];
    const auto via_transform = ifwht(product);
    const auto brute = dyadic_convolve_bruteforce(x, h);
    const auto reference = xor_convolve(x, h);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(via_transform[i], reference[i], 1e-9);
      EXPECT_NEAR(brute[i], reference[i], 1e-12);
    }
  }
}

TEST(DyadicConvolution, Errors) {
  const std::vector<double> a{1, 2}, b{1, 2, 3, 4}, c{1, 2, 3};
  expect_code(ErrorCode::LengthMismatch, [&] { dyadic_convolve_bruteforce(a, b); });
  expect_code(ErrorCode::LengthNotPowerOfTwo, [&] { dyadic_convolve_bruteforce(c, c); });
}

TEST(NaiveHadamard, MatchesOracle) {
  Rng rng(110);
  const auto x = random_vector(rng, 32);
  const auto y = naive_hadamard_apply(x);
  const auto expected = hadamard_multiply(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], expected[i], 1e-12);
}

TEST(Log2Exact, Values) {
  EXPECT_EQ(log2_exact(1), 0);
  EXPECT_EQ(log2_exact(1024), 10);
  expect_code(ErrorCode::LengthNotPowerOfTwo, [] { log2_exact(0); });
  expect_code(ErrorCode::LengthNotPowerOfTwo, [] { log2_exact(6); });
}
