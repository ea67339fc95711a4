#include <gtest/gtest.h>

#include <random>

#include "fheprotect/approx.hpp"
#include "fheprotect/error.hpp"
#include "oracles.hpp"

using namespace fheprotect;

TEST(FitInvSqrt, DegreeZeroOnPoint) {
  const auto a = fit_inv_sqrt(0, Interval{1.0, 1.0}, 16);
  ASSERT_EQ(a.coeffs.size(), 1u);
  EXPECT_EQ(a.coeffs[0], 1.0);
  EXPECT_EQ(a.fit_report.max_rel_err, 0.0);
}

TEST(FitInvSqrt, HigherDegreeNoWorse) {
  const auto a6 = fit_inv_sqrt(6, Interval{1e-3, 1.0}, 256);
  const auto a8 = fit_inv_sqrt(8, Interval{1e-3, 1.0}, 256);
  EXPECT_LE(a8.fit_report.max_rel_err, a6.fit_report.max_rel_err);
  EXPECT_EQ(a6.fit_report.n_samples, kDefaultReportSamples);
  EXPECT_EQ(a6.fit_report.seed, kDefaultReportSeed);
}

TEST(FitInvSqrt, RegressionBaselines) {
  EXPECT_NEAR(fit_inv_sqrt(6, Interval{1e-3, 1.0}, 256).fit_report.max_rel_err, 0.716159, 1e-5);
  EXPECT_NEAR(fit_inv_sqrt(8, Interval{1e-3, 1.0}, 256).fit_report.max_rel_err, 0.638570, 1e-5);
  EXPECT_NEAR(fit_inv_sqrt(8, kOctavePairDomain, 256).fit_report.max_rel_err, 0.007082, 1e-5);
}

TEST(FitInvSqrt, InvalidInput) {
  for (auto fn : {+[] { fit_inv_sqrt(-1, Interval{0.1, 1.0}, 16); }, +[] { fit_inv_sqrt(4, Interval{0.0, 1.0}, 16); },
                  +[] { fit_inv_sqrt(4, Interval{0.5, 0.1}, 16); }}) {
    EXPECT_THROW(fn(), Error);
  }
}

TEST(FitInvSqrt, RankDeficientFit) {
  try {
    fit_inv_sqrt(4, Interval{1.0, 1.0}, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllConditioned);
  }
}

TEST(EvalPolyPlain, ConstantAndPowerBasis) {
  PolyApprox c{0, {1.0}, {0.1, 1.0}, {}};
  for (double x : {0.1, 0.5, 7.0}) EXPECT_EQ(eval_poly_plain(x, c), 1.0);
  const auto a = fit_inv_sqrt(8, Interval{1e-3, 1.0}, 256);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(1e-3, 1.0);
  double coeff_mass = 0.0;
  for (double c : a.coeffs) coeff_mass += std::abs(c);
  for (int i = 0; i < 200; ++i) {
    const double x = d(rng);
    EXPECT_NEAR(eval_poly_plain(x, a), oracle::power_basis(a.coeffs, x), 1e-13 * coeff_mass);
  }
  EXPECT_NEAR(eval_poly_plain(0.25, a), 2.0, a.fit_report.max_rel_err * 2.0);
}

TEST(EvalPolyEncrypted, MatchesPlain) {
  const auto ctx = EncryptionContext::create(ContextParams{64, 16, 0.0}, 1);
  const auto a = fit_inv_sqrt(6, Interval{0.1, 1.0}, 128);
  std::mt19937_64 rng(2);
  const auto x = oracle::uniform_vector(64, rng, 0.1, 1.0);
  const auto y = decrypt(eval_poly_encrypted(encrypt(x, ctx), a), ctx);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], oracle::power_basis(a.coeffs, x[i]), 1e-9);
}

TEST(EvalPolyEncrypted, DepthAndConstant) {
  const auto ctx = EncryptionContext::create(ContextParams{8, 16, 0.0}, 1);
  const auto x = mult(encrypt(std::vector<double>{0.5, 0.7}, ctx), encrypt(std::vector<double>{1, 1}, ctx));
  const auto a = fit_inv_sqrt(8, Interval{0.1, 1.0}, 64);
  EXPECT_EQ(eval_poly_encrypted(x, a).depth_used(), x.depth_used() + 8);

  PolyApprox c{0, {3.0}, {0.1, 1.0}, {}};
  const auto r1 = decrypt(eval_poly_encrypted(encrypt(std::vector<double>{0.2, 0.9}, ctx), c), ctx);
  const auto r2 = decrypt(eval_poly_encrypted(encrypt(std::vector<double>{0.6, 0.1}, ctx), c), ctx);
  EXPECT_EQ(r1, (std::vector<double>{3.0, 3.0}));
  EXPECT_EQ(r1, r2);
}

TEST(RelErrorReport, ReproducibleAndDegenerate) {
  const auto a = fit_inv_sqrt(6, Interval{0.01, 1.0}, 128);
  const auto r1 = rel_error_report(a, 2000, 5);
  const auto r2 = rel_error_report(a, 2000, 5);
  EXPECT_EQ(r1.max_rel_err, r2.max_rel_err);
  EXPECT_EQ(r1.mean_rel_err, r2.mean_rel_err);
  EXPECT_LE(r1.mean_rel_err, r1.max_rel_err);
  PolyApprox exact{0, {1.0}, {1.0, 1.0}, {}};
  EXPECT_EQ(rel_error_report(exact, 100, 1).max_rel_err, 0.0);
}

TEST(ApproxCurve, GridShape) {
  const auto a = fit_inv_sqrt(4, Interval{0.1, 1.0}, 64);
  const auto pts = approx_curve(a, 11);
  ASSERT_EQ(pts.size(), 11u);
  EXPECT_DOUBLE_EQ(pts.front().x, 0.1);
  EXPECT_DOUBLE_EQ(pts.back().x, 1.0);
  for (const auto& p : pts) EXPECT_NEAR(p.rel_err, std::abs(p.px * std::sqrt(p.x) - 1.0), 1e-12);
}
