#include <excloak/lemma_bounds.hpp>
#include <gtest/gtest.h>

using namespace excloak;
using namespace excloak::specfun;

TEST(LemmaConstants, ClosedForms) {
  const auto rep = lemma_constants({0.0, 1.0, pi}, {1.0, 2.0, pi / 2});
  EXPECT_NEAR(rep.c_k1, 4.0 * (std::exp(0.25) - 1.0), 1e-15);
  EXPECT_EQ(rep.c_k1_tilde, rep.c_k1);
  EXPECT_NEAR(rep.c_k2, std::exp(1.0) - 1.0, 1e-15);
  EXPECT_GT(rep.c_k2_tilde, rep.c_k2 / pi);
  EXPECT_NEAR(rep.b_k1, 1.0 + rep.c_k1 * 0.25, 1e-15);
}

TEST(LemmaConstants, FunctionF) {
  // f(r) = sum_{k>=1} (r/2)^{2k-2}/k!
  for (double r : {0.0, 1e-4, 0.7, 3.0, 10.0}) {
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term /= k;
      sum += term * std::pow(r / 2, 2 * k - 2);
    }
    EXPECT_NEAR(lemma_detail::f(r), sum, 1e-14 * sum);
  }
}

TEST(LemmaConstants, IndependentOfOrder) {
  const auto a = verify_lemma_bounds(2, {0.0, 2.0, pi}, {0.5, 3.0, 3.0});
  const auto b = verify_lemma_bounds(25, {0.0, 2.0, pi}, {0.5, 3.0, 3.0});
  EXPECT_EQ(a.c_k1, b.c_k1);
  EXPECT_EQ(a.c_k2_tilde, b.c_k2_tilde);
}

TEST(VerifyLemma, SmallSets) {
  const auto rep = verify_lemma_bounds(2, {0.0, 1.0, pi}, {1.0, 2.0, pi / 2});
  EXPECT_TRUE(rep.passed()) << rep.worst_ratio();
  EXPECT_EQ(rep.samples, 32u * 32u);
}

TEST(VerifyLemma, LargeSets) {
  for (double arg_max : {7 * pi / 8, 15 * pi / 16}) {
    const auto rep = verify_lemma_bounds(30, {0.0, 10.0, pi}, {0.5, 20.0, arg_max});
    EXPECT_TRUE(rep.passed()) << rep.worst_ratio();
    EXPECT_TRUE(std::isfinite(rep.c_k2_tilde));
  }
}

TEST(VerifyLemma, NearOriginIsTight) {
  // Where the leading terms dominate the bounds are within a factor 2.
  const auto rep = verify_lemma_bounds(30, {0.0, 0.5, pi}, {0.1, 0.5, 3.1});
  EXPECT_TRUE(rep.passed());
  EXPECT_GT(rep.ratio_j, 0.5);
  EXPECT_GT(rep.ratio_h, 0.3);
}

TEST(VerifyLemma, BranchCut) {
  EXPECT_THROW(verify_lemma_bounds(2, {0.0, 1.0, pi}, {0.5, 2.0, pi}), BranchCutError);
  EXPECT_THROW(verify_lemma_bounds(2, {0.0, 1.0, pi}, {0.0, 2.0, 1.0}), BranchCutError);
  EXPECT_THROW(verify_lemma_bounds(1, {0.0, 1.0, pi}, {1.0, 2.0, 1.0}), InvalidArgument);
}

// H_n ~ -i (n-1)!/pi (2/z)^n: with a + sign the remainder is twice the
// leading term, which no (n-2)!(2/|z|)^{n-2} multiple bounds uniformly in n.
TEST(LeadingTerms, HankelSign) {
  const cplx z(0.8, 0.3);
  for (int n : {2, 10, 30}) {
    const cplx lead = I * std::tgamma(n) / pi * std::pow(2.0 / z, n);
    EXPECT_LT(std::abs(hankel1(n, z) + lead), 0.2 * std::abs(lead));
    EXPECT_GT(std::abs(hankel1(n, z) - lead), 1.8 * std::abs(lead));
  }
}

// B_K1 = max(1, C_K1 max (|z|/2)^2) is not a valid bound: J_2(i) exceeds it.
TEST(LeadingTerms, BoundOnJNeedsSum) {
  const auto rep = lemma_constants({0.0, 1.0, pi}, {1.0, 2.0, 1.0});
  const double max_form = std::max(1.0, rep.c_k1 * 0.25);
  const double lead = 0.125;  // (1/2)^2/2!
  EXPECT_GT(std::abs(bessel_j(2, I)), max_form * lead);
  EXPECT_LE(std::abs(bessel_j(2, I)), rep.b_k1 * lead);
}
