#include <excloak/graf.hpp>
#include <gtest/gtest.h>

#include <random>

#include "graf_configs.hpp"

using namespace excloak;
using namespace excloak::graf;

namespace {
double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST(Green, Symmetric) {
  const cplx k(2.0, 1.0);
  EXPECT_EQ(green({1, 0}, {0, 0}, k), green({0, 0}, {1, 0}, k));
}

TEST(Green, UnitDistance) {
  const cplx expect = 0.25 * I * cplx(0.7651976865579666, 0.08825696421567696);
  EXPECT_LT(rel(green({1, 0}, {0, 0}, 1.0), expect), 1e-14);
}

TEST(Green, DecaysForImaginaryWavenumber) {
  double prev = std::abs(green({0.05, 0}, {0, 0}, 0.5 * I));
  for (double t = 0.1; t < 30.0; t += 0.05) {
    const double v = std::abs(green({t, 0}, {0, 0}, 0.5 * I));
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Green, Errors) {
  EXPECT_THROW(green({1, 1}, {1, 1}, 1.0), SingularityError);
  EXPECT_THROW(green({1, 0}, {0, 0}, -2.0), BranchCutError);
  EXPECT_THROW(green({1, 0}, {0, 0}, 0.0), BranchCutError);
}

TEST(GreenNormal, Perpendicular) {
  EXPECT_EQ(green_normal_derivative({1, 0}, {0, 0}, {0, 1}, cplx(2, 1)), cplx(0.0));
}

TEST(GreenNormal, CentralDifference) {
  const Vec2 x{1, 0}, y{0, 0}, nu{1, 0};
  const cplx k(2, 1);
  const double h = 1e-5;
  const cplx fd = (green(x, y + h * nu, k) - green(x, y - h * nu, k)) / (2 * h);
  EXPECT_LT(rel(green_normal_derivative(x, y, nu, k), fd), 1e-9);
}

TEST(GreenNormal, Flip) {
  const Vec2 x{0.3, -1.2}, y{0.1, 0.4}, nu{0.6, 0.8};
  const cplx k(3, 0.5);
  EXPECT_EQ(green_normal_derivative(x, y, -nu, k), -green_normal_derivative(x, y, nu, k));
  EXPECT_THROW(green_normal_derivative(x, y, {1, 1}, k), InvalidArgument);
}

TEST(Translated, SourceAtCentre) {
  const SourceTranslation st{{0.4, 0.1}, {0.4, 0.1}, std::nullopt};
  for (int M : {0, 3, 40})
    EXPECT_EQ(translated_green({2, 2}, st, cplx(1, 1), M), green({2, 2}, st.x_j, cplx(1, 1)));
}

TEST(Translated, HighOrderMatchesDirect) {
  using namespace graf_configs;
  for (cplx k : {cplx(1.0), cplx(0, 1), cplx(10.0), family_wavenumber(3, 7.0), family_wavenumber(4, 20.0)}) {
    EXPECT_LE(rel(translated_green(eval_point, translation, k, 500), green(eval_point, translation.y, k)), 1e-10);
    EXPECT_LE(rel(translated_dipole(eval_point, translation, k, 500),
                  green_normal_derivative(eval_point, translation.y, *translation.nu, k)),
              1e-8);
  }
}

TEST(Translated, DipoleFlipAndSingularity) {
  SourceTranslation st{{0.05, -0.1}, {0.0, 0.2}, Vec2{0.6, -0.8}};
  SourceTranslation flipped = st;
  flipped.nu = -*st.nu;
  for (int M : {0, 1, 7, 22})
    EXPECT_EQ(translated_dipole({1, 1}, flipped, 2.0, M), -translated_dipole({1, 1}, st, 2.0, M));
  st.y = st.x_j;
  EXPECT_THROW(translated_dipole({1, 1}, st, 2.0, 5), SingularityError);
  const auto err = truncation_errors({1, 1}, st, 2.0, 5);
  EXPECT_EQ(err.r, 0.0);
  EXPECT_FALSE(err.r_prime.has_value());
  EXPECT_THROW(translated_green(st.x_j, st, 2.0, 5), SingularityError);
}

// Term-by-term differentiation: the dipole partial sum is the nu-derivative
// of the monopole partial sum in y.
TEST(Translated, DipoleIsDerivativeOfMonopole) {
  const Vec2 x{1.1, -0.4};
  const Vec2 nu{0.8, -0.6};
  const double h = 1e-5;
  for (cplx k : {cplx(1.0), cplx(3, 2), cplx(0, 5)}) {
    for (int M : {0, 3, 10, 20}) {
      const SourceTranslation st{{0.1, 0.05}, {0.3, -0.1}, nu};
      SourceTranslation plus = st, minus = st;
      plus.y = st.y + h * nu;
      minus.y = st.y - h * nu;
      const cplx fd = (translated_green(x, plus, k, M) - translated_green(x, minus, k, M)) / (2 * h);
      EXPECT_LT(rel(translated_dipole(x, st, k, M), fd), 1e-8) << k << " " << M;
    }
  }
}

// Source offsets stay at the experiment's scale (|y - x_j| <= 0.25): the
// partial sums cancel by about exp(2 Im(k) |y - x_j|), which beyond that
// scale eats into double precision for the strongly damped families.
TEST(Property, ExactInTheLimit) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 xj{u(gen) * 2 - 1, u(gen) * 2 - 1};
    const double ry = 0.05 + 0.2 * u(gen);
    const Vec2 y = xj + polar(ry, 2 * pi * u(gen));
    const double a = 0.1 + 0.8 * u(gen);
    const Vec2 x = xj + polar(ry / a, 2 * pi * u(gen));
    const cplx k = excloak::family_wavenumber(1 + trial % 4, 0.5 + 19.5 * u(gen));
    const SourceTranslation st{y, xj, std::nullopt};
    const cplx g = green(x, y, k);
    EXPECT_LE(std::abs(g - translated_green(x, st, k, 600)), 1e-8 * std::abs(g)) << trial;
  }
}

TEST(Truncation, DecreasesOnAverage) {
  using namespace graf_configs;
  for (int f = 1; f <= 4; ++f) {
    for (cplx k : family_samples(f)) {
      const auto curve = truncation_error_curve(eval_point, translation, k, 20);
      double mean_step = 0.0;
      for (int M = 4; M < 20; ++M) mean_step += curve[M + 1].r - curve[M].r;
      EXPECT_LE(mean_step / 16, 0.0);
    }
  }
  const auto e4 = truncation_errors(eval_point, translation, 10.0, 4);
  const auto e20 = truncation_errors(eval_point, translation, 10.0, 20);
  EXPECT_LE(e20.r, e4.r);
}

TEST(Property, RemainderRatio) {
  using namespace graf_configs;
  const double a = 0.2 / 0.23;
  for (int f = 1; f <= 4; ++f) {
    for (cplx k : family_samples(f)) {
      const auto curve = truncation_error_curve(eval_point, translation, k, 19);
      double mean = 0.0;
      for (int M = 10; M <= 18; ++M) mean += curve[M + 1].r / curve[M].r;
      mean /= 9;
      EXPECT_GE(mean, a - 0.15);
      EXPECT_LE(mean, a + 0.15);
    }
  }
}

TEST(GeometricRatio, Examples) {
  const Vec2 y0[1] = {{0, 0}};
  EXPECT_NEAR(geometric_ratio({0, 0.43}, y0, {0, 0.2}), 0.2 / 0.23, 1e-15);
  EXPECT_NEAR(0.2 / 0.23, 0.869565, 1e-6);
  const Vec2 at_centre[1] = {{0, 0.2}};
  EXPECT_EQ(geometric_ratio({0, 0.43}, at_centre, {0, 0.2}), 0.0);
  const Vec2 ring[2] = {{1, 0}, {0, 0.5}};
  EXPECT_NEAR(geometric_ratio({0, -2}, ring, {0, 0}), 0.5, 1e-15);
  EXPECT_THROW(geometric_ratio({0.5, 0}, ring, {0, 0}), DivergenceRegionError);
  EXPECT_THROW(geometric_ratio({1, 0}, ring, {0, 0}), DivergenceRegionError);
}

TEST(Bounds, ClosedForms) {
  auto [m0, d0] = theoretical_bounds({0.0, 3.0, 4.0, 4}, 7);
  EXPECT_EQ(m0, 0.0);
  EXPECT_EQ(d0, 0.0);
  EXPECT_NEAR(theoretical_bounds({0.5, 1.0, 0.0, 0}, 1).first, -std::log(0.5) - 0.5, 1e-15);
  EXPECT_NEAR(theoretical_bounds({0.5, 1.0, 0.0, 0}, 1).first, 0.193147, 1e-6);
  EXPECT_NEAR(theoretical_bounds({0.5, 0.0, 1.0, 0}, 3).second, 0.125, 1e-15);
  EXPECT_THROW(theoretical_bounds({1.0, 1.0, 1.0, 0}, 3), InvalidModelError);
  EXPECT_THROW(theoretical_bounds({0.5, -1.0, 1.0, 0}, 3), InvalidModelError);
}

TEST(Bounds, TailMatchesClosedForm) {
  for (double a : {0.1, 0.5, 0.87, 0.99}) {
    double partial = 0.0;
    for (int m = 1; m <= 6; ++m) partial += std::pow(a, m) / m;
    EXPECT_NEAR(monopole_bound_form(a, 6), -std::log1p(-a) - partial, 1e-13);
  }
}

TEST(Fit, ZeroErrorGivesZeroModel) {
  const SourceTranslation st{{0, 0.2}, {0, 0.2}, std::nullopt};
  const Vec2 xs[1] = {{0, 0.43}};
  const cplx ks[2] = {1.0, cplx(0, 3)};
  const auto model = fit_bound_constant(xs, ks, st, 4);
  EXPECT_EQ(model.c1, 0.0);
  EXPECT_EQ(model.c2, 0.0);
  EXPECT_EQ(model.a, 0.0);
}

TEST(Fit, RejectsDivergencePoints) {
  const Vec2 xs[1] = {{0, 0.1}};
  const cplx ks[1] = {1.0};
  EXPECT_THROW(fit_bound_constant(xs, ks, graf_configs::translation, 4), DivergenceRegionError);
}

TEST(Fit, Deterministic) {
  const Vec2 xs[3] = {{0, 0.43}, {0.3, 0.5}, {-0.4, 0.1}};
  const auto ks = excloak::family_samples(3);
  const auto a = fit_bound_constant(xs, ks, graf_configs::translation, 4, 1);
  const auto b = fit_bound_constant(xs, ks, graf_configs::translation, 4, 3);
  EXPECT_EQ(a.c1, b.c1);
  EXPECT_EQ(a.c2, b.c2);
}

// Fitted at M = 4, the bounds must dominate at M = 20 on the single-point
// wavenumber grids and on the annulus grids 1/2 <= a_x <= 0.95.
TEST(Property, BoundDominanceSinglePoint) {
  using namespace graf_configs;
  const Vec2 xs[1] = {eval_point};
  for (int f = 1; f <= 4; ++f) {
    const auto ks = family_samples(f);
    const auto model = fit_bound_constant(xs, ks, translation, 4);
    const auto [b1, b2] = theoretical_bounds(model, 20);
    for (cplx k : ks) {
      const auto e = truncation_errors(eval_point, translation, k, 20);
      EXPECT_LE(e.r, b1) << "family " << f << " k=" << k;
      EXPECT_LE(*e.r_prime, b2) << "family " << f << " k=" << k << " ratio " << *e.r_prime / b2;
    }
  }
}

TEST(Property, BoundDominanceAnnulus) {
  using namespace graf_configs;
  std::vector<Vec2> xs;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 16; ++j)
      xs.push_back(translation.x_j + polar(0.2 / (0.5 + 0.45 * i / 9), 2 * pi * j / 16));
  const Vec2 ys[1] = {translation.y};
  for (cplx k : {cplx(1.0), cplx(0, 1), family_wavenumber(3, 1.0), family_wavenumber(4, 1.0)}) {
    const cplx ks[1] = {k};
    const auto model = fit_bound_constant(xs, ks, translation, 4);
    for (Vec2 x : xs) {
      TruncationBoundModel local = model;
      local.a = geometric_ratio(x, ys, translation.x_j);
      const auto [b1, b2] = theoretical_bounds(local, 20);
      const auto e = truncation_errors(x, translation, k, 20);
      EXPECT_LE(e.r, b1) << "k=" << k << " ratio " << e.r / b1;
      EXPECT_LE(*e.r_prime, b2) << "k=" << k << " ratio " << *e.r_prime / b2;
    }
  }
}
