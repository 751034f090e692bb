#include <excloak/cloak.hpp>
#include <gtest/gtest.h>

#include "graf_configs.hpp"

using namespace excloak;
using namespace excloak::cloak;

namespace {

constexpr double delta_c = 10.0 / 6.0;
const Vec2 centre{5.0, 5.0};

Cloak standard_cloak(int n_int = 128, double phase = pi / 4) {
  return build_geometry(centre, delta_c, default_device_radius(delta_c), 4, phase, n_int);
}

Vec2 rotate_about(Vec2 p, Vec2 c, double t) {
  const Vec2 d = p - c;
  return c + Vec2{std::cos(t) * d.x - std::sin(t) * d.y, std::sin(t) * d.x + std::cos(t) * d.y};
}

/// Max over points of Omega at distance >= 0.3 from the boundary of |u_c + u_i| / |u_i|.
double interior_residual(const Cloak& cl, const PointSource& src, cplx k) {
  double worst = 0.0;
  for (int i = 0; i < 31; ++i)
    for (int j = 0; j < 31; ++j) {
      const Vec2 x{centre.x - delta_c + 2 * delta_c * i / 30, centre.y - delta_c + 2 * delta_c * j / 30};
      if (distance(x, centre) > delta_c - 0.3) continue;
      const auto u = interior_cloak_field(x, cl, src, k);
      EXPECT_TRUE(u.accurate);
      worst = std::max(worst, std::abs(u.value + src.value(x, k)) / std::abs(src.value(x, k)));
    }
  return worst;
}

}  // namespace

TEST(Geometry, StandardConfiguration) {
  const auto cl = standard_cloak();
  EXPECT_NEAR(cl.geometry.delta_d, 5 * std::sqrt(2.0) / 3, 1e-15);
  ASSERT_EQ(cl.quadrature.nodes.size(), 128u);
  double sum = 0.0;
  std::vector<int> per_arc(4, 0);
  for (std::size_t i = 0; i < 128; ++i) {
    sum += cl.quadrature.weights[i];
    ++per_arc[cl.quadrature.arc_index[i]];
    EXPECT_NEAR(norm(cl.quadrature.normals[i]), 1.0, 1e-15);
    EXPECT_NEAR(distance(cl.quadrature.nodes[i], centre), delta_c, 1e-14);
    EXPECT_GT(dot(cl.quadrature.normals[i], cl.quadrature.nodes[i] - centre), 0.0);
  }
  EXPECT_NEAR(sum, 2 * pi * delta_c, 1e-12 * 2 * pi * delta_c);
  for (int n : per_arc) EXPECT_EQ(n, 32);
  // device 1 on the diagonal
  EXPECT_NEAR(cl.geometry.devices[0].x, 5.0 + delta_c, 1e-14);
  EXPECT_NEAR(cl.geometry.devices[0].y, 5.0 + delta_c, 1e-14);
}

TEST(Geometry, NodesCloserToOwnDevice) {
  const auto cl = standard_cloak();
  for (std::size_t i = 0; i < cl.quadrature.nodes.size(); ++i) {
    const int own = cl.quadrature.arc_index[i];
    for (int j = 0; j < 4; ++j)
      EXPECT_LE(distance(cl.quadrature.nodes[i], cl.geometry.devices[own]),
                distance(cl.quadrature.nodes[i], cl.geometry.devices[j]) + 1e-14);
  }
}

TEST(Geometry, Errors) {
  EXPECT_THROW(build_geometry(centre, delta_c, 2.0, 4, 0.0, 7), InvalidArgument);
  EXPECT_THROW(build_geometry(centre, delta_c, 2.0, 2, 0.0, 8), InvalidArgument);
  EXPECT_THROW(build_geometry(centre, delta_c, 1.0, 4, 0.0, 8), InvalidArgument);
  EXPECT_THROW(build_geometry(centre, 0.0, 1.0, 4, 0.0, 8), InvalidArgument);
}

TEST(PointSourceField, SatisfiesHelmholtz) {
  const PointSource src{{2, 5}};
  const cplx k(10.0, 0.5);
  const double h = 1e-3;
  for (Vec2 x : {Vec2{5, 5}, Vec2{4.2, 5.9}, Vec2{6.1, 4.0}}) {
    const cplx u = src.value(x, k);
    const cplx lap = (src.value(x + Vec2{h, 0}, k) + src.value(x - Vec2{h, 0}, k) + src.value(x + Vec2{0, h}, k) +
                      src.value(x - Vec2{0, h}, k) - 4.0 * u) / (h * h);
    EXPECT_LT(std::abs(lap + k * k * u), h * h * std::pow(std::abs(k), 4) * std::abs(u));
  }
}

TEST(PointSourceField, NormalDerivative) {
  const PointSource src{{2, 5}, cplx(0.3, -1.1)};
  const cplx k(3.0, 1.0);
  const Vec2 x{4.5, 5.7}, nu{0.6, -0.8};
  const double h = 1e-5;
  const cplx fd = (src.value(x + h * nu, k) - src.value(x - h * nu, k)) / (2 * h);
  EXPECT_LT(std::abs(src.normal_derivative(x, nu, k) - fd), 1e-9 * std::abs(fd));
}

TEST(InteriorCloak, ReproducesMinusIncident) {
  const auto cl = standard_cloak(256);
  const PointSource src{{2, 5}};
  for (cplx k : {cplx(10.0), cplx(0, 0.5), cplx(10, 0.5), cplx(10, -0.5)})
    EXPECT_LE(interior_residual(cl, src, k), 1e-5) << k;
}

TEST(InteriorCloak, VanishesOutside) {
  const auto cl = standard_cloak(256);
  const PointSource src{{2, 5}};
  const cplx k = 10.0;
  double max_ui = 0.0;
  for (int i = 0; i < 64; ++i)
    for (double r : {0.0, 0.5, 1.0, delta_c})
      max_ui = std::max(max_ui, std::abs(src.value(centre + polar(r, 2 * pi * i / 64), k)));
  for (int i = 0; i < 48; ++i)
    for (double r : {delta_c + 0.3, delta_c + 1.0, 4.0}) {
      const Vec2 x = centre + polar(r, 2 * pi * i / 48 + 0.01);
      if (distance(x, src.position) < 0.3) continue;
      EXPECT_LE(std::abs(interior_cloak_field(x, cl, src, k).value), 1e-5 * max_ui);
    }
}

TEST(InteriorCloak, ZeroIncident) {
  const auto cl = standard_cloak();
  EXPECT_EQ(interior_cloak_field({5.2, 4.9}, cl, ZeroField{}, 10.0).value, cplx(0.0));
}

TEST(InteriorCloak, FlagsNearBoundary) {
  const auto cl = standard_cloak();
  EXPECT_FALSE(interior_cloak_field(cl.quadrature.nodes[3] + Vec2{1e-3, 0}, cl, PointSource{{2, 5}}, 10.0).accurate);
}

TEST(InteriorCloak, SpectralConvergence) {
  const PointSource src{{2, 5}};
  const double r64 = interior_residual(standard_cloak(64), src, 10.0);
  const double r128 = interior_residual(standard_cloak(128), src, 10.0);
  const double r256 = interior_residual(standard_cloak(256), src, 10.0);
  EXPECT_LE(r128, 0.1 * r64);
  EXPECT_LE(r256, 0.1 * r128);
}

TEST(Multipole, ZeroIncident) {
  const auto cl = standard_cloak();
  const auto c = multipole_coefficients(cl, ZeroField{}, 10.0, 22);
  ASSERT_EQ(c.b.size(), 4u * 45u);
  for (cplx b : c.b) EXPECT_EQ(b, cplx(0.0));
  EXPECT_EQ(exterior_cloak_field({1, 1}, c, cl.geometry), cplx(0.0));
}

TEST(Multipole, FiniteEntries) {
  const auto cl = standard_cloak();
  const auto c = multipole_coefficients(cl, PointSource{{2, 5}}, 10.0, 60);
  for (cplx b : c.b) EXPECT_TRUE(std::isfinite(b.real()) && std::isfinite(b.imag()));
}

// Rotating source and arcs by alpha = 2 pi/n_dev maps arc j onto arc j+1; in
// the fixed frame U_m picks up e^{-i m alpha}.
TEST(Multipole, RotationPermutesBlocks) {
  const auto cl = standard_cloak();
  const double alpha = pi / 2;
  const PointSource src{{2.3, 4.1}};
  const PointSource rotated{rotate_about(src.position, centre, alpha)};
  for (cplx k : {cplx(10.0), cplx(2, 1)}) {
    const auto b = multipole_coefficients(cl, src, k, 12);
    const auto br = multipole_coefficients(cl, rotated, k, 12);
    for (int j = 0; j < 4; ++j)
      for (int m = -12; m <= 12; ++m) {
        const cplx expect = b(j, m) * std::polar(1.0, -m * alpha);
        EXPECT_LE(std::abs(br((j + 1) % 4, m) - expect), 1e-10 * std::abs(b(j, 0)) + 1e-12 * std::abs(expect))
            << j << ' ' << m;
      }
  }
}

TEST(Multipole, RotatedGeometryEqualsRotatedPhase) {
  const auto cl = standard_cloak();
  const auto clr = standard_cloak(128, pi / 4 + pi / 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(clr.geometry.devices[i].x, cl.geometry.devices[(i + 1) % 4].x, 1e-13);
    EXPECT_NEAR(clr.geometry.devices[i].y, cl.geometry.devices[(i + 1) % 4].y, 1e-13);
  }
}

TEST(ExteriorCloak, SingularAtDevice) {
  const auto cl = standard_cloak();
  const auto c = multipole_coefficients(cl, PointSource{{2, 5}}, 10.0, 4);
  EXPECT_THROW(exterior_cloak_field(cl.geometry.devices[2], c, cl.geometry), SingularityError);
}

namespace {

double max_incident_on_omega(const PointSource& src, cplx k) {
  double m = 0.0;
  for (int i = 0; i < 64; ++i)
    for (double r : {0.0, 0.5, 1.0, delta_c}) m = std::max(m, std::abs(src.value(centre + polar(r, 2 * pi * i / 64), k)));
  return m;
}

}  // namespace

TEST(ExteriorCloak, MatchesInteriorCloakOutsideCircumscribedCircle) {
  const auto cl = standard_cloak(256);
  const auto reg = divergence_region(cl);
  const PointSource src{{2, 5}};
  const cplx k = 10.0;
  const double max_ui = max_incident_on_omega(src, k);
  const auto c = multipole_coefficients(cl, src, k, 60);
  for (int i = 0; i < 40; ++i) {
    const Vec2 x = centre + polar(reg.r_co + 0.5, 2 * pi * i / 40);
    const cplx ue = exterior_cloak_field(x, c, cl.geometry);
    EXPECT_LE(std::abs(ue - interior_cloak_field(x, cl, src, k).value), 1e-6 * max_ui);
  }
}

TEST(ExteriorCloak, MatchesInteriorCloakAtAuditPoints) {
  const auto cl = standard_cloak(256);
  const auto reg = divergence_region(cl);
  const PointSource src{{2, 5}};
  const cplx k = 10.0;
  const double max_ui = max_incident_on_omega(src, k);
  const auto c = multipole_coefficients(cl, src, k, 60);
  for (Vec2 x : audit_points(cl, reg)) {
    const cplx ue = exterior_cloak_field(x, c, cl.geometry);
    EXPECT_LE(std::abs(ue - interior_cloak_field(x, cl, src, k).value), 1e-6 * max_ui);
  }
}

TEST(ExteriorCloak, CancelsIncidentInsideRing) {
  const auto cl = standard_cloak(256);
  const PointSource src{{2, 5}};
  for (cplx k : {cplx(10.0), cplx(0, 0.5), cplx(10, 0.5)}) {
    const auto c = multipole_coefficients(cl, src, k, 60);
    for (Vec2 x : {centre, Vec2{5.3, 4.8}, Vec2{4.6, 5.1}})
      EXPECT_LE(std::abs(exterior_cloak_field(x, c, cl.geometry) + src.value(x, k)), 1e-5 * std::abs(src.value(x, k)));
  }
}

TEST(ExteriorCloak, WithinFittedBoundAtOrder22) {
  const auto cl = standard_cloak();
  const auto reg = divergence_region(cl);
  const PointSource src{{2, 5}};
  const auto pts = audit_points(cl, reg);
  const std::vector<cplx> ks{10.0};
  const auto bound = cloak_error_bound(cl, src, pts, ks, 3, 22);
  const auto c = multipole_coefficients(cl, src, 10.0, 22);
  for (Vec2 x : pts)
    EXPECT_LE(std::abs(exterior_cloak_field(x, c, cl.geometry) - interior_cloak_field(x, cl, src, 10.0).value),
              bound.per_k[0].predicted);
}

// Outside Omega u_e is a near-total cancellation of its terms, so the
// difference check runs where u_e is close to -u_i.
TEST(ExteriorCloak, HelmholtzAwayFromDevices) {
  const auto cl = standard_cloak();
  const PointSource src{{2, 5}};
  for (cplx k : {cplx(10.0), cplx(3, 1), cplx(0, 0.5)}) {
    const double h = std::min(0.02 / std::abs(k), 2e-3);
    const auto c = multipole_coefficients(cl, src, k, 22);
    auto u = [&](Vec2 x) { return exterior_cloak_field(x, c, cl.geometry); };
    for (Vec2 x : {centre, Vec2{5.2, 5.5}, Vec2{4.6, 4.7}, Vec2{5.0, 5.6}}) {
      const cplx v = u(x);
      const cplx lap = (u(x + Vec2{h, 0}) + u(x - Vec2{h, 0}) + u(x + Vec2{0, h}) + u(x - Vec2{0, h}) - 4.0 * v) / (h * h);
      EXPECT_LE(std::abs(lap + k * k * v), 1e-3 * std::abs(k * k * v)) << k;
    }
  }
}

TEST(Region, SymmetricRadii) {
  const auto cl = standard_cloak();
  const auto reg = divergence_region(cl);
  for (double r : reg.radii) EXPECT_NEAR(r, reg.radii[0], 1e-13);
  EXPECT_NEAR(reg.r_co, cl.geometry.delta_d + reg.radii[0], 1e-13);
  EXPECT_NEAR(reg.r_ci, cl.geometry.delta_d - reg.radii[0], 1e-13);
  // radius tends to delta_c (arc endpoints) as nodes approach them
  EXPECT_LT(reg.radii[0], delta_c);
  EXPECT_GT(reg.radii[0], 0.95 * delta_c);
}

// With delta_D = sqrt(2) delta_C every R_j misses the centre, which lies in
// the cloaked region inside the inscribed circle.
TEST(Region, CentreLiesOutsideR) {
  const auto cl = standard_cloak();
  const auto reg = divergence_region(cl);
  EXPECT_FALSE(reg.contains(centre));
  EXPECT_GT(reg.r_ci, 0.0);
  for (Vec2 d : cl.geometry.devices) EXPECT_TRUE(reg.contains(d));
}

TEST(Bound, AuditPoints) {
  const auto cl = standard_cloak();
  const auto reg = divergence_region(cl);
  const auto pts = audit_points(cl, reg);
  ASSERT_EQ(pts.size(), 8u);
  const double a = cloak_ratio(cl, pts);
  EXPECT_LT(a, 1.0);
  // every point attains the same ratio
  for (Vec2 x : pts) EXPECT_NEAR(cloak_ratio(cl, std::span<const Vec2>(&x, 1)), a, 1e-12);
  // and the audit circles attain no larger ratio anywhere else
  for (double r : {reg.r_co + 0.1 * delta_c, reg.r_ci - 0.1 * delta_c})
    for (int i = 0; i < 720; ++i) {
      const Vec2 x = centre + polar(r, 2 * pi * i / 720 + 0.001);
      EXPECT_LE(cloak_ratio(cl, std::span<const Vec2>(&x, 1)), a + 1e-12);
    }
}

TEST(Bound, InsideRegionRejected) {
  const auto cl = standard_cloak();
  const std::vector<Vec2> pts{cl.geometry.devices[0] + Vec2{0.1, 0}};
  const std::vector<cplx> ks{10.0};
  EXPECT_THROW(cloak_error_bound(cl, PointSource{{8, 5}}, pts, ks, 3, 22), DivergenceRegionError);
}

TEST(Bound, ZeroIncident) {
  const auto cl = standard_cloak();
  const auto pts = audit_points(cl, divergence_region(cl));
  const std::vector<cplx> ks{10.0, cplx(1, 1)};
  const auto b = cloak_error_bound(cl, ZeroField{}, pts, ks, 3, 22);
  for (const auto& e : b.per_k) {
    EXPECT_EQ(e.c, 0.0);
    EXPECT_EQ(e.predicted, 0.0);
  }
}

TEST(Bound, MonotoneTruncation) {
  const auto cl = standard_cloak();
  const auto pts = audit_points(cl, divergence_region(cl));
  const auto ks = excloak::family_samples(3);
  const auto b = cloak_error_bound(cl, PointSource{{8, 5}}, pts, ks, 3, 22);
  for (const auto& e : b.per_k)
    for (int m : {6, 10, 14, 18}) EXPECT_LE(e.actual_by_order[m + 4], e.actual_by_order[m]) << e.k << ' ' << m;
}

TEST(Bound, DominatesAcrossDissipativeFamily) {
  const auto cl = standard_cloak();
  const auto pts = audit_points(cl, divergence_region(cl));
  const auto ks = excloak::family_samples(3);
  const auto b = cloak_error_bound(cl, PointSource{{8, 5}}, pts, ks, 3, 22);
  for (const auto& e : b.per_k) EXPECT_GE(e.predicted, e.actual) << e.k;
}

TEST(MaxPrinciple, ZeroFieldTiesToBoundary) {
  const DiskGrid grid{centre, 0.5, 11, 32};
  const std::vector<cplx> zero(grid.points().size(), cplx{});
  const auto rep = max_principle_audit(grid, zero, cplx(0, 0.5));
  EXPECT_TRUE(rep.boundary_attained);
  EXPECT_TRUE(rep.applicable);
  EXPECT_EQ(rep.location.x, grid.points()[0].x);
  EXPECT_EQ(rep.location.y, grid.points()[0].y);
}

TEST(MaxPrinciple, SizeMismatch) {
  const DiskGrid grid{centre, 0.5, 11, 32};
  const std::vector<cplx> v(3);
  EXPECT_THROW(max_principle_audit(grid, v, 1.0), InvalidArgument);
}

TEST(MaxPrinciple, TruncationErrorOnDisk) {
  const auto cl = standard_cloak();
  const auto reg = divergence_region(cl);
  const DiskGrid grid{centre, reg.r_ci - 0.1 * delta_c, 41, 128};
  const auto pts = grid.points();
  const PointSource src{{2, 5}};
  for (cplx k : {cplx(0, 0.5), cplx(10, 0.5)}) {
    const auto c = multipole_coefficients(cl, src, k, 60);
    std::vector<cplx> err;
    for (Vec2 x : pts) {
      const auto s = exterior_partial_sums(x, c, cl.geometry);
      err.push_back(s[22] - s[60]);
    }
    const auto rep = max_principle_audit(grid, err, k);
    if (k.real() == 0.0) {
      EXPECT_TRUE(rep.applicable);
      EXPECT_TRUE(rep.boundary_attained);
    } else {
      EXPECT_FALSE(rep.applicable);
    }
  }
}
