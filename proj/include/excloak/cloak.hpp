#pragma once

// Green-identity cloak on a disk Omega and its exterior version: the
// boundary layers on the arcs dOmega_j are moved to devices x_j as
// multipolar sources V_m(x - x_j) = e^{i m arg(x - x_j)} H_m^(1)(k|x - x_j|).

#include <excloak/graf.hpp>

#include <concepts>
#include <tuple>
#include <limits>

namespace excloak::cloak {

struct CloakGeometry {
  Vec2 center;
  double delta_c = 0.0;
  double delta_d = 0.0;
  int n_dev = 4;
  double phase = pi / 4;
  int n_int = 128;
  std::vector<Vec2> devices;
};

struct BoundaryQuadrature {
  std::vector<Vec2> nodes;
  std::vector<Vec2> normals;
  std::vector<double> weights;
  std::vector<int> arc_index;  // owning device, 0-based
};

struct Cloak {
  CloakGeometry geometry;
  BoundaryQuadrature quadrature;
};

/// delta_D = sqrt(2) delta_C maximises the cloaked area for four devices.
inline double default_device_radius(double delta_c) { return std::numbers::sqrt2 * delta_c; }

/// Devices at center + delta_d (cos phi_j, sin phi_j), phi_j = phase + 2 pi j/n_dev;
/// arc j of width 2 pi/n_dev centred at phi_j carries n_int/n_dev midpoint nodes.
inline Cloak build_geometry(Vec2 center, double delta_c, double delta_d, int n_dev, double phase, int n_int) {
  if (!(delta_c > 0.0) || !(delta_d > delta_c) || !std::isfinite(delta_d))
    throw InvalidArgument("cloak geometry needs 0 < delta_c < delta_d");
  if (n_dev < 3) throw InvalidArgument("at least three devices are needed");
  if (n_int < n_dev || n_int % n_dev != 0)
    throw InvalidArgument("n_int must be a positive multiple of n_dev");
  Cloak c;
  c.geometry = {center, delta_c, delta_d, n_dev, phase, n_int, {}};
  const double arc = 2 * pi / n_dev;
  const int per_arc = n_int / n_dev;
  const double w = 2 * pi * delta_c / n_int;
  for (int j = 0; j < n_dev; ++j) {
    const double phi = phase + arc * j;
    c.geometry.devices.push_back(center + polar(delta_d, phi));
    for (int i = 0; i < per_arc; ++i) {
      const double t = phi - arc / 2 + arc * (i + 0.5) / per_arc;
      const Vec2 nu = polar(1.0, t);
      c.quadrature.nodes.push_back(center + delta_c * nu);
      c.quadrature.normals.push_back(nu);
      c.quadrature.weights.push_back(w);
      c.quadrature.arc_index.push_back(j);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Incident fields

template <class F>
concept IncidentField = requires(const F& f, Vec2 x, Vec2 nu, cplx k) {
  { f.value(x, k) } -> std::convertible_to<cplx>;
  { f.normal_derivative(x, nu, k) } -> std::convertible_to<cplx>;
};

/// amplitude * G(x - position; k)
struct PointSource {
  Vec2 position;
  cplx amplitude = 1.0;

  cplx value(Vec2 x, cplx k) const { return amplitude * graf::green(x, position, k); }
  /// grad_x [amplitude G(x - position)] . nu
  cplx normal_derivative(Vec2 x, Vec2 nu, cplx k) const {
    const Vec2 d = x - position;
    const double r = norm(d);
    if (r == 0.0) throw SingularityError("point source evaluated at its position");
    return amplitude * (-0.25 * I) * k * specfun::hankel1_01(k * r).second * (dot(d, nu) / r);
  }
};

struct ZeroField {
  cplx value(Vec2, cplx) const { return 0.0; }
  cplx normal_derivative(Vec2, Vec2, cplx) const { return 0.0; }
};

// ---------------------------------------------------------------------------
// Green-identity cloak

/// Midpoint-rule approximation of int_{dOmega} [-du_i/dnu G(x-y) + u_i dG/dnu(y)] dS(y):
/// -u_i inside Omega, 0 outside. Flagged inaccurate within one node spacing of dOmega.
template <IncidentField F>
FieldSample interior_cloak_field(Vec2 x, const Cloak& cl, const F& u_i, cplx k) {
  require_wavenumber(k);
  const auto& q = cl.quadrature;
  const double spacing = 2 * pi * cl.geometry.delta_c / cl.geometry.n_int;
  FieldSample out;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const Vec2 y = q.nodes[i], nu = q.normals[i];
    const double r = distance(x, y);
    if (r < spacing) out.accurate = false;
    const cplx ui = u_i.value(y, k);
    const cplx dui = u_i.normal_derivative(y, nu, k);
    if (ui == 0.0 && dui == 0.0) continue;
    out.value += q.weights[i] * (-dui * graf::green(x, y, k) + ui * graf::green_normal_derivative(x, y, nu, k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multipole coefficients and the exterior cloak

struct MultipoleCoefficients {
  cplx k;
  int m_max = 0;
  int n_dev = 0;
  std::vector<cplx> b;  // row j (0-based) holds m = -M..M

  cplx operator()(int j, int m) const {
    return b[static_cast<std::size_t>(j) * (2 * m_max + 1) + static_cast<std::size_t>(m + m_max)];
  }
  cplx& at(int j, int m) {
    return b[static_cast<std::size_t>(j) * (2 * m_max + 1) + static_cast<std::size_t>(m + m_max)];
  }
};

/// b_{j,m} = (i/4) sum over arc-j nodes of w [-du_i/dnu U_m(y - x_j) + u_i dU_m(y - x_j)/dnu],
/// U_m(d) = J_m(k|d|) e^{-i m arg d}. The factor i/4 of G is carried here so
/// that sum b_{j,m} V_m reproduces the Green-identity cloak.
template <IncidentField F>
MultipoleCoefficients multipole_coefficients(const Cloak& cl, const F& u_i, cplx k, int M) {
  require_wavenumber(k);
  if (M < 0) throw InvalidArgument("truncation order must be nonnegative");
  MultipoleCoefficients c{k, M, cl.geometry.n_dev, {}};
  c.b.assign(static_cast<std::size_t>(c.n_dev) * (2 * M + 1), cplx{});
  const auto& q = cl.quadrature;
  std::vector<cplx> j(static_cast<std::size_t>(M) + 2);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const int dev = q.arc_index[i];
    const Vec2 nu = q.normals[i];
    const cplx ui = u_i.value(q.nodes[i], k);
    const cplx dui = u_i.normal_derivative(q.nodes[i], nu, k);
    if (ui == 0.0 && dui == 0.0) continue;
    const Vec2 d = q.nodes[i] - cl.geometry.devices[dev];
    const double rho = norm(d);
    const double phi = arg(d);
    const double along = dot(d, nu) / rho;
    const double across = dot(perp(d), nu) / (rho * rho);
    specfun::bessel_j_fill(k * rho, j);
    const cplx scale = q.weights[i] * 0.25 * I;
    for (int m = 0; m <= M; ++m) {
      const cplx jp = m == 0 ? -j[1] : 0.5 * (j[m - 1] - j[m + 1]);
      const cplx e = std::polar(1.0, -m * phi);
      const cplx radial = k * jp * along;
      const cplx angular = cplx(0.0, static_cast<double>(m)) * j[m] * across;
      // U_m = J_m e^{-im phi},  dU_m/dnu = (k J_m' along - i m J_m across) e^{-im phi}
      c.at(dev, m) += scale * (-dui * j[m] + ui * (radial - angular)) * e;
      if (m > 0) {
        // U_{-m} = (-1)^m J_m e^{im phi},  dU_{-m}/dnu = (-1)^m (k J_m' along + i m J_m across) e^{im phi}
        const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        c.at(dev, -m) += scale * sgn * (-dui * j[m] + ui * (radial + angular)) * std::conj(e);
      }
    }
  }
  return c;
}

namespace detail {

/// h01(rho) returns H_0^(1)(k rho), H_1^(1)(k rho).
template <class H01>
std::vector<cplx> exterior_partial_sums(Vec2 x, const MultipoleCoefficients& c, const CloakGeometry& g, H01&& h01) {
  std::vector<cplx> out(static_cast<std::size_t>(c.m_max) + 1, cplx{});
  std::vector<cplx> h(static_cast<std::size_t>(std::max(c.m_max, 1)) + 1);
  for (int dev = 0; dev < c.n_dev; ++dev) {
    const Vec2 d = x - g.devices[dev];
    const double rho = norm(d);
    if (rho == 0.0) throw SingularityError("exterior cloak field evaluated at a device");
    std::tie(h[0], h[1]) = h01(rho);
    specfun::hankel1_fill_from(c.k * rho, h);
    const cplx e1 = std::polar(1.0, arg(d));
    cplx e = 1.0;
    out[0] += c(dev, 0) * h[0];
    for (int m = 1; m <= c.m_max; ++m) {
      e *= e1;
      const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
      out[m] += h[m] * (c(dev, m) * e + sgn * c(dev, -m) * std::conj(e));
    }
  }
  for (std::size_t m = 1; m < out.size(); ++m) out[m] += out[m - 1];
  return out;
}

}  // namespace detail

/// Partial sums u_e^{(M)}(x) for M = 0..coeffs.m_max.
inline std::vector<cplx> exterior_partial_sums(Vec2 x, const MultipoleCoefficients& c, const CloakGeometry& g) {
  return detail::exterior_partial_sums(x, c, g, [&](double rho) { return specfun::hankel1_01(c.k * rho); });
}

/// u_e^{(M)}(x) = sum_j sum_{|m|<=M} b_{j,m} V_m(x - x_j), M = coeffs.m_max.
inline cplx exterior_cloak_field(Vec2 x, const MultipoleCoefficients& c, const CloakGeometry& g) {
  return exterior_partial_sums(x, c, g).back();
}

/// As above with H_0, H_1 taken from a ray table for the same k.
inline cplx exterior_cloak_field(Vec2 x, const MultipoleCoefficients& c, const CloakGeometry& g,
                                 const specfun::HankelRay& ray) {
  return detail::exterior_partial_sums(x, c, g, ray).back();
}

// ---------------------------------------------------------------------------
// Divergence region

struct DivergenceRegion {
  Vec2 center;
  std::vector<Vec2> centers;
  std::vector<double> radii;
  double r_ci = 0.0;
  double r_co = 0.0;

  bool contains(Vec2 x) const {
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (distance(x, centers[j]) <= radii[j]) return true;
    return false;
  }
};

/// R_j = disk(x_j, max_{arc j nodes} |y - x_j|); r_ci, r_co about the centre.
inline DivergenceRegion divergence_region(const Cloak& cl) {
  const auto& g = cl.geometry;
  DivergenceRegion r;
  r.center = g.center;
  r.centers = g.devices;
  r.radii.assign(g.devices.size(), 0.0);
  for (std::size_t i = 0; i < cl.quadrature.nodes.size(); ++i) {
    const int j = cl.quadrature.arc_index[i];
    r.radii[j] = std::max(r.radii[j], distance(cl.quadrature.nodes[i], g.devices[j]));
  }
  r.r_ci = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.devices.size(); ++j) {
    const double dc = distance(g.devices[j], g.center);
    r.r_ci = std::min(r.r_ci, dc - r.radii[j]);
    r.r_co = std::max(r.r_co, dc + r.radii[j]);
  }
  return r;
}

/// The 2 n_dev points of the circles r_co + 0.1 delta_C and r_ci - 0.1 delta_C
/// nearest to the devices (they attain the maximal ratio a).
inline std::vector<Vec2> audit_points(const Cloak& cl, const DivergenceRegion& reg) {
  const auto& g = cl.geometry;
  std::vector<Vec2> out;
  for (double r : {reg.r_co + 0.1 * g.delta_c, reg.r_ci - 0.1 * g.delta_c}) {
    if (r <= 0.0) throw DivergenceRegionError("inner audit circle has nonpositive radius");
    for (int j = 0; j < g.n_dev; ++j) out.push_back(g.center + polar(r, g.phase + 2 * pi * j / g.n_dev));
  }
  return out;
}

/// a = max over x, j, arc-j nodes of |y - x_j| / |x - x_j|; every x must lie outside R.
inline double cloak_ratio(const Cloak& cl, std::span<const Vec2> xs) {
  const auto reg = divergence_region(cl);
  double a = 0.0;
  for (Vec2 x : xs) {
    if (reg.contains(x)) throw DivergenceRegionError("evaluation point lies in the divergence region R");
    for (std::size_t j = 0; j < reg.centers.size(); ++j)
      a = std::max(a, reg.radii[j] / distance(x, reg.centers[j]));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Truncation error bound

struct CloakErrorEstimate {
  cplx k;
  double c = 0.0;          // fitted constant
  double predicted = 0.0;  // c a^{M+1}/(1-a)
  double actual = 0.0;     // max_x |u_e^{(M)} - u_e^{(M_ref)}|
  double predicted_literal = 0.0;  // c' (1-a^{M+1})/(1-a), c' fitted in the same form
  std::vector<double> actual_by_order;  // same, for every order 0..M_ref
};

struct CloakErrorBound {
  double a = 0.0;
  int m_fit = 0;
  int m = 0;
  int m_ref = 0;
  std::vector<CloakErrorEstimate> per_k;
};

/// Fits C at M = m_fit against |u_e^{(m_fit)} - u_e^{(m_ref)}| (max over
/// x_eval) for each k and predicts the error C a^{M+1}/(1-a) at order M.
template <IncidentField F>
CloakErrorBound cloak_error_bound(const Cloak& cl, const F& u_i, std::span<const Vec2> x_eval,
                                  std::span<const cplx> k_grid, int m_fit, int M, int m_ref = 60,
                                  unsigned workers = 1) {
  if (x_eval.empty()) throw InvalidArgument("no evaluation points");
  if (m_fit < 0 || M < 0 || m_ref <= std::max(m_fit, M))
    throw InvalidArgument("orders must satisfy 0 <= m_fit, M < m_ref");
  CloakErrorBound out;
  out.a = cloak_ratio(cl, x_eval);
  if (!(out.a < 1.0)) throw DivergenceRegionError("ratio a must be below one");
  out.m_fit = m_fit;
  out.m = M;
  out.m_ref = m_ref;
  out.per_k.resize(k_grid.size());
  const double form_fit = std::pow(out.a, m_fit + 1) / (1.0 - out.a);
  const double form_m = std::pow(out.a, M + 1) / (1.0 - out.a);
  parallel_for(k_grid.size(), workers, [&](std::size_t ik) {
    const cplx k = k_grid[ik];
    const auto coeffs = multipole_coefficients(cl, u_i, k, m_ref);
    CloakErrorEstimate est;
    est.k = k;
    est.actual_by_order.assign(static_cast<std::size_t>(m_ref) + 1, 0.0);
    for (Vec2 x : x_eval) {
      const auto sums = exterior_partial_sums(x, coeffs, cl.geometry);
      for (int m = 0; m <= m_ref; ++m)
        est.actual_by_order[m] = std::max(est.actual_by_order[m], std::abs(sums[m] - sums[m_ref]));
    }
    est.c = est.actual_by_order[m_fit] / form_fit;
    est.predicted = est.c * form_m;
    est.actual = est.actual_by_order[M];
    est.predicted_literal =
        est.actual_by_order[m_fit] * (1.0 - std::pow(out.a, M + 1)) / (1.0 - std::pow(out.a, m_fit + 1));
    out.per_k[ik] = std::move(est);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Maximum principle audit

/// Polar grid of a closed disk. Points are ordered ring by ring from the
/// boundary inwards (ring 0 is the boundary), the centre last.
struct DiskGrid {
  Vec2 center;
  double radius = 1.0;
  int n_rings = 41;   // including the centre
  int n_angles = 128;

  std::vector<Vec2> points() const {
    std::vector<Vec2> out;
    for (int r = 0; r + 1 < n_rings; ++r) {
      const double rad = radius * (n_rings - 1 - r) / (n_rings - 1);
      for (int t = 0; t < n_angles; ++t) out.push_back(center + polar(rad, 2 * pi * t / n_angles));
    }
    out.push_back(center);
    return out;
  }
  std::size_t boundary_count() const { return static_cast<std::size_t>(n_angles); }
};

struct MaxPrincipleReport {
  Vec2 location;
  double max_value = 0.0;
  bool boundary_attained = false;
  bool applicable = false;
};

/// Location of max |value| on the grid; ties resolve to the boundary (the
/// first maximal point in grid order).
inline MaxPrincipleReport max_principle_audit(const DiskGrid& grid, std::span<const cplx> values, cplx k) {
  const auto pts = grid.points();
  if (values.size() != pts.size()) throw InvalidArgument("value count does not match the disk grid");
  MaxPrincipleReport rep;
  rep.applicable = std::abs(k.imag()) > std::abs(k.real());
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::abs(values[i]);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  rep.location = pts[best];
  rep.max_value = best_value;
  rep.boundary_attained = best < grid.boundary_count();
  return rep;
}

}  // namespace excloak::cloak
