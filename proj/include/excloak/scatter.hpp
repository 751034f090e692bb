#pragma once

// Sound-soft scattering by a smooth obstacle A:
//   u_s(x) = int_{dA} [dG/dnu(y)(x - y) - i eta G(x - y)] psi(y) dS(y),
//   psi + K psi - i eta S psi = -2 u_i   on dA,
// discretised by the Kapur-Rokhlin corrected trapezoid rule.

#include <excloak/graf.hpp>
#include <excloak/kapur_rokhlin.hpp>

#include <Eigen/Dense>
#include <fftw3.h>

#include <mutex>

namespace excloak::scatter {

struct ObstacleDiscretization {
  int n_nodes = 0;
  std::vector<double> tau;
  std::vector<Vec2> q;
  std::vector<Vec2> dq;
  std::vector<Vec2> normals;
  std::vector<double> jacobian;

  double step() const { return 2 * pi / n_nodes; }
};

struct DensitySolution {
  std::vector<cplx> psi;
  cplx k;
  double eta = 0.0;
  double rcond = 0.0;  // reciprocal condition estimate of the system
};

/// Samples a 2pi-periodic curve q(t) with derivative dq(t), counterclockwise.
template <class Q, class DQ>
ObstacleDiscretization discretize_curve(Q&& q, DQ&& dq, int n_nodes) {
  if (n_nodes < 16 || n_nodes % 2 != 0) throw InvalidArgument("n_nodes must be even and at least 16");
  ObstacleDiscretization o;
  o.n_nodes = n_nodes;
  for (int i = 0; i < n_nodes; ++i) {
    const double t = 2 * pi * i / n_nodes;
    const Vec2 d = dq(t);
    const double j = norm(d);
    o.tau.push_back(t);
    o.q.push_back(q(t));
    o.dq.push_back(d);
    o.jacobian.push_back(j);
    o.normals.push_back(Vec2{d.y / j, -d.x / j});
  }
  return o;
}

/// q(t) = center + scale (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)
inline ObstacleDiscretization kite_obstacle(Vec2 center, double scale, int n_nodes, double shift = 0.0) {
  if (!(scale > 0.0)) throw InvalidArgument("kite scale must be positive");
  return discretize_curve(
      [=](double t) {
        t += shift;
        return center + scale * Vec2{std::cos(t) + 0.65 * std::cos(2 * t) - 0.65, 1.5 * std::sin(t)};
      },
      [=](double t) {
        t += shift;
        return scale * Vec2{-std::sin(t) - 1.3 * std::sin(2 * t), 1.5 * std::cos(t)};
      },
      n_nodes);
}

/// Even-odd test of x against the node polygon.
inline bool inside_obstacle(const ObstacleDiscretization& o, Vec2 x) {
  bool in = false;
  for (std::size_t i = 0, j = o.q.size() - 1; i < o.q.size(); j = i++) {
    const Vec2 a = o.q[i], b = o.q[j];
    if ((a.y > x.y) != (b.y > x.y) && x.x < a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y)) in = !in;
  }
  return in;
}

/// eta = |k| for Re k >= 0, -|k| otherwise.
inline double choose_eta(cplx k) {
  require_wavenumber(k);
  return k.real() >= 0.0 ? std::abs(k) : -std::abs(k);
}

namespace detail {

inline void check_scattering(cplx k, double eta) {
  require_wavenumber(k);
  if (k.imag() < 0.0) throw UnsupportedRegimeError("scattering with Im(k) < 0 (gain media) is not supported");
  if (eta == 0.0 || eta * k.real() < 0.0) throw InvalidArgument("coupling parameter needs eta != 0, eta Re(k) >= 0");
}

/// dG/dnu(y)(x - y) - i eta G(x - y), given H_0, H_1 at k|x - y|.
inline cplx combined_kernel(Vec2 d, double r, Vec2 nu, cplx k, double eta, cplx h0, cplx h1) {
  return 0.25 * I * (k * h1 * dot(d, nu) / r - I * eta * h0);
}

inline cplx combined_kernel(Vec2 x, Vec2 y, Vec2 nu, cplx k, double eta) {
  const Vec2 d = x - y;
  const double r = norm(d);
  const auto [h0, h1] = specfun::hankel1_01(k * r);
  return combined_kernel(d, r, nu, k, eta, h0, h1);
}

/// Upper bound for the largest node-to-node distance.
inline double diameter_bound(const std::vector<Vec2>& q) {
  double r = 0.0;
  for (Vec2 y : q) r = std::max(r, distance(y, q.front()));
  return 2.0 * r;
}

}  // namespace detail

/// Dense matrix of I + K - i eta S on the nodes (corrected trapezoid rule).
/// H_0, H_1 at k|q_i - q_j| come from a ray table and are shared between
/// (i,j) and (j,i).
inline Eigen::MatrixXcd system_matrix(const ObstacleDiscretization& o, cplx k, double eta, unsigned workers = 1) {
  detail::check_scattering(k, eta);
  const int n = o.n_nodes;
  const double h = o.step();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n);
  const specfun::HankelRay ray(k, detail::diameter_bound(o.q));
  auto fill_row = [&](int i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = kapur_rokhlin::weight_factor(kapur_rokhlin::periodic_distance(i, j, n));
      const Vec2 d = o.q[i] - o.q[j];
      const double r = norm(d);
      const auto [h0, h1] = ray(r);
      const cplx single = -I * eta * h0;
      const cplx kh1 = k * h1 / r;
      a(i, j) += 2.0 * w * h * o.jacobian[j] * 0.25 * I * (kh1 * dot(d, o.normals[j]) + single);
      a(j, i) += 2.0 * w * h * o.jacobian[i] * 0.25 * I * (-kh1 * dot(d, o.normals[i]) + single);
    }
  };
  // rows p and n-1-p together keep the triangular work balanced
  parallel_for(static_cast<std::size_t>((n + 1) / 2), workers, [&](std::size_t p) {
    const int i = static_cast<int>(p);
    fill_row(i);
    if (n - 1 - i != i) fill_row(n - 1 - i);
  });
  return a;
}

/// LU factorisation of the system matrix, reusable for several incident fields.
class DensitySolver {
 public:
  DensitySolver(const ObstacleDiscretization& o, cplx k, double eta, unsigned workers = 1)
      : n_(o.n_nodes), k_(k), eta_(eta), lu_(system_matrix(o, k, eta, workers)) {
    rcond_ = lu_.rcond();
    if (!(rcond_ > 1e-13))
      throw NumericalError("boundary integral system is singular or ill-conditioned (rcond " + std::to_string(rcond_) + ")");
  }

  DensitySolution solve(std::span<const cplx> u_inc_trace) const {
    if (u_inc_trace.size() != static_cast<std::size_t>(n_))
      throw InvalidArgument("incident trace must have one value per node");
    Eigen::VectorXcd rhs(n_);
    for (int i = 0; i < n_; ++i) rhs[i] = -2.0 * u_inc_trace[static_cast<std::size_t>(i)];
    const Eigen::VectorXcd psi = lu_.solve(rhs);
    return {{psi.data(), psi.data() + psi.size()}, k_, eta_, rcond_};
  }

  double rcond() const { return rcond_; }

 private:
  int n_;
  cplx k_;
  double eta_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double rcond_ = 0.0;
};

/// Solves psi + K psi - i eta S psi = -2 u_i on the nodes.
inline DensitySolution solve_density(const ObstacleDiscretization& o, std::span<const cplx> u_inc_trace, cplx k,
                                     double eta, unsigned workers = 1) {
  if (u_inc_trace.size() != static_cast<std::size_t>(o.n_nodes))
    throw InvalidArgument("incident trace must have one value per node");
  return DensitySolver(o, k, eta, workers).solve(u_inc_trace);
}

/// Trapezoid evaluation of the combined potential; flagged inaccurate
/// within one node spacing of dA.
inline FieldSample scattered_field(Vec2 x, const ObstacleDiscretization& o, const DensitySolution& d) {
  const double h = o.step();
  FieldSample out;
  for (int j = 0; j < o.n_nodes; ++j) {
    const double r = distance(x, o.q[j]);
    if (r < h * o.jacobian[j]) out.accurate = false;
    if (d.psi[j] == 0.0) continue;
    if (r == 0.0) throw SingularityError("scattered field evaluated at a boundary node");
    out.value += h * o.jacobian[j] * detail::combined_kernel(x, o.q[j], o.normals[j], d.k, d.eta) * d.psi[j];
  }
  return out;
}

/// u_s(x) = sum_{|m|<=M} c_m V_m(x - center), valid for |x - center| > radius.
struct OutgoingExpansion {
  Vec2 center;
  double radius = 0.0;  // max |q_j - center|
  cplx k;
  int m_max = 0;
  std::vector<cplx> c;  // m = -M..M

  cplx operator()(Vec2 x) const {
    const Vec2 d = x - center;
    const double r = norm(d);
    if (!(r > radius)) throw DivergenceRegionError("outgoing expansion evaluated inside its disk");
    std::vector<cplx> h(static_cast<std::size_t>(std::max(m_max, 1)) + 1);
    specfun::hankel1_fill(k * r, h);
    return sum(h, std::polar(1.0, arg(d)));
  }

  /// sum_m c_m h[|m|] (+-1)^m e1^m with h[m] = H_m(k|x - center|), e1 = e^{i arg(x - center)}.
  cplx sum(std::span<const cplx> h, cplx e1) const {
    cplx e = 1.0;
    cplx total = c[static_cast<std::size_t>(m_max)] * h[0];
    for (int m = 1; m <= m_max; ++m) {
      if (!is_finite(h[m])) break;  // overflowing H_m multiplies negligible c_m
      e *= e1;
      const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
      total += h[m] * (c[static_cast<std::size_t>(m_max + m)] * e + sgn * c[static_cast<std::size_t>(m_max - m)] * std::conj(e));
    }
    return total;
  }
};

/// Graf expansion of the combined potential about `center`:
/// c_m = (i/4) h sum_j |q'_j| psi_j [dU_m(q_j - center)/dnu_j - i eta U_m(q_j - center)],
/// truncated at M = ceil(|k| radius) + extra.
inline OutgoingExpansion outgoing_expansion(const ObstacleDiscretization& o, const DensitySolution& d, Vec2 center,
                                            int extra = 100) {
  OutgoingExpansion ex;
  ex.center = center;
  ex.k = d.k;
  for (Vec2 y : o.q) ex.radius = std::max(ex.radius, distance(y, center));
  const int M = static_cast<int>(std::ceil(std::abs(d.k) * ex.radius)) + extra;
  ex.m_max = M;
  ex.c.assign(static_cast<std::size_t>(2 * M + 1), cplx{});
  std::vector<cplx> j(static_cast<std::size_t>(M) + 2);
  const double h = o.step();
  for (int i = 0; i < o.n_nodes; ++i) {
    const Vec2 dv = o.q[i] - center;
    const double rho = norm(dv);
    const Vec2 nu = o.normals[i];
    const cplx scale = 0.25 * I * h * o.jacobian[i] * d.psi[i];
    if (rho == 0.0) {
      // only U_0 = 1 and dU_{+-1}/dnu survive at the centre
      ex.c[static_cast<std::size_t>(M)] += scale * (-I * d.eta);
      const cplx t = 0.5 * d.k * cplx(nu.x, -nu.y);
      if (M >= 1) {
        ex.c[static_cast<std::size_t>(M + 1)] += scale * t;
        ex.c[static_cast<std::size_t>(M - 1)] -= scale * 0.5 * d.k * cplx(nu.x, nu.y);
      }
      continue;
    }
    const double phi = arg(dv);
    const double along = dot(dv, nu) / rho;
    const double across = dot(perp(dv), nu) / (rho * rho);
    specfun::bessel_j_fill(d.k * rho, j);
    const cplx e1 = std::polar(1.0, -phi);
    cplx e = 1.0;
    for (int m = 0; m <= M; ++m) {
      const cplx jp = m == 0 ? -j[1] : 0.5 * (j[m - 1] - j[m + 1]);
      const cplx radial = d.k * jp * along;
      const cplx angular = cplx(0.0, static_cast<double>(m)) * j[m] * across;
      const cplx single = -I * d.eta * j[m];
      ex.c[static_cast<std::size_t>(M + m)] += scale * (radial - angular + single) * e;
      if (m > 0) {
        const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        ex.c[static_cast<std::size_t>(M - m)] += scale * sgn * (radial + angular + single) * std::conj(e);
      }
      e *= e1;
    }
  }
  return ex;
}

/// Trigonometric interpolant of node values evaluated at tau_i + shift on a
/// grid of n_out points (n_out >= n, even).
inline std::vector<cplx> resample_periodic(std::span<const cplx> v, int n_out, double shift) {
  const int n = static_cast<int>(v.size());
  if (n % 2 != 0 || n_out < n) throw InvalidArgument("resampling needs an even input and n_out >= n");
  static std::mutex planner;  // FFTW planning is not thread-safe
  std::vector<cplx> spec(v.begin(), v.end()), out(static_cast<std::size_t>(n_out));
  fftw_plan fwd, bwd;
  std::vector<cplx> big(static_cast<std::size_t>(n_out), cplx{});
  {
    std::lock_guard lock(planner);
    fwd = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), reinterpret_cast<fftw_complex*>(spec.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n_out, reinterpret_cast<fftw_complex*>(big.data()), reinterpret_cast<fftw_complex*>(out.data()),
                           FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  // modes -n/2+1..n/2-1 map directly; the Nyquist mode is split as cos(n t/2)
  for (int m = -n / 2 + 1; m < n / 2; ++m) {
    const cplx c = spec[static_cast<std::size_t>((m + n) % n)] * std::polar(1.0, m * shift) / static_cast<double>(n);
    big[static_cast<std::size_t>((m + n_out) % n_out)] += c;
  }
  const cplx nyq = spec[static_cast<std::size_t>(n / 2)] / static_cast<double>(n);
  if (n_out == n) {
    big[static_cast<std::size_t>(n / 2)] += nyq * std::cos(0.5 * n * shift);
  } else {
    big[static_cast<std::size_t>(n / 2)] += 0.5 * nyq * std::polar(1.0, 0.5 * n * shift);
    big[static_cast<std::size_t>(n_out - n / 2)] += 0.5 * nyq * std::polar(1.0, -0.5 * n * shift);
  }
  fftw_execute(bwd);
  {
    std::lock_guard lock(planner);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

/// Nodes of the same kite shifted by `shift` in parameter, with the density
/// interpolated there; used to test the solution away from the solve nodes.
inline DensitySolution resample_density(const DensitySolution& d, int n_out, double shift) {
  DensitySolution r = d;
  r.psi = resample_periodic(d.psi, n_out, shift);
  return r;
}

/// Boundary value of u_s from outside: (psi + K psi - i eta S psi)/2 on the nodes of o.
inline std::vector<cplx> boundary_trace(const ObstacleDiscretization& o, const DensitySolution& d, unsigned workers = 1) {
  const Eigen::MatrixXcd a = system_matrix(o, d.k, d.eta, workers);
  const Eigen::Map<const Eigen::VectorXcd> psi(d.psi.data(), static_cast<Eigen::Index>(d.psi.size()));
  const Eigen::VectorXcd t = 0.5 * (a * psi);
  return {t.data(), t.data() + t.size()};
}

/// max |u_i + u_s| / max |u_i| over boundary points half a step away from
/// the solve nodes. make(n, shift) builds the obstacle with parameter shift;
/// u_i(x) is the incident field.
template <class Make, class Inc>
double boundary_residual(Make&& make, int n_nodes, Inc&& u_i, cplx k, double eta, unsigned workers = 1) {
  const auto o = make(n_nodes, 0.0);
  std::vector<cplx> trace;
  for (Vec2 x : o.q) trace.push_back(u_i(x));
  const auto d = solve_density(o, trace, k, eta, workers);
  const double shift = 0.5 * o.step();
  const auto shifted = make(n_nodes, shift);
  const auto us = boundary_trace(shifted, resample_density(d, n_nodes, shift), workers);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const cplx ui = u_i(shifted.q[i]);
    num = std::max(num, std::abs(ui + us[i]));
    den = std::max(den, std::abs(ui));
  }
  return num / den;
}

}  // namespace excloak::scatter
