#pragma once

// Helmholtz Green function G(x - y; k) = (i/4) H_0^(1)(k|x - y|), its
// normal derivative in y, Graf-addition translation of monopoles and
// dipoles to a new centre x_j, truncation errors and the geometric bounds
// with empirically fitted constants.

#include <excloak/specfun.hpp>
#include <excloak/wavenumber.hpp>

#include <optional>
#include <span>
#include <vector>

namespace excloak::graf {

struct SourceTranslation {
  Vec2 y;                   // original source position
  Vec2 x_j;                 // new centre
  std::optional<Vec2> nu;   // unit normal at y, for dipoles
};

struct TruncationErrors {
  double r = 0.0;
  std::optional<double> r_prime;  // empty when y = x_j (dipole series undefined)
};

struct TruncationBoundModel {
  double a = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  int m_fit = 0;
};

namespace detail {

inline void require_unit(Vec2 nu) {
  if (std::abs(norm(nu) - 1.0) > 1e-12) throw InvalidArgument("normal vector must have unit length");
}

inline Vec2 require_nu(const SourceTranslation& st) {
  if (!st.nu) throw InvalidArgument("dipole translation needs a normal vector");
  require_unit(*st.nu);
  return *st.nu;
}

/// Translated monopole and dipole partial sums for every truncation order
/// 0..m_max, from one Bessel evaluation per argument.
struct PartialSums {
  std::vector<cplx> monopole;
  std::vector<cplx> dipole;  // empty when no normal or y = x_j
};

inline PartialSums partial_sums(Vec2 x, const SourceTranslation& st, cplx k, int m_max) {
  require_wavenumber(k);
  if (m_max < 0) throw InvalidArgument("truncation order must be nonnegative");
  const Vec2 dx = x - st.x_j;
  const Vec2 dy = st.y - st.x_j;
  const double rx = norm(dx);
  const double ry = norm(dy);
  if (rx == 0.0) throw SingularityError("evaluation point coincides with the expansion centre");

  const double theta = arg(dx) - arg(dy);
  const bool dipole = st.nu.has_value() && ry > 0.0;
  double along = 0.0, across = 0.0;
  if (st.nu) {
    const Vec2 nu = require_nu(st);
    if (ry > 0.0) {
      along = dot(dy, nu) / ry;
      across = dot(perp(dy), nu) / (ry * ry);
    }
  }

  PartialSums out;
  out.monopole.resize(static_cast<std::size_t>(m_max) + 1);
  const cplx quarter_i = 0.25 * I;
  const auto [h0, h1] = specfun::hankel1_01(k * rx);
  if (ry == 0.0) {
    // J_m(0) = 0 for m >= 1: a single surviving term.
    std::fill(out.monopole.begin(), out.monopole.end(), quarter_i * h0);
    return out;
  }

  // p_m = H_m J_m is built from ratio sequences so that it stays finite
  // when H_m overflows and J_m underflows at high order.
  const cplx zy = k * ry;
  const auto hr = specfun::hankel1_ratios(m_max, k * rx);
  const auto jr = specfun::bessel_j_ratios(m_max + 1, zy);
  const cplx j0 = specfun::bessel_j(0, zy);
  cplx p = h0 * j0;
  cplx mono = p;
  out.monopole[0] = quarter_i * mono;
  cplx dip{};
  if (dipole) {
    out.dipole.resize(static_cast<std::size_t>(m_max) + 1);
    dip = -h0 * k * specfun::bessel_j(1, zy) * along;  // J_0' = -J_1
    out.dipole[0] = quarter_i * dip;
  }
  for (int m = 1; m <= m_max; ++m) {
    p *= hr[m] * jr[m];
    const double c = std::cos(m * theta), s = std::sin(m * theta);
    mono += 2.0 * p * c;
    out.monopole[m] = quarter_i * mono;
    if (dipole) {
      // H_m J_m' = p_m (J_{m-1}/J_m - J_{m+1}/J_m) / 2
      const cplx hjp = 0.5 * p * (1.0 / jr[m] - jr[m + 1]);
      dip += 2.0 * (k * hjp * along * c + static_cast<double>(m) * p * across * s);
      out.dipole[m] = quarter_i * dip;
    }
  }
  return out;
}

/// sum_{m > M} a^m / m, summed directly to avoid cancellation.
inline double log_tail(double a, int M) {
  if (a == 0.0) return 0.0;
  double pow_a = std::pow(a, M + 1);
  double sum = 0.0;
  for (long m = M + 1; m < 100000000; ++m) {
    const double term = pow_a / static_cast<double>(m);
    sum += term;
    if (term <= 1e-17 * sum) break;
    pow_a *= a;
  }
  return sum;
}

}  // namespace detail

/// G(x - y; k) = (i/4) H_0^(1)(k|x - y|).
inline cplx green(Vec2 x, Vec2 y, cplx k) {
  require_wavenumber(k);
  const double r = distance(x, y);
  if (r == 0.0) throw SingularityError("Green function evaluated at its source");
  return 0.25 * I * specfun::hankel1_01(k * r).first;
}

/// dG(x - y; k)/dnu(y) = -(i/4) k H_1^(1)(k|x - y|) ((y - x).nu)/|x - y|.
inline cplx green_normal_derivative(Vec2 x, Vec2 y, Vec2 nu, cplx k) {
  require_wavenumber(k);
  detail::require_unit(nu);
  const double r = distance(x, y);
  if (r == 0.0) throw SingularityError("Green function evaluated at its source");
  return -0.25 * I * k * specfun::hankel1_01(k * r).second * (dot(y - x, nu) / r);
}

/// Truncated Graf series for G(x - y; k) about x_j with |m| <= M.
inline cplx translated_green(Vec2 x, const SourceTranslation& st, cplx k, int M) {
  SourceTranslation mono{st.y, st.x_j, std::nullopt};
  return detail::partial_sums(x, mono, k, M).monopole.back();
}

/// Truncated Graf series for dG(x - y; k)/dnu(y) about x_j with |m| <= M.
inline cplx translated_dipole(Vec2 x, const SourceTranslation& st, cplx k, int M) {
  detail::require_nu(st);
  if (st.y == st.x_j) throw SingularityError("dipole translation with y = x_j: angular derivative undefined");
  return detail::partial_sums(x, st, k, M).dipole.back();
}

/// (R_{j,M}, R'_{j,M}) at x.
inline TruncationErrors truncation_errors(Vec2 x, const SourceTranslation& st, cplx k, int M) {
  const auto sums = detail::partial_sums(x, st, k, M);
  TruncationErrors out;
  out.r = std::abs(green(x, st.y, k) - sums.monopole.back());
  if (!sums.dipole.empty())
    out.r_prime = std::abs(green_normal_derivative(x, st.y, *st.nu, k) - sums.dipole.back());
  return out;
}

/// Truncation errors for every M in 0..m_max.
inline std::vector<TruncationErrors> truncation_error_curve(Vec2 x, const SourceTranslation& st, cplx k,
                                                            int m_max) {
  const auto sums = detail::partial_sums(x, st, k, m_max);
  const cplx g = green(x, st.y, k);
  std::optional<cplx> dg;
  if (!sums.dipole.empty()) dg = green_normal_derivative(x, st.y, *st.nu, k);
  std::vector<TruncationErrors> out(sums.monopole.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m].r = std::abs(g - sums.monopole[m]);
    if (dg) out[m].r_prime = std::abs(*dg - sums.dipole[m]);
  }
  return out;
}

/// a_x = max_{y in Y} |y - x_j| / |x - x_j|; x must lie outside D_j^max.
inline double geometric_ratio(Vec2 x, std::span<const Vec2> sources, Vec2 x_j) {
  double reach = 0.0;
  for (Vec2 y : sources) reach = std::max(reach, distance(y, x_j));
  const double rx = distance(x, x_j);
  if (rx <= reach) throw DivergenceRegionError("evaluation point lies in the disk D_j^max");
  return reach / rx;
}

/// -ln(1 - a) - sum_{m=1}^M a^m/m.
inline double monopole_bound_form(double a, int M) { return detail::log_tail(a, M); }

/// a^{M+1} / (1 - a).
inline double dipole_bound_form(double a, int M) { return std::pow(a, M + 1) / (1.0 - a); }

/// (c1 (-ln(1-a) - sum_{m<=M} a^m/m), c2 a^{M+1}/(1-a)).
inline std::pair<double, double> theoretical_bounds(const TruncationBoundModel& model, int M) {
  if (!(model.a >= 0.0 && model.a < 1.0)) throw InvalidModelError("bound model needs 0 <= a < 1");
  if (model.c1 < 0.0 || model.c2 < 0.0) throw InvalidModelError("bound constants must be nonnegative");
  return {model.c1 * monopole_bound_form(model.a, M), model.c2 * dipole_bound_form(model.a, M)};
}

/// Fits C1, C2 so that the bound forms match the actual errors at M = m_fit
/// for every (x, k) on the grid, and keeps the largest. The returned a is the
/// largest a_x on the grid.
inline TruncationBoundModel fit_bound_constant(std::span<const Vec2> x_grid, std::span<const cplx> k_grid,
                                               const SourceTranslation& st, int m_fit, unsigned workers = 1) {
  if (x_grid.empty() || k_grid.empty()) throw InvalidArgument("empty fitting grid");
  std::vector<double> a_x(x_grid.size());
  const Vec2 ys[1] = {st.y};
  for (std::size_t i = 0; i < x_grid.size(); ++i) a_x[i] = geometric_ratio(x_grid[i], ys, st.x_j);

  const std::size_t count = x_grid.size() * k_grid.size();
  std::vector<double> c1(count, 0.0), c2(count, 0.0);
  parallel_for(count, workers, [&](std::size_t idx) {
    const std::size_t i = idx / k_grid.size();
    const auto err = truncation_errors(x_grid[i], st, k_grid[idx % k_grid.size()], m_fit);
    const double a = a_x[i];
    if (a > 0.0) {
      c1[idx] = err.r / monopole_bound_form(a, m_fit);
      if (err.r_prime) c2[idx] = *err.r_prime / dipole_bound_form(a, m_fit);
    }
  });
  TruncationBoundModel model;
  model.m_fit = m_fit;
  model.a = *std::max_element(a_x.begin(), a_x.end());
  model.c1 = *std::max_element(c1.begin(), c1.end());
  model.c2 = *std::max_element(c2.begin(), c2.end());
  return model;
}

}  // namespace excloak::graf
