#pragma once

// Integer-order Bessel functions of complex argument: J_n, J_n', Y_n and
// H_n^(1).
//
// Evaluation strategy:
//   * |z| <= 2: ascending power series (J) and the logarithmic series (Y),
//     truncated once the next term drops below 1e-16 of the partial sum.
//   * |z| > 2:  J_n by Miller's backward recurrence normalised with
//     exp(-+iz) = J_0 + 2 sum (-+i)^n J_n; H_0, H_1 from K_0, K_1 of
//     w = -iz via Temme's continued fraction (Steed's algorithm), then
//     forward recurrence in the order.
//   * Im z < 0 is reduced to the upper half plane with
//     H_n^(1)(z) = 2 J_n(z) - conj(H_n^(1)(conj z)).
// Negative orders use J_{-n} = (-1)^n J_n and H_{-n} = (-1)^n H_n.
//
// The accuracy contract covers |n| <= 64 and |z| <= 50; outside that range
// the routines still return their best effort (see within_accuracy_contract).

#include <excloak/core.hpp>

#include <algorithm>
#include <array>
#include <span>
#include <utility>
#include <vector>

namespace excloak::specfun {

inline constexpr int max_contract_order = 64;
inline constexpr double max_contract_argument = 50.0;

/// True when (n, z) is inside the region where the documented accuracy holds.
inline bool within_accuracy_contract(int n, cplx z) {
  return std::abs(n) <= max_contract_order && std::abs(z) <= max_contract_argument;
}

namespace detail {

inline constexpr int series_term_cap = 200;
inline constexpr double series_rel_stop = 1e-16;
inline constexpr double small_argument = 2.0;

inline void require_finite(cplx z) {
  if (!is_finite(z)) throw InvalidArgument("Bessel argument is not finite");
}

inline void require_off_cut(cplx z) {
  require_finite(z);
  if (on_branch_cut(z)) throw BranchCutError("argument lies on the branch cut (-inf, 0]");
}

inline double sign_of_order(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

/// (z/2)^n / n!
inline cplx leading_power(int n, cplx z) {
  cplx t = 1.0;
  const cplx half = 0.5 * z;
  for (int i = 1; i <= n; ++i) t *= half / static_cast<double>(i);
  return t;
}

/// J_n(z) by its power series, n >= 0.
inline cplx j_series(int n, cplx z) {
  const cplx half = 0.5 * z;
  const cplx q = -half * half;
  cplx term = leading_power(n, z);
  cplx sum = term;
  for (int k = 1; k <= series_term_cap; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(n + k));
    sum += term;
    if (term == 0.0 || std::abs(term) < series_rel_stop * std::abs(sum)) break;
  }
  return sum;
}

/// Digamma at a positive integer: psi(m+1) = -gamma + H_m.
inline double digamma_int(int m_plus_one) {
  double h = -euler_gamma;
  for (int p = 1; p < m_plus_one; ++p) h += 1.0 / p;
  return h;
}

/// Y_n(z) by the logarithmic series, n >= 0, z off the cut.
inline cplx y_series(int n, cplx z) {
  const cplx half = 0.5 * z;
  const cplx q = half * half;
  cplx finite_part = 0.0;
  if (n > 0) {
    // sum_{k=0}^{n-1} (n-k-1)!/k! (z^2/4)^k, scaled by (z/2)^{-n}
    double fact_hi = 1.0;  // (n-1)!
    for (int i = 2; i < n; ++i) fact_hi *= i;
    cplx qk = 1.0;
    double fact_lo = 1.0;  // k!
    double fact_top = fact_hi;
    for (int k = 0; k < n; ++k) {
      finite_part += (fact_top / fact_lo) * qk;
      qk *= q;
      fact_lo *= (k + 1);
      if (n - k - 1 > 0) fact_top /= (n - k - 1);
    }
    finite_part *= -std::pow(half, -n) / pi;
  }
  const cplx log_part = (2.0 / pi) * std::log(half) * j_series(n, z);

  cplx term = leading_power(n, z);  // (z/2)^n/(k!(n+k)!) (-q)^k at k=0
  double psi_a = -euler_gamma;      // psi(k+1)
  double psi_b = digamma_int(n + 1);  // psi(n+k+1)
  cplx sum = (psi_a + psi_b) * term;
  for (int k = 1; k <= series_term_cap; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(n + k));
    psi_a += 1.0 / k;
    psi_b += 1.0 / (n + k);
    const cplx add = (psi_a + psi_b) * term;
    sum += add;
    if (add == 0.0 || std::abs(add) < series_rel_stop * std::abs(sum)) break;
  }
  return finite_part + log_part - sum / pi;
}

/// Fills out[0..nmax] with J_n(z) by Miller's backward recurrence. z != 0.
inline void j_miller(cplx z, std::span<cplx> out) {
  const int nmax = static_cast<int>(out.size()) - 1;
  const double az = std::abs(z);
  const cplx two_over_z = 2.0 / z;

  // Olver's test: run the recurrence forward from nmax until the dominant
  // solution has grown enough that a start beyond it leaves a negligible
  // error at the orders we keep.
  int n = std::max(nmax, static_cast<int>(az)) + 1;
  {
    cplx p_prev = 0.0, p = 1.0;
    while (std::abs(p) < 1e20 && n < 100000) {
      const cplx p_next = static_cast<double>(n) * two_over_z * p - p_prev;
      p_prev = p;
      p = p_next;
      ++n;
    }
  }
  int start = n + 4;
  if (start % 2 != 0) ++start;

  // Normalisation exp(s z) = J_0 + 2 sum s^n J_n with s = -i (Im z >= 0) or
  // s = +i (Im z < 0); this choice keeps the sum free of cancellation.
  const bool upper = z.imag() >= 0.0;
  const cplx s_pow[4] = {1.0, upper ? -I : I, -1.0, upper ? I : -I};

  constexpr double big = 1e250;
  constexpr double shrink = 1e-250;
  cplx f_next = 0.0;
  cplx f = 1e-30;
  cplx norm_sum = 0.0;
  for (int m = start; m >= 1; --m) {
    if (m <= nmax) out[m] = f;
    norm_sum += 2.0 * s_pow[m % 4] * f;
    const cplx f_prev = static_cast<double>(m) * two_over_z * f - f_next;
    f_next = f;
    f = f_prev;
    if (std::abs(f) > big) {
      f *= shrink;
      f_next *= shrink;
      norm_sum *= shrink;
      for (int i = std::max(m, 1); i <= nmax; ++i) out[i] *= shrink;
    }
  }
  out[0] = f;
  norm_sum += f;
  const cplx target = upper ? std::exp(-I * z) : std::exp(I * z);
  const cplx scale = target / norm_sum;
  for (auto& v : out) v *= scale;
}

/// K_0(w), K_1(w) for Re w >= 0, |w| >= 2, by Temme's continued fraction.
inline std::pair<cplx, cplx> k01_continued_fraction(cplx w) {
  constexpr int max_iter = 100000;
  constexpr double eps = 1e-16;
  cplx b = 2.0 * (1.0 + w);
  cplx d = 1.0 / b;
  cplx h = d;
  cplx delh = d;
  cplx q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;  // 1/4 - nu^2 with nu = 0
  cplx q = a1, c = a1;
  double a = -a1;
  cplx s = 1.0 + q * delh;
  int i = 2;
  for (; i <= max_iter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / static_cast<double>(i);
    const cplx qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const cplx dels = q * delh;
    s += dels;
    if (std::abs(dels) < eps * std::abs(s)) break;
  }
  if (i > max_iter) throw NumericalError("K_0/K_1 continued fraction did not converge");
  h *= a1;
  const cplx k0 = std::sqrt(pi / (2.0 * w)) * std::exp(-w) / s;
  const cplx k1 = k0 * (w + 0.5 - h) / w;
  return {k0, k1};
}

inline constexpr double asymptotic_argument = 20.0;

/// e^{-iz} H_0^(1)(z), e^{-iz} H_1^(1)(z) from the Hankel expansion
/// sqrt(2/(pi z)) e^{-i(nu pi/2 + pi/4)} sum_k i^k a_k(nu) / z^k,
/// a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k). |z| >= 20, Im z >= 0.
inline std::pair<cplx, cplx> h01_asymptotic_scaled(cplx z) {
  const cplx iz = I / z;
  cplx t0 = 1.0, t1 = 1.0, s0 = 1.0, s1 = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    t0 *= iz * ((0.0 - odd * odd) / (8.0 * k));
    t1 *= iz * ((4.0 - odd * odd) / (8.0 * k));
    s0 += t0;
    s1 += t1;
    if (std::abs(t0) + std::abs(t1) < 1e-17) break;
  }
  const cplx pre = std::sqrt(2.0 / (pi * z)) * std::polar(1.0, -0.25 * pi);
  return {pre * s0, -I * pre * s1};
}

inline std::pair<cplx, cplx> h01_asymptotic(cplx z) {
  const auto [g0, g1] = h01_asymptotic_scaled(z);
  const cplx e = std::exp(I * z);
  return {g0 * e, g1 * e};
}

/// H_0^(1)(z), H_1^(1)(z) for Im z >= 0, z off the cut.
inline std::pair<cplx, cplx> h01_upper(cplx z) {
  if (std::abs(z) <= small_argument) {
    return {j_series(0, z) + I * y_series(0, z), j_series(1, z) + I * y_series(1, z)};
  }
  if (std::abs(z) >= asymptotic_argument) return h01_asymptotic(z);
  const auto [k0, k1] = k01_continued_fraction(-I * z);
  return {(-2.0 * I / pi) * k0, (-2.0 / pi) * k1};
}

inline void forward_recurrence(cplx z, std::span<cplx> h) {
  const cplx two_over_z = 2.0 / z;
  for (std::size_t n = 1; n + 1 < h.size(); ++n)
    h[n + 1] = static_cast<double>(n) * two_over_z * h[n] - h[n - 1];
}

}  // namespace detail

/// Fills out[n] = J_n(z) for n = 0..out.size()-1.
inline void bessel_j_fill(cplx z, std::span<cplx> out) {
  detail::require_finite(z);
  if (out.empty()) return;
  if (z == 0.0) {
    std::fill(out.begin(), out.end(), cplx{0.0});
    out[0] = 1.0;
    return;
  }
  if (std::abs(z) <= detail::small_argument) {
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = detail::j_series(static_cast<int>(n), z);
    return;
  }
  detail::j_miller(z, out);
}

/// J_0(z) .. J_nmax(z).
inline std::vector<cplx> bessel_j_array(int nmax, cplx z) {
  if (nmax < 0) throw InvalidArgument("negative maximal order");
  std::vector<cplx> out(static_cast<std::size_t>(nmax) + 1);
  bessel_j_fill(z, out);
  return out;
}

/// J_n(z) for any integer n and finite complex z.
inline cplx bessel_j(int n, cplx z) {
  detail::require_finite(z);
  const int m = std::abs(n);
  cplx value;
  const double az = std::abs(z);
  if (az <= detail::small_argument || az * az <= 2.0 * (m + 1)) {
    value = detail::j_series(m, z);
  } else {
    std::vector<cplx> buf(static_cast<std::size_t>(m) + 1);
    detail::j_miller(z, buf);
    value = buf[m];
  }
  return n < 0 ? detail::sign_of_order(m) * value : value;
}

/// J_n'(z) = (J_{n-1}(z) - J_{n+1}(z)) / 2, with J_0' = -J_1.
inline cplx bessel_j_prime(int n, cplx z) {
  if (n == 0) return -bessel_j(1, z);
  return 0.5 * (bessel_j(n - 1, z) - bessel_j(n + 1, z));
}

/// Fills out[n] = H_n^(1)(z) for n = 0..out.size()-1. z off the cut.
inline void hankel1_fill(cplx z, std::span<cplx> out) {
  detail::require_off_cut(z);
  if (out.empty()) return;
  if (z.imag() >= 0.0) {
    const auto [h0, h1] = detail::h01_upper(z);
    out[0] = h0;
    if (out.size() > 1) out[1] = h1;
    detail::forward_recurrence(z, out);
    return;
  }
  // Lower half plane: H(z) = 2 J(z) - conj(H(conj z)).
  hankel1_fill(std::conj(z), out);
  std::vector<cplx> j(out.size());
  bessel_j_fill(z, j);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = 2.0 * j[n] - std::conj(out[n]);
}

/// H_0^(1)(z) .. H_nmax^(1)(z).
inline std::vector<cplx> hankel1_array(int nmax, cplx z) {
  if (nmax < 0) throw InvalidArgument("negative maximal order");
  std::vector<cplx> out(static_cast<std::size_t>(nmax) + 1);
  hankel1_fill(z, out);
  return out;
}

/// H_0^(1)(z) and H_1^(1)(z) together (the pair every kernel needs).
inline std::pair<cplx, cplx> hankel1_01(cplx z) {
  cplx buf[2];
  hankel1_fill(z, buf);
  return {buf[0], buf[1]};
}

/// H_n^(1)(z) = J_n(z) + i Y_n(z), z off the cut.
inline cplx hankel1(int n, cplx z) {
  const int m = std::abs(n);
  const auto h = hankel1_array(std::max(m, 1), z);
  return n < 0 ? detail::sign_of_order(m) * h[m] : h[m];
}

/// out[m] = J_m(z)/J_{m-1}(z) for m = 1..nmax (out[0] = 0), by the backward
/// continued fraction r_m = 1/(2m/z - r_{m+1}). Finite where J_n over- or
/// underflows. z != 0.
inline std::vector<cplx> bessel_j_ratios(int nmax, cplx z) {
  detail::require_finite(z);
  if (z == 0.0) throw InvalidArgument("Bessel ratios need z != 0");
  std::vector<cplx> out(static_cast<std::size_t>(std::max(nmax, 0)) + 1, cplx{});
  const cplx two_over_z = 2.0 / z;
  // Start well past the turning point; the fraction converges geometrically there.
  int start = std::max(nmax, static_cast<int>(std::abs(z))) + 1;
  {
    cplx p_prev = 0.0, p = 1.0;
    while (std::abs(p) < 1e20 && start < 100000) {
      const cplx p_next = static_cast<double>(start) * two_over_z * p - p_prev;
      p_prev = p;
      p = p_next;
      ++start;
    }
  }
  cplx r = 0.0;
  for (int m = start + 4; m >= 1; --m) {
    r = 1.0 / (static_cast<double>(m) * two_over_z - r);
    if (m <= nmax) out[m] = r;
  }
  return out;
}

/// out[m] = H_m^(1)(z)/H_{m-1}^(1)(z) for m = 1..nmax (out[0] = 0), z off
/// the cut. Taken from H_n directly while finite, then from the forward
/// recurrence s_{m+1} = 2m/z - 1/s_m.
inline std::vector<cplx> hankel1_ratios(int nmax, cplx z) {
  std::vector<cplx> out(static_cast<std::size_t>(std::max(nmax, 0)) + 1, cplx{});
  if (nmax < 1) return out;
  const auto h = hankel1_array(nmax, z);
  const cplx two_over_z = 2.0 / z;
  for (int m = 1; m <= nmax; ++m) {
    if (is_finite(h[m]) && h[m - 1] != 0.0 && std::abs(h[m]) < 1e300) {
      out[m] = h[m] / h[m - 1];
    } else {
      out[m] = static_cast<double>(m - 1) * two_over_z - 1.0 / out[m - 1];
    }
  }
  return out;
}

/// Y_n(z) = -i (H_n^(1)(z) - J_n(z)), z off the cut.
inline cplx bessel_y(int n, cplx z) {
  const int m = std::abs(n);
  const cplx value = -I * (hankel1(m, z) - bessel_j(m, z));
  return n < 0 ? detail::sign_of_order(m) * value : value;
}

/// Fills out[n] = H_n^(1)(z) for n >= 2 by forward recurrence from
/// out[0] = H_0, out[1] = H_1 already in place.
inline void hankel1_fill_from(cplx z, std::span<cplx> out) { detail::forward_recurrence(z, out); }

/// H_0^(1)(k r), H_1^(1)(k r) for 0 < r <= r_max along one ray, Im k >= 0,
/// from piecewise Chebyshev interpolants. On [0, r_a], |k| r_a <= 2, the
/// entire functions J_0, J_1, S_0 = H_0 - (2i/pi) ln r J_0 and
/// S_1 = H_1 - (2i/pi) ln r J_1 + 2i/(pi k r) are interpolated; beyond,
/// e^{-ikr} H on dyadic pieces [2^p r_a, 2^{p+1} r_a].
class HankelRay {
 public:
  static constexpr int degree = 24;

  HankelRay(cplx k, double r_max) : k_(k) {
    detail::require_off_cut(k);
    if (k.imag() < 0.0) throw InvalidArgument("Hankel ray tables need Im k >= 0");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidArgument("ray length must be positive");
    r_a_ = std::min(r_max, 2.0 / std::abs(k));
    near_ = fit(0.0, r_a_, [&](double r) {
      cplx j[2];
      bessel_j_fill(k * r, j);
      const auto [h0, h1] = detail::h01_upper(k * r);
      const cplx lg = (2.0 * I / pi) * std::log(r);
      return std::array<cplx, 4>{j[0], j[1], h0 - lg * j[0], h1 - lg * j[1] + 2.0 * I / (pi * k * r)};
    });
    for (double a = r_a_; a < r_max; a *= 2.0) {
      far_.push_back(fit(a, 2.0 * a, [&](double r) {
        const cplx z = k * r;
        if (std::abs(z) >= detail::asymptotic_argument) {
          const auto [g0, g1] = detail::h01_asymptotic_scaled(z);
          return std::array<cplx, 4>{g0, g1, 0.0, 0.0};
        }
        const auto [h0, h1] = detail::h01_upper(z);
        const cplx e = std::exp(-I * z);
        return std::array<cplx, 4>{h0 * e, h1 * e, 0.0, 0.0};
      }));
    }
    r_max_ = r_max;
  }

  cplx k() const { return k_; }
  double r_max() const { return r_max_; }

  std::pair<cplx, cplx> operator()(double r) const {
    if (!(r > 0.0)) throw SingularityError("Hankel function evaluated at r = 0");
    if (r > r_max_ * (1.0 + 1e-12)) throw InvalidArgument("radius beyond the ray table");
    if (r <= r_a_) {
      const auto v = near_.eval(r, 4);
      const cplx lg = (2.0 * I / pi) * std::log(r);
      return {v[2] + lg * v[0], v[3] + lg * v[1] - 2.0 * I / (pi * k_ * r)};
    }
    int e = 0;
    std::frexp(r / r_a_, &e);  // r / r_a in [2^{e-1}, 2^e)
    const auto p = static_cast<std::size_t>(std::clamp(e - 1, 0, static_cast<int>(far_.size()) - 1));
    const auto v = far_[p].eval(r, 2);
    const cplx ph = std::exp(I * k_ * r);
    return {v[0] * ph, v[1] * ph};
  }

 private:
  struct Piece {
    double mid = 0.0, half = 1.0;
    std::array<std::array<cplx, degree>, 4> c{};

    std::array<cplx, 4> eval(double r, int count) const {
      const double x = (r - mid) / half;
      std::array<cplx, 4> out{};
      for (int f = 0; f < count; ++f) {
        cplx b1 = 0.0, b2 = 0.0;
        for (int m = degree - 1; m >= 1; --m) {
          const cplx b0 = 2.0 * x * b1 - b2 + c[f][m];
          b2 = b1;
          b1 = b0;
        }
        out[f] = x * b1 - b2 + c[f][0];
      }
      return out;
    }
  };

  template <class F>
  static Piece fit(double a, double b, F&& f) {
    Piece p;
    p.mid = 0.5 * (a + b);
    p.half = 0.5 * (b - a);
    std::array<std::array<cplx, 4>, degree> v;
    for (int j = 0; j < degree; ++j) v[j] = f(p.mid + p.half * std::cos(pi * (j + 0.5) / degree));
    for (int m = 0; m < degree; ++m)
      for (int fn = 0; fn < 4; ++fn) {
        cplx sum = 0.0;
        for (int j = 0; j < degree; ++j) sum += v[j][fn] * std::cos(pi * m * (j + 0.5) / degree);
        p.c[fn][m] = (m == 0 ? 1.0 : 2.0) / degree * sum;
      }
    return p;
  }

  cplx k_;
  double r_a_ = 0.0;
  double r_max_ = 0.0;
  Piece near_;
  std::vector<Piece> far_;
};

}  // namespace excloak::specfun
