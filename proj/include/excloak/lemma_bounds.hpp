#pragma once

// Explicit order-uniform remainder bounds for J_n, J_n' and H_n^(1), and a
// sampled check of those bounds over compact sets.
//
// With r = |z|/2:
//   |J_n  - r-leading|  <= C_K1 / (n+1)! r^{n+2}                 z in K1, n >= 0
//   |J_n' - leading|    <= Ct_K1 / n!   r^{n+1}                  z in K1, n >= 1
//   |H_n + i (n-1)!/pi (2/z)^n| <= Ct_K2 (n-2)! (2/|z|)^{n-2}    z in K2, n >= 2
// and the leading-order consequences
//   |J_n|  <= B_K1 / n! r^n,  |J_n'| <= Bt_K1 / (n-1)! r^{n-1},
//   |H_n|  <= Bt_K2 (n-1)! (2/|z|)^n.

#include <excloak/specfun.hpp>

#include <cmath>
#include <string>

namespace excloak::specfun {

/// Closed annular sector {r_min <= |z| <= r_max, |arg z| <= arg_max}.
/// arg_max = pi gives a full disk or annulus.
struct CompactSet {
  double r_min = 0.0;
  double r_max = 1.0;
  double arg_max = pi;
};

struct LemmaReport {
  // Constants of the lemma.
  double c_k1 = 0.0;
  double c_k1_tilde = 0.0;
  double c_k2 = 0.0;        // C_K2, the K2 analogue of C_K1
  double c_k2_tilde = 0.0;  // full constant of the H_n inequality
  // Constants of the leading-order consequences.
  double b_k1 = 0.0;
  double b_k1_tilde = 0.0;
  double b_k2_tilde = 0.0;
  // Worst observed lhs/rhs for each inequality (J, J', H, |J|, |J'|, |H|).
  double ratio_j = 0.0;
  double ratio_jp = 0.0;
  double ratio_h = 0.0;
  double ratio_j_abs = 0.0;
  double ratio_jp_abs = 0.0;
  double ratio_h_abs = 0.0;
  std::size_t samples = 0;

  double worst_ratio() const {
    return std::max({ratio_j, ratio_jp, ratio_h, ratio_j_abs, ratio_jp_abs, ratio_h_abs});
  }
  bool passed() const { return worst_ratio() <= 1.0; }
};

namespace lemma_detail {

/// f(r) = sum_{k>=1} (r/2)^{2k-2}/k! = 4(e^{r^2/4} - 1)/r^2, f(0) = 1.
inline double f(double r) {
  if (r == 0.0) return 1.0;
  const double s = 0.25 * r * r;
  return std::expm1(s) / s;
}

/// g(r) = sum_{n>=2} (r/2)^{2n-2}/(n-2)! = s e^s with s = (r/2)^2.
inline double g(double r) {
  const double s = 0.25 * r * r;
  return s * std::exp(s);
}

/// h(r) = sum_{k>=0} (r/2)^{2k}/(k!(k+1)!).
inline double h(double r) {
  const double s = 0.25 * r * r;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= s / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

/// 2 gamma + pi: bounds |psi(1)| + |psi(n+1) - H_n| + pi, the pi coming
/// from J_n = pi/pi J_n inside the (1/pi)-scaled bracket.
inline constexpr double log_series_offset = 2.0 * euler_gamma + pi;

/// sum_{k>=1} (-1)^k (z/2)^{n+2k} / (k!(n+k)!)
inline cplx j_tail(int n, cplx z) {
  const cplx half = 0.5 * z;
  const cplx q = -half * half;
  cplx term = detail::leading_power(n, z);
  cplx sum = 0.0;
  for (int k = 1; k <= 400; ++k) {
    term *= q / (static_cast<double>(k) * (n + k));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

/// sum_{k>=1} (-1)^k (n+2k) / (2 k!(n+k)!) (z/2)^{n+2k-1}, n >= 1
inline cplx jp_tail(int n, cplx z) {
  const cplx half = 0.5 * z;
  const cplx q = -half * half;
  cplx term = detail::leading_power(n - 1, z) / static_cast<double>(n);  // (z/2)^{n-1}/n!
  cplx sum = 0.0;
  for (int k = 1; k <= 400; ++k) {
    term *= q / (static_cast<double>(k) * (n + k));
    const cplx add = 0.5 * (n + 2.0 * k) * term;
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

inline void check_set(const CompactSet& k, const char* name) {
  if (!(k.r_min >= 0.0 && k.r_max >= k.r_min && k.arg_max >= 0.0 && k.arg_max <= pi) ||
      !std::isfinite(k.r_max))
    throw InvalidArgument(std::string("malformed compact set ") + name);
}

}  // namespace lemma_detail

/// Constants of the lemma for the compact sets K1, K2 (no sampling).
inline LemmaReport lemma_constants(const CompactSet& k1, const CompactSet& k2) {
  using namespace lemma_detail;
  check_set(k1, "K1");
  check_set(k2, "K2");
  if (k2.r_min <= 0.0 || k2.arg_max >= pi)
    throw BranchCutError("K2 meets the branch cut (-inf, 0]");

  LemmaReport rep;
  rep.c_k1 = f(k1.r_max);
  rep.c_k1_tilde = rep.c_k1;  // (n+2k)/(n+k)! <= 2/n! for k >= 1
  rep.c_k2 = f(k2.r_max);

  // |ln(z/2)| is largest at the extreme argument for every modulus.
  double worst = 0.0;
  constexpr int radial = 4096;
  for (int i = 0; i <= radial; ++i) {
    const double r = k2.r_min + (k2.r_max - k2.r_min) * i / radial;
    const double lg = std::hypot(std::log(0.5 * r), k2.arg_max);
    worst = std::max(worst, g(r) * (2.0 * lg + log_series_offset + 4.0) * h(r));
  }
  rep.c_k2_tilde = rep.c_k2 / pi + worst / pi;

  const double s1 = 0.25 * k1.r_max * k1.r_max;
  const double s2 = 0.25 * k2.r_max * k2.r_max;
  rep.b_k1 = 1.0 + rep.c_k1 * s1;
  rep.b_k1_tilde = 0.5 + rep.c_k1_tilde * s1;
  rep.b_k2_tilde = 1.0 / pi + rep.c_k2_tilde * s2;
  return rep;
}

/// Computes the constants and checks all six inequalities on a grid x grid
/// polar sample of K1 and of K2 for 2 <= n <= n_max.
inline LemmaReport verify_lemma_bounds(int n_max, const CompactSet& k1, const CompactSet& k2,
                                       int grid = 32) {
  using namespace lemma_detail;
  if (n_max < 2) throw InvalidArgument("n_max must be at least 2");
  if (grid < 2) throw InvalidArgument("sampling grid must have at least 2 points per axis");
  LemmaReport rep = lemma_constants(k1, k2);

  auto sample = [grid](const CompactSet& k, int i, int j) {
    const double r = k.r_min + (k.r_max - k.r_min) * i / (grid - 1);
    const double t = -k.arg_max + 2.0 * k.arg_max * j / (grid - 1);
    return std::polar(r, t);
  };

  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const cplx z1 = sample(k1, i, j);
      const cplx z2 = sample(k2, i, j);
      const double r1 = 0.5 * std::abs(z1);
      const double r2 = 0.5 * std::abs(z2);
      ++rep.samples;
      const bool k1_origin = (r1 == 0.0);
      std::vector<cplx> jv, hv;
      if (!k1_origin) jv = bessel_j_array(n_max + 1, z1);
      hv = hankel1_array(n_max, z2);
      for (int n = 2; n <= n_max; ++n) {
        if (!k1_origin) {
          // log-domain right-hand sides keep large orders finite
          const double lead_j = std::exp(n * std::log(r1) - std::lgamma(n + 1.0));
          const double rhs_j = rep.c_k1 * std::exp((n + 2) * std::log(r1) - std::lgamma(n + 2.0));
          const cplx rem_j = r1 <= 1.0 ? j_tail(n, z1) : jv[n] - detail::leading_power(n, z1);
          rep.ratio_j = std::max(rep.ratio_j, std::abs(rem_j) / rhs_j);
          rep.ratio_j_abs = std::max(rep.ratio_j_abs, std::abs(jv[n]) / (rep.b_k1 * lead_j));

          const cplx jp = 0.5 * (jv[n - 1] - jv[n + 1]);
          const cplx lead_jp = 0.5 * detail::leading_power(n - 1, z1);
          const double rhs_jp =
              rep.c_k1_tilde * std::exp((n + 1) * std::log(r1) - std::lgamma(n + 1.0));
          const cplx rem_jp = r1 <= 1.0 ? jp_tail(n, z1) : jp - lead_jp;
          rep.ratio_jp = std::max(rep.ratio_jp, std::abs(rem_jp) / rhs_jp);
          const double abs_jp = rep.b_k1_tilde * std::exp((n - 1) * std::log(r1) - std::lgamma(n));
          rep.ratio_jp_abs = std::max(rep.ratio_jp_abs, std::abs(jp) / abs_jp);
        }
        const double log_inv = std::log(1.0 / r2);  // ln(2/|z|)
        const cplx lead_h = -I * std::exp(std::lgamma(n)) / pi * std::pow(2.0 / z2, n);
        const double rhs_h = rep.c_k2_tilde * std::exp(std::lgamma(n - 1.0) + (n - 2) * log_inv);
        rep.ratio_h = std::max(rep.ratio_h, std::abs(hv[n] - lead_h) / rhs_h);
        const double abs_h = rep.b_k2_tilde * std::exp(std::lgamma(n) + n * log_inv);
        rep.ratio_h_abs = std::max(rep.ratio_h_abs, std::abs(hv[n]) / abs_h);
      }
    }
  }
  return rep;
}

}  // namespace excloak::specfun
