#pragma once

// Kapur-Rokhlin corrected trapezoid rule for 2pi-periodic integrands with a
// logarithmic singularity at a node: the singular node is dropped and the
// nearest six nodes on each side get weights h (1 + gamma_l).

#include <array>
#include <cstdlib>

namespace excloak::kapur_rokhlin {

/// 6th-order end corrections for log |t| singularities.
inline constexpr std::array<double, 6> gamma6 = {
    4.967362978287758, -16.20501504859126, 25.85153761832639,
    -22.22599466791883, 9.930104998037539, -1.817995878141594};

inline constexpr int order = 6;

/// Periodic index distance on an n-point grid.
inline int periodic_distance(int i, int j, int n) {
  const int d = std::abs(i - j) % n;
  return std::min(d, n - d);
}

/// Multiplier of h for the node at periodic distance d from the singular
/// node: 0 on the diagonal, 1 + gamma_d for 1 <= d <= 6, 1 beyond.
inline double weight_factor(int d) {
  if (d == 0) return 0.0;
  if (d <= static_cast<int>(gamma6.size())) return 1.0 + gamma6[static_cast<std::size_t>(d - 1)];
  return 1.0;
}

/// Corrected rule for int_0^{2pi} f(t) dt with f log-singular at t_s = s h.
template <class F>
auto integrate(F&& f, int n, int s) {
  const double h = 2.0 * 3.141592653589793238462643383279502884 / n;
  decltype(f(0.0)) sum{};
  for (int j = 0; j < n; ++j) {
    const double w = weight_factor(periodic_distance(j, s, n));
    if (w != 0.0) sum += w * f(h * j);
  }
  return h * sum;
}

}  // namespace excloak::kapur_rokhlin
