#pragma once

// Complex wavenumbers k off (-inf, 0] and their regime classification.

#include <excloak/core.hpp>

#include <vector>

namespace excloak {

/// Throws BranchCutError unless k is finite and off (-inf, 0].
inline cplx require_wavenumber(cplx k) {
  if (!is_finite(k)) throw InvalidArgument("wavenumber is not finite");
  if (on_branch_cut(k)) throw BranchCutError("wavenumber lies on (-inf, 0]");
  return k;
}

struct ComplexWavenumber {
  cplx k;

  explicit ComplexWavenumber(cplx value) : k(require_wavenumber(value)) {}

  bool real() const { return k.imag() == 0.0; }
  bool lossy() const { return k.imag() > 0.0; }
  bool gain() const { return k.imag() < 0.0; }
  /// |Im k| > |Re k|, i.e. Re k^2 < 0: the strong maximum principle holds.
  bool max_principle() const { return std::abs(k.imag()) > std::abs(k.real()); }
};

/// The four wavenumber segments of the truncation experiments, f in {1,2,3,4},
/// at parameter theta in [0.5, 20]: real, imaginary, dissipative, amplifying.
inline cplx family_wavenumber(int f, double theta) {
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), s199 = std::sqrt(199.0);
  switch (f) {
    case 1: return theta;
    case 2: return cplx(0.0, theta);
    case 3: return cplx(1.0, s2) * theta / s3;
    case 4: return cplx(99.0, -s199 * theta) / 100.0;
    default: throw InvalidArgument("wavenumber family must be 1, 2, 3 or 4");
  }
}

/// count equispaced parameters on [theta_min, theta_max] of family f.
inline std::vector<cplx> family_samples(int f, int count = 8, double theta_min = 0.5, double theta_max = 20.0) {
  if (count < 1) throw InvalidArgument("at least one sample is needed");
  if (!(theta_min > 0.0 && theta_max >= theta_min)) throw InvalidArgument("invalid parameter range");
  std::vector<cplx> out;
  for (int i = 0; i < count; ++i)
    out.push_back(family_wavenumber(f, count == 1 ? theta_min : theta_min + (theta_max - theta_min) * i / (count - 1)));
  return out;
}

}  // namespace excloak
