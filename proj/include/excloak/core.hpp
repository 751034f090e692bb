#pragma once

// Shared vocabulary for the excloak library: planar points, complex scalars,
// the error hierarchy and a small deterministic parallel-for.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace excloak {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double euler_gamma = std::numbers::egamma;
inline constexpr cplx I{0.0, 1.0};

/// A point (or vector) in the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// Counter-clockwise rotation by a quarter turn: (u1,u2) -> (-u2,u1).
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
/// Counter-clockwise angle from (1,0), in (-pi, pi].
inline double arg(Vec2 a) { return std::atan2(a.y, a.x); }
inline Vec2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

// Error hierarchy. DomainError covers violated preconditions of the
// mathematics (branch cut, singular evaluation point, divergence region,
// invalid model); NumericalError covers failures of a numerical method.

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidArgument : public DomainError {
 public:
  using DomainError::DomainError;
};

class BranchCutError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DivergenceRegionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class InvalidModelError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedRegimeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// True when z lies on (-inf, 0], the cut of log, Y_n and H_n^(1).
inline bool on_branch_cut(cplx z) { return z.imag() == 0.0 && z.real() <= 0.0; }

/// A value paired with an accuracy flag, for evaluations that degrade near
/// boundaries (quadrature of nearly singular integrands).
struct FieldSample {
  cplx value{};
  bool accurate = true;
};

/// Number of workers to use when the caller passes 0.
inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(i) for i in [0, count) over `workers` threads using a static
/// block partition. Every index is visited exactly once, so results written
/// to per-index slots do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace excloak
