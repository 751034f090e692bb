#pragma once

// Time-domain thermal cloaking. The heat equation
//   d_t u = sigma Lap u + h / (rho c),  u(., 0) = 0,
// becomes Helmholtz with k = i sqrt(-i omega / sigma) under the
// Fourier-Laplace transform; fields are computed on the contour
// omega_q = q dw + i c and brought back by a DFT.

#include <excloak/cloak.hpp>
#include <excloak/scatter.hpp>

#include <fftw3.h>

#include <mutex>
#include <optional>
#include <tuple>

namespace excloak::heat {

struct HeatMedium {
  double sigma = 1.0;  // thermal diffusivity
  double rho_c = 1.0;  // volumetric heat capacity, scales sources only
};

inline void require_medium(const HeatMedium& m) {
  if (!(m.sigma > 0.0) || !std::isfinite(m.sigma)) throw InvalidArgument("diffusivity sigma must be positive");
  if (!(m.rho_c > 0.0) || !std::isfinite(m.rho_c)) throw InvalidArgument("heat capacity rho_c must be positive");
}

/// k = i sqrt(-i omega / sigma), principal root.
inline cplx heat_wavenumber(cplx omega, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("diffusivity sigma must be positive");
  if (!is_finite(omega)) throw InvalidArgument("frequency is not finite");
  if (omega == 0.0) throw InvalidArgument("zero frequency gives a zero wavenumber");
  return require_wavenumber(I * std::sqrt(-I * omega / sigma));
}

/// k^2 = -P(-i omega), P(z) = sum_n p[n] z^n. Of the roots +-i sqrt(P(-i omega))
/// the one with Im k > 0 is returned, or Re k > 0 when k is real.
inline cplx polynomial_wavenumber(std::span<const cplx> p, cplx omega) {
  std::size_t degree = p.size();
  while (degree > 0 && p[degree - 1] == 0.0) --degree;
  if (degree < 2) throw InvalidArgument("dispersion polynomial must be nonconstant");
  if (!is_finite(omega)) throw InvalidArgument("frequency is not finite");
  const cplx z = -I * omega;
  cplx value = 0.0;
  for (std::size_t n = degree; n-- > 0;) value = value * z + p[n];
  cplx k = I * std::sqrt(value);
  if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
  if (k == 0.0) throw BranchCutError("dispersion relation gives k = 0");
  return require_wavenumber(k);
}

// ---------------------------------------------------------------------------
// Contour and inversion

struct LaplaceContour {
  double t_final = 0.0;
  int n_steps = 0;    // N
  int n_samples = 0;  // 2N + 2
  double dt = 0.0;
  double big_t = 0.0;
  double dw = 0.0;
  double alpha = 0.0;
  double shift = 0.0;  // c

  cplx omega(int q) const { return {q * dw, shift}; }
  /// s_q = -i omega_q = c - i w_q
  cplx s(int q) const { return {shift, -q * dw}; }
  double time(int p) const { return p == n_steps ? t_final : p * dt; }
};

/// dt = T/N, period big_t = (2N+2) dt, dw = 2 pi/big_t, c = alpha - ln(1e-6)/big_t.
inline LaplaceContour build_contour(double t_final, int n_steps, double alpha = 0.0) {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidArgument("final time must be positive");
  if (n_steps < 2) throw InvalidArgument("need at least two time steps");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be nonnegative");
  LaplaceContour c;
  c.t_final = t_final;
  c.n_steps = n_steps;
  c.n_samples = 2 * n_steps + 2;
  c.dt = t_final / n_steps;
  c.big_t = c.n_samples * c.dt;
  c.dw = 2 * pi / c.big_t;
  c.alpha = alpha;
  c.shift = alpha - (c.dw / (2 * pi)) * std::log(1e-6);
  return c;
}

/// Reusable FFTW plan for one contour; invert() may be called concurrently.
class LaplaceInverter {
 public:
  explicit LaplaceInverter(const LaplaceContour& c) : c_(c) {
    std::vector<cplx> a(static_cast<std::size_t>(c.n_samples)), b(a.size());
    std::lock_guard lock(planner());
    plan_ = fftw_plan_dft_1d(c.n_samples, reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~LaplaceInverter() {
    std::lock_guard lock(planner());
    fftw_destroy_plan(plan_);
  }
  LaplaceInverter(const LaplaceInverter&) = delete;
  LaplaceInverter& operator=(const LaplaceInverter&) = delete;

  /// u(t_p) = (2 e^{c t_p}/big_t) Re[DFT_p(samples) - samples[0]/2], p = 0..N.
  void invert(std::span<const cplx> samples, std::span<double> out) const {
    if (samples.size() != static_cast<std::size_t>(c_.n_samples))
      throw InvalidArgument("inverse Laplace needs one sample per contour frequency");
    if (out.size() != static_cast<std::size_t>(c_.n_steps) + 1) throw InvalidArgument("output must hold N+1 values");
    std::vector<cplx> in(samples.begin(), samples.end()), dft(samples.size());
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(dft.data()));
    for (int p = 0; p <= c_.n_steps; ++p) {
      const double t = c_.time(p);
      out[static_cast<std::size_t>(p)] = 2.0 * std::exp(c_.shift * t) / c_.big_t * (dft[p] - 0.5 * samples[0]).real();
    }
  }

  std::vector<double> invert(std::span<const cplx> samples) const {
    std::vector<double> out(static_cast<std::size_t>(c_.n_steps) + 1);
    invert(samples, out);
    return out;
  }

  const LaplaceContour& contour() const { return c_; }

 private:
  static std::mutex& planner() {
    static std::mutex m;  // FFTW planning is not thread-safe
    return m;
  }
  LaplaceContour c_;
  fftw_plan plan_;
};

inline std::vector<double> inverse_laplace(std::span<const cplx> samples, const LaplaceContour& c) {
  return LaplaceInverter(c).invert(samples);
}

// ---------------------------------------------------------------------------
// Scenarios

/// nx x ny points, x and y including both ends; index = i + nx j.
struct SpatialGrid {
  double x_min = 0.0, x_max = 10.0, y_min = 0.0, y_max = 10.0;
  int nx = 100, ny = 100;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  Vec2 point(std::size_t idx) const {
    const int i = static_cast<int>(idx % static_cast<std::size_t>(nx));
    const int j = static_cast<int>(idx / static_cast<std::size_t>(nx));
    return {x_min + (x_max - x_min) * i / (nx - 1), y_min + (y_max - y_min) * j / (ny - 1)};
  }
};

inline void require_grid(const SpatialGrid& g) {
  if (g.nx < 2 || g.ny < 2) throw InvalidArgument("grid needs at least two points per direction");
  if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min)) throw InvalidArgument("grid bounds are empty");
}

struct TimeFieldGrid {
  SpatialGrid grid;
  std::vector<int> steps;
  std::vector<double> times;
  std::vector<double> values;  // values[point * steps.size() + s]; NaN at masked points
  std::vector<double> peak;    // max over all t_p of |u(x, t_p)|

  double value(std::size_t point, std::size_t s) const { return values[point * steps.size() + s]; }
};

struct Scenario {
  HeatMedium medium{1.5, 1.0};
  Vec2 source{8.0, 5.0};
  double amplitude = 1.0;
  Vec2 center{5.0, 5.0};
  double delta_c = 10.0 / 6.0;
  double delta_d = 0.0;  // 0 selects sqrt(2) delta_c
  int n_dev = 4;
  double phase = pi / 4;
  int n_int = 256;
  int m = 22;
  bool obstacle = true;
  Vec2 kite_center{5.0, 5.0};
  double kite_scale = 0.3;
  int n_nodes = 512;
  double t_final = 4.0;
  int n_steps = 256;
  double alpha = 0.0;
  SpatialGrid grid{};
  std::vector<int> output_steps;  // empty: all of 0..N
  double umax_window = 0.0;       // u_max uses t <= window; 0 selects T
};

struct ScenarioFields {
  bool cloak = false;
  TimeFieldGrid incident, cloak_field, scattered, total;
};

struct Simulation {
  LaplaceContour contour;
  cloak::Cloak cloak;
  cloak::DivergenceRegion region;
  std::vector<ScenarioFields> runs;  // one per toggle
  std::vector<char> masked;          // grid points on a device or the source
  std::vector<char> inside_obstacle; // scattered and total are NaN there
  double u_max = 0.0;                // 100 max over Omega x [0, window] |u_i|
  double min_rcond = std::numeric_limits<double>::infinity();  // smallest condition estimate of the obstacle solves
  bool max_principle = true;         // |Im k| > |Re k| at every contour frequency
};

namespace detail {

struct Prepared {
  Scenario s;
  LaplaceContour contour;
  cloak::Cloak cl;
  cloak::DivergenceRegion region;
  std::optional<scatter::ObstacleDiscretization> kite;
};

inline Prepared prepare(const Scenario& s, bool any_cloak) {
  require_medium(s.medium);
  require_grid(s.grid);
  if (!std::isfinite(s.amplitude)) throw InvalidArgument("source amplitude is not finite");
  if (s.m < 0) throw InvalidArgument("truncation order must be nonnegative");
  Prepared p{s, build_contour(s.t_final, s.n_steps, s.alpha), {}, {}, {}};
  const double dd = s.delta_d > 0.0 ? s.delta_d : cloak::default_device_radius(s.delta_c);
  p.cl = cloak::build_geometry(s.center, s.delta_c, dd, s.n_dev, s.phase, s.n_int);
  p.region = cloak::divergence_region(p.cl);
  if (!(distance(s.source, s.center) > s.delta_c)) throw InvalidArgument("source must lie outside the closed cloaked disk");
  if (any_cloak && p.region.contains(s.source)) throw DivergenceRegionError("source lies in the divergence region R");
  if (s.obstacle) {
    p.kite = scatter::kite_obstacle(s.kite_center, s.kite_scale, s.n_nodes);
    for (Vec2 y : p.kite->q) {
      if (!(distance(y, s.center) < s.delta_c)) throw InvalidArgument("obstacle intersects the cloak boundary");
      if (any_cloak && p.region.contains(y)) throw DivergenceRegionError("obstacle reaches into the divergence region R");
    }
  }
  for (int step : s.output_steps)
    if (step < 0 || step > s.n_steps) throw InvalidArgument("output step outside 0..N");
  return p;
}

/// Frequency-domain data of one contour point.
struct FrequencyData {
  cplx k;
  std::optional<cloak::MultipoleCoefficients> b;
  std::vector<scatter::DensitySolution> density;      // per toggle
  std::vector<scatter::OutgoingExpansion> expansion;  // per toggle
  double rcond = std::numeric_limits<double>::infinity();
  std::optional<specfun::HankelRay> ray;
};

/// Diagonal of the box holding the grid, source, devices and obstacle.
inline double scene_diameter(const Prepared& p) {
  Vec2 lo{p.s.grid.x_min, p.s.grid.y_min}, hi{p.s.grid.x_max, p.s.grid.y_max};
  auto add = [&](Vec2 v) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  };
  add(p.s.source);
  for (Vec2 d : p.cl.geometry.devices) add(d);
  if (p.kite)
    for (Vec2 y : p.kite->q) add(y);
  return 1.001 * distance(lo, hi);
}

}  // namespace detail

/// Runs the scenario once per toggle (cloak off/on). Incident and cloak
/// fields are shared; each frequency's obstacle system is factored once.
/// The scattered field uses its multipole expansion about the kite centre
/// at |x - centre| >= 1.5 radius and direct quadrature closer in.
inline Simulation simulate(const Scenario& scenario, std::span<const bool> toggles, unsigned workers = 1) {
  if (toggles.empty()) throw InvalidArgument("no toggles requested");
  const bool any_cloak = std::find(toggles.begin(), toggles.end(), true) != toggles.end();
  const detail::Prepared p = detail::prepare(scenario, any_cloak);
  const Scenario& s = p.s;
  const LaplaceContour& con = p.contour;
  const int nq = con.n_samples;
  const std::size_t nt = toggles.size();
  const cloak::PointSource incident{s.source, s.amplitude / (s.medium.sigma * s.medium.rho_c)};

  std::vector<detail::FrequencyData> freq(static_cast<std::size_t>(nq));
  const unsigned outer = workers == 0 ? default_workers() : workers;
  const double diameter = detail::scene_diameter(p);
  parallel_for(freq.size(), outer, [&](std::size_t q) {
    auto& f = freq[q];
    f.k = heat_wavenumber(con.omega(static_cast<int>(q)), s.medium.sigma);
    f.ray.emplace(f.k, diameter);
    if (any_cloak) f.b = cloak::multipole_coefficients(p.cl, incident, f.k, s.m);
    if (!p.kite) return;
    const auto& o = *p.kite;
    const double eta = scatter::choose_eta(f.k);
    const scatter::DensitySolver solver(o, f.k, eta);
    f.rcond = solver.rcond();
    std::vector<cplx> base(static_cast<std::size_t>(o.n_nodes)), cloaked;
    for (int i = 0; i < o.n_nodes; ++i) base[i] = incident.value(o.q[i], f.k);
    if (any_cloak) {
      cloaked = base;
      for (int i = 0; i < o.n_nodes; ++i) cloaked[i] += cloak::exterior_cloak_field(o.q[i], *f.b, p.cl.geometry);
    }
    for (bool on : toggles) {
      f.density.push_back(solver.solve(on ? cloaked : base));
      f.expansion.push_back(scatter::outgoing_expansion(o, f.density.back(), s.kite_center));
    }
  });

  Simulation sim;
  sim.contour = con;
  sim.cloak = p.cl;
  sim.region = p.region;
  for (const auto& f : freq) {
    sim.min_rcond = std::min(sim.min_rcond, f.rcond);
    if (!(std::abs(f.k.imag()) > std::abs(f.k.real()))) sim.max_principle = false;
  }

  std::vector<int> steps = s.output_steps;
  if (steps.empty())
    for (int q = 0; q <= s.n_steps; ++q) steps.push_back(q);
  const std::size_t npts = s.grid.size(), ns = steps.size();
  auto blank = [&] {
    TimeFieldGrid g;
    g.grid = s.grid;
    g.steps = steps;
    for (int q : steps) g.times.push_back(con.time(q));
    g.values.assign(npts * ns, 0.0);
    g.peak.assign(npts, 0.0);
    return g;
  };
  for (bool on : toggles) sim.runs.push_back({on, blank(), blank(), blank(), blank()});
  sim.masked.assign(npts, 0);
  sim.inside_obstacle.assign(npts, 0);
  std::vector<double> window_peak(npts, 0.0);
  const double window = scenario.umax_window > 0.0 ? std::min(scenario.umax_window, con.t_final) : con.t_final;

  const LaplaceInverter inverter(con);
  const double near = p.kite ? 1.5 * freq.front().expansion.front().radius : 0.0;
  parallel_for(npts, outer, [&](std::size_t idx) {
    const Vec2 x = s.grid.point(idx);
    bool masked = distance(x, s.source) < 1e-12;
    for (Vec2 d : p.cl.geometry.devices) masked = masked || distance(x, d) < 1e-12;
    if (masked) {
      sim.masked[idx] = 1;
      for (auto& run : sim.runs)
        for (TimeFieldGrid* g : {&run.incident, &run.cloak_field, &run.scattered, &run.total}) {
          for (std::size_t t = 0; t < ns; ++t) g->values[idx * ns + t] = std::nan("");
          g->peak[idx] = std::nan("");
        }
      window_peak[idx] = std::nan("");
      return;
    }
    const bool far = !p.kite || distance(x, s.kite_center) >= near;
    const bool interior = p.kite && scatter::inside_obstacle(*p.kite, x);
    if (interior) sim.inside_obstacle[idx] = 1;
    std::vector<cplx> ui(static_cast<std::size_t>(nq)), ue(ui.size()), h;
    std::vector<std::vector<cplx>> us(nt, std::vector<cplx>(ui.size()));
    const Vec2 dx = x - s.kite_center;
    const cplx e1 = std::polar(1.0, arg(dx));
    for (int q = 0; q < nq; ++q) {
      const auto& f = freq[static_cast<std::size_t>(q)];
      const auto& ray = *f.ray;
      ui[q] = incident.amplitude * 0.25 * I * ray(distance(x, s.source)).first;
      if (f.b) ue[q] = cloak::exterior_cloak_field(x, *f.b, p.cl.geometry, ray);
      if (!p.kite || interior) continue;
      if (far) {
        const double r = norm(dx);
        h.resize(static_cast<std::size_t>(std::max(f.expansion.front().m_max, 1)) + 1);
        std::tie(h[0], h[1]) = ray(r);
        specfun::hankel1_fill_from(f.k * r, h);
        for (std::size_t t = 0; t < nt; ++t) us[t][q] = f.expansion[t].sum(h, e1);
        continue;
      }
      const auto& o = *p.kite;
      const double eta = f.density.front().eta;
      for (int j = 0; j < o.n_nodes; ++j) {
        const Vec2 d = x - o.q[j];
        const double r = norm(d);
        if (r == 0.0) throw SingularityError("grid point on an obstacle node");
        const auto [h0, h1] = ray(r);
        const cplx w = o.step() * o.jacobian[j] * scatter::detail::combined_kernel(d, r, o.normals[j], f.k, eta, h0, h1);
        for (std::size_t t = 0; t < nt; ++t) us[t][q] += w * f.density[t].psi[j];
      }
    }
    const auto vi = inverter.invert(ui);
    const auto ve = any_cloak ? inverter.invert(ue) : std::vector<double>(vi.size(), 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto vs = p.kite ? inverter.invert(us[t]) : std::vector<double>(vi.size(), 0.0);
      auto& run = sim.runs[t];
      const double on = run.cloak ? 1.0 : 0.0;
      for (std::size_t q = 0; q < vi.size(); ++q) {
        const double tot = vi[q] + on * ve[q] + vs[q];
        run.incident.peak[idx] = std::max(run.incident.peak[idx], std::abs(vi[q]));
        run.cloak_field.peak[idx] = std::max(run.cloak_field.peak[idx], on * std::abs(ve[q]));
        run.scattered.peak[idx] = std::max(run.scattered.peak[idx], std::abs(vs[q]));
        run.total.peak[idx] = std::max(run.total.peak[idx], std::abs(tot));
      }
      for (std::size_t k = 0; k < ns; ++k) {
        const auto q = static_cast<std::size_t>(steps[k]);
        run.incident.values[idx * ns + k] = vi[q];
        run.cloak_field.values[idx * ns + k] = on * ve[q];
        run.scattered.values[idx * ns + k] = vs[q];
        run.total.values[idx * ns + k] = vi[q] + on * ve[q] + vs[q];
      }
      if (interior)
        for (TimeFieldGrid* g : {&run.scattered, &run.total}) {
          for (std::size_t k = 0; k < ns; ++k) g->values[idx * ns + k] = std::nan("");
          g->peak[idx] = std::nan("");
        }
    }
    for (int q = 0; q <= s.n_steps; ++q)
      if (con.time(q) <= window * (1 + 1e-12)) window_peak[idx] = std::max(window_peak[idx], std::abs(vi[q]));
  });

  double m = 0.0;
  for (std::size_t idx = 0; idx < npts; ++idx)
    if (!sim.masked[idx] && distance(s.grid.point(idx), s.center) <= s.delta_c) m = std::max(m, window_peak[idx]);
  sim.u_max = 100.0 * m;
  return sim;
}

/// One run with the cloak on or off.
inline ScenarioFields simulate_scenario(const Scenario& s, bool cloak_on, unsigned workers = 1) {
  const bool t[1] = {cloak_on};
  return std::move(simulate(s, t, workers).runs.front());
}

// ---------------------------------------------------------------------------
// Safe radii

struct SafeRadius {
  double radius = 0.0;
  bool saturated = false;  // every point of the device's cell exceeds u_max
};

/// Per device, the distance to the farthest grid point of its Voronoi cell
/// where max_t |u_e| > u_max (masked points count as exceeding): outside
/// that radius the cell stays below u_max.
inline std::vector<SafeRadius> safe_radius(const SpatialGrid& grid, std::span<const double> cloak_peak,
                                           std::span<const Vec2> devices, double u_max) {
  if (!(u_max > 0.0)) throw InvalidArgument("u_max must be positive");
  if (cloak_peak.size() != grid.size()) throw InvalidArgument("one peak value per grid point is needed");
  if (devices.empty()) throw InvalidArgument("no devices");
  std::vector<SafeRadius> out(devices.size());
  std::vector<char> any_safe(devices.size(), 0);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const Vec2 x = grid.point(idx);
    std::size_t owner = 0;
    for (std::size_t j = 1; j < devices.size(); ++j)
      if (distance(x, devices[j]) < distance(x, devices[owner])) owner = j;
    const double r = distance(x, devices[owner]);
    const double v = cloak_peak[idx];
    if (std::isnan(v) || v > u_max)
      out[owner].radius = std::max(out[owner].radius, r);
    else
      any_safe[owner] = 1;
  }
  for (std::size_t j = 0; j < devices.size(); ++j) out[j].saturated = !any_safe[j];
  return out;
}

}  // namespace excloak::heat
