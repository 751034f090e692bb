// excloak: configuration-driven runner for the cloaking experiments.
//
//   excloak <command> --config file.json [--out dir] [--workers n] [--seed n]
//
// Exit codes: 0 success, 2 bad command line or configuration, 3 domain
// violation, 4 numerical failure, 1 anything else.

#include <excloak/cloak.hpp>
#include <excloak/graf.hpp>
#include <excloak/heat.hpp>
#include <excloak/lemma_bounds.hpp>
#include <excloak/scatter.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <fftw3.h>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#ifndef EXCLOAK_VERSION
#define EXCLOAK_VERSION "unknown"
#endif

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace excloak;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Output

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  explicit Csv(std::string_view header) : text_(header) { text_ += '\n'; }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) text_ += ',';
      text_ += num(v);
      first = false;
    }
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Context {
  fs::path out;
  unsigned workers = 1;
  json results = json::object();
  std::vector<std::string> outputs;
  json timings = json::object();

  void write(const std::string& name, const std::string& text) {
    std::ofstream f(out / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    outputs.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + '\n'); }

  template <class F>
  auto timed(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto done = [&] { timings[phase] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      done();
    } else {
      auto r = f();
      done();
      return r;
    }
  }
};

using Job = std::function<void(Context&)>;

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }
json to_json(Vec2 v) { return json::array({v.x, v.y}); }
json to_json(double v) { return v; }
json to_json(int v) { return v; }
json to_json(bool v) { return v; }
json to_json(const std::string& v) { return v; }
template <class T>
json to_json(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_json(x));
  return a;
}

// ---------------------------------------------------------------------------
// Configuration

/// One JSON object of the configuration. Every key read is echoed with its
/// resolved value; finish() rejects keys nobody read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? std::string("configuration") : path_) + " must be an object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    T v = j_.contains(key) ? convert<T>(j_.at(key), where(key)) : fallback;
    echo_[key] = to_json(v);
    return v;
  }

  template <class T>
  T need(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing key " + where(key));
    return get<T>(key, T{});
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  /// Reads the sub-object `key` (absent = empty) through f.
  template <class F>
  void with(const std::string& key, F&& f) {
    used_.insert(key);
    static const json empty = json::object();
    Section child(j_.contains(key) ? j_.at(key) : empty, where(key));
    f(child);
    child.finish();
    echo_[key] = child.echo_;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown key " + where(key));
  }

  const json& echo() const { return echo_; }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  static T convert(const json& v, const std::string& at) {
    auto fail = [&](const char* what) { return ConfigError(at + " must be " + what); };
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw fail("a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw fail("an integer");
      const auto i = v.get<long long>();
      if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) throw fail("a 32-bit integer");
      return static_cast<int>(i);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw fail("true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw fail("a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, cplx>) {
      if (v.is_number()) return v.get<double>();
      if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
      throw fail("a number or [re, im]");
    } else if constexpr (std::is_same_v<T, Vec2>) {
      if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return Vec2{v[0].get<double>(), v[1].get<double>()};
      throw fail("a point [x, y]");
    } else {
      if (!v.is_array()) throw fail("an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], at + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  json echo_ = json::object();
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open configuration file " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration is not valid JSON: " + std::string(e.what()));
  }
}

heat::SpatialGrid read_grid(Section& c, heat::SpatialGrid d) {
  heat::SpatialGrid g = d;
  c.with("grid", [&](Section& s) {
    g.x_min = s.get("x_min", d.x_min);
    g.x_max = s.get("x_max", d.x_max);
    g.y_min = s.get("y_min", d.y_min);
    g.y_max = s.get("y_max", d.y_max);
    g.nx = s.get("nx", d.nx);
    g.ny = s.get("ny", d.ny);
  });
  heat::require_grid(g);
  return g;
}

struct CloakConfig {
  Vec2 center{5.0, 5.0};
  double delta_c = 10.0 / 6.0;
  double delta_d = 0.0;
  int n_dev = 4;
  double phase = pi / 4;
  int n_int = 256;
};

CloakConfig read_cloak(Section& c, CloakConfig d) {
  d.center = c.get("center", d.center);
  d.delta_c = c.get("delta_c", d.delta_c);
  d.delta_d = c.get("delta_d", d.delta_d);
  d.n_dev = c.get("n_dev", d.n_dev);
  d.phase = c.get("phase", d.phase);
  d.n_int = c.get("n_int", d.n_int);
  return d;
}

cloak::Cloak build(const CloakConfig& c) {
  const double dd = c.delta_d > 0.0 ? c.delta_d : cloak::default_device_radius(c.delta_c);
  return cloak::build_geometry(c.center, c.delta_c, dd, c.n_dev, c.phase, c.n_int);
}

json geometry_json(const cloak::Cloak& cl, const cloak::DivergenceRegion& reg) {
  const auto& g = cl.geometry;
  return {{"center", to_json(g.center)},
          {"delta_c", g.delta_c},
          {"delta_d", g.delta_d},
          {"n_int", g.n_int},
          {"devices", to_json(g.devices)},
          {"region_radii", reg.radii},
          {"r_ci", reg.r_ci},
          {"r_co", reg.r_co}};
}

/// f(x) at every grid point; singular points become NaN.
template <class F>
std::vector<cplx> evaluate_grid(const heat::SpatialGrid& g, unsigned workers, F&& f) {
  std::vector<cplx> v(g.size());
  parallel_for(g.size(), workers, [&](std::size_t i) {
    try {
      v[i] = f(g.point(i));
    } catch (const SingularityError&) {
      v[i] = cplx(std::nan(""), std::nan(""));
    }
  });
  return v;
}

std::string grid_csv(const heat::SpatialGrid& g, const std::vector<cplx>& v) {
  Csv csv("x,y,re,im");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 x = g.point(i);
    csv.row({x.x, x.y, v[i].real(), v[i].imag()});
  }
  return csv.text();
}

std::string tag(std::string_view prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return std::string(prefix) + buf;
}

// ---------------------------------------------------------------------------
// Commands

Job selftest(Section& c) {
  const int n_max = c.get("n_max", 30);
  const int grid = c.get("grid", 32);
  auto set = [&](const char* key, specfun::CompactSet d) {
    c.with(key, [&](Section& s) {
      d.r_min = s.get("r_min", d.r_min);
      d.r_max = s.get("r_max", d.r_max);
      d.arg_max = s.get("arg_max", d.arg_max);
    });
    return d;
  };
  const auto k1 = set("k1", {0.0, 10.0, pi});
  const auto k2 = set("k2", {0.5, 20.0, pi - pi / 8});
  return [=](Context& ctx) {
  const auto rep = ctx.timed("lemma", [&] { return specfun::verify_lemma_bounds(n_max, k1, k2, grid); });
  json r = {{"c_k1", rep.c_k1},         {"c_k1_tilde", rep.c_k1_tilde}, {"c_k2", rep.c_k2},
            {"c_k2_tilde", rep.c_k2_tilde}, {"b_k1", rep.b_k1},     {"b_k1_tilde", rep.b_k1_tilde},
            {"b_k2_tilde", rep.b_k2_tilde}, {"ratio_j", rep.ratio_j}, {"ratio_jp", rep.ratio_jp},
            {"ratio_h", rep.ratio_h},   {"ratio_j_abs", rep.ratio_j_abs}, {"ratio_jp_abs", rep.ratio_jp_abs},
            {"ratio_h_abs", rep.ratio_h_abs}, {"worst_ratio", rep.worst_ratio()}, {"samples", rep.samples},
            {"passed", rep.passed()}};
  ctx.write_json("selftest.json", r);
  ctx.results = r;
  if (!rep.passed()) throw NumericalError("lemma inequalities violated, worst ratio " + num(rep.worst_ratio()));
  };
}

Job graf_error(Section& c) {
  const Vec2 x = c.get("eval_point", Vec2{0.0, 0.43});
  graf::SourceTranslation st;
  st.y = c.get("source", Vec2{0.0, 0.0});
  st.x_j = c.get("center", Vec2{0.0, 0.2});
  st.nu = c.get("normal", Vec2{0.0, 1.0});
  const int m_fit = c.get("m_fit", 4);
  const int m_max = c.get("m_max", 20);
  const auto families = c.get("families", std::vector<int>{1, 2, 3, 4});
  const int samples = c.get("samples", 8);
  const double theta_min = c.get("theta_min", 0.5);
  const double theta_max = c.get("theta_max", 20.0);
  if (m_fit < 0 || m_max < m_fit) throw InvalidArgument("orders must satisfy 0 <= m_fit <= m_max");
  for (int f : families) family_samples(f, samples, theta_min, theta_max);
  return [=](Context& ctx) {

  json per = json::array();
  for (int f : families) {
    const auto ks = family_samples(f, samples, theta_min, theta_max);
    const Vec2 xs[1] = {x};
    const auto model = graf::fit_bound_constant(xs, ks, st, m_fit, ctx.workers);
    std::vector<double> mono(m_max + 1, 0.0), dip(m_max + 1, 0.0);
    for (cplx k : ks) {
      const auto curve = graf::truncation_error_curve(x, st, k, m_max);
      for (int m = 0; m <= m_max; ++m) {
        mono[m] = std::max(mono[m], curve[m].r);
        if (curve[m].r_prime) dip[m] = std::max(dip[m], *curve[m].r_prime);
      }
    }
    Csv csv("M,actual_monopole,bound_monopole,actual_dipole,bound_dipole");
    bool dominated = true;
    for (int m = 0; m <= m_max; ++m) {
      const auto [b1, b2] = graf::theoretical_bounds(model, m);
      csv.row({double(m), mono[m], b1, dip[m], b2});
      if (m > m_fit) dominated = dominated && b1 >= mono[m] && b2 >= dip[m];
    }
    const std::string name = "graf_K" + std::to_string(f) + ".csv";
    ctx.write(name, csv.text());
    per.push_back({{"family", f},
                   {"file", name},
                   {"a", model.a},
                   {"c1", model.c1},
                   {"c2", model.c2},
                   {"bounds_dominate", dominated},
                   {"monopole_decay", mono[m_fit] > 0 ? mono[m_max] / mono[m_fit] : 0.0},
                   {"dipole_decay", dip[m_fit] > 0 ? dip[m_max] / dip[m_fit] : 0.0}});
  }
  ctx.results = {{"families", per}};
  };
}

Job cloak_field(Section& c) {
  const auto cc = read_cloak(c, {});
  const int M = c.get("m", 22);
  const cplx k = require_wavenumber(c.need<cplx>("k"));
  const cloak::PointSource src{c.get("source", Vec2{2.0, 5.0}), c.get("amplitude", cplx(1.0))};
  const auto grid = read_grid(c, {0.0, 10.0, 0.0, 10.0, 200, 200});
  if (M < 0) throw InvalidArgument("truncation order must be nonnegative");
  const auto cl = build(cc);
  if (!(distance(src.position, cc.center) > cc.delta_c)) throw InvalidArgument("source must lie outside the closed cloaked disk");
  const auto reg = cloak::divergence_region(cl);
  return [=](Context& ctx) {
  const auto coeffs = ctx.timed("coefficients", [&] { return cloak::multipole_coefficients(cl, src, k, M); });

  const auto inc = ctx.timed("incident", [&] { return evaluate_grid(grid, ctx.workers, [&](Vec2 x) { return src.value(x, k); }); });
  const auto interior = ctx.timed("interior_cloak", [&] {
    return evaluate_grid(grid, ctx.workers, [&](Vec2 x) { return cloak::interior_cloak_field(x, cl, src, k).value; });
  });
  const auto exterior = ctx.timed("exterior_cloak", [&] {
    return evaluate_grid(grid, ctx.workers, [&](Vec2 x) { return cloak::exterior_cloak_field(x, coeffs, cl.geometry); });
  });
  ctx.write("incident.csv", grid_csv(grid, inc));
  ctx.write("interior_cloak.csv", grid_csv(grid, interior));
  ctx.write("exterior_cloak.csv", grid_csv(grid, exterior));
  json side = {{"geometry", geometry_json(cl, reg)}, {"k", to_json(k)}, {"M", M}, {"n_int", cc.n_int}};
  ctx.write_json("cloak-field.json", side);
  ctx.results = side;
  };
}

Job bounds(Section& c) {
  const auto cc = read_cloak(c, {{5.0, 5.0}, 10.0 / 6.0, 0.0, 4, pi / 4, 128});
  const cloak::PointSource src{c.get("source", Vec2{8.0, 5.0}), c.get("amplitude", cplx(1.0))};
  std::vector<cplx> ks;
  if (c.has("wavenumbers")) {
    ks = c.get("wavenumbers", std::vector<cplx>{});
    for (cplx k : ks) require_wavenumber(k);
  } else {
    ks = family_samples(c.get("family", 3), c.get("samples", 8), c.get("theta_min", 0.5), c.get("theta_max", 20.0));
  }
  const int m_fit = c.get("m_fit", 3);
  const int M = c.get("m", 22);
  const int m_ref = c.get("m_ref", 60);
  const auto orders = c.get("orders", std::vector<int>{6, 10, 14, 18, 22});
  for (int m : orders)
    if (m < 0 || m > m_ref) throw InvalidArgument("reported orders must lie in [0, m_ref]");

  const auto cl = build(cc);
  const auto reg = cloak::divergence_region(cl);
  const auto pts = cloak::audit_points(cl, reg);
  // maximum principle on the disk inside the inscribed circle
  std::vector<cplx> mp_ks{cplx(0.0, 0.5), cplx(10.0, 0.5)};
  Vec2 mp_source{2.0, 5.0};
  int rings = 41, angles = 128, mp_m = M;
  c.with("max_principle", [&](Section& s) {
    mp_ks = s.get("wavenumbers", mp_ks);
    mp_source = s.get("source", mp_source);
    rings = s.get("rings", rings);
    angles = s.get("angles", angles);
    mp_m = s.get("m", mp_m);
  });
  if (rings < 2 || angles < 1) throw InvalidArgument("disk grid needs at least 2 rings and 1 angle");
  if (mp_m < 0 || mp_m > m_ref) throw InvalidArgument("max principle order must lie in [0, m_ref]");
  const cloak::DiskGrid disk{cc.center, reg.r_ci - 0.1 * cc.delta_c, rings, angles};
  return [=](Context& ctx) {
  const auto b = ctx.timed("bound", [&] { return cloak::cloak_error_bound(cl, src, pts, ks, m_fit, M, m_ref, ctx.workers); });
  Csv table("re_k,im_k,c,predicted,actual");
  Csv by_order("re_k,im_k,M,actual");
  bool dominated = true, monotone = true;
  for (const auto& e : b.per_k) {
    table.row({e.k.real(), e.k.imag(), e.c, e.predicted, e.actual});
    for (std::size_t i = 0; i < orders.size(); ++i) {
      by_order.row({e.k.real(), e.k.imag(), double(orders[i]), e.actual_by_order[orders[i]]});
      if (i > 0 && orders[i] > orders[i - 1])
        monotone = monotone && e.actual_by_order[orders[i]] <= e.actual_by_order[orders[i - 1]];
    }
    dominated = dominated && e.predicted >= e.actual;
  }
  ctx.write("bounds.csv", table.text());
  ctx.write("bounds_by_order.csv", by_order.text());

  const auto disk_pts = disk.points();
  Csv mp("re_k,im_k,max_error,x,y,boundary_attained,applicable");
  json mp_json = json::array();
  ctx.timed("max_principle", [&] {
    for (cplx k : mp_ks) {
      require_wavenumber(k);
      const auto coeffs = cloak::multipole_coefficients(cl, cloak::PointSource{mp_source}, k, m_ref);
      std::vector<cplx> err(disk_pts.size());
      parallel_for(disk_pts.size(), ctx.workers, [&](std::size_t i) {
        const auto s = cloak::exterior_partial_sums(disk_pts[i], coeffs, cl.geometry);
        err[i] = s[mp_m] - s[m_ref];
      });
      const auto rep = cloak::max_principle_audit(disk, err, k);
      mp.row({k.real(), k.imag(), rep.max_value, rep.location.x, rep.location.y, double(rep.boundary_attained),
              double(rep.applicable)});
      mp_json.push_back({{"k", to_json(k)},
                         {"max_error", rep.max_value},
                         {"location", to_json(rep.location)},
                         {"boundary_attained", rep.boundary_attained},
                         {"applicable", rep.applicable}});
    }
  });
  ctx.write("max_principle.csv", mp.text());
  ctx.results = {{"geometry", geometry_json(cl, reg)},
                 {"audit_points", to_json(pts)},
                 {"a", b.a},
                 {"bounds_dominate", dominated},
                 {"monotone", monotone},
                 {"max_principle", mp_json}};
  };
}

Job scatter_field(Section& c) {
  const cplx k = c.need<cplx>("k");
  Vec2 kc{5.0, 5.0};
  double scale = 0.4;
  int n_nodes = 512;
  c.with("kite", [&](Section& s) {
    kc = s.get("center", kc);
    scale = s.get("scale", scale);
    n_nodes = s.get("n_nodes", n_nodes);
  });
  const double eta = c.get("eta", scatter::choose_eta(k));
  const cloak::PointSource src{c.get("source", Vec2{8.0, 5.0}), c.get("amplitude", cplx(1.0))};
  const auto grid = read_grid(c, {0.0, 10.0, 0.0, 10.0, 200, 200});
  const auto o = scatter::kite_obstacle(kc, scale, n_nodes);
  if (scatter::inside_obstacle(o, src.position)) throw InvalidArgument("source lies inside the obstacle");
  scatter::detail::check_scattering(k, eta);

  return [=](Context& ctx) {
  std::vector<cplx> trace;
  for (Vec2 y : o.q) trace.push_back(src.value(y, k));
  const auto d = ctx.timed("solve", [&] { return scatter::solve_density(o, trace, k, eta, ctx.workers); });
  const auto ex = scatter::outgoing_expansion(o, d, kc);
  const double residual = ctx.timed("residual", [&] {
    return scatter::boundary_residual([&](int n, double shift) { return scatter::kite_obstacle(kc, scale, n, shift); },
                                      n_nodes, [&](Vec2 x) { return src.value(x, k); }, k, eta, ctx.workers);
  });
  const cplx nan(std::nan(""), std::nan(""));
  const auto us = ctx.timed("field", [&] {
    return evaluate_grid(grid, ctx.workers, [&](Vec2 x) -> cplx {
      if (scatter::inside_obstacle(o, x)) return nan;
      if (distance(x, kc) >= 1.5 * ex.radius) return ex(x);
      return scatter::scattered_field(x, o, d).value;
    });
  });
  std::vector<cplx> total(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    const Vec2 x = grid.point(i);
    total[i] = distance(x, src.position) == 0.0 ? nan : us[i] + src.value(x, k);
  }
  ctx.write("scattered.csv", grid_csv(grid, us));
  ctx.write("total.csv", grid_csv(grid, total));
  json side = {{"k", to_json(k)}, {"eta", eta}, {"n_nodes", n_nodes}, {"residual", residual}, {"rcond", d.rcond}};
  ctx.write_json("scatter-field.json", side);
  ctx.results = side;
  };
}

heat::Scenario read_scenario(Section& c, heat::Scenario s) {
  c.with("medium", [&](Section& m) {
    s.medium.sigma = m.get("sigma", s.medium.sigma);
    s.medium.rho_c = m.get("rho_c", s.medium.rho_c);
  });
  s.source = c.get("source", s.source);
  s.amplitude = c.get("amplitude", s.amplitude);
  const auto cc = read_cloak(c, {s.center, s.delta_c, s.delta_d, s.n_dev, s.phase, s.n_int});
  s.center = cc.center;
  s.delta_c = cc.delta_c;
  s.delta_d = cc.delta_d;
  s.n_dev = cc.n_dev;
  s.phase = cc.phase;
  s.n_int = cc.n_int;
  s.m = c.get("m", s.m);
  s.t_final = c.get("t_final", s.t_final);
  s.n_steps = c.get("n_steps", s.n_steps);
  s.alpha = c.get("alpha", s.alpha);
  s.umax_window = c.get("umax_window", s.umax_window);
  s.grid = read_grid(c, s.grid);
  return s;
}

json contour_json(const heat::LaplaceContour& con) {
  return {{"t_final", con.t_final}, {"n_steps", con.n_steps}, {"n_samples", con.n_samples}, {"dt", con.dt},
          {"big_t", con.big_t},     {"dw", con.dw},           {"alpha", con.alpha},         {"shift", con.shift}};
}

json radii_json(const std::vector<heat::SafeRadius>& radii) {
  json a = json::array();
  for (const auto& r : radii) a.push_back({{"radius", r.radius}, {"saturated", r.saturated}});
  return a;
}

Job heat_sim(Section& c) {
  heat::Scenario s = read_scenario(c, {});
  s.obstacle = c.get("obstacle", s.obstacle);
  c.with("kite", [&](Section& k) {
    s.kite_center = k.get("center", s.kite_center);
    s.kite_scale = k.get("scale", s.kite_scale);
    s.n_nodes = k.get("n_nodes", s.n_nodes);
  });
  s.output_steps = c.get("output_steps", s.output_steps);
  const std::string runs = c.get("runs", std::string("both"));
  const bool long_format = c.get("long_format", false);
  std::vector<char> toggles;
  if (runs == "both") toggles = {0, 1};
  else if (runs == "off") toggles = {0};
  else if (runs == "on") toggles = {1};
  else throw ConfigError("runs must be \"both\", \"on\" or \"off\"");
  const std::vector<bool> tv(toggles.begin(), toggles.end());
  bool tb[2];
  for (std::size_t i = 0; i < tv.size(); ++i) tb[i] = tv[i];
  heat::detail::prepare(s, runs != "off");

  return [=](Context& ctx) {
  const auto sim = ctx.timed("simulate", [&] { return heat::simulate(s, std::span<const bool>(tb, tv.size()), ctx.workers); });

  ctx.timed("write", [&] {
    for (const auto& run : sim.runs) {
      const std::string name = run.cloak ? "cloaked" : "uncloaked";
      const std::pair<const char*, const heat::TimeFieldGrid*> comps[] = {
          {"incident", &run.incident}, {"cloak", &run.cloak_field}, {"scattered", &run.scattered}, {"total", &run.total}};
      for (const auto& [cname, g] : comps) {
        Csv lng("t,x,y,value");
        for (std::size_t k = 0; k < g->steps.size(); ++k) {
          Csv csv("x,y,value");
          for (std::size_t i = 0; i < s.grid.size(); ++i) {
            const Vec2 x = s.grid.point(i);
            csv.row({x.x, x.y, g->value(i, k)});
            if (long_format) lng.row({g->times[k], x.x, x.y, g->value(i, k)});
          }
          ctx.write(tag("heat_" + name + "_" + cname + "_step", g->steps[k]) + ".csv", csv.text());
        }
        if (long_format) ctx.write("heat_" + name + "_" + cname + "_long.csv", lng.text());
      }
    }
  });

  json r = {{"contour", contour_json(sim.contour)},
            {"sigma", s.medium.sigma},
            {"rho_c", s.medium.rho_c},
            {"geometry", geometry_json(sim.cloak, sim.region)},
            {"u_max", sim.u_max},
            {"min_rcond", std::isfinite(sim.min_rcond) ? json(sim.min_rcond) : json(nullptr)},
            {"max_principle", sim.max_principle},
            {"times", sim.runs.front().total.times},
            {"steps", sim.runs.front().total.steps}};
  int masked = 0, inside = 0;
  for (std::size_t i = 0; i < sim.masked.size(); ++i) {
    masked += sim.masked[i];
    inside += sim.inside_obstacle[i];
  }
  r["masked_points"] = masked;
  r["obstacle_points"] = inside;
  for (const auto& run : sim.runs)
    if (run.cloak) {
      const auto radii = heat::safe_radius(s.grid, run.cloak_field.peak, sim.cloak.geometry.devices, sim.u_max);
      r["safe_radii"] = radii_json(radii);
      r["mask_radius"] = std::max_element(radii.begin(), radii.end(), [](auto& a, auto& b) { return a.radius < b.radius; })->radius;
    }
  ctx.results = r;
  };
}

Job sweep_circles(Section& c) {
  heat::Scenario base;
  base.medium.sigma = 1.3;
  base.source = {10.0, 1.0};
  base.center = {10.0, 10.0};
  base.n_int = 128;
  base.t_final = 1.0;
  base.n_steps = 64;
  base.grid = {0.0, 20.0, 0.0, 20.0, 100, 100};
  base = read_scenario(c, base);
  base.obstacle = false;
  base.output_steps = {base.n_steps};
  std::vector<double> deltas;
  if (c.has("delta_c_values")) {
    deltas = c.get("delta_c_values", deltas);
  } else {
    const double lo = c.get("delta_c_min", 1.0), hi = c.get("delta_c_max", 8.0);
    const int count = c.get("delta_c_count", 10);
    if (count < 1 || !(hi >= lo)) throw InvalidArgument("delta_c range needs count >= 1 and max >= min");
    for (int i = 0; i < count; ++i) deltas.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  }
  if (deltas.empty()) throw InvalidArgument("no delta_c values");
  for (double d : deltas) {
    heat::Scenario s = base;
    s.delta_c = d;
    heat::detail::prepare(s, true);
  }

  return [=](Context& ctx) {
  Csv csv("delta_c,device,radius,region_radius,touching,saturated");
  json rows = json::array();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    heat::Scenario s = base;
    s.delta_c = deltas[i];
    const bool on[1] = {true};
    const auto sim = ctx.timed(tag("delta_", int(i)), [&] { return heat::simulate(s, on, ctx.workers); });
    const auto radii = heat::safe_radius(s.grid, sim.runs[0].cloak_field.peak, sim.cloak.geometry.devices, sim.u_max);
    const double touching = sim.cloak.geometry.delta_d / std::numbers::sqrt2;
    double common = 0.0;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      csv.row({s.delta_c, double(j), radii[j].radius, sim.region.radii[j], touching, double(radii[j].saturated)});
      common = std::max(common, radii[j].radius);
    }
    rows.push_back({{"delta_c", s.delta_c},
                    {"u_max", sim.u_max},
                    {"touching", touching},
                    {"region_radii", sim.region.radii},
                    {"safe_radii", radii_json(radii)},
                    {"common_radius", common}});
  }
  ctx.write("sweep.csv", csv.text());
  ctx.results = {{"sweep", rows}};
  };
}

const std::map<std::string, std::pair<const char*, Job (*)(Section&)>> commands = {
    {"selftest", {"verify the Bessel remainder inequalities with explicit constants", selftest}},
    {"graf-error", {"Graf truncation errors and fitted bounds against M", graf_error}},
    {"cloak-field", {"incident, interior and exterior cloak fields on a grid", cloak_field}},
    {"bounds", {"cloak truncation bound audit and maximum principle check", bounds}},
    {"scatter-field", {"scattering by a sound-soft kite", scatter_field}},
    {"heat-sim", {"transient thermal cloaking simulation", heat_sim}},
    {"sweep-circles", {"safe radii of the devices over a range of cloak radii", sweep_circles}},
};

json versions() {
  return {{"excloak", EXCLOAK_VERSION},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active exterior cloaking: fields, bounds and thermal simulations"};
  app.require_subcommand(1);
  std::string config, out = ".";
  unsigned workers = 0;
  long long seed = 0;
  for (const auto& [name, cmd] : commands) {
    auto* sub = app.add_subcommand(name, cmd.first);
    auto* opt = sub->add_option("--config", config, "JSON configuration file");
    if (name != "selftest") opt->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads, 0 for all cores");
    sub->add_option("--seed", seed, "reserved; no command is stochastic");
  }

  auto fail = [&](int code, const std::string& kind, const std::string& message) {
    const json e = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << e.dump() << '\n';
    std::error_code ec;
    if (fs::is_directory(out, ec)) std::ofstream(fs::path(out) / "error.json") << e.dump(2) << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(2, "usage", e.what());
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Context ctx;
  ctx.out = out;
  ctx.workers = workers == 0 ? default_workers() : workers;
  json manifest = {{"command", name}, {"config", config}, {"workers", ctx.workers}, {"seed", seed}, {"versions", versions()}};
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::string kind, message;
  json inputs = json::object();
  try {
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (!fs::is_directory(ctx.out)) throw ConfigError("cannot create output directory " + out);
    const json cfg = load_config(config);
    Section root(cfg, "");
    Job job;
    try {
      job = commands.at(name).second(root);
      root.finish();
    } catch (...) {
      inputs = root.echo();
      throw;
    }
    inputs = root.echo();
    job(ctx);
  } catch (const ConfigError& e) {
    code = 2, kind = "config", message = e.what();
  } catch (const DomainError& e) {
    code = 3, kind = "domain", message = e.what();
  } catch (const NumericalError& e) {
    code = 4, kind = "numerical", message = e.what();
  } catch (const std::exception& e) {
    code = 1, kind = "internal", message = e.what();
  }
  ctx.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["inputs"] = inputs;
  manifest["status"] = code == 0 ? "ok" : "error";
  manifest["exit_code"] = code;
  if (code != 0) manifest["error"] = {{"kind", kind}, {"message", message}};
  manifest["outputs"] = ctx.outputs;
  manifest["results"] = ctx.results;
  manifest["timings"] = ctx.timings;
  std::error_code ec;
  if (fs::is_directory(ctx.out, ec)) std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << '\n';
  if (code != 0) return fail(code, kind, message);
  return 0;
}
