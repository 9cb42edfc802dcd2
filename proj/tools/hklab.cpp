// hklab: command-line front end for the potential, curvature, ODE, Calabi
// and gluing experiments. Tables go to --out (CSV or JSON); in CSV mode the
// summary is written to stderr as "# key=value" lines.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "hklab/hklab.hpp"

namespace {

using namespace hklab;
using Json = nlohmann::ordered_json;

// ---- argument helpers ----------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  require(r.ec == std::errc() && r.ptr == s.data() + s.size(), "not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  require(r.ec == std::errc() && r.ptr == s.data() + s.size(), "not an integer: '" + s + "'");
  return v;
}

std::vector<double> doubles(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(to_double(t));
  require(!v.empty(), "empty list");
  return v;
}

std::vector<int> ints(const std::string& s) {
  std::vector<int> v;
  for (const auto& t : split(s, ',')) v.push_back(to_int(t));
  require(!v.empty(), "empty list");
  return v;
}

// "lo:hi[:n]"
struct Range {
  double lo = 0, hi = 0;
  int n = 0;
  std::vector<double> linear() const {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
  }
  std::vector<double> logarithmic() const {
    require(lo > 0 && hi > 0, "log-spaced range needs positive ends");
    return n == 1 ? std::vector<double>{lo} : log_grid(lo, hi, n);
  }
};

Range range(const std::string& s, int default_n) {
  auto p = split(s, ':');
  require(p.size() == 2 || p.size() == 3, "range must be lo:hi or lo:hi:n");
  Range r{to_double(p[0]), to_double(p[1]), p.size() == 3 ? to_int(p[2]) : default_n};
  require(r.n >= 1 && r.hi >= r.lo, "range needs lo <= hi and n >= 1");
  return r;
}

std::vector<CylinderPoint> poles(const std::string& s) {
  std::vector<CylinderPoint> out;
  for (const auto& t : split(s, ';')) {
    auto c = doubles(t);
    require(c.size() == 3, "each pole needs x,y,z");
    out.push_back({c[0], c[1], c[2]});
  }
  require(!out.empty(), "at least one pole required");
  return out;
}

// ---- output --------------------------------------------------------------------------------

struct Common {
  double tol = 1e-12;
  std::string out = "-";
  std::string format = "csv";
  std::string config;
  std::uint64_t seed = 1;
  bool format_given = false;
};

struct Result {
  Table table;
  Json summary = Json::object();
  std::optional<Json> document;  // a standalone JSON object (plan export)
};

Json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

Table quantities(std::initializer_list<std::pair<const char*, Cell>> kv) {
  Table t{{"quantity", "value"}, {}};
  for (const auto& [k, v] : kv) t.add({std::string(k), v});
  return t;
}

void emit(const Result& r, const Common& c) {
  std::ofstream file;
  if (c.out != "-") {
    file.open(c.out);
    require(file.good(), "cannot open output file " + c.out);
  }
  std::ostream& os = c.out == "-" ? std::cout : file;
  if (r.document) {
    require(c.format == "json", "this subcommand exports JSON only");
    os << r.document->dump(2) << '\n';
    return;
  }
  if (c.format == "json") {
    Json doc = Json::object();
    doc["columns"] = r.table.header;
    Json rows = Json::array();
    for (const auto& row : r.table.rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < row.size(); ++i) o[r.table.header[i]] = cell_json(row[i]);
      rows.push_back(o);
    }
    doc["rows"] = rows;
    doc["summary"] = r.summary;
    os << doc.dump(2) << '\n';
    return;
  }
  r.table.write_csv(os);
  for (const auto& [k, v] : r.summary.items()) std::cerr << "# " << k << "=" << v.dump() << '\n';
}

// ---- option groups ----------------------------------------------------------------------

void add_common(CLI::App* s, Common& c) {
  s->add_option("--tol", c.tol, "absolute accuracy target")->capture_default_str();
  s->add_option("--out", c.out, "output path, '-' for stdout")->capture_default_str();
  s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  s->add_option("--config", c.config, "key = value file; command-line flags win");
  s->add_option("--seed", c.seed, "seed for sampled points")->capture_default_str();
}

struct LatticeOpts {
  double epsilon = 1.0, tau1 = 0.0, tau2 = 1.0;
  TorusLattice get() const {
    require(epsilon > 0 && tau2 > 0, "lattice needs epsilon > 0 and tau2 > 0");
    return {epsilon, tau1, tau2};
  }
};

void add_lattice(CLI::App* s, LatticeOpts& l) {
  s->add_option("--epsilon", l.epsilon, "torus scale")->capture_default_str();
  s->add_option("--tau1", l.tau1, "torus modulus, real part")->capture_default_str();
  s->add_option("--tau2", l.tau2, "torus modulus, imaginary part")->capture_default_str();
}

struct GluingOpts {
  LatticeOpts lattice;
  int b_minus = 1, b_plus = 1;
  std::string weights = "2";
  double beta = 100;
  double zeta0_minus = 1, zeta0_plus = 1, d0_minus = 1, d0_plus = 1;
  GluingConfig get(double tol) const {
    GluingConfig c;
    c.lattice = lattice.get();
    c.b_minus = b_minus;
    c.b_plus = b_plus;
    c.weights = ints(weights);
    c.beta = beta;
    c.zeta0_minus = zeta0_minus;
    c.zeta0_plus = zeta0_plus;
    c.D0_minus = d0_minus;
    c.D0_plus = d0_plus;
    c.tol = tol;
    return c;
  }
};

void add_gluing(CLI::App* s, GluingOpts& g) {
  add_lattice(s, g.lattice);
  s->add_option("--b-minus", g.b_minus, "degree of the minus end")->capture_default_str();
  s->add_option("--b-plus", g.b_plus, "degree of the plus end")->capture_default_str();
  s->add_option("--weights", g.weights, "cluster weights, comma separated")->capture_default_str();
  s->add_option("--beta", g.beta, "neck offset")->capture_default_str();
  s->add_option("--zeta0-minus", g.zeta0_minus)->capture_default_str();
  s->add_option("--zeta0-plus", g.zeta0_plus)->capture_default_str();
  s->add_option("--d0-minus", g.d0_minus)->capture_default_str();
  s->add_option("--d0-plus", g.d0_plus)->capture_default_str();
}

void add_weights(CLI::App* s, WeightParams& w) {
  s->add_option("--delta", w.delta)->capture_default_str();
  s->add_option("--nu", w.nu)->capture_default_str();
  s->add_option("--mu", w.mu)->capture_default_str();
  s->add_option("--k", w.k, "derivative order")->capture_default_str();
  s->add_option("--alpha", w.alpha, "Hoelder exponent")->capture_default_str();
}

// ---- subcommands ---------------------------------------------------------------------------

struct PotentialOpts {
  LatticeOpts lattice;
  std::string poles = "0,0,0";
  double slope = 0, offset = 0;
  std::string engine = "auto";
  int nx = 4, ny = 4;
  std::string z = "-1:1:5";
  bool compare = false;
  int samples = 200;
};

Result run_potential(const PotentialOpts& o, const Common& c) {
  Result r;
  if (o.compare) {
    auto pts = engine_agreement(o.samples, c.seed, c.tol);
    r.table.header = {"x", "y", "z", "V_ewald", "V_modes", "abs_diff"};
    double worst = 0;
    for (const auto& e : pts) {
      r.table.add({e.p.x, e.p.y, e.p.z, e.ewald, e.modes, std::abs(e.ewald - e.modes)});
      worst = std::max(worst, std::abs(e.ewald - e.modes));
    }
    r.summary["max_abs_diff"] = worst;
    return r;
  }
  Engine eng = o.engine == "ewald" ? Engine::Ewald : o.engine == "modes" ? Engine::Modes : Engine::Auto;
  auto L = o.lattice.get();
  auto spec = make_cylinder_green(L, poles(o.poles), o.slope, o.offset, c.tol);
  require(o.nx >= 1 && o.ny >= 1, "grid sizes must be positive");
  std::vector<Point3> pts;
  for (double z : range(o.z, 5).linear())
    for (int j = 0; j < o.ny; ++j)
      for (int i = 0; i < o.nx; ++i) {
        Vec2 q = L.from_frac((i + 0.5) / o.nx, (j + 0.5) / o.ny);
        pts.push_back({q.x, q.y, z});
      }
  std::vector<Jet<2>> jets(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) { jets[k] = eval_jet<2>(spec, pts[k], eng); });
  r.table.header = {"x", "y", "z", "V", "Vx", "Vy", "Vz", "lapV"};
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& j = jets[k];
    r.table.add({pts[k].x, pts[k].y, pts[k].z, j.value(), j.d(1, 0, 0), j.d(0, 1, 0), j.d(0, 0, 1), j.laplacian()});
  }
  return r;
}

struct SlopeOpts {
  LatticeOpts lattice;
  std::string counts = "1,2,3";
  std::string poles;
};

Result run_slope(const SlopeOpts& o, const Common& c) {
  Result r;
  r.table.header = {"m0", "k_minus", "k_plus", "k_diff", "expected", "rate_minus", "rate_plus"};
  std::vector<std::vector<CylinderPoint>> sets;
  if (!o.poles.empty()) {
    sets.push_back(poles(o.poles));
  } else {
    for (int m : ints(o.counts)) {
      auto p = default_poles(m);
      // Default layout lives in fractional coordinates of the torus.
      auto L = o.lattice.get();
      for (auto& q : p) {
        Vec2 v = L.from_frac(q.x, q.y);
        q = {v.x, v.y, q.z};
      }
      sets.push_back(p);
    }
  }
  for (const auto& s : sets) {
    auto row = slope_law(o.lattice.get(), s, c.tol);
    r.table.add({static_cast<long long>(row.m0), row.k_minus, row.k_plus, row.k_minus - row.k_plus, row.expected,
                 row.rate_minus, row.rate_plus});
  }
  r.summary["sqrt_lambda1"] = torus_spectrum(o.lattice.get(), 2).at(1).sqrt_lambda();
  return r;
}

struct CurvatureOpts {
  std::string spec = "taubnut";
  double sigma = 1.0, c = 1.0, offset = 0.0;
  std::string ray = "5:50:41";
  std::string mode = "profile";
  LatticeOpts lattice;
  std::string poles = "0.5,0.5,0";
  double x = 0.1, y = 0.2;
  int nx = 4, ny = 4;
  std::string z = "0.5:2:4";
  bool certificates = false;
};

Result run_curvature(const CurvatureOpts& o, const Common& c) {
  Result r;
  if (o.certificates) {
    auto s = curvature_study();
    r.table = quantities({{"flat_const_max_rm", s.flat_const_max},
                          {"flat_monopole_max_rm", s.flat_monopole_max},
                          {"taubnut_slope", s.taubnut.slope},
                          {"calabi_max_rel_dev", s.calabi_max_rel},
                          {"calabi_rm_vs_s_exponent", s.calabi_rm_exponent}});
    return r;
  }
  const bool radial = o.spec == "taubnut" || o.spec == "monopole" || o.spec == "flat";
  PotentialSpec spec;
  if (o.spec == "taubnut") spec = make_euclidean_monopole(o.sigma, {{0, 0, 0}});
  else if (o.spec == "monopole") spec = make_euclidean_monopole(0.0, {{0, 0, 0}});
  else if (o.spec == "flat") spec = make_euclidean_monopole(o.sigma, {});
  else if (o.spec == "linear") spec = make_model_linear(o.c, o.offset);
  else if (o.spec == "calabi") spec = make_model_linear(make_calabi(1, 0.5).slope(), 0.0);
  else if (o.spec == "green") spec = make_cylinder_green(o.lattice.get(), poles(o.poles), o.c, o.offset, c.tol);
  else throw Error(ErrorKind::Validation, "unknown spec '" + o.spec + "'");

  if (o.mode == "field") {
    require(o.spec == "green" || o.spec == "linear" || o.spec == "calabi", "field dumps need a slab spec");
    auto L = o.lattice.get();
    std::vector<Point3> pts;
    for (double z : range(o.z, 4).linear())
      for (int j = 0; j < o.ny; ++j)
        for (int i = 0; i < o.nx; ++i) {
          Vec2 q = L.from_frac((i + 0.5) / o.nx, (j + 0.5) / o.ny);
          pts.push_back({q.x, q.y, z});
        }
    std::vector<std::array<double, 3>> vals(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) {
      auto m = metric_at_point(spec, pts[k]);
      vals[k] = {m.V, m.fiber_length, curvature_norm(spec, pts[k])};
    });
    r.table.header = {"x", "y", "z", "V", "fiber_len", "rm_norm"};
    for (std::size_t k = 0; k < pts.size(); ++k)
      r.table.add({pts[k].x, pts[k].y, pts[k].z, vals[k][0], vals[k][1], vals[k][2]});
    return r;
  }
  require(o.mode == "profile", "mode must be profile or field");
  auto coords = range(o.ray, 41).logarithmic();
  std::vector<Point3> ray;
  const double u = 1 / std::sqrt(3.0);
  for (double t : coords) ray.push_back(radial ? Point3{t * u, t * u, t * u} : Point3{o.x, o.y, t});
  auto pr = curvature_profile(spec, ray, coords);
  r.table.header = {"coord", "rm_norm"};
  for (std::size_t i = 0; i < coords.size(); ++i) r.table.add({coords[i], pr.rm[i]});
  if (pr.flat) r.summary["slope"] = "Flat";
  else r.summary["slope"] = pr.slope;
  return r;
}

struct TripleOpts {
  int samples = 1000;
  double beta = 4.0;
};

Result run_triple(const TripleOpts& o, const Common& c) {
  Result r;
  r.table.header = {"x", "y", "z", "V", "q_dev"};
  double worst = 0;
  for (const auto& q : q_identity(o.samples, c.seed, o.beta)) {
    r.table.add({q.p.x, q.p.y, q.p.z, q.V, q.deviation});
    worst = std::max(worst, q.deviation);
  }
  r.summary["max_q_dev"] = worst;
  return r;
}

struct OdeOpts {
  std::string action;
  std::string j = "1", h = "0";
  std::string z;
};

Result run_ode(const OdeOpts& o, const Common&) {
  Result r;
  auto js = ints(o.j);
  auto hs = doubles(o.h);
  if (o.action == "table") {
    require(js.size() == 1 && hs.size() == 1, "table takes a single j and h");
    auto p = mode_params(js[0], hs[0]);
    auto fp = fundamental_pair(p);
    auto zs = range(o.z.empty() ? "0:4:41" : o.z, 41).linear();
    r.table.header = {"z", "F", "U", "Fp", "Up", "W", "Fhat", "Uhat"};
    for (double z : zs) {
      auto e = laplace_envelope(p, z);
      double F = fp.F(z), U = fp.U(z), Fp = fp.Fp(z), Up = fp.Up(z);
      r.table.add({z, F, U, Fp, Up, Fp * U - F * Up, e.Fhat, e.Uhat});
    }
    r.summary["W_closed"] = fp.wronskian_closed();
    return r;
  }
  if (o.action == "wronskian") {
    auto zs = range(o.z.empty() ? "0:4:41" : o.z, 41).linear();
    r.table.header = {"j", "h", "z", "W", "W_closed", "rel_dev"};
    double worst = 0, endpoint = 0;
    for (int j : js)
      for (double h : hs) {
        auto fp = fundamental_pair(mode_params(j, h));
        double w0 = fp.wronskian_closed();
        for (double z : zs) {
          double w = fp.Fp(z) * fp.U(z) - fp.F(z) * fp.Up(z);
          r.table.add({static_cast<long long>(j), h, z, w, w0, std::abs(w - w0) / w0});
          worst = std::max(worst, std::abs(w - w0) / w0);
        }
        auto row = wronskian_study(j, h, zs.back(), 3);
        endpoint = std::max({endpoint, row.Fp0_err, row.U0_err, row.F0_err, row.Up0_err});
      }
    r.summary["max_rel_dev"] = worst;
    r.summary["max_endpoint_rel_err"] = endpoint;
    return r;
  }
  if (o.action == "envelope") {
    auto zr = range(o.z.empty() ? "0:8:40" : o.z, 40);
    auto s = envelope_study(js, hs, zr.hi, zr.n);
    r.table = quantities({{"points", static_cast<long long>(s.points)},
                          {"F_violations", static_cast<long long>(s.F_violations)},
                          {"U_violations", static_cast<long long>(s.U_violations)},
                          {"quotient_violations", static_cast<long long>(s.quotient_violations)},
                          {"max_quotient_over_C0", s.max_quotient_over_C0},
                          {"max_monotonicity_err", s.max_monotonicity_err},
                          {"min_monotonicity_margin", s.min_monotonicity_margin},
                          {"root_identity_err", s.root_identity_err},
                          {"root_identity_err_h2_variant", s.root_identity_err_printed}});
    return r;
  }
  if (o.action == "poisson") {
    r.table.header = {"case", "u", "relative_residual", "fitted_rate", "eta", "eta0", "growth_holds"};
    for (const auto& pc : poisson_cases()) {
      auto row = poisson_study(pc);
      r.table.add({row.name, row.u, row.relative_residual, row.fitted_rate, row.eta, row.eta0,
                   static_cast<long long>(row.growth_holds)});
    }
    return r;
  }
  throw Error(ErrorKind::Validation, "unknown ode action '" + o.action + "'");
}

struct CalabiOpts {
  std::string action;
  int b = 1;
  double r0 = 0.5;
  std::string z = "20:200:41";
  int count = 20;
  double lambda = 1.0;
  int j = 1;
  std::string variant = "derivation";
};

Result run_calabi(const CalabiOpts& o, const Common&) {
  Result r;
  auto cal = make_calabi(o.b, o.r0);
  if (o.action == "profile") {
    auto zr = range(o.z, 41);
    auto pr = calabi_profile(cal, zr.lo, zr.hi, zr.n);
    r.table.header = {"z", "s", "fiber_len", "rm_norm", "vol_cum"};
    for (const auto& row : pr.rows) r.table.add({row.z, row.s, row.fiber_len, row.rm_norm, row.vol_cum});
    r.summary["s_exponent"] = pr.s_exponent;
    r.summary["vol_exponent"] = pr.vol_exponent;
    r.summary["rm_exponent"] = pr.rm_exponent;
    return r;
  }
  if (o.action == "spectrum") {
    auto v = heisenberg_spectrum(o.count);
    r.table.header = {"index", "value"};
    for (std::size_t i = 0; i < v.size(); ++i) r.table.add({static_cast<long long>(i), v[i]});
    double min_pos = INFINITY;
    for (double x : v)
      if (x > 0) min_pos = std::min(min_pos, x);
    if (std::isfinite(min_pos)) r.summary["min_positive"] = min_pos;
    return r;
  }
  if (o.action == "decay") {
    auto d = harmonic_decay_study();
    r.table = quantities({{"fitted_rate", d.fitted_rate},
                          {"analytic_rate", d.analytic_rate},
                          {"holds", static_cast<long long>(d.holds)}});
    return r;
  }
  if (o.action == "lambda") {
    auto f = o.variant == "proof" ? LambdaFormula::ProofVariant : LambdaFormula::Derivation;
    require(o.variant == "proof" || o.variant == "derivation", "variant must be derivation or proof");
    r.table = quantities({{"z0", cal.z0}, {"Lambda", fiber_mode_lambda(cal, o.lambda, o.j, f)}});
    return r;
  }
  throw Error(ErrorKind::Validation, "unknown calabi action '" + o.action + "'");
}

std::string rational(const Rational& q) {
  return q.denominator() == 1 ? std::to_string(q.numerator())
                              : std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

struct NeckOpts {
  GluingOpts g;
  int exhaustive = 0;
  double diameter_t = 0;
  std::string betas = "100,200,400,800,1600";
};

Result run_neck(const NeckOpts& o, Common& c) {
  Result r;
  if (o.exhaustive > 0) {
    auto s = bookkeeping_study(o.exhaustive);
    r.table = quantities({{"configs", s.configs}, {"failures", s.failures}, {"symmetric_t1", s.symmetric_t1}});
    return r;
  }
  auto cfg = o.g.get(c.tol);
  if (o.diameter_t > 0) {
    auto e = fiber_diameter_exponents(cfg, o.diameter_t, doubles(o.betas));
    auto f = fiber_diameters(plan_neck(cfg), o.diameter_t);
    r.table = quantities({{"nil_ratio", f.nil_ratio},
                          {"circle_ratio", f.circle_ratio},
                          {"nil_exponent", e.nil},
                          {"circle_exponent", e.circle}});
    return r;
  }
  auto p = plan_neck(cfg);
  Json d = Json::object();
  d["b_minus"] = cfg.b_minus;
  d["b_plus"] = cfg.b_plus;
  d["weights"] = cfg.weights;
  d["beta"] = cfg.beta;
  d["T_minus"] = p.T_minus;
  d["T_plus"] = p.T_plus;
  Json slopes = Json::array();
  for (std::size_t j = 0; j < p.slopes.ell.size(); ++j)
    slopes.push_back({{"ell", rational(p.slopes.ell[j])},
                      {"left", rational(p.slopes.left[j])},
                      {"right", rational(p.slopes.right[j])}});
  d["slopes"] = slopes;
  d["slope_unit"] = "pi/A";
  d["degrees"] = p.slopes.degrees;
  d["singular_points"] = p.singular_points;
  d["chi"] = p.topo.chi;
  d["b2_plus"] = p.topo.b2_plus;
  d["b2_minus"] = p.topo.b2_minus;
  d["signature"] = p.topo.signature;
  d["area"] = p.A;
  d["beta_minus"] = p.beta_minus + 0.0;  // no negative zero in the export
  d["beta_plus"] = p.beta_plus;
  d["iota0"] = p.iota0;
  if (!c.format_given) c.format = "json";
  r.document = d;
  return r;
}

struct RegionOpts {
  GluingOpts g;
  WeightParams w;
  std::string piece = "neck";
  double x = 0, y = 0;
  std::string z;
  bool interfaces = false;
  std::string betas = "100,1000,10000";
};

Result run_region(const RegionOpts& o, const Common& c) {
  Result r;
  auto cfg = o.g.get(c.tol);
  validate(o.w);
  if (o.interfaces) {
    r.table.header = {"beta", "interface", "ratio"};
    double lo = INFINITY, hi = 0;
    for (const auto& row : interface_study(cfg, o.w, doubles(o.betas)))
      for (const auto& x : row.ratios) {
        r.table.add({row.beta, x.name, x.ratio});
        lo = std::min(lo, x.ratio);
        hi = std::max(hi, x.ratio);
      }
    r.summary["min_ratio"] = lo;
    r.summary["max_ratio"] = hi;
    return r;
  }
  auto p = plan_neck(cfg);
  Piece piece = o.piece == "minus" ? Piece::EndMinus : o.piece == "plus" ? Piece::EndPlus : Piece::Neck;
  require(o.piece == "neck" || o.piece == "minus" || o.piece == "plus", "piece must be neck, minus or plus");
  std::string zs = o.z;
  if (zs.empty()) {
    std::ostringstream def;
    if (piece == Piece::Neck) def << fmt(-p.T_minus) << ":" << fmt(p.T_plus) << ":201";
    else def << "0:" << fmt(piece == Piece::EndMinus ? p.T_minus : p.T_plus) << ":101";
    zs = def.str();
  }
  auto z = range(zs, 201).linear();
  std::vector<RegionInfo> info(z.size());
  std::vector<double> rho(z.size());
  parallel_for(z.size(), [&](std::size_t i) {
    info[i] = classify_region(p, {piece, {o.x, o.y, z[i]}});
    rho[i] = weight_at(p, o.w, info[i]);
  });
  r.table.header = {"z", "region", "rho"};
  for (std::size_t i = 0; i < z.size(); ++i) r.table.add({z[i], std::string(region_name(info[i].region)), rho[i]});
  return r;
}

struct GlueOpts {
  GluingOpts g;
  std::string betas = "6,8,10,12";
  int nz = 21, grid = 8;
};

Result run_glue(const GlueOpts& o, const Common& c) {
  Result r;
  auto g = glue_check(o.g.get(c.tol), doubles(o.betas), o.nz, o.grid);
  r.table.header = {"beta", "T", "residual", "q_deviation"};
  for (const auto& row : g.rows) r.table.add({row.beta, row.T, row.residual, row.q_deviation});
  r.summary["residual_log_slope"] = g.residual_log_slope;
  r.summary["q_log_slope"] = g.q_log_slope;
  r.summary["residual_decreasing"] = g.residual_decreasing;
  r.summary["q_decreasing"] = g.q_decreasing;
  return r;
}

// Splices "key = value" entries of --config files in front of the
// command-line flags of the selected subcommand, so later flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> kept, injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[++i];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    else {
      kept.push_back(args[i]);
      continue;
    }
    std::ifstream probe(path);
    if (!probe.good()) throw Error(ErrorKind::Validation, "cannot read config file " + path);
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
      if (!item.parents.empty() && !(kept.size() && item.parents.front() == kept.front())) continue;
      std::string v;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) v += (k ? "," : "") + item.inputs[k];
      injected.push_back("--" + item.name + "=" + v);
    }
  }
  if (!kept.empty()) kept.insert(kept.begin() + 1, injected.begin(), injected.end());
  return kept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbons-Hawking gluing laboratory"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  PotentialOpts po;
  auto* potential = app.add_subcommand("potential", "dump V and derivatives, or compare the two engines");
  add_common(potential, common);
  add_lattice(potential, po.lattice);
  potential->add_option("--poles", po.poles, "x,y,z;x,y,z;...")->capture_default_str();
  potential->add_option("--slope", po.slope)->capture_default_str();
  potential->add_option("--offset", po.offset)->capture_default_str();
  potential->add_option("--engine", po.engine)->check(CLI::IsMember({"auto", "ewald", "modes"}))->capture_default_str();
  potential->add_option("--nx", po.nx)->capture_default_str();
  potential->add_option("--ny", po.ny)->capture_default_str();
  potential->add_option("--z", po.z, "lo:hi:n")->capture_default_str();
  potential->add_flag("--compare", po.compare, "Ewald against mode sum on the overlap annulus");
  potential->add_option("--samples", po.samples)->capture_default_str();

  SlopeOpts so;
  auto* slope = app.add_subcommand("slope", "fit end slopes and decay rates");
  add_common(slope, common);
  add_lattice(slope, so.lattice);
  slope->add_option("--counts", so.counts, "pole counts using the default layout")->capture_default_str();
  slope->add_option("--poles", so.poles, "explicit poles x,y,z;...");

  CurvatureOpts co;
  auto* curvature = app.add_subcommand("curvature", "curvature profiles and field dumps");
  add_common(curvature, common);
  add_lattice(curvature, co.lattice);
  curvature->add_option("--spec", co.spec)
      ->check(CLI::IsMember({"taubnut", "monopole", "flat", "linear", "calabi", "green"}))
      ->capture_default_str();
  curvature->add_option("--sigma", co.sigma)->capture_default_str();
  curvature->add_option("--c", co.c, "linear coefficient; for green, the slope term")->capture_default_str();
  curvature->add_option("--offset", co.offset)->capture_default_str();
  curvature->add_option("--ray", co.ray, "lo:hi:n, log spaced")->capture_default_str();
  curvature->add_option("--mode", co.mode)->check(CLI::IsMember({"profile", "field"}))->capture_default_str();
  curvature->add_option("--poles", co.poles)->capture_default_str();
  curvature->add_option("--x", co.x)->capture_default_str();
  curvature->add_option("--y", co.y)->capture_default_str();
  curvature->add_option("--nx", co.nx)->capture_default_str();
  curvature->add_option("--ny", co.ny)->capture_default_str();
  curvature->add_option("--z", co.z)->capture_default_str();
  curvature->add_flag("--certificates", co.certificates, "flatness, Taub-NUT and Calabi checks");

  TripleOpts to;
  auto* triple = app.add_subcommand("triple", "Q matrices of template triples at random points");
  add_common(triple, common);
  triple->add_option("--samples", to.samples)->capture_default_str();
  triple->add_option("--beta", to.beta)->capture_default_str();

  OdeOpts oo;
  auto* ode = app.add_subcommand("ode", "model ODE: table, wronskian, envelope, poisson");
  ode->set_help_flag("--help", "Print this help message and exit");
  add_common(ode, common);
  ode->add_option("action", oo.action)->required()->check(CLI::IsMember({"table", "wronskian", "envelope", "poisson"}));
  ode->add_option("--j", oo.j, "comma-separated j values")->capture_default_str();
  ode->add_option("--h", oo.h, "comma-separated h values")->capture_default_str();
  ode->add_option("--z", oo.z, "lo:hi:n");

  CalabiOpts ko;
  auto* calabi = app.add_subcommand("calabi", "Calabi model: profile, spectrum, decay, lambda");
  add_common(calabi, common);
  calabi->add_option("action", ko.action)->required()->check(CLI::IsMember({"profile", "spectrum", "decay", "lambda"}));
  calabi->add_option("--b", ko.b)->capture_default_str();
  calabi->add_option("--r0", ko.r0)->capture_default_str();
  calabi->add_option("--z", ko.z, "lo:hi:n, log spaced")->capture_default_str();
  calabi->add_option("--count", ko.count)->capture_default_str();
  calabi->add_option("--lambda", ko.lambda)->capture_default_str();
  calabi->add_option("--j", ko.j)->capture_default_str();
  calabi->add_option("--variant", ko.variant)->check(CLI::IsMember({"derivation", "proof"}))->capture_default_str();

  NeckOpts no;
  auto* neck = app.add_subcommand("neck", "neck plan export");
  add_common(neck, common);
  add_gluing(neck, no.g);
  neck->add_option("--exhaustive", no.exhaustive, "check every composition with at most N parts")->capture_default_str();
  neck->add_option("--diameter-t", no.diameter_t, "fiber diameters at this t")->capture_default_str();
  neck->add_option("--betas", no.betas)->capture_default_str();

  RegionOpts ro;
  auto* region = app.add_subcommand("region", "region labels and weights along z");
  add_common(region, common);
  add_gluing(region, ro.g);
  add_weights(region, ro.w);
  region->add_option("--piece", ro.piece)->check(CLI::IsMember({"neck", "minus", "plus"}))->capture_default_str();
  region->add_option("--x", ro.x)->capture_default_str();
  region->add_option("--y", ro.y)->capture_default_str();
  region->add_option("--z", ro.z, "lo:hi:n");

  RegionOpts wo;
  auto* weight = app.add_subcommand("weight", "weights along z, or interface ratios");
  add_common(weight, common);
  add_gluing(weight, wo.g);
  add_weights(weight, wo.w);
  weight->add_option("--piece", wo.piece)->check(CLI::IsMember({"neck", "minus", "plus"}))->capture_default_str();
  weight->add_option("--x", wo.x)->capture_default_str();
  weight->add_option("--y", wo.y)->capture_default_str();
  weight->add_option("--z", wo.z, "lo:hi:n");
  weight->add_flag("--interfaces", wo.interfaces, "ratios at the region interfaces");
  weight->add_option("--betas", wo.betas)->capture_default_str();

  GlueOpts go;
  go.g.lattice.epsilon = 2.0;
  auto* glue = app.add_subcommand("glue-check", "glue residual and Q deviation against beta");
  add_common(glue, common);
  add_gluing(glue, go.g);
  glue->add_option("--betas", go.betas)->capture_default_str();
  glue->add_option("--nz", go.nz)->capture_default_str();
  glue->add_option("--grid", go.grid)->capture_default_str();

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    common.format_given = app.get_subcommands().front()->count("--format") > 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "UsageError: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "UsageError: " << e.what() << '\n';
    return 2;
  }

  try {
    Result r;
    if (*potential) r = run_potential(po, common);
    else if (*slope) r = run_slope(so, common);
    else if (*curvature) r = run_curvature(co, common);
    else if (*triple) r = run_triple(to, common);
    else if (*ode) r = run_ode(oo, common);
    else if (*calabi) r = run_calabi(ko, common);
    else if (*neck) r = run_neck(no, common);
    else if (*region) r = run_region(ro, common);
    else if (*weight) r = run_region(wo, common);
    else if (*glue) r = run_glue(go, common);
    emit(r, common);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return is_budget_failure(e.kind()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
