#include "app.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <json.hpp>

#include "coneflow/exemplars.hpp"
#include "coneflow/flow.hpp"
#include "coneflow/monotone.hpp"
#include "coneflow/rescale.hpp"
#include "coneflow/slag.hpp"
#include "coneflow/spectra.hpp"

namespace coneflow::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {
const char* kModule = "cli";

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"pipeline", "seed", "output"}},
      {"initial",
       {"case", "base", "base_rho", "r0", "nodes", "nodes_y", "fd_order", "amplitude", "mode", "d", "a",
        "theta0", "r_a", "r_b", "drift_a", "horizon"}},
      {"flow",
       {"integrator", "c_stab", "dt_max", "t_max", "stop_min_r2", "stop_sup_II2", "max_steps", "record_every",
        "lemma_residuals", "theta_T", "snapshot_every"}},
      {"classifier", {"min_rows", "bounded_ratio", "band_ratio", "apex_fraction", "drift_tolerance"}},
      {"rescale", {"lambdas"}},
      {"slag", {"n", "c", "cprime", "count", "kind"}},
      {"spectrum", {"sigma", "n", "tolerance", "window", "lumped"}},
      {"verify", {"cases", "lambda"}},
  };
  return s;
}

std::string unquote(std::string v) {
  const auto b = v.find_first_not_of(" \t");
  const auto e = v.find_last_not_of(" \t");
  v = b == std::string::npos ? "" : v.substr(b, e - b + 1);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
  return v;
}

double parse_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ValidationError(kModule, "key '" + key + "': '" + v + "' is not a number");
  return x;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  out << text << "\n";
}

void write_xy(const fs::path& path, const std::string& xname, const std::string& yname,
              const std::vector<std::pair<double, double>>& xy) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  out << xname << "," << yname << "\n" << std::setprecision(17);
  for (const auto& [x, y] : xy) out << x << "," << y << "\n";
}

// --- flow pipelines ------------------------------------------------------

BasePtr base_from(const Config& c) {
  const std::string b = c.text("initial.base", "circle");
  if (b == "circle") return make_circle(c.number("initial.base_rho", 1.0));
  if (b == "torus") return make_flat_torus();
  if (b.rfind("file:", 0) == 0) return load_tabulated_metric(b.substr(5));
  throw ValidationError(kModule, "initial.base: unknown base '" + b + "' (circle, torus, file:<path>)");
}

FdOrder order_from(const Config& c) {
  const int o = c.integer("initial.fd_order", 2);
  if (o == 2) return FdOrder::kSecond;
  if (o == 4) return FdOrder::kFourth;
  throw ValidationError(kModule, "initial.fd_order must be 2 or 4");
}

DiscreteImmersion build_initial(const Config& c) {
  const std::string name = c.text("initial.case", "shrinking-cross-section");
  const int nodes = c.integer("initial.nodes", 256);
  if (name == "shrinking-cross-section") {
    return shrinking_cross_section(base_from(c), c.number("initial.r0", 1.0), 0.0, nodes,
                                   c.integer("initial.nodes_y", 0), order_from(c));
  }
  if (name == "drifting-example") {
    return drifting_example(static_equator(nodes), c.number("initial.drift_a", 0.0), c.number("initial.horizon", 0.5),
                            1, 0.0);
  }
  if (name == "offcenter-circle") {
    return offcenter_circle(c.number("initial.d", 3.0), c.number("initial.a", 0.5), 0.0, nodes, order_from(c));
  }
  if (name == "radial-ray") {
    return radial_ray(c.number("initial.theta0", 0.0), c.number("initial.r_a", 1.0), c.number("initial.r_b", 2.0),
                      nodes);
  }
  if (name == "perturbed-shrinker") {
    return perturbed_shrinker(c.number("initial.amplitude", 0.05), c.integer("initial.mode", 2),
                              c.number("initial.r0", 1.0), nodes);
  }
  throw ValidationError(kModule, "initial.case: unknown exemplar '" + name + "'");
}

FlowConfig flow_config(const Config& c) {
  FlowConfig f;
  const std::string integ = c.text("flow.integrator", "euler");
  if (integ == "euler") {
    f.integrator = Integrator::kEuler;
  } else if (integ == "rk4") {
    f.integrator = Integrator::kRK4;
  } else {
    throw ValidationError(kModule, "flow.integrator must be euler or rk4");
  }
  f.c_stab = c.number("flow.c_stab", 0.0);
  f.dt_max = c.number("flow.dt_max", f.dt_max);
  f.t_max = c.number("flow.t_max", f.t_max);
  f.stop_min_r2 = c.number("flow.stop_min_r2", f.stop_min_r2);
  f.stop_sup_II2 = c.number("flow.stop_sup_II2", f.stop_sup_II2);
  const double steps = c.number("flow.max_steps", static_cast<double>(f.max_steps));
  if (!(steps >= 1)) throw ValidationError(kModule, "flow.max_steps must be >= 1");
  f.max_steps = static_cast<std::size_t>(steps);
  f.record_every = c.integer("flow.record_every", 1);
  f.lemma_residuals = c.flag("flow.lemma_residuals", true);
  f.snapshot_every = c.integer("flow.snapshot_every", 0);
  return f;
}

ClassifierConfig classifier_config(const Config& c) {
  ClassifierConfig k;
  k.min_rows = static_cast<std::size_t>(c.integer("classifier.min_rows", static_cast<int>(k.min_rows)));
  k.bounded_ratio = c.number("classifier.bounded_ratio", k.bounded_ratio);
  k.band_ratio = c.number("classifier.band_ratio", k.band_ratio);
  k.apex_fraction = c.number("classifier.apex_fraction", k.apex_fraction);
  k.drift_tolerance = c.number("classifier.drift_tolerance", k.drift_tolerance);
  return k;
}

// Theta needs a horizon; "auto" runs once to find T_est and again with it.
FlowTrace run_flow(const Config& c, const DiscreteImmersion& initial, FlowConfig fc, std::ostream& log) {
  const std::string horizon = c.text("flow.theta_T", "auto");
  if (horizon == "auto") {
    FlowConfig probe = fc;
    probe.lemma_residuals = false;
    probe.snapshot_every = 0;
    const auto first = run(initial, probe);
    if (first.T_est) {
      fc.theta_T = *first.T_est;
      log << "horizon for Theta from a first pass: T_est = " << std::setprecision(10) << *first.T_est << "\n";
    } else {
      log << "no blow-up in the first pass; Theta not evaluated\n";
    }
  } else if (horizon != "off") {
    fc.theta_T = parse_number("flow.theta_T", horizon);
  }
  return run(initial, fc);
}

void write_flow_artifacts(const FlowTrace& tr, double T, const fs::path& out) {
  write_trace_csv(out / "trace.csv", tr);
  std::vector<std::pair<double, double>> theta, curv, apex, resid;
  for (const auto& r : tr.rows) {
    if (std::isfinite(r.theta)) theta.emplace_back(r.t, r.theta);
    if (std::isfinite(r.self_similar_max)) resid.emplace_back(r.t, r.self_similar_max);
    if (std::isfinite(T) && r.t < T) {
      curv.emplace_back(r.t, r.sup_II2 * (T - r.t));
      apex.emplace_back(r.t, r.min_r2 / (T - r.t));
    }
  }
  write_xy(out / "plot_theta.csv", "t", "theta", theta);
  write_xy(out / "plot_sup_II2_tau.csv", "t", "sup_II2_times_T_minus_t", curv);
  write_xy(out / "plot_min_r2_over_tau.csv", "t", "min_r2_over_T_minus_t", apex);
  write_xy(out / "plot_self_similar_residual.csv", "t", "pointwise_max_residual", resid);
  if (tr.final_state) write_snapshot_csv(out / "final_state.csv", tr.final_state->immersion);
}

std::vector<MonotoneSample> monotone_samples(const FlowTrace& tr) {
  std::vector<MonotoneSample> s;
  for (const auto& r : tr.rows)
    if (std::isfinite(r.theta)) s.push_back({r.t, r.theta, r.dissipation, r.self_similar_max});
  return s;
}

int flow_pipeline(const Config& c, const fs::path& out, std::ostream& log, const std::string& kind) {
  const auto initial = build_initial(c);
  write_snapshot_csv(out / "initial_state.csv", initial);
  FlowConfig fc = flow_config(c);
  if (kind == "rescale-verify" && fc.snapshot_every == 0) fc.snapshot_every = 200;

  FlowTrace tr;
  try {
    tr = run_flow(c, initial, fc, log);
  } catch (const NonConvergenceError& e) {
    write_snapshot_csv(out / "failed_state.csv", e.state().immersion);
    throw;
  }
  log << "flow stopped (" << to_string(tr.stop) << ") after " << tr.rows.size() << " rows at t = "
      << std::setprecision(10) << tr.rows.back().t << "\n";

  SingularityReport rep;
  try {
    rep = classify_singularity(tr, classifier_config(c));
  } catch (const InconclusiveError&) {
    write_flow_artifacts(tr, tr.T_est.value_or(NAN), out);
    throw;
  }
  write_flow_artifacts(tr, rep.T_est, out);
  write_summary_json(out / "summary.json", rep);

  const auto samples = monotone_samples(tr);
  if (samples.size() >= 3) {
    const auto diss = dissipation_check(samples);
    write_monotonicity_csv(out / "monotonicity.csv", diss);
    if (kind == "monotone") {
      json j;
      j["theta_T"] = num(tr.theta_T.value_or(NAN));
      j["theta_initial"] = num(samples.front().theta);
      j["theta_final"] = num(samples.back().theta);
      j["max_theta_increase"] = num(diss.max_theta_increase);
      j["max_mismatch"] = num(diss.max_mismatch);
      j["min_dissipation"] = num(diss.min_dissipation);
      write_text(out / "monotone.json", j.dump(2));
    }
  } else if (kind == "monotone") {
    throw InconclusiveError(kModule, "fewer than 3 Theta samples; monotonicity not checked");
  }

  if (kind == "rescale-verify") {
    if (!std::isfinite(rep.T_est)) throw InconclusiveError(kModule, "rescaling needs a blow-up time");
    const auto lambdas = c.numbers("rescale.lambdas", {2.0, 3.0, 10.0});
    std::ofstream csv(out / "rescale.csv");
    csv << "t,lambda,metric,II2,product,H_base,H_radial,theta\n" << std::setprecision(17);
    RescaleReport worst;
    for (const auto& snap : tr.snapshots) {
      if (!(snap.t < rep.T_est)) continue;
      for (double lam : lambdas) {
        const auto resc = parabolic_rescale(snap.immersion, snap.t, lam, rep.T_est);
        const auto r = verify_rescale_identities(snap, resc, lam, rep.T_est);
        csv << snap.t << "," << lam << "," << r.metric << "," << r.II2 << "," << r.product << "," << r.H_base
            << "," << r.H_radial << "," << r.theta << "\n";
        worst.metric = std::max(worst.metric, r.metric);
        worst.II2 = std::max(worst.II2, r.II2);
        worst.product = std::max(worst.product, r.product);
        worst.H_base = std::max(worst.H_base, r.H_base);
        worst.H_radial = std::max(worst.H_radial, r.H_radial);
        worst.theta = std::max(worst.theta, r.theta);
      }
    }
    json j;
    j["T_est"] = num(rep.T_est);
    j["snapshots"] = tr.snapshots.size();
    j["lambdas"] = lambdas;
    j["metric"] = worst.metric;
    j["II2"] = worst.II2;
    j["product"] = worst.product;
    j["H_base"] = worst.H_base;
    j["H_radial"] = worst.H_radial;
    j["theta"] = worst.theta;
    j["max_deviation"] = worst.max();
    write_text(out / "rescale.json", j.dump(2));
    if (!(worst.max() <= 1e-10)) {
      log << "rescaling identities deviate by " << worst.max() << "\n";
      return kNumerical;
    }
  }
  log << summary_json(rep) << "\n";
  return kOk;
}

// --- verification cases ---------------------------------------------------

struct CaseResult {
  bool passed = true;
  json metrics = json::object();
  void check(const std::string& key, double value, bool ok) {
    metrics[key] = num(value);
    passed = passed && ok;
  }
};

CaseResult case_rescale(double lambda) {
  if (!(lambda > 0.0)) throw ValidationError(kModule, "lambda must be positive");
  struct Snap {
    DiscreteImmersion im;
    double t, T;
  };
  std::vector<Snap> snaps;
  for (double t : {0.1, 0.4, 0.49}) snaps.push_back({shrinking_cross_section(make_circle(), 1.0, t, 256), t, 0.5});
  snaps.push_back({shrinking_cross_section(make_flat_torus(), 1.0, 0.1, 32), 0.1, 0.25});
  snaps.push_back({offcenter_circle(3.0, 0.5, 0.05, 128), 0.05, 0.125});
  snaps.push_back({perturbed_shrinker(), 0.0, 0.500625});
  RescaleReport worst;
  for (const auto& s : snaps) {
    const auto r = verify_rescale_identities({s.t, s.im}, parabolic_rescale(s.im, s.t, lambda, s.T), lambda, s.T);
    worst.metric = std::max(worst.metric, r.metric);
    worst.II2 = std::max(worst.II2, r.II2);
    worst.product = std::max(worst.product, r.product);
    worst.H_base = std::max(worst.H_base, r.H_base);
    worst.H_radial = std::max(worst.H_radial, r.H_radial);
    worst.theta = std::max(worst.theta, r.theta);
  }
  CaseResult res;
  res.metrics["lambda"] = lambda;
  res.check("metric", worst.metric, worst.metric <= 1e-10);
  res.check("II2", worst.II2, worst.II2 <= 1e-10);
  res.check("product", worst.product, worst.product <= 1e-10);
  res.check("H_base", worst.H_base, worst.H_base <= 1e-10);
  res.check("H_radial", worst.H_radial, worst.H_radial <= 1e-10);
  res.check("theta", worst.theta, worst.theta <= 1e-10);
  return res;
}

CaseResult case_gauss() {
  const auto im = shrinking_cross_section(make_circle(), 2.0, 0.0, 256);
  GeometryCache cache(im);
  double err = 0.0;
  for (const auto& g : cache.nodes()) err = std::max(err, std::abs(std::sqrt(g.H2) - 0.5));
  CaseResult res;
  res.check("max_abs_H_error", err, err <= 1e-3);
  return res;
}

CaseResult case_shrinker() {
  CaseResult res;
  const double circ = self_shrinker_residual(shrinking_cross_section(make_circle(), 1.0, 0.0, 256), -1.0).residual;
  const double tor = self_shrinker_residual(shrinking_cross_section(make_flat_torus(), 1.0, 0.0, 64), -2.0).residual;
  res.check("circle_residual", circ, circ <= 1e-4);
  res.check("torus_residual", tor, tor <= 1e-4);
  for (double r0 : {0.5, 1.0, 2.0}) {
    const double ls = self_shrinker_residual(shrinking_cross_section(make_circle(), r0, 0.0, 256), -1.0).lambda_star;
    const double err = std::abs(ls + 1.0 / (r0 * r0));
    std::ostringstream key;
    key << "lambda_star_error_r0_" << r0;
    res.check(key.str(), err, err <= 1e-3);
  }
  return res;
}

CaseResult case_theta() {
  const double want = std::sqrt(2.0 * M_PI) * std::exp(-0.5);
  double err = 0.0;
  for (double t : {0.0, 0.25, 0.45, 0.499})
    err = std::max(err, std::abs(huisken_functional(shrinking_cross_section(make_circle(), 1.0, t, 256), t, 0.5) - want));
  CaseResult res;
  res.check("max_theta_error", err, err <= 1e-3);
  return res;
}

CaseResult case_slag() {
  CaseResult res;
  for (auto [n, cp] : {std::pair{2, 1.0}, std::pair{3, 0.0}}) {
    LevelSet lv;
    lv.n = n;
    lv.c = RVec::Zero(n - 1);
    lv.c_prime = cp;
    const auto s = sample_level_set(lv, 1000);
    double om = 0.0, im = 0.0;
    for (const auto& x : s) {
      om = std::max(om, x.residual_omega);
      im = std::max(im, x.residual_imOmega);
    }
    const auto nc = negative_controls(lv, s);
    const std::string p = "n" + std::to_string(n) + "_";
    res.check(p + "max_residual_omega", om, om <= 1e-8);
    res.check(p + "max_residual_imOmega", im, im <= 1e-8);
    res.check(p + "random_frame_min", nc.random_frame_min, nc.random_frame_min >= 1e-3);
    res.check(p + "perturbed_point_min", nc.perturbed_point_min, nc.perturbed_point_min >= 1e-3);
  }
  return res;
}

CaseResult case_spectrum() {
  const auto r = deformation_dimension(SigmaMesh::circle(2.0 * M_PI, 512), 2);
  CaseResult res;
  res.check("deformation_dim", r.deformation_dim, r.deformation_dim == 2);
  return res;
}

CaseResult case_reeb() {
  const auto c = SigmaMesh::circle(2.0 * M_PI, 512);
  CaseResult res;
  const double v2 = reeb_exclusion_check(c, 2), v3 = reeb_exclusion_check(c, 3);
  res.check("violation_n2", v2, v2 == 4.0);
  res.check("violation_n3", v3, v3 == 6.0);
  return res;
}

CaseResult case_toric() {
  CaseResult res;
  int problems = 0;
  double mismatch = 0.0;
  for (int n = 2; n <= 5; ++n) {
    problems += static_cast<int>(validate_toric_diagram(flat_toric_diagram(n)).size());
    mismatch = std::max(mismatch, normalization_check(n).mismatch);
  }
  res.check("diagram_problems", problems, problems == 0);
  res.check("normalization_mismatch", mismatch, mismatch <= 1e-14);
  return res;
}

CaseResult run_case(const std::string& name, double lambda) {
  if (name == "rescale-identities") return case_rescale(lambda);
  if (name == "gauss-formula") return case_gauss();
  if (name == "self-shrinker") return case_shrinker();
  if (name == "theta-shrinker") return case_theta();
  if (name == "slag-certify") return case_slag();
  if (name == "spectrum-circle") return case_spectrum();
  if (name == "reeb-exclusion") return case_reeb();
  if (name == "toric-flat") return case_toric();
  throw ValidationError(kModule, "unknown verify case '" + name + "' (see list-cases)");
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    part = unquote(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

AngleKind angle_kind(const std::string& k) {
  if (k == "parity") return AngleKind::kParity;
  if (k == "re") return AngleKind::kReal;
  if (k == "im") return AngleKind::kImag;
  throw ValidationError(kModule, "angle kind must be parity, re or im");
}
}  // namespace

// --- Config ----------------------------------------------------------------

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(kModule, "cannot open config " + path.string());
  return parse(in, path.string());
}

Config Config::parse(std::istream& in, const std::string& name) {
  Config c;
  c.name_ = name;
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(kModule, name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  c.validate();
  return c;
}

void Config::validate() const {
  const auto& s = schema();
  for (const auto& [key, node] : tree_) {
    if (node.empty()) {
      if (!s.at("").count(key)) throw ValidationError(kModule, name_ + ": unknown key '" + key + "'");
      continue;
    }
    const auto sec = s.find(key);
    if (sec == s.end() || key.empty()) throw ValidationError(kModule, name_ + ": unknown section [" + key + "]");
    for (const auto& [k, v] : node) {
      if (!sec->second.count(k)) throw ValidationError(kModule, name_ + ": unknown key '" + k + "' in [" + key + "]");
    }
  }
  static const std::set<std::string> pipelines = {"flow", "rescale-verify", "monotone", "slag", "spectrum", "verify-all"};
  if (!pipelines.count(pipeline())) {
    throw ValidationError(kModule, name_ + ": pipeline must be one of flow, rescale-verify, monotone, slag, spectrum, verify-all");
  }
}

std::string Config::raw(const std::string& key) const { return unquote(tree_.get<std::string>(key)); }

bool Config::has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? parse_number(key, raw(key)) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double x = parse_number(key, raw(key));
  if (x != std::floor(x) || std::abs(x) > 2e9) throw ValidationError(kModule, "key '" + key + "' must be an integer");
  return static_cast<int>(x);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError(kModule, "key '" + key + "' must be true or false");
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::string v = raw(key);
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  for (const auto& part : split_names(v)) out.push_back(parse_number(key, part));
  if (out.empty()) throw ValidationError(kModule, "key '" + key + "' needs at least one value");
  return out;
}

std::uint64_t Config::seed() const {
  const double s = number("seed", 42.0);
  if (!(s >= 0.0) || s != std::floor(s)) throw ValidationError(kModule, "seed must be a nonnegative integer");
  return static_cast<std::uint64_t>(s);
}

fs::path Config::output_dir() const { return text("output", "coneflow_out"); }

fs::path resolve_output(const fs::path& configured) {
  const char* env = std::getenv("CONEFLOW_OUT");
  return env && *env ? fs::path(env) : configured;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ChartDegeneracyError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "validation error: [cli] " << e.what() << "\n";
    return kValidation;
  }
}

int run_experiment(const Config& cfg, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  const std::string p = cfg.pipeline();
  if (p == "flow" || p == "monotone" || p == "rescale-verify") return flow_pipeline(cfg, out, log, p);
  if (p == "slag") {
    SlagOptions o;
    o.n = cfg.integer("slag.n", 2);
    o.c = cfg.numbers("slag.c", {0.0});
    o.c_prime = cfg.number("slag.cprime", 1.0);
    const int count = cfg.integer("slag.count", 1000);
    if (count < 1) throw ValidationError(kModule, "slag.count must be positive");
    o.count = static_cast<std::size_t>(count);
    o.kind = cfg.text("slag.kind", "parity");
    o.seed = cfg.seed();
    return run_slag(o, out, log);
  }
  if (p == "spectrum") {
    SpectrumOptions o;
    o.sigma = cfg.text("spectrum.sigma", o.sigma);
    o.n = cfg.integer("spectrum.n", 2);
    o.tolerance = cfg.number("spectrum.tolerance", 0.0);
    o.window = cfg.integer("spectrum.window", 24);
    o.lumped = cfg.flag("spectrum.lumped", false);
    return run_spectrum(o, out, log);
  }
  // verify-all
  auto names = verify_case_names();
  if (cfg.has("verify.cases")) names = split_names(cfg.text("verify.cases", ""));
  json all;
  bool ok = true;
  for (const auto& n : names) {
    const auto r = run_case(n, cfg.number("verify.lambda", 3.0));
    all[n] = {{"passed", r.passed}, {"metrics", r.metrics}};
    log << (r.passed ? "PASS " : "FAIL ") << n << "\n";
    ok = ok && r.passed;
  }
  write_text(out / "verify.json", all.dump(2));
  return ok ? kOk : kNumerical;
}

int run_slag(const SlagOptions& opt, const fs::path& out, std::ostream& log) {
  if (opt.n < 2) throw ValidationError(kModule, "--n must be >= 2");
  LevelSet lv;
  lv.n = opt.n;
  if (opt.c.size() == 1) {
    lv.c = RVec::Constant(opt.n - 1, opt.c[0]);
  } else if (static_cast<int>(opt.c.size()) == opt.n - 1) {
    lv.c = Eigen::Map<const RVec>(opt.c.data(), opt.n - 1);
  } else {
    throw ValidationError(kModule, "--c needs 1 or n - 1 values");
  }
  lv.c_prime = opt.c_prime;
  lv.kind = angle_kind(opt.kind);
  SamplerConfig sc;
  sc.seed = opt.seed;
  const auto samples = sample_level_set(lv, opt.count, sc);
  fs::create_directories(out);
  write_slag_csv(out / "slag.csv", samples);
  double om = 0.0, im = 0.0, level = 0.0;
  for (const auto& s : samples) {
    om = std::max(om, s.residual_omega);
    im = std::max(im, s.residual_imOmega);
    level = std::max(level, s.residual_level);
  }
  const auto nc = negative_controls(lv, samples, opt.seed);
  json j;
  j["n"] = opt.n;
  j["c"] = std::vector<double>(lv.c.data(), lv.c.data() + lv.c.size());
  j["cprime"] = opt.c_prime;
  j["kind"] = opt.kind;
  j["count"] = samples.size();
  j["seed"] = opt.seed;
  j["max_residual_omega"] = om;
  j["max_residual_imOmega"] = im;
  j["max_residual_level"] = level;
  j["negative_random_frame_min"] = nc.random_frame_min;
  j["negative_perturbed_point_min"] = nc.perturbed_point_min;
  write_text(out / "slag_summary.json", j.dump(2));
  log << j.dump(2) << "\n";
  return kOk;
}

int run_spectrum(const SpectrumOptions& opt, const fs::path& out, std::ostream& log) {
  const auto mesh = SigmaMesh::from_selector(opt.sigma);
  SpectralConfig sc;
  if (opt.tolerance > 0.0) sc.tolerance = opt.tolerance;
  sc.window = opt.window;
  sc.lumped_mass = opt.lumped;
  const auto r = deformation_dimension(mesh, opt.n, sc);
  const auto text = spectral_json(r);
  fs::create_directories(out);
  write_text(out / "spectrum.json", text);
  std::vector<std::pair<double, double>> xy;
  for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) xy.emplace_back(static_cast<double>(k), r.eigenvalues[k]);
  write_xy(out / "plot_eigenvalues.csv", "index", "eigenvalue", xy);
  log << text << "\n";
  return kOk;
}

const std::vector<std::string>& verify_case_names() {
  static const std::vector<std::string> names = {"rescale-identities", "gauss-formula",  "self-shrinker",
                                                 "theta-shrinker",     "slag-certify",   "spectrum-circle",
                                                 "reeb-exclusion",     "toric-flat"};
  return names;
}

int run_verify(const std::string& name, double lambda, const fs::path& out, std::ostream& log) {
  const auto r = run_case(name, lambda);
  json j;
  j["case"] = name;
  j["passed"] = r.passed;
  j["metrics"] = r.metrics;
  fs::create_directories(out);
  write_text(out / ("verify_" + name + ".json"), j.dump(2));
  log << j.dump(2) << "\n";
  return r.passed ? kOk : kNumerical;
}

}  // namespace coneflow::app
