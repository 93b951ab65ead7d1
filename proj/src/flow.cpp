#include "coneflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "coneflow/monotone.hpp"

namespace coneflow {

namespace {
const char* kModule = "flow";

std::vector<ConePoint> advanced(const DiscreteImmersion& im, const std::vector<ConeTangent>& v,
                                double h) {
  const int n = im.cone().base_dim();
  std::vector<ConePoint> out = im.nodes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].base += h * v[i].head(n);
    out[i].r += h * v[i](n);
  }
  return out;
}

DiscreteImmersion with_nodes(const DiscreteImmersion& im, std::vector<ConePoint> nodes) {
  DiscreteImmersion next = im;
  next.set_nodes(std::move(nodes));
  return next;
}

FlowState step_with_cache(const FlowState& state, const GeometryCache& cache, double dt,
                          const FlowConfig& config) {
  const auto& im = state.immersion;
  const auto k1 = flow_velocity(im, cache);
  if (config.integrator == Integrator::kEuler) {
    return {state.t + dt, with_nodes(im, advanced(im, k1, dt))};
  }
  const auto s2 = with_nodes(im, advanced(im, k1, 0.5 * dt));
  const auto k2 = flow_velocity(s2, GeometryCache(s2));
  const auto s3 = with_nodes(im, advanced(im, k2, 0.5 * dt));
  const auto k3 = flow_velocity(s3, GeometryCache(s3));
  const auto s4 = with_nodes(im, advanced(im, k3, dt));
  const auto k4 = flow_velocity(s4, GeometryCache(s4));
  std::vector<ConeTangent> v(k1.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  return {state.t + dt, with_nodes(im, advanced(im, v, dt))};
}

// Sampled d/dt r^2(F) - 2 gbar(H, F) between two consecutive states. In graphical
// mode the graph value is shifted to the point the normal flow actually reaches.
double lemma2_residual(const DiscreteImmersion& before, const GeometryCache& cache,
                       const DiscreteImmersion& after, double dt) {
  const int n = before.cone().base_dim();
  const bool graphical = before.mode() == ImmersionMode::kGraphical;
  double worst = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double r = before.node(i).r;
    double r_next = after.node(i).r;
    if (graphical) {
      for (int a = 0; a < n; ++a) r_next += dt * cache[i].H(a) * cache[i].dF(n, a);
    }
    const double lhs = (r_next * r_next - r * r) / dt;
    worst = std::max(worst, std::abs(lhs - 2.0 * r * cache[i].H(n)));
  }
  return worst;
}

struct LineFit {
  double intercept, slope;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

// Zero crossing of the line fitted to (t, y) over the trailing rows.
double zero_crossing(const std::vector<FlowRow>& rows, std::size_t first,
                     double (*value)(const FlowRow&)) {
  const double t_ref = rows.back().t;
  std::vector<double> x, y;
  for (std::size_t k = first; k < rows.size(); ++k) {
    x.push_back(rows[k].t - t_ref);
    y.push_back(value(rows[k]));
  }
  const auto fit = least_squares(x, y);
  if (!(fit.slope < 0.0)) {
    throw InconclusiveError(kModule, "trailing window is not decreasing towards zero");
  }
  return t_ref - fit.intercept / fit.slope;
}

double inverse_curvature(const FlowRow& r) { return 1.0 / r.sup_II2; }
double min_radius2(const FlowRow& r) { return r.min_r2; }

}  // namespace

double FlowConfig::stability_constant() const {
  if (c_stab > 0.0) return c_stab;
  return integrator == Integrator::kEuler ? 0.2 : 0.4;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kMinRadius:
      return "min_r2";
    case StopReason::kCurvatureCap:
      return "sup_II2";
    case StopReason::kTimeLimit:
      return "t_max";
    case StopReason::kStepLimit:
      return "max_steps";
  }
  return "unknown";
}

double stable_dt(const DiscreteImmersion& im, const GeometryCache& cache, double c_stab) {
  const auto& mesh = im.mesh();
  double diffusive = std::numeric_limits<double>::infinity();
  double sup = 0.0;
  for (const auto& g : cache.nodes()) {
    double stiff = 0.0;
    for (int i = 0; i < im.m(); ++i) stiff += g.g_inv(i, i) / (mesh.spacing[i] * mesh.spacing[i]);
    diffusive = std::min(diffusive, 1.0 / stiff);
    sup = std::max(sup, g.II2);
  }
  return c_stab * std::min(diffusive, 1.0 / std::max(1.0, sup));
}

std::vector<ConeTangent> flow_velocity(const DiscreteImmersion& im, const GeometryCache& cache) {
  const int n = im.cone().base_dim();
  std::vector<ConeTangent> v(im.size());
  if (im.mode() == ImmersionMode::kGraphical) {
    for (std::size_t i = 0; i < im.size(); ++i) {
      v[i] = ConeTangent::Zero(n + 1);
      double speed = cache[i].H(n);
      for (int a = 0; a < n; ++a) speed -= cache[i].dF(n, a) * cache[i].H(a);
      v[i](n) = speed;
    }
    return v;
  }
  for (std::size_t i = 0; i < im.size(); ++i) v[i] = cache[i].H;
  if (im.mesh().topology == Topology::kInterval1D) {
    v.front().setZero();
    v.back().setZero();
  }
  return v;
}

FlowState step(const FlowState& state, double dt, const FlowConfig& config) {
  if (!(dt > 0.0)) throw ValidationError(kModule, "time step must be positive");
  GeometryCache cache(state.immersion);
  const double bound = stable_dt(state.immersion, cache, config.stability_constant());
  if (dt > bound * (1.0 + 1e-12)) {
    throw StabilityError(kModule, "dt = " + std::to_string(dt) + " exceeds the stability bound " +
                                      std::to_string(bound));
  }
  return step_with_cache(state, cache, dt, config);
}

double blowup_bound(const DiscreteImmersion& initial) {
  const double r = initial.max_r();
  return r * r / (2.0 * initial.m());
}

BlowupFit estimate_blowup_time(const std::vector<FlowRow>& rows, double window) {
  const std::size_t n = rows.size();
  const auto count = [&](double frac) {
    return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(frac * n)));
  };
  if (n < 8) throw InconclusiveError(kModule, "too few trace rows to estimate T");
  BlowupFit fit;
  fit.T = zero_crossing(rows, n - count(window), inverse_curvature);
  fit.T_half_window = zero_crossing(rows, n - count(0.5 * window), inverse_curvature);
  try {
    fit.T_radius = zero_crossing(rows, n - count(window), min_radius2);
  } catch (const InconclusiveError&) {
    fit.T_radius = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

FlowTrace run(const DiscreteImmersion& initial, const FlowConfig& config) {
  const double r_floor = 10.0 * initial.cone().r_min();
  if (initial.min_r() < r_floor) {
    throw ValidationError(kModule, "initial data comes within 10 r_min of the apex (min r = " +
                                       std::to_string(initial.min_r()) + ")");
  }
  if (config.record_every < 1) throw ValidationError(kModule, "record_every must be >= 1");

  FlowTrace trace;
  trace.m = initial.m();
  trace.c0 = initial.max_r() * initial.max_r();
  trace.theta_T = config.theta_T;
  const double c_stab = config.stability_constant();

  FlowState state{0.0, initial};
  std::size_t steps = 0;
  std::size_t recorded = 0;
  while (true) {
    GeometryCache cache(state.immersion);
    const auto& im = state.immersion;
    FlowRow row;
    row.t = state.t;
    row.volume = volume(im, cache);
    row.sup_II2 = sup_second_fundamental(cache);
    row.min_r2 = im.min_r() * im.min_r();
    row.max_r2 = im.max_r() * im.max_r();

    bool stop = true;
    if (row.min_r2 < config.stop_min_r2) {
      trace.stop = StopReason::kMinRadius;
    } else if (row.sup_II2 > config.stop_sup_II2) {
      trace.stop = StopReason::kCurvatureCap;
    } else if (std::isfinite(config.t_max) &&
               config.t_max - state.t <= 1e-12 * std::max(1.0, std::abs(config.t_max))) {
      trace.stop = StopReason::kTimeLimit;
    } else if (steps >= config.max_steps) {
      trace.stop = StopReason::kStepLimit;
    } else {
      stop = false;
    }
    const bool record = stop || steps % static_cast<std::size_t>(config.record_every) == 0;

    if (record) {
      if (config.lemma_residuals) row.lemma1_resid = lemma1_residual(im, cache);
      if (config.theta_T && state.t < *config.theta_T) {
        const auto sample = monotone_sample(im, cache, state.t, *config.theta_T);
        row.theta = sample.theta;
        row.dissipation = sample.dissipation;
        row.self_similar_max = sample.pointwise_max_residual;
      }
    }
    if (stop) {
      trace.rows.push_back(row);
      break;
    }

    double dt = std::min({stable_dt(im, cache, c_stab), config.dt_max, config.t_max - state.t});
    if (!(dt >= config.dt_min)) {
      throw NonConvergenceError("time step underflow (dt = " + std::to_string(dt) + ") at t = " +
                                    std::to_string(state.t),
                                state);
    }
    FlowState next = step_with_cache(state, cache, dt, config);
    if (record) {
      row.dt = dt;
      if (config.lemma_residuals) {
        row.lemma2_resid = lemma2_residual(im, cache, next.immersion, dt);
      }
      trace.rows.push_back(row);
      if (config.snapshot_every > 0 && recorded % config.snapshot_every == 0) {
        trace.snapshots.push_back(state);
      }
      ++recorded;
    }
    state = std::move(next);
    ++steps;
  }
  trace.final_state = state;

  if (trace.stop == StopReason::kMinRadius || trace.stop == StopReason::kCurvatureCap) {
    trace.blowup_detected = true;
    try {
      const auto fit = estimate_blowup_time(trace.rows);
      trace.T_est = fit.T;
      if (std::isfinite(fit.T_radius)) trace.T_est_radius = fit.T_radius;
    } catch (const InconclusiveError&) {
      // left unset; classify_singularity reports it
    }
  }
  return trace;
}

SingularityReport classify_singularity(const FlowTrace& trace, const ClassifierConfig& cfg) {
  SingularityReport rep;
  rep.blowup_bound = trace.c0 / (2.0 * trace.m);
  if (!trace.blowup_detected) return rep;
  rep.singular = true;

  const auto fit = estimate_blowup_time(trace.rows);
  const double drift = std::abs(fit.T - fit.T_half_window) / std::abs(fit.T);
  if (!(drift <= cfg.drift_tolerance)) {
    throw InconclusiveError(kModule, "blow-up time estimate drifts by " +
                                         std::to_string(100.0 * drift) +
                                         "% between fit windows");
  }
  rep.T_est = fit.T;
  const double tau_end = fit.T - trace.rows.back().t;
  if (!(tau_end > 0.0)) {
    throw InconclusiveError(kModule, "estimated blow-up time precedes the last trace row");
  }

  std::vector<double> products, ratios;
  for (const auto& row : trace.rows) {
    const double tau = fit.T - row.t;
    if (tau > 10.0 * tau_end) continue;
    products.push_back(row.sup_II2 * tau);
    ratios.push_back(row.min_r2 / tau);
    rep.r_min_trend.emplace_back(tau, row.min_r2);
  }
  if (products.size() < cfg.min_rows) {
    throw InconclusiveError(kModule, "only " + std::to_string(products.size()) +
                                         " trace rows in the final decade of T - t");
  }
  std::vector<double> sorted = products;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  rep.C_est = *std::max_element(products.begin(), products.end());
  rep.typeI = median > 0.0 && rep.C_est / median <= cfg.bounded_ratio;

  rep.K1_est = *std::min_element(ratios.begin(), ratios.end());
  rep.K2_est = *std::max_element(ratios.begin(), ratios.end());
  const bool to_apex = trace.rows.back().min_r2 < cfg.apex_fraction * trace.rows.front().min_r2;
  rep.typeIc = rep.typeI && to_apex && rep.K1_est > 0.0 &&
               rep.K2_est / rep.K1_est <= cfg.band_ratio;
  return rep;
}

void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  out << "t,volume,sup_II2,min_r2,max_r2,theta,lemma1_resid,lemma2_resid\n"
      << std::setprecision(17);
  for (const auto& r : trace.rows) {
    out << r.t << "," << r.volume << "," << r.sup_II2 << "," << r.min_r2 << "," << r.max_r2
        << "," << r.theta << "," << r.lemma1_resid << "," << r.lemma2_resid << "\n";
  }
}

std::string summary_json(const SingularityReport& report) {
  nlohmann::ordered_json j;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr; };
  j["T_est"] = num(report.T_est);
  j["blowup_bound"] = num(report.blowup_bound);
  j["typeI"] = report.typeI;
  j["C_est"] = num(report.C_est);
  j["typeIc"] = report.typeIc;
  j["K1_est"] = num(report.K1_est);
  j["K2_est"] = num(report.K2_est);
  return j.dump(2);
}

void write_summary_json(const std::filesystem::path& path, const SingularityReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  out << summary_json(report) << "\n";
}

}  // namespace coneflow
