#include "coneflow/exemplars.hpp"

#include <algorithm>
#include <cmath>

namespace coneflow {

namespace {
const char* kModule = "exemplars";
}

double cross_section_blowup_time(double r0, int m) { return r0 * r0 / (2.0 * m); }

DiscreteImmersion shrinking_cross_section(BasePtr base, double r0, double t, int p, int q,
                                          FdOrder order) {
  if (!(r0 > 0.0)) throw ValidationError(kModule, "r0 must be positive");
  const int m = base->dim();
  const double T = cross_section_blowup_time(r0, m);
  if (!(t >= 0.0 && t < T)) {
    throw DomainError(kModule, "cross-section needs 0 <= t < T = " + std::to_string(T));
  }
  auto cone = std::make_shared<const Cone>(std::move(base));
  auto mesh = Mesh::base_copy(cone->base(), p, q);
  const double r = std::sqrt(r0 * r0 - 2.0 * m * t);
  return DiscreteImmersion::graphical(cone, mesh, std::vector<double>(mesh.size(), r), order);
}

BaseFlow static_equator(int nodes) {
  BaseFlow phi;
  phi.base = make_round_sphere();
  phi.mesh = Mesh::periodic_1d(nodes);
  phi.s_min = -std::numeric_limits<double>::infinity();
  const Mesh mesh = phi.mesh;
  phi.at = [mesh](double) {
    std::vector<Vec> y(mesh.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = Vec(2);
      y[i] << M_PI / 2, mesh.param(i)(0);
    }
    return y;
  };
  return phi;
}

BaseFlow sampled_base_flow(BasePtr base, Mesh mesh, std::vector<double> s,
                           std::vector<std::vector<Vec>> values) {
  if (s.size() < 2 || s.size() != values.size()) {
    throw ValidationError(kModule, "sampled base flow needs >= 2 matching samples");
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k > 0 && !(s[k] > s[k - 1])) {
      throw ValidationError(kModule, "sample " + std::to_string(k) + ": s must increase");
    }
    if (values[k].size() != mesh.size()) {
      throw ValidationError(kModule, "sample " + std::to_string(k) + ": wrong node count");
    }
  }
  BaseFlow phi;
  phi.base = std::move(base);
  phi.mesh = mesh;
  phi.s_min = s.front();
  phi.s_max = s.back();
  phi.at = [s = std::move(s), values = std::move(values)](double x) {
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const std::size_t k = std::clamp<std::size_t>(it - s.begin(), 1, s.size() - 1);
    const double w = (x - s[k - 1]) / (s[k] - s[k - 1]);
    std::vector<Vec> out(values[k].size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * values[k - 1][i] + w * values[k][i];
    return out;
  };
  return phi;
}

double drift_parameter(double a, double T, int m, double t) {
  if (!(t < T)) throw DomainError(kModule, "drift parameter needs t < T");
  return a - std::log(1.0 - t / T) / (2.0 * m);
}

DiscreteImmersion drifting_example(const BaseFlow& phi, double a, double T, int m, double t) {
  if (!(T > 0.0)) throw ValidationError(kModule, "horizon must be positive");
  if (!(t >= 0.0 && t < T)) throw DomainError(kModule, "drifting example needs 0 <= t < T");
  if (m != phi.mesh.param_dim()) {
    throw ValidationError(kModule, "m does not match the base flow's parameter dimension");
  }
  const double s = drift_parameter(a, T, m, t);
  if (s < phi.s_min || s > phi.s_max) {
    throw DomainError(kModule, "base flow is not sampled at s = " + std::to_string(s));
  }
  const double beta = std::sqrt(2.0 * m * (T - t));
  const auto y = phi.at(s);
  std::vector<ConePoint> nodes(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) nodes[i] = {y[i], beta};
  return DiscreteImmersion(std::make_shared<const Cone>(phi.base), phi.mesh, std::move(nodes));
}

DiscreteImmersion offcenter_circle(double d, double a, double t, int nodes, FdOrder order) {
  if (!(a > 0.0) || !(d >= 0.0)) throw DomainError(kModule, "need a > 0 and d >= 0");
  if (d == a) throw DomainError(kModule, "circle through the apex (d = a)");
  if (!(t >= 0.0 && t < 0.5 * a * a)) throw DomainError(kModule, "need 0 <= t < a^2/2");
  const double radius = std::sqrt(a * a - 2.0 * t);
  if (std::abs(d - radius) < 1e-12 * (d + radius)) {
    throw DomainError(kModule, "circle reaches the apex at this time");
  }
  std::vector<ConePoint> pts(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double s = 2.0 * M_PI * k / nodes;
    const double x = d + radius * std::cos(s), y = radius * std::sin(s);
    Vec th(1);
    th(0) = std::atan2(y, x);
    pts[k] = {th, std::hypot(x, y)};
  }
  return DiscreteImmersion(std::make_shared<const Cone>(make_circle()), Mesh::periodic_1d(nodes),
                           std::move(pts), ImmersionMode::kGeneric, order);
}

DiscreteImmersion radial_ray(double theta0, double r_a, double r_b, int nodes) {
  if (!(r_a > 0.0 && r_b > r_a)) throw DomainError(kModule, "need 0 < r_a < r_b");
  auto mesh = Mesh::interval_1d(nodes, r_a, r_b);
  std::vector<ConePoint> pts(nodes);
  for (int i = 0; i < nodes; ++i) {
    Vec y(1);
    y(0) = theta0;
    pts[i] = {y, mesh.param(i)(0)};
  }
  return DiscreteImmersion(std::make_shared<const Cone>(make_circle()), mesh, std::move(pts));
}

DiscreteImmersion perturbed_shrinker(double amplitude, int mode, double r0, int nodes) {
  if (!(std::abs(amplitude) < 1.0) || !(r0 > 0.0)) {
    throw DomainError(kModule, "need |amplitude| < 1 and r0 > 0");
  }
  auto cone = std::make_shared<const Cone>(make_circle());
  auto mesh = Mesh::base_copy(cone->base(), nodes);
  std::vector<double> r(mesh.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = r0 * (1.0 + amplitude * std::cos(mode * mesh.param(i)(0)));
  }
  return DiscreteImmersion::graphical(cone, mesh, r);
}

const std::vector<std::string>& exemplar_names() {
  static const std::vector<std::string> names{"shrinking-cross-section", "drifting-example",
                                              "offcenter-circle", "radial-ray",
                                              "perturbed-shrinker"};
  return names;
}

}  // namespace coneflow
