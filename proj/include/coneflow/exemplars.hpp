#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "coneflow/immersion.hpp"

namespace coneflow {

/// Blow-up time r0^2 / (2m) of the shrinking cross-section.
double cross_section_blowup_time(double r0, int m);

/// Graph r = sqrt(r0^2 - 2mt) over a fully periodic base; q defaults to p.
DiscreteImmersion shrinking_cross_section(BasePtr base, double r0, double t, int p, int q = 0,
                                          FdOrder order = FdOrder::kSecond);

/// An exact MCF Phi(., s) in the base: node values at parameter time s on a
/// fixed parameter mesh.
struct BaseFlow {
  BasePtr base;
  Mesh mesh;
  double s_min = 0.0;
  double s_max = std::numeric_limits<double>::infinity();
  std::function<std::vector<Vec>(double s)> at;
};

/// Great-circle equator theta = pi/2 in the round sphere, static in s.
BaseFlow static_equator(int nodes);
/// Base flow from samples (s_k, Phi(., s_k)), linear in s between samples.
BaseFlow sampled_base_flow(BasePtr base, Mesh mesh, std::vector<double> s,
                           std::vector<std::vector<Vec>> values);

/// alpha(t) = a - log(1 - t/T) / (2m).
double drift_parameter(double a, double T, int m, double t);

/// F(p, t) = (Phi(p, alpha(t)), sqrt(2m(T - t))).
DiscreteImmersion drifting_example(const BaseFlow& phi, double a, double T, int m, double t);

/// Euclidean circle of radius sqrt(a^2 - 2t) about (d, 0), in polar cone
/// coordinates over the unit circle. Needs a > 0 and d != a.
DiscreteImmersion offcenter_circle(double d, double a, double t, int nodes = 128,
                                   FdOrder order = FdOrder::kSecond);

/// Radial segment {theta0} x [r_a, r_b] with clamped ends.
DiscreteImmersion radial_ray(double theta0 = 0.0, double r_a = 1.0, double r_b = 2.0,
                             int nodes = 64);

/// Graph r = r0 (1 + amplitude cos(mode theta)) over the unit circle.
DiscreteImmersion perturbed_shrinker(double amplitude = 0.05, int mode = 2, double r0 = 1.0,
                                     int nodes = 256);

/// Selector strings accepted by the command line.
const std::vector<std::string>& exemplar_names();

}  // namespace coneflow
