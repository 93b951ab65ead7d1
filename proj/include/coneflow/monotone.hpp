#pragma once

#include <filesystem>
#include <vector>

#include "coneflow/immersion.hpp"

namespace coneflow {

/// rho_T(y, t) = (4 pi (T - t))^{-m/2} exp(-y^2 / (4 (T - t))).
double backward_heat_kernel(double y, double t, double T, int m);

/// Integral of rho_T(r(F), t) against dv_g, node-wise product trapezoid rule.
double huisken_functional(const DiscreteImmersion& im, const GeometryCache& cache, double t,
                          double T);
double huisken_functional(const DiscreteImmersion& im, double t, double T);

struct SelfSimilarResidual {
  double integral = 0.0;       // int rho |F^perp / (2(T-t)) + H|^2
  double pointwise_max = 0.0;  // max |F^perp / (2(T-t)) + H|
};
SelfSimilarResidual self_similar_residual(const DiscreteImmersion& im,
                                          const GeometryCache& cache, double t, double T);
SelfSimilarResidual self_similar_residual(const DiscreteImmersion& im, double t, double T);

struct ShrinkerResidual {
  double residual = 0.0;     // max |H - lambda F^perp| at the given lambda
  double lambda_star = 0.0;  // minimizer of the weighted L2 residual
  double residual_at_star = 0.0;
};
/// Weight for the fit is exp(-r^2/4) dv. lambda_star is 0 when F^perp vanishes.
ShrinkerResidual self_shrinker_residual(const DiscreteImmersion& im, double lambda);

struct MonotoneSample {
  double t = 0.0;
  double theta = 0.0;
  double dissipation = 0.0;
  double pointwise_max_residual = 0.0;
};
MonotoneSample monotone_sample(const DiscreteImmersion& im, const GeometryCache& cache, double t,
                               double T);

struct DissipationRow {
  double t, theta, dissipation, dtheta_dt, mismatch;
};
struct DissipationReport {
  std::vector<DissipationRow> rows;  // interior samples only
  double max_mismatch = 0.0;
  double max_theta_increase = 0.0;   // max over t1 < t2 of theta(t2) - theta(t1)
  double min_dissipation = 0.0;
};
/// Centered dTheta/dt against -dissipation. Needs >= 3 samples sharing T.
DissipationReport dissipation_check(const std::vector<MonotoneSample>& samples);

void write_monotonicity_csv(const std::filesystem::path& path, const DissipationReport& report);

struct ThetaSensitivity {
  double theta, theta_minus, theta_plus;
};
/// Theta at T and at T(1 -+ rel).
ThetaSensitivity theta_sensitivity(const DiscreteImmersion& im, double t, double T,
                                   double rel = 0.01);

}  // namespace coneflow
