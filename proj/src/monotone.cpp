#include "coneflow/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace coneflow {

namespace {
const char* kModule = "monotone";

void check_horizon(double t, double T) {
  if (!(t < T)) {
    throw DomainError(kModule, "time " + std::to_string(t) + " is not before the horizon " +
                                   std::to_string(T));
  }
}
}  // namespace

double backward_heat_kernel(double y, double t, double T, int m) {
  check_horizon(t, T);
  const double tau = T - t;
  return std::pow(4.0 * M_PI * tau, -0.5 * m) * std::exp(-y * y / (4.0 * tau));
}

double huisken_functional(const DiscreteImmersion& im, const GeometryCache& cache, double t,
                          double T) {
  check_horizon(t, T);
  double theta = 0.0;
  for (std::size_t i = 0; i < im.size(); ++i) {
    theta += backward_heat_kernel(im.node(i).r, t, T, im.m()) * cache[i].sqrt_det *
             im.mesh().weight(i);
  }
  return theta;
}

double huisken_functional(const DiscreteImmersion& im, double t, double T) {
  return huisken_functional(im, GeometryCache(im), t, T);
}

SelfSimilarResidual self_similar_residual(const DiscreteImmersion& im,
                                          const GeometryCache& cache, double t, double T) {
  check_horizon(t, T);
  const double tau = T - t;
  const auto split = decompose_normal(im, cache, position_field(im));
  SelfSimilarResidual out;
  for (std::size_t i = 0; i < im.size(); ++i) {
    const Vec v = split.normal[i] / (2.0 * tau) + cache[i].H;
    const double v2 = std::max(0.0, v.dot(cache[i].ambient_metric * v));
    out.integral += backward_heat_kernel(im.node(i).r, t, T, im.m()) * v2 * cache[i].sqrt_det *
                    im.mesh().weight(i);
    out.pointwise_max = std::max(out.pointwise_max, std::sqrt(v2));
  }
  return out;
}

SelfSimilarResidual self_similar_residual(const DiscreteImmersion& im, double t, double T) {
  return self_similar_residual(im, GeometryCache(im), t, T);
}

ShrinkerResidual self_shrinker_residual(const DiscreteImmersion& im, double lambda) {
  GeometryCache cache(im);
  const auto split = decompose_normal(im, cache, position_field(im));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < im.size(); ++i) {
    const double r = im.node(i).r;
    const double w = std::exp(-r * r / 4.0) * cache[i].sqrt_det * im.mesh().weight(i);
    const Mat& G = cache[i].ambient_metric;
    num += w * cache[i].H.dot(G * split.normal[i]);
    den += w * split.normal[i].dot(G * split.normal[i]);
  }
  ShrinkerResidual out;
  out.lambda_star = den > 0.0 ? num / den : 0.0;
  for (std::size_t i = 0; i < im.size(); ++i) {
    const Mat& G = cache[i].ambient_metric;
    const Vec a = cache[i].H - lambda * split.normal[i];
    const Vec b = cache[i].H - out.lambda_star * split.normal[i];
    out.residual = std::max(out.residual, std::sqrt(std::max(0.0, a.dot(G * a))));
    out.residual_at_star = std::max(out.residual_at_star, std::sqrt(std::max(0.0, b.dot(G * b))));
  }
  return out;
}

MonotoneSample monotone_sample(const DiscreteImmersion& im, const GeometryCache& cache, double t,
                               double T) {
  const auto res = self_similar_residual(im, cache, t, T);
  return {t, huisken_functional(im, cache, t, T), res.integral, res.pointwise_max};
}

DissipationReport dissipation_check(const std::vector<MonotoneSample>& s) {
  if (s.size() < 3) {
    throw ValidationError(kModule, "dissipation check needs at least 3 samples, got " +
                                       std::to_string(s.size()));
  }
  DissipationReport rep;
  rep.min_dissipation = s.front().dissipation;
  double running_min = s.front().theta;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k > 0 && !(s[k].t > s[k - 1].t)) {
      throw ValidationError(kModule, "sample " + std::to_string(k) + ": times must increase");
    }
    rep.min_dissipation = std::min(rep.min_dissipation, s[k].dissipation);
    rep.max_theta_increase = std::max(rep.max_theta_increase, s[k].theta - running_min);
    running_min = std::min(running_min, s[k].theta);
    if (k == 0 || k + 1 == s.size()) continue;
    const double dtheta = (s[k + 1].theta - s[k - 1].theta) / (s[k + 1].t - s[k - 1].t);
    const double mismatch = std::abs(dtheta + s[k].dissipation);
    rep.rows.push_back({s[k].t, s[k].theta, s[k].dissipation, dtheta, mismatch});
    rep.max_mismatch = std::max(rep.max_mismatch, mismatch);
  }
  return rep;
}

void write_monotonicity_csv(const std::filesystem::path& path, const DissipationReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  out << "t,theta,dissipation,dtheta_dt,mismatch\n" << std::setprecision(17);
  for (const auto& r : report.rows) {
    out << r.t << "," << r.theta << "," << r.dissipation << "," << r.dtheta_dt << ","
        << r.mismatch << "\n";
  }
}

ThetaSensitivity theta_sensitivity(const DiscreteImmersion& im, double t, double T, double rel) {
  GeometryCache cache(im);
  auto at = [&](double horizon) {
    return t < horizon ? huisken_functional(im, cache, t, horizon)
                       : std::numeric_limits<double>::quiet_NaN();
  };
  return {at(T), at(T * (1.0 - rel)), at(T * (1.0 + rel))};
}

}  // namespace coneflow
