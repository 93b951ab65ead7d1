#include "coneflow/conegeom.hpp"

#include <cmath>
#include <string>

namespace coneflow {

namespace {
const char* kModule = "conegeom";
}

Cone::Cone(BasePtr base, double r_min) : base_(std::move(base)), r_min_(r_min) {
  if (!base_) throw ValidationError(kModule, "cone requires a base manifold");
  if (!(r_min_ > 0.0)) throw ValidationError(kModule, "r_min must be positive");
}

void Cone::validate(const ConePoint& p) const {
  if (!(p.r > r_min_)) {
    throw DomainError(kModule, "radial coordinate " + std::to_string(p.r) +
                                   " is at or below r_min (the apex is excluded)");
  }
  if (p.base.size() != base_dim()) {
    throw DomainError(kModule, "base point has wrong dimension");
  }
}

Christoffel cone_christoffel(const Mat& g, const Christoffel& base_gamma, double r) {
  const int n = static_cast<int>(g.rows());
  Christoffel gamma(n + 1);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) gamma(a, b, c) = base_gamma(a, b, c);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) gamma(n, a, b) = -r * g(a, b);
    gamma(a, n, a) = 1.0 / r;
    gamma(a, a, n) = 1.0 / r;
  }
  return gamma;
}

void Cone::metric_and_christoffel(const ConePoint& p, Mat& metric,
                                  Christoffel& gamma) const {
  validate(p);
  const int n = base_dim();
  const Mat g = base_->metric_at(p.base);
  metric = Mat::Zero(n + 1, n + 1);
  metric.topLeftCorner(n, n) = p.r * p.r * g;
  metric(n, n) = 1.0;
  gamma = cone_christoffel(g, base_->christoffel_at(p.base), p.r);
}

Mat Cone::metric_at(const ConePoint& p) const {
  validate(p);
  const int n = base_dim();
  Mat m = Mat::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = p.r * p.r * base_->metric_at(p.base);
  m(n, n) = 1.0;
  return m;
}

Christoffel Cone::christoffel_at(const ConePoint& p) const {
  validate(p);
  return cone_christoffel(base_->metric_at(p.base), base_->christoffel_at(p.base), p.r);
}

ConeTangent Cone::position_vector(const ConePoint& p) const {
  validate(p);
  ConeTangent v = ConeTangent::Zero(dim());
  v(base_dim()) = p.r;
  return v;
}

double Cone::inner(const ConePoint& p, const ConeTangent& u, const ConeTangent& v) const {
  return u.dot(metric_at(p) * v);
}

double Cone::norm(const ConePoint& p, const ConeTangent& v) const {
  return std::sqrt(std::max(0.0, inner(p, v, v)));
}

}  // namespace coneflow
