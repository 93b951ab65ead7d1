#pragma once

#include "coneflow/basegeom.hpp"

namespace coneflow {

/// A point (y, r) of the cone C(N) = N x R+. The apex is not part of the
/// cone, so r must stay above the cone's r_min.
struct ConePoint {
  Vec base;
  double r = 1.0;
};

/// Tangent vector in cone coordinates (y^1..y^n, r); the radial component
/// is the last entry.
using ConeTangent = Vec;

/// The Riemannian cone (C(N), dr^2 + r^2 g) over a base manifold.
class Cone {
 public:
  static constexpr double kDefaultRMin = 1e-8;

  explicit Cone(BasePtr base, double r_min = kDefaultRMin);

  const BaseManifold& base() const { return *base_; }
  const BasePtr& base_ptr() const { return base_; }
  int base_dim() const { return base_->dim(); }
  int dim() const { return base_->dim() + 1; }
  double r_min() const { return r_min_; }

  /// Throws DomainError if r <= r_min or the base point is not admissible.
  void validate(const ConePoint& p) const;

  /// diag(r^2 g(y), 1) in the (y, r) ordering.
  Mat metric_at(const ConePoint& p) const;
  Christoffel christoffel_at(const ConePoint& p) const;

  /// Both of the above from a single base evaluation.
  void metric_and_christoffel(const ConePoint& p, Mat& metric,
                              Christoffel& gamma) const;

  /// r d/dr.
  ConeTangent position_vector(const ConePoint& p) const;

  double inner(const ConePoint& p, const ConeTangent& u,
               const ConeTangent& v) const;
  double norm(const ConePoint& p, const ConeTangent& v) const;

 private:
  BasePtr base_;
  double r_min_;
};

/// Assemble the cone connection from the base metric and connection at y:
///   Gamma^a_{bc} = base Gamma^a_{bc}, Gamma^{r}_{ab} = -r g_{ab},
///   Gamma^a_{r b} = Gamma^a_{b r} = delta^a_b / r, all other terms zero.
Christoffel cone_christoffel(const Mat& base_metric, const Christoffel& base_gamma,
                             double r);

}  // namespace coneflow
