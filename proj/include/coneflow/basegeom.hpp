#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coneflow/types.hpp"

namespace coneflow {

/// One coordinate axis of a global chart. Periodic axes identify lo with hi.
struct ChartAxis {
  double lo = 0.0;
  double hi = 0.0;
  bool periodic = false;

  double period() const { return hi - lo; }
};

/// Points with lo <= y[axis] <= hi are rejected as chart-degenerate.
struct ExclusionZone {
  int axis = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// A Riemannian manifold (N, g) described by a single global chart.
///
/// Derived classes provide the metric and its Levi-Civita connection in
/// chart coordinates; the public entry points validate the query point
/// against the chart (range and exclusion zones) and check that the metric
/// is positive definite. Evaluations are pure and may be issued
/// concurrently.
class BaseManifold {
 public:
  BaseManifold(std::string name, std::vector<ChartAxis> chart,
               std::vector<ExclusionZone> exclusions = {});
  virtual ~BaseManifold() = default;

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(chart_.size()); }
  const std::vector<ChartAxis>& chart() const { return chart_; }
  const std::vector<ExclusionZone>& exclusions() const { return exclusions_; }

  /// True when y lies in the chart and outside every exclusion zone.
  bool admissible(const Vec& y) const;

  /// g_{ab}(y). Throws ChartDegeneracyError outside the admissible region
  /// and NumericalError if the metric fails a Cholesky factorization.
  Mat metric_at(const Vec& y) const;
  /// Gamma^a_{bc}(y), symmetric in b, c.
  Christoffel christoffel_at(const Vec& y) const;
  /// sqrt(det g(y)).
  double volume_density_at(const Vec& y) const;

  /// Shortest signed representative of a coordinate difference on `axis`.
  double wrap_difference(int axis, double dy) const;

  /// Total volume of N when known in closed form.
  virtual std::optional<double> total_volume() const { return std::nullopt; }

  /// True when every chart axis is periodic (the chart is a flat torus of
  /// parameters and can carry a graphical mesh).
  bool fully_periodic() const;

 protected:
  virtual Mat metric_impl(const Vec& y) const = 0;
  virtual Christoffel christoffel_impl(const Vec& y) const = 0;

 private:
  void check_admissible(const Vec& y) const;

  std::string name_;
  std::vector<ChartAxis> chart_;
  std::vector<ExclusionZone> exclusions_;
};

using BasePtr = std::shared_ptr<const BaseManifold>;

/// Gamma^a_{bc} = 1/2 g^{ad}(d_b g_{dc} + d_c g_{db} - d_d g_{bc}), where
/// dg[k] holds the partial derivative of the metric along coordinate k.
Christoffel levi_civita(const Mat& g, const std::vector<Mat>& dg);

/// Circle of circumference 2*pi*rho, chart theta in [0, 2*pi), g = rho^2.
BasePtr make_circle(double rho = 1.0);
/// Flat torus with the given axis periods, g = identity.
BasePtr make_flat_torus(double period_x = 2.0 * M_PI,
                        double period_y = 2.0 * M_PI);
/// Unit round sphere in the polar chart (theta, phi), g = diag(1, sin^2 theta),
/// with the poles excluded up to `pole_exclusion`.
BasePtr make_round_sphere(double pole_exclusion = 1e-3);

/// A metric tabulated on a regular periodic grid, interpolated with
/// tensor-product periodic cubic splines (dimension 1 or 2).
///
/// `coords` holds the grid points (row-major over axes, last axis fastest)
/// and `metrics` the matching symmetric matrices.
BasePtr make_tabulated(std::string name, const std::vector<Vec>& coords,
                       const std::vector<Mat>& metrics);

/// Reads a whitespace-separated table `y_1 .. y_n g_11 g_12 .. g_nn`, one grid
/// point per line; '#' starts a comment. Axis periods are inferred as
/// (number of grid values) * (grid spacing).
BasePtr load_tabulated_metric(const std::filesystem::path& path);

}  // namespace coneflow
