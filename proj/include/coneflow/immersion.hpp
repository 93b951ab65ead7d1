#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "coneflow/conegeom.hpp"

namespace coneflow {

enum class Topology {
  kPeriodic1D,  // closed curve, P nodes
  kInterval1D,  // open segment with clamped end nodes
  kPeriodic2D,  // torus grid, P x Q nodes
};

/// Uniform parameter grid for a compact m-manifold (m = 1 or 2).
struct Mesh {
  Topology topology = Topology::kPeriodic1D;
  int p = 0;
  int q = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> spacing{0.0, 0.0};

  static Mesh periodic_1d(int p, double period = 2.0 * M_PI, double lo = 0.0);
  static Mesh interval_1d(int p, double a, double b);
  static Mesh periodic_2d(int p, int q, double period_x = 2.0 * M_PI,
                          double period_y = 2.0 * M_PI);
  /// One node per point of a regular grid over a fully periodic base chart.
  static Mesh base_copy(const BaseManifold& base, int p, int q = 0);

  int param_dim() const { return topology == Topology::kPeriodic2D ? 2 : 1; }
  std::size_t size() const { return static_cast<std::size_t>(p) * q; }
  bool periodic() const { return topology != Topology::kInterval1D; }
  Vec param(std::size_t node) const;
  /// Quadrature weight of a node (trapezoidal rule).
  double weight(std::size_t node) const;
  /// Smallest parameter spacing.
  double h_min() const;
};

enum class ImmersionMode {
  kGeneric,    // every node carries (y, r)
  kGraphical,  // F(p) = (p, r(p)) over a fixed base grid
};

enum class FdOrder { kSecond = 2, kFourth = 4 };

/// A mesh of a compact m-manifold M with one cone point per node.
class DiscreteImmersion {
 public:
  DiscreteImmersion(std::shared_ptr<const Cone> cone, Mesh mesh,
                    std::vector<ConePoint> nodes,
                    ImmersionMode mode = ImmersionMode::kGeneric,
                    FdOrder order = FdOrder::kSecond);

  /// Graph r = radius(p) over the base grid described by `mesh`.
  static DiscreteImmersion graphical(std::shared_ptr<const Cone> cone, Mesh mesh,
                                     const std::vector<double>& radius,
                                     FdOrder order = FdOrder::kSecond);

  const Cone& cone() const { return *cone_; }
  const std::shared_ptr<const Cone>& cone_ptr() const { return cone_; }
  const Mesh& mesh() const { return mesh_; }
  ImmersionMode mode() const { return mode_; }
  FdOrder fd_order() const { return order_; }
  void set_fd_order(FdOrder order) { order_ = order; }

  std::size_t size() const { return nodes_.size(); }
  int m() const { return mesh_.param_dim(); }
  const std::vector<ConePoint>& nodes() const { return nodes_; }
  const ConePoint& node(std::size_t i) const { return nodes_[i]; }

  /// Replace node values; radial values must stay above r_min.
  void set_nodes(std::vector<ConePoint> nodes);
  void set_radius(std::size_t i, double r);

  double min_r() const;
  double max_r() const;

 private:
  void validate() const;

  std::shared_ptr<const Cone> cone_;
  Mesh mesh_;
  std::vector<ConePoint> nodes_;
  ImmersionMode mode_;
  FdOrder order_;
};

/// Per-node geometry of F: M -> C(N).
struct NodeGeometry {
  Mat dF;                        // (n+1) x m, columns d_i F
  std::array<Vec, 3> ddF;        // d_i d_j F for (i,j) = (0,0), (0,1), (1,1)
  Mat ambient_metric;            // cone metric at F(p)
  Mat g;                         // induced metric g_ij
  Mat g_inv;
  double sqrt_det = 0.0;
  std::array<Vec, 3> christoffel_m;  // Gamma^k_{ij} of (M, F*gbar), k as vector
  std::array<Vec, 3> II;         // II^alpha_{ij}
  Vec H;                         // mean curvature vector H^alpha
  double II2 = 0.0;              // |II|^2
  double H2 = 0.0;               // |H|^2
};

inline int pair_index(int i, int j) { return i + j; }

/// Immutable geometry cache for one snapshot.
class GeometryCache {
 public:
  explicit GeometryCache(const DiscreteImmersion& im);

  std::size_t size() const { return nodes_.size(); }
  const NodeGeometry& operator[](std::size_t i) const { return nodes_[i]; }
  const std::vector<NodeGeometry>& nodes() const { return nodes_; }

 private:
  std::vector<NodeGeometry> nodes_;
};

/// Finite-difference gradient and Hessian of a scalar field at one node.
struct ScalarDerivatives {
  Vec d;                  // d_i f
  std::array<double, 3> dd{0.0, 0.0, 0.0};  // d_i d_j f by pair_index
};
ScalarDerivatives scalar_derivatives(const Mesh& mesh, FdOrder order,
                                     const std::vector<double>& f,
                                     std::size_t node);

// --- Operations on immersions -------------------------------------------

std::vector<Mat> induced_metric(const DiscreteImmersion& im);
std::vector<ConeTangent> mean_curvature(const DiscreteImmersion& im);
std::vector<ConeTangent> mean_curvature(const GeometryCache& cache);

/// H^{n+1} = Delta_M r(F) - r(F) g^{ij} dF^a/dx^i dF^b/dx^j g_ab(y).
std::vector<double> radial_mean_curvature(const DiscreteImmersion& im,
                                          const GeometryCache& cache);
std::vector<double> radial_mean_curvature(const DiscreteImmersion& im);

struct NormalSplit {
  std::vector<ConeTangent> tangential;
  std::vector<ConeTangent> normal;
};
NormalSplit decompose_normal(const DiscreteImmersion& im, const GeometryCache& cache,
                             const std::vector<ConeTangent>& v);
NormalSplit decompose_normal(const DiscreteImmersion& im,
                             const std::vector<ConeTangent>& v);

/// Position vector field r d/dr at every node.
std::vector<ConeTangent> position_field(const DiscreteImmersion& im);

/// Delta f = g^{ij}(d_i d_j f - Gamma^k_{ij} d_k f).
std::vector<double> laplace_beltrami(const DiscreteImmersion& im,
                                     const GeometryCache& cache,
                                     const std::vector<double>& f);
std::vector<double> laplace_beltrami(const DiscreteImmersion& im,
                                     const std::vector<double>& f);

double volume(const DiscreteImmersion& im, const GeometryCache& cache);
double volume(const DiscreteImmersion& im);

double sup_second_fundamental(const GeometryCache& cache);
double sup_second_fundamental(const DiscreteImmersion& im);

/// max |Delta r^2 - 2(gbar(H, F) + m)| over nodes.
double lemma1_residual(const DiscreteImmersion& im, const GeometryCache& cache);
/// max |m - r^2 g^{ij} dF^a_i dF^b_j g_ab - g^{ij} d_i r d_j r| over nodes.
double trace_split_residual(const DiscreteImmersion& im, const GeometryCache& cache);

/// CSV with header `node_index, x_params..., y_coords..., r`.
void write_snapshot_csv(const std::filesystem::path& path, const DiscreteImmersion& im);

}  // namespace coneflow
