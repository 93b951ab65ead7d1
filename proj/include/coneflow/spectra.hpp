#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "coneflow/types.hpp"

namespace coneflow {

class MeshValidationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Sigma as a periodic 1D grid (circle of circumference L) or a closed
/// oriented triangle surface.
struct SigmaMesh {
  enum class Kind { kCircle, kTriangulated };

  Kind kind = Kind::kCircle;
  double length = 2.0 * M_PI;
  int nodes = 0;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;

  static SigmaMesh circle(double length, int nodes);
  /// Validates; throws MeshValidationError on open, non-manifold or
  /// inconsistently oriented input.
  static SigmaMesh triangulated(std::vector<Eigen::Vector3d> vertices,
                                std::vector<std::array<int, 3>> faces);
  /// Unit icosphere, 10 * 4^k + 2 vertices.
  static SigmaMesh icosphere(int subdivisions);
  static SigmaMesh load_off(const std::filesystem::path& path);
  /// `circle:L=<value>:nodes=<count>`, `icosphere:<k>` or a path to an OFF file.
  static SigmaMesh from_selector(const std::string& selector);

  std::size_t size() const;
  int euler_characteristic() const;
  int components() const;
  void validate() const;
  std::string describe() const;
};

/// Delta = M^{-1} K with K positive semidefinite.
struct LaplacianOperator {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;
  bool lumped = false;
};

LaplacianOperator laplacian_operator(const SigmaMesh& mesh, bool lumped_mass = false);

/// max |K_ij - K_ji|.
double operator_asymmetry(const LaplacianOperator& op);

/// Apply Delta with a lumped mass (differences from the centre node, so
/// constants map to exactly zero).
Eigen::VectorXd apply_laplacian(const SigmaMesh& mesh, const Eigen::VectorXd& f);

/// The `count` generalized eigenvalues closest to sigma, ascending.
std::vector<double> eigenvalues_near(const LaplacianOperator& op, double sigma, int count);

struct EigenCluster {
  double mean = 0.0;
  std::vector<double> values;
  int multiplicity() const { return static_cast<int>(values.size()); }
};

/// Group ascending values: a value joins the current cluster when it lies within
/// tol * max(1, |mean|) of the cluster mean.
std::vector<EigenCluster> cluster_eigenvalues(const std::vector<double>& values, double tol);

struct SpectralConfig {
  std::optional<double> tolerance;  // 2% for triangulations, 0.1% for circles
  int window = 24;                  // eigenvalues computed around 2n
  bool lumped_mass = false;
};

struct SpectralResult {
  int n = 0;
  double target = 0.0;  // 2n
  double tolerance = 0.0;
  std::vector<double> eigenvalues;
  std::vector<EigenCluster> clusters;
  int deformation_dim = 0;
  int ohnita_count = 1;  // 1 + deformation_dim, counting the Reeb direction
  std::vector<std::string> warnings;
};

SpectralResult deformation_dimension(const SigmaMesh& mesh, int n, const SpectralConfig& cfg = {});

std::string spectral_json(const SpectralResult& result);

/// max |Delta phi - 2n phi|.
double coclosed_violation(const SigmaMesh& mesh, int n, const Eigen::VectorXd& phi);
/// beta = -r dr, i.e. phi = -1, gamma = 0: returns 2n.
double reeb_exclusion_check(const SigmaMesh& mesh, int n);

/// For beta = r phi dr + r^2 gamma on C(Sigma), Sigma a circle: phi on nodes,
/// gamma on edges (edge e joins nodes e and e + 1).
struct FormResiduals {
  double closed = 0.0;    // max |2 gamma - d phi|
  double coclosed = 0.0;  // max |d* d phi - 2n phi|
};
FormResiduals normal_form_predicates(const SigmaMesh& circle, int n, const Eigen::VectorXd& phi,
                                     const Eigen::VectorXd& gamma);
/// d beta and d* beta evaluated on the cone at radius r, scaled to the
/// predicate normalization (closed = |d beta| / r, coclosed = 2 |div beta|).
FormResiduals cone_form_residuals(const SigmaMesh& circle, int n, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& gamma, double r = 1.0);

}  // namespace coneflow
