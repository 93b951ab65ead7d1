#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coneflow/types.hpp"

namespace coneflow {

// C^n is identified with R^{2n} as (Re w1, Im w1, ..., Re wn, Im wn);
// omega = (i/2) sum dw ^ dwbar, gbar = Re <u, v>, Omega = dw1 ^ ... ^ dwn.
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

class FrameDegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

CVec to_complex(const RVec& x);
RVec to_real(const CVec& w);

double kahler_form(const RVec& u, const RVec& v);
double flat_metric(const RVec& u, const RVec& v);
/// Omega(e_1, ..., e_n): the complex determinant of the frame columns.
std::complex<double> holomorphic_volume(const RMat& frame);

/// (|w2|^2 - |w1|^2, ..., |wn|^2 - |w1|^2).
RVec moment_map(const CVec& w);

enum class AngleKind { kParity, kReal, kImag };
/// Re(w1...wn) for even n, Im(w1...wn) for odd n; kReal / kImag force a part.
double angle_function(const CVec& w, AngleKind kind = AngleKind::kParity);

/// Constraint differentials (n-1 moment components, then the angle), n x 2n.
RMat constraint_jacobian(const CVec& w, AngleKind kind = AngleKind::kParity);
/// Orthonormal basis of the kernel of constraint_jacobian, 2n x n.
RMat tangent_frame(const CVec& w, AngleKind kind = AngleKind::kParity);

/// T^{n-1} action w1 -> e^{-i sum phi} w1, wj -> e^{i phi_j} wj.
CVec torus_action(const CVec& w, const RVec& phi);

struct SLagSample {
  CVec point;
  RMat frame;
  double residual_omega = 0.0;
  double residual_imOmega = 0.0;
  double residual_level = 0.0;

  double max_residual() const;
};

struct LevelSet {
  int n = 2;
  RVec c;
  double c_prime = 0.0;
  AngleKind kind = AngleKind::kParity;
};

/// max of |mu - c| and |angle - c'|.
double level_residual(const LevelSet& level, const CVec& w);
/// First-order distance to the level set: length of the minimum-norm
/// Gauss-Newton correction J^T (J J^T)^{-1} G.
double level_distance(const LevelSet& level, const CVec& w);

struct SamplerConfig {
  std::uint64_t seed = 42;
  int orbit_points = 10;     // torus images per Newton-corrected seed
  int max_newton = 50;
  double tolerance = 1e-13;
  double min_norm = 1e-3;    // reject seeds collapsing to the apex
};

/// Points on L = mu^{-1}(c) cap {angle = c'} with certified frames.
std::vector<SLagSample> sample_level_set(const LevelSet& level, std::size_t count,
                                         const SamplerConfig& cfg = {});

/// Smallest residuals seen on controls that must fail: random n-frames at the
/// sample points, and sample points pushed 1e-2 off L along the constraint normals.
struct NegativeControls {
  double random_frame_min = 0.0;     // min over frames of max(residual_omega, residual_imOmega)
  double perturbed_point_min = 0.0;  // min level_distance
};
NegativeControls negative_controls(const LevelSet& level, const std::vector<SLagSample>& samples,
                                   std::uint64_t seed = 42);

struct SLagCertificate {
  double residual_omega = 0.0;
  double residual_imOmega = 0.0;
};
/// Residuals on the orthonormalized frame. Throws FrameDegeneracyError when the
/// normalized Gram determinant is below 1e-8.
SLagCertificate certify_special_lagrangian(const SLagSample& sample);
SLagCertificate certify_frame(const RMat& frame);

/// A point of Sigma on the unit sphere with tangent vectors of Sigma.
struct LegendrianSample {
  CVec point;
  RMat frame;  // 2n x k
};
struct LegendrianReport {
  double max_eta = 0.0;           // |eta(v)| over unit frame vectors
  double max_cone_omega = 0.0;    // |omega| over pairs of frame + {d/dr}
  double max_identity_gap = 0.0;  // |omega(d/dr, v) - eta(v)|
};
LegendrianReport legendrian_cone_check(const std::vector<LegendrianSample>& samples);

struct ToricDiagram {
  std::vector<Eigen::VectorXi> lambda;
  RVec gamma;
  int height = 1;
};
/// lambda_1 = (1, 0, ..., 0), lambda_j = (1, e_j), gamma = (-1, 0, ..., 0).
ToricDiagram flat_toric_diagram(int n);
/// Problems found with the diagram (primitive lambdas spanning Z^n, l gamma
/// primitive and integral, <gamma, lambda_i> = -1); empty when valid.
std::vector<std::string> validate_toric_diagram(const ToricDiagram& d);

struct NormalizationCheck {
  double omega_top = 0.0;  // omega^n / n! on the standard basis
  std::complex<double> omega_omegabar;  // (-1)^{n(n-1)/2} (i/2)^n Omega ^ Omegabar
  double mismatch = 0.0;
};
NormalizationCheck normalization_check(int n);

void write_slag_csv(const std::filesystem::path& path, const std::vector<SLagSample>& samples);

}  // namespace coneflow
