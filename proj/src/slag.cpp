#include "coneflow/slag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

namespace coneflow {

namespace {
const char* kModule = "slag";
using cd = std::complex<double>;

// Product of all components except k.
cd partial_product(const CVec& w, int k) {
  cd p(1.0, 0.0);
  for (int j = 0; j < w.size(); ++j)
    if (j != k) p *= w(j);
  return p;
}

cd full_product(const CVec& w) {
  cd p(1.0, 0.0);
  for (int j = 0; j < w.size(); ++j) p *= w(j);
  return p;
}

bool real_part(int n, AngleKind kind) {
  if (kind == AngleKind::kReal) return true;
  if (kind == AngleKind::kImag) return false;
  return n % 2 == 0;
}

RVec constraints(const LevelSet& level, const CVec& w) {
  const int n = level.n;
  RVec g(n);
  g.head(n - 1) = moment_map(w) - level.c;
  g(n - 1) = angle_function(w, level.kind) - level.c_prime;
  return g;
}

// Pfaffian of an even antisymmetric matrix by expansion along the first row.
double pfaffian(const RMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1.0;
  double s = 0.0;
  for (int j = 1; j < n; ++j) {
    if (a(0, j) == 0.0) continue;
    std::vector<int> keep;
    for (int k = 1; k < n; ++k)
      if (k != j) keep.push_back(k);
    RMat minor(n - 2, n - 2);
    for (int p = 0; p < n - 2; ++p)
      for (int q = 0; q < n - 2; ++q) minor(p, q) = a(keep[p], keep[q]);
    s += ((j - 1) % 2 == 0 ? 1.0 : -1.0) * a(0, j) * pfaffian(minor);
  }
  return s;
}

int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<int> q = p;
  for (std::size_t i = 0; i < q.size(); ++i) {
    while (q[i] != static_cast<int>(i)) {
      std::swap(q[i], q[q[i]]);
      sign = -sign;
    }
  }
  return sign;
}

int gcd_of(const Eigen::VectorXi& v) {
  int g = 0;
  for (int i = 0; i < v.size(); ++i) g = std::gcd(g, std::abs(v(i)));
  return g;
}
}  // namespace

CVec to_complex(const RVec& x) {
  CVec w(x.size() / 2);
  for (int k = 0; k < w.size(); ++k) w(k) = cd(x(2 * k), x(2 * k + 1));
  return w;
}

RVec to_real(const CVec& w) {
  RVec x(2 * w.size());
  for (int k = 0; k < w.size(); ++k) {
    x(2 * k) = w(k).real();
    x(2 * k + 1) = w(k).imag();
  }
  return x;
}

double kahler_form(const RVec& u, const RVec& v) {
  return to_complex(u).dot(to_complex(v)).imag();
}

double flat_metric(const RVec& u, const RVec& v) { return u.dot(v); }

std::complex<double> holomorphic_volume(const RMat& frame) {
  const int n = static_cast<int>(frame.cols());
  if (frame.rows() != 2 * n) throw ValidationError(kModule, "frame must be 2n x n");
  Eigen::MatrixXcd m(n, n);
  for (int j = 0; j < n; ++j) m.col(j) = to_complex(frame.col(j));
  return m.determinant();
}

RVec moment_map(const CVec& w) {
  const int n = static_cast<int>(w.size());
  if (n < 1 || w.norm() == 0.0) throw DomainError(kModule, "moment map needs w != 0");
  RVec mu(n - 1);
  for (int j = 1; j < n; ++j) mu(j - 1) = std::norm(w(j)) - std::norm(w(0));
  return mu;
}

double angle_function(const CVec& w, AngleKind kind) {
  for (int k = 0; k < w.size(); ++k) {
    if (w(k) == cd(0.0, 0.0)) {
      throw DomainError(kModule, "component " + std::to_string(k + 1) +
                                     " vanishes; logarithmic coordinates do not exist");
    }
  }
  const cd p = full_product(w);
  return real_part(static_cast<int>(w.size()), kind) ? p.real() : p.imag();
}

RMat constraint_jacobian(const CVec& w, AngleKind kind) {
  const int n = static_cast<int>(w.size());
  RMat jac = RMat::Zero(n, 2 * n);
  for (int j = 1; j < n; ++j) {
    jac(j - 1, 2 * j) = 2.0 * w(j).real();
    jac(j - 1, 2 * j + 1) = 2.0 * w(j).imag();
    jac(j - 1, 0) = -2.0 * w(0).real();
    jac(j - 1, 1) = -2.0 * w(0).imag();
  }
  const bool re = real_part(n, kind);
  for (int k = 0; k < n; ++k) {
    const cd q = partial_product(w, k);  // dP/dw_k
    if (re) {
      jac(n - 1, 2 * k) = q.real();
      jac(n - 1, 2 * k + 1) = -q.imag();
    } else {
      jac(n - 1, 2 * k) = q.imag();
      jac(n - 1, 2 * k + 1) = q.real();
    }
  }
  return jac;
}

RMat tangent_frame(const CVec& w, AngleKind kind) {
  const int n = static_cast<int>(w.size());
  const RMat jac = constraint_jacobian(w, kind);
  Eigen::JacobiSVD<RMat> svd(jac, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(n - 1) > 1e-8 * s(0))) {
    throw FrameDegeneracyError(kModule, "constraint differentials are dependent at this point");
  }
  return svd.matrixV().rightCols(n);
}

CVec torus_action(const CVec& w, const RVec& phi) {
  CVec out = w;
  double total = 0.0;
  for (int j = 1; j < w.size(); ++j) {
    out(j) *= std::polar(1.0, phi(j - 1));
    total += phi(j - 1);
  }
  out(0) *= std::polar(1.0, -total);
  return out;
}

double SLagSample::max_residual() const {
  return std::max({residual_omega, residual_imOmega, residual_level});
}

double level_residual(const LevelSet& level, const CVec& w) {
  return constraints(level, w).cwiseAbs().maxCoeff();
}

double level_distance(const LevelSet& level, const CVec& w) {
  const RVec g = constraints(level, w);
  const RMat jac = constraint_jacobian(w, level.kind);
  return (jac.transpose() * (jac * jac.transpose()).ldlt().solve(g)).norm();
}

SLagCertificate certify_frame(const RMat& frame) {
  const int n = static_cast<int>(frame.cols());
  RMat unit = frame;
  for (int j = 0; j < n; ++j) {
    const double len = unit.col(j).norm();
    if (!(len > 0.0)) throw FrameDegeneracyError(kModule, "frame has a zero vector");
    unit.col(j) /= len;
  }
  if (!((unit.transpose() * unit).determinant() > 1e-8)) {
    throw FrameDegeneracyError(kModule, "frame vectors are nearly dependent");
  }
  Eigen::HouseholderQR<RMat> qr(unit);
  const RMat q = qr.householderQ() * RMat::Identity(unit.rows(), n);
  SLagCertificate cert;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      cert.residual_omega = std::max(cert.residual_omega, std::abs(kahler_form(q.col(i), q.col(j))));
  cert.residual_imOmega = std::abs(holomorphic_volume(q).imag());
  return cert;
}

SLagCertificate certify_special_lagrangian(const SLagSample& sample) {
  return certify_frame(sample.frame);
}

std::vector<SLagSample> sample_level_set(const LevelSet& level, std::size_t count,
                                         const SamplerConfig& cfg) {
  const int n = level.n;
  if (n < 2) throw ValidationError(kModule, "complex dimension must be >= 2");
  if (level.c.size() != n - 1) throw ValidationError(kModule, "c must have n - 1 entries");
  if (cfg.orbit_points < 1) throw ValidationError(kModule, "orbit_points must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  std::vector<SLagSample> out;
  out.reserve(count);
  const std::size_t max_attempts = 100 * count + 100;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > max_attempts) {
      throw ValidationError(kModule, "level set appears empty: no seed converged after " +
                                         std::to_string(max_attempts) + " attempts");
    }
    RVec x(2 * n);
    for (int k = 0; k < x.size(); ++k) x(k) = gauss(rng);
    bool converged = false;
    try {
      for (int it = 0; it < cfg.max_newton; ++it) {
        const CVec w = to_complex(x);
        const RVec g = constraints(level, w);
        if (g.cwiseAbs().maxCoeff() <= cfg.tolerance) {
          converged = true;
          break;
        }
        const RMat jac = constraint_jacobian(w, level.kind);
        const RVec y = (jac * jac.transpose()).ldlt().solve(g);
        x -= jac.transpose() * y;
        if (!x.allFinite()) break;
      }
    } catch (const DomainError&) {
      converged = false;
    }
    if (!converged || x.norm() < cfg.min_norm) continue;

    const CVec seed = to_complex(x);
    for (int k = 0; k < cfg.orbit_points && out.size() < count; ++k) {
      RVec phi(n - 1);
      for (int j = 0; j < n - 1; ++j) phi(j) = angle(rng);
      SLagSample s;
      s.point = k == 0 ? seed : torus_action(seed, phi);
      try {
        s.frame = tangent_frame(s.point, level.kind);
      } catch (const FrameDegeneracyError&) {
        break;
      }
      const auto cert = certify_frame(s.frame);
      s.residual_omega = cert.residual_omega;
      s.residual_imOmega = cert.residual_imOmega;
      s.residual_level = level_residual(level, s.point);
      out.push_back(std::move(s));
    }
  }
  return out;
}

NegativeControls negative_controls(const LevelSet& level, const std::vector<SLagSample>& samples,
                                   std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5a1a9}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NegativeControls out;
  out.random_frame_min = std::numeric_limits<double>::infinity();
  out.perturbed_point_min = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const int n = static_cast<int>(s.point.size());
    RMat frame(2 * n, n);
    for (int a = 0; a < 2 * n; ++a)
      for (int b = 0; b < n; ++b) frame(a, b) = gauss(rng);
    const auto cert = certify_frame(frame);
    out.random_frame_min = std::min(out.random_frame_min, std::max(cert.residual_omega, cert.residual_imOmega));

    const RMat jac = constraint_jacobian(s.point, level.kind);
    RVec mix(n);
    for (int k = 0; k < n; ++k) mix(k) = gauss(rng);
    const RVec normal = jac.transpose() * mix;
    const CVec pushed = to_complex(to_real(s.point) + 1e-2 * normal.normalized());
    out.perturbed_point_min = std::min(out.perturbed_point_min, level_distance(level, pushed));
  }
  return out;
}

LegendrianReport legendrian_cone_check(const std::vector<LegendrianSample>& samples) {
  LegendrianReport rep;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& smp = samples[s];
    const double norm = smp.point.norm();
    if (std::abs(norm - 1.0) > 1e-12) {
      throw ValidationError(kModule, "sample " + std::to_string(s) + ": point is not on the unit sphere");
    }
    const RVec radial = to_real(smp.point);                  // d/dr at r = 1
    const RVec reeb = to_real(cd(0.0, 1.0) * smp.point);     // J(r d/dr)
    std::vector<RVec> cone{radial};
    for (int j = 0; j < smp.frame.cols(); ++j) {
      const RVec v = smp.frame.col(j).normalized();
      const double eta = flat_metric(reeb, v);
      rep.max_eta = std::max(rep.max_eta, std::abs(eta));
      rep.max_identity_gap = std::max(rep.max_identity_gap, std::abs(kahler_form(radial, v) - eta));
      cone.push_back(v);
    }
    for (std::size_t i = 0; i < cone.size(); ++i)
      for (std::size_t j = i + 1; j < cone.size(); ++j)
        rep.max_cone_omega = std::max(rep.max_cone_omega, std::abs(kahler_form(cone[i], cone[j])));
  }
  return rep;
}

ToricDiagram flat_toric_diagram(int n) {
  ToricDiagram d;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXi l = Eigen::VectorXi::Zero(n);
    l(0) = 1;
    if (i > 0) l(i) = 1;
    d.lambda.push_back(l);
  }
  d.gamma = RVec::Zero(n);
  d.gamma(0) = -1.0;
  return d;
}

std::vector<std::string> validate_toric_diagram(const ToricDiagram& d) {
  std::vector<std::string> problems;
  const int n = static_cast<int>(d.gamma.size());
  if (d.height < 1) problems.push_back("height must be a positive integer");
  RMat span(n, static_cast<int>(d.lambda.size()));
  for (std::size_t i = 0; i < d.lambda.size(); ++i) {
    const auto& l = d.lambda[i];
    if (l.size() != n) {
      problems.push_back("lambda_" + std::to_string(i + 1) + " has the wrong dimension");
      return problems;
    }
    if (gcd_of(l) != 1) problems.push_back("lambda_" + std::to_string(i + 1) + " is not primitive");
    span.col(static_cast<int>(i)) = l.cast<double>();
    const double pairing = d.gamma.dot(l.cast<double>());
    if (std::abs(pairing + 1.0) > 1e-12) {
      problems.push_back("<gamma, lambda_" + std::to_string(i + 1) + "> = " +
                         std::to_string(pairing) + ", expected -1");
    }
  }
  if (d.lambda.empty() || Eigen::FullPivLU<RMat>(span).rank() < n) {
    problems.push_back("lambdas do not span R^n (cone has empty interior)");
  }
  const RVec lg = d.height * d.gamma;
  Eigen::VectorXi lgi(n);
  bool integral = true;
  for (int k = 0; k < n; ++k) {
    lgi(k) = static_cast<int>(std::lround(lg(k)));
    if (std::abs(lg(k) - lgi(k)) > 1e-12) integral = false;
  }
  if (!integral) {
    problems.push_back("height * gamma is not integral");
  } else if (gcd_of(lgi) != 1) {
    problems.push_back("height * gamma is not primitive");
  }
  return problems;
}

NormalizationCheck normalization_check(int n) {
  if (n < 1 || n > 5) throw ValidationError(kModule, "normalization check supports 1 <= n <= 5");
  const int d = 2 * n;
  const RMat basis = RMat::Identity(d, d);
  RMat w(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) w(a, b) = kahler_form(basis.col(a), basis.col(b));

  NormalizationCheck out;
  out.omega_top = pfaffian(w);

  // (Omega ^ Omegabar)(e_1..e_2n) as a sum over (n, n) shuffles.
  std::vector<int> perm(d);
  std::vector<bool> choose(d, false);
  std::fill(choose.begin(), choose.begin() + n, true);
  cd wedge(0.0, 0.0);
  do {
    std::vector<int> first, second;
    for (int k = 0; k < d; ++k) (choose[k] ? first : second).push_back(k);
    RMat fa(d, n), fb(d, n);
    for (int k = 0; k < n; ++k) {
      fa.col(k) = basis.col(first[k]);
      fb.col(k) = basis.col(second[k]);
    }
    std::copy(first.begin(), first.end(), perm.begin());
    std::copy(second.begin(), second.end(), perm.begin() + n);
    wedge += static_cast<double>(permutation_sign(perm)) * holomorphic_volume(fa) *
             std::conj(holomorphic_volume(fb));
  } while (std::prev_permutation(choose.begin(), choose.end()));

  const double sign = (n * (n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
  out.omega_omegabar = sign * std::pow(cd(0.0, 0.5), n) * wedge;
  out.mismatch = std::abs(out.omega_omegabar - out.omega_top);
  return out;
}

void write_slag_csv(const std::filesystem::path& path, const std::vector<SLagSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write " + path.string());
  const int n = samples.empty() ? 0 : static_cast<int>(samples.front().point.size());
  for (int k = 1; k <= n; ++k) out << "re_w" << k << ",im_w" << k << ",";
  out << "residual_omega,residual_imOmega\n" << std::setprecision(17);
  for (const auto& s : samples) {
    for (int k = 0; k < n; ++k) out << s.point(k).real() << "," << s.point(k).imag() << ",";
    out << s.residual_omega << "," << s.residual_imOmega << "\n";
  }
}

}  // namespace coneflow
