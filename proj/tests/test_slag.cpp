#include <doctest.h>

#include <fstream>
#include <random>

#include "coneflow/slag.hpp"

using namespace coneflow;

namespace {
using cd = std::complex<double>;

CVec cvec(std::initializer_list<cd> v) {
  CVec w(static_cast<int>(v.size()));
  int k = 0;
  for (auto z : v) w(k++) = z;
  return w;
}

RMat frame_of(std::initializer_list<CVec> cols) {
  const int n = static_cast<int>(cols.size());
  RMat f(2 * n, n);
  int j = 0;
  for (const auto& c : cols) f.col(j++) = to_real(c);
  return f;
}

LevelSet level(int n, double cprime, AngleKind kind = AngleKind::kParity) {
  LevelSet l;
  l.n = n;
  l.c = RVec::Zero(n - 1);
  l.c_prime = cprime;
  l.kind = kind;
  return l;
}
}  // namespace

TEST_CASE("forms on C^n") {
  const RVec e1 = to_real(cvec({1.0, 0.0}));
  const RVec ie1 = to_real(cvec({cd(0, 1), 0.0}));
  const RVec e2 = to_real(cvec({0.0, 1.0}));
  CHECK(kahler_form(e1, ie1) == 1.0);
  CHECK(kahler_form(ie1, e1) == -1.0);
  CHECK(kahler_form(e1, e2) == 0.0);
  CHECK(flat_metric(e1, ie1) == 0.0);
  CHECK(holomorphic_volume(frame_of({cvec({1.0, 0.0}), cvec({0.0, 1.0})})) == cd(1.0, 0.0));
  for (int n = 1; n <= 4; ++n) {
    const auto nc = normalization_check(n);
    CHECK(nc.omega_top == doctest::Approx(1.0));
    CHECK(nc.mismatch < 1e-14);
  }
}

TEST_CASE("moment map and angle function") {
  CHECK(moment_map(cvec({1.0, 1.0}))(0) == 0.0);
  const auto mu = moment_map(cvec({1.0, std::sqrt(2.0), std::sqrt(3.0)}));
  CHECK(mu(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mu(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(moment_map(cvec({0.0, 0.0})), DomainError);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
  const CVec w = cvec({cd(0.3, -1.2), cd(0.7, 0.4), cd(-1.1, 0.2)});
  const RVec mu0 = moment_map(w);
  for (int k = 0; k < 100; ++k) {
    RVec phi(2);
    phi << u(rng), u(rng);
    const CVec v = torus_action(w, phi);
    CHECK((moment_map(v) - mu0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(angle_function(v) - angle_function(w)) < 1e-14);
  }

  CHECK(angle_function(cvec({1.0, 1.0})) == 1.0);
  CHECK(angle_function(cvec({1.0, 1.0, cd(0, 1)})) == 1.0);
  CHECK(angle_function(cvec({std::polar(1.0, M_PI / 4), std::polar(1.0, -M_PI / 4)})) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(angle_function(cvec({1.0, cd(0, 1)}), AngleKind::kImag) == 1.0);
  CHECK_THROWS_AS(angle_function(cvec({1.0, 0.0})), DomainError);
}

TEST_CASE("constraint jacobian matches finite differences") {
  const CVec w = cvec({cd(0.3, -1.2), cd(0.7, 0.4), cd(-1.1, 0.2)});
  for (auto kind : {AngleKind::kReal, AngleKind::kImag}) {
    const RMat jac = constraint_jacobian(w, kind);
    const RVec x = to_real(w);
    for (int a = 0; a < x.size(); ++a) {
      RVec xp = x, xm = x;
      const double h = 1e-6;
      xp(a) += h;
      xm(a) -= h;
      RVec gp(3), gm(3);
      gp << moment_map(to_complex(xp)), angle_function(to_complex(xp), kind);
      gm << moment_map(to_complex(xm)), angle_function(to_complex(xm), kind);
      CHECK(((gp - gm) / (2 * h) - jac.col(a)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("analytic tangent frame at the symmetric point") {
  const CVec p = cvec({1.0, 1.0});
  // Kernel of d mu and d Re(w1 w2) at (1, 1) is span{(i, 0), (0, i)}.
  const RMat good = frame_of({cvec({cd(0, 1), 0.0}), cvec({0.0, cd(0, 1)})});
  CHECK((constraint_jacobian(p) * good).cwiseAbs().maxCoeff() == 0.0);
  const auto cert = certify_frame(good);
  CHECK(cert.residual_omega == 0.0);
  CHECK(cert.residual_imOmega == 0.0);
  // {(i, -i), (1, 1)} is Lagrangian but (1, 1) leaves the level set and the
  // frame has phase pi/2.
  const RMat other = frame_of({cvec({cd(0, 1), cd(0, -1)}), cvec({1.0, 1.0})});
  CHECK(certify_frame(other).residual_omega == 0.0);
  CHECK(certify_frame(other).residual_imOmega == doctest::Approx(1.0));
  CHECK(std::abs((constraint_jacobian(p) * other.col(1)).norm()) > 1.0);

  const RMat computed = tangent_frame(p);
  CHECK((constraint_jacobian(p) * computed).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(certify_frame(computed).residual_imOmega < 1e-15);
}

TEST_CASE("certificate invariance under frame changes") {
  const CVec w = cvec({cd(0.3, -1.2), cd(0.7, 0.4), cd(-1.1, 0.2)});
  const RMat f = tangent_frame(w);
  const auto base = certify_frame(f);
  RMat g = f;
  g.col(0).swap(g.col(2));
  g.col(1) *= 37.0;
  g.col(2) *= 1e-3;
  const auto c = certify_frame(g);
  CHECK(std::abs(c.residual_omega - base.residual_omega) < 1e-12);
  CHECK(std::abs(c.residual_imOmega - base.residual_imOmega) < 1e-12);
  RMat bad = f;
  bad.col(1) = bad.col(0) + 1e-6 * bad.col(2);
  CHECK_THROWS_AS(certify_frame(bad), FrameDegeneracyError);
  CHECK_THROWS_AS(tangent_frame(cvec({1.0, 0.0, 0.0})), FrameDegeneracyError);
}

TEST_CASE("sampled level sets certify") {
  for (auto [n, cprime] : {std::pair{2, 1.0}, std::pair{3, 0.0}, std::pair{4, -0.5}}) {
    CAPTURE(n);
    const auto lv = level(n, cprime);
    const auto samples = sample_level_set(lv, 300);
    REQUIRE(samples.size() == 300);
    for (const auto& s : samples) {
      CHECK(s.residual_level <= 1e-10);
      CHECK(s.residual_omega <= 1e-10);
      CHECK(s.residual_imOmega <= 1e-10);
      CHECK(std::abs((s.frame.transpose() * s.frame).determinant()) > 1e-8);
    }
  }
  // Harvey-Lawson real locus.
  const RMat f = tangent_frame(cvec({2.0, 2.0, 2.0}));
  CHECK(certify_frame(f).residual_imOmega < 1e-12);
}

TEST_CASE("sampling is seeded") {
  const auto lv = level(3, 0.2);
  const auto a = sample_level_set(lv, 50);
  const auto b = sample_level_set(lv, 50);
  SamplerConfig other;
  other.seed = 43;
  const auto c = sample_level_set(lv, 50, other);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].point == b[k].point);
  CHECK(a[0].point != c[0].point);
}

TEST_CASE("parity rule") {
  // Even n: Re levels are special Lagrangian, Im levels have phase pi/2.
  for (int n : {2, 3, 4}) {
    CAPTURE(n);
    const AngleKind match = n % 2 == 0 ? AngleKind::kReal : AngleKind::kImag;
    const AngleKind wrong = n % 2 == 0 ? AngleKind::kImag : AngleKind::kReal;
    for (const auto& s : sample_level_set(level(n, 0.7, match), 50)) CHECK(s.max_residual() < 1e-10);
    for (const auto& s : sample_level_set(level(n, 0.7, wrong), 50)) {
      CHECK(s.residual_omega < 1e-10);
      CHECK(s.residual_imOmega > 0.999);
    }
  }
}

TEST_CASE("negative controls") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  int typical = 0;
  for (int k = 0; k < 1000; ++k) {
    RMat f(4, 2);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 2; ++b) f(a, b) = g(rng);
    const auto c = certify_frame(f);
    CHECK(std::max(c.residual_omega, c.residual_imOmega) >= 1e-3);
    if (c.residual_omega > 0.1) ++typical;
  }
  CHECK(typical > 700);

  const auto lv = level(2, 1.0);
  for (const auto& s : sample_level_set(lv, 200)) {
    const RMat jac = constraint_jacobian(s.point);
    // Move along the constraint normal so the point leaves L by ~1e-2.
    const RVec normal = jac.transpose() * (jac * jac.transpose()).ldlt().solve(RVec::Ones(2));
    const CVec pushed = to_complex(to_real(s.point) + 1e-2 * normal / normal.norm());
    CHECK(level_residual(lv, pushed) >= 1e-3);
    CHECK(level_distance(lv, pushed) == doctest::Approx(1e-2).epsilon(0.02));
    CHECK(level_distance(lv, s.point) < 1e-12);
  }
}

TEST_CASE("Legendrian cone check") {
  std::vector<LegendrianSample> great, hopf;
  for (int k = 0; k < 16; ++k) {
    const double th = 2 * M_PI * k / 16;
    const cd e = std::polar(1.0, th);
    great.push_back({cvec({e / std::sqrt(2.0), std::conj(e) / std::sqrt(2.0)}),
                     to_real(cvec({cd(0, 1) * e, cd(0, -1) * std::conj(e)}))});
    hopf.push_back({cvec({e, 0.0}), to_real(cvec({cd(0, 1) * e, 0.0}))});
  }
  const auto g = legendrian_cone_check(great);
  CHECK(g.max_eta <= 1e-12);
  CHECK(g.max_cone_omega <= 1e-12);
  CHECK(g.max_identity_gap <= 1e-12);
  const auto h = legendrian_cone_check(hopf);
  CHECK(h.max_eta == doctest::Approx(1.0));
  CHECK(h.max_cone_omega == doctest::Approx(1.0));
  CHECK(h.max_identity_gap <= 1e-12);
  hopf[3].point *= 2.0;
  CHECK_THROWS_AS(legendrian_cone_check(hopf), ValidationError);
}

TEST_CASE("toric diagram validation") {
  for (int n = 2; n <= 5; ++n) CHECK(validate_toric_diagram(flat_toric_diagram(n)).empty());
  auto d = flat_toric_diagram(3);
  d.lambda[1] = Eigen::Vector3i(2, 2, 0);
  const auto p = validate_toric_diagram(d);
  CHECK(p.size() == 2);  // not primitive, pairing -2
  d = flat_toric_diagram(3);
  d.gamma *= 0.5;
  d.height = 2;
  CHECK(validate_toric_diagram(d).size() == 3);  // pairing fails for every lambda
  d = flat_toric_diagram(2);
  d.gamma = RVec::Constant(2, -0.5);
  d.lambda = {Eigen::Vector2i(1, 1)};
  d.height = 2;
  // 2 gamma = (-1, -1) is primitive and <gamma, lambda> = -1, but one ray has no interior.
  const auto q = validate_toric_diagram(d);
  REQUIRE(q.size() == 1);
  CHECK(q[0].find("span") != std::string::npos);
}

TEST_CASE("slag csv") {
  const auto s = sample_level_set(level(2, 1.0), 5);
  const auto path = std::filesystem::temp_directory_path() / "coneflow_slag_test.csv";
  write_slag_csv(path, s);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "re_w1,im_w1,re_w2,im_w2,residual_omega,residual_imOmega");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 5);
}

TEST_CASE("negative control helper") {
  const auto lv = level(3, 0.0);
  const auto s = sample_level_set(lv, 200);
  const auto nc = negative_controls(lv, s);
  CHECK(nc.random_frame_min >= 1e-3);
  CHECK(nc.perturbed_point_min >= 1e-3);
  const auto again = negative_controls(lv, s);
  CHECK(again.random_frame_min == nc.random_frame_min);
}
