#include <doctest.h>

#include <fstream>
#include <random>

#include "coneflow/spectra.hpp"

using namespace coneflow;

namespace {
// Discrete periodic second-difference spectrum: (4/h^2) sin^2(pi k / N).
double circle_eigen(double length, int nodes, int k) {
  const double h = length / nodes;
  const double s = std::sin(M_PI * k / nodes);
  return 4.0 * s * s / (h * h);
}

Eigen::VectorXd random_trig(int p, double length, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(p);
  for (int k = 0; k <= 4; ++k) {
    const double a = g(rng), b = g(rng);
    for (int i = 0; i < p; ++i) {
      const double x = 2.0 * M_PI * k * i / p;
      f(i) += a * std::cos(x) + b * std::sin(x);
    }
  }
  (void)length;
  return f;
}
}  // namespace

TEST_CASE("mesh construction and validation") {
  const auto c = SigmaMesh::from_selector("circle:L=6.2831853:nodes=512");
  CHECK(c.kind == SigmaMesh::Kind::kCircle);
  CHECK(c.nodes == 512);
  CHECK(c.length == doctest::Approx(6.2831853));
  CHECK_THROWS_AS(SigmaMesh::from_selector("circle:L=1:nodes=2"), MeshValidationError);
  CHECK_THROWS_AS(SigmaMesh::from_selector("circle:L=1"), MeshValidationError);
  CHECK_THROWS_AS(SigmaMesh::from_selector("circle:L=1:nodes=8:x=2"), MeshValidationError);
  CHECK_THROWS_AS(SigmaMesh::from_selector("circle:L=abc:nodes=8"), MeshValidationError);

  for (int k = 0; k <= 3; ++k) {
    const auto s = SigmaMesh::icosphere(k);
    CHECK(s.vertices.size() == static_cast<std::size_t>(10 * (1 << (2 * k)) + 2));
    CHECK(s.euler_characteristic() == 2);
    CHECK(s.components() == 1);
    for (const auto& t : s.faces) {
      const Eigen::Vector3d nrm = (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]);
      CHECK(nrm.dot(s.vertices[t[0]]) > 0.0);
    }
  }

  auto ico = SigmaMesh::icosphere(0);
  auto open = ico.faces;
  open.pop_back();
  CHECK_THROWS_AS(SigmaMesh::triangulated(ico.vertices, open), MeshValidationError);
  auto flipped = ico.faces;
  std::swap(flipped[3][0], flipped[3][1]);
  CHECK_THROWS_AS(SigmaMesh::triangulated(ico.vertices, flipped), MeshValidationError);
  auto extra = ico.vertices;
  extra.emplace_back(0, 0, 0);
  CHECK_THROWS_AS(SigmaMesh::triangulated(extra, ico.faces), MeshValidationError);
  // Two icosahedra glued at a vertex: every edge is fine but the star is pinched.
  auto v = ico.vertices;
  auto f = ico.faces;
  for (int i = 1; i < 12; ++i) v.push_back(ico.vertices[i] + Eigen::Vector3d(3, 0, 0));
  for (auto t : ico.faces) {
    for (int& idx : t) idx = idx == 0 ? 0 : idx + 11;
    f.push_back(t);
  }
  CHECK_THROWS_AS(SigmaMesh::triangulated(v, f), MeshValidationError);
}

TEST_CASE("OFF loading") {
  const auto ico = SigmaMesh::icosphere(1);
  const auto path = std::filesystem::temp_directory_path() / "coneflow_ico.off";
  {
    std::ofstream out(path);
    out << "OFF\n# icosphere\n" << ico.vertices.size() << " " << ico.faces.size() << " 0\n";
    out.precision(17);
    for (const auto& p : ico.vertices) out << p.x() << " " << p.y() << " " << p.z() << "\n";
    for (const auto& t : ico.faces) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  const auto m = SigmaMesh::from_selector(path.string());
  CHECK(m.vertices.size() == ico.vertices.size());
  CHECK(m.faces == ico.faces);
  const auto bad = std::filesystem::temp_directory_path() / "coneflow_bad.off";
  {
    std::ofstream out(bad);
    out << "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n";
  }
  CHECK_THROWS_AS(SigmaMesh::load_off(bad), MeshValidationError);
  CHECK_THROWS_AS(SigmaMesh::load_off("/nonexistent.off"), MeshValidationError);
}

TEST_CASE("Laplacian operator properties") {
  for (const auto& mesh : {SigmaMesh::circle(2 * M_PI, 64), SigmaMesh::icosphere(2)}) {
    for (bool lumped : {false, true}) {
      const auto op = laplacian_operator(mesh, lumped);
      CHECK(operator_asymmetry(op) <= 1e-12);
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<int>(mesh.size()));
      CHECK((op.stiffness * one).cwiseAbs().maxCoeff() < 1e-12);
      const auto ev = eigenvalues_near(op, -1.0, 4);
      CHECK(std::abs(ev[0]) < 1e-10);
      CHECK(ev[1] > 0.5);  // zero has multiplicity one
    }
  }
  const auto c = SigmaMesh::circle(2 * M_PI, 64);
  CHECK(apply_laplacian(c, Eigen::VectorXd::Constant(64, 3.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("circle spectrum") {
  const auto op = laplacian_operator(SigmaMesh::circle(2 * M_PI, 512));
  const auto ev = eigenvalues_near(op, 0.0, 9);
  for (int k = 1; k <= 4; ++k) {
    CHECK(ev[2 * k - 1] == doctest::Approx(circle_eigen(2 * M_PI, 512, k)).epsilon(1e-10));
    CHECK(ev[2 * k] == doctest::Approx(circle_eigen(2 * M_PI, 512, k)).epsilon(1e-10));
  }
  CHECK(std::abs(ev[1] - 1.0) < 1e-4);
  CHECK(std::abs(ev[2] - 1.0) < 1e-4);
}

TEST_CASE("sphere spectrum converges to l(l+1)") {
  double prev_err = 1e9;
  for (int sub = 2; sub <= 4; ++sub) {
    const auto op = laplacian_operator(SigmaMesh::icosphere(sub));
    const auto ev = eigenvalues_near(op, 6.0, 16);
    const auto cl = cluster_eigenvalues(ev, 0.05);
    REQUIRE(cl.size() >= 4);
    const double want[] = {0, 2, 6, 12};
    const int mult[] = {1, 3, 5, 7};
    double err = 0.0;
    for (int l = 0; l < 4; ++l) {
      CHECK(cl[l].multiplicity() == mult[l]);
      err = std::max(err, std::abs(cl[l].mean - want[l]));
    }
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("shift-invert agrees with the dense solver") {
  const auto op = laplacian_operator(SigmaMesh::icosphere(3));
  const Eigen::MatrixXd k(op.stiffness), m(op.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m, Eigen::EigenvaluesOnly);
  std::vector<double> all(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  const auto near = eigenvalues_near(op, 6.0, 20);  // n = 642 uses the dense path
  std::sort(all.begin(), all.end(), [](double a, double b) { return std::abs(a - 6) < std::abs(b - 6); });
  all.resize(20);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 20; ++i) CHECK(near[i] == doctest::Approx(all[i]).epsilon(1e-10));
  const auto big = laplacian_operator(SigmaMesh::icosphere(4));  // 2562 vertices, iterative path
  const Eigen::MatrixXd kb(big.stiffness), mb(big.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> esb(kb, mb, Eigen::EigenvaluesOnly);
  std::vector<double> ref(esb.eigenvalues().data(), esb.eigenvalues().data() + 16);
  const auto got = eigenvalues_near(big, 6.0, 16);
  for (int i = 0; i < 16; ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-9));
}

TEST_CASE("clustering") {
  const auto c = cluster_eigenvalues({0.0, 1e-13, 1.99, 2.0, 2.01, 6.0}, 0.01);
  REQUIRE(c.size() == 3);
  CHECK(c[0].multiplicity() == 2);
  CHECK(c[1].multiplicity() == 3);
  CHECK(c[1].mean == doctest::Approx(2.0));
}

TEST_CASE("deformation dimension") {
  const auto circ = deformation_dimension(SigmaMesh::circle(2 * M_PI, 512), 2);
  CHECK(circ.deformation_dim == 2);
  CHECK(circ.ohnita_count == 3);
  CHECK(circ.warnings.empty());
  const auto wide = deformation_dimension(SigmaMesh::circle(4 * M_PI, 512), 2);
  CHECK(wide.deformation_dim == 2);
  // Circumference 2.5 pi: spectrum (0.8 k)^2 skips 4.
  const auto miss = deformation_dimension(SigmaMesh::circle(2.5 * M_PI, 512), 2);
  CHECK(miss.deformation_dim == 0);
  CHECK(miss.ohnita_count == 1);
  // Circumference 3 pi: k = 3 gives (2 * 3 / 3)^2 = 4, so the hit is real.
  const auto three = deformation_dimension(SigmaMesh::circle(3 * M_PI, 512), 2);
  CHECK(three.deformation_dim == 2);
  // A circle tuned so that 4 sits just outside the band triggers a warning.
  const double L = 2 * M_PI * (1 + 0.0008);
  const auto edge = deformation_dimension(SigmaMesh::circle(L, 512), 2);
  CHECK(edge.deformation_dim == 0);
  CHECK(!edge.warnings.empty());
  CHECK_THROWS_AS(deformation_dimension(SigmaMesh::circle(2 * M_PI, 64), 1), ValidationError);

  const auto json = spectral_json(circ);
  CHECK(json.find("\"deformation_dim\": 2") != std::string::npos);
  CHECK(json.find("\"eigen_clusters\"") == json.find('"'));
}

TEST_CASE("Reeb exclusion") {
  const auto c = SigmaMesh::circle(2 * M_PI, 128);
  CHECK(reeb_exclusion_check(c, 2) == 4.0);
  CHECK(reeb_exclusion_check(c, 3) == 6.0);
  CHECK(reeb_exclusion_check(SigmaMesh::icosphere(2), 3) == 6.0);
  CHECK(coclosed_violation(c, 2, Eigen::VectorXd::Zero(128)) == 0.0);
}

TEST_CASE("normal form predicates agree with cone exterior calculus") {
  const int p = 512;
  const auto c = SigmaMesh::circle(2 * M_PI, p);
  const double h = c.length / p;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2;
    const Eigen::VectorXd phi = random_trig(p, c.length, rng);
    Eigen::VectorXd half_dphi(p);
    for (int e = 0; e < p; ++e) half_dphi(e) = 0.5 * (phi((e + 1) % p) - phi(e)) / h;
    for (double eps : {0.0, 0.3}) {
      Eigen::VectorXd gamma = half_dphi;
      for (int e = 0; e < p; ++e) gamma(e) += eps * g(rng);
      const double r = 0.5 + trial * 0.1;
      const auto pred = normal_form_predicates(c, n, phi, gamma);
      const auto direct = cone_form_residuals(c, n, phi, gamma, r);
      CHECK(std::abs(pred.closed - direct.closed) <= 1e-6 * std::max(1.0, pred.closed));
      if (eps == 0.0) {
        CHECK(pred.closed < 1e-9);
        CHECK(std::abs(pred.coclosed - direct.coclosed) <= 1e-6 * std::max(1.0, pred.coclosed));
      } else {
        CHECK(pred.closed > 1e-3);
      }
    }
  }
  // phi = cos 2x with gamma = d phi / 2 is closed and coclosed for n = 2 up to O(h^2).
  Eigen::VectorXd phi(p), gamma(p);
  for (int i = 0; i < p; ++i) phi(i) = std::cos(2 * i * h);
  for (int e = 0; e < p; ++e) gamma(e) = 0.5 * (phi((e + 1) % p) - phi(e)) / h;
  const auto direct = cone_form_residuals(c, 2, phi, gamma, 1.3);
  CHECK(direct.closed < 1e-9);
  CHECK(direct.coclosed < 1e-3);
  CHECK(normal_form_predicates(c, 2, phi, gamma).coclosed < 1e-3);
}
