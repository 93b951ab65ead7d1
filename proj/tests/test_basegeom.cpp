#include <doctest.h>

#include <fstream>
#include <iomanip>
#include <random>

#include "coneflow/basegeom.hpp"
#include "oracles.hpp"

using namespace coneflow;

namespace {
Vec point(std::initializer_list<double> v) {
  Vec y(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) y(i++) = x;
  return y;
}

// Max FD-vs-analytic Christoffel error at step h, and at h/2.
std::pair<double, double> christoffel_errors(const BaseManifold& m, const Vec& y, double h) {
  auto metric = [&](const Vec& z) { return m.metric_at(z); };
  const auto exact = m.christoffel_at(y);
  return {oracle::max_gamma_diff(exact, oracle::fd_levi_civita(metric, y, h), m.dim()),
          oracle::max_gamma_diff(exact, oracle::fd_levi_civita(metric, y, h / 2), m.dim())};
}
}  // namespace

TEST_CASE("built-in metrics in closed form") {
  auto circle = make_circle();
  CHECK(circle->metric_at(point({1.3}))(0, 0) == 1.0);
  CHECK(circle->christoffel_at(point({0.2}))(0, 0, 0) == 0.0);
  CHECK(make_circle(0.5)->metric_at(point({2.0}))(0, 0) == doctest::Approx(0.25));

  auto sphere = make_round_sphere();
  const Mat g = sphere->metric_at(point({M_PI / 2, 0.0}));
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(1.0));
  CHECK(g(0, 1) == 0.0);

  auto torus = make_flat_torus();
  CHECK(torus->metric_at(point({0.4, 5.0})).isIdentity());
  const auto gt = torus->christoffel_at(point({0.4, 5.0}));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) CHECK(gt(a, b, c) == 0.0);
}

TEST_CASE("round sphere Christoffels at theta = pi/3") {
  auto sphere = make_round_sphere();
  const double th = M_PI / 3;
  const auto gamma = sphere->christoffel_at(point({th, 1.0}));
  CHECK(gamma(0, 1, 1) == doctest::Approx(-std::sin(th) * std::cos(th)).epsilon(1e-14));
  CHECK(gamma(1, 0, 1) == doctest::Approx(1.0 / std::tan(th)).epsilon(1e-14));
  CHECK(gamma(1, 1, 0) == gamma(1, 0, 1));
  auto metric = [&](const Vec& z) { return sphere->metric_at(z); };
  CHECK(oracle::max_gamma_diff(gamma, oracle::fd_levi_civita(metric, point({th, 1.0}), 1e-5), 2) <
        1e-8);
}

TEST_CASE("volume density is sqrt det g") {
  auto sphere = make_round_sphere();
  const Vec y = point({0.7, 2.0});
  CHECK(sphere->volume_density_at(y) == std::sqrt(sphere->metric_at(y).determinant()));
  CHECK(make_circle(2.0)->volume_density_at(point({1.0})) == doctest::Approx(2.0));
}

TEST_CASE("pole exclusion zone is a chart degeneracy") {
  auto sphere = make_round_sphere(1e-3);
  CHECK_THROWS_AS(sphere->metric_at(point({0.0, 1.0})), ChartDegeneracyError);
  CHECK_THROWS_AS(sphere->christoffel_at(point({M_PI - 1e-4, 1.0})), ChartDegeneracyError);
  CHECK_NOTHROW(sphere->metric_at(point({2e-3, 1.0})));
  CHECK_FALSE(sphere->admissible(point({-0.5, 0.0})));
}

TEST_CASE("Christoffels match FD Levi-Civita at second order on random points") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> theta(0.2, M_PI - 0.2), phi(0.0, 2 * M_PI);
  auto sphere = make_round_sphere();
  double min_order = 10.0;
  for (int k = 0; k < 100; ++k) {
    const Vec y = point({theta(rng), phi(rng)});
    const auto [e1, e2] = christoffel_errors(*sphere, y, 1e-2);
    if (e1 > 1e-11) min_order = std::min(min_order, oracle::observed_order(e1, e2));
  }
  CHECK(min_order >= 1.9);

  // Flat built-ins: FD differences of a constant metric vanish.
  for (auto base : {make_circle(), make_circle(0.5), make_flat_torus()}) {
    for (int k = 0; k < 100; ++k) {
      Vec y(base->dim());
      for (int a = 0; a < base->dim(); ++a) y(a) = phi(rng);
      CHECK(christoffel_errors(*base, y, 1e-2).first < 1e-12);
    }
  }
}

TEST_CASE("wrap_difference picks the short representative") {
  auto circle = make_circle();
  CHECK(circle->wrap_difference(0, 2 * M_PI - 0.1) == doctest::Approx(-0.1));
  CHECK(circle->wrap_difference(0, -2 * M_PI + 0.1) == doctest::Approx(0.1));
  auto sphere = make_round_sphere();
  CHECK(sphere->wrap_difference(0, 3.0) == 3.0);
}

TEST_CASE("tabulated metric reproduces a smooth periodic metric") {
  // g = diag(1 + 0.3 sin x, 2 + 0.2 cos y) + offdiag 0.1 sin(x+y) on a 32x32 grid.
  const int nx = 32;
  const double h = 2 * M_PI / nx;
  auto gfun = [](double x, double y) {
    Mat g(2, 2);
    g << 1.0 + 0.3 * std::sin(x), 0.1 * std::sin(x + y), 0.1 * std::sin(x + y),
        2.0 + 0.2 * std::cos(y);
    return g;
  };
  std::vector<Vec> coords;
  std::vector<Mat> metrics;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) {
      coords.push_back(point({i * h, j * h}));
      metrics.push_back(gfun(i * h, j * h));
    }
  auto tab = make_tabulated("smooth", coords, metrics);
  REQUIRE(tab->dim() == 2);
  CHECK(tab->fully_periodic());
  CHECK(tab->chart()[0].period() == doctest::Approx(2 * M_PI));

  const Vec y = point({0.37, 4.1});
  CHECK((tab->metric_at(y) - gfun(0.37, 4.1)).cwiseAbs().maxCoeff() < 1e-4);
  // Grid points are interpolated exactly.
  CHECK((tab->metric_at(coords[37]) - metrics[37]).cwiseAbs().maxCoeff() < 1e-13);

  // Christoffels are the analytic derivatives of the interpolant.
  auto metric = [&](const Vec& z) { return tab->metric_at(z); };
  CHECK(oracle::max_gamma_diff(tab->christoffel_at(y), oracle::fd_levi_civita(metric, y, 1e-5),
                               2) < 1e-8);
  // And approximate the true connection.
  auto truth = [&](const Vec& z) { return gfun(z(0), z(1)); };
  CHECK(oracle::max_gamma_diff(tab->christoffel_at(y), oracle::fd_levi_civita(truth, y, 1e-5),
                               2) < 5e-3);
}

TEST_CASE("metric table loader") {
  const auto path = std::filesystem::temp_directory_path() / "coneflow_metric_1d.txt";
  {
    std::ofstream out(path);
    out << std::setprecision(17) << "# theta g11\n";
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      const double th = 2 * M_PI * i / n;
      out << th << " " << 1.0 + 0.5 * std::cos(th) * std::cos(th) << "\n";
    }
  }
  auto base = load_tabulated_metric(path);
  CHECK(base->dim() == 1);
  CHECK(base->chart()[0].period() == doctest::Approx(2 * M_PI));
  const double th = 1.1;
  CHECK(base->metric_at(point({th}))(0, 0) ==
        doctest::Approx(1.0 + 0.5 * std::cos(th) * std::cos(th)).epsilon(1e-5));
  // Gamma = g'/(2g).
  const double g = 1.0 + 0.5 * std::cos(th) * std::cos(th);
  const double gp = -std::sin(2 * th) * 0.5;
  CHECK(base->christoffel_at(point({th}))(0, 0, 0) == doctest::Approx(gp / (2 * g)).epsilon(1e-3));

  const auto bad = std::filesystem::temp_directory_path() / "coneflow_metric_bad.txt";
  {
    std::ofstream out(bad);
    out << "0 1\n0.1 1\n0.3 1\n0.4 1\n";
  }
  CHECK_THROWS_AS(load_tabulated_metric(bad), ValidationError);
  CHECK_THROWS(load_tabulated_metric("/nonexistent/metric.txt"));
}
