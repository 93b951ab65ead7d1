#include <doctest.h>

#include "coneflow/exemplars.hpp"
#include "coneflow/flow.hpp"
#include "coneflow/monotone.hpp"
#include "oracles.hpp"

using namespace coneflow;

TEST_CASE("shrinking cross-section") {
  auto im = shrinking_cross_section(make_circle(), 1.0, 0.25, 64);
  for (const auto& p : im.nodes()) CHECK(p.r == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(shrinking_cross_section(make_circle(), 1.3, 0.0, 16).node(0).r == 1.3);
  CHECK_THROWS_AS(shrinking_cross_section(make_circle(), 1.0, 0.5, 16), DomainError);
  CHECK(cross_section_blowup_time(1.0, 2) == 0.25);

  // d/dt F against H with a centered difference in t.
  const double t = 0.2, dt = 1e-4;
  auto a = shrinking_cross_section(make_circle(), 1.0, t - dt, 64);
  auto b = shrinking_cross_section(make_circle(), 1.0, t + dt, 64);
  auto c = shrinking_cross_section(make_circle(), 1.0, t, 64);
  GeometryCache cache(c);
  const double drdt = (b.node(0).r - a.node(0).r) / (2 * dt);
  CHECK(std::abs(drdt - cache[0].H(1)) < 1e-7);
}

TEST_CASE("drifting example with the static equator") {
  const auto phi = static_equator(64);
  auto im = drifting_example(phi, 0.0, 0.5, 1, 0.25);
  for (const auto& p : im.nodes()) {
    CHECK(p.r == doctest::Approx(std::sqrt(0.5)));
    CHECK(p.base(0) == doctest::Approx(M_PI / 2));
  }
  auto start = drifting_example(phi, 0.0, 0.5, 1, 0.0);
  CHECK(start.node(0).r == doctest::Approx(1.0));
  CHECK(drift_parameter(0.3, 1.0, 1, 0.0) == 0.3);
  CHECK_THROWS_AS(drifting_example(phi, 0.0, 0.5, 1, 0.5), DomainError);

  // Great circles are geodesic, so H is purely radial.
  GeometryCache cache(im);
  CHECK(std::abs(cache[5].H(0)) < 1e-12);
  CHECK(std::abs(cache[5].H(1)) < 1e-12);
  CHECK(cache[5].H(2) == doctest::Approx(-1.0 / std::sqrt(0.5)).epsilon(1e-12));

  auto tr = run(drifting_example(phi, 0.0, 0.5, 1, 0.0));
  const auto rep = classify_singularity(tr);
  CHECK(rep.typeIc);
  CHECK(rep.K1_est == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep.K2_est == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sampled base flow") {
  // Latitude circles theta(s) = pi/2 + 0.1 s sampled at s = 0, 1.
  auto mesh = Mesh::periodic_1d(32);
  std::vector<std::vector<Vec>> vals(2, std::vector<Vec>(mesh.size()));
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      vals[k][i] = Vec(2);
      vals[k][i] << M_PI / 2 + 0.1 * k, mesh.param(i)(0);
    }
  auto phi = sampled_base_flow(make_round_sphere(), mesh, {0.0, 1.0}, vals);
  // alpha(t) = 0.5 at t = T (1 - e^{-1}) for m = 1, a = 0.
  const double T = 0.5, t = T * (1 - std::exp(-1.0));
  auto im = drifting_example(phi, 0.0, T, 1, t);
  CHECK(im.node(0).base(0) == doctest::Approx(M_PI / 2 + 0.05));
  CHECK_THROWS_AS(drifting_example(phi, 0.0, T, 1, 0.49), DomainError);
  CHECK_THROWS_AS(sampled_base_flow(make_round_sphere(), mesh, {0.0}, {vals[0]}), ValidationError);
}

TEST_CASE("off-centre circle") {
  auto im = offcenter_circle(3.0, 0.5, 0.0, 256);
  CHECK(im.min_r() == doctest::Approx(2.5));
  CHECK(im.max_r() == doctest::Approx(3.5));
  for (double t : {0.0, 0.05, 0.1, 0.12}) {
    auto c = offcenter_circle(3.0, 0.5, t, 256);
    const double T = 0.125;
    CHECK(sup_second_fundamental(c) * (T - t) == doctest::Approx(0.5).epsilon(1e-3));
  }
  auto late = offcenter_circle(3.0, 0.5, 0.125 - 1e-8, 64);
  CHECK(late.min_r() * late.min_r() == doctest::Approx(9.0).epsilon(1e-3));
  CHECK_NOTHROW(offcenter_circle(0.3, 0.5, 0.0, 64));
  CHECK_THROWS_AS(offcenter_circle(0.5, 0.5, 0.0, 64), DomainError);
  CHECK_THROWS_AS(offcenter_circle(3.0, 0.5, 0.2, 64), DomainError);
}

TEST_CASE("radial ray and perturbed shrinker") {
  auto ray = radial_ray(0.2, 1.0, 3.0, 21);
  CHECK(ray.node(0).r == 1.0);
  CHECK(ray.node(20).r == 3.0);
  CHECK(ray.node(7).base(0) == 0.2);
  auto p = perturbed_shrinker(0.05, 2, 1.0, 64);
  CHECK(p.node(0).r == doctest::Approx(1.05));
  CHECK(p.node(16).r == doctest::Approx(0.95));
  CHECK(exemplar_names().size() == 5);
}

TEST_CASE("flows reproduce closed-form trajectories") {
  // Cross-section: r^2(t) = 1 - 2t up to T - 1e-3; Euler drift is O(dt) up to
  // a logarithm from the stiff end of the run.
  std::vector<double> dev;
  for (double cap : {2e-3, 1e-3, 5e-4}) {
    FlowConfig c;
    c.t_max = 0.5 - 1e-3;
    c.dt_max = cap;
    c.lemma_residuals = false;
    auto tr = run(shrinking_cross_section(make_circle(), 1.0, 0.0, 32), c);
    const double r = tr.final_state->immersion.node(0).r;
    dev.push_back(std::abs(r * r - 2e-3));
    CHECK(dev.back() <= 5.0 * cap);
  }
  CHECK(dev[1] < dev[0]);
  CHECK(dev[2] < dev[1]);

  // Off-centre circle: squared distance to the fixed centre is a^2 - 2t. The
  // step follows h^2, so the deviation is second order in h.
  auto deviation = [](int nodes) {
    FlowConfig c;
    c.t_max = 0.125 - 1e-3;
    c.lemma_residuals = false;
    auto tr = run(offcenter_circle(3.0, 0.5, 0.0, nodes), c);
    double worst = 0.0;
    for (const auto& p : tr.final_state->immersion.nodes()) {
      const double x = p.r * std::cos(p.base(0)) - 3.0, y = p.r * std::sin(p.base(0));
      worst = std::max(worst, std::abs(x * x + y * y - 2e-3));
    }
    return worst;
  };
  const double d64 = deviation(64), d128 = deviation(128);
  CHECK(d128 < 2e-4);
  CHECK(oracle::observed_order(d64, d128) >= 1.8);
}
