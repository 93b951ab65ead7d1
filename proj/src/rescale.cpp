#include "coneflow/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coneflow/monotone.hpp"

namespace coneflow {

namespace {
const char* kModule = "rescale";

// Normwise relative deviation of a against b.
struct Deviation {
  double diff = 0.0;
  double scale = 0.0;
  void add(double a, double b) {
    diff = std::max(diff, std::abs(a - b));
    scale = std::max(scale, std::abs(b));
  }
  double value() const { return diff == 0.0 ? 0.0 : diff / std::max(scale, std::numeric_limits<double>::min()); }
};
}  // namespace

double RescaleReport::max() const {
  return std::max({metric, II2, product, H_base, H_radial, theta});
}

RescaledImmersion parabolic_rescale(const DiscreteImmersion& im, double t, double lambda,
                                    double T) {
  if (!(lambda > 0.0)) throw ValidationError(kModule, "scale must be positive");
  if (!(t < T)) throw DomainError(kModule, "rescaling needs t < T");
  std::vector<ConePoint> nodes = im.nodes();
  for (auto& p : nodes) p.r *= lambda;
  return {DiscreteImmersion(im.cone_ptr(), im.mesh(), std::move(nodes), im.mode(), im.fd_order()),
          lambda * lambda * (t - T)};
}

RescaleReport verify_rescale_identities(const FlowState& original,
                                        const RescaledImmersion& rescaled, double lambda,
                                        double T) {
  const auto& im = original.immersion;
  const auto& sc = rescaled.immersion;
  if (im.size() != sc.size()) throw ValidationError(kModule, "snapshots have different meshes");
  GeometryCache a(im), b(sc);
  const int n = im.cone().base_dim();
  const int m = im.m();
  const double tau = T - original.t;
  const double s = rescaled.s;
  const double l2 = lambda * lambda;

  Deviation metric, ii2, product, h_base, h_radial;
  for (std::size_t k = 0; k < im.size(); ++k) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) metric.add(b[k].g(i, j), l2 * a[k].g(i, j));
    ii2.add(b[k].II2, a[k].II2 / l2);
    product.add(-s * b[k].II2, tau * a[k].II2);
    for (int c = 0; c < n; ++c) h_base.add(b[k].H(c), a[k].H(c) / l2);
    h_radial.add(b[k].H(n), a[k].H(n) / lambda);
  }
  Deviation theta;
  theta.add(huisken_functional(sc, b, s, 0.0), huisken_functional(im, a, original.t, T));

  RescaleReport rep;
  rep.metric = metric.value();
  rep.II2 = ii2.value();
  rep.product = product.value();
  rep.H_base = h_base.value();
  rep.H_radial = h_radial.value();
  rep.theta = theta.value();
  return rep;
}

}  // namespace coneflow
