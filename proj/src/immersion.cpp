#include "coneflow/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace coneflow {

namespace {
const char* kModule = "immersion";

struct StencilPoint {
  std::size_t node;
  double weight;
};

struct Stencil {
  std::array<StencilPoint, 16> pts{};
  int count = 0;
  void add(std::size_t node, double w) { pts[count++] = {node, w}; }
};

// Stencils for d_0, d_1 and the three second derivatives at one node.
struct NodeStencils {
  std::array<Stencil, 2> first;
  std::array<Stencil, 3> second;
};

std::size_t wrap_index(int i, int n) { return static_cast<std::size_t>(((i % n) + n) % n); }

NodeStencils build_stencils(const Mesh& mesh, FdOrder order, std::size_t node) {
  NodeStencils s;
  if (mesh.topology == Topology::kInterval1D) {
    const int i = static_cast<int>(node);
    const int p = mesh.p;
    const double h = mesh.spacing[0];
    auto at = [&](int k) { return static_cast<std::size_t>(k); };
    if (i == 0) {
      s.first[0].add(at(0), -1.5 / h);
      s.first[0].add(at(1), 2.0 / h);
      s.first[0].add(at(2), -0.5 / h);
      s.second[0].add(at(0), 2.0 / (h * h));
      s.second[0].add(at(1), -5.0 / (h * h));
      s.second[0].add(at(2), 4.0 / (h * h));
      s.second[0].add(at(3), -1.0 / (h * h));
    } else if (i == p - 1) {
      s.first[0].add(at(p - 1), 1.5 / h);
      s.first[0].add(at(p - 2), -2.0 / h);
      s.first[0].add(at(p - 3), 0.5 / h);
      s.second[0].add(at(p - 1), 2.0 / (h * h));
      s.second[0].add(at(p - 2), -5.0 / (h * h));
      s.second[0].add(at(p - 3), 4.0 / (h * h));
      s.second[0].add(at(p - 4), -1.0 / (h * h));
    } else {
      s.first[0].add(at(i + 1), 0.5 / h);
      s.first[0].add(at(i - 1), -0.5 / h);
      s.second[0].add(at(i + 1), 1.0 / (h * h));
      s.second[0].add(at(i), -2.0 / (h * h));
      s.second[0].add(at(i - 1), 1.0 / (h * h));
    }
    return s;
  }

  // Centered periodic stencils.
  static constexpr std::array<double, 2> d1_o2{0.5, 0.0};             // offsets +1
  static constexpr std::array<double, 2> d1_o4{2.0 / 3.0, -1.0 / 12.0};  // offsets +1, +2
  static constexpr std::array<double, 3> d2_o2{-2.0, 1.0, 0.0};
  static constexpr std::array<double, 3> d2_o4{-2.5, 4.0 / 3.0, -1.0 / 12.0};
  const bool fourth = order == FdOrder::kFourth;
  const int reach = fourth ? 2 : 1;
  const auto& d1 = fourth ? d1_o4 : d1_o2;
  const auto& d2 = fourth ? d2_o4 : d2_o2;

  const int q = mesh.q;
  const int i = static_cast<int>(node) / q;
  const int j = static_cast<int>(node) % q;
  auto idx = [&](int a, int b) { return wrap_index(a, mesh.p) * q + wrap_index(b, q); };

  const int m = mesh.param_dim();
  for (int axis = 0; axis < m; ++axis) {
    const double h = mesh.spacing[axis];
    auto shifted = [&](int k) { return axis == 0 ? idx(i + k, j) : idx(i, j + k); };
    for (int k = 1; k <= reach; ++k) {
      s.first[axis].add(shifted(k), d1[k - 1] / h);
      s.first[axis].add(shifted(-k), -d1[k - 1] / h);
    }
    Stencil& dd = s.second[axis == 0 ? 0 : 2];
    dd.add(shifted(0), d2[0] / (h * h));
    for (int k = 1; k <= reach; ++k) {
      dd.add(shifted(k), d2[k] / (h * h));
      dd.add(shifted(-k), d2[k] / (h * h));
    }
  }
  if (m == 2) {
    const double h0 = mesh.spacing[0], h1 = mesh.spacing[1];
    for (int a = -reach; a <= reach; ++a) {
      if (a == 0) continue;
      const double wa = (a > 0 ? 1.0 : -1.0) * d1[std::abs(a) - 1] / h0;
      for (int b = -reach; b <= reach; ++b) {
        if (b == 0) continue;
        const double wb = (b > 0 ? 1.0 : -1.0) * d1[std::abs(b) - 1] / h1;
        s.second[1].add(idx(i + a, j + b), wa * wb);
      }
    }
  }
  return s;
}

// Apply a stencil to differences value(nb) - value(center).
template <class Diff>
double apply(const Stencil& st, Diff&& diff) {
  double acc = 0.0;
  for (int k = 0; k < st.count; ++k) acc += st.pts[k].weight * diff(st.pts[k].node);
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh

Mesh Mesh::periodic_1d(int p, double period, double lo) {
  if (p < 5) throw ValidationError(kModule, "periodic 1D mesh needs at least 5 nodes");
  Mesh m;
  m.topology = Topology::kPeriodic1D;
  m.p = p;
  m.q = 1;
  m.lo = {lo, 0.0};
  m.spacing = {period / p, 0.0};
  return m;
}

Mesh Mesh::interval_1d(int p, double a, double b) {
  if (p < 4) throw ValidationError(kModule, "interval mesh needs at least 4 nodes");
  if (!(b > a)) throw ValidationError(kModule, "interval mesh needs b > a");
  Mesh m;
  m.topology = Topology::kInterval1D;
  m.p = p;
  m.q = 1;
  m.lo = {a, 0.0};
  m.spacing = {(b - a) / (p - 1), 0.0};
  return m;
}

Mesh Mesh::periodic_2d(int p, int q, double px, double py) {
  if (p < 5 || q < 5) throw ValidationError(kModule, "periodic 2D mesh needs at least 5x5 nodes");
  Mesh m;
  m.topology = Topology::kPeriodic2D;
  m.p = p;
  m.q = q;
  m.spacing = {px / p, py / q};
  return m;
}

Mesh Mesh::base_copy(const BaseManifold& base, int p, int q) {
  if (!base.fully_periodic()) {
    throw ValidationError(kModule, "graphical meshes need a fully periodic base chart");
  }
  const auto& chart = base.chart();
  if (base.dim() == 1) return periodic_1d(p, chart[0].period(), chart[0].lo);
  if (base.dim() == 2) {
    Mesh m = periodic_2d(p, q > 0 ? q : p, chart[0].period(), chart[1].period());
    m.lo = {chart[0].lo, chart[1].lo};
    return m;
  }
  throw ValidationError(kModule, "graphical meshes support base dimension 1 or 2");
}

Vec Mesh::param(std::size_t node) const {
  Vec x(param_dim());
  if (param_dim() == 1) {
    x(0) = lo[0] + static_cast<double>(node) * spacing[0];
  } else {
    x(0) = lo[0] + static_cast<double>(node / q) * spacing[0];
    x(1) = lo[1] + static_cast<double>(node % q) * spacing[1];
  }
  return x;
}

double Mesh::weight(std::size_t node) const {
  switch (topology) {
    case Topology::kPeriodic1D:
      return spacing[0];
    case Topology::kInterval1D:
      return (node == 0 || node + 1 == size()) ? 0.5 * spacing[0] : spacing[0];
    case Topology::kPeriodic2D:
      return spacing[0] * spacing[1];
  }
  return 0.0;
}

double Mesh::h_min() const {
  return param_dim() == 1 ? spacing[0] : std::min(spacing[0], spacing[1]);
}

// ---------------------------------------------------------------------------
// DiscreteImmersion

DiscreteImmersion::DiscreteImmersion(std::shared_ptr<const Cone> cone, Mesh mesh,
                                     std::vector<ConePoint> nodes, ImmersionMode mode,
                                     FdOrder order)
    : cone_(std::move(cone)), mesh_(mesh), nodes_(std::move(nodes)), mode_(mode), order_(order) {
  validate();
}

DiscreteImmersion DiscreteImmersion::graphical(std::shared_ptr<const Cone> cone, Mesh mesh,
                                               const std::vector<double>& radius,
                                               FdOrder order) {
  if (radius.size() != mesh.size()) {
    throw ValidationError(kModule, "graphical immersion: radius field size mismatch");
  }
  std::vector<ConePoint> nodes(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) nodes[i] = ConePoint{mesh.param(i), radius[i]};
  return DiscreteImmersion(std::move(cone), mesh, std::move(nodes), ImmersionMode::kGraphical,
                           order);
}

void DiscreteImmersion::validate() const {
  if (!cone_) throw ValidationError(kModule, "immersion requires a cone");
  if (nodes_.size() != mesh_.size()) {
    throw ValidationError(kModule, "node count does not match the mesh");
  }
  if (order_ == FdOrder::kFourth && mesh_.topology == Topology::kInterval1D) {
    throw ValidationError(kModule, "fourth-order differences need a periodic mesh");
  }
  if (mode_ == ImmersionMode::kGraphical) {
    const auto& base = cone_->base();
    if (base.dim() != mesh_.param_dim() || !mesh_.periodic() || !base.fully_periodic()) {
      throw ValidationError(kModule,
                            "graphical mode needs a periodic mesh over a fully periodic base "
                            "of the same dimension");
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& p = nodes_[i];
    if (!(p.r > cone_->r_min())) {
      throw DomainError(kModule, "node " + std::to_string(i) + ": radial value " +
                                     std::to_string(p.r) + " is at or below r_min");
    }
    if (p.base.size() != cone_->base_dim()) {
      throw ValidationError(kModule, "node " + std::to_string(i) + ": wrong base dimension");
    }
  }
}

void DiscreteImmersion::set_nodes(std::vector<ConePoint> nodes) {
  nodes_ = std::move(nodes);
  validate();
}

void DiscreteImmersion::set_radius(std::size_t i, double r) {
  if (!(r > cone_->r_min())) {
    throw DomainError(kModule, "node " + std::to_string(i) + ": radial value " +
                                   std::to_string(r) + " is at or below r_min");
  }
  nodes_[i].r = r;
}

double DiscreteImmersion::min_r() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& p : nodes_) v = std::min(v, p.r);
  return v;
}

double DiscreteImmersion::max_r() const {
  double v = 0.0;
  for (const auto& p : nodes_) v = std::max(v, p.r);
  return v;
}

// ---------------------------------------------------------------------------
// Geometry

GeometryCache::GeometryCache(const DiscreteImmersion& im) {
  const Mesh& mesh = im.mesh();
  const Cone& cone = im.cone();
  const BaseManifold& base = cone.base();
  const int n = cone.base_dim();
  const int d = n + 1;
  const int m = im.m();
  const bool graphical = im.mode() == ImmersionMode::kGraphical;
  const auto& pts = im.nodes();
  nodes_.resize(pts.size());

  for (std::size_t node = 0; node < pts.size(); ++node) {
    NodeGeometry& geo = nodes_[node];
    const ConePoint& c = pts[node];
    const NodeStencils st = build_stencils(mesh, im.fd_order(), node);

    geo.dF = Mat::Zero(d, m);
    for (auto& v : geo.ddF) v = Vec::Zero(d);
    for (int alpha = 0; alpha < d; ++alpha) {
      const bool radial = alpha == n;
      if (graphical && !radial) {
        geo.dF(alpha, alpha) = 1.0;
        continue;
      }
      auto diff = [&](std::size_t nb) {
        return radial ? pts[nb].r - c.r
                      : base.wrap_difference(alpha, pts[nb].base(alpha) - c.base(alpha));
      };
      for (int i = 0; i < m; ++i) geo.dF(alpha, i) = apply(st.first[i], diff);
      geo.ddF[0](alpha) = apply(st.second[0], diff);
      if (m == 2) {
        geo.ddF[1](alpha) = apply(st.second[1], diff);
        geo.ddF[2](alpha) = apply(st.second[2], diff);
      }
    }

    Christoffel gbar;
    cone.metric_and_christoffel(c, geo.ambient_metric, gbar);
    const Mat& G = geo.ambient_metric;

    geo.g = geo.dF.transpose() * G * geo.dF;
    const double det = geo.g.determinant();
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw DegenerateMetricError(kModule, node, "induced metric is degenerate (det = " +
                                                     std::to_string(det) + ")");
    }
    geo.g_inv = geo.g.inverse();
    geo.sqrt_det = std::sqrt(det);

    // Ambient covariant second derivative A_ij = d_i d_j F + Gbar(dF_i, dF_j).
    const Mat GdF = G * geo.dF;
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        const int pij = pair_index(i, j);
        Vec a = geo.ddF[pij];
        for (int alpha = 0; alpha < d; ++alpha) {
          double s = 0.0;
          for (int beta = 0; beta < d; ++beta)
            for (int gamma = 0; gamma < d; ++gamma)
              s += gbar(alpha, beta, gamma) * geo.dF(beta, i) * geo.dF(gamma, j);
          a(alpha) += s;
        }
        // Gamma^k_ij = g^{kl} gbar(A_ij, dF_l); II_ij = A_ij - Gamma^k_ij dF_k.
        const Vec lowered = GdF.transpose() * a;
        const Vec gamma_k = geo.g_inv * lowered;
        geo.christoffel_m[pij] = gamma_k;
        geo.II[pij] = a - geo.dF * gamma_k;
      }
    }

    geo.H = Vec::Zero(d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) geo.H += geo.g_inv(i, j) * geo.II[pair_index(i, j)];
    geo.H2 = geo.H.dot(G * geo.H);

    double ii2 = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l)
            ii2 += geo.g_inv(i, k) * geo.g_inv(j, l) *
                   geo.II[pair_index(i, j)].dot(G * geo.II[pair_index(k, l)]);
    geo.II2 = ii2;
  }
}

ScalarDerivatives scalar_derivatives(const Mesh& mesh, FdOrder order,
                                     const std::vector<double>& f, std::size_t node) {
  const NodeStencils st = build_stencils(mesh, order, node);
  const int m = mesh.param_dim();
  const double f0 = f[node];
  auto diff = [&](std::size_t nb) { return f[nb] - f0; };
  ScalarDerivatives out;
  out.d = Vec(m);
  for (int i = 0; i < m; ++i) out.d(i) = apply(st.first[i], diff);
  out.dd[0] = apply(st.second[0], diff);
  if (m == 2) {
    out.dd[1] = apply(st.second[1], diff);
    out.dd[2] = apply(st.second[2], diff);
  }
  return out;
}

std::vector<Mat> induced_metric(const DiscreteImmersion& im) {
  GeometryCache cache(im);
  std::vector<Mat> out;
  out.reserve(cache.size());
  for (const auto& g : cache.nodes()) out.push_back(g.g);
  return out;
}

std::vector<ConeTangent> mean_curvature(const GeometryCache& cache) {
  std::vector<ConeTangent> out;
  out.reserve(cache.size());
  for (const auto& g : cache.nodes()) out.push_back(g.H);
  return out;
}

std::vector<ConeTangent> mean_curvature(const DiscreteImmersion& im) {
  return mean_curvature(GeometryCache(im));
}

std::vector<double> laplace_beltrami(const DiscreteImmersion& im, const GeometryCache& cache,
                                     const std::vector<double>& f) {
  if (f.size() != im.size()) throw ValidationError(kModule, "scalar field size mismatch");
  const int m = im.m();
  std::vector<double> out(im.size());
  for (std::size_t node = 0; node < im.size(); ++node) {
    const auto sd = scalar_derivatives(im.mesh(), im.fd_order(), f, node);
    const NodeGeometry& geo = cache[node];
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const int pij = pair_index(i, j);
        acc += geo.g_inv(i, j) * (sd.dd[pij] - geo.christoffel_m[pij].dot(sd.d));
      }
    }
    out[node] = acc;
  }
  return out;
}

std::vector<double> laplace_beltrami(const DiscreteImmersion& im, const std::vector<double>& f) {
  return laplace_beltrami(im, GeometryCache(im), f);
}

std::vector<double> radial_mean_curvature(const DiscreteImmersion& im,
                                          const GeometryCache& cache) {
  const int n = im.cone().base_dim();
  const int m = im.m();
  std::vector<double> r(im.size());
  for (std::size_t i = 0; i < im.size(); ++i) r[i] = im.node(i).r;
  const auto lap_r = laplace_beltrami(im, cache, r);
  std::vector<double> out(im.size());
  for (std::size_t node = 0; node < im.size(); ++node) {
    const NodeGeometry& geo = cache[node];
    const double rr = r[node];
    // Base block of the cone metric is r^2 g_ab, so divide r^2 back out.
    const Mat base_block = geo.ambient_metric.topLeftCorner(n, n) / (rr * rr);
    const Mat dy = geo.dF.topRows(n);
    const Mat pulled = dy.transpose() * base_block * dy;
    double trace = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) trace += geo.g_inv(i, j) * pulled(i, j);
    out[node] = lap_r[node] - rr * trace;
  }
  return out;
}

std::vector<double> radial_mean_curvature(const DiscreteImmersion& im) {
  return radial_mean_curvature(im, GeometryCache(im));
}

std::vector<ConeTangent> position_field(const DiscreteImmersion& im) {
  std::vector<ConeTangent> out;
  out.reserve(im.size());
  for (const auto& p : im.nodes()) out.push_back(im.cone().position_vector(p));
  return out;
}

NormalSplit decompose_normal(const DiscreteImmersion& im, const GeometryCache& cache,
                             const std::vector<ConeTangent>& v) {
  if (v.size() != im.size()) throw ValidationError(kModule, "vector field size mismatch");
  NormalSplit out;
  out.tangential.resize(v.size());
  out.normal.resize(v.size());
  for (std::size_t node = 0; node < v.size(); ++node) {
    const NodeGeometry& geo = cache[node];
    const Vec lowered = (geo.ambient_metric * geo.dF).transpose() * v[node];
    const Vec coeff = geo.g_inv * lowered;
    out.tangential[node] = geo.dF * coeff;
    out.normal[node] = v[node] - out.tangential[node];
  }
  return out;
}

NormalSplit decompose_normal(const DiscreteImmersion& im, const std::vector<ConeTangent>& v) {
  return decompose_normal(im, GeometryCache(im), v);
}

double volume(const DiscreteImmersion& im, const GeometryCache& cache) {
  double v = 0.0;
  for (std::size_t i = 0; i < cache.size(); ++i) v += cache[i].sqrt_det * im.mesh().weight(i);
  return v;
}

double volume(const DiscreteImmersion& im) { return volume(im, GeometryCache(im)); }

double sup_second_fundamental(const GeometryCache& cache) {
  double v = 0.0;
  for (const auto& g : cache.nodes()) v = std::max(v, g.II2);
  return v;
}

double sup_second_fundamental(const DiscreteImmersion& im) {
  return sup_second_fundamental(GeometryCache(im));
}

double lemma1_residual(const DiscreteImmersion& im, const GeometryCache& cache) {
  const int n = im.cone().base_dim();
  std::vector<double> r2(im.size());
  for (std::size_t i = 0; i < im.size(); ++i) r2[i] = im.node(i).r * im.node(i).r;
  const auto lap = laplace_beltrami(im, cache, r2);
  double worst = 0.0;
  for (std::size_t i = 0; i < im.size(); ++i) {
    // gbar(H, r d/dr) = r H^{n+1} since d/dr is unit and orthogonal to N.
    const double h_dot_f = cache[i].ambient_metric(n, n) * cache[i].H(n) * im.node(i).r;
    worst = std::max(worst, std::abs(lap[i] - 2.0 * (h_dot_f + im.m())));
  }
  return worst;
}

double trace_split_residual(const DiscreteImmersion& im, const GeometryCache& cache) {
  const int n = im.cone().base_dim();
  const int m = im.m();
  double worst = 0.0;
  for (std::size_t node = 0; node < im.size(); ++node) {
    const NodeGeometry& geo = cache[node];
    const double r = im.node(node).r;
    const Mat base_block = geo.ambient_metric.topLeftCorner(n, n) / (r * r);
    const Mat dy = geo.dF.topRows(n);
    const Mat pulled = dy.transpose() * base_block * dy;
    double tangential = 0.0, radial = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        tangential += geo.g_inv(i, j) * pulled(i, j);
        radial += geo.g_inv(i, j) * geo.dF(n, i) * geo.dF(n, j);
      }
    }
    worst = std::max(worst, std::abs(m - r * r * tangential - radial));
  }
  return worst;
}

void write_snapshot_csv(const std::filesystem::path& path, const DiscreteImmersion& im) {
  std::ofstream out(path);
  if (!out) throw ValidationError(kModule, "cannot write snapshot " + path.string());
  const int m = im.m();
  const int n = im.cone().base_dim();
  out << "node_index";
  for (int i = 0; i < m; ++i) out << ",x" << i + 1;
  for (int a = 0; a < n; ++a) out << ",y" << a + 1;
  out << ",r\n";
  out << std::setprecision(17);
  for (std::size_t node = 0; node < im.size(); ++node) {
    out << node;
    const Vec x = im.mesh().param(node);
    for (int i = 0; i < m; ++i) out << "," << x(i);
    for (int a = 0; a < n; ++a) out << "," << im.node(node).base(a);
    out << "," << im.node(node).r << "\n";
  }
}

}  // namespace coneflow
