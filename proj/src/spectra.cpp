#include "coneflow/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <json.hpp>

namespace coneflow {

namespace {
const char* kModule = "spectra";
using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

std::string face_label(std::size_t f) { return "face " + std::to_string(f); }

void validate_triangulation(const std::vector<Eigen::Vector3d>& v,
                            const std::vector<std::array<int, 3>>& faces) {
  const int nv = static_cast<int>(v.size());
  if (nv < 4 || faces.size() < 4) throw MeshValidationError(kModule, "triangulation is too small to be closed");
  std::map<std::pair<int, int>, int> directed;
  std::vector<int> used(nv, 0);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) throw MeshValidationError(kModule, face_label(f) + " has an out-of-range index");
      used[t[k]] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw MeshValidationError(kModule, face_label(f) + " repeats a vertex");
    }
    if ((v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).norm() <= 0.0) {
      throw MeshValidationError(kModule, face_label(f) + " has zero area");
    }
    for (int k = 0; k < 3; ++k) {
      const auto e = std::make_pair(t[k], t[(k + 1) % 3]);
      if (!directed.emplace(e, static_cast<int>(f)).second) {
        throw MeshValidationError(kModule, face_label(f) + ": edge (" + std::to_string(e.first) + ", " +
                                               std::to_string(e.second) +
                                               ") is used twice in the same direction (non-manifold or misoriented)");
      }
    }
  }
  for (int i = 0; i < nv; ++i)
    if (!used[i]) throw MeshValidationError(kModule, "vertex " + std::to_string(i) + " is not used by any face");
  for (const auto& [e, f] : directed) {
    if (!directed.count({e.second, e.first})) {
      throw MeshValidationError(kModule, face_label(f) + ": edge (" + std::to_string(e.first) + ", " +
                                             std::to_string(e.second) + ") has no opposite half-edge (open boundary)");
    }
  }
  // Each vertex star must be a single fan: walk the half-edges around it.
  std::vector<int> degree(nv, 0);
  std::map<std::pair<int, int>, int> next_around;  // (v, a) -> b for face (v, a, b)
  for (const auto& t : faces) {
    for (int k = 0; k < 3; ++k) {
      ++degree[t[k]];
      next_around[{t[k], t[(k + 1) % 3]}] = t[(k + 2) % 3];
    }
  }
  std::vector<int> start(nv, -1);
  for (const auto& t : faces)
    for (int k = 0; k < 3; ++k)
      if (start[t[k]] < 0) start[t[k]] = t[(k + 1) % 3];
  for (int i = 0; i < nv; ++i) {
    int a = start[i];
    int steps = 0;
    do {
      a = next_around.at({i, a});
      ++steps;
    } while (a != start[i] && steps <= degree[i]);
    if (steps != degree[i]) {
      throw MeshValidationError(kModule, "vertex " + std::to_string(i) + " has a non-manifold star");
    }
  }
}

// Dense generalized solve for small problems.
std::vector<double> dense_spectrum(const LaplacianOperator& op) {
  const Eigen::MatrixXd k(op.stiffness);
  const Eigen::MatrixXd m(op.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError(kModule, "dense eigensolver failed");
  const auto& ev = es.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

// Shift-invert block iteration with Rayleigh-Ritz on (K, M).
std::vector<double> shift_invert(const LaplacianOperator& op, double sigma, int count) {
  const int n = static_cast<int>(op.stiffness.rows());
  const int p = std::min(n, count + 8);
  SpMat a = op.stiffness - sigma * op.mass;
  Eigen::SimplicialLDLT<SpMat> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError(kModule, "factorization of K - sigma M failed");

  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = g(rng);

  std::vector<double> prev;
  for (int it = 0; it < 1000; ++it) {
    const Eigen::MatrixXd y = solver.solve(op.mass * x);
    const Eigen::MatrixXd kr = y.transpose() * (op.stiffness * y);
    const Eigen::MatrixXd mr = y.transpose() * (op.mass * y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (kr + kr.transpose()),
                                                                 0.5 * (mr + mr.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError(kModule, "Rayleigh-Ritz step failed");
    x = y * es.eigenvectors();
    std::vector<double> ritz(es.eigenvalues().data(), es.eigenvalues().data() + p);
    std::sort(ritz.begin(), ritz.end(),
              [sigma](double u, double v) { return std::abs(u - sigma) < std::abs(v - sigma); });
    ritz.resize(count);
    std::sort(ritz.begin(), ritz.end());
    if (!prev.empty()) {
      double change = 0.0;
      for (int k = 0; k < count; ++k) change = std::max(change, std::abs(ritz[k] - prev[k]) / std::max(1.0, std::abs(ritz[k])));
      if (change < 1e-12) return ritz;
    }
    prev = std::move(ritz);
  }
  throw NumericalError(kModule, "shift-invert iteration did not converge near " + std::to_string(sigma));
}

Eigen::Vector3d midpoint_on_sphere(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return (a + b).normalized();
}
}  // namespace

SigmaMesh SigmaMesh::circle(double length, int nodes) {
  if (!(length > 0.0) || !std::isfinite(length)) throw MeshValidationError(kModule, "circle length must be positive");
  if (nodes < 3) throw MeshValidationError(kModule, "circle needs at least 3 nodes");
  SigmaMesh m;
  m.kind = Kind::kCircle;
  m.length = length;
  m.nodes = nodes;
  return m;
}

SigmaMesh SigmaMesh::triangulated(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> faces) {
  validate_triangulation(vertices, faces);
  SigmaMesh m;
  m.kind = Kind::kTriangulated;
  m.nodes = static_cast<int>(vertices.size());
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  return m;
}

SigmaMesh SigmaMesh::icosphere(int subdivisions) {
  if (subdivisions < 0 || subdivisions > 7) throw MeshValidationError(kModule, "icosphere subdivisions must be in [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                    {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back(midpoint_on_sphere(v[a], v[b]));
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * f.size());
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  return triangulated(std::move(v), std::move(f));
}

SigmaMesh SigmaMesh::load_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshValidationError(kModule, "cannot open " + path.string());
  std::stringstream clean;
  for (std::string line; std::getline(in, line);) clean << line.substr(0, line.find('#')) << '\n';
  std::string magic;
  clean >> magic;
  if (magic != "OFF") throw MeshValidationError(kModule, path.string() + ": missing OFF header");
  long nv = 0, nf = 0, ne = 0;
  if (!(clean >> nv >> nf >> ne) || nv <= 0 || nf <= 0) {
    throw MeshValidationError(kModule, path.string() + ": bad OFF counts");
  }
  std::vector<Eigen::Vector3d> v(nv);
  for (long i = 0; i < nv; ++i)
    if (!(clean >> v[i].x() >> v[i].y() >> v[i].z()))
      throw MeshValidationError(kModule, path.string() + ": truncated vertex " + std::to_string(i));
  std::vector<std::array<int, 3>> f(nf);
  for (long i = 0; i < nf; ++i) {
    int k = 0;
    if (!(clean >> k)) throw MeshValidationError(kModule, path.string() + ": truncated face " + std::to_string(i));
    if (k != 3) throw MeshValidationError(kModule, path.string() + ": face " + std::to_string(i) + " is not a triangle");
    clean >> f[i][0] >> f[i][1] >> f[i][2];
    if (!clean) throw MeshValidationError(kModule, path.string() + ": truncated face " + std::to_string(i));
  }
  return triangulated(std::move(v), std::move(f));
}

SigmaMesh SigmaMesh::from_selector(const std::string& selector) {
  if (selector.rfind("circle:", 0) == 0) {
    std::optional<double> length;
    std::optional<int> nodes;
    std::stringstream ss(selector.substr(7));
    for (std::string part; std::getline(ss, part, ':');) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw MeshValidationError(kModule, "bad circle selector field '" + part + "'");
      const std::string key = part.substr(0, eq);
      const std::string val = part.substr(eq + 1);
      try {
        std::size_t used = 0;
        if (key == "L") {
          length = std::stod(val, &used);
        } else if (key == "nodes") {
          nodes = std::stoi(val, &used);
        } else {
          throw MeshValidationError(kModule, "unknown circle selector key '" + key + "'");
        }
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::logic_error&) {
        throw MeshValidationError(kModule, "bad value '" + val + "' for " + key);
      }
    }
    if (!length || !nodes) throw MeshValidationError(kModule, "circle selector needs L and nodes");
    return circle(*length, *nodes);
  }
  if (selector.rfind("icosphere:", 0) == 0) {
    try {
      return icosphere(std::stoi(selector.substr(10)));
    } catch (const std::logic_error&) {
      throw MeshValidationError(kModule, "bad icosphere selector '" + selector + "'");
    }
  }
  return load_off(selector);
}

std::size_t SigmaMesh::size() const {
  return kind == Kind::kCircle ? static_cast<std::size_t>(nodes) : vertices.size();
}

int SigmaMesh::euler_characteristic() const {
  if (kind == Kind::kCircle) return 0;
  return static_cast<int>(vertices.size()) - static_cast<int>(3 * faces.size() / 2) + static_cast<int>(faces.size());
}

int SigmaMesh::components() const {
  if (kind == Kind::kCircle) return 1;
  std::vector<int> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& t : faces) {
    parent[find_root(parent, t[1])] = find_root(parent, t[0]);
    parent[find_root(parent, t[2])] = find_root(parent, t[0]);
  }
  int c = 0;
  for (std::size_t i = 0; i < parent.size(); ++i)
    if (find_root(parent, static_cast<int>(i)) == static_cast<int>(i)) ++c;
  return c;
}

void SigmaMesh::validate() const {
  if (kind == Kind::kCircle) {
    circle(length, nodes);
    return;
  }
  validate_triangulation(vertices, faces);
  const int chi = euler_characteristic();
  if (chi % 2 != 0 || chi > 2 * components()) {
    throw MeshValidationError(kModule, "Euler characteristic " + std::to_string(chi) +
                                           " is impossible for a closed oriented surface");
  }
}

std::string SigmaMesh::describe() const {
  std::ostringstream os;
  if (kind == Kind::kCircle) {
    os << "circle L=" << length << " nodes=" << nodes;
  } else {
    os << "triangulated V=" << vertices.size() << " F=" << faces.size() << " chi=" << euler_characteristic();
  }
  return os.str();
}

LaplacianOperator laplacian_operator(const SigmaMesh& mesh, bool lumped_mass) {
  mesh.validate();
  LaplacianOperator op;
  op.lumped = lumped_mass || mesh.kind == SigmaMesh::Kind::kCircle;
  const int n = static_cast<int>(mesh.size());
  std::vector<Triplet> k, m;
  if (mesh.kind == SigmaMesh::Kind::kCircle) {
    const double h = mesh.length / n;
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      k.emplace_back(i, i, 2.0 / h);
      k.emplace_back(i, j, -1.0 / h);
      k.emplace_back(j, i, -1.0 / h);
      m.emplace_back(i, i, h);
    }
  } else {
    for (const auto& t : mesh.faces) {
      const Eigen::Vector3d& p0 = mesh.vertices[t[0]];
      const Eigen::Vector3d& p1 = mesh.vertices[t[1]];
      const Eigen::Vector3d& p2 = mesh.vertices[t[2]];
      const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
      const std::array<const Eigen::Vector3d*, 3> p{&p0, &p1, &p2};
      for (int c = 0; c < 3; ++c) {
        const int a = (c + 1) % 3, b = (c + 2) % 3;
        const Eigen::Vector3d u = *p[a] - *p[c];
        const Eigen::Vector3d v = *p[b] - *p[c];
        const double w = 0.5 * u.dot(v) / u.cross(v).norm();
        k.emplace_back(t[a], t[b], -w);
        k.emplace_back(t[b], t[a], -w);
        k.emplace_back(t[a], t[a], w);
        k.emplace_back(t[b], t[b], w);
      }
      for (int a = 0; a < 3; ++a) {
        if (op.lumped) {
          m.emplace_back(t[a], t[a], area / 3.0);
        } else {
          for (int b = 0; b < 3; ++b) m.emplace_back(t[a], t[b], area / (a == b ? 6.0 : 12.0));
        }
      }
    }
  }
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(k.begin(), k.end());
  op.mass.resize(n, n);
  op.mass.setFromTriplets(m.begin(), m.end());
  return op;
}

double operator_asymmetry(const LaplacianOperator& op) {
  const SpMat diff = op.stiffness - SpMat(op.stiffness.transpose());
  double worst = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SpMat::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

Eigen::VectorXd apply_laplacian(const SigmaMesh& mesh, const Eigen::VectorXd& f) {
  const auto op = laplacian_operator(mesh, true);
  if (f.size() != static_cast<int>(mesh.size())) throw ValidationError(kModule, "field size does not match mesh");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  for (int c = 0; c < op.stiffness.outerSize(); ++c) {
    for (SpMat::InnerIterator it(op.stiffness, c); it; ++it) {
      if (it.row() != it.col()) out(it.row()) += it.value() * (f(it.col()) - f(it.row()));
    }
  }
  return out.cwiseQuotient(Eigen::VectorXd(op.mass.diagonal()));
}

std::vector<double> eigenvalues_near(const LaplacianOperator& op, double sigma, int count) {
  const int n = static_cast<int>(op.stiffness.rows());
  if (count < 1 || count > n) throw ValidationError(kModule, "eigenvalue count out of range");
  if (n <= 1500) {
    auto all = dense_spectrum(op);
    std::sort(all.begin(), all.end(),
              [sigma](double u, double v) { return std::abs(u - sigma) < std::abs(v - sigma); });
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  }
  return shift_invert(op, sigma, count);
}

std::vector<EigenCluster> cluster_eigenvalues(const std::vector<double>& values, double tol) {
  std::vector<EigenCluster> out;
  for (double v : values) {
    if (!out.empty() && std::abs(v - out.back().mean) <= tol * std::max(1.0, std::abs(out.back().mean))) {
      auto& c = out.back();
      c.values.push_back(v);
      c.mean = std::accumulate(c.values.begin(), c.values.end(), 0.0) / c.values.size();
    } else {
      out.push_back({v, {v}});
    }
  }
  return out;
}

SpectralResult deformation_dimension(const SigmaMesh& mesh, int n, const SpectralConfig& cfg) {
  if (n < 2) throw ValidationError(kModule, "complex dimension n must be >= 2");
  SpectralResult res;
  res.n = n;
  res.target = 2.0 * n;
  res.tolerance = cfg.tolerance.value_or(mesh.kind == SigmaMesh::Kind::kCircle ? 1e-3 : 2e-2);
  const auto op = laplacian_operator(mesh, cfg.lumped_mass);
  const int window = std::min(cfg.window, static_cast<int>(mesh.size()));
  res.eigenvalues = eigenvalues_near(op, res.target, window);
  res.clusters = cluster_eigenvalues(res.eigenvalues, res.tolerance);

  const double band = res.tolerance * res.target;
  const EigenCluster* hit = nullptr;
  for (const auto& c : res.clusters)
    if (std::abs(c.mean - res.target) <= band) hit = &c;
  if (hit) {
    res.deformation_dim = hit->multiplicity();
    const double lo = hit->values.front(), hi = hit->values.back();
    for (double v : res.eigenvalues) {
      if (v >= lo && v <= hi) continue;
      const double gap = v < lo ? lo - v : v - hi;
      if (gap < 2.0 * band) {
        res.warnings.push_back("borderline cluster: eigenvalue " + std::to_string(v) + " lies within " +
                               std::to_string(gap) + " of the cluster at " + std::to_string(hit->mean));
      }
    }
    if (static_cast<int>(res.eigenvalues.size()) < static_cast<int>(mesh.size()) &&
        (lo == res.eigenvalues.front() || hi == res.eigenvalues.back())) {
      res.warnings.push_back("cluster touches the edge of the computed eigenvalue window");
    }
  } else {
    for (double v : res.eigenvalues) {
      const double gap = std::abs(v - res.target);
      if (gap < 2.0 * band) {
        res.warnings.push_back("borderline: eigenvalue " + std::to_string(v) + " is " + std::to_string(gap) +
                               " from " + std::to_string(res.target) + " but outside the tolerance");
      }
    }
  }
  res.ohnita_count = 1 + res.deformation_dim;
  return res;
}

std::string spectral_json(const SpectralResult& result) {
  nlohmann::ordered_json j;
  j["eigen_clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : result.clusters) {
    j["eigen_clusters"].push_back({{"mean", c.mean}, {"multiplicity", c.multiplicity()}, {"values", c.values}});
  }
  j["deformation_dim"] = result.deformation_dim;
  j["warnings"] = result.warnings;
  j["n"] = result.n;
  j["target"] = result.target;
  j["tolerance"] = result.tolerance;
  j["ohnita_count"] = result.ohnita_count;
  return j.dump(2);
}

double coclosed_violation(const SigmaMesh& mesh, int n, const Eigen::VectorXd& phi) {
  return (apply_laplacian(mesh, phi) - 2.0 * n * phi).cwiseAbs().maxCoeff();
}

double reeb_exclusion_check(const SigmaMesh& mesh, int n) {
  return coclosed_violation(mesh, n, Eigen::VectorXd::Constant(static_cast<int>(mesh.size()), -1.0));
}

FormResiduals normal_form_predicates(const SigmaMesh& circle, int n, const Eigen::VectorXd& phi,
                                     const Eigen::VectorXd& gamma) {
  if (circle.kind != SigmaMesh::Kind::kCircle) throw ValidationError(kModule, "form predicates need a circle mesh");
  const int p = circle.nodes;
  if (phi.size() != p || gamma.size() != p) throw ValidationError(kModule, "phi and gamma must have one value per node/edge");
  const double h = circle.length / p;
  FormResiduals out;
  for (int e = 0; e < p; ++e) {
    out.closed = std::max(out.closed, std::abs(2.0 * gamma(e) - (phi((e + 1) % p) - phi(e)) / h));
  }
  out.coclosed = coclosed_violation(circle, n, phi);
  return out;
}

FormResiduals cone_form_residuals(const SigmaMesh& circle, int n, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& gamma, double r) {
  if (circle.kind != SigmaMesh::Kind::kCircle) throw ValidationError(kModule, "cone forms need a circle mesh");
  if (!(r > 0.0)) throw DomainError(kModule, "radius must be positive");
  const int p = circle.nodes;
  if (phi.size() != p || gamma.size() != p) throw ValidationError(kModule, "phi and gamma must have one value per node/edge");
  const double h = circle.length / p;
  const double dr = 1e-4 * r;
  // beta = b_r dr + b_x dx with b_r = s phi on nodes, b_x = s^2 gamma on edges.
  auto b_r = [&](int i, double s) { return s * phi(((i % p) + p) % p); };
  auto b_x = [&](int e, double s) { return s * s * gamma(((e % p) + p) % p); };
  FormResiduals out;
  for (int e = 0; e < p; ++e) {
    // d beta on the cell (edge e) x [r - dr, r + dr]: d_r b_x - d_x b_r.
    const double drbx = (b_x(e, r + dr) - b_x(e, r - dr)) / (2.0 * dr);
    const double dxbr = (b_r(e + 1, r) - b_r(e, r)) / h;
    out.closed = std::max(out.closed, std::abs(drbx - dxbr) / r);
  }
  for (int i = 0; i < p; ++i) {
    // div beta = s^{1-n} d_s(s^{n-1} b_r) + s^{-2} d_x b_x, volume r^{n-1} dr dvol.
    auto flux = [&](double s) { return std::pow(s, n - 1) * b_r(i, s); };
    const double radial = (flux(r + dr) - flux(r - dr)) / (2.0 * dr) / std::pow(r, n - 1);
    const double tangential = (b_x(i, r) - b_x(i - 1, r)) / h / (r * r);
    out.coclosed = std::max(out.coclosed, 2.0 * std::abs(radial + tangential));
  }
  return out;
}

}  // namespace coneflow
