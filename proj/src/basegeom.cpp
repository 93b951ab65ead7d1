#include "coneflow/basegeom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "periodic_spline.hpp"

namespace coneflow {

namespace {
const char* kModule = "basegeom";

std::string describe(const Vec& y) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
  os << ")";
  return os.str();
}
}  // namespace

BaseManifold::BaseManifold(std::string name, std::vector<ChartAxis> chart,
                           std::vector<ExclusionZone> exclusions)
    : name_(std::move(name)),
      chart_(std::move(chart)),
      exclusions_(std::move(exclusions)) {
  if (chart_.empty() || static_cast<int>(chart_.size()) > kMaxBaseDim) {
    throw ValidationError(kModule, "base dimension must be in [1, 3]");
  }
}

bool BaseManifold::fully_periodic() const {
  return std::all_of(chart_.begin(), chart_.end(),
                     [](const ChartAxis& a) { return a.periodic; });
}

bool BaseManifold::admissible(const Vec& y) const {
  if (y.size() != dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (!std::isfinite(y(a))) return false;
    if (!chart_[a].periodic && (y(a) < chart_[a].lo || y(a) > chart_[a].hi)) {
      return false;
    }
  }
  for (const auto& z : exclusions_) {
    if (y(z.axis) >= z.lo && y(z.axis) <= z.hi) return false;
  }
  return true;
}

void BaseManifold::check_admissible(const Vec& y) const {
  if (!admissible(y)) {
    throw ChartDegeneracyError(
        kModule, name_ + ": point " + describe(y) +
                     " is outside the admissible chart region");
  }
}

Mat BaseManifold::metric_at(const Vec& y) const {
  check_admissible(y);
  Mat g = metric_impl(y);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(kModule, name_ + ": metric not positive definite at " +
                                      describe(y));
  }
  return g;
}

Christoffel BaseManifold::christoffel_at(const Vec& y) const {
  check_admissible(y);
  return christoffel_impl(y);
}

double BaseManifold::volume_density_at(const Vec& y) const {
  return std::sqrt(metric_at(y).determinant());
}

double BaseManifold::wrap_difference(int axis, double dy) const {
  const auto& a = chart_[axis];
  if (!a.periodic) return dy;
  const double p = a.period();
  return dy - p * std::round(dy / p);
}

Christoffel levi_civita(const Mat& g, const std::vector<Mat>& dg) {
  const int n = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  Christoffel gamma(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = b; c < n; ++c) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) {
          s += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
        }
        gamma(a, b, c) = 0.5 * s;
        gamma(a, c, b) = 0.5 * s;
      }
    }
  }
  return gamma;
}

// ---------------------------------------------------------------------------
// Built-in manifolds

namespace {

class Circle final : public BaseManifold {
 public:
  explicit Circle(double rho)
      : BaseManifold(rho == 1.0 ? "circle" : "circle(rho=" + std::to_string(rho) + ")",
                     {ChartAxis{0.0, 2.0 * M_PI, true}}),
        rho_(rho) {
    if (!(rho > 0.0)) throw ValidationError(kModule, "circle radius must be > 0");
  }
  std::optional<double> total_volume() const override { return 2.0 * M_PI * rho_; }

 protected:
  Mat metric_impl(const Vec&) const override {
    Mat g(1, 1);
    g(0, 0) = rho_ * rho_;
    return g;
  }
  Christoffel christoffel_impl(const Vec&) const override { return Christoffel(1); }

 private:
  double rho_;
};

class FlatTorus final : public BaseManifold {
 public:
  FlatTorus(double px, double py)
      : BaseManifold("flat_torus", {ChartAxis{0.0, px, true}, ChartAxis{0.0, py, true}}),
        px_(px),
        py_(py) {}
  std::optional<double> total_volume() const override { return px_ * py_; }

 protected:
  Mat metric_impl(const Vec&) const override { return Mat::Identity(2, 2); }
  Christoffel christoffel_impl(const Vec&) const override { return Christoffel(2); }

 private:
  double px_, py_;
};

class RoundSphere final : public BaseManifold {
 public:
  explicit RoundSphere(double eps)
      : BaseManifold("round_sphere",
                     {ChartAxis{0.0, M_PI, false}, ChartAxis{0.0, 2.0 * M_PI, true}},
                     {ExclusionZone{0, -1.0, eps}, ExclusionZone{0, M_PI - eps, M_PI + 1.0}}) {}
  std::optional<double> total_volume() const override { return 4.0 * M_PI; }

 protected:
  Mat metric_impl(const Vec& y) const override {
    const double s = std::sin(y(0));
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = s * s;
    return g;
  }
  Christoffel christoffel_impl(const Vec& y) const override {
    const double s = std::sin(y(0));
    const double c = std::cos(y(0));
    Christoffel gamma(2);
    gamma(0, 1, 1) = -s * c;
    gamma(1, 0, 1) = c / s;
    gamma(1, 1, 0) = c / s;
    return gamma;
  }
};

// Tensor-product periodic cubic spline of the metric components.
class Tabulated final : public BaseManifold {
 public:
  Tabulated(std::string name, std::vector<ChartAxis> chart, std::vector<int> counts,
            std::vector<Mat> metrics)
      : BaseManifold(std::move(name), chart), counts_(std::move(counts)) {
    const int n = dim();
    for (int a = 0; a < n; ++a) {
      spacing_.push_back(chart[a].period() / counts_[a]);
      solvers_.emplace_back(counts_[a], spacing_.back());
    }
    const int n0 = counts_[0];
    const int n1 = n == 2 ? counts_[1] : 1;
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Component comp;
        comp.f.resize(n0, n1);
        for (int i = 0; i < n0; ++i)
          for (int j = 0; j < n1; ++j) comp.f(i, j) = metrics[i * n1 + j](a, b);
        comp.fxx.resize(n0, n1);
        for (int j = 0; j < n1; ++j)
          comp.fxx.col(j) = solvers_[0].second_derivatives(comp.f.col(j));
        if (n == 2) {
          comp.fyy.resize(n0, n1);
          comp.fxxyy.resize(n0, n1);
          for (int i = 0; i < n0; ++i) {
            comp.fyy.row(i) =
                solvers_[1].second_derivatives(comp.f.row(i).transpose()).transpose();
            comp.fxxyy.row(i) =
                solvers_[1].second_derivatives(comp.fxx.row(i).transpose()).transpose();
          }
        }
        components_.push_back(std::move(comp));
      }
    }
  }

 protected:
  Mat metric_impl(const Vec& y) const override {
    Mat g(dim(), dim());
    evaluate(y, g, nullptr);
    return g;
  }

  Christoffel christoffel_impl(const Vec& y) const override {
    Mat g(dim(), dim());
    std::vector<Mat> dg(dim(), Mat(dim(), dim()));
    evaluate(y, g, &dg);
    return levi_civita(g, dg);
  }

 private:
  struct Component {
    Eigen::MatrixXd f, fxx, fyy, fxxyy;
  };

  // Value and first partials of one spline component.
  void eval_component(const Component& c, const Vec& y, double& value,
                      double* d0, double* d1) const {
    int i = 0;
    double t0 = 0.0;
    detail::locate(y(0), chart()[0].lo, spacing_[0], counts_[0], i, t0);
    const int i1 = (i + 1) % counts_[0];
    const auto wx = detail::cell_value_weights(t0, spacing_[0]);
    const auto sx = detail::cell_slope_weights(t0, spacing_[0]);
    auto along_x = [&](const Eigen::MatrixXd& f, const Eigen::MatrixXd& m, int j,
                       const detail::CellWeights& w) {
      return w.w0 * f(i, j) + w.w1 * f(i1, j) + w.m0 * m(i, j) + w.m1 * m(i1, j);
    };
    if (dim() == 1) {
      value = along_x(c.f, c.fxx, 0, wx);
      if (d0) *d0 = along_x(c.f, c.fxx, 0, sx);
      return;
    }
    int j = 0;
    double t1 = 0.0;
    detail::locate(y(1), chart()[1].lo, spacing_[1], counts_[1], j, t1);
    const int j1 = (j + 1) % counts_[1];
    const auto wy = detail::cell_value_weights(t1, spacing_[1]);
    const auto sy = detail::cell_slope_weights(t1, spacing_[1]);
    const double v0 = along_x(c.f, c.fxx, j, wx), v1 = along_x(c.f, c.fxx, j1, wx);
    const double m0 = along_x(c.fyy, c.fxxyy, j, wx), m1 = along_x(c.fyy, c.fxxyy, j1, wx);
    value = wy.w0 * v0 + wy.w1 * v1 + wy.m0 * m0 + wy.m1 * m1;
    if (d1) *d1 = sy.w0 * v0 + sy.w1 * v1 + sy.m0 * m0 + sy.m1 * m1;
    if (d0) {
      const double dv0 = along_x(c.f, c.fxx, j, sx), dv1 = along_x(c.f, c.fxx, j1, sx);
      const double dm0 = along_x(c.fyy, c.fxxyy, j, sx),
                   dm1 = along_x(c.fyy, c.fxxyy, j1, sx);
      *d0 = wy.w0 * dv0 + wy.w1 * dv1 + wy.m0 * dm0 + wy.m1 * dm1;
    }
  }

  void evaluate(const Vec& y, Mat& g, std::vector<Mat>* dg) const {
    const int n = dim();
    int k = 0;
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b, ++k) {
        double v = 0.0, d0 = 0.0, d1 = 0.0;
        eval_component(components_[k], y, v, dg ? &d0 : nullptr,
                       (dg && n == 2) ? &d1 : nullptr);
        g(a, b) = g(b, a) = v;
        if (dg) {
          (*dg)[0](a, b) = (*dg)[0](b, a) = d0;
          if (n == 2) (*dg)[1](a, b) = (*dg)[1](b, a) = d1;
        }
      }
    }
  }

  std::vector<int> counts_;
  std::vector<double> spacing_;
  std::vector<detail::PeriodicSplineSolver> solvers_;
  std::vector<Component> components_;
};

}  // namespace

BasePtr make_circle(double rho) { return std::make_shared<Circle>(rho); }

BasePtr make_flat_torus(double px, double py) {
  return std::make_shared<FlatTorus>(px, py);
}

BasePtr make_round_sphere(double pole_exclusion) {
  return std::make_shared<RoundSphere>(pole_exclusion);
}

BasePtr make_tabulated(std::string name, const std::vector<Vec>& coords,
                       const std::vector<Mat>& metrics) {
  if (coords.empty() || coords.size() != metrics.size()) {
    throw ValidationError(kModule, "tabulated metric: empty or mismatched table");
  }
  const int n = static_cast<int>(coords.front().size());
  if (n < 1 || n > 2) {
    throw ValidationError(kModule, "tabulated metric: only dimensions 1 and 2 are supported");
  }
  // Distinct grid values per axis.
  std::vector<std::vector<double>> values(n);
  for (const auto& y : coords) {
    if (y.size() != n) throw ValidationError(kModule, "tabulated metric: ragged coordinates");
    for (int a = 0; a < n; ++a) values[a].push_back(y(a));
  }
  std::vector<ChartAxis> chart;
  std::vector<int> counts;
  std::vector<double> spacing;
  for (int a = 0; a < n; ++a) {
    auto& v = values[a];
    std::sort(v.begin(), v.end());
    std::vector<double> uniq;
    for (double x : v) {
      if (uniq.empty() || std::abs(x - uniq.back()) > 1e-9 * (1.0 + std::abs(x))) uniq.push_back(x);
    }
    if (uniq.size() < 4) {
      throw ValidationError(kModule, "tabulated metric: need at least 4 grid values per axis");
    }
    const double h = (uniq.back() - uniq.front()) / (uniq.size() - 1);
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      if (std::abs(uniq[i] - (uniq.front() + i * h)) > 1e-6 * h) {
        throw ValidationError(kModule, "tabulated metric: grid on axis " + std::to_string(a) +
                                           " is not uniform");
      }
    }
    chart.push_back(ChartAxis{uniq.front(), uniq.front() + h * uniq.size(), true});
    counts.push_back(static_cast<int>(uniq.size()));
    spacing.push_back(h);
  }
  const std::size_t expected = n == 1 ? counts[0] : static_cast<std::size_t>(counts[0]) * counts[1];
  if (coords.size() != expected) {
    throw ValidationError(kModule, "tabulated metric: expected " + std::to_string(expected) +
                                       " grid points, got " + std::to_string(coords.size()));
  }
  std::vector<Mat> ordered(expected);
  std::vector<bool> seen(expected, false);
  for (std::size_t p = 0; p < coords.size(); ++p) {
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) {
      const long k = std::lround((coords[p](a) - chart[a].lo) / spacing[a]);
      idx = idx * counts[a] + static_cast<std::size_t>(k);
    }
    if (seen[idx]) throw ValidationError(kModule, "tabulated metric: duplicate grid point");
    seen[idx] = true;
    const Mat& g = metrics[p];
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff())) {
      throw ValidationError(kModule, "tabulated metric: row " + std::to_string(p) +
                                         " is not symmetric");
    }
    ordered[idx] = g;
  }
  return std::make_shared<Tabulated>(std::move(name), chart, counts, ordered);
}

BasePtr load_tabulated_metric(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(kModule, "cannot open metric table " + path.string());
  std::vector<Vec> coords;
  std::vector<Mat> metrics;
  std::string line;
  int n = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream is(line);
    std::vector<double> nums;
    double x;
    while (is >> x) nums.push_back(x);
    if (!is.eof()) {
      throw ValidationError(kModule, path.string() + ":" + std::to_string(lineno) +
                                         ": non-numeric entry");
    }
    if (nums.empty()) continue;
    int dim = -1;
    for (int d = 1; d <= kMaxBaseDim; ++d)
      if (static_cast<int>(nums.size()) == d + d * d) dim = d;
    if (dim < 0 || (n >= 0 && dim != n)) {
      throw ValidationError(kModule, path.string() + ":" + std::to_string(lineno) +
                                         ": unexpected column count");
    }
    n = dim;
    Vec y(n);
    Mat g(n, n);
    for (int a = 0; a < n; ++a) y(a) = nums[a];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) g(a, b) = nums[n + a * n + b];
    coords.push_back(y);
    metrics.push_back(g);
  }
  return make_tabulated(path.stem().string(), coords, metrics);
}

}  // namespace coneflow
