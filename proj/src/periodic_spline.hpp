#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace coneflow::detail {

// Second-derivative solver for periodic cubic splines on a uniform grid:
// M_{i-1} + 4 M_i + M_{i+1} = 6 (f_{i+1} - 2 f_i + f_{i-1}) / h^2.
class PeriodicSplineSolver {
 public:
  PeriodicSplineSolver() = default;
  PeriodicSplineSolver(int count, double spacing) : n_(count), h_(spacing) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
      a(i, i) += 4.0;
      a(i, (i + 1) % n_) += 1.0;
      a(i, (i + n_ - 1) % n_) += 1.0;
    }
    lu_ = a.partialPivLu();
  }

  int size() const { return n_; }
  double spacing() const { return h_; }

  Eigen::VectorXd second_derivatives(const Eigen::VectorXd& f) const {
    Eigen::VectorXd rhs(n_);
    for (int i = 0; i < n_; ++i) {
      rhs(i) = 6.0 * (f((i + 1) % n_) - 2.0 * f(i) + f((i + n_ - 1) % n_)) /
               (h_ * h_);
    }
    return lu_.solve(rhs);
  }

 private:
  int n_ = 0;
  double h_ = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// Weights of the cubic spline on one cell: S = w0 f0 + w1 f1 + m0 M0 + m1 M1.
struct CellWeights {
  double w0, w1, m0, m1;
};

inline CellWeights cell_value_weights(double t, double h) {
  const double a = 1.0 - t;
  const double b = t;
  return {a, b, (a * a * a - a) * h * h / 6.0, (b * b * b - b) * h * h / 6.0};
}

inline CellWeights cell_slope_weights(double t, double h) {
  const double a = 1.0 - t;
  const double b = t;
  return {-1.0 / h, 1.0 / h, -(3.0 * a * a - 1.0) * h / 6.0,
          (3.0 * b * b - 1.0) * h / 6.0};
}

// Locate y on a periodic grid starting at lo: cell index and local t in [0,1).
inline void locate(double y, double lo, double h, int n, int& cell,
                   double& t) {
  const double period = h * n;
  double u = std::fmod(y - lo, period);
  if (u < 0.0) u += period;
  double s = u / h;
  cell = static_cast<int>(std::floor(s));
  if (cell >= n) cell = n - 1;
  t = s - cell;
}

}  // namespace coneflow::detail
