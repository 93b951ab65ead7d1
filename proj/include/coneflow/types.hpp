#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace coneflow {

// Base manifolds have dimension <= 3, so cone coordinates fit in 4 slots.
inline constexpr int kMaxBaseDim = 3;
inline constexpr int kMaxConeDim = kMaxBaseDim + 1;
inline constexpr int kMaxParamDim = 2;

// Small dynamically sized vectors/matrices with inline storage (no heap).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxConeDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                          kMaxConeDim, kMaxConeDim>;

// Connection coefficients Gamma^a_{bc} for a chart of dimension dim.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int dim) : dim_(dim) { data_.fill(0.0); }

  int dim() const { return dim_; }

  double& operator()(int a, int b, int c) {
    return data_[(a * kMaxConeDim + b) * kMaxConeDim + c];
  }
  double operator()(int a, int b, int c) const {
    return data_[(a * kMaxConeDim + b) * kMaxConeDim + c];
  }

 private:
  int dim_ = 0;
  std::array<double, kMaxConeDim * kMaxConeDim * kMaxConeDim> data_{};
};

// Errors carry the originating module in their message, e.g.
// "[immersion] node 17: degenerate induced metric".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(module) {}
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

class ChartDegeneracyError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateMetricError : public Error {
 public:
  DegenerateMetricError(const std::string& module, std::size_t node,
                        const std::string& what)
      : Error(module, "node " + std::to_string(node) + ": " + what),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace coneflow
