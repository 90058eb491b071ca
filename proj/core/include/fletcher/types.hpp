#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <limits>
#include <stdexcept>
#include <string>

namespace fletcher {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters (unknown problem, bad settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A point on or outside the bounds was passed where strict interiority is required.
class InteriorityError : public Error {
 public:
  InteriorityError(const std::string& what, Index component)
      : Error(what), component_(component) {}
  Index component() const { return component_; }

 private:
  Index component_;
};

/// Q^{1/2}A (or the stacked [Q^{1/2}A Q^{1/2}B]) lost full column rank.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, Index rank, Index columns)
      : Error(what), rank_(rank), columns_(columns) {}
  Index rank() const { return rank_; }
  Index columns() const { return columns_; }

 private:
  Index rank_;
  Index columns_;
};

/// An iterative inner solve hit its iteration cap. Carries the best iterate.
class InnerSolveError : public Error {
 public:
  InnerSolveError(const std::string& what, Vector top, Vector bottom, double residual)
      : Error(what), top_(std::move(top)), bottom_(std::move(bottom)), residual_(residual) {}
  const Vector& top() const { return top_; }
  const Vector& bottom() const { return bottom_; }
  double residual() const { return residual_; }

 private:
  Vector top_;
  Vector bottom_;
  double residual_;
};

/// The point supplied to a diagnostic is not close enough to a KKT point.
class NotKktError : public Error {
 public:
  using Error::Error;
};

double inf_norm(const Vector& v);

}  // namespace fletcher
