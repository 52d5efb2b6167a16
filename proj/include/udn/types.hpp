#pragma once

#include <Eigen/Dense>

namespace udn {

// Time-by-queue fields are stored row-major: row i is the time slice t_i.
template <typename Scalar>
using FieldT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Field = FieldT<double>;
using Vector = VectorT<double>;
using IndexVector = Eigen::VectorXi;

/// Composite trapezoid rule on a uniform grid.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::MatrixBase<Derived>& values,
                                   typename Derived::Scalar step) {
  using Scalar = typename Derived::Scalar;
  const auto n = values.size();
  if (n < 2) return Scalar(0);
  return step * (values.sum() - Scalar(0.5) * (values(0) + values(n - 1)));
}

/// Trapezoid weights for n uniform nodes with spacing `step`.
template <typename Scalar>
VectorT<Scalar> trapezoid_weights(Eigen::Index n, Scalar step) {
  VectorT<Scalar> w = VectorT<Scalar>::Constant(n, step);
  if (n >= 2) {
    w(0) *= Scalar(0.5);
    w(n - 1) *= Scalar(0.5);
  }
  return w;
}

}  // namespace udn
