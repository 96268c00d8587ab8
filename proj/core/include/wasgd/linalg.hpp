#pragma once

#include <Eigen/Dense>

namespace wasgd {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

// Ridge used for inverting Monte-Carlo averages such as the plug-in Hessian.
inline constexpr double kDefaultRidge = 1e-8;

// Model dimensions above this are out of contract for the dense routines.
inline constexpr Eigen::Index kMaxDimension = 64;

DenseMatrix symmetrize(const DenseMatrix& m);

/// Inverse of a symmetric positive definite matrix through an LDLT
/// factorization. When the smallest pivot falls below `ridge`, the
/// factorization is redone on m + ridge * I. Throws NotSpd if the matrix is
/// not square or still has a non-positive pivot.
DenseMatrix invert_spd(const DenseMatrix& m, double ridge = kDefaultRidge);

/// Solves m * x = rhs under the same ridge policy as invert_spd.
Vector solve_spd(const DenseMatrix& m, const Vector& rhs, double ridge = kDefaultRidge);

}  // namespace wasgd
