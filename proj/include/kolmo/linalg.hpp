#pragma once

#include <Eigen/Dense>

namespace kolmo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical rank with a scale-free threshold: singular values below
/// rel_tol * sigma_max count as zero.
int svd_rank(const Matrix& m, double rel_tol = 1e-9);

/// base^n by repeated squaring, n >= 0. Exact for dyadic bases.
double ipow(double base, int n);

/// True when m^k is the zero matrix for some k <= m.rows(); on success k is
/// the nilpotency index. Entries below 1e-306 are treated as exact zeros.
bool nilpotency_index(const Matrix& m, int* k);

}  // namespace kolmo
