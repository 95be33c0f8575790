#include "kolmo/linalg.hpp"

#include <cmath>

namespace kolmo {

int svd_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  return rank;
}

double ipow(double base, int n) {
  double acc = 1.0;
  double b = base;
  for (unsigned e = static_cast<unsigned>(n); e != 0; e >>= 1) {
    if (e & 1u) acc *= b;
    b *= b;
  }
  return acc;
}

bool nilpotency_index(const Matrix& m, int* k) {
  const int n = static_cast<int>(m.rows());
  Matrix p = m;
  for (int i = 1; i <= n; ++i) {
    if (p.cwiseAbs().maxCoeff() <= 1e-306) {
      if (k) *k = i;
      return true;
    }
    p = p * m;
  }
  return false;
}

}  // namespace kolmo
