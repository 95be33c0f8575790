#include "kolmo/operator_core.hpp"

#include <cmath>
#include <stdexcept>

#include "kolmo/rng.hpp"

namespace kolmo {

CoefficientField CoefficientField::constant(double c) {
  return CoefficientField(0, [c](const Vector&, double) { return c; });
}

OperatorSpec OperatorSpec::principal(int N, int m0, Matrix B, double q) {
  OperatorSpec spec;
  spec.N = N;
  spec.m0 = m0;
  spec.B = std::move(B);
  spec.lambda = 1.0;
  spec.q = q;
  spec.diffusion.resize(static_cast<std::size_t>(m0) * m0);
  for (int i = 0; i < m0; ++i)
    spec.diffusion[static_cast<std::size_t>(i) * m0 + i] = CoefficientField::constant(1.0);
  spec.drift_a.resize(m0);
  spec.drift_b.resize(m0);
  spec.validate_shape();
  return spec;
}

double OperatorSpec::a_ij(int i, int j, const Vector& x, double t) const {
  return diffusion[static_cast<std::size_t>(i) * m0 + j](x, t);
}

bool OperatorSpec::has_lower_order() const {
  for (const auto& f : drift_a)
    if (!f.is_zero()) return true;
  for (const auto& f : drift_b)
    if (!f.is_zero()) return true;
  return !zero_order.is_zero();
}

void OperatorSpec::validate_shape() const {
  if (N < 1) throw std::invalid_argument("operator dimension N must be positive");
  if (m0 < 1 || m0 > N) throw std::invalid_argument("m0 must satisfy 1 <= m0 <= N");
  if (B.rows() != N || B.cols() != N) throw std::invalid_argument("B must be N x N");
  if (lambda <= 0.0) throw std::invalid_argument("ellipticity constant must be positive");
  if (diffusion.size() != static_cast<std::size_t>(m0) * m0)
    throw std::invalid_argument("diffusion needs m0*m0 coefficient fields");
  if (drift_a.size() != static_cast<std::size_t>(m0) || drift_b.size() != static_cast<std::size_t>(m0))
    throw std::invalid_argument("drift coefficient arrays need m0 fields");
}

namespace {

// [P0 | B P0 | ... | B^j P0], with P0 the injection of the first m0 coords.
Matrix controllability(const Matrix& B, int m0, int j) {
  const int n = static_cast<int>(B.rows());
  Matrix k(n, static_cast<Eigen::Index>(m0) * (j + 1));
  Matrix block = Matrix::Identity(n, n).leftCols(m0);
  k.leftCols(m0) = block;
  for (int s = 1; s <= j; ++s) {
    block = B * block;
    k.middleCols(static_cast<Eigen::Index>(s) * m0, m0) = block;
  }
  return k;
}

}  // namespace

int kalman_rank(const Matrix& B, int m0) {
  if (B.rows() != B.cols()) throw std::invalid_argument("kalman_rank: B must be square");
  const int n = static_cast<int>(B.rows());
  if (m0 < 1 || m0 > n) throw std::invalid_argument("kalman_rank: need 1 <= m0 <= N");
  return svd_rank(controllability(B, m0, n - 1));
}

BlockStructure detect_block_structure(const Matrix& B, int m0) {
  if (B.rows() != B.cols()) throw std::invalid_argument("detect_block_structure: B must be square");
  const int n = static_cast<int>(B.rows());
  if (m0 < 1 || m0 > n) throw std::invalid_argument("detect_block_structure: need 1 <= m0 <= N");

  BlockStructure out;
  out.m.push_back(m0);
  int rank = m0;  // rank of K_0 = P0
  int j = 0;
  while (rank < n) {
    ++j;
    const int next = svd_rank(controllability(B, m0, j));
    const int inc = next - rank;
    if (inc <= 0)
      throw std::runtime_error(
          "operator is not hypoelliptic: controllability rank stalls at " + std::to_string(rank) +
          " < N = " + std::to_string(n) + " (increment m_" + std::to_string(j) + " = 0)");
    if (inc > out.m.back())
      throw std::runtime_error("controllability rank increments are not non-increasing");
    out.m.push_back(inc);
    rank = next;
  }
  out.kappa = j;

  out.dilation_exponents.reserve(n);
  out.Q = 0;
  for (int b = 0; b <= out.kappa; ++b) {
    const int e = 2 * b + 1;
    for (int i = 0; i < out.m[b]; ++i) out.dilation_exponents.push_back(e);
    out.Q += e * out.m[b];
  }
  return out;
}

ExponentSet exponents(double q, int Q) {
  const double half_dim = 0.5 * (Q + 2);
  if (!(q > half_dim))
    throw std::domain_error("exponent q must exceed (Q+2)/2 = " + std::to_string(half_dim) +
                            "; got q = " + std::to_string(q));
  ExponentSet e;
  e.q = q;
  e.Q = Q;
  e.alpha = q * (Q + 2) / (q * (Q - 2) + 2.0 * (Q + 2));
  e.beta = q / (q - 1.0);
  e.mu = 2.0 * e.alpha / (e.alpha - 1.0);
  e.gamma = 2.0 * e.alpha * e.alpha * e.beta / (e.alpha - 1.0);
  e.q_above_three_quarters = q > 0.75 * (Q + 2);
  return e;
}

namespace {

double bump1d(double y) {
  if (std::fabs(y) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - y * y));
}

double bump1d_deriv(double y) {
  if (std::fabs(y) >= 1.0) return 0.0;
  const double d = 1.0 - y * y;
  return std::exp(-1.0 / d) * (-2.0 * y / (d * d));
}

struct Bump {
  Vector center;  // size N+1, last entry is time
  Vector width;

  double value(const Vector& x, double t) const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) v *= bump1d((x(i) - center(i)) / width(i));
    v *= bump1d((t - center(center.size() - 1)) / width(width.size() - 1));
    return v;
  }

  double grad_x(int k, const Vector& x, double t) const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double y = (x(i) - center(i)) / width(i);
      v *= (i == k) ? bump1d_deriv(y) / width(i) : bump1d(y);
    }
    v *= bump1d((t - center(center.size() - 1)) / width(width.size() - 1));
    return v;
  }
};

}  // namespace

HypothesisReport validate_hypotheses(const OperatorSpec& spec, int sample_budget,
                                     std::uint64_t seed) {
  spec.validate_shape();
  HypothesisReport rep;
  Rng rng(seed);
  const int N = spec.N, m0 = spec.m0;

  // (H1): eigenvalues of (a_ij) within [1/lambda, lambda], symmetry.
  {
    const int n_points = std::max(16, sample_budget / 100);
    double min_eig = 1e300, max_eig = -1e300, max_asym = 0.0;
    Matrix A(m0, m0);
    for (int s = 0; s < n_points; ++s) {
      Vector x(N);
      for (int i = 0; i < N; ++i) x(i) = rng.uniform(-1.0, 1.0);
      const double t = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < m0; ++i)
        for (int j = 0; j < m0; ++j) A(i, j) = spec.a_ij(i, j, x, t);
      max_asym = std::max(max_asym, (A - A.transpose()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      max_eig = std::max(max_eig, es.eigenvalues().maxCoeff());
    }
    rep.h1_min_eigenvalue = min_eig;
    rep.h1_max_eigenvalue = max_eig;
    rep.h1_max_asymmetry = max_asym;
    const double tol = 1e-12 * std::max(1.0, spec.lambda);
    rep.h1_pass = max_asym <= tol && min_eig >= 1.0 / spec.lambda - tol && max_eig <= spec.lambda + tol;
    if (!rep.h1_pass)
      rep.failures.push_back("(H1) eigenvalue bounds violated: spectrum [" +
                             std::to_string(min_eig) + ", " + std::to_string(max_eig) +
                             "] not within [1/lambda, lambda]");
  }

  // (H2): controllability rank.
  rep.h2_rank = kalman_rank(spec.B, m0);
  rep.h2_pass = rep.h2_rank == N;
  if (!rep.h2_pass)
    rep.failures.push_back("(H2) fails: Kalman rank " + std::to_string(rep.h2_rank) +
                           " < N = " + std::to_string(N));

  // (H3): q threshold needs Q, hence (H2).
  if (rep.h2_pass) {
    const BlockStructure blocks = detect_block_structure(spec.B, m0);
    rep.h3_q_pass = spec.q > 0.75 * (blocks.Q + 2);
    if (!rep.h3_q_pass)
      rep.failures.push_back("(H3) fails: q = " + std::to_string(spec.q) +
                             " does not exceed (3/4)(Q+2) = " + std::to_string(0.75 * (blocks.Q + 2)));
  } else {
    rep.failures.push_back("(H3) q threshold not checkable without (H2)");
  }

  // (H3) divergence signs, tested distributionally: for each non-negative
  // bump phi,  int <field, grad phi> <= 0  must hold (integration by parts
  // against div >= 0).
  const bool have_a = std::any_of(spec.drift_a.begin(), spec.drift_a.end(),
                                  [](const CoefficientField& f) { return !f.is_zero(); });
  const bool have_b = std::any_of(spec.drift_b.begin(), spec.drift_b.end(),
                                  [](const CoefficientField& f) { return !f.is_zero(); });
  const int n_bumps = 20;
  const int res = std::max(8, static_cast<int>(std::round(std::pow(
                                  static_cast<double>(std::max(sample_budget, 256)),
                                  1.0 / (N + 1)))));
  auto pairing = [&](const std::vector<CoefficientField>& field, const Bump& bump,
                     double* abs_mass) {
    // Midpoint rule over the bump's own support box.
    double total = 0.0, mass = 0.0;
    std::vector<double> lo(N + 1), h(N + 1);
    for (int i = 0; i <= N; ++i) {
      lo[i] = bump.center(i) - bump.width(i);
      h[i] = 2.0 * bump.width(i) / res;
    }
    std::vector<int> idx(N + 1, 0);
    Vector x(N);
    const long n_nodes = static_cast<long>(std::pow(static_cast<double>(res), N + 1));
    double cell = 1.0;
    for (int i = 0; i <= N; ++i) cell *= h[i];
    for (long node = 0; node < n_nodes; ++node) {
      long rem = node;
      for (int i = N; i >= 0; --i) {
        idx[i] = static_cast<int>(rem % res);
        rem /= res;
      }
      for (int i = 0; i < N; ++i) x(i) = lo[i] + (idx[i] + 0.5) * h[i];
      const double t = lo[N] + (idx[N] + 0.5) * h[N];
      double term = 0.0;
      for (int k = 0; k < m0; ++k) {
        if (field[k].is_zero()) continue;
        term += field[k](x, t) * bump.grad_x(k, x, t);
      }
      total += term * cell;
      mass += std::fabs(term) * cell;
    }
    if (abs_mass) *abs_mass = mass;
    return total;
  };

  rep.h3_div_a_pass = true;
  rep.h3_div_b_pass = true;
  if (have_a || have_b) {
    for (int bi = 0; bi < n_bumps; ++bi) {
      Bump bump;
      bump.center.resize(N + 1);
      bump.width.resize(N + 1);
      for (int i = 0; i <= N; ++i) {
        bump.width(i) = rng.uniform(0.2, 0.45);
        bump.center(i) = rng.uniform(-1.0 + bump.width(i), 1.0 - bump.width(i));
      }
      if (have_a) {
        double mass = 0.0;
        const double v = pairing(spec.drift_a, bump, &mass);
        rep.h3_worst_pairing_a = std::max(rep.h3_worst_pairing_a, v);
        if (v > 1e-9 * (mass + 1.0)) rep.h3_div_a_pass = false;
      }
      if (have_b) {
        double mass = 0.0;
        const double v = pairing(spec.drift_b, bump, &mass);
        rep.h3_worst_pairing_b = std::max(rep.h3_worst_pairing_b, v);
        if (v > 1e-9 * (mass + 1.0)) rep.h3_div_b_pass = false;
      }
    }
  }
  if (!rep.h3_div_a_pass)
    rep.failures.push_back("(H3) fails: distributional div a test found a negative pairing");
  if (!rep.h3_div_b_pass)
    rep.failures.push_back("(H3) fails: distributional div b test found a negative pairing");

  // Declared-sign smooth fields are cross-checked with finite differences.
  auto fd_div_check = [&](const std::vector<CoefficientField>& field) {
    bool ok = true;
    const double h = 1e-5;
    for (int s = 0; s < 64; ++s) {
      Vector x(N);
      for (int i = 0; i < N; ++i) x(i) = rng.uniform(-0.9, 0.9);
      const double t = rng.uniform(-0.9, 0.9);
      double div = 0.0, scale = 1.0;
      for (int k = 0; k < m0; ++k) {
        if (field[k].is_zero()) continue;
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        div += (field[k](xp, t) - field[k](xm, t)) / (2.0 * h);
        scale += std::fabs(field[k](x, t));
      }
      if (div < -1e-6 * scale) ok = false;
    }
    return ok;
  };
  auto declared_nonneg_smooth = [](const std::vector<CoefficientField>& field) {
    return std::any_of(field.begin(), field.end(), [](const CoefficientField& f) {
      return !f.is_zero() && f.declared_divergence_sign() == DivergenceSign::kNonneg &&
             f.smoothness() == Smoothness::kSmooth;
    });
  };
  if (declared_nonneg_smooth(spec.drift_a) && !fd_div_check(spec.drift_a))
    rep.failures.push_back("declared div a >= 0 contradicted by finite differences");
  if (declared_nonneg_smooth(spec.drift_b) && !fd_div_check(spec.drift_b))
    rep.failures.push_back("declared div b >= 0 contradicted by finite differences");

  return rep;
}

}  // namespace kolmo
