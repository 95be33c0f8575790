#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kolmo/linalg.hpp"

namespace kolmo {

enum class Smoothness { kSmooth, kMeasurable };
enum class DivergenceSign { kNonneg, kUnknown };

/// One scalar coefficient of the operator (an a_ij, a_i, b_i or c),
/// evaluable at any space-time point. Evaluators must be pure.
class CoefficientField {
 public:
  using Evaluator = std::function<double(const Vector& x, double t)>;

  /// The zero field.
  CoefficientField() = default;

  static CoefficientField constant(double c);

  CoefficientField(int n_space, Evaluator f, Smoothness s = Smoothness::kSmooth,
                   DivergenceSign d = DivergenceSign::kUnknown)
      : n_space_(n_space), f_(std::move(f)), smoothness_(s), div_sign_(d) {}

  double operator()(const Vector& x, double t) const {
    return f_ ? f_(x, t) : 0.0;
  }

  bool is_zero() const { return !f_; }
  int arity() const { return n_space_ + 1; }
  Smoothness smoothness() const { return smoothness_; }
  DivergenceSign declared_divergence_sign() const { return div_sign_; }

 private:
  int n_space_ = 0;
  Evaluator f_;
  Smoothness smoothness_ = Smoothness::kSmooth;
  DivergenceSign div_sign_ = DivergenceSign::kUnknown;
};

/// The operator
///   L u = div(A D u) + <Bx, Du> - dt u + <b, Du> - div(a u) + c u,
/// with A supported on the leading m0 x m0 block.
struct OperatorSpec {
  int N = 0;
  int m0 = 0;
  Matrix B;
  double lambda = 1.0;
  std::vector<CoefficientField> diffusion;  // m0*m0 row-major; a_ij
  std::vector<CoefficientField> drift_a;    // m0 entries
  std::vector<CoefficientField> drift_b;    // m0 entries
  CoefficientField zero_order;              // c
  double q = 5.0;

  /// Principal-part operator: A = identity, no lower order terms.
  static OperatorSpec principal(int N, int m0, Matrix B, double q = 5.0);

  double a_ij(int i, int j, const Vector& x, double t) const;
  bool has_lower_order() const;

  /// Shape checks (m0 range, B square, coefficient array sizes).
  void validate_shape() const;
};

/// Anisotropic block data of a hypoelliptic B: number of blocks kappa,
/// rank sequence m_0 >= ... >= m_kappa, per-coordinate dilation exponents
/// (odd integers; time scales with exponent 2), and the homogeneous
/// dimension Q = sum (2j+1) m_j.
struct BlockStructure {
  int kappa = 0;
  std::vector<int> m;
  std::vector<int> dilation_exponents;  // size N
  int Q = 0;
};

/// Iteration exponents derived from (q, Q).
struct ExponentSet {
  double q = 0.0;
  int Q = 0;
  double alpha = 0.0;  // q(Q+2) / (q(Q-2) + 2(Q+2))
  double beta = 0.0;   // q/(q-1)
  double gamma = 0.0;  // 2 alpha^2 beta / (alpha - 1)
  double mu = 0.0;     // 2 alpha / (alpha - 1)
  bool q_above_three_quarters = false;  // q > (3/4)(Q+2)
};

/// Rank of [P0 | B P0 | ... | B^{N-1} P0] where P0 injects the first m0
/// coordinates. The drift couples all of R^N exactly when this equals N.
int kalman_rank(const Matrix& B, int m0);

/// Extracts (kappa, m_j, dilation exponents, Q) from the rank increments of
/// the controllability matrices. Requires kalman_rank(B, m0) == N.
BlockStructure detect_block_structure(const Matrix& B, int m0);

/// Requires q > (Q+2)/2; throws std::domain_error below that threshold.
ExponentSet exponents(double q, int Q);

struct HypothesisReport {
  bool h1_pass = false;
  double h1_min_eigenvalue = 0.0;
  double h1_max_eigenvalue = 0.0;
  double h1_max_asymmetry = 0.0;
  bool h2_pass = false;
  int h2_rank = 0;
  bool h3_q_pass = false;
  bool h3_div_a_pass = false;
  bool h3_div_b_pass = false;
  double h3_worst_pairing_a = 0.0;  // max over bumps of  int <a, grad phi>
  double h3_worst_pairing_b = 0.0;
  std::vector<std::string> failures;
  bool all_pass() const { return failures.empty(); }
};

/// Samples (H1) eigenvalue bounds, checks (H2) by the controllability rank,
/// and tests the distributional sign of div a, div b against a battery of
/// non-negative bumps on [-1,1]^{N+1}. Never throws on a failed hypothesis;
/// failures are listed in the report.
HypothesisReport validate_hypotheses(const OperatorSpec& spec, int sample_budget,
                                     std::uint64_t seed = 0x5eed);

}  // namespace kolmo
