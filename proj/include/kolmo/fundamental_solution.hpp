#pragma once

#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "kolmo/grid.hpp"
#include "kolmo/lie_geometry.hpp"
#include "kolmo/operator_core.hpp"

namespace kolmo {

/// Evaluates the Gaussian fundamental solution of the principal-part
/// operator attached to (B, m0):
///
///   Gamma((x,t),(0,0)) = (4 pi)^{-N/2} det(C(t))^{-1/2}
///                        exp(-<C(t)^{-1} x, x>/4 - t tr B),  t > 0,
///   C(t) = int_0^t E(s) A0 E(s)^T ds,  E(s) = exp(-s B),
///
/// and 0 for t <= 0. Everything runs in the log domain through a Cholesky
/// factor of C(t); det C(t) ~ t^Q underflows in linear arithmetic long
/// before the kernel itself is negligible.
///
/// The factor cache keyed by t behaves as a thread-safe memo: concurrent
/// reads, atomic insert, last write wins (entries are deterministic).
class KernelEvaluator {
 public:
  /// Cached per-time data: everything Gamma needs at reduced time s.
  struct Factors {
    Matrix e;         // E(s)
    Matrix c_inv;     // C(s)^{-1}
    double log_det;   // log det C(s)
    double log_norm;  // -N/2 log(4 pi) - log_det / 2 - s tr B
  };

  KernelEvaluator(Matrix B, int m0, int quadrature_order = 16);

  const KolmogorovGroup& group() const { return group_; }
  int m0() const { return m0_; }
  int dim() const { return group_.dim(); }
  double trace_B() const { return group_.trace_B(); }

  /// Memoized factors at reduced time s > 0; throws when C(s) is not
  /// positive definite.
  std::shared_ptr<const Factors> factors(double s) const;

  /// C(t), t > 0. Exact polynomial antiderivative when B is nilpotent,
  /// otherwise adaptive Gauss-Legendre to absolute tolerance 1e-12 * t.
  Matrix covariance(double t) const;

  double gamma(const GroupPoint& z, const GroupPoint& zeta) const;
  double gamma_origin(const GroupPoint& z) const;

  /// log Gamma(z, 0); sets *positive = false when the causality branch
  /// returns exact zero.
  double log_gamma_origin(const GroupPoint& z, bool* positive) const;

  /// d/dxi_k Gamma(z, zeta) for k = 1..m0 (gradient in the pole variable).
  Vector gamma_pole_gradient(const GroupPoint& z, const GroupPoint& zeta) const;

  /// Evaluator of the dilation-invariant model: * blocks of B zeroed.
  KernelEvaluator principal_part() const;

 private:
  KolmogorovGroup group_;
  int m0_ = 1;
  int quadrature_order_ = 16;
  std::vector<Matrix> poly_;  // C(t) = sum_k poly_[k] t^{k+1}, nilpotent case
  mutable std::unordered_map<double, std::shared_ptr<const Factors>> cache_;
  mutable std::shared_mutex mutex_;
};

/// B with the arbitrary (*) blocks of the canonical form zeroed; only the
/// subdiagonal rank blocks survive.
Matrix zero_star_blocks(const Matrix& B, const BlockStructure& blocks);

/// Standalone C(t) for an arbitrary square B (no hypoellipticity needed);
/// this is the quantity whose positivity mirrors the Kalman verdict.
Matrix covariance_matrix(const Matrix& B, int m0, double t);

/// Scale-normalized positivity test of a symmetric matrix: all diagonal
/// entries positive and the correlation matrix has smallest eigenvalue
/// above rel_tol.
bool is_effectively_spd(const Matrix& c, double rel_tol = 1e-8);

/// Midpoint-rule Gamma-potential int Gamma(z, zeta) f(zeta) dzeta over the
/// grid of f. The cell containing z contributes its Gaussian time-mass
/// bound instead of the (singular) midpoint value.
double gamma_potential(const KernelEvaluator& kernel, const GridFunction& f, const GroupPoint& z);

/// -int D^(xi)_{m0} Gamma(z, xi) f(xi) dxi with the analytic kernel
/// gradient; the singular cell is dropped (odd kernel, zero mean bound).
Vector gamma_potential_gradient(const KernelEvaluator& kernel, const GridFunction& f,
                                const GroupPoint& z);

/// Batched evaluation sharing the kernel pass: for every evaluation point,
/// potentials of all densities and (optionally) gradient potentials.
struct PotentialBatchResult {
  std::vector<std::vector<double>> potential;             // [density][point]
  std::vector<std::vector<Vector>> gradient_potential;    // [density][point]
};
PotentialBatchResult gamma_potential_batch(const KernelEvaluator& kernel,
                                           const std::vector<const GridFunction*>& densities,
                                           const std::vector<GroupPoint>& points,
                                           bool with_gradient);

struct PotentialLevelReport {
  int resolution = 0;
  double max_ratio_sobolev = 0.0;   // ||Gamma(f)||_{p**} / ||f||_p
  double max_ratio_gradient = 0.0;  // ||Gamma(D_m0 f)||_{p*} / ||f||_p
  int skipped = 0;                  // densities with vanishing norm
};

struct PotentialNormReport {
  double p = 0.0, p_star = 0.0, p_star_star = 0.0;
  std::vector<PotentialLevelReport> levels;
  double drift_sobolev = 1.0;   // max over levels / min over levels
  double drift_gradient = 1.0;
};

/// Empirical check of the two potential estimates on a battery of random
/// densities over the unit cylinder, repeated per grid resolution.
/// Requires 1 < p < (Q+2)/2 so that both target exponents exist.
PotentialNormReport potential_norm_check(const KernelEvaluator& kernel, double p,
                                         const std::vector<int>& resolutions,
                                         int n_densities = 3, std::uint64_t seed = 0x5eed);

}  // namespace kolmo
