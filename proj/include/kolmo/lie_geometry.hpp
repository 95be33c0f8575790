#pragma once

#include <cstdint>
#include <vector>

#include "kolmo/linalg.hpp"
#include "kolmo/operator_core.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

/// A point z = (x, t) of R^{N+1}. Construction rejects non-finite entries.
struct GroupPoint {
  Vector x;
  double t = 0.0;

  GroupPoint() = default;
  GroupPoint(Vector x_, double t_);
  static GroupPoint origin(int n) { return GroupPoint(Vector::Zero(n), 0.0); }
  int dim() const { return static_cast<int>(x.size()); }
};

/// Q_r(z0) = z0 o delta_r(Q_1), with Q_1 = { |x| < 1, |t| < 1 } (open,
/// Euclidean |x|).
struct Cylinder {
  GroupPoint center;
  double radius = 1.0;

  Cylinder(GroupPoint z0, double r);
};

/// E(s) = exp(-s B). Exact finite sum when B is nilpotent, otherwise
/// scaling-and-squaring with a (13,13) Pade approximant.
Matrix mat_exp(const Matrix& B, double s);

/// Translation group, dilations and homogeneous norm attached to one drift
/// matrix B in canonical block form. Caches the powers of B so that the
/// nilpotent exponential is a cheap finite sum.
class KolmogorovGroup {
 public:
  KolmogorovGroup(Matrix B, BlockStructure blocks);

  /// Detects the block structure from (B, m0).
  static KolmogorovGroup from_operator(const Matrix& B, int m0);

  const Matrix& B() const { return B_; }
  const BlockStructure& blocks() const { return blocks_; }
  int dim() const { return static_cast<int>(B_.rows()); }
  double trace_B() const { return trace_; }
  bool nilpotent() const { return nilpotent_; }

  Matrix exp_minus(double s) const;  // E(s) = exp(-s B)

  /// (x,t) o (xi,tau) = (xi + E(tau) x, t + tau).
  GroupPoint compose(const GroupPoint& z, const GroupPoint& w) const;

  /// z^{-1} = (-E(-t) x, -t), the two-sided inverse for the law above.
  GroupPoint inverse(const GroupPoint& z) const;

  /// Coordinate i scaled by r^{alpha_i}, time by r^2. Requires r > 0.
  GroupPoint dilate(double r, const GroupPoint& z) const;

  /// det of the dilation map on R^{N+1}: r^{Q+2}.
  double dilation_jacobian(double r) const;

  /// Unique r > 0 with sum x_i^2 / r^{2 alpha_i} + t^2 / r^4 = 1; 0 at the
  /// origin. Bracketing + bisection, then Newton polish.
  double hom_norm(const GroupPoint& z) const;

  /// Sum-form norm |x_1|^{1/alpha_1} + ... + |t|^{1/2}.
  double hom_norm_1(const GroupPoint& z) const;

  /// d(z, w) = || z^{-1} o w ||.
  double quasi_distance(const GroupPoint& z, const GroupPoint& w) const;

  /// Gradient of z -> hom_norm(z) away from the origin (implicit
  /// differentiation of the radial equation); last component is d/dt.
  Vector hom_norm_gradient(const GroupPoint& z) const;

  bool contains(const Cylinder& c, const GroupPoint& z) const;

  /// contains() and strictly in the past of the center time.
  bool contains_past(const Cylinder& c, const GroupPoint& z) const;

  /// Uniform sample of Q_1 (Euclidean unit ball in x, |t| < 1).
  GroupPoint sample_unit_cylinder(Rng& rng) const;

 private:
  Matrix B_;
  BlockStructure blocks_;
  std::vector<Matrix> neg_b_powers_;  // (-B)^k / k!, k = 0..degree
  bool nilpotent_ = false;
  double trace_ = 0.0;
};

/// Largest dyadic cbar in (0,1) such that z o Q_{cbar r(r-rho)} c= Q_r held
/// for all sampled z in Q_rho over an internal (rho, r) grid. Requires
/// trials >= 100.
double cylinder_inclusion_constant(const KolmogorovGroup& group, int trials,
                                   std::uint64_t seed = 0x5eed);

}  // namespace kolmo
