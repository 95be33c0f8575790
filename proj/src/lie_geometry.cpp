#include "kolmo/lie_geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmo {

GroupPoint::GroupPoint(Vector x_, double t_) : x(std::move(x_)), t(t_) {
  if (!x.allFinite() || !std::isfinite(t))
    throw std::invalid_argument("GroupPoint: non-finite coordinates");
}

Cylinder::Cylinder(GroupPoint z0, double r) : center(std::move(z0)), radius(r) {
  if (!(r > 0.0)) throw std::invalid_argument("Cylinder: radius must be positive");
}

namespace {

Matrix pade13_exp(const Matrix& a) {
  static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                        b[3] * a2 + b[1] * ident);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                   b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

Matrix dense_exp(Matrix a) {
  // Scaling and squaring around the (13,13) Pade approximant.
  const double theta13 = 5.371920351148152;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    a *= std::pow(2.0, -squarings);
  }
  Matrix e = pade13_exp(a);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

}  // namespace

Matrix mat_exp(const Matrix& B, double s) {
  if (B.rows() != B.cols()) throw std::invalid_argument("mat_exp: B must be square");
  if (!std::isfinite(s)) throw std::invalid_argument("mat_exp: non-finite scale");
  int k = 0;
  if (nilpotency_index(B, &k)) {
    const Eigen::Index n = B.rows();
    Matrix e = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int j = 1; j < k; ++j) {
      term = term * (-s / j * B);
      e += term;
    }
    return e;
  }
  return dense_exp(-s * B);
}

KolmogorovGroup::KolmogorovGroup(Matrix B, BlockStructure blocks)
    : B_(std::move(B)), blocks_(std::move(blocks)) {
  if (B_.rows() != B_.cols()) throw std::invalid_argument("KolmogorovGroup: B must be square");
  if (static_cast<int>(blocks_.dilation_exponents.size()) != dim())
    throw std::invalid_argument("KolmogorovGroup: blocks do not match dimension");
  trace_ = B_.trace();
  int k = 0;
  nilpotent_ = nilpotency_index(B_, &k);
  if (nilpotent_) {
    Matrix term = Matrix::Identity(dim(), dim());
    neg_b_powers_.push_back(term);
    for (int j = 1; j < k; ++j) {
      term = term * (-1.0 / j * B_);
      neg_b_powers_.push_back(term);
    }
  }
}

KolmogorovGroup KolmogorovGroup::from_operator(const Matrix& B, int m0) {
  return KolmogorovGroup(B, detect_block_structure(B, m0));
}

Matrix KolmogorovGroup::exp_minus(double s) const {
  if (!nilpotent_) return dense_exp(-s * B_);
  Matrix e = neg_b_powers_[0];
  double sk = 1.0;
  for (std::size_t j = 1; j < neg_b_powers_.size(); ++j) {
    sk *= s;
    e += sk * neg_b_powers_[j];
  }
  return e;
}

GroupPoint KolmogorovGroup::compose(const GroupPoint& z, const GroupPoint& w) const {
  if (z.dim() != dim() || w.dim() != dim())
    throw std::invalid_argument("compose: dimension mismatch");
  GroupPoint out;
  out.x = w.x + exp_minus(w.t) * z.x;
  out.t = z.t + w.t;
  return out;
}

GroupPoint KolmogorovGroup::inverse(const GroupPoint& z) const {
  if (z.dim() != dim()) throw std::invalid_argument("inverse: dimension mismatch");
  GroupPoint out;
  out.x = -(exp_minus(-z.t) * z.x);
  out.t = -z.t;
  return out;
}

GroupPoint KolmogorovGroup::dilate(double r, const GroupPoint& z) const {
  if (!(r > 0.0)) throw std::invalid_argument("dilate: scale must be positive");
  if (z.dim() != dim()) throw std::invalid_argument("dilate: dimension mismatch");
  GroupPoint out = z;
  for (int i = 0; i < dim(); ++i) out.x(i) = z.x(i) * ipow(r, blocks_.dilation_exponents[i]);
  out.t = z.t * r * r;
  return out;
}

double KolmogorovGroup::dilation_jacobian(double r) const {
  double j = r * r;
  for (int e : blocks_.dilation_exponents) j *= ipow(r, e);
  return j;
}

double KolmogorovGroup::hom_norm(const GroupPoint& z) const {
  if (z.dim() != dim()) throw std::invalid_argument("hom_norm: dimension mismatch");
  // Radial function f(r) = sum x_i^2 r^{-2 a_i} + t^2 r^{-4}, strictly
  // decreasing from +inf to 0 on (0, inf).
  auto f = [&](double r) {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double xi = z.x(i);
      if (xi != 0.0) s += xi * xi / ipow(r, 2 * blocks_.dilation_exponents[i]);
    }
    if (z.t != 0.0) s += z.t * z.t / ipow(r, 4);
    return s;
  };
  auto fprime = [&](double r) {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double xi = z.x(i);
      const int e = 2 * blocks_.dilation_exponents[i];
      if (xi != 0.0) s -= e * xi * xi / ipow(r, e + 1);
    }
    if (z.t != 0.0) s -= 4.0 * z.t * z.t / ipow(r, 5);
    return s;
  };

  // Seed at the largest single-term radius; f(seed) >= 1 there.
  double seed = 0.0;
  for (int i = 0; i < dim(); ++i)
    seed = std::max(seed, std::pow(std::fabs(z.x(i)), 1.0 / blocks_.dilation_exponents[i]));
  seed = std::max(seed, std::sqrt(std::fabs(z.t)));
  if (seed == 0.0) return 0.0;

  double lo = seed, hi = seed;
  while (f(hi) > 1.0) hi *= 2.0;
  if (hi == seed) return seed;  // single non-zero term, exact

  for (int it = 0; it < 80 && (hi - lo) > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 1.0 ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double step = (f(r) - 1.0) / fprime(r);
    const double next = r - step;
    if (next > 0.0 && std::isfinite(next)) r = next;
  }
  return r;
}

double KolmogorovGroup::hom_norm_1(const GroupPoint& z) const {
  if (z.dim() != dim()) throw std::invalid_argument("hom_norm_1: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < dim(); ++i)
    s += std::pow(std::fabs(z.x(i)), 1.0 / blocks_.dilation_exponents[i]);
  return s + std::sqrt(std::fabs(z.t));
}

double KolmogorovGroup::quasi_distance(const GroupPoint& z, const GroupPoint& w) const {
  return hom_norm(compose(inverse(z), w));
}

Vector KolmogorovGroup::hom_norm_gradient(const GroupPoint& z) const {
  const double r = hom_norm(z);
  Vector g = Vector::Zero(dim() + 1);
  if (r == 0.0) return g;
  double w = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const int a = blocks_.dilation_exponents[i];
    w += a * z.x(i) * z.x(i) / ipow(r, 2 * a + 1);
  }
  w += 2.0 * z.t * z.t / ipow(r, 5);
  for (int i = 0; i < dim(); ++i)
    g(i) = z.x(i) / ipow(r, 2 * blocks_.dilation_exponents[i]) / w;
  g(dim()) = z.t / ipow(r, 4) / w;
  return g;
}

bool KolmogorovGroup::contains(const Cylinder& c, const GroupPoint& z) const {
  const GroupPoint w = dilate(1.0 / c.radius, compose(inverse(c.center), z));
  return w.x.squaredNorm() < 1.0 && std::fabs(w.t) < 1.0;
}

bool KolmogorovGroup::contains_past(const Cylinder& c, const GroupPoint& z) const {
  return z.t < c.center.t && contains(c, z);
}

GroupPoint KolmogorovGroup::sample_unit_cylinder(Rng& rng) const {
  Vector x(dim());
  for (;;) {
    for (int i = 0; i < dim(); ++i) x(i) = rng.uniform(-1.0, 1.0);
    if (x.squaredNorm() < 1.0) break;
  }
  return GroupPoint(std::move(x), rng.uniform(-1.0, 1.0));
}

namespace {

// A point on the topological boundary of Q_1: either the lateral surface
// |x| = 1 or a time cap |t| = 1.
GroupPoint sample_unit_cylinder_boundary(const KolmogorovGroup& g, Rng& rng) {
  const int n = g.dim();
  Vector x(n);
  if (rng.uniform() < 0.5) {
    double norm2 = 0.0;
    do {
      for (int i = 0; i < n; ++i) x(i) = rng.normal();
      norm2 = x.squaredNorm();
    } while (norm2 == 0.0);
    x /= std::sqrt(norm2);
    return GroupPoint(std::move(x), rng.uniform(-1.0, 1.0));
  }
  for (;;) {
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(-1.0, 1.0);
    if (x.squaredNorm() < 1.0) break;
  }
  return GroupPoint(std::move(x), rng.uniform() < 0.5 ? -1.0 : 1.0);
}

}  // namespace

double cylinder_inclusion_constant(const KolmogorovGroup& group, int trials, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("cylinder_inclusion_constant: need trials >= 100");
  Rng rng(seed);
  const std::vector<std::pair<double, double>> pairs = {
      {0.5, 1.0}, {0.75, 1.0}, {0.9, 1.0}, {0.5, 0.75}, {0.25, 0.5}};

  struct Sample {
    GroupPoint z;
    GroupPoint omega;  // boundary point of Q_1, to be dilated per candidate
  };
  std::vector<std::vector<Sample>> samples(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    samples[p].reserve(trials);
    for (int s = 0; s < trials; ++s)
      samples[p].push_back({group.dilate(pairs[p].first, group.sample_unit_cylinder(rng)),
                            sample_unit_cylinder_boundary(group, rng)});
  }

  auto holds = [&](double cbar) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double rho = pairs[p].first, r = pairs[p].second;
      const Cylinder big(GroupPoint::origin(group.dim()), r);
      const double small_r = cbar * r * (r - rho);
      for (const Sample& s : samples[p]) {
        const GroupPoint w = group.dilate(small_r, s.omega);
        if (!group.contains(big, group.compose(s.z, w))) return false;
      }
    }
    return true;
  };

  for (int k = 63; k >= 1; --k) {
    const double cbar = k / 64.0;
    if (holds(cbar)) return cbar;
  }
  for (double cbar = 1.0 / 128.0; cbar >= 1.0 / 8192.0; cbar *= 0.5)
    if (holds(cbar)) return cbar;
  return 0.0;
}

}  // namespace kolmo
