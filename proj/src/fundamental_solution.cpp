#include "kolmo/fundamental_solution.hpp"

#include <cmath>
#include <stdexcept>

#include "kolmo/parallel.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

namespace {

// 15-point Gauss-Legendre rule on [-1, 1], nodes >= 0 (symmetric).
constexpr int kGlHalf = 8;
const double kGlNode[kGlHalf] = {0.0,
                                 0.2011940939974345,
                                 0.3941513470775634,
                                 0.5709721726085388,
                                 0.7244177313601701,
                                 0.8482065834104272,
                                 0.9372733924007060,
                                 0.9879925180204854};
const double kGlWeight[kGlHalf] = {0.2025782419255613,
                                   0.1984314853271116,
                                   0.1861610000155622,
                                   0.1662692058169939,
                                   0.1395706779261543,
                                   0.1071592204671719,
                                   0.0703660474881081,
                                   0.0307532419961173};

Matrix a0_matrix(int n, int m0) {
  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(m0, m0).setIdentity();
  return a;
}

Matrix gl15(const Matrix& B, const Matrix& a0, double lo, double hi) {
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  Matrix acc = Matrix::Zero(B.rows(), B.cols());
  for (int i = 0; i < kGlHalf; ++i) {
    const double s1 = mid + half * kGlNode[i];
    const Matrix e1 = mat_exp(B, s1);
    Matrix term = e1 * a0 * e1.transpose();
    if (i > 0) {
      const double s2 = mid - half * kGlNode[i];
      const Matrix e2 = mat_exp(B, s2);
      term += e2 * a0 * e2.transpose();
    }
    acc += kGlWeight[i] * term;
  }
  return half * acc;
}

void adaptive_cov(const Matrix& B, const Matrix& a0, double lo, double hi, const Matrix& whole,
                  double tol, int depth, Matrix& out) {
  const double mid = 0.5 * (lo + hi);
  const Matrix left = gl15(B, a0, lo, mid);
  const Matrix right = gl15(B, a0, mid, hi);
  const double err = (whole - left - right).cwiseAbs().maxCoeff();
  if (err <= tol || depth >= 28) {
    out += left + right;
    return;
  }
  adaptive_cov(B, a0, lo, mid, left, 0.5 * tol, depth + 1, out);
  adaptive_cov(B, a0, mid, hi, right, 0.5 * tol, depth + 1, out);
}

Matrix covariance_any(const Matrix& B, int m0, double t, const std::vector<Matrix>& poly) {
  if (!(t > 0.0)) throw std::domain_error("covariance: t must be positive");
  const int n = static_cast<int>(B.rows());
  if (!poly.empty()) {
    Matrix c = Matrix::Zero(n, n);
    double tk = t;
    for (const Matrix& m : poly) {
      c += tk * m;
      tk *= t;
    }
    return c;
  }
  const Matrix a0 = a0_matrix(n, m0);
  Matrix out = Matrix::Zero(n, n);
  adaptive_cov(B, a0, 0.0, t, gl15(B, a0, 0.0, t), 1e-12 * t, 0, out);
  return out;
}

std::vector<Matrix> covariance_poly(const Matrix& B, int m0) {
  // E(s) A0 E(s)^T is a matrix polynomial when B is nilpotent; integrate
  // term by term: C(t) = sum_k M_k t^{k+1} / (k+1).
  int k = 0;
  if (!nilpotency_index(B, &k)) return {};
  const int n = static_cast<int>(B.rows());
  std::vector<Matrix> p;  // (-B)^j / j!
  Matrix term = Matrix::Identity(n, n);
  p.push_back(term);
  for (int j = 1; j < k; ++j) {
    term = term * (-1.0 / j * B);
    p.push_back(term);
  }
  const Matrix a0 = a0_matrix(n, m0);
  std::vector<Matrix> poly(2 * p.size() - 1, Matrix::Zero(n, n));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      poly[i + j] += p[i] * a0 * p[j].transpose() / static_cast<double>(i + j + 1);
  return poly;
}

}  // namespace

KernelEvaluator::KernelEvaluator(Matrix B, int m0, int quadrature_order)
    : group_(KolmogorovGroup::from_operator(B, m0)),
      m0_(m0),
      quadrature_order_(quadrature_order),
      poly_(covariance_poly(B, m0)) {}

Matrix KernelEvaluator::covariance(double t) const {
  return covariance_any(group_.B(), m0_, t, poly_);
}

std::shared_ptr<const KernelEvaluator::Factors> KernelEvaluator::factors(double s) const {
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
  }
  auto f = std::make_shared<Factors>();
  f->e = group_.exp_minus(s);
  const Matrix c = covariance(s);
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance C(t) is not positive definite at t = " + std::to_string(s));
  const int n = dim();
  f->c_inv = llt.solve(Matrix::Identity(n, n));
  f->log_det = 0.0;
  for (int i = 0; i < n; ++i) f->log_det += 2.0 * std::log(llt.matrixL()(i, i));
  f->log_norm = -0.5 * n * std::log(4.0 * M_PI) - 0.5 * f->log_det - s * group_.trace_B();
  {
    std::unique_lock lock(mutex_);
    cache_[s] = f;
  }
  return f;
}

double KernelEvaluator::log_gamma_origin(const GroupPoint& z, bool* positive) const {
  if (!(z.t > 0.0)) {
    if (positive) *positive = false;
    return -std::numeric_limits<double>::infinity();
  }
  if (positive) *positive = true;
  const auto f = factors(z.t);
  const double quad = z.x.dot(f->c_inv * z.x);
  return f->log_norm - 0.25 * quad;
}

double KernelEvaluator::gamma_origin(const GroupPoint& z) const {
  bool positive = false;
  const double lg = log_gamma_origin(z, &positive);
  return positive ? std::exp(lg) : 0.0;
}

double KernelEvaluator::gamma(const GroupPoint& z, const GroupPoint& zeta) const {
  const double s = z.t - zeta.t;
  if (!(s > 0.0)) return 0.0;
  const auto f = factors(s);
  const Vector y = z.x - f->e * zeta.x;
  return std::exp(f->log_norm - 0.25 * y.dot(f->c_inv * y));
}

Vector KernelEvaluator::gamma_pole_gradient(const GroupPoint& z, const GroupPoint& zeta) const {
  const double s = z.t - zeta.t;
  if (!(s > 0.0)) return Vector::Zero(m0_);
  const auto f = factors(s);
  const Vector y = z.x - f->e * zeta.x;
  const double g = std::exp(f->log_norm - 0.25 * y.dot(f->c_inv * y));
  const Vector full = 0.5 * g * (f->e.transpose() * (f->c_inv * y));
  return full.head(m0_);
}

KernelEvaluator KernelEvaluator::principal_part() const {
  return KernelEvaluator(zero_star_blocks(group_.B(), group_.blocks()), m0_, quadrature_order_);
}

Matrix covariance_matrix(const Matrix& B, int m0, double t) {
  return covariance_any(B, m0, t, covariance_poly(B, m0));
}

bool is_effectively_spd(const Matrix& c, double rel_tol) {
  const int n = static_cast<int>(c.rows());
  Vector d(n);
  for (int i = 0; i < n; ++i) {
    if (!(c(i, i) > 0.0)) return false;
    d(i) = 1.0 / std::sqrt(c(i, i));
  }
  const Matrix corr = d.asDiagonal() * c * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (corr + corr.transpose()));
  return es.eigenvalues().minCoeff() > rel_tol;
}

Matrix zero_star_blocks(const Matrix& B, const BlockStructure& blocks) {
  Matrix b0 = Matrix::Zero(B.rows(), B.cols());
  int row_off = blocks.m[0];
  int col_off = 0;
  for (int j = 1; j <= blocks.kappa; ++j) {
    b0.block(row_off, col_off, blocks.m[j], blocks.m[j - 1]) =
        B.block(row_off, col_off, blocks.m[j], blocks.m[j - 1]);
    col_off = row_off;
    row_off += blocks.m[j];
  }
  return b0;
}

namespace {

// Time-mass of the kernel over the apex cell of z: int e^{-s tr B} ds over
// the part of the cell's time extent in the strict past of z.
double apex_time_mass(double trace_b, double s_lo, double s_hi) {
  if (s_hi <= s_lo) return 0.0;
  if (trace_b == 0.0) return s_hi - s_lo;
  return (std::exp(-s_lo * trace_b) - std::exp(-s_hi * trace_b)) / trace_b;
}

// Flat index of the cell containing z, or npos.
std::size_t apex_cell(const GridFunction& f, const GroupPoint& z) {
  const int n = f.n_axes();
  std::size_t flat = 0;
  for (int i = 0; i < n; ++i) {
    const double c = (i < n - 1) ? z.x(i) : z.t;
    const double rel = (c - f.box().lo[i]) / f.h(i);
    if (rel < 0.0 || rel >= f.resolution()[i]) return static_cast<std::size_t>(-1);
    flat += static_cast<std::size_t>(rel) * f.stride(i);
  }
  return flat;
}

}  // namespace

double gamma_potential(const KernelEvaluator& kernel, const GridFunction& f, const GroupPoint& z) {
  std::vector<const GridFunction*> fs{&f};
  auto batch = gamma_potential_batch(kernel, fs, {z}, false);
  return batch.potential[0][0];
}

Vector gamma_potential_gradient(const KernelEvaluator& kernel, const GridFunction& f,
                                const GroupPoint& z) {
  std::vector<const GridFunction*> fs{&f};
  auto batch = gamma_potential_batch(kernel, fs, {z}, true);
  return batch.gradient_potential[0][0];
}

PotentialBatchResult gamma_potential_batch(const KernelEvaluator& kernel,
                                           const std::vector<const GridFunction*>& densities,
                                           const std::vector<GroupPoint>& points,
                                           bool with_gradient) {
  PotentialBatchResult out;
  if (densities.empty()) return out;
  const GridFunction& ref = *densities.front();
  for (const GridFunction* f : densities)
    if (f->resolution() != ref.resolution() || f->box().lo != ref.box().lo ||
        f->box().hi != ref.box().hi)
      throw std::invalid_argument("gamma_potential_batch: densities must share one grid");

  const int nd = static_cast<int>(densities.size());
  const int np = static_cast<int>(points.size());
  const int n = ref.n_space();
  const int m0 = kernel.m0();
  out.potential.assign(nd, std::vector<double>(np, 0.0));
  if (with_gradient)
    out.gradient_potential.assign(nd, std::vector<Vector>(np, Vector::Zero(m0)));

  const std::size_t res_t = static_cast<std::size_t>(ref.resolution()[ref.n_axes() - 1]);
  const std::size_t n_xnodes = ref.size() / res_t;
  const double vol = ref.cell_volume();
  const double h_t = ref.h(ref.n_axes() - 1);
  const double trace_b = kernel.trace_B();

  parallel_map(static_cast<std::size_t>(np), [&](std::size_t pi) {
    const GroupPoint& z = points[pi];
    const std::size_t apex = apex_cell(ref, z);
    std::vector<double> acc(nd, 0.0);
    std::vector<Vector> gacc(with_gradient ? nd : 0, Vector::Zero(m0));
    Vector xi(n), y(n);
    std::vector<int> idx;
    // t is the fastest axis: walk slices so each s is factored once.
    for (std::size_t ti = 0; ti < res_t; ++ti) {
      const double tau = ref.coord(ref.n_axes() - 1, static_cast<int>(ti));
      const double s = z.t - tau;
      if (!(s > 0.0)) continue;
      const auto fac = *kernel.factors(s);
      for (std::size_t xn = 0; xn < n_xnodes; ++xn) {
        const std::size_t flat = xn * res_t + ti;
        // reconstruct spatial coords from the x-node index
        std::size_t rem = xn;
        for (int a = n - 1; a >= 0; --a) {
          const int r = ref.resolution()[a];
          xi(a) = ref.coord(a, static_cast<int>(rem % r));
          rem /= r;
        }
        if (flat == apex) {
          const double s_hi = z.t - (tau - 0.5 * h_t);
          const double s_lo = std::max(0.0, z.t - (tau + 0.5 * h_t));
          const double w = apex_time_mass(trace_b, s_lo, s_hi);
          for (int d = 0; d < nd; ++d) acc[d] += (*densities[d])[flat] * w;
          continue;  // gradient: odd kernel, singular cell dropped
        }
        y = z.x - fac.e * xi;
        const Vector ciy = fac.c_inv * y;
        const double g = std::exp(fac.log_norm - 0.25 * y.dot(ciy));
        if (g == 0.0) continue;
        const double gw = g * vol;
        for (int d = 0; d < nd; ++d) acc[d] += (*densities[d])[flat] * gw;
        if (with_gradient) {
          const Vector grad = 0.5 * gw * (fac.e.transpose() * ciy).head(m0);
          for (int d = 0; d < nd; ++d) gacc[d] += (*densities[d])[flat] * grad;
        }
      }
    }
    for (int d = 0; d < nd; ++d) {
      out.potential[d][pi] = acc[d];
      if (with_gradient) out.gradient_potential[d][pi] = -gacc[d];
    }
  }, 4);
  return out;
}

PotentialNormReport potential_norm_check(const KernelEvaluator& kernel, double p,
                                         const std::vector<int>& resolutions, int n_densities,
                                         std::uint64_t seed) {
  const int Q = kernel.group().blocks().Q;
  if (!(p > 1.0 && p < 0.5 * (Q + 2)))
    throw std::domain_error(
        "potential_norm_check: need 1 < p < (Q+2)/2; the embedding exponents "
        "1/p* = 1/p - 1/(Q+2) and 1/p** = 1/p - 2/(Q+2) degenerate otherwise");

  PotentialNormReport rep;
  rep.p = p;
  rep.p_star = 1.0 / (1.0 / p - 1.0 / (Q + 2));
  rep.p_star_star = 1.0 / (1.0 / p - 2.0 / (Q + 2));

  const int n = kernel.dim();
  const Box box = Box::unit_cylinder(n);
  const KolmogorovGroup& group = kernel.group();
  const Cylinder cyl(GroupPoint::origin(n), 1.0);

  // Battery of positive bump mixtures supported well inside the cylinder.
  Rng rng(seed);
  struct BumpSpec {
    Vector center;
    Vector width;
  };
  std::vector<std::vector<BumpSpec>> batteries(n_densities);
  for (auto& bumps : batteries) {
    const int k = 2 + rng.uniform_int(0, 1);
    for (int b = 0; b < k; ++b) {
      BumpSpec bs;
      bs.center.resize(n + 1);
      bs.width.resize(n + 1);
      for (int i = 0; i <= n; ++i) {
        bs.width(i) = rng.uniform(0.25, 0.45);
        bs.center(i) = rng.uniform(-0.5, 0.5);
      }
      bumps.push_back(bs);
    }
  }
  auto density = [&](const std::vector<BumpSpec>& bumps, const Vector& x, double t) {
    double v = 0.0;
    for (const auto& b : bumps) {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        const double y = (x(i) - b.center(i)) / b.width(i);
        prod *= std::fabs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0;
      }
      const double yt = (t - b.center(n)) / b.width(n);
      prod *= std::fabs(yt) < 1.0 ? std::exp(-1.0 / (1.0 - yt * yt)) : 0.0;
      v += prod;
    }
    return 20.0 * v;
  };

  // Fixed evaluation lattice; the source grid refines across levels.
  const int eval_res = 9;
  GridFunction eval_lattice(box, std::vector<int>(n + 1, eval_res));
  std::vector<GroupPoint> eval_points;
  for (std::size_t i = 0; i < eval_lattice.size(); ++i) {
    GroupPoint zp = eval_lattice.point(i);
    if (group.contains(cyl, zp)) eval_points.push_back(zp);
  }
  const double eval_cell = eval_lattice.cell_volume();

  for (int res : resolutions) {
    PotentialLevelReport level;
    level.resolution = res;
    std::vector<GridFunction> fs;
    std::vector<const GridFunction*> fps;
    for (int d = 0; d < n_densities; ++d) {
      fs.push_back(GridFunction::sample(box, std::vector<int>(n + 1, res),
                                        [&](const Vector& x, double t) {
                                          return density(batteries[d], x, t);
                                        }));
    }
    for (auto& f : fs) fps.push_back(&f);

    const auto batch = gamma_potential_batch(kernel, fps, eval_points, true);

    for (int d = 0; d < n_densities; ++d) {
      // ||f||_p on the source lattice, restricted to the cylinder.
      double f_norm = 0.0;
      for (std::size_t i = 0; i < fs[d].size(); ++i) {
        if (fs[d][i] == 0.0) continue;
        if (!group.contains(cyl, fs[d].point(i))) continue;
        f_norm += std::pow(std::fabs(fs[d][i]), p) * fs[d].cell_volume();
      }
      f_norm = std::pow(f_norm, 1.0 / p);
      if (f_norm == 0.0) {
        ++level.skipped;
        continue;
      }
      double pot_norm = 0.0, grad_norm = 0.0;
      for (std::size_t e = 0; e < eval_points.size(); ++e) {
        pot_norm += std::pow(std::fabs(batch.potential[d][e]), rep.p_star_star) * eval_cell;
        grad_norm += std::pow(batch.gradient_potential[d][e].norm(), rep.p_star) * eval_cell;
      }
      pot_norm = std::pow(pot_norm, 1.0 / rep.p_star_star);
      grad_norm = std::pow(grad_norm, 1.0 / rep.p_star);
      level.max_ratio_sobolev = std::max(level.max_ratio_sobolev, pot_norm / f_norm);
      level.max_ratio_gradient = std::max(level.max_ratio_gradient, grad_norm / f_norm);
    }
    rep.levels.push_back(level);
  }

  auto drift = [](const std::vector<PotentialLevelReport>& levels, bool gradient) {
    double lo = 1e300, hi = 0.0;
    for (const auto& l : levels) {
      const double v = gradient ? l.max_ratio_gradient : l.max_ratio_sobolev;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return lo > 0.0 ? hi / lo : 1.0;
  };
  rep.drift_sobolev = drift(rep.levels, false);
  rep.drift_gradient = drift(rep.levels, true);
  return rep;
}

}  // namespace kolmo
