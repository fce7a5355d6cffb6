#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "loradp/error.hpp"
#include "loradp/matrix.hpp"
#include "loradp/rng.hpp"

namespace loradp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Ordered singular triplets (sigma_l, u_l, v_l) up to rank r, plus the
// squared Frobenius mass of the dropped tail.
struct SvdFactorization {
  Vector sigma;          // r, non-increasing, >= 0
  Matrix left;           // m x r
  Matrix right;          // n x r
  double residual_tail_sq = 0.0;
  Index m = 0;
  Index n = 0;

  Index r() const { return sigma.size(); }
};

namespace detail {

// Sign convention: the largest-magnitude component of each right vector is
// made non-negative (ties broken by lowest index); the left vector follows.
inline void fix_signs(Matrix& left, Matrix& right) {
  for (Eigen::Index l = 0; l < right.cols(); ++l) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < right.rows(); ++i) {
      const double a = std::fabs(right(i, l));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (right(best, l) < 0.0) {
      right.col(l) = -right.col(l);
      left.col(l) = -left.col(l);
    }
  }
}

inline SvdFactorization from_bdcsvd(const Matrix& a, Index rank,
                                    double frob_sq) {
  Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(solver.info() == Eigen::Success, "svd: backend did not converge");
  SvdFactorization f;
  f.m = a.rows();
  f.n = a.cols();
  f.sigma = solver.singularValues().head(rank);
  f.left = solver.matrixU().leftCols(rank);
  f.right = solver.matrixV().leftCols(rank);
  fix_signs(f.left, f.right);
  f.residual_tail_sq = std::max(0.0, frob_sq - f.sigma.squaredNorm());
  return f;
}

constexpr std::uint64_t kSketchSeed = 0x5EEDBA5Eull;
constexpr int kOversample = 10;
constexpr int kPowerIters = 4;

// Randomized block subspace iteration (Halko-style) for tall problems where a
// full bidiagonalization is not tractable. `apply`/`apply_t` implement x ->
// A x and x -> A^T x on blocks.
template <class Apply, class ApplyT>
SvdFactorization randomized_svd(Index m, Index n, double frob_sq, Index rank,
                                const Apply& apply, const ApplyT& apply_t) {
  const Index p = std::min<Index>(rank + kOversample, std::min(m, n));
  Rng rng(kSketchSeed, 0);
  Matrix omega(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) omega(i, j) = rng.next_gaussian();
  Matrix y = apply(omega);  // m x p
  auto orth = [](Matrix& x) {
    Eigen::HouseholderQR<Matrix> qr(x);
    x = qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
  };
  orth(y);
  for (int it = 0; it < kPowerIters; ++it) {
    Matrix z = apply_t(y);  // n x p
    orth(z);
    y = apply(z);
    orth(y);
  }
  Matrix b = apply_t(y).transpose();  // p x n
  Eigen::BDCSVD<Matrix> solver(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(solver.info() == Eigen::Success, "svd: backend did not converge");
  SvdFactorization f;
  f.m = m;
  f.n = n;
  f.sigma = solver.singularValues().head(rank);
  f.left = y * solver.matrixU().leftCols(rank);
  f.right = solver.matrixV().leftCols(rank);
  fix_signs(f.left, f.right);
  f.residual_tail_sq = std::max(0.0, frob_sq - f.sigma.squaredNorm());
  return f;
}

constexpr Index kDenseSvdLimit = 2048;

}  // namespace detail

inline SvdFactorization svd(const Matrix& a, Index rank) {
  require(rank >= 1 && rank <= std::min(a.rows(), a.cols()),
          "svd: rank out of range");
  const double frob_sq = a.squaredNorm();
  if (std::min(a.rows(), a.cols()) <= detail::kDenseSvdLimit)
    return detail::from_bdcsvd(a, rank, frob_sq);
  return detail::randomized_svd(
      a.rows(), a.cols(), frob_sq, rank,
      [&](const Matrix& x) { return a * x; },
      [&](const Matrix& x) { return a.transpose() * x; });
}

inline SvdFactorization svd(const PreferenceMatrix& t, Index rank) {
  require(rank >= 1 && rank <= std::min(t.m(), t.n()),
          "svd: rank out of range");
  if (std::min(t.m(), t.n()) <= detail::kDenseSvdLimit)
    return detail::from_bdcsvd(t.to_dense(), rank, t.frob_sq());
  // sparse row-major products keep the sketch pass linear in nnz
  const auto& entries = t.entries();
  auto apply = [&](const Matrix& x) {
    Matrix y = Matrix::Zero(t.m(), x.cols());
    for (const auto& [r, c] : entries) y.row(r) += x.row(c);
    return y;
  };
  auto apply_t = [&](const Matrix& x) {
    Matrix y = Matrix::Zero(t.n(), x.cols());
    for (const auto& [r, c] : entries) y.row(c) += x.row(r);
    return y;
  };
  return detail::randomized_svd(t.m(), t.n(), t.frob_sq(), rank, apply,
                                apply_t);
}

// Row i of the rank-k approximation: sum_{l<=k} sigma_l u_{li} v_l.
inline Vector low_rank_row(const SvdFactorization& f, Index i, Index k) {
  require(i >= 0 && i < f.m, "low_rank_row: row index out of range");
  require(k >= 0 && k <= f.r(), "low_rank_row: insufficient factorization rank");
  if (k == 0) return Vector::Zero(f.n);
  return f.right.leftCols(k) *
         (f.sigma.head(k).array() * f.left.row(i).head(k).transpose().array())
             .matrix();
}

inline double low_rank_entry(const SvdFactorization& f, Index i, Index j,
                             Index k) {
  require(i >= 0 && i < f.m && j >= 0 && j < f.n,
          "low_rank_entry: index out of range");
  require(k >= 0 && k <= f.r(),
          "low_rank_entry: insufficient factorization rank");
  double s = 0.0;
  for (Index l = 0; l < k; ++l) s += f.sigma(l) * f.left(i, l) * f.right(j, l);
  return s;
}

inline Matrix low_rank_dense(const SvdFactorization& f, Index k) {
  require(k >= 0 && k <= f.r(), "low_rank_dense: insufficient rank");
  if (k == 0) return Matrix::Zero(f.m, f.n);
  return f.left.leftCols(k) * f.sigma.head(k).asDiagonal() *
         f.right.leftCols(k).transpose();
}

// Draw index j with probability v_j^2/|v|^2.
inline Index l2_sample(const Vector& v, Rng& rng) {
  const double total = v.squaredNorm();
  require(total > 0.0, "l2_sample: zero vector has no distribution");
  const double target = rng.next_double() * total;
  double acc = 0.0;
  for (Index j = 0; j < v.size(); ++j) {
    acc += v(j) * v(j);
    if (target < acc) return j;
  }
  return v.size() - 1;  // guard against round-off at the top end
}

// Debug export: one line per triplet (sigma, u components, v components).
inline void export_svd_csv(const SvdFactorization& f, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  out.precision(17);
  for (Index l = 0; l < f.r(); ++l) {
    out << f.sigma(l);
    for (Index i = 0; i < f.m; ++i) out << ',' << f.left(i, l);
    for (Index j = 0; j < f.n; ++j) out << ',' << f.right(j, l);
    out << '\n';
  }
}

}  // namespace loradp
