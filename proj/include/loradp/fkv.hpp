#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "loradp/csv.hpp"
#include "loradp/error.hpp"
#include "loradp/matrix.hpp"
#include "loradp/rng.hpp"
#include "loradp/svd.hpp"

namespace loradp {

struct FkvParams {
  double sigma = 1.0;  // singular-value threshold
  double eps = 0.5;
  double kappa = 0.5;
  double c = 1.0;  // constant in q = ceil(c K^4 / eps_bar^2)
  std::optional<Index> q_cap;
  // The sketch definition normalizes v_hat by |W^T u|, which equals the
  // corresponding singular value of W; |S^T u| instead makes v_hat exactly
  // unit norm. Both normalizers are provided, the former is the default.
  bool normalize_by_s = false;
};

struct FkvSketch {
  Index q = 0;
  std::vector<Index> row_ids;
  std::vector<double> row_probs;  // |T_row|^2 / |T|^2 per sampled row
  std::vector<Index> col_ids;
  std::vector<double> col_probs;  // |S_col|^2 / |S|^2 per sampled column
  Matrix w;                       // q x q twice-downsampled matrix
  Vector sigma_hat;               // singular values of w clearing the threshold
  Matrix v_hat;                   // n x k reconstructed right vectors
  double big_k = 0.0;             // |T|^2 / sigma^2
  double eps_bar = 0.0;           // kappa * eps^2

  Index k() const { return v_hat.cols(); }

  std::string sigma_csv() const {
    std::string out = "component,sigma_hat\n";
    for (Index a = 0; a < sigma_hat.size(); ++a)
      out += join_csv({std::to_string(a + 1), format_double(sigma_hat(a))}) +
             '\n';
    return out;
  }

  std::string vectors_csv() const {
    std::vector<std::string> head = {"coord"};
    for (Index a = 0; a < v_hat.cols(); ++a)
      head.push_back("v" + std::to_string(a + 1));
    std::string out = join_csv(head) + '\n';
    for (Index j = 0; j < v_hat.rows(); ++j) {
      std::vector<std::string> cells = {std::to_string(j)};
      for (Index a = 0; a < v_hat.cols(); ++a)
        cells.push_back(format_double(v_hat(j, a)));
      out += join_csv(cells) + '\n';
    }
    return out;
  }
};

// Rebuilds the rescaled row sketch S (q x n) from the sampled ids; row r is
// T_{id_r} / sqrt(q p_r), so E[S^T S] = T^T T.
inline Matrix fkv_row_sketch(const FkvSketch& sk, const Matrix& t) {
  Matrix s(sk.q, t.cols());
  for (Index r = 0; r < sk.q; ++r)
    s.row(r) =
        t.row(sk.row_ids[static_cast<std::size_t>(r)]) /
        std::sqrt(static_cast<double>(sk.q) *
                  sk.row_probs[static_cast<std::size_t>(r)]);
  return s;
}

inline FkvSketch modfkv(const Matrix& t, const FkvParams& p, Rng& rng) {
  require(p.sigma > 0.0, "modfkv: threshold must be positive");
  require(p.eps > 0.0 && p.eps <= 1.0, "modfkv: eps outside (0,1]");
  require(p.kappa > 0.0 && p.kappa <= 1.0, "modfkv: kappa outside (0,1]");
  require(p.c > 0.0, "modfkv: c must be positive");
  const Index m = t.rows(), n = t.cols();
  const double frob_sq = t.squaredNorm();
  require(frob_sq > 0.0, "modfkv: zero matrix");

  FkvSketch sk;
  sk.big_k = frob_sq / (p.sigma * p.sigma);
  sk.eps_bar = p.kappa * p.eps * p.eps;
  const double theory =
      p.c * std::pow(sk.big_k, 4) / (sk.eps_bar * sk.eps_bar);
  const Index cap = p.q_cap ? *p.q_cap : std::min(m, n);
  require(cap >= 1, "modfkv: q must be >= 1");
  sk.q = theory < static_cast<double>(cap)
             ? static_cast<Index>(std::ceil(theory))
             : cap;
  if (sk.q < 1) sk.q = 1;

  // ell^2 row importance sampling with replacement
  Vector row_norms(m);
  for (Index i = 0; i < m; ++i) row_norms(i) = t.row(i).norm();
  sk.row_ids.reserve(static_cast<std::size_t>(sk.q));
  for (Index r = 0; r < sk.q; ++r) {
    const Index id = l2_sample(row_norms, rng);
    sk.row_ids.push_back(id);
    sk.row_probs.push_back(row_norms(id) * row_norms(id) / frob_sq);
  }
  const Matrix s = fkv_row_sketch(sk, t);

  // ell^2 column importance sampling of S, also with replacement
  const double s_frob_sq = s.squaredNorm();
  Vector col_norms(n);
  for (Index j = 0; j < n; ++j) col_norms(j) = s.col(j).norm();
  sk.w.resize(sk.q, sk.q);
  for (Index c = 0; c < sk.q; ++c) {
    const Index id = l2_sample(col_norms, rng);
    sk.col_ids.push_back(id);
    sk.col_probs.push_back(col_norms(id) * col_norms(id) / s_frob_sq);
    sk.w.col(c) =
        s.col(id) / std::sqrt(static_cast<double>(sk.q) *
                              sk.col_probs[static_cast<std::size_t>(c)]);
  }

  const auto fw = svd(sk.w, sk.q);
  Index keep = 0;
  while (keep < fw.r() && fw.sigma(keep) >= p.sigma) ++keep;
  require(keep >= 1, "threshold filters everything");

  sk.sigma_hat = fw.sigma.head(keep);
  sk.v_hat.resize(n, keep);
  for (Index a = 0; a < keep; ++a) {
    const Vector u = fw.left.col(a);
    const Vector v = s.transpose() * u;
    const double denom = p.normalize_by_s ? v.norm() : (sk.w.transpose() * u).norm();
    require(denom > 0.0, "modfkv: degenerate component");
    sk.v_hat.col(a) = v / denom;
  }
  return sk;
}

// Row of the sketched low-rank approximation: T_i sum_a v_a v_a^T.
inline Vector fkv_row(const FkvSketch& sk, const Matrix& t, Index i) {
  require(i >= 0 && i < t.rows(), "fkv_row: row out of range");
  require(sk.v_hat.cols() >= 1, "fkv_row: empty sketch");
  Vector out = Vector::Zero(t.cols());
  for (Index a = 0; a < sk.v_hat.cols(); ++a)
    out += t.row(i).dot(sk.v_hat.col(a)) * sk.v_hat.col(a);
  return out;
}

// Recommendation drawn from the sketched row by ell^2 sampling.
inline Index fkv_recommend(const FkvSketch& sk, const Matrix& t, Index i,
                           Rng& rng) {
  return l2_sample(fkv_row(sk, t, i), rng);
}

struct FkvQuality {
  double projector_residual = 0.0;
  std::vector<double> principal_angles;  // radians, ascending
};

// Measures how well span(v_hat) captures the top-k right space: the Frobenius
// residual of T_k projected off span(v_hat), plus the principal angles
// between the two spans. v_hat is orthonormalized first, so the choice of
// normalizer convention does not affect the report.
inline FkvQuality fkv_quality(const FkvSketch& sk, const Matrix& t, Index k) {
  require(k >= 1, "fkv_quality: k must be >= 1");
  require(k <= sk.k(), "fkv_quality: k exceeds sketch rank");
  require(k <= std::min(t.rows(), t.cols()),
          "fkv_quality: k exceeds min(m,n)");
  Eigen::HouseholderQR<Matrix> qr(sk.v_hat);
  const Matrix basis =
      qr.householderQ() * Matrix::Identity(t.cols(), sk.v_hat.cols());

  const auto f = svd(t, k);
  const Matrix tk = low_rank_dense(f, k);
  FkvQuality out;
  out.projector_residual =
      (tk - (tk * basis) * basis.transpose()).norm() / tk.norm();

  const Matrix overlap = f.right.leftCols(k).transpose() * basis;
  Eigen::BDCSVD<Matrix> osvd(overlap);
  const auto& cosines = osvd.singularValues();  // descending cosines
  for (Index a = 0; a < cosines.size(); ++a)
    out.principal_angles.push_back(
        std::acos(std::clamp(cosines(a), 0.0, 1.0)));
  return out;
}

}  // namespace loradp
