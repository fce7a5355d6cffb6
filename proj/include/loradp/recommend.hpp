#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "loradp/error.hpp"
#include "loradp/matrix.hpp"
#include "loradp/rng.hpp"
#include "loradp/svd.hpp"

namespace loradp {

// Smallest enlarged typicality parameter that survives a one-record change:
// gamma_tilde = gamma + (1+gamma)/(eta/(1+gamma) - 1). Defined for
// eta/(1+gamma) > 1.
inline double gamma_tilde(double gamma, double eta) {
  require(gamma >= 0.0, "gamma must be nonnegative");
  const double band = eta / (1.0 + gamma);
  require(band > 1.0, "eta too small for gamma");
  return gamma + (1.0 + gamma) / (band - 1.0);
}

struct UserTypicality {
  double row_norm_sq = 0.0;  // |T_i|^2, the user's record mass
  bool is_typical = false;
};

struct TypicalityReport {
  double eta = 0.0;
  double gamma = 0.0;
  std::optional<double> gamma_tilde;  // absent when eta/(1+gamma) <= 1
  std::vector<UserTypicality> per_user;
  Index typical_count = 0;
  double typical_fraction = 0.0;
};

namespace detail {

inline TypicalityReport typicality_impl(std::vector<double> row_norms,
                                        double eta, double gamma) {
  require(gamma > 0.0, "typicality: gamma must be positive");
  require(eta > 0.0, "typicality: eta is zero");
  TypicalityReport rep;
  rep.eta = eta;
  rep.gamma = gamma;
  if (eta / (1.0 + gamma) > 1.0)
    rep.gamma_tilde = loradp::gamma_tilde(gamma, eta);
  const double lo = eta / (1.0 + gamma), hi = (1.0 + gamma) * eta;
  rep.per_user.reserve(row_norms.size());
  for (double mass : row_norms) {
    const bool ok = mass >= lo && mass <= hi;
    rep.per_user.push_back({mass, ok});
    if (ok) ++rep.typical_count;
  }
  rep.typical_fraction =
      double(rep.typical_count) / double(row_norms.size());
  return rep;
}

}  // namespace detail

inline TypicalityReport typicality(const PreferenceMatrix& t, double gamma) {
  std::vector<double> norms(size_t(t.m()));
  for (Index i = 0; i < t.m(); ++i)
    norms[size_t(i)] = double(t.row_counts()[size_t(i)]);
  return detail::typicality_impl(std::move(norms), t.stats().eta, gamma);
}

inline TypicalityReport typicality(const Matrix& t, double gamma) {
  require(t.rows() >= 1, "typicality: empty matrix");
  std::vector<double> norms(size_t(t.rows()));
  for (Index i = 0; i < t.rows(); ++i)
    norms[size_t(i)] = t.row(i).squaredNorm();
  return detail::typicality_impl(std::move(norms),
                                 t.squaredNorm() / double(t.rows()), gamma);
}

// The output law both simplified algorithms share: Pr(j) proportional to the
// squared entries of the user's rank-k row.
inline Vector recommendation_distribution(const SvdFactorization& f, Index i,
                                          Index k) {
  Vector row = low_rank_row(f, i, k);
  const double total = row.squaredNorm();
  const double floor =
      f.r() > 0 ? 1e-24 * f.sigma(0) * f.sigma(0) : 0.0;
  require(total > floor, "cold user at this cutoff");
  return row.cwiseAbs2() / total;
}

inline Index recommend(const SvdFactorization& f, Index i, Index k, Rng& rng) {
  Vector row = low_rank_row(f, i, k);
  const double floor =
      f.r() > 0 ? 1e-24 * f.sigma(0) * f.sigma(0) : 0.0;
  require(row.squaredNorm() > floor, "cold user at this cutoff");
  return l2_sample(row, rng);
}

// Row i projected onto span{v_l : sigma_l >= sigma}. The factorization must
// cover every singular value above the threshold; the dropped-tail mass gives
// the checkable bound sigma_{r+1} <= sqrt(residual_tail_sq).
inline Vector project_row_by_sigma(const SvdFactorization& f, Index i,
                                   double sigma) {
  require(sigma >= 0.0, "projection threshold must be nonnegative");
  const double total_sq = f.sigma.squaredNorm() + f.residual_tail_sq;
  const bool complete = f.residual_tail_sq <= 1e-9 * total_sq;
  require(complete || sigma * sigma > f.residual_tail_sq,
          "threshold below uncomputed tail");
  Index count = 0;
  while (count < f.r() && f.sigma(count) >= sigma) ++count;
  return low_rank_row(f, i, count);
}

}  // namespace loradp
