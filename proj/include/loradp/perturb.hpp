#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "loradp/csv.hpp"
#include "loradp/error.hpp"
#include "loradp/matrix.hpp"
#include "loradp/parallel.hpp"
#include "loradp/rng.hpp"
#include "loradp/svd.hpp"

namespace loradp {

enum class FlipDirection { add, remove };

// One-entry difference between neighbouring preference matrices. `add` sets a
// zero entry to one (C = +1), `remove` clears a set entry (C = -1). On dense
// real matrices the same flip adds C to the entry.
struct NeighbourFlip {
  Index i = 0;
  Index j = 0;
  FlipDirection direction = FlipDirection::add;

  double sign() const {
    return direction == FlipDirection::add ? 1.0 : -1.0;
  }
  NeighbourFlip inverse() const {
    return {i, j,
            direction == FlipDirection::add ? FlipDirection::remove
                                            : FlipDirection::add};
  }
};

inline PreferenceMatrix flip_entry(const PreferenceMatrix& t,
                                   NeighbourFlip flip) {
  require(flip.i >= 0 && flip.i < t.m() && flip.j >= 0 && flip.j < t.n(),
          "flip_entry: index out of range");
  const bool present = t.has(flip.i, flip.j);
  std::vector<Entry> entries = t.entries();
  if (flip.direction == FlipDirection::add) {
    require(!present, "flip_entry: entry already set");
    entries.push_back({flip.i, flip.j});
  } else {
    require(present, "flip_entry: entry already empty");
    entries.erase(std::find(entries.begin(), entries.end(),
                            Entry{flip.i, flip.j}));
  }
  return PreferenceMatrix(t.m(), t.n(), std::move(entries));
}

inline Matrix flip_dense(const Matrix& t, NeighbourFlip flip) {
  require(flip.i >= 0 && flip.i < t.rows() && flip.j >= 0 &&
              flip.j < t.cols(),
          "flip_dense: index out of range");
  Matrix out = t;
  out(flip.i, flip.j) += flip.sign();
  return out;
}

// delta_k      : max entry of |D_k| where D_k = T'_{<=k} - T_{<=k}
// delta_ij_k   : |D_k| at the flipped entry
// f_k          : k(1/m + 1/n), the expected delta scale
// sigma_k_bound: sqrt(2.01 k (1/m^2 + 1/n^2)), the deviation scale
struct PerturbationMeasurement {
  Index k = 0;
  double delta_k = 0.0;
  double delta_ij_k = 0.0;
  bool argmax_at_flip = false;
  double f_k = 0.0;
  double sigma_k_bound = 0.0;
  double row_change_sq = 0.0;
  double global_change = 0.0;
  double capture_fraction = 0.0;
};

struct PredictedPerturbation {
  std::vector<double> alpha_tilde;  // C * v_{lambda j}, lambda <= k
  std::vector<double> beta_tilde;   // C * u_{lambda i}, lambda <= k
  double delta_pred_ij = 0.0;
  double capture_fraction = 0.0;
  bool degenerate = false;         // a 1/sigma term was skipped
  bool appended_rank_one = false;  // flip orthogonal to every factor
};

inline double f_of_k(Index k, Index m, Index n) {
  return static_cast<double>(k) * (1.0 / static_cast<double>(m) +
                                   1.0 / static_cast<double>(n));
}

inline double sigma_band(Index k, Index m, Index n) {
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return std::sqrt(2.01 * static_cast<double>(k) *
                   (1.0 / (dm * dm) + 1.0 / (dn * dn)));
}

// First-order prediction of the truncation change caused by one flip. The
// per-factor corrections alpha_tilde = C v_{lambda j}, beta_tilde =
// C u_{lambda i} give the entry-level prediction
//   delta_ij(k) ~ |sum_{lambda<=k} v_{lambda j}^2 + u_{lambda i}^2
//                                 + C u_{lambda i} v_{lambda j} / sigma_lambda|
// and the rank-1 matrix prediction D_pred = e_i a^T + b e_j^T + c e_i e_j^T.
// capture_fraction is the cosine alignment between D_pred (built from every
// positive-sigma factor, i.e. at full rank) and the exact flip e_i e_j^T;
// thanks to orthonormality it only needs the partial row masses
// s_u = sum u_{lambda i}^2 and s_v = sum v_{lambda j}^2.
// Factors with sigma ~ 0 cannot move the truncation and are excluded from the
// capture sums; when every factor is excluded that way the flip appends a new
// rank-1 direction verbatim, so the prediction is exact (capture 1).
inline PredictedPerturbation predict_perturbation(const SvdFactorization& f,
                                                  NeighbourFlip flip,
                                                  Index k) {
  require(k >= 0 && k <= f.r(), "predict_perturbation: k exceeds rank");
  require(flip.i >= 0 && flip.i < f.m && flip.j >= 0 && flip.j < f.n,
          "predict_perturbation: flip out of range");
  const double c_sign = flip.sign();
  const double floor = f.r() > 0 ? 1e-12 * f.sigma(0) : 0.0;
  PredictedPerturbation out;
  out.alpha_tilde.reserve(static_cast<std::size_t>(k));
  out.beta_tilde.reserve(static_cast<std::size_t>(k));
  double pred = 0.0;
  for (Index lam = 0; lam < k; ++lam) {
    const double u = f.left(flip.i, lam);
    const double v = f.right(flip.j, lam);
    out.alpha_tilde.push_back(c_sign * v);
    out.beta_tilde.push_back(c_sign * u);
    pred += v * v + u * u;
    if (f.sigma(lam) > floor)
      pred += c_sign * u * v / f.sigma(lam);
    else
      out.degenerate = true;
  }
  out.delta_pred_ij = std::fabs(pred);

  double s_u = 0.0, s_v = 0.0, cross = 0.0;
  for (Index lam = 0; lam < f.r(); ++lam) {
    if (f.sigma(lam) <= floor) continue;
    const double u = f.left(flip.i, lam);
    const double v = f.right(flip.j, lam);
    s_u += u * u;
    s_v += v * v;
    cross += u * v / f.sigma(lam);
  }
  const double ip = s_u + s_v + c_sign * cross;  // <D_pred, flip>
  const double norm_sq = s_u * (1.0 - s_u) + s_v * (1.0 - s_v) + ip * ip;
  if (norm_sq <= 1e-20) {
    out.appended_rank_one = true;
    out.capture_fraction = 1.0;
  } else {
    out.capture_fraction = ip / std::sqrt(norm_sq);
  }
  return out;
}

namespace detail {

inline std::vector<Index> checked_k_list(std::vector<Index> k_list, Index m,
                                         Index n, Index svd_rank) {
  require(!k_list.empty(), "measure_perturbation: empty k list");
  std::sort(k_list.begin(), k_list.end());
  k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
  require(k_list.front() >= 0, "measure_perturbation: negative k");
  require(k_list.back() <= std::min(m, n),
          "measure_perturbation: k exceeds min(m,n)");
  require(svd_rank >= k_list.back(),
          "measure_perturbation: svd_rank below max k");
  return k_list;
}

// Walks the two factorizations in lockstep, materialising D_k densely and
// recording one measurement per requested cutoff (ascending k order).
inline std::vector<PerturbationMeasurement> measure_with_factorizations(
    const SvdFactorization& ft, const SvdFactorization& ftp,
    NeighbourFlip flip, const std::vector<Index>& k_sorted) {
  const Index m = ft.m, n = ft.n;
  const double capture =
      predict_perturbation(ft, flip, 0).capture_fraction;
  Matrix d = Matrix::Zero(m, n);
  std::vector<PerturbationMeasurement> out;
  out.reserve(k_sorted.size());
  Index lam = 0;
  for (Index k : k_sorted) {
    for (; lam < k; ++lam) {
      if (lam < ftp.r())
        d.noalias() += ftp.sigma(lam) * ftp.left.col(lam) *
                       ftp.right.col(lam).transpose();
      if (lam < ft.r())
        d.noalias() -=
            ft.sigma(lam) * ft.left.col(lam) * ft.right.col(lam).transpose();
    }
    PerturbationMeasurement meas;
    meas.k = k;
    Index ai = 0, aj = 0;
    meas.delta_k = d.cwiseAbs().maxCoeff(&ai, &aj);
    meas.delta_ij_k = std::fabs(d(flip.i, flip.j));
    meas.argmax_at_flip = meas.delta_k > 0.0 && meas.delta_ij_k == meas.delta_k;
    meas.f_k = f_of_k(k, m, n);
    meas.sigma_k_bound = sigma_band(k, m, n);
    meas.row_change_sq = d.row(flip.i).squaredNorm();
    meas.global_change = d.norm();
    meas.capture_fraction = capture;
    out.push_back(meas);
  }
  return out;
}

}  // namespace detail

inline std::vector<PerturbationMeasurement> measure_perturbation(
    const Matrix& t, NeighbourFlip flip, std::vector<Index> k_list,
    Index svd_rank) {
  const auto k_sorted = detail::checked_k_list(
      std::move(k_list), t.rows(), t.cols(), svd_rank);
  const Index eff_rank = std::max<Index>(svd_rank, 1);
  const Matrix tp = flip_dense(t, flip);
  const auto ft = svd(t, eff_rank);
  const auto ftp = svd(tp, eff_rank);
  return detail::measure_with_factorizations(ft, ftp, flip, k_sorted);
}

inline std::vector<PerturbationMeasurement> measure_perturbation(
    const PreferenceMatrix& t, NeighbourFlip flip, std::vector<Index> k_list,
    Index svd_rank) {
  flip_entry(t, flip);  // validates the flip against the stored entries
  return measure_perturbation(t.to_dense(), flip, std::move(k_list), svd_rank);
}

// Admissible flip drawn uniformly over all cells; the direction follows the
// current value, so adds and removes appear in proportion to sparsity.
inline NeighbourFlip sample_flip(const PreferenceMatrix& t, Rng& rng) {
  NeighbourFlip flip;
  flip.i = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(t.m())));
  flip.j = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(t.n())));
  flip.direction =
      t.has(flip.i, flip.j) ? FlipDirection::remove : FlipDirection::add;
  return flip;
}

// Dense matrices accept either direction anywhere; pick one by coin toss.
inline NeighbourFlip sample_flip(const Matrix& t, Rng& rng) {
  NeighbourFlip flip;
  flip.i = static_cast<Index>(
      rng.next_below(static_cast<std::uint64_t>(t.rows())));
  flip.j = static_cast<Index>(
      rng.next_below(static_cast<std::uint64_t>(t.cols())));
  flip.direction =
      (rng.next_u64() & 1u) ? FlipDirection::add : FlipDirection::remove;
  return flip;
}

namespace detail {

// Shared trial runner: one factorization of T, one SVD per flipped copy.
// Trials land in slots indexed by trial id, so thread count never changes
// the result.
inline std::vector<std::vector<PerturbationMeasurement>> run_flip_trials(
    const Matrix& dense, const std::vector<NeighbourFlip>& flips,
    const std::vector<Index>& k_sorted, int threads) {
  const Index svd_rank = std::max<Index>(k_sorted.back(), 1);
  const auto ft = svd(dense, svd_rank);
  std::vector<std::vector<PerturbationMeasurement>> trials(flips.size());
  parallel_for(flips.size(), threads, [&](std::size_t idx) {
    const auto ftp = svd(flip_dense(dense, flips[idx]), svd_rank);
    trials[idx] =
        measure_with_factorizations(ft, ftp, flips[idx], k_sorted);
  });
  return trials;
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace detail

// 95% concentration band half-width multiplier: Chebyshev at 1/t^2 = 5%.
inline constexpr double kChebyshevT = 4.47213595499957939;  // sqrt(20)

struct CoreLemmaRow {
  Index k = 0;
  double f_k = 0.0;
  double sigma_bound = 0.0;
  double delta_mean = 0.0;
  double delta_max = 0.0;
  double outside_frac = 0.0;
  double argmax_frac = 0.0;
};

struct CoreLemmaSweep {
  std::vector<Index> k_list;
  std::vector<CoreLemmaRow> rows;
  std::vector<std::vector<double>> delta_samples;  // [k index][trial]
  std::vector<std::vector<char>> argmax_samples;   // [k index][trial]

  std::string csv() const {
    std::string out = "k,f_k,sigma_bound,delta_mean,delta_max,outside_frac,argmax_frac\n";
    for (const auto& r : rows)
      out += join_csv({std::to_string(r.k), format_double(r.f_k),
                       format_double(r.sigma_bound),
                       format_double(r.delta_mean), format_double(r.delta_max),
                       format_double(r.outside_frac),
                       format_double(r.argmax_frac)}) +
             '\n';
    return out;
  }
};

struct RowNormRow {
  Index k = 0;
  double row_change_mean = 0.0;
  double k_over_n = 0.0;
  double bound2 = 2.0;
  double row_change_max = 0.0;
};

struct RowNormSweep {
  std::vector<Index> k_list;
  std::vector<RowNormRow> rows;
  std::vector<std::vector<double>> row_change_samples;  // squared norms

  std::string csv() const {
    std::string out = "k,row_change_mean,k_over_n,bound2,row_change_max\n";
    for (const auto& r : rows)
      out += join_csv({std::to_string(r.k), format_double(r.row_change_mean),
                       format_double(r.k_over_n), format_double(r.bound2),
                       format_double(r.row_change_max)}) +
             '\n';
    return out;
  }
};

struct GlobalNormRow {
  Index k = 0;
  double global_mean = 0.0;
  double row_mean = 0.0;
  double delta_mean = 0.0;
  double global_ge_row_frac = 0.0;
};

struct GlobalNormSweep {
  std::vector<Index> k_list;
  std::vector<GlobalNormRow> rows;
  std::vector<std::vector<double>> global_samples;
  std::vector<std::vector<double>> row_norm_samples;

  std::string csv() const {
    std::string out = "k,global_mean,row_mean,delta_mean,global_ge_row_frac\n";
    for (const auto& r : rows)
      out += join_csv({std::to_string(r.k), format_double(r.global_mean),
                       format_double(r.row_mean), format_double(r.delta_mean),
                       format_double(r.global_ge_row_frac)}) +
             '\n';
    return out;
  }
};

namespace detail {

template <typename MatrixLike>
std::vector<NeighbourFlip> draw_flips(const MatrixLike& t, Index trials,
                                      Rng& rng) {
  require(trials >= 1, "no admissible flips");
  std::vector<NeighbourFlip> flips;
  flips.reserve(static_cast<std::size_t>(trials));
  for (Index trial = 0; trial < trials; ++trial)
    flips.push_back(sample_flip(t, rng));
  return flips;
}

inline CoreLemmaSweep core_lemma_from_trials(
    const std::vector<std::vector<PerturbationMeasurement>>& trials,
    const std::vector<Index>& k_sorted) {
  CoreLemmaSweep sweep;
  sweep.k_list = k_sorted;
  const std::size_t nk = k_sorted.size();
  sweep.delta_samples.assign(nk, {});
  sweep.argmax_samples.assign(nk, {});
  for (const auto& tr : trials)
    for (std::size_t ki = 0; ki < nk; ++ki) {
      sweep.delta_samples[ki].push_back(tr[ki].delta_k);
      sweep.argmax_samples[ki].push_back(tr[ki].argmax_at_flip ? 1 : 0);
    }
  for (std::size_t ki = 0; ki < nk; ++ki) {
    const auto& ds = sweep.delta_samples[ki];
    CoreLemmaRow row;
    row.k = k_sorted[ki];
    row.f_k = trials.front()[ki].f_k;
    row.sigma_bound = trials.front()[ki].sigma_k_bound;
    row.delta_mean = mean_of(ds);
    row.delta_max = *std::max_element(ds.begin(), ds.end());
    Index outside = 0, hits = 0;
    for (std::size_t t = 0; t < ds.size(); ++t) {
      if (std::fabs(ds[t] - row.f_k) > kChebyshevT * row.sigma_bound)
        ++outside;
      hits += sweep.argmax_samples[ki][t];
    }
    row.outside_frac = static_cast<double>(outside) /
                       static_cast<double>(ds.size());
    row.argmax_frac = static_cast<double>(hits) /
                      static_cast<double>(ds.size());
    sweep.rows.push_back(row);
  }
  return sweep;
}

inline RowNormSweep row_norm_from_trials(
    const std::vector<std::vector<PerturbationMeasurement>>& trials,
    const std::vector<Index>& k_sorted, Index n) {
  RowNormSweep sweep;
  sweep.k_list = k_sorted;
  sweep.row_change_samples.assign(k_sorted.size(), {});
  for (const auto& tr : trials)
    for (std::size_t ki = 0; ki < k_sorted.size(); ++ki)
      sweep.row_change_samples[ki].push_back(tr[ki].row_change_sq);
  for (std::size_t ki = 0; ki < k_sorted.size(); ++ki) {
    const auto& rs = sweep.row_change_samples[ki];
    RowNormRow row;
    row.k = k_sorted[ki];
    row.row_change_mean = mean_of(rs);
    row.k_over_n =
        static_cast<double>(k_sorted[ki]) / static_cast<double>(n);
    row.row_change_max = *std::max_element(rs.begin(), rs.end());
    sweep.rows.push_back(row);
  }
  return sweep;
}

inline GlobalNormSweep global_norm_from_trials(
    const std::vector<std::vector<PerturbationMeasurement>>& trials,
    const std::vector<Index>& k_sorted) {
  GlobalNormSweep sweep;
  sweep.k_list = k_sorted;
  const std::size_t nk = k_sorted.size();
  sweep.global_samples.assign(nk, {});
  sweep.row_norm_samples.assign(nk, {});
  std::vector<std::vector<double>> deltas(nk);
  for (const auto& tr : trials)
    for (std::size_t ki = 0; ki < nk; ++ki) {
      sweep.global_samples[ki].push_back(tr[ki].global_change);
      sweep.row_norm_samples[ki].push_back(std::sqrt(tr[ki].row_change_sq));
      deltas[ki].push_back(tr[ki].delta_k);
    }
  for (std::size_t ki = 0; ki < nk; ++ki) {
    GlobalNormRow row;
    row.k = k_sorted[ki];
    row.global_mean = mean_of(sweep.global_samples[ki]);
    row.row_mean = mean_of(sweep.row_norm_samples[ki]);
    row.delta_mean = mean_of(deltas[ki]);
    Index ge = 0;
    for (std::size_t t = 0; t < sweep.global_samples[ki].size(); ++t)
      if (sweep.global_samples[ki][t] >= sweep.row_norm_samples[ki][t]) ++ge;
    row.global_ge_row_frac = static_cast<double>(ge) /
                             static_cast<double>(sweep.global_samples[ki].size());
    sweep.rows.push_back(row);
  }
  return sweep;
}

template <typename MatrixLike>
std::vector<std::vector<PerturbationMeasurement>> sweep_trials(
    const MatrixLike& t, const Matrix& dense, std::vector<Index> k_list,
    Index trials, Rng& rng, int threads) {
  const auto k_sorted = detail::checked_k_list(std::move(k_list), dense.rows(),
                                               dense.cols(), 0x7fffffff);
  const auto flips = detail::draw_flips(t, trials, rng);
  return detail::run_flip_trials(dense, flips, k_sorted, threads);
}

}  // namespace detail

inline CoreLemmaSweep core_lemma_sweep(const PreferenceMatrix& t,
                                       std::vector<Index> k_list, Index trials,
                                       Rng& rng, int threads = 1) {
  const Matrix dense = t.to_dense();
  auto ks = detail::checked_k_list(k_list, t.m(), t.n(), t.m() + t.n());
  return detail::core_lemma_from_trials(
      detail::sweep_trials(t, dense, std::move(k_list), trials, rng, threads),
      ks);
}

inline CoreLemmaSweep core_lemma_sweep(const Matrix& t,
                                       std::vector<Index> k_list, Index trials,
                                       Rng& rng, int threads = 1) {
  auto ks = detail::checked_k_list(k_list, t.rows(), t.cols(),
                                   t.rows() + t.cols());
  return detail::core_lemma_from_trials(
      detail::sweep_trials(t, t, std::move(k_list), trials, rng, threads), ks);
}

inline RowNormSweep row_norm_sweep(const PreferenceMatrix& t,
                                   std::vector<Index> k_list, Index trials,
                                   Rng& rng, int threads = 1) {
  const Matrix dense = t.to_dense();
  auto ks = detail::checked_k_list(k_list, t.m(), t.n(), t.m() + t.n());
  return detail::row_norm_from_trials(
      detail::sweep_trials(t, dense, std::move(k_list), trials, rng, threads),
      ks, t.n());
}

inline RowNormSweep row_norm_sweep(const Matrix& t, std::vector<Index> k_list,
                                   Index trials, Rng& rng, int threads = 1) {
  auto ks = detail::checked_k_list(k_list, t.rows(), t.cols(),
                                   t.rows() + t.cols());
  return detail::row_norm_from_trials(
      detail::sweep_trials(t, t, std::move(k_list), trials, rng, threads), ks,
      t.cols());
}

inline GlobalNormSweep global_norm_sweep(const PreferenceMatrix& t,
                                         std::vector<Index> k_list,
                                         Index trials, Rng& rng,
                                         int threads = 1) {
  const Matrix dense = t.to_dense();
  auto ks = detail::checked_k_list(k_list, t.m(), t.n(), t.m() + t.n());
  return detail::global_norm_from_trials(
      detail::sweep_trials(t, dense, std::move(k_list), trials, rng, threads),
      ks);
}

inline GlobalNormSweep global_norm_sweep(const Matrix& t,
                                         std::vector<Index> k_list,
                                         Index trials, Rng& rng,
                                         int threads = 1) {
  auto ks = detail::checked_k_list(k_list, t.rows(), t.cols(),
                                   t.rows() + t.cols());
  return detail::global_norm_from_trials(
      detail::sweep_trials(t, t, std::move(k_list), trials, rng, threads), ks);
}

}  // namespace loradp
