#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loradp/csv.hpp"
#include "loradp/error.hpp"
#include "loradp/matrix.hpp"
#include "loradp/parallel.hpp"
#include "loradp/perturb.hpp"
#include "loradp/recommend.hpp"
#include "loradp/rng.hpp"
#include "loradp/svd.hpp"

namespace loradp {

// Privacy budget of the rank-k recommendation law over single-record
// neighbours, guaranteed for gamma-typical users:
//   epsilon = (1 + gamma_tilde)/eta * k/n
//   delta   = (1 + gamma_tilde)/eta * 2.01 * k * (1/m + 1/n)
struct DpBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  Index m = 0;
  Index n = 0;
  Index k = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double gamma_tilde = 0.0;
};

inline DpBudget dp_params(Index m, Index n, Index k, double eta,
                          double gamma) {
  require(m >= 1 && n >= 1, "dp_params: dimensions must be positive");
  require(k >= 1, "dp_params: k must be at least 1");
  DpBudget b;
  b.m = m;
  b.n = n;
  b.k = k;
  b.eta = eta;
  b.gamma = gamma;
  b.gamma_tilde = gamma_tilde(gamma, eta);
  const double lead = (1.0 + b.gamma_tilde) / eta;
  b.epsilon = lead * static_cast<double>(k) / static_cast<double>(n);
  b.delta = lead * 2.01 * static_cast<double>(k) *
            (1.0 / static_cast<double>(m) + 1.0 / static_cast<double>(n));
  return b;
}

// One audited neighbour pair. worst_j is the product with the largest
// (q - delta)/p over both inequality directions; p is the denominator-side
// probability there and p_prime the numerator side. `violated` flags a
// failure at any product in either direction, not just at worst_j.
struct DpTrialRecord {
  Index trial = 0;
  Index i = 0;
  Index j = 0;
  FlipDirection direction = FlipDirection::add;
  Index worst_j = -1;
  double p = 0.0;
  double p_prime = 0.0;
  double ratio = 0.0;
  bool violated = false;
};

struct DpViolationReport {
  DpBudget budget;
  Index trials = 0;
  Index checked_pairs = 0;    // inequality evaluations: 2n per trial
  Index violation_count = 0;  // evaluations that failed
  Index violated_trials = 0;  // trials with at least one failed evaluation
  Index add_trials = 0;
  Index remove_trials = 0;
  double worst_ratio = 0.0;  // max over p > 0 of (p' - delta)/p
  std::vector<DpTrialRecord> records;

  double violation_rate() const {
    return trials > 0 ? static_cast<double>(violated_trials) /
                            static_cast<double>(trials)
                      : 0.0;
  }

  std::string csv() const {
    std::string out = "trial,i,j,direction,worst_j,p,p_prime,ratio,violated\n";
    for (const auto& r : records)
      out += join_csv({std::to_string(r.trial), std::to_string(r.i),
                       std::to_string(r.j),
                       r.direction == FlipDirection::add ? "add" : "remove",
                       std::to_string(r.worst_j), format_double(r.p),
                       format_double(r.p_prime), format_double(r.ratio),
                       r.violated ? "1" : "0"}) +
             '\n';
    return out;
  }
};

namespace detail {

struct DirectionScan {
  Index worst_j = -1;
  double worst_ratio = -std::numeric_limits<double>::infinity();
  double p = 0.0;
  double p_prime = 0.0;
  Index violations = 0;
};

// Checks q_j <= e^eps * p_j + delta at every product; tracks the largest
// (q_j - delta)/p_j over products with p_j > 0.
inline DirectionScan scan_direction(const Vector& p, const Vector& q,
                                    const DpBudget& budget) {
  require(p.size() == q.size(), "scan_direction: law sizes differ");
  DirectionScan scan;
  const double grow = std::exp(budget.epsilon);
  for (Index j = 0; j < p.size(); ++j) {
    if (q(j) > grow * p(j) + budget.delta) ++scan.violations;
    if (p(j) > 0.0) {
      const double ratio = (q(j) - budget.delta) / p(j);
      if (ratio > scan.worst_ratio) {
        scan.worst_ratio = ratio;
        scan.worst_j = j;
        scan.p = p(j);
        scan.p_prime = q(j);
      }
    }
  }
  return scan;
}

// Rank-k output law from a precomputed factorization. Rows whose projection
// carries no mass map to the all-zero law so the audit can keep going where
// the sampler itself would refuse to answer.
inline Vector output_law(const SvdFactorization& f, Index i, Index k) {
  Vector row = low_rank_row(f, i, k);
  const double total = row.squaredNorm();
  const double floor = f.r() > 0 ? 1e-24 * f.sigma(0) * f.sigma(0) : 0.0;
  if (total <= floor) return Vector::Zero(row.size());
  return row.cwiseAbs2() / total;
}

// Uniform admissible flips restricted to typical users, drawn by rejection.
template <typename MatrixLike>
std::vector<NeighbourFlip> draw_typical_flips(const MatrixLike& t,
                                              const TypicalityReport& typ,
                                              Index trials, Rng& rng) {
  require(typ.typical_count > 0, "no typical users");
  require(trials >= 1, "no admissible flips");
  std::vector<NeighbourFlip> flips;
  flips.reserve(static_cast<std::size_t>(trials));
  while (static_cast<Index>(flips.size()) < trials) {
    const NeighbourFlip flip = sample_flip(t, rng);
    if (typ.per_user[static_cast<std::size_t>(flip.i)].is_typical)
      flips.push_back(flip);
  }
  return flips;
}

inline DpViolationReport dp_check_impl(const Matrix& dense,
                                       const std::vector<NeighbourFlip>& flips,
                                       Index k, const DpBudget& budget,
                                       int threads) {
  DpViolationReport rep;
  rep.budget = budget;
  rep.trials = static_cast<Index>(flips.size());
  const auto ft = svd(dense, k);
  std::vector<DpTrialRecord> records(flips.size());
  std::vector<Index> violations(flips.size(), 0);
  parallel_for(flips.size(), threads, [&](std::size_t idx) {
    const NeighbourFlip flip = flips[idx];
    const auto ftp = svd(flip_dense(dense, flip), k);
    const Vector p = output_law(ft, flip.i, k);
    const Vector q = output_law(ftp, flip.i, k);
    const DirectionScan fw = scan_direction(p, q, budget);  // law(T') vs law(T)
    const DirectionScan bw = scan_direction(q, p, budget);  // and the reverse
    const DirectionScan& worst = fw.worst_ratio >= bw.worst_ratio ? fw : bw;
    DpTrialRecord rec;
    rec.trial = static_cast<Index>(idx);
    rec.i = flip.i;
    rec.j = flip.j;
    rec.direction = flip.direction;
    rec.worst_j = worst.worst_j;
    rec.p = worst.p;
    rec.p_prime = worst.p_prime;
    rec.ratio = worst.worst_j >= 0 ? worst.worst_ratio : 0.0;
    rec.violated = fw.violations + bw.violations > 0;
    records[idx] = rec;
    violations[idx] = fw.violations + bw.violations;
  });
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < flips.size(); ++idx) {
    rep.checked_pairs += 2 * dense.cols();
    rep.violation_count += violations[idx];
    if (records[idx].violated) ++rep.violated_trials;
    if (records[idx].direction == FlipDirection::add)
      ++rep.add_trials;
    else
      ++rep.remove_trials;
    if (records[idx].worst_j >= 0)
      worst = std::max(worst, records[idx].ratio);
  }
  rep.worst_ratio = std::isfinite(worst) ? worst : 0.0;
  rep.records = std::move(records);
  return rep;
}

}  // namespace detail

// Empirical audit of the budget: per trial, flip one record of a typical
// user and require both laws to dominate each other up to (epsilon, delta)
// at every product. Defaults to the derived budget of the matrix itself.
inline DpViolationReport dp_check(const Matrix& t, Index k, double gamma,
                                  Index trials, Rng& rng,
                                  std::optional<DpBudget> budget = {},
                                  int threads = 1) {
  require(k >= 1 && k <= std::min(t.rows(), t.cols()),
          "dp_check: bad cutoff");
  const TypicalityReport typ = typicality(t, gamma);
  const DpBudget b = budget ? *budget
                            : dp_params(t.rows(), t.cols(), k,
                                        dense_stats(t).eta, gamma);
  const auto flips = detail::draw_typical_flips(t, typ, trials, rng);
  return detail::dp_check_impl(t, flips, k, b, threads);
}

inline DpViolationReport dp_check(const PreferenceMatrix& t, Index k,
                                  double gamma, Index trials, Rng& rng,
                                  std::optional<DpBudget> budget = {},
                                  int threads = 1) {
  require(k >= 1 && k <= std::min(t.m(), t.n()), "dp_check: bad cutoff");
  const TypicalityReport typ = typicality(t, gamma);
  const DpBudget b =
      budget ? *budget
             : dp_params(t.m(), t.n(), k, t.stats().eta, gamma);
  const auto flips = detail::draw_typical_flips(t, typ, trials, rng);
  return detail::dp_check_impl(t.to_dense(), flips, k, b, threads);
}

struct TypicalizeResult {
  PreferenceMatrix matrix;
  Index added = 0;
  Index removed = 0;
  double frozen_eta = 0.0;  // band reference: the input's eta, not the output's
};

// Repairs every user into the typicality band of the *input* matrix: sparse
// users gain uniformly random unseen records, heavy users lose uniformly
// random existing ones, compliant users keep their rows byte for byte.
inline TypicalizeResult typicalize(const PreferenceMatrix& t, double gamma,
                                   Rng& rng) {
  require(gamma > 0.0, "typicalize: gamma must be positive");
  const double eta = t.stats().eta;
  require(eta > 0.0, "typicalize: eta is zero");
  const double lo = eta / (1.0 + gamma);
  const double hi = (1.0 + gamma) * eta;
  // Integer record counts compatible with the real band [lo, hi]; the fuzz
  // keeps exact rational endpoints like 2.0 from rounding to the wrong side.
  const Index lo_count = static_cast<Index>(std::ceil(lo - 1e-9));
  const Index hi_count = static_cast<Index>(std::floor(hi + 1e-9));
  require(lo_count <= hi_count,
          "typicalize: no integer record count is typical");
  require(lo_count <= t.n(),
          "typicalize: a user needs more records than n allows");

  const auto& src = t.entries();  // sorted by (row, col)
  std::vector<Entry> out_entries;
  out_entries.reserve(src.size());
  Index added = 0;
  Index removed = 0;
  std::size_t pos = 0;
  for (Index i = 0; i < t.m(); ++i) {
    const std::size_t begin = pos;
    while (pos < src.size() && src[pos].first == i) ++pos;
    const Index count = static_cast<Index>(pos - begin);
    if (count < lo_count) {
      std::vector<char> row(static_cast<std::size_t>(t.n()), 0);
      for (std::size_t e = begin; e < pos; ++e) {
        row[static_cast<std::size_t>(src[e].second)] = 1;
        out_entries.push_back(src[e]);
      }
      for (Index need = lo_count - count; need > 0;) {
        const Index j = static_cast<Index>(
            rng.next_below(static_cast<std::uint64_t>(t.n())));
        if (row[static_cast<std::size_t>(j)]) continue;
        row[static_cast<std::size_t>(j)] = 1;
        out_entries.emplace_back(i, j);
        ++added;
        --need;
      }
    } else if (count > hi_count) {
      std::vector<Entry> cols(src.begin() + static_cast<std::ptrdiff_t>(begin),
                              src.begin() + static_cast<std::ptrdiff_t>(pos));
      // Partial Fisher-Yates; the dropped records collect at the back.
      const Index drop = count - hi_count;
      for (Index d = 0; d < drop; ++d) {
        const Index left = count - d;
        const Index pick = static_cast<Index>(
            rng.next_below(static_cast<std::uint64_t>(left)));
        std::swap(cols[static_cast<std::size_t>(pick)],
                  cols[static_cast<std::size_t>(left - 1)]);
      }
      cols.resize(static_cast<std::size_t>(hi_count));
      std::sort(cols.begin(), cols.end());
      out_entries.insert(out_entries.end(), cols.begin(), cols.end());
      removed += drop;
    } else {
      out_entries.insert(out_entries.end(),
                         src.begin() + static_cast<std::ptrdiff_t>(begin),
                         src.begin() + static_cast<std::ptrdiff_t>(pos));
    }
  }
  return {PreferenceMatrix(t.m(), t.n(), std::move(out_entries)), added,
          removed, eta};
}

}  // namespace loradp
