#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "loradp/error.hpp"
#include "loradp/rng.hpp"
#include "loradp/special.hpp"
#include "loradp/svd.hpp"

namespace loradp {

inline constexpr double kPi = 3.14159265358979323846264338328;

// ---------------------------------------------------------------------------
// SProj(N): marginal law of one coordinate of a uniform point on S^{N-1}.
// pdf(x) = (1 - x^2)^{(N-3)/2} / B(1/2, (N-1)/2) on [-1, 1].
// ---------------------------------------------------------------------------

inline double sproj_pdf(double x, Index n_dim) {
  require(n_dim >= 2, "sproj: dimension must be >= 2");
  if (x <= -1.0 || x >= 1.0) {
    // N=2 has integrable endpoint singularities; clamp to 0 at the boundary
    return 0.0;
  }
  const double ex = 0.5 * (double(n_dim) - 3.0);
  const double lb = log_beta(0.5, 0.5 * (double(n_dim) - 1.0));
  return std::exp(ex * std::log1p(-x * x) - lb);
}

inline double sproj_cdf(double x, Index n_dim) {
  require(n_dim >= 2, "sproj: dimension must be >= 2");
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double tail = reg_inc_beta(0.5, 0.5 * (double(n_dim) - 1.0), x * x);
  return x < 0.0 ? 0.5 * (1.0 - tail) : 0.5 * (1.0 + tail);
}

// X = s * sqrt(B), B ~ Beta(1/2, (N-1)/2), s a uniform sign.
inline double sproj_sample(Index n_dim, Rng& rng) {
  require(n_dim >= 2, "sproj: dimension must be >= 2");
  const double b = rng.next_beta(0.5, 0.5 * (double(n_dim) - 1.0));
  const double mag = std::sqrt(b);
  return rng.next_bool() ? mag : -mag;
}

// ---------------------------------------------------------------------------
// Uniform sphere sampling and component-moment checks.
// ---------------------------------------------------------------------------

inline Vector sphere_sample(Index n_dim, Rng& rng) {
  require(n_dim >= 1, "sphere_sample: dimension must be >= 1");
  Vector v(n_dim);
  while (true) {
    for (Index i = 0; i < n_dim; ++i) v(i) = rng.next_gaussian();
    const double norm = v.norm();
    if (norm > 1e-100) return v / norm;
  }
}

struct SphereMomentReport {
  Index n_dim = 0;
  std::int64_t trials = 0;
  // empirical value and batch-based standard error, per statistic
  double mean_x = 0.0, se_x = 0.0;              // E[X_1], theory 0
  double mean_x2 = 0.0, se_x2 = 0.0;            // E[X_1^2], theory 1/N
  double mean_xy = 0.0, se_xy = 0.0;            // E[X_1 X_2], theory 0
  double cov_x2y2 = 0.0, se_cov = 0.0;          // Cov[X_1^2, X_2^2]
  double mean_xyz = 0.0, se_xyz = 0.0;          // E[X_1 X_2 X_3], theory 0
  double theory_x2 = 0.0;
  // Stated covariance constant -2/(N^2(N/2+1)). It is inconsistent with the
  // partial-square-norm variance |I|(N-|I|)/(N^2(N/2+1)): expanding
  // Var[X_1^2+X_2^2] = 2 Var[X_1^2] + 2 Cov forces Cov = -1/(N^2(N/2+1)),
  // half the stated value (N=2 closed form: Cov[cos^2, sin^2] = -1/8).
  // Both are attached; `consistent_cov` is what sampling can reproduce.
  double theory_cov = 0.0;
  double consistent_cov = 0.0;
};

inline SphereMomentReport sphere_moment_report(Index n_dim,
                                               std::int64_t trials, Rng& rng) {
  require(n_dim >= 2, "sphere_moment_report: dimension must be >= 2");
  require(trials >= 1000, "sphere_moment_report: need at least 1000 trials");
  const int batches = 100;
  const std::int64_t per = trials / batches;
  struct Acc {
    double x = 0, x2 = 0, y2 = 0, xy = 0, x2y2 = 0, xyz = 0;
  };
  std::vector<Acc> acc(batches);
  for (int b = 0; b < batches; ++b) {
    for (std::int64_t t = 0; t < per; ++t) {
      Vector v = sphere_sample(n_dim, rng);
      const double x = v(0), y = v(1);
      acc[size_t(b)].x += x;
      acc[size_t(b)].x2 += x * x;
      acc[size_t(b)].y2 += y * y;
      acc[size_t(b)].xy += x * y;
      acc[size_t(b)].x2y2 += x * x * y * y;
      if (n_dim >= 3) acc[size_t(b)].xyz += x * y * v(2);
    }
  }
  auto summarize = [&](auto stat, double& mean, double& se) {
    double s = 0.0, s2 = 0.0;
    for (int b = 0; b < batches; ++b) {
      const double v = stat(acc[size_t(b)]);
      s += v;
      s2 += v * v;
    }
    mean = s / batches;
    const double var = std::max(0.0, s2 / batches - mean * mean);
    se = std::sqrt(var / (batches - 1));
  };
  SphereMomentReport rep;
  rep.n_dim = n_dim;
  rep.trials = per * batches;
  const double d = double(per);
  summarize([&](const Acc& a) { return a.x / d; }, rep.mean_x, rep.se_x);
  summarize([&](const Acc& a) { return a.x2 / d; }, rep.mean_x2, rep.se_x2);
  summarize([&](const Acc& a) { return a.xy / d; }, rep.mean_xy, rep.se_xy);
  summarize([&](const Acc& a) { return a.x2y2 / d - (a.x2 / d) * (a.y2 / d); },
            rep.cov_x2y2, rep.se_cov);
  summarize([&](const Acc& a) { return a.xyz / d; }, rep.mean_xyz, rep.se_xyz);
  const double nn = double(n_dim);
  rep.theory_x2 = 1.0 / nn;
  rep.theory_cov = -2.0 / (nn * nn * (nn / 2.0 + 1.0));
  rep.consistent_cov = -1.0 / (nn * nn * (nn / 2.0 + 1.0));
  return rep;
}

// ---------------------------------------------------------------------------
// Marcenko-Pastur singular-value density, x in units of sigma/sqrt(m);
// aspect ratio alpha = n/m. Support [sqrt(lambda_minus), sqrt(lambda_plus)].
// ---------------------------------------------------------------------------

inline std::pair<double, double> mp_support(double alpha) {
  require(alpha > 0.0, "mp: aspect ratio must be positive");
  const double s = std::sqrt(alpha);
  return {std::fabs(1.0 - s), 1.0 + s};
}

inline double mp_pdf(double x, double alpha) {
  const auto [lo, hi] = mp_support(alpha);
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    // continuous limit of the density at the left edge of the alpha=1 support
    return alpha == 1.0 ? 2.0 / kPi : 0.0;
  }
  if (x <= lo || x >= hi) return 0.0;
  const double lm = lo * lo, lp = hi * hi;
  return std::sqrt((lp - x * x) * (x * x - lm)) / (kPi * x);
}

struct NoiseFloor {
  double value = 0.0;
  bool degenerate = false;  // set when n <= m (no positive floor)
};

// Lower bound sqrt(m)(sqrt(alpha)-1)*I on the singular values contributed by
// i.i.d. noise of intensity I, valid for n > m.
inline NoiseFloor noise_floor(Index m, Index n, double intensity) {
  require(m >= 1 && n >= 1, "noise_floor: dimensions must be positive");
  require(intensity >= 0.0, "noise_floor: intensity must be nonnegative");
  if (n <= m) return {0.0, true};
  const double alpha = double(n) / double(m);
  return {std::sqrt(double(m)) * (std::sqrt(alpha) - 1.0) * intensity, false};
}

// ---------------------------------------------------------------------------
// Semi-random-eigenvector checks: pooled singular-vector row components vs
// the SProj marginal, plus histogram material for plotting.
// ---------------------------------------------------------------------------

enum class SingularSide { left, right };

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::int64_t count = 0;
  double pdf_at_center = 0.0;
};

struct SrecRowStat {
  Index row = 0;
  double ks = 0.0;
  Index n_samples = 0;
  double partial_mass = 0.0;  // sum of squared components, expect r/N
};

struct SrecReport {
  SingularSide side = SingularSide::left;
  Index ambient = 0;  // m for left rows, n for right rows
  Index rank = 0;
  std::vector<SrecRowStat> rows;
  double pooled_ks = 0.0;
  double expected_partial_mass = 0.0;  // r/N per Theorem clause 3
  double mean_partial_mass = 0.0;
  std::vector<HistogramBin> histogram;
};

inline std::vector<HistogramBin> make_histogram(const std::vector<double>& xs,
                                                int bins, double lo, double hi,
                                                Index pdf_dim) {
  require(bins >= 1 && hi > lo, "make_histogram: bad binning");
  std::vector<HistogramBin> out(static_cast<size_t>(bins));
  const double w = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    out[size_t(b)].left = lo + b * w;
    out[size_t(b)].right = lo + (b + 1) * w;
    out[size_t(b)].pdf_at_center =
        sproj_pdf(lo + (b + 0.5) * w, pdf_dim);
  }
  for (double x : xs) {
    int b = int((x - lo) / w);
    if (b < 0 || x < lo) continue;
    if (b >= bins) {
      if (x <= hi) b = bins - 1;
      else continue;
    }
    ++out[size_t(b)].count;
  }
  return out;
}

inline SrecReport srec_test(const SvdFactorization& f, SingularSide side,
                            const std::vector<Index>& sample_rows, int bins) {
  require(f.r() >= 2, "srec_test: need factorization rank >= 2");
  const bool left = side == SingularSide::left;
  const Index ambient = left ? f.m : f.n;
  const Index limit = left ? f.m : f.n;
  SrecReport rep;
  rep.side = side;
  rep.ambient = ambient;
  rep.rank = f.r();
  rep.expected_partial_mass = double(f.r()) / double(ambient);
  auto cdf = [&](double x) { return sproj_cdf(x, ambient); };
  std::vector<double> pooled;
  pooled.reserve(sample_rows.size() * size_t(f.r()));
  for (Index row : sample_rows) {
    require(row >= 0 && row < limit, "srec_test: row index out of range");
    std::vector<double> comps(size_t(f.r()));
    double mass = 0.0;
    for (Index l = 0; l < f.r(); ++l) {
      const double c = left ? f.left(row, l) : f.right(row, l);
      comps[size_t(l)] = c;
      mass += c * c;
      pooled.push_back(c);
    }
    rep.rows.push_back({row, ks_statistic(comps, cdf), f.r(), mass});
    rep.mean_partial_mass += mass;
  }
  if (!rep.rows.empty()) rep.mean_partial_mass /= double(rep.rows.size());
  require(!pooled.empty(), "srec_test: no rows sampled");
  rep.pooled_ks = ks_statistic(pooled, cdf);
  rep.histogram = make_histogram(pooled, bins, -1.0, 1.0, ambient);
  return rep;
}

}  // namespace loradp
