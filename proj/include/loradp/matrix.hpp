#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "loradp/error.hpp"
#include "loradp/rng.hpp"

namespace loradp {

using Index = std::int64_t;
using Entry = std::pair<Index, Index>;  // (row, col)

struct DatasetStats {
  Index m = 0;
  Index n = 0;
  Index nnz = 0;
  double eta = 0.0;      // average records per user, nnz/m
  double density = 0.0;  // nnz/(m*n)
};

// Sparse binary user-product matrix. Entries hold value 1; everything about it
// is immutable after construction.
class PreferenceMatrix {
 public:
  PreferenceMatrix(Index m, Index n, std::vector<Entry> entries)
      : m_(m), n_(n), entries_(std::move(entries)), row_counts_(m, 0) {
    require(m >= 1 && n >= 1, "PreferenceMatrix: dimensions must be positive");
    std::sort(entries_.begin(), entries_.end());
    entries_.erase(std::unique(entries_.begin(), entries_.end()),
                   entries_.end());
    for (const auto& [r, c] : entries_) {
      require(r >= 0 && r < m_ && c >= 0 && c < n_,
              "PreferenceMatrix: entry index out of range");
      ++row_counts_[static_cast<std::size_t>(r)];
    }
    Index total = 0;
    for (Index rc : row_counts_) total += rc;
    require(total == nnz(), "PreferenceMatrix: row count bookkeeping broke");
  }

  Index m() const { return m_; }
  Index n() const { return n_; }
  Index nnz() const { return static_cast<Index>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<Index>& row_counts() const { return row_counts_; }

  bool has(Index r, Index c) const {
    return std::binary_search(entries_.begin(), entries_.end(), Entry{r, c});
  }

  // Squared Frobenius norm; equals nnz for a binary matrix.
  double frob_sq() const { return static_cast<double>(nnz()); }

  DatasetStats stats() const {
    DatasetStats s;
    s.m = m_;
    s.n = n_;
    s.nnz = nnz();
    s.eta = static_cast<double>(s.nnz) / static_cast<double>(m_);
    s.density = static_cast<double>(s.nnz) /
                (static_cast<double>(m_) * static_cast<double>(n_));
    return s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m_, n_);
    for (const auto& [r, c] : entries_) d(r, c) = 1.0;
    return d;
  }

 private:
  Index m_;
  Index n_;
  std::vector<Entry> entries_;
  std::vector<Index> row_counts_;
};

// Keeps ceil(m/factor) distinct rows chosen uniformly; row order (and hence
// the re-indexing) follows the original row order.
inline PreferenceMatrix subsample(const PreferenceMatrix& t, Index factor,
                                  Rng& rng) {
  require(factor >= 1, "subsample: factor must be >= 1");
  require(factor <= t.m(), "subsample: factor exceeds row count");
  const Index keep = (t.m() + factor - 1) / factor;
  std::vector<Index> rows(static_cast<std::size_t>(t.m()));
  for (Index i = 0; i < t.m(); ++i) rows[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < keep; ++i) {
    const Index j =
        i + static_cast<Index>(rng.next_below(
                static_cast<std::uint64_t>(t.m() - i)));
    std::swap(rows[static_cast<std::size_t>(i)],
              rows[static_cast<std::size_t>(j)]);
  }
  rows.resize(static_cast<std::size_t>(keep));
  std::sort(rows.begin(), rows.end());
  std::vector<Index> remap(static_cast<std::size_t>(t.m()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    remap[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
  std::vector<Entry> kept;
  for (const auto& [r, c] : t.entries()) {
    const Index nr = remap[static_cast<std::size_t>(r)];
    if (nr >= 0) kept.emplace_back(nr, c);
  }
  return PreferenceMatrix(keep, t.n(), std::move(kept));
}

inline DatasetStats dense_stats(const Eigen::MatrixXd& t) {
  DatasetStats s;
  s.m = t.rows();
  s.n = t.cols();
  s.nnz = (t.array() != 0.0).count();
  s.eta = t.squaredNorm() / static_cast<double>(t.rows());
  s.density = static_cast<double>(s.nnz) /
              (static_cast<double>(s.m) * static_cast<double>(s.n));
  return s;
}

}  // namespace loradp
