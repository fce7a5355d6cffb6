#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "loradp/io.hpp"
#include "loradp/recommend.hpp"
#include "loradp/synthetic.hpp"

using namespace loradp;

TEST_CASE("gamma_tilde formula and preconditions", "[recommend]") {
  REQUIRE(gamma_tilde(0.0, 2.0) == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(gamma_tilde(1.0, 165.3) ==
          Catch::Approx(1.0244948).margin(1e-6));
  REQUIRE_THROWS_WITH(gamma_tilde(1.0, 2.0),
                      Catch::Matchers::ContainsSubstring("eta too small"));
  REQUIRE_THROWS_AS(gamma_tilde(-0.5, 10.0), Error);
  for (double g : {0.1, 0.5, 1.0, 3.0})
    for (double eta : {5.0, 20.0, 165.3})
      if (eta / (1.0 + g) > 1.0) REQUIRE(gamma_tilde(g, eta) > g);
}

TEST_CASE("typicality flags follow the band arithmetic", "[recommend]") {
  // all rows equal: every user typical at any gamma > 0
  std::vector<Entry> eye;
  for (Index i = 0; i < 4; ++i) eye.push_back({i, i});
  PreferenceMatrix id4(4, 4, eye);
  for (double g : {0.2, 1.0, 5.0}) {
    auto rep = typicality(id4, g);
    REQUIRE(rep.typical_count == 4);
    REQUIRE(rep.typical_fraction == 1.0);
    REQUIRE_FALSE(rep.gamma_tilde.has_value());  // eta/(1+g) <= 1 here
  }

  // counts {9, 2, 1} with eta = 4: gamma=1 band is [2, 8]
  std::vector<Entry> skew;
  for (Index j = 0; j < 9; ++j) skew.push_back({0, j});
  skew.push_back({1, 0});
  skew.push_back({1, 1});
  skew.push_back({2, 5});
  PreferenceMatrix t(3, 12, skew);
  auto rep = typicality(t, 1.0);
  REQUIRE(rep.eta == Catch::Approx(4.0).margin(1e-12));
  REQUIRE_FALSE(rep.per_user[0].is_typical);  // 9 > 8
  REQUIRE(rep.per_user[1].is_typical);        // band edge 2 included
  REQUIRE_FALSE(rep.per_user[2].is_typical);  // 1 < 2
  REQUIRE(rep.per_user[0].row_norm_sq == 9.0);
  REQUIRE(rep.gamma_tilde.has_value());
  REQUIRE(*rep.gamma_tilde >= 1.0);

  PreferenceMatrix empty(3, 4, {});
  REQUIRE_THROWS_AS(typicality(empty, 1.0), Error);
  REQUIRE_THROWS_AS(typicality(t, 0.0), Error);
}

TEST_CASE("dense typicality uses squared row norms", "[recommend]") {
  Matrix a(2, 3);
  a << 1.0, 2.0, 0.0,  // mass 5
      0.0, 3.0, 0.0;   // mass 9
  auto rep = typicality(a, 1.0);  // eta = 7, band [3.5, 14]
  REQUIRE(rep.eta == Catch::Approx(7.0).margin(1e-12));
  REQUIRE(rep.per_user[0].row_norm_sq == Catch::Approx(5.0));
  REQUIRE(rep.per_user[0].is_typical);
  REQUIRE(rep.per_user[1].is_typical);

  auto bed = make_test_bed(0);
  auto bed_rep = typicality(bed.t, 1.0);
  REQUIRE(bed_rep.gamma_tilde.has_value());
  REQUIRE(bed_rep.typical_fraction > 0.5);
}

TEST_CASE("ratings fixture typicality golden values", "[recommend]") {
  std::filesystem::create_directories("test_scratch");
  const std::string path = "test_scratch/fixture_for_typicality.csv";
  write_ratings_fixture(path);
  auto data = load_movielens(path);
  auto rep = typicality(data.matrix, 1.0);
  // frozen on first computation of the deterministic fixture
  REQUIRE(rep.typical_count == 358);
  REQUIRE(rep.typical_fraction == Catch::Approx(358.0 / 610.0).margin(1e-12));
  REQUIRE(rep.gamma_tilde.has_value());
  REQUIRE(*rep.gamma_tilde == Catch::Approx(1.0244941).margin(1e-6));
}

TEST_CASE("typical users stay gamma_tilde-typical across one flip",
          "[recommend]") {
  Rng rng(31, 0);
  std::vector<Entry> entries;
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 60; ++j)
      if (rng.next_double() < 0.25) entries.push_back({i, j});
  PreferenceMatrix t(40, 60, entries);
  const double gamma = 0.5;
  auto rep = typicality(t, gamma);
  REQUIRE(rep.gamma_tilde.has_value());
  const double gt = *rep.gamma_tilde;
  const double m = 40.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index i = rng.next_below(40);
    const Index j = rng.next_below(60);
    const double sign = t.has(i, j) ? -1.0 : 1.0;
    const double eta_flipped = rep.eta + sign / m;
    for (Index u = 0; u < 40; ++u) {
      if (!rep.per_user[size_t(u)].is_typical) continue;
      const double mass =
          rep.per_user[size_t(u)].row_norm_sq + (u == i ? sign : 0.0);
      REQUIRE(mass >= eta_flipped / (1.0 + gt) - 1e-12);
      REQUIRE(mass <= (1.0 + gt) * eta_flipped + 1e-12);
    }
  }
}

TEST_CASE("point-mass distributions on degenerate matrices", "[recommend]") {
  Matrix outer = Matrix::Zero(3, 3);
  outer(0, 0) = 1.0;
  auto f = svd(outer, 1);
  Vector p = recommendation_distribution(f, 0, 1);
  REQUIRE(p(0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(p(1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(p(2) == Catch::Approx(0.0).margin(1e-12));

  auto id = svd(Matrix::Identity(2, 2), 2);
  Vector q = recommendation_distribution(id, 1, 2);
  REQUIRE(q(0) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(q(1) == Catch::Approx(1.0).margin(1e-12));

  Rng rng(32, 0);
  for (int t = 0; t < 50; ++t) REQUIRE(recommend(id, 0, 2, rng) == 0);
}

TEST_CASE("distribution matches the dense low-rank oracle", "[recommend]") {
  Rng rng(33, 0);
  Vector sig(5);
  sig << 30.0, 24.0, 18.0, 13.0, 9.0;
  Matrix t = planted_lowrank(40, 60, sig, 0.05, rng);
  auto f = svd(t, 40);
  Vector p = recommendation_distribution(f, 7, 5);
  REQUIRE(p.sum() == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(p.minCoeff() >= 0.0);
  Matrix t5 = low_rank_dense(f, 5);
  Vector oracle = t5.row(7).cwiseAbs2() / t5.row(7).squaredNorm();
  REQUIRE((p - oracle).cwiseAbs().maxCoeff() < 1e-9);

  // sampled frequencies reproduce the distribution
  std::vector<double> freq(60, 0.0);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) freq[size_t(recommend(f, 7, 5, rng))] += 1.0;
  double tv = 0.0;
  for (Index j = 0; j < 60; ++j) tv += std::fabs(freq[size_t(j)] / draws - p(j));
  REQUIRE(tv / 2.0 < 0.02);
}

TEST_CASE("cold users are refused", "[recommend]") {
  Rng rng(34, 0);
  Matrix a = gaussian_matrix(5, 6, rng);
  a.row(2).setZero();
  auto f = svd(a, 5);
  REQUIRE_THROWS_WITH(recommendation_distribution(f, 2, 5),
                      Catch::Matchers::ContainsSubstring("cold user"));
  REQUIRE_THROWS_AS(recommend(f, 2, 3, rng), Error);
  REQUIRE_THROWS_AS(recommendation_distribution(f, 0, 0), Error);

  std::vector<Entry> entries = {{0, 0}, {1, 1}, {2, 2}, {2, 3}};
  PreferenceMatrix t(4, 5, entries);  // row 3 empty
  auto g = svd(t, 3);
  REQUIRE_THROWS_WITH(recommendation_distribution(g, 3, 3),
                      Catch::Matchers::ContainsSubstring("cold user"));
}

TEST_CASE("threshold projection equals cutoff truncation", "[recommend]") {
  Rng rng(35, 0);
  Matrix a = gaussian_matrix(20, 30, rng);
  auto f = svd(a, 20);

  Vector full = project_row_by_sigma(f, 4, 0.0);
  REQUIRE((full.transpose() - a.row(4)).cwiseAbs().maxCoeff() < 1e-10);

  Vector none = project_row_by_sigma(f, 4, f.sigma(0) + 1.0);
  REQUIRE(none.norm() == 0.0);

  for (Index k = 1; k < 20; ++k) {
    if (f.sigma(k - 1) <= f.sigma(k)) continue;  // needs a strict gap
    Vector at = project_row_by_sigma(f, 4, f.sigma(k - 1));
    Vector mid = project_row_by_sigma(
        f, 4, 0.5 * (f.sigma(k - 1) + (k < 20 ? f.sigma(k) : 0.0)));
    Vector ref = low_rank_row(f, 4, k);
    REQUIRE((at - ref).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((mid - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("projection refuses thresholds under the dropped tail",
          "[recommend]") {
  Rng rng(36, 0);
  Vector sig(3);
  sig << 30.0, 20.0, 10.0;
  Matrix a = planted_lowrank(30, 40, sig, 0.01, rng);
  auto f = svd(a, 5);  // keeps the plant plus two noise directions
  REQUIRE(f.residual_tail_sq > 0.0);
  REQUIRE_THROWS_WITH(
      project_row_by_sigma(f, 0, 0.5 * std::sqrt(f.residual_tail_sq)),
      Catch::Matchers::ContainsSubstring("uncomputed tail"));
  // a threshold above the whole dropped tail is usable even when truncated
  Vector ok = project_row_by_sigma(f, 0, 5.0);
  REQUIRE((ok - low_rank_row(f, 0, 3)).cwiseAbs().maxCoeff() < 1e-10);

  Matrix dense = gaussian_matrix(30, 40, rng);
  auto g = svd(dense, 5);
  REQUIRE_THROWS_WITH(project_row_by_sigma(g, 0, g.sigma(2)),
                      Catch::Matchers::ContainsSubstring("uncomputed tail"));
}
