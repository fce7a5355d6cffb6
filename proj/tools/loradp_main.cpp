// Command-line front end: every experiment the library runs, drivable from a
// shell, with CSV artifacts and a Markdown report aggregator. All runs are
// deterministic under --seed (default 0) and echo their full configuration
// to <out>/config.echo in key-sorted order.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "loradp/csv.hpp"
#include "loradp/dists.hpp"
#include "loradp/dp.hpp"
#include "loradp/error.hpp"
#include "loradp/fkv.hpp"
#include "loradp/io.hpp"
#include "loradp/matrix.hpp"
#include "loradp/perturb.hpp"
#include "loradp/recommend.hpp"
#include "loradp/rng.hpp"
#include "loradp/svd.hpp"
#include "loradp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace loradp;

namespace {

using EchoMap = std::map<std::string, std::string>;

// One bag of options per subcommand; unused fields keep their defaults and
// never reach the echo of a command that does not register them.
struct Cfg {
  std::string out = ".";
  std::uint64_t seed = 0;
  int threads = 0;  // 0: LORA_DP_THREADS, then hardware concurrency
  std::int64_t max_dense = 4000000;
  std::string input;
  std::string format = "auto";
  bool bed = false;
  std::uint64_t bed_seed = 0;

  std::string k_list;
  Index k = 10;
  Index user = 0;
  Index trials = 200;
  Index rows = 30;
  int bins = 40;
  Index m = 400;
  Index n = 9742;
  double alpha = 1.0;
  double gamma = 1.0;
  double eta = 165.3;
  double min_rating = 0.5;
  double sigma = 1.0;
  double eps = 0.5;
  double kappa = 0.5;
  double c_const = 1.0;
  Index q_cap = 0;
  std::string side = "left";
};

int resolve_threads(int opt) {
  if (opt > 0) return opt;
  if (const char* env = std::getenv("LORA_DP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// "1,5,10", "1-15", "2-20:2", or any comma mix thereof.
std::vector<Index> parse_k_list(const std::string& text) {
  std::vector<Index> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    Index step = 1;
    std::string range = tok;
    if (const auto colon = tok.find(':'); colon != std::string::npos) {
      step = std::atoll(tok.c_str() + colon + 1);
      range = tok.substr(0, colon);
    }
    const auto dash = range.find('-');
    Index lo = 0, hi = 0;
    if (dash == std::string::npos) {
      lo = hi = std::atoll(range.c_str());
    } else {
      lo = std::atoll(range.substr(0, dash).c_str());
      hi = std::atoll(range.c_str() + dash + 1);
    }
    require(lo >= 1 && hi >= lo && step >= 1, "bad k list: " + text);
    for (Index k = lo; k <= hi; k += step) ks.push_back(k);
  }
  require(!ks.empty(), "empty k list");
  return ks;
}

PreferenceMatrix load_input(const Cfg& cfg) {
  require(!cfg.input.empty(), "missing --input (or pass --bed)");
  std::string fmt = cfg.format;
  if (fmt == "auto") {
    std::ifstream in(cfg.input);
    require(in.good(), "cannot open " + cfg.input);
    std::string first;
    std::getline(in, first);
    fmt = first.rfind("userId,", 0) == 0 ? "movielens" : "triplets";
  }
  if (fmt == "movielens") return load_movielens(cfg.input, cfg.min_rating).matrix;
  if (fmt == "triplets") return load_csv_triplets(cfg.input);
  throw Error("unknown --format " + fmt);
}

PreferenceMatrix load_dense_guarded(const Cfg& cfg) {
  PreferenceMatrix t = load_input(cfg);
  require(t.m() * t.n() <= cfg.max_dense,
          "matrix has " + std::to_string(t.m() * t.n()) +
              " cells; dense experiments are capped by --max-dense");
  return t;
}

void write_artifact(const Cfg& cfg, const std::string& name,
                    const std::string& content) {
  fs::create_directories(cfg.out);
  write_text(cfg.out + "/" + name, content);
}

void echo_config(const Cfg& cfg, EchoMap kv) {
  kv["out"] = cfg.out;
  kv["seed"] = std::to_string(cfg.seed);
  kv["threads"] = std::to_string(cfg.threads);
  write_artifact(cfg, "config.echo", config_echo(kv));
}

EchoMap input_echo(const Cfg& cfg) {
  EchoMap kv;
  kv["input"] = cfg.bed ? "<bed>" : cfg.input;
  kv["format"] = cfg.format;
  if (cfg.bed) kv["bed_seed"] = std::to_string(cfg.bed_seed);
  return kv;
}

// --- subcommands ----------------------------------------------------------

void run_ingest(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "ingest";
  kv["min_rating"] = format_double(cfg.min_rating);
  echo_config(cfg, std::move(kv));
  const PreferenceMatrix t = load_input(cfg);
  fs::create_directories(cfg.out);
  save_csv_triplets(t, cfg.out + "/matrix.csv");
  std::printf("m=%lld n=%lld nnz=%lld\n", static_cast<long long>(t.m()),
              static_cast<long long>(t.n()), static_cast<long long>(t.nnz()));
}

void run_stats(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "stats";
  echo_config(cfg, std::move(kv));
  const PreferenceMatrix t = load_input(cfg);
  const DatasetStats s = t.stats();
  write_artifact(cfg, "stats.csv",
                 "m,n,nnz,eta,density\n" +
                     join_csv({std::to_string(t.m()), std::to_string(t.n()),
                               std::to_string(t.nnz()), format_double(s.eta),
                               format_double(s.density)}) +
                     '\n');
  std::printf("m=%lld n=%lld eta=%.1f density=%.3f\n",
              static_cast<long long>(t.m()), static_cast<long long>(t.n()),
              s.eta, s.density);
}

void run_svd(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "svd";
  kv["k"] = std::to_string(cfg.k);
  echo_config(cfg, std::move(kv));
  const SvdFactorization f =
      cfg.bed ? svd(make_test_bed(cfg.bed_seed).t, cfg.k)
              : svd(load_dense_guarded(cfg), cfg.k);
  std::string csv = "lambda,sigma\n";
  for (Index l = 0; l < f.r(); ++l)
    csv += join_csv({std::to_string(l + 1), format_double(f.sigma(l))}) + '\n';
  write_artifact(cfg, "sigma.csv", csv);
  std::printf("rank=%lld sigma_1=%s tail_sq=%s\n",
              static_cast<long long>(f.r()), format_double(f.sigma(0)).c_str(),
              format_double(f.residual_tail_sq).c_str());
}

void run_recommend(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "recommend";
  kv["k"] = std::to_string(cfg.k);
  kv["user"] = std::to_string(cfg.user);
  echo_config(cfg, std::move(kv));
  const SvdFactorization f =
      cfg.bed ? svd(make_test_bed(cfg.bed_seed).t, cfg.k)
              : svd(load_dense_guarded(cfg), cfg.k);
  const Vector p = recommendation_distribution(f, cfg.user, cfg.k);
  std::string csv = "j,p\n";
  for (Index j = 0; j < p.size(); ++j)
    csv += join_csv({std::to_string(j), format_double(p(j))}) + '\n';
  write_artifact(cfg, "recommendation.csv", csv);
  Index top = 0;
  p.maxCoeff(&top);
  Rng rng(cfg.seed, 0);
  const Index pick = recommend(f, cfg.user, cfg.k, rng);
  std::printf("user=%lld k=%lld top=%lld p_top=%s sampled=%lld\n",
              static_cast<long long>(cfg.user), static_cast<long long>(cfg.k),
              static_cast<long long>(top), format_double(p(top)).c_str(),
              static_cast<long long>(pick));
}

void run_typicality(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "typicality";
  kv["gamma"] = format_double(cfg.gamma);
  echo_config(cfg, std::move(kv));
  const TypicalityReport rep =
      cfg.bed ? typicality(make_test_bed(cfg.bed_seed).t, cfg.gamma)
              : typicality(load_input(cfg), cfg.gamma);
  std::string csv = "i,row_norm_sq,is_typical\n";
  for (std::size_t i = 0; i < rep.per_user.size(); ++i)
    csv += join_csv({std::to_string(i),
                     format_double(rep.per_user[i].row_norm_sq),
                     rep.per_user[i].is_typical ? "1" : "0"}) +
           '\n';
  write_artifact(cfg, "typicality.csv", csv);
  std::printf("eta=%s gamma_tilde=%s typical_fraction=%s\n",
              format_double(rep.eta).c_str(),
              rep.gamma_tilde ? format_double(*rep.gamma_tilde).c_str() : "nan",
              format_double(rep.typical_fraction).c_str());
}

template <typename SweepFn>
auto run_sweep(const Cfg& cfg, std::uint64_t stream, SweepFn&& fn) {
  const std::vector<Index> ks = parse_k_list(cfg.k_list);
  Rng rng(cfg.seed, stream);
  const int threads = resolve_threads(cfg.threads);
  if (cfg.bed) return fn(make_test_bed(cfg.bed_seed).t, ks, rng, threads);
  return fn(load_dense_guarded(cfg), ks, rng, threads);
}

void run_perturb(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "perturb";
  kv["k_list"] = cfg.k_list;
  kv["trials"] = std::to_string(cfg.trials);
  echo_config(cfg, std::move(kv));
  const CoreLemmaSweep sweep =
      run_sweep(cfg, 1, [&](const auto& t, const auto& ks, Rng& rng, int th) {
        return core_lemma_sweep(t, ks, cfg.trials, rng, th);
      });
  write_artifact(cfg, "core_lemma.csv", sweep.csv());
  double worst_out = 0.0, least_argmax = 1.0;
  for (const auto& row : sweep.rows) {
    worst_out = std::max(worst_out, row.outside_frac);
    least_argmax = std::min(least_argmax, row.argmax_frac);
  }
  std::printf("trials=%lld ks=%zu max_outside=%s min_argmax=%s\n",
              static_cast<long long>(cfg.trials), sweep.rows.size(),
              format_double(worst_out).c_str(),
              format_double(least_argmax).c_str());
}

void run_rownorm(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "rownorm";
  kv["k_list"] = cfg.k_list;
  kv["trials"] = std::to_string(cfg.trials);
  echo_config(cfg, std::move(kv));
  const RowNormSweep sweep =
      run_sweep(cfg, 3, [&](const auto& t, const auto& ks, Rng& rng, int th) {
        return row_norm_sweep(t, ks, cfg.trials, rng, th);
      });
  write_artifact(cfg, "row_norm.csv", sweep.csv());
  double worst = 0.0;
  for (const auto& row : sweep.rows)
    worst = std::max(worst, row.row_change_max);
  std::printf("trials=%lld ks=%zu max_row_change=%s\n",
              static_cast<long long>(cfg.trials), sweep.rows.size(),
              format_double(worst).c_str());
}

void run_globalnorm(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "globalnorm";
  kv["k_list"] = cfg.k_list;
  kv["trials"] = std::to_string(cfg.trials);
  echo_config(cfg, std::move(kv));
  const GlobalNormSweep sweep =
      run_sweep(cfg, 2, [&](const auto& t, const auto& ks, Rng& rng, int th) {
        return global_norm_sweep(t, ks, cfg.trials, rng, th);
      });
  write_artifact(cfg, "global_norm.csv", sweep.csv());
  double best_gap = 0.0;
  for (const auto& row : sweep.rows)
    if (row.row_mean > 0.0)
      best_gap = std::max(best_gap, row.global_mean / row.row_mean);
  std::printf("trials=%lld ks=%zu best_gap=%s\n",
              static_cast<long long>(cfg.trials), sweep.rows.size(),
              format_double(best_gap).c_str());
}

void run_srec(const Cfg& cfg) {
  EchoMap kv;
  kv["command"] = "srec";
  kv["n"] = std::to_string(cfg.n);
  kv["rows"] = std::to_string(cfg.rows);
  kv["bins"] = std::to_string(cfg.bins);
  kv["side"] = cfg.side;
  echo_config(cfg, std::move(kv));
  require(cfg.side == "left" || cfg.side == "right",
          "side must be left or right");
  require(cfg.rows >= 1 && cfg.rows <= cfg.n, "rows out of range");
  Rng rng(cfg.seed, 0);
  const Matrix g = gaussian_matrix(cfg.n, cfg.n, rng);
  const SvdFactorization f = svd(g, cfg.n);
  std::vector<Index> sample_rows;
  for (Index r = 0; r < cfg.rows; ++r) sample_rows.push_back(r);
  const SrecReport rep = srec_test(
      f, cfg.side == "left" ? SingularSide::left : SingularSide::right,
      sample_rows, cfg.bins);
  std::string rows_csv = "row,ks,n_samples,partial_mass\n";
  for (const auto& r : rep.rows)
    rows_csv += join_csv({std::to_string(r.row), format_double(r.ks),
                          std::to_string(r.n_samples),
                          format_double(r.partial_mass)}) +
                '\n';
  write_artifact(cfg, "srec_rows.csv", rows_csv);
  std::string hist_csv = "left,right,count,pdf_at_center\n";
  for (const auto& b : rep.histogram)
    hist_csv += join_csv({format_double(b.left), format_double(b.right),
                          std::to_string(b.count),
                          format_double(b.pdf_at_center)}) +
                '\n';
  write_artifact(cfg, "srec_hist.csv", hist_csv);
  std::printf("pooled_ks=%s expected_partial=%s mean_partial=%s\n",
              format_double(rep.pooled_ks).c_str(),
              format_double(rep.expected_partial_mass).c_str(),
              format_double(rep.mean_partial_mass).c_str());
}

void run_mp(const Cfg& cfg) {
  EchoMap kv;
  kv["command"] = "mp";
  kv["alpha"] = format_double(cfg.alpha);
  kv["m"] = std::to_string(cfg.m);
  echo_config(cfg, std::move(kv));
  const auto [lo, hi] = mp_support(cfg.alpha);
  std::string dens = "x,pdf\n";
  const int grid = 200;
  for (int g = 0; g <= grid; ++g) {
    const double x = hi * static_cast<double>(g) / grid;
    dens += join_csv({format_double(x), format_double(mp_pdf(x, cfg.alpha))}) +
            '\n';
  }
  write_artifact(cfg, "mp_density.csv", dens);

  const Index n_cols =
      static_cast<Index>(std::llround(cfg.alpha * static_cast<double>(cfg.m)));
  require(n_cols >= 1, "alpha too small for --m");
  Rng rng(cfg.seed, 0);
  Matrix g = gaussian_matrix(cfg.m, n_cols, rng);
  g /= std::sqrt(static_cast<double>(cfg.m));
  const SvdFactorization f = svd(g, std::min(cfg.m, n_cols));
  Index inside = 0;
  std::string sample = "lambda,sigma_scaled\n";
  for (Index l = 0; l < f.r(); ++l) {
    sample +=
        join_csv({std::to_string(l + 1), format_double(f.sigma(l))}) + '\n';
    if (f.sigma(l) <= hi + 0.1) ++inside;
  }
  write_artifact(cfg, "mp_sample.csv", sample);
  std::printf("support=[%s,%s] inside_frac=%s\n", format_double(lo).c_str(),
              format_double(hi).c_str(),
              format_double(static_cast<double>(inside) /
                            static_cast<double>(f.r()))
                  .c_str());
}

void run_dp_params(const Cfg& cfg) {
  EchoMap kv;
  kv["command"] = "dp-params";
  kv["m"] = std::to_string(cfg.m);
  kv["n"] = std::to_string(cfg.n);
  kv["k"] = std::to_string(cfg.k);
  kv["eta"] = format_double(cfg.eta);
  kv["gamma"] = format_double(cfg.gamma);
  echo_config(cfg, std::move(kv));
  const DpBudget b = dp_params(cfg.m, cfg.n, cfg.k, cfg.eta, cfg.gamma);
  write_artifact(
      cfg, "dp_params.csv",
      "m,n,k,eta,gamma,gamma_tilde,epsilon,delta\n" +
          join_csv({std::to_string(b.m), std::to_string(b.n),
                    std::to_string(b.k), format_double(b.eta),
                    format_double(b.gamma), format_double(b.gamma_tilde),
                    format_double(b.epsilon), format_double(b.delta)}) +
          '\n');
  std::printf("epsilon=%s delta=%s gamma_tilde=%s\n",
              format_double(b.epsilon).c_str(),
              format_double(b.delta).c_str(),
              format_double(b.gamma_tilde).c_str());
}

void run_dp_check(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "dp-check";
  kv["k"] = std::to_string(cfg.k);
  kv["gamma"] = format_double(cfg.gamma);
  kv["trials"] = std::to_string(cfg.trials);
  echo_config(cfg, std::move(kv));
  Rng rng(cfg.seed, 0);
  const int threads = resolve_threads(cfg.threads);
  const DpViolationReport rep =
      cfg.bed ? dp_check(make_test_bed(cfg.bed_seed).t, cfg.k, cfg.gamma,
                         cfg.trials, rng, {}, threads)
              : dp_check(load_dense_guarded(cfg), cfg.k, cfg.gamma, cfg.trials,
                         rng, {}, threads);
  write_artifact(cfg, "dp_check.csv", rep.csv());
  std::printf(
      "trials=%lld violated=%lld rate=%s worst_ratio=%s epsilon=%s delta=%s\n",
      static_cast<long long>(rep.trials),
      static_cast<long long>(rep.violated_trials),
      format_double(rep.violation_rate()).c_str(),
      format_double(rep.worst_ratio).c_str(),
      format_double(rep.budget.epsilon).c_str(),
      format_double(rep.budget.delta).c_str());
}

void run_fkv(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "fkv";
  kv["sigma"] = format_double(cfg.sigma);
  kv["eps"] = format_double(cfg.eps);
  kv["kappa"] = format_double(cfg.kappa);
  kv["c"] = format_double(cfg.c_const);
  kv["q_cap"] = std::to_string(cfg.q_cap);
  echo_config(cfg, std::move(kv));
  FkvParams params;
  params.sigma = cfg.sigma;
  params.eps = cfg.eps;
  params.kappa = cfg.kappa;
  params.c = cfg.c_const;
  if (cfg.q_cap > 0) params.q_cap = cfg.q_cap;
  Rng rng(cfg.seed, 0);
  const Matrix t = cfg.bed ? make_test_bed(cfg.bed_seed).t
                           : load_dense_guarded(cfg).to_dense();
  const FkvSketch sk = modfkv(t, params, rng);
  std::string csv = "lambda,sigma_hat\n";
  for (Index l = 0; l < sk.sigma_hat.size(); ++l)
    csv += join_csv({std::to_string(l + 1), format_double(sk.sigma_hat(l))}) +
           '\n';
  write_artifact(cfg, "fkv_sigma.csv", csv);
  std::string quality;
  if (sk.k() >= 1) {
    const FkvQuality q = fkv_quality(sk, t, sk.k());
    quality = format_double(q.projector_residual);
  } else {
    quality = "nan";
  }
  std::printf("q=%lld kept=%lld residual=%s\n", static_cast<long long>(sk.q),
              static_cast<long long>(sk.k()), quality.c_str());
}

void run_typicalize(const Cfg& cfg) {
  EchoMap kv = input_echo(cfg);
  kv["command"] = "typicalize";
  kv["gamma"] = format_double(cfg.gamma);
  echo_config(cfg, std::move(kv));
  const PreferenceMatrix t = load_input(cfg);
  Rng rng(cfg.seed, 0);
  const TypicalizeResult res = typicalize(t, cfg.gamma, rng);
  fs::create_directories(cfg.out);
  save_csv_triplets(res.matrix, cfg.out + "/typicalized.csv");
  std::printf("added=%lld removed=%lld frozen_eta=%s\n",
              static_cast<long long>(res.added),
              static_cast<long long>(res.removed),
              format_double(res.frozen_eta).c_str());
}

// --- report ----------------------------------------------------------------

std::string markdown_table(const std::string& csv, std::size_t max_rows) {
  std::stringstream ss(csv);
  std::string line;
  std::string out;
  std::size_t rows = 0, total = 0;
  bool header = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    ++total;
    if (!header && rows >= max_rows) continue;
    std::string md = "|";
    std::stringstream cells(line);
    std::string cell;
    int n_cells = 0;
    while (std::getline(cells, cell, ',')) {
      md += " " + cell + " |";
      ++n_cells;
    }
    out += md + '\n';
    if (header) {
      out += "|";
      for (int c = 0; c < n_cells; ++c) out += " --- |";
      out += '\n';
      header = false;
    } else {
      ++rows;
    }
  }
  if (total - 1 > rows)
    out += "\n_" + std::to_string(total - 1 - rows) + " more rows in the CSV._\n";
  return out;
}

void run_report(const Cfg& cfg) {
  EchoMap kv;
  kv["command"] = "report";
  echo_config(cfg, std::move(kv));
  struct Section {
    const char* file;
    const char* title;
    std::size_t max_rows;
  };
  const std::vector<Section> sections = {
      {"stats.csv", "Catalogue statistics", 20},
      {"sigma.csv", "Singular spectrum", 30},
      {"core_lemma.csv", "Single-flip change at the flipped entry", 40},
      {"row_norm.csv", "Row-norm change under a flip", 40},
      {"global_norm.csv", "Global vs row norm change", 40},
      {"srec_rows.csv", "Singular-vector row components", 40},
      {"mp_sample.csv", "Scaled Gaussian singular values", 20},
      {"dp_params.csv", "Privacy budget", 10},
      {"dp_check.csv", "Privacy audit trials", 25},
      {"fkv_sigma.csv", "Sketch spectrum", 30},
  };
  std::string md = "# Experiment report\n";
  bool any = false;
  for (const auto& sec : sections) {
    const std::string path = cfg.out + "/" + sec.file;
    std::ifstream in(path);
    if (!in.good()) continue;
    std::stringstream buf;
    buf << in.rdbuf();
    md += "\n## " + std::string(sec.title) + "\n\n" +
          markdown_table(buf.str(), sec.max_rows);
    any = true;
  }
  require(any, "no experiment CSVs found in " + cfg.out);
  write_artifact(cfg, "report.md", md);
  std::printf("report=%s/report.md\n", cfg.out.c_str());
}

void add_common(CLI::App* sub, Cfg& cfg, bool with_input) {
  sub->add_option("--out", cfg.out, "artifact directory")
      ->capture_default_str();
  sub->add_option("--seed", cfg.seed, "deterministic seed")
      ->capture_default_str();
  sub->add_option("--threads", cfg.threads,
                  "worker threads (0: LORA_DP_THREADS, then hardware)")
      ->capture_default_str();
  if (with_input) {
    sub->add_option("--input", cfg.input,
                    "matrix file: MovieLens ratings.csv or index triplets");
    sub->add_option("--format", cfg.format, "auto|movielens|triplets")
        ->capture_default_str();
    sub->add_option("--max-dense", cfg.max_dense,
                    "refuse to densify above this many cells")
        ->capture_default_str();
    sub->add_flag("--bed", cfg.bed, "use the planted 200x300 instance");
    sub->add_option("--bed-seed", cfg.bed_seed, "planted-instance seed")
        ->capture_default_str();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for sampling-based low-rank "
               "recommendation and its privacy properties"};
  app.require_subcommand(1);
  std::deque<Cfg> cfgs;

  auto make_sub = [&](const char* name, const char* desc, bool with_input,
                      void (*fn)(const Cfg&)) -> std::pair<CLI::App*, Cfg*> {
    CLI::App* sub = app.add_subcommand(name, desc);
    cfgs.emplace_back();
    Cfg* cfg = &cfgs.back();
    add_common(sub, *cfg, with_input);
    sub->callback([fn, cfg] { fn(*cfg); });
    return {sub, cfg};
  };

  {
    auto [sub, cfg] = make_sub("ingest", "parse a ratings file into triplets",
                               true, run_ingest);
    sub->add_option("--min-rating", cfg->min_rating,
                    "keep ratings at or above this value")
        ->capture_default_str();
  }
  make_sub("stats", "catalogue statistics of a ratings file", true, run_stats);
  {
    auto [sub, cfg] =
        make_sub("svd", "truncated spectrum of a matrix", true, run_svd);
    sub->add_option("--k", cfg->k, "cutoff rank")->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "recommend", "rank-k sampling law for one user", true, run_recommend);
    sub->add_option("--k", cfg->k, "cutoff rank")->capture_default_str();
    sub->add_option("--user", cfg->user, "user row index")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub("typicality", "per-user record-mass band check",
                               true, run_typicality);
    sub->add_option("--gamma", cfg->gamma, "band width parameter")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "perturb", "single-flip change at the flipped entry across cutoffs",
        true, run_perturb);
    cfg->k_list = "1-15";
    sub->add_option("--k-list", cfg->k_list, "cutoffs, e.g. 1-15 or 2,4,8")
        ->capture_default_str();
    sub->add_option("--trials", cfg->trials, "number of flips")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub("rownorm", "row-norm change under single flips",
                               true, run_rownorm);
    cfg->k_list = "1-15";
    sub->add_option("--k-list", cfg->k_list, "cutoffs")->capture_default_str();
    sub->add_option("--trials", cfg->trials, "number of flips")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub("globalnorm", "global vs row norm change",
                               true, run_globalnorm);
    cfg->k_list = "2-20:2";
    sub->add_option("--k-list", cfg->k_list, "cutoffs")->capture_default_str();
    sub->add_option("--trials", cfg->trials, "number of flips")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "srec", "singular-vector components vs the sphere-projection law",
        false, run_srec);
    cfg->n = 300;
    sub->add_option("--n", cfg->n, "square matrix dimension")
        ->capture_default_str();
    sub->add_option("--rows", cfg->rows, "vector rows to pool")
        ->capture_default_str();
    sub->add_option("--bins", cfg->bins, "histogram bins")
        ->capture_default_str();
    sub->add_option("--side", cfg->side, "left|right singular vectors")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] =
        make_sub("mp", "spectral bulk density and a sampled check", false,
                 run_mp);
    sub->add_option("--alpha", cfg->alpha, "aspect ratio n/m")
        ->capture_default_str();
    sub->add_option("--m", cfg->m, "sample matrix rows")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub("dp-params", "closed-form privacy budget",
                               false, run_dp_params);
    cfg->m = 610;
    sub->add_option("--m", cfg->m, "users")->capture_default_str();
    sub->add_option("--n", cfg->n, "products")->capture_default_str();
    sub->add_option("--k", cfg->k, "cutoff rank")->capture_default_str();
    sub->add_option("--eta", cfg->eta, "mean per-user record mass")
        ->capture_default_str();
    sub->add_option("--gamma", cfg->gamma, "typicality band parameter")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "dp-check", "audit the budget over random single-record flips", true,
        run_dp_check);
    cfg->k = 8;
    sub->add_option("--k", cfg->k, "cutoff rank")->capture_default_str();
    sub->add_option("--gamma", cfg->gamma, "typicality band parameter")
        ->capture_default_str();
    sub->add_option("--trials", cfg->trials, "number of flips")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "fkv", "sampled sketch of the top right singular space", true,
        run_fkv);
    sub->add_option("--sigma", cfg->sigma, "singular value threshold")
        ->capture_default_str();
    sub->add_option("--eps", cfg->eps, "accuracy parameter")
        ->capture_default_str();
    sub->add_option("--kappa", cfg->kappa, "threshold softness")
        ->capture_default_str();
    sub->add_option("--c", cfg->c_const, "sketch size constant")
        ->capture_default_str();
    sub->add_option("--q-cap", cfg->q_cap, "sketch size cap (0: min(m,n))")
        ->capture_default_str();
  }
  {
    auto [sub, cfg] = make_sub(
        "typicalize", "repair every user into the input's typicality band",
        true, run_typicalize);
    sub->add_option("--gamma", cfg->gamma, "band width parameter")
        ->capture_default_str();
  }
  make_sub("report", "aggregate experiment CSVs into Markdown", false,
           run_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "loradp: %s\n", e.what());
    return 1;
  }
  return 0;
}
