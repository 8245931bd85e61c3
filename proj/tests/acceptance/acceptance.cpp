// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "kpstorm/baseline.hpp"
#include "kpstorm/datagen.hpp"
#include "kpstorm/eval.hpp"
#include "kpstorm/forest.hpp"
#include "kpstorm/fusion.hpp"
#include "kpstorm/ingest.hpp"
#include "kpstorm/model_io.hpp"
#include "kpstorm/pca.hpp"
#include "kpstorm/random.hpp"
#include "oracles/cart_oracle.hpp"
#include "oracles/jacobi_eigen.hpp"
#include "oracles/normal_equations.hpp"
#include "unit/support.hpp"

using namespace kpstorm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;
std::string filter;  // optional substring from argv[1]

bool selected(const std::string& name) {
  return filter.empty() || name.find(filter) != std::string::npos;
}

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  if (!selected(name)) return;
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  if (!o.pass) ++failures;
  std::cout << fmt::format("{} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", name, o.detail,
                           seconds_since(start))
            << std::flush;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kpstorm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Held-out window for 120 days of synthetic data starting 2021-01-01:
// January to March train, April test.
const Timestamp kSynthCutoff = Timestamp::from_civil(2021, 4, 1);

fs::path scratch_dir() {
  auto dir = fs::temp_directory_path() / "kpstorm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Solar-wind lag in minutes parsed from a feature name, or -1 for dst/kp.
int solar_lag(const std::string& name) {
  if (name.starts_with("dst_") || name.starts_with("kp_")) return -1;
  const auto pos = name.rfind("_m");
  return std::stoi(name.substr(pos + 2));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) filter = argv[1];
  const fs::path work = scratch_dir();

  criterion("end-to-end evaluate on canonical files", [&] {
    // The published accuracy and PCA variance depend on archives that are
    // not shipped; this checks only that a full run completes and reports.
    const std::string data = (work / "e2e").string();
    if (run_cli({"synth", "--out", data}).code != 0) return Outcome{false, "synth failed"};
    const std::string json = (work / "e2e_report.json").string();
    const auto r = run_cli({"evaluate", "--data-dir", data, "--cutoff", kSynthCutoff.to_string(),
                        "--seed", "7", "--out-json", json});
    if (r.code != 0) return Outcome{false, "evaluate exited " + std::to_string(r.code) + ": " + r.err};
    const auto report = read_file(json);
    for (const char* key : {"\"n\"", "\"accuracy_within_1\"", "\"per_bin_hits\""})
      if (report.find(key) == std::string::npos)
        return Outcome{false, fmt::format("report lacks {}", key)};
    return Outcome{true, "report emitted (no numeric bound; source archives not shipped)"};
  });

  criterion("CART oracle equivalence (200 datasets)", [&] {
    const auto start = Clock::now();
    Rng rng(20240101);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(30);
      const std::size_t p = 1 + rng.below(4);
      auto x = testing::random_matrix(rng, n, p, -5.0, 5.0);
      // Coarse values on some datasets exercise tied thresholds.
      if (trial % 4 == 0)
        for (auto& row : x)
          for (auto& v : row) v = std::round(v);
      std::vector<double> y;
      for (std::size_t i = 0; i < n; ++i)
        y.push_back(trial % 5 == 0 ? std::round(9.0 * rng.uniform() * 3.0) / 3.0 : 9.0 * rng.uniform());
      ForestConfig config;
      config.n_trees = 1;
      config.bootstrap = false;
      config.mtry = static_cast<int>(p);
      config.min_leaf = 1;
      config.seed = static_cast<std::uint64_t>(trial);
      const auto model = fit_forest(testing::make_dataset(x, y), config, 1);
      oracle::BruteForceCart cart(x, y, 1);
      for (const auto& row : x)
        if (predict(model, row) != cart.predict(row)) {
          ++mismatches;
          break;
        }
    }
    const double secs = seconds_since(start);
    return Outcome{mismatches == 0 && secs < 60.0,
                   fmt::format("{} mismatching datasets, {:.2f} s (limit 60)", mismatches, secs)};
  });

  criterion("compare determinism, threads 1 vs 8", [&] {
    const std::string data = (work / "det").string();
    if (run_cli({"synth", "--out", data}).code != 0) return Outcome{false, "synth failed"};
    std::vector<std::string> tables;
    double slowest = 0.0;
    for (const char* threads : {"1", "8"}) {
      const auto start = Clock::now();
      const auto r = run_cli({"compare", "--data-dir", data, "--cutoff", kSynthCutoff.to_string(),
                          "--seed", "7", "--threads", threads});
      slowest = std::max(slowest, seconds_since(start));
      if (r.code != 0) return Outcome{false, "compare failed: " + r.err};
      tables.push_back(r.out);
    }
    const bool same = tables[0] == tables[1];
    return Outcome{same && slowest < 300.0,
                   fmt::format("{} tables, slowest run {:.1f} s (limit 300)",
                               same ? "identical" : "DIFFERENT", slowest)};
  });

  // The next four criteria share the 20 per-seed runs.
  int forest_wins = 0, selection_ok = 0, storms_kept = 0, decay_ok = 0;
  std::string worst_selection;
  double worst_delta = 1.0;
  const int kSeeds = 20;
  const auto sweep_start = Clock::now();
  const bool sweep = selected("forest beats linear") || selected("top-50 selection") ||
                       selected("L=2 downsampling") || selected("importance decays");
  for (int s = 1; sweep && s <= kSeeds; ++s) {
    SynthConfig synth;
    synth.seed = static_cast<std::uint64_t>(s);
    const auto sources = generate(synth).sources();
    ExperimentPlan base;
    base.cutoff = kSynthCutoff;
    base.seed = static_cast<std::uint64_t>(s);
    const auto plans = std::vector<ExperimentPlan>{
        ExperimentPlan::from_label("RF", base), ExperimentPlan::from_label("RF top-50", base),
        ExperimentPlan::from_label("RF top-50 L=2", base), ExperimentPlan::from_label("Linear", base)};
    const auto rows = comparison_table(plans, sources);
    const double rf = rows[0].accuracy, top50 = rows[1].accuracy, lin = rows[3].accuracy;
    if (rf > lin) ++forest_wins;
    if (top50 - rf > -0.02) ++selection_ok;
    if (top50 - rf < worst_delta) worst_delta = top50 - rf;

    // L=2 retention, checked on the exact training split the pipeline uses.
    const auto data = fuse(sources, base.lag_spec);
    const auto train = split_by_time(data, base.cutoff).first;
    const auto kept = downsample_low_kp(train, 2, base.downsample_threshold,
                                        downsample_seed(base.seed));
    std::set<Timestamp> storm_before, storm_after;
    for (std::size_t i = 0; i < train.n_rows(); ++i)
      if (train.targets()[i] > 4.0) storm_before.insert(train.row_times()[i]);
    for (std::size_t i = 0; i < kept.n_rows(); ++i)
      if (kept.targets()[i] > 4.0) storm_after.insert(kept.row_times()[i]);
    if (storm_before == storm_after && !storm_before.empty() &&
        kept.n_rows() == rows[2].report.n_train)
      ++storms_kept;

    // Importance decay from the full forest.
    ForestConfig config = base.forest;
    config.seed = forest_seed(base.seed);
    const auto model = fit_forest(train, config);
    double near = 0.0, far = 0.0;
    int n_near = 0, n_far = 0;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
      const int lag = solar_lag(model.feature_names[j]);
      if (lag < 0) continue;
      if (lag <= 180) {
        near += model.importances[j];
        ++n_near;
      } else if (lag > 360 && lag <= 540) {
        far += model.importances[j];
        ++n_far;
      }
    }
    if (near / n_near > far / n_far) ++decay_ok;
    std::cout << fmt::format("  seed {:2}: RF {:.4f}  top-50 {:.4f}  top-50 L=2 {:.4f}  Linear {:.4f}"
                             "  storms {}  importance near/far {:.3g}\n",
                             s, rf, top50, rows[2].accuracy, lin, storm_before.size(),
                             (near / n_near) / (far / n_far))
              << std::flush;
  }
  if (sweep)
    std::cout << fmt::format("  ({:.1f} s for {} seeds)\n", seconds_since(sweep_start), kSeeds);

  criterion("forest beats linear", [&] {
    return Outcome{forest_wins >= 18, fmt::format("{}/{} seeds (need >= 18)", forest_wins, kSeeds)};
  });
  criterion("top-50 selection never hurts by 0.02 or more", [&] {
    return Outcome{selection_ok >= 18,
                   fmt::format("{}/{} seeds (need >= 18), worst change {:+.4f}", selection_ok,
                               kSeeds, worst_delta)};
  });
  criterion("L=2 downsampling keeps every Kp>4 training row", [&] {
    return Outcome{storms_kept == kSeeds, fmt::format("{}/{} seeds (need 20)", storms_kept, kSeeds)};
  });
  criterion("solar-wind importance decays with lag", [&] {
    return Outcome{decay_ok == kSeeds,
                   fmt::format("lags <= 180 min beat (360, 540] min in {}/{} seeds (need 20)",
                               decay_ok, kSeeds)};
  });

  criterion("accuracy_within_1 hand examples", [&] {
    const bool a = accuracy_within_1(std::vector<double>{2.0, 5.0, 7.5},
                                     std::vector<double>{2.5, 3.0, 7.0}) == 2.0 / 3.0;
    const bool b = accuracy_within_1(std::vector<double>{0.0}, std::vector<double>{0.0}) == 1.0;
    const bool c = accuracy_within_1(std::vector<double>{1.0}, std::vector<double>{2.0}) == 1.0;
    return Outcome{a && b && c, fmt::format("2/3 {}, 1.0 {}, boundary {}", a, b, c)};
  });

  criterion("PCA against covariance eigendecomposition", [&] {
    Rng rng(99);
    double dir_err = 0.0, ratio_err = 0.0, ortho_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t p = 2 + rng.below(4);
      const std::size_t n = p + 2 + rng.below(10);
      const auto x = testing::random_matrix(rng, n, p, -3.0, 3.0);
      const auto model = fit_pca(testing::make_dataset(x, std::vector<double>(n, 0.0)), p);
      const auto cov = oracle::covariance(x);
      const auto eig = oracle::jacobi_eigen(cov);
      double trace = 0.0;
      for (std::size_t j = 0; j < p; ++j) trace += cov[j][j];
      for (std::size_t i = 0; i < p; ++i) {
        ratio_err = std::max(ratio_err, std::abs(model.explained_variance_ratio[i] - eig.values[i] / trace));
        for (std::size_t j = 0; j < p; ++j) {
          dir_err = std::max(dir_err, std::abs(model.directions[i][j] - eig.vectors[i][j]));
          double dot = 0.0;
          for (std::size_t k = 0; k < p; ++k) dot += model.directions[i][k] * model.directions[j][k];
          ortho_err = std::max(ortho_err, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
      }
    }
    const auto line = fit_pca(testing::make_dataset({{0, 0}, {1, 1}, {2, 2}}, {0, 0, 0}), 1);
    const double h = 1.0 / std::sqrt(2.0);
    const double line_err = std::max({std::abs(line.directions[0][0] - h),
                                      std::abs(line.directions[0][1] - h),
                                      std::abs(line.explained_variance_ratio[0] - 1.0)});
    const auto iso = fit_pca(testing::make_dataset({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0, 0, 0, 0}), 2);
    const double iso_err = std::max(std::abs(iso.explained_variance_ratio[0] - 0.5),
                                    std::abs(iso.explained_variance_ratio[1] - 0.5));
    const bool ok = dir_err <= 1e-8 && ratio_err <= 1e-8 && ortho_err <= 1e-9 &&
                    line_err <= 1e-9 && iso_err <= 1e-9;
    return Outcome{ok, fmt::format("direction {:.2e}, ratio {:.2e}, orthonormality {:.2e}, "
                                   "collinear {:.2e}, isotropic {:.2e}",
                                   dir_err, ratio_err, ortho_err, line_err, iso_err)};
  });

  criterion("linear baseline against normal equations", [&] {
    Rng rng(2718);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t p = 1 + rng.below(6);
      const std::size_t n = p + 2 + rng.below(30);
      const auto x = testing::random_matrix(rng, n, p, -4.0, 4.0);
      std::vector<double> y;
      for (std::size_t i = 0; i < n; ++i) y.push_back(9.0 * rng.uniform());
      const auto model = fit_linear(testing::make_dataset(x, y));
      const auto beta = oracle::normal_equations(x, y);
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
      worst = std::max(worst, rel(model.intercept, beta[0]));
      for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, rel(model.coefficients[j], beta[j + 1]));
    }
    const auto line = fit_linear(testing::make_dataset({{1}, {2}, {3}}, {2, 4, 6}));
    const double line_err = std::max(std::abs(line.coefficients[0] - 2.0), std::abs(line.intercept));
    return Outcome{worst <= 1e-8 && line_err <= 1e-9,
                   fmt::format("worst relative error {:.2e}, exact line {:.2e}", worst, line_err)};
  });

  criterion("fusion arithmetic", [&] {
    const LagSpec def;
    const auto names = def.feature_names();
    const LagSpec toy{10, 5, 1, 3, 3};
    SynthConfig synth;
    synth.n_days = 4;
    auto sources = generate(synth).sources();
    const auto data = fuse(sources, def);
    bool widths = def.feature_count() == 767 && names.size() == 767 && data.n_features() == 767 &&
                  names.front() == "fma_m0" && names.back() == "kp_m1260" &&
                  toy.feature_count() == 16 && fuse(sources, toy).n_features() == 16;
    // Knock out one solar reading five minutes before a row instant.
    const Timestamp t = data.row_times()[3];
    auto values = sources.solar[2].values();
    values[static_cast<std::size_t>((t - 5 - sources.solar[2].start()) / 5)] = std::nullopt;
    sources.solar[2] = MeasurementSeries(std::string(kSolarFields[2]), 5, sources.solar[2].start(), values);
    const auto gapped = fuse(sources, def);
    // Every row whose 540-minute solar window covers the gap disappears;
    // nothing else does.
    const Timestamp gap_at = t - 5;
    std::vector<Timestamp> expected;
    for (auto rt : data.row_times())
      if (!(gap_at <= rt && gap_at > rt - def.solar_wind_lookback_minutes)) expected.push_back(rt);
    const bool gap = gapped.row_times() == expected && expected.size() < data.n_rows();
    return Outcome{widths && gap, fmt::format("767/16 widths {}, gapped row dropped {}", widths, gap)};
  });

  criterion("serialization round trips", [&] {
    SynthConfig synth;
    synth.n_days = 20;
    const auto data = fuse(generate(synth).sources(), LagSpec{60, 15, 3, 24, 3});
    ForestConfig config;
    config.n_trees = 40;
    config.seed = 5;
    const auto model = fit_forest(data, config);
    const auto loaded = load_forest(save_model(model));
    Rng rng(8);
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
      std::vector<double> row(data.n_features());
      const auto base = data.row(rng.below(data.n_rows()));
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = base[j] * (0.5 + rng.uniform());
      a.push_back(predict(model, row));
      b.push_back(predict(loaded, row));
    }
    const bool model_ok = same_bits(a, b);
    const auto csv = format_dataset(data);
    const auto back = parse_dataset(csv);
    const bool csv_ok = same_bits(back.values(), data.values()) &&
                        same_bits(back.targets(), data.targets()) &&
                        back.row_times() == data.row_times() && format_dataset(back) == csv;
    return Outcome{model_ok && csv_ok,
                   fmt::format("50 predictions bit-identical {}, dataset CSV exact {}", model_ok, csv_ok)};
  });

  fs::remove_all(work);
  std::cout << fmt::format("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
