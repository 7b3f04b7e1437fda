#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "robustopt/harness.hpp"

namespace robustopt {

//! Problem sizes for the two bundled experiment scales.
struct FigureLayout {
  std::size_t dimension = 16;
  std::size_t num_runs = 20;
  std::size_t horizon = 5000;
  std::size_t record_stride = 1;
};

/*!
 * `desk` keeps a laptop-sized layout whose horizons were fixed by checking
 * that post-burn-in first-half and second-half error moments agree (split-half
 * stationarity); `paper` is the full-size layout.
 */
inline FigureLayout figure_layout(const std::string& which, bool desk) {
  if (which == "fig1") {
    return desk ? FigureLayout{16, 20, 20000, 1} : FigureLayout{128, 100, 30000, 10};
  }
  if (which == "fig2-linreg") {
    return desk ? FigureLayout{16, 20, 20000, 1} : FigureLayout{128, 100, 30000, 10};
  }
  if (which == "fig2-logreg") {
    return desk ? FigureLayout{16, 20, 10000, 1} : FigureLayout{128, 100, 30000, 10};
  }
  throw std::invalid_argument("unknown figure: " + which);
}

inline std::vector<double> figure_etas(const std::string& which, bool desk) {
  if (which == "fig1") {
    return desk ? std::vector<double>{0.0, 0.02, 0.04} : std::vector<double>{0.0, 0.01, 0.02, 0.04};
  }
  if (which == "fig2-linreg" || which == "fig2-logreg") {
    return desk ? std::vector<double>{0.02, 0.06} : std::vector<double>{0.02, 0.06, 0.1};
  }
  throw std::invalid_argument("unknown figure: " + which);
}

namespace detail {

inline std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct FigureCombo {
  Method method = Method::rqc_sgd;
  double clip_lambda = 1.0;
  std::string file_tag;  // method plus any variant parameter
};

inline std::vector<FigureCombo> figure_combos(const std::string& which) {
  if (which == "fig1") {
    return {{Method::rqc_sgd, 1.0, "rqc_sgd"},
            {Method::gmom, 1.0, "gmom"},
            {Method::cmom, 1.0, "cmom"}};
  }
  const Method robust_loss = which == "fig2-linreg" ? Method::huber : Method::modified_huber;
  return {{Method::rqc_sgd, 1.0, "rqc_sgd"},
          {robust_loss, 1.0, method_name(robust_loss)},
          {Method::constant_clip, 0.8, "constant_clip_0.8"},
          {Method::constant_clip, 1.0, "constant_clip_1"},
          {Method::constant_clip, 1.2, "constant_clip_1.2"}};
}

}  // namespace detail

inline StreamSpec with_seed(StreamSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return spec;
}

/*!
 * Run one bundled benchmark figure end to end and write one CSV of per-run
 * error trajectories per (method, eta) combination plus a summary.csv of
 * pointwise means and standard deviations. All methods at one corruption
 * level consume identical sample paths (shared run seeds), and every output
 * byte is a pure function of (figure, scale, seed, runs).
 */
inline void reproduce_figure(const std::string& which, bool desk, std::uint64_t seed,
                             const std::string& outdir, std::size_t runs_override = 0) {
  const FigureLayout layout = figure_layout(which, desk);
  const std::vector<double> etas = figure_etas(which, desk);
  const std::vector<detail::FigureCombo> combos = detail::figure_combos(which);
  const Task task = which == "fig1" ? Task::mean
                    : which == "fig2-linreg" ? Task::linreg
                                             : Task::logreg;
  std::filesystem::create_directories(outdir);
  std::vector<CsvRow> summary_rows;

  for (std::size_t e = 0; e < etas.size(); ++e) {
    const double eta = etas[e];
    double tuned_delta = 1.0;
    bool tuned = false;

    for (const detail::FigureCombo& combo : combos) {
      ExperimentConfig config;
      config.name = which;
      config.task = task;
      config.method = combo.method;
      config.stream.task = task;
      config.stream.dimension = layout.dimension;
      config.stream.eta = eta;
      config.stream.seed = Rng::split(seed, 0x57EA);  // frozen stream shared figure-wide
      config.stream_seed_explicit = true;
      config.clip = preset_clip(task, eta);
      config.clip_lambda = combo.clip_lambda;
      config.horizon = layout.horizon;
      config.num_runs = runs_override != 0 ? runs_override : layout.num_runs;
      config.record_stride = layout.record_stride;
      config.master_seed = Rng::split(seed, 100 + e);  // shared by all methods at this eta

      if (combo.method == Method::huber || combo.method == Method::modified_huber) {
        if (!tuned) {
          tuned_delta = tune_huber_delta(with_seed(config.stream, config.stream.seed),
                                         HuberTuneConfig{}, config.clip.step_size,
                                         Rng::split(seed, 200 + e));
          tuned = true;
        }
        config.huber_delta = tuned_delta;
        summary_rows.push_back({which, method_name(combo.method), task_name(task), eta,
                                config.master_seed, 0, "tuned_delta", tuned_delta, {}});
      }

      const std::vector<RunRecord> records = run_experiment(config);
      const std::string file = which + "_" + combo.file_tag + "_eta" + detail::short_double(eta) +
                               ".csv";
      emit_csv(records_to_rows(config, records, RowMetrics::error_only),
               (std::filesystem::path(outdir) / file).string());
      const std::vector<CsvRow> rows = summary_to_rows(config, aggregate_runs(records));
      // Tag the constant-clip variants so the summary keeps them apart.
      for (CsvRow row : rows) {
        if (combo.method == Method::constant_clip) {
          row.method = combo.file_tag;
        }
        summary_rows.push_back(std::move(row));
      }
    }
  }
  emit_csv(summary_rows, (std::filesystem::path(outdir) / "summary.csv").string());
}

namespace detail {

inline int run_subcommand(const std::string& config_path, bool seed_set, std::uint64_t seed,
                          const std::string& out_override, std::size_t runs_override) {
  ExperimentConfig config = parse_experiment_config_file(config_path);
  if (seed_set) config.master_seed = seed;
  if (!out_override.empty()) config.output_path = out_override;
  if (runs_override != 0) config.num_runs = runs_override;
  config.validate();

  const std::vector<RunRecord> records = run_experiment(config);
  emit_csv(records_to_rows(config, records, RowMetrics::full), config.output_path);
  std::filesystem::path summary_path(config.output_path);
  summary_path.replace_filename(summary_path.stem().string() + "_summary.csv");
  const std::vector<SummaryRow> summary = aggregate_runs(records);
  emit_csv(summary_to_rows(config, summary), summary_path.string());

  std::cout << "wrote " << config.output_path << " and " << summary_path.string() << "\n"
            << "final mean error: " << summary.back().mean_error << "\n";
  return 0;
}

inline int tune_subcommand(const std::string& config_path, bool seed_set, std::uint64_t seed,
                           const std::string& out_path) {
  KeyValueConfig kv = KeyValueConfig::from_file(config_path);
  ExperimentConfig config = parse_experiment_config(kv);
  kv.reject_unknown();
  if (seed_set) config.master_seed = seed;
  StreamSpec spec = config.stream;
  spec.seed = config.effective_stream_seed();

  const HuberTuneResult result =
      tune_huber_delta_detailed(spec, config.tune, config.clip.step_size, config.master_seed);
  std::cout << "candidate delta -> average final error\n";
  for (std::size_t j = 0; j < config.tune.candidates.size(); ++j) {
    std::cout << "  " << config.tune.candidates[j] << " -> " << result.average_errors[j]
              << (j == result.selected_index ? "   <- selected" : "") << "\n";
  }
  std::cout << "selected delta: " << result.selected_delta << "\n";

  if (!out_path.empty()) {
    std::vector<CsvRow> rows;
    for (std::size_t j = 0; j < config.tune.candidates.size(); ++j) {
      rows.push_back({config.name, method_name(config.method), task_name(config.task),
                      config.stream.eta, config.master_seed, j, "avg_final_error",
                      result.average_errors[j], "tune-huber"});
    }
    rows.push_back({config.name, method_name(config.method), task_name(config.task),
                    config.stream.eta, config.master_seed, result.selected_index, "selected_delta",
                    result.selected_delta, "tune-huber"});
    emit_csv(rows, out_path, true);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

inline int diagnose_eta_scaling(KeyValueConfig& kv, bool seed_set, std::uint64_t seed,
                                const std::string& out_override) {
  const Task task = task_from_name(kv.get_string("task", "mean"));
  StreamSpec spec;
  spec.task = task;
  spec.dimension = static_cast<std::size_t>(kv.require_u64("dimension"));
  spec.sigma_min = kv.get_double("sigma_min", 1.0);
  spec.sigma_max = kv.get_double("sigma_max", 5.0);
  const std::vector<double> etas = kv.get_double_list("etas");
  const auto horizon = static_cast<std::size_t>(kv.require_u64("horizon"));
  const auto num_seeds = static_cast<std::size_t>(kv.get_u64("num_seeds", 20));
  std::uint64_t master = kv.get_u64("master_seed", 0);
  ClipConfig clip;
  clip.step_size = kv.get_double("step_size", preset_step_size(task));
  clip.buffer_capacity = static_cast<std::size_t>(kv.get_u64("buffer_capacity", 100));
  clip.init_threshold = kv.get_double("init_threshold", 10.0);
  std::string out = kv.get_string("output", "eta_scaling.csv");
  spec.seed = kv.get_u64("stream_seed", Rng::split(master, 0x5EED));
  kv.reject_unknown();
  if (seed_set) master = seed;
  if (!out_override.empty()) out = out_override;

  const EtaScalingResult result = eta_scaling_probe(etas, spec, clip, horizon, num_seeds, master);
  std::vector<CsvRow> rows;
  std::cout << "eta -> stationary rmse\n";
  for (const EtaScalingRow& row : result.rows) {
    std::cout << "  " << row.eta << " -> " << row.rmse << "\n";
    rows.push_back({"eta-scaling", "rqc_sgd", task_name(task), row.eta, master, 0,
                    "stationary_rmse", row.rmse, "eta-scaling"});
  }
  if (result.loglog_slope) {
    std::cout << "log-log slope: " << *result.loglog_slope << "\n";
    rows.push_back({"eta-scaling", "rqc_sgd", task_name(task), 0.0, master, 0, "loglog_slope",
                    *result.loglog_slope, "eta-scaling"});
  } else {
    std::cout << "log-log slope: not defined for fewer than two positive rates\n";
  }
  emit_csv(rows, out, true);
  std::cout << "wrote " << out << "\n";
  return 0;
}

inline int diagnose_toy_chain(KeyValueConfig& kv, bool seed_set, std::uint64_t seed,
                              const std::string& out_override) {
  ToyChainConfig config;
  config.alpha = kv.get_double("alpha", 0.5);
  config.tau = kv.get_double("tau", 1.0);
  config.eta = kv.get_double("eta", 0.1);
  const std::string noise = kv.get_string("noise", "uniform01");
  if (noise == "zero") config.noise = ToyNoise::zero;
  else if (noise == "uniform01") config.noise = ToyNoise::uniform01;
  else throw std::invalid_argument("noise must be `zero` or `uniform01`");
  const auto horizon = static_cast<std::size_t>(kv.get_u64("horizon", 1000000));
  const int max_k = static_cast<int>(kv.get_u64("max_k", 8));
  std::uint64_t master = kv.get_u64("master_seed", 0);
  std::string out = kv.get_string("output", "toy_chain.csv");
  kv.reject_unknown();
  if (seed_set) master = seed;
  if (!out_override.empty()) out = out_override;

  const ToyChainMoments moments = toy_chain_moments(config, horizon, max_k, master);
  std::vector<CsvRow> rows;
  std::cout << "k -> M_k (M_k / k)\n";
  for (std::size_t i = 0; i < moments.orders.size(); ++i) {
    const auto k = static_cast<std::uint64_t>(moments.orders[i]);
    std::cout << "  " << k << " -> " << moments.m[i] << " (" << moments.ratio_to_k[i] << ")\n";
    rows.push_back({"toy-chain", "chain", "mean", config.eta, master, k, "moment_root",
                    moments.m[i], "toy-chain"});
    rows.push_back({"toy-chain", "chain", "mean", config.eta, master, k, "moment_root_over_k",
                    moments.ratio_to_k[i], "toy-chain"});
  }
  emit_csv(rows, out, true);
  std::cout << "wrote " << out << "\n";
  return 0;
}

inline int diagnose_stationarity(KeyValueConfig& kv, bool seed_set, std::uint64_t seed,
                                 const std::string& out_override) {
  ExperimentConfig config = parse_experiment_config(kv);
  const auto burn_in =
      static_cast<std::size_t>(kv.get_u64("burn_in", config.horizon / 5));
  kv.reject_unknown();
  if (seed_set) config.master_seed = seed;
  std::string out = out_override.empty() ? config.output_path : out_override;
  config.validate();

  const std::vector<RunRecord> records = run_experiment(config);
  const std::vector<SummaryRow> summary = aggregate_runs(records);
  std::vector<double> mean_errors, second_moments;
  for (const SummaryRow& s : summary) {
    if (s.t >= burn_in) mean_errors.push_back(s.mean_error);
  }
  if (mean_errors.size() < 2) throw std::invalid_argument("burn-in leaves too few points");
  for (double v : mean_errors) second_moments.push_back(v * v);
  const double diff_mean = split_half_relative_diff(mean_errors);
  const double diff_second = split_half_relative_diff(second_moments);

  StationaryStats pooled = collect_stationary_stats(records[0], burn_in);
  for (std::size_t i = 1; i < records.size(); ++i) {
    StationaryStats s = collect_stationary_stats(records[i], burn_in);
    pooled.samples.insert(pooled.samples.end(), s.samples.begin(), s.samples.end());
  }
  RunRecord pooled_record;
  for (std::size_t i = 0; i < pooled.samples.size(); ++i) {
    pooled_record.points.push_back({burn_in + i, pooled.samples[i], 0.0, false});
  }
  const StationaryStats stats = collect_stationary_stats(pooled_record, 0);

  std::cout << "post-burn-in mean error: " << stats.mean << "\n"
            << "split-half relative difference (mean / second moment): " << diff_mean << " / "
            << diff_second << "\n"
            << "quantiles p50 / p90 / p99: " << stats.q50 << " / " << stats.q90 << " / "
            << stats.q99 << "\n"
            << "tail ratio q99 / q50: " << (stats.q50 > 0.0 ? stats.q99 / stats.q50 : 0.0) << "\n";

  std::vector<CsvRow> rows;
  const std::string method = method_name(config.method);
  const std::string task = task_name(config.task);
  const double eta = config.stream.eta;
  const auto push = [&](const std::string& metric, double value) {
    rows.push_back({config.name, method, task, eta, config.master_seed,
                    static_cast<std::uint64_t>(burn_in), metric, value, "stationarity"});
  };
  push("mean", stats.mean);
  push("second_moment", stats.second_moment);
  push("variance", stats.variance);
  push("q50", stats.q50);
  push("q90", stats.q90);
  push("q99", stats.q99);
  push("split_half_diff_mean", diff_mean);
  push("split_half_diff_second_moment", diff_second);
  if (stats.q50 > 0.0) push("tail_ratio_q99_q50", stats.q99 / stats.q50);
  emit_csv(rows, out, true);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace detail

/*!
 * Command-line entry point. Exit codes: 0 on success, 1 for configuration
 * errors (bad flags, bad config files, invalid parameter combinations), 2 for
 * runtime failures.
 */
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"streaming robust optimization benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_path, which, kind, scale = "desk";
  std::uint64_t seed = 0;
  std::size_t runs = 0;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "flat key = value config file")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "override master_seed");
  run->add_option("--out", out_path, "override the output csv path");
  run->add_option("--runs", runs, "override num_runs");

  CLI::App* reproduce = app.add_subcommand("reproduce", "rebuild a bundled benchmark figure");
  reproduce->add_option("figure", which, "fig1, fig2-linreg or fig2-logreg")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2-linreg", "fig2-logreg"}));
  reproduce->add_option("--scale", scale, "desk (default) or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  CLI::Option* rep_seed = reproduce->add_option("--seed", seed, "master seed (default 0)");
  reproduce->add_option("--out", out_path, "output directory");
  reproduce->add_option("--runs", runs, "override the per-combination run count");

  CLI::App* tune = app.add_subcommand("tune-huber", "grid-search the robust loss scale");
  tune->add_option("config", config_path, "flat key = value config file")->required();
  CLI::Option* tune_seed = tune->add_option("--seed", seed, "override master_seed");
  tune->add_option("--out", out_path, "also write the per-candidate table to this csv");

  CLI::App* diagnose = app.add_subcommand("diagnose", "run a diagnostic probe");
  diagnose->add_option("kind", kind, "eta-scaling, toy-chain or stationarity")
      ->required()
      ->check(CLI::IsMember({"eta-scaling", "toy-chain", "stationarity"}));
  diagnose->add_option("config", config_path, "flat key = value config file")->required();
  CLI::Option* diag_seed = diagnose->add_option("--seed", seed, "override master_seed");
  diagnose->add_option("--out", out_path, "override the output csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      return detail::run_subcommand(config_path, run_seed->count() > 0, seed, out_path, runs);
    }
    if (*reproduce) {
      const bool desk = scale == "desk";
      std::string outdir = out_path.empty() ? "results/" + which + "_" + scale : out_path;
      reproduce_figure(which, desk, rep_seed->count() > 0 ? seed : 0, outdir, runs);
      std::cout << "wrote " << outdir << "\n";
      return 0;
    }
    if (*tune) {
      return detail::tune_subcommand(config_path, tune_seed->count() > 0, seed, out_path);
    }
    if (*diagnose) {
      KeyValueConfig kv = KeyValueConfig::from_file(config_path);
      const bool seed_set = diag_seed->count() > 0;
      if (kind == "eta-scaling") return detail::diagnose_eta_scaling(kv, seed_set, seed, out_path);
      if (kind == "toy-chain") return detail::diagnose_toy_chain(kv, seed_set, seed, out_path);
      return detail::diagnose_stationarity(kv, seed_set, seed, out_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace robustopt
