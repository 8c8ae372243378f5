#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "sbrsf/config.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/evaluation.hpp"
#include "sbrsf/ipcw.hpp"
#include "sbrsf/sbrsf.hpp"
#include "sbrsf/simgen.hpp"
#include "sbrsf/svg_plot.hpp"

namespace sbrsf::cli {

namespace fs = std::filesystem;

// Seed streams consumed by the run pipeline; everything hangs off run.seed so
// one integer reproduces the whole experiment.
constexpr std::uint64_t kRunSimStream = 201;
constexpr std::uint64_t kRunSplitStream = 202;
constexpr std::uint64_t kRunRsfStream = 203;
constexpr std::uint64_t kRunSbrsfStream = 204;

struct ExperimentSpec {
  std::string source = "sim";  // sim | csv
  SimConfig sim;
  std::string csv_path;        // csv source, split applied here
  std::string train_csv;       // csv source, pre-split
  std::string test_csv;
  CsvSchema schema;
  double split_fraction = 0.7;
  std::uint64_t seed = 42;
  std::vector<double> grid;
  ForestConfig rsf;
  SbrsfConfig sbrsf;
  std::string spec_text;       // resolved key=value snapshot

  static SimConfig resolve_sim(const KvConfig& kv) {
    if (kv.has("data.sim_config")) return sim_config_from_kv(KvConfig::parse_file(kv.get("data.sim_config")));
    const std::string preset = kv.get_or("data.preset", "example1");
    if (preset == "example1") return example1_default();
    if (preset == "example2") return example2_default();
    if (preset == "dependent") return dependent_censoring_default();
    throw std::runtime_error("experiment: unknown data.preset '" + preset + "'");
  }

  static ExperimentSpec parse(const KvConfig& kv) {
    ExperimentSpec spec;
    spec.source = kv.get_or("data.source", "sim");
    if (spec.source == "sim") {
      spec.sim = resolve_sim(kv);
      if (kv.has("sim.n")) spec.sim.n = static_cast<int>(kv.get_int("sim.n"));
    } else if (spec.source == "csv") {
      spec.csv_path = kv.get_or("data.csv", "");
      spec.train_csv = kv.get_or("data.train_csv", "");
      spec.test_csv = kv.get_or("data.test_csv", "");
      if (spec.csv_path.empty() && (spec.train_csv.empty() || spec.test_csv.empty()))
        throw std::runtime_error("experiment: csv source needs data.csv or both "
                                 "data.train_csv and data.test_csv");
    } else {
      throw std::runtime_error("experiment: unknown data.source '" + spec.source + "'");
    }
    spec.schema.time_column = kv.get_or("data.time_column", "time");
    spec.schema.event_column = kv.get_or("data.event_column", "event");
    for (const auto& c : split_tokens(kv.get_or("data.categorical", "")))
      spec.schema.categorical.push_back(c);
    spec.split_fraction = kv.get_double_or("split.fraction", 0.7);
    spec.seed = static_cast<std::uint64_t>(kv.get_int_or("run.seed", 42));
    spec.grid = parse_grid(kv.get_or("run.grid", "1:20:1"));

    spec.rsf.n_trees = static_cast<int>(kv.get_int_or("rsf.n_trees", 200));
    spec.rsf.tree.d0 = static_cast<int>(kv.get_int_or("rsf.d0", 3));
    spec.rsf.tree.mtry = static_cast<int>(kv.get_int_or("rsf.mtry", 0));

    spec.sbrsf.global.n_trees = static_cast<int>(kv.get_int_or("sbrsf.global_n_trees", 200));
    spec.sbrsf.per_case.n_trees = static_cast<int>(kv.get_int_or("sbrsf.per_case_n_trees", 200));
    spec.sbrsf.global.tree.d0 = static_cast<int>(kv.get_int_or("sbrsf.d0", 3));
    spec.sbrsf.per_case.tree.d0 = spec.sbrsf.global.tree.d0;
    spec.sbrsf.global.tree.mtry = static_cast<int>(kv.get_int_or("sbrsf.mtry", 0));
    spec.sbrsf.per_case.tree.mtry = spec.sbrsf.global.tree.mtry;
    spec.sbrsf.dependent_censoring = kv.get_bool_or("sbrsf.dependent_censoring", false);
    if (kv.has("sbrsf.threshold")) {
      const double tau = kv.get_double("sbrsf.threshold");
      if (tau > 0.0) spec.sbrsf.threshold = tau;
    }
    spec.spec_text = kv.serialize();
    return spec;
  }
};

// Moves every regular file out of `staging` into `final_dir`.
inline void promote_staging(const fs::path& staging, const fs::path& final_dir) {
  for (const auto& entry : fs::directory_iterator(staging)) {
    const fs::path target = final_dir / entry.path().filename();
    fs::remove(target);
    fs::rename(entry.path(), target);
  }
  fs::remove_all(staging);
}

inline int run_experiment(const ExperimentSpec& spec_in, const fs::path& out_dir,
                          unsigned workers, std::ostream& log = std::cerr) {
  ExperimentSpec spec = spec_in;
  const fs::path staging = out_dir / ".staging";
  fs::remove_all(staging);
  fs::create_directories(staging);

  RunManifest manifest("run", spec.seed, workers);
  manifest.set_resolved_spec(spec.spec_text);
  std::string stage = "configure";

  try {
    // --- data ---------------------------------------------------------------
    stage = "data";
    StageTimer data_timer;
    Dataset train, test;
    if (spec.source == "sim") {
      SimConfig sim = spec.sim;
      sim.seed = derive_seed(spec.seed, kRunSimStream);
      const SimResult result = simulate(sim);
      save_csv(result.data, (staging / "dataset.csv").string());
      write_oracle_csv(result, (staging / "oracle.csv").string());
      manifest.add_output(staging / "dataset.csv", "dataset.csv");
      manifest.add_output(staging / "oracle.csv", "oracle.csv");
      if (sim.censoring == CensoringKind::Uniform)
        manifest.note("calibrated_cmax", result.cmax_used);
      auto parts = split_train_test(result.data, spec.split_fraction,
                                    derive_seed(spec.seed, kRunSplitStream));
      train = std::move(parts.first);
      test = std::move(parts.second);
    } else if (!spec.csv_path.empty()) {
      std::vector<std::string> warnings;
      const Dataset all = load_csv(spec.csv_path, spec.schema, &warnings);
      for (const auto& w : warnings) log << "warning: " << w << "\n";
      auto parts =
          split_train_test(all, spec.split_fraction, derive_seed(spec.seed, kRunSplitStream));
      train = std::move(parts.first);
      test = std::move(parts.second);
    } else {
      std::vector<std::string> warnings;
      train = load_csv(spec.train_csv, spec.schema, &warnings);
      test = load_csv(spec.test_csv, spec.schema, &warnings);
      for (const auto& w : warnings) log << "warning: " << w << "\n";
    }
    train.validate();
    save_csv(train, (staging / "train.csv").string());
    save_csv(test, (staging / "test.csv").string());
    manifest.add_output(staging / "train.csv", "train.csv");
    manifest.add_output(staging / "test.csv", "test.csv");
    manifest.note("n_train", train.n());
    manifest.note("n_test", test.n());
    manifest.stage_done("data", data_timer.ms());

    // --- rsf ------------------------------------------------------------------
    stage = "rsf";
    StageTimer rsf_timer;
    ForestConfig rsf_cfg = spec.rsf;
    rsf_cfg.seed = derive_seed(spec.seed, kRunRsfStream);
    const SbrsfPrediction rsf_pred = rsf_fit_predict(train, test, rsf_cfg, workers);
    write_predictions_csv(rsf_pred.per_test_chf, (staging / "rsf_predictions.csv").string());
    rsf_pred.weight_matrix.write_csv((staging / "rsf_weights.csv").string());
    manifest.add_output(staging / "rsf_predictions.csv", "rsf_predictions.csv");
    manifest.add_output(staging / "rsf_weights.csv", "rsf_weights.csv");
    manifest.stage_done("rsf", rsf_timer.ms());

    // --- ipcw (dependent censoring only) -------------------------------------
    SbrsfConfig sbrsf_cfg = spec.sbrsf;
    sbrsf_cfg.seed = derive_seed(spec.seed, kRunSbrsfStream);
    if (sbrsf_cfg.dependent_censoring) {
      stage = "ipcw";
      StageTimer ipcw_timer;
      const IpcwVector ipcw = ipcw_weights(train);
      write_ipcw_csv(ipcw, (staging / "ipcw.csv").string());
      manifest.add_output(staging / "ipcw.csv", "ipcw.csv");
      double mn = ipcw.weights[0], mx = ipcw.weights[0], sum = 0.0;
      for (double w : ipcw.weights) {
        mn = std::min(mn, w);
        mx = std::max(mx, w);
        sum += w;
      }
      manifest.note("ipcw_summary",
                    nlohmann::json{{"min", mn}, {"max", mx}, {"mean", sum / ipcw.weights.size()}});
      manifest.stage_done("ipcw", ipcw_timer.ms());
    }

    // --- sbrsf ----------------------------------------------------------------
    stage = "sbrsf";
    StageTimer sbrsf_timer;
    const SbrsfPrediction sbrsf_pred = sbrsf_fit_predict(train, test, sbrsf_cfg, workers);
    write_predictions_csv(sbrsf_pred.per_test_chf, (staging / "sbrsf_predictions.csv").string());
    sbrsf_pred.weight_matrix.write_csv((staging / "sbrsf_weights.csv").string());
    manifest.add_output(staging / "sbrsf_predictions.csv", "sbrsf_predictions.csv");
    manifest.add_output(staging / "sbrsf_weights.csv", "sbrsf_weights.csv");
    manifest.stage_done("sbrsf", sbrsf_timer.ms());

    // --- evaluate ---------------------------------------------------------------
    stage = "evaluate";
    StageTimer eval_timer;
    const AucCurve rsf_auc = time_varying_auc(test, rsf_pred.per_test_chf, spec.grid);
    const AucCurve sbrsf_auc = time_varying_auc(test, sbrsf_pred.per_test_chf, spec.grid);
    rsf_auc.write_csv((staging / "rsf_auc.csv").string());
    sbrsf_auc.write_csv((staging / "sbrsf_auc.csv").string());
    manifest.add_output(staging / "rsf_auc.csv", "rsf_auc.csv");
    manifest.add_output(staging / "sbrsf_auc.csv", "sbrsf_auc.csv");
    manifest.stage_done("evaluate", eval_timer.ms());

    // --- compare + plot ---------------------------------------------------------
    stage = "compare";
    StageTimer cmp_timer;
    const AucComparison cmp = compare_auc(sbrsf_auc, rsf_auc);
    cmp.write_csv((staging / "compare.csv").string());
    manifest.add_output(staging / "compare.csv", "compare.csv");
    manifest.note("comparison",
                  nlohmann::json{{"mean_diff_sbrsf_minus_rsf", cmp.mean_diff},
                                 {"win_fraction_sbrsf", cmp.win_fraction},
                                 {"n_defined", cmp.n_defined},
                                 {"mean_auc_sbrsf", sbrsf_auc.mean_defined()},
                                 {"mean_auc_rsf", rsf_auc.mean_defined()}});
    manifest.stage_done("compare", cmp_timer.ms());

    stage = "plot";
    StageTimer plot_timer;
    write_auc_plot_svg((staging / "auc_plot.svg").string(),
                       {{"RSF", "black", &rsf_auc}, {"SB-RSF", "red", &sbrsf_auc}},
                       "Time-varying AUC");
    manifest.add_output(staging / "auc_plot.svg", "auc_plot.svg");
    manifest.stage_done("plot", plot_timer.ms());

    stage = "finalize";
    manifest.write(staging / "manifest.json");
    promote_staging(staging, out_dir);
    log << "run complete: " << out_dir.string() << "\n";
    log << "  mean AUC diff (SB-RSF - RSF): " << format_double(cmp.mean_diff) << "\n";
    log << "  SB-RSF win fraction: " << format_double(cmp.win_fraction) << "\n";
    return 0;
  } catch (const std::exception& e) {
    manifest.set_error(stage, e.what());
    manifest.write(staging / "manifest.json");
    const fs::path quarantine = out_dir / "quarantine";
    fs::remove_all(quarantine);
    fs::rename(staging, quarantine);
    log << "error [" << stage << "]: " << e.what() << "\n";
    log << "partial outputs quarantined in " << quarantine.string() << "\n";
    return 1;
  }
}

}  // namespace sbrsf::cli
