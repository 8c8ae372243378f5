#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "experiment.hpp"
#include "manifest.hpp"
#include "sbrsf/config.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/evaluation.hpp"
#include "sbrsf/ipcw.hpp"
#include "sbrsf/sbrsf.hpp"
#include "sbrsf/simgen.hpp"

namespace fs = std::filesystem;
using namespace sbrsf;
using namespace sbrsf::cli;

namespace {

// Stage everything, promote on success, quarantine on failure. Keeps partial
// outputs away from good ones and makes the exit status trustworthy.
int staged_command(const std::string& command, std::uint64_t seed, unsigned workers,
                   const fs::path& out_dir,
                   const std::function<void(const fs::path&, RunManifest&, std::string&)>& body) {
  const fs::path staging = out_dir / ".staging";
  fs::remove_all(staging);
  fs::create_directories(staging);
  RunManifest manifest(command, seed, workers);
  std::string stage = "configure";
  try {
    body(staging, manifest, stage);
    stage = "finalize";
    manifest.write(staging / "manifest.json");
    promote_staging(staging, out_dir);
    return 0;
  } catch (const std::exception& e) {
    manifest.set_error(stage, e.what());
    manifest.write(staging / "manifest.json");
    const fs::path quarantine = out_dir / "quarantine";
    fs::remove_all(quarantine);
    fs::rename(staging, quarantine);
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    std::cerr << "partial outputs quarantined in " << quarantine.string() << "\n";
    return 1;
  }
}

SimConfig load_sim_config(const std::string& config_path, const std::string& preset) {
  if (!config_path.empty()) return sim_config_from_kv(KvConfig::parse_file(config_path));
  if (preset == "example1") return example1_default();
  if (preset == "example2") return example2_default();
  if (preset == "dependent") return dependent_censoring_default();
  throw std::runtime_error("unknown preset '" + preset + "'");
}

CsvSchema schema_from_flags(const std::string& time_col, const std::string& event_col,
                            const std::vector<std::string>& categorical) {
  CsvSchema schema;
  schema.time_column = time_col;
  schema.event_column = event_col;
  schema.categorical = categorical;
  return schema;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-based random survival forests"};
  app.require_subcommand(1);

  unsigned workers = 1;
  app.add_option("--workers", workers, "worker threads (results are worker-count independent)")
      ->capture_default_str();
  app.fallthrough();  // parent flags like --workers may follow the subcommand

  // ---- simulate -------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic survival dataset");
  std::string sim_config_path, sim_preset = "example1", sim_out;
  std::int64_t sim_seed = -1;
  std::int64_t sim_n = -1;
  sim_cmd->add_option("--config", sim_config_path, "sim config file (key=value)");
  sim_cmd->add_option("--preset", sim_preset, "example1 | example2 | dependent")
      ->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--seed", sim_seed, "override sim.seed");
  sim_cmd->add_option("-n,--n", sim_n, "override sim.n");

  // ---- run --------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "full experiment: simulate/load, split, fit both "
                                            "methods, evaluate, compare, plot");
  std::string run_spec_path, run_manifest_path, run_out;
  std::int64_t run_seed = -1;
  run_cmd->add_option("--config", run_spec_path, "experiment spec (key=value)");
  run_cmd->add_option("--from-manifest", run_manifest_path, "rerun from a manifest.json");
  run_cmd->add_option("--out", run_out, "output directory")->required();
  run_cmd->add_option("--seed", run_seed, "override run.seed");

  // ---- fit ----------------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "fit a random survival forest and dump its trees");
  std::string fit_train, fit_out, fit_time_col = "time", fit_event_col = "event";
  std::vector<std::string> fit_categorical;
  int fit_trees = 200, fit_d0 = 3, fit_mtry = 0;
  std::int64_t fit_seed = 0;
  fit_cmd->add_option("--train", fit_train, "training CSV")->required();
  fit_cmd->add_option("--out", fit_out, "output directory")->required();
  fit_cmd->add_option("--n-trees", fit_trees, "")->capture_default_str();
  fit_cmd->add_option("--d0", fit_d0, "min unique deaths per terminal node")
      ->capture_default_str();
  fit_cmd->add_option("--mtry", fit_mtry, "candidate features per split (0 = ceil(sqrt(p)))")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit_seed, "")->capture_default_str();
  fit_cmd->add_option("--time-column", fit_time_col, "")->capture_default_str();
  fit_cmd->add_option("--event-column", fit_event_col, "")->capture_default_str();
  fit_cmd->add_option("--categorical", fit_categorical, "categorical covariate columns");

  // ---- predict ---------------------------------------------------------------------
  auto* pred_cmd = app.add_subcommand("predict", "fit on train data and predict CHFs for test data");
  std::string pred_train, pred_test, pred_out, pred_method = "sbrsf";
  std::string pred_time_col = "time", pred_event_col = "event";
  std::vector<std::string> pred_categorical;
  int pred_trees = 200, pred_d0 = 3, pred_mtry = 0;
  double pred_threshold = 0.0;
  bool pred_dependent = false;
  std::int64_t pred_seed = 0;
  pred_cmd->add_option("--train", pred_train, "training CSV")->required();
  pred_cmd->add_option("--test", pred_test, "test CSV")->required();
  pred_cmd->add_option("--out", pred_out, "output directory")->required();
  pred_cmd->add_option("--method", pred_method, "rsf | sbrsf")->capture_default_str();
  pred_cmd->add_option("--n-trees", pred_trees, "")->capture_default_str();
  pred_cmd->add_option("--d0", pred_d0, "")->capture_default_str();
  pred_cmd->add_option("--mtry", pred_mtry, "")->capture_default_str();
  pred_cmd->add_option("--threshold", pred_threshold, "hard sampling threshold in [0,1)")
      ->capture_default_str();
  pred_cmd->add_flag("--dependent-censoring", pred_dependent,
                     "combine similarity weights with IPCW");
  pred_cmd->add_option("--seed", pred_seed, "")->capture_default_str();
  pred_cmd->add_option("--time-column", pred_time_col, "")->capture_default_str();
  pred_cmd->add_option("--event-column", pred_event_col, "")->capture_default_str();
  pred_cmd->add_option("--categorical", pred_categorical, "");

  // ---- evaluate ----------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "time-varying AUC of stored predictions");
  std::string eval_preds, eval_test, eval_grid = "1:20:1", eval_out;
  std::string eval_time_col = "time", eval_event_col = "event";
  std::int64_t eval_seed = 0;
  eval_cmd->add_option("--seed", eval_seed, "recorded in the manifest; evaluation is exact");
  eval_cmd->add_option("--predictions", eval_preds, "predictions CSV")->required();
  eval_cmd->add_option("--test", eval_test, "test CSV with outcomes")->required();
  eval_cmd->add_option("--grid", eval_grid, "start:stop:step")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "output directory")->required();
  eval_cmd->add_option("--time-column", eval_time_col, "")->capture_default_str();
  eval_cmd->add_option("--event-column", eval_event_col, "")->capture_default_str();

  // ---- compare -----------------------------------------------------------------------
  auto* cmp_cmd = app.add_subcommand("compare", "difference table of two AUC curves");
  std::string cmp_a, cmp_b, cmp_out;
  std::int64_t cmp_seed = 0;
  cmp_cmd->add_option("--seed", cmp_seed, "recorded in the manifest; comparison is exact");
  cmp_cmd->add_option("--a", cmp_a, "AUC CSV, method A")->required();
  cmp_cmd->add_option("--b", cmp_b, "AUC CSV, method B")->required();
  cmp_cmd->add_option("--out", cmp_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  try {
    if (*sim_cmd) {
      SimConfig cfg = load_sim_config(sim_config_path, sim_preset);
      if (sim_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sim_seed);
      if (sim_n >= 0) cfg.n = static_cast<int>(sim_n);
      return staged_command(
          "simulate", cfg.seed, workers, sim_out,
          [&](const fs::path& staging, RunManifest& manifest, std::string& stage) {
            stage = "simulate";
            cfg.validate();
            manifest.set_resolved_spec(sim_config_to_kv(cfg).serialize());
            const SimResult result = simulate(cfg);
            save_csv(result.data, (staging / "dataset.csv").string());
            write_oracle_csv(result, (staging / "oracle.csv").string());
            manifest.add_output(staging / "dataset.csv", "dataset.csv");
            manifest.add_output(staging / "oracle.csv", "oracle.csv");
            if (cfg.censoring == CensoringKind::Uniform)
              manifest.note("calibrated_cmax", result.cmax_used);
            std::size_t events = 0;
            for (const auto& r : result.data.records) events += r.event ? 1 : 0;
            manifest.note("n", result.data.n());
            manifest.note("event_fraction", double(events) / result.data.n());
          });
    }

    if (*run_cmd) {
      if (run_spec_path.empty() == run_manifest_path.empty())
        throw std::runtime_error("run: give exactly one of --config or --from-manifest");
      KvConfig kv;
      if (!run_spec_path.empty()) {
        kv = KvConfig::parse_file(run_spec_path);
      } else {
        std::ifstream in(run_manifest_path);
        if (!in) throw std::runtime_error("cannot open manifest: " + run_manifest_path);
        nlohmann::json j;
        in >> j;
        kv = KvConfig::parse_string(j.at("resolved_spec").get<std::string>());
      }
      ExperimentSpec spec = ExperimentSpec::parse(kv);
      if (run_seed >= 0) {
        spec.seed = static_cast<std::uint64_t>(run_seed);
        kv.set("run.seed", std::to_string(spec.seed));
        spec.spec_text = kv.serialize();
      }
      return run_experiment(spec, run_out, workers);
    }

    if (*fit_cmd) {
      return staged_command(
          "fit", static_cast<std::uint64_t>(fit_seed), workers, fit_out,
          [&](const fs::path& staging, RunManifest& manifest, std::string& stage) {
            stage = "data";
            std::vector<std::string> warnings;
            const Dataset train = load_csv(
                fit_train, schema_from_flags(fit_time_col, fit_event_col, fit_categorical),
                &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            stage = "fit";
            ForestConfig cfg;
            cfg.n_trees = fit_trees;
            cfg.tree.d0 = fit_d0;
            cfg.tree.mtry = fit_mtry;
            cfg.seed = static_cast<std::uint64_t>(fit_seed);
            const Forest forest = fit_forest(train, cfg, workers);
            std::ofstream trees((staging / "trees.txt").string());
            std::size_t leaves = 0;
            for (std::size_t b = 0; b < forest.trees.size(); ++b) {
              trees << "tree " << b << "\n" << forest.trees[b].dump();
              leaves += forest.trees[b].n_leaves();
            }
            trees.close();
            manifest.add_output(staging / "trees.txt", "trees.txt");
            manifest.note("n_trees", cfg.n_trees);
            manifest.note("mean_leaves_per_tree", double(leaves) / forest.trees.size());
            manifest.note("n_train", train.n());
          });
    }

    if (*pred_cmd) {
      return staged_command(
          "predict", static_cast<std::uint64_t>(pred_seed), workers, pred_out,
          [&](const fs::path& staging, RunManifest& manifest, std::string& stage) {
            stage = "data";
            std::vector<std::string> warnings;
            const CsvSchema schema =
                schema_from_flags(pred_time_col, pred_event_col, pred_categorical);
            const Dataset train = load_csv(pred_train, schema, &warnings);
            const Dataset test = load_csv(pred_test, schema, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

            SbrsfPrediction pred;
            if (pred_method == "rsf") {
              stage = "rsf";
              ForestConfig cfg;
              cfg.n_trees = pred_trees;
              cfg.tree.d0 = pred_d0;
              cfg.tree.mtry = pred_mtry;
              cfg.seed = static_cast<std::uint64_t>(pred_seed);
              pred = rsf_fit_predict(train, test, cfg, workers);
            } else if (pred_method == "sbrsf") {
              SbrsfConfig cfg;
              cfg.global.n_trees = pred_trees;
              cfg.per_case.n_trees = pred_trees;
              cfg.global.tree.d0 = pred_d0;
              cfg.per_case.tree.d0 = pred_d0;
              cfg.global.tree.mtry = pred_mtry;
              cfg.per_case.tree.mtry = pred_mtry;
              cfg.dependent_censoring = pred_dependent;
              if (pred_threshold > 0.0) cfg.threshold = pred_threshold;
              cfg.seed = static_cast<std::uint64_t>(pred_seed);
              if (cfg.dependent_censoring) {
                stage = "ipcw";
                const IpcwVector ipcw = ipcw_weights(train);
                write_ipcw_csv(ipcw, (staging / "ipcw.csv").string());
                manifest.add_output(staging / "ipcw.csv", "ipcw.csv");
              }
              stage = "sbrsf";
              pred = sbrsf_fit_predict(train, test, cfg, workers);
            } else {
              throw std::runtime_error("predict: unknown method '" + pred_method + "'");
            }
            stage = "write";
            write_predictions_csv(pred.per_test_chf, (staging / "predictions.csv").string());
            pred.weight_matrix.write_csv((staging / "weights.csv").string());
            manifest.add_output(staging / "predictions.csv", "predictions.csv");
            manifest.add_output(staging / "weights.csv", "weights.csv");
            manifest.note("method", pred_method);
            manifest.note("n_test", test.n());
          });
    }

    if (*eval_cmd) {
      return staged_command(
          "evaluate", static_cast<std::uint64_t>(eval_seed), workers, eval_out,
          [&](const fs::path& staging, RunManifest& manifest, std::string& stage) {
            stage = "data";
            std::vector<std::string> warnings;
            const Dataset test = load_csv(
                eval_test, schema_from_flags(eval_time_col, eval_event_col, {}), &warnings);
            const auto preds = read_predictions_csv(eval_preds);
            if (preds.empty())
              throw std::runtime_error("evaluate: no predictions in " + eval_preds);
            for (const auto& [id, curve] : preds)
              if (id >= test.n())
                throw std::runtime_error("evaluate: prediction test_id " + std::to_string(id) +
                                         " has no matching row in " + eval_test);
            stage = "evaluate";
            Dataset subset;
            subset.feature_names = test.feature_names;
            std::vector<ChfCurve> curves;
            for (const auto& [id, curve] : preds) {
              subset.records.push_back(test.records[id]);
              curves.push_back(curve);
            }
            const AucCurve auc = time_varying_auc(subset, curves, parse_grid(eval_grid));
            auc.write_csv((staging / "auc.csv").string());
            manifest.add_output(staging / "auc.csv", "auc.csv");
            manifest.note("grid", eval_grid);
            manifest.note("mean_auc", auc.mean_defined());
          });
    }

    if (*cmp_cmd) {
      return staged_command(
          "compare", static_cast<std::uint64_t>(cmp_seed), workers, cmp_out,
          [&](const fs::path& staging, RunManifest& manifest, std::string& stage) {
            stage = "compare";
            const AucCurve a = read_auc_csv(cmp_a);
            const AucCurve b = read_auc_csv(cmp_b);
            const AucComparison cmp = compare_auc(a, b);
            cmp.write_csv((staging / "compare.csv").string());
            manifest.add_output(staging / "compare.csv", "compare.csv");
            manifest.note("comparison", nlohmann::json{{"mean_diff", cmp.mean_diff},
                                                       {"win_fraction_a", cmp.win_fraction},
                                                       {"n_defined", cmp.n_defined}});
            std::cout << "mean diff (a - b): " << format_double(cmp.mean_diff) << "\n";
            std::cout << "fraction a > b:   " << format_double(cmp.win_fraction) << "\n";
          });
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
