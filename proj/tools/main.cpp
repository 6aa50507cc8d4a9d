#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dreamcc/config.hpp"
#include "dreamcc/errors.hpp"
#include "dreamcc/evalscore.hpp"
#include "dreamcc/harness.hpp"
#include "dreamcc/plot.hpp"

namespace fs = std::filesystem;
using namespace dreamcc;

namespace {

int cmd_train(const std::string& config_file, const std::vector<std::string>& overrides,
              const std::string& resume_dir) {
  std::unique_ptr<Trainer> trainer;
  if (!resume_dir.empty()) {
    if (!config_file.empty() || !overrides.empty())
      throw UsageError("--resume uses the saved config; drop --config/--override");
    trainer = Trainer::resume(resume_dir);
  } else {
    if (config_file.empty()) throw UsageError("train needs --config <file> or --resume <dir>");
    TrainConfig cfg = parse_config_file(config_file);
    for (const auto& o : overrides) apply_override(cfg, o);
    trainer = std::make_unique<Trainer>(cfg);
  }
  TrainResult r = trainer->run();
  std::cout << "done: env_steps=" << r.env_steps << " updates=" << r.updates
            << " episodes=" << r.episodes << " final_eval_return=" << r.final_eval_return
            << (r.early_stopped ? " (early stop)" : "") << "\nrun_dir: " << r.run_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, int64_t episodes, uint64_t seed,
             const std::string& video_dir) {
  EvalReport r = evaluate_checkpoint(checkpoint, episodes, seed, video_dir);
  std::cout << "episodes: " << r.returns.size() << "\n";
  for (size_t i = 0; i < r.returns.size(); ++i)
    std::cout << "episode " << i << " return " << r.returns[i] << "\n";
  if (!r.returns.empty())
    std::cout << "mean " << r.mean << "  std " << r.stddev << "  success_rate "
              << r.success_rate << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& metrics_files, const std::string& keys_csv,
             const std::string& out_dir, double bin_width, const std::string& step_key) {
  std::vector<std::string> keys;
  std::stringstream ss(keys_csv);
  std::string key;
  while (std::getline(ss, key, ',')) if (!key.empty()) keys.push_back(key);
  if (keys.empty()) throw UsageError("plot needs --keys a,b,...");
  fs::create_directories(out_dir);
  std::vector<std::vector<MetricsRecord>> runs;
  for (const auto& f : metrics_files) runs.push_back(read_metrics_jsonl(f));
  for (const auto& k : keys) {
    std::vector<Series> series;
    for (size_t i = 0; i < runs.size(); ++i) {
      Series s = extract_series(runs[i], k, step_key);
      s.label = metrics_files.size() > 1 ? fs::path(metrics_files[i]).stem().string() : k;
      series.push_back(bin_series(s, bin_width));
    }
    const std::string png = (fs::path(out_dir) / (k + ".png")).string();
    const std::string csv = (fs::path(out_dir) / (k + ".csv")).string();
    render_line_plot(png, k, series);
    write_series_csv(csv, series);
    std::cout << "wrote " << png << " and " << csv << "\n";
  }
  return 0;
}

int cmd_score(const std::string& baselines_csv, const std::string& scores_dir,
              const std::string& protocol) {
  ScoreTable table;
  table.baselines = load_baselines(baselines_csv);
  table.scores = load_score_dir(scores_dir);
  std::vector<std::string> protocols;
  if (protocol == "all")
    protocols = {"gamer_median", "gamer_mean", "record_mean", "clipped_record_mean"};
  else
    protocols = {protocol};
  for (const auto& p : protocols)
    std::cout << p << " " << aggregate(table, parse_protocol(p)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dreamcc: discrete world-model RL trainer"};
  app.require_subcommand(1);

  std::string config_file, resume_dir;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "train an agent");
  train->add_option("--config", config_file, "key=value config file");
  train->add_option("--override", overrides, "config override key=value")->allow_extra_args(false);
  train->add_option("--resume", resume_dir, "continue a run from its directory");

  std::string checkpoint, video_dir;
  int64_t episodes = 10;
  uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with the mode policy");
  eval->add_option("--checkpoint", checkpoint, "run directory")->required();
  eval->add_option("--episodes", episodes, "episode count")->required();
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--video-dir", video_dir, "dump frames as numbered PNGs");

  std::vector<std::string> metrics_files;
  std::string keys_csv, out_dir = "plots", step_key = "env_steps";
  double bin_width = 0.0;
  auto* plot = app.add_subcommand("plot", "plot metrics.jsonl curves");
  plot->add_option("--metrics", metrics_files, "metrics.jsonl file(s)")->required();
  plot->add_option("--keys", keys_csv, "comma-separated metric keys")->required();
  plot->add_option("--out", out_dir, "output directory");
  plot->add_option("--bin", bin_width, "step bucket width for mean binning");
  plot->add_option("--step-key", step_key, "x-axis key");

  std::string baselines_csv, scores_dir, protocol = "all";
  auto* score = app.add_subcommand("score", "aggregate per-seed game scores");
  score->add_option("--baselines", baselines_csv, "baseline CSV")->required();
  score->add_option("--scores", scores_dir, "directory of per-seed {game: score} JSON")
      ->required();
  score->add_option("--protocol", protocol,
                    "gamer_median|gamer_mean|record_mean|clipped_record_mean|all");

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return cmd_train(config_file, overrides, resume_dir);
    if (eval->parsed()) return cmd_eval(checkpoint, episodes, eval_seed, video_dir);
    if (plot->parsed()) return cmd_plot(metrics_files, keys_csv, out_dir, bin_width, step_key);
    if (score->parsed()) return cmd_score(baselines_csv, scores_dir, protocol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
