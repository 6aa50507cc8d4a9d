#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dreamcc/behavior.hpp"
#include "dreamcc/config.hpp"
#include "dreamcc/envs.hpp"
#include "dreamcc/replay.hpp"
#include "dreamcc/world_model.hpp"

namespace dreamcc {

struct EvalReport {
  std::vector<double> returns;
  double mean = 0.0;
  double stddev = 0.0;
  double success_rate = 0.0;  // fraction of episodes with return > 0.5
};

struct TrainResult {
  int64_t env_steps = 0;
  int64_t updates = 0;
  int64_t episodes = 0;
  double final_eval_return = 0.0;
  bool early_stopped = false;
  std::string run_dir;
};

// Prefixes relative paths with $DREAMCC_OUTPUT_ROOT when it is set.
std::string resolve_output_dir(const std::string& dir);

// World model + behavior built from one TrainConfig.
struct Agent {
  std::unique_ptr<WorldModel> wm;
  std::unique_ptr<ActorCritic> ac;
  std::vector<Parameter*> all_parameters() const;
};

Agent build_agent(const TrainConfig& cfg, const ActionSpace& space);

// Mode-policy rollouts; episode seeds derive from eval_seed. When video_dir is
// set, every frame is dumped as a numbered PNG.
EvalReport run_eval(Env& env, const WorldModel& wm, const ActorCritic& ac, int64_t episodes,
                    uint64_t eval_seed, const std::string& video_dir = "");

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Rebuilds a trainer from <run_dir>/config.cfg + checkpoint + state.json.
  static std::unique_ptr<Trainer> resume(const std::string& run_dir);

  TrainResult run();

  EvalReport evaluate(int64_t episodes, uint64_t eval_seed, const std::string& video_dir = "");
  void save_checkpoint();

  WorldModel& world_model() { return *agent_.wm; }
  ActorCritic& actor_critic() { return *agent_.ac; }
  EpisodeStore& replay() { return *store_; }
  const TrainConfig& config() const { return cfg_; }
  const std::string& run_dir() const { return run_dir_; }
  int64_t env_steps() const { return env_steps_; }
  int64_t updates() const { return updates_; }

 private:
  void load_state(const std::string& run_dir);
  void start_episode();
  void collect_step();                    // one outer env step
  void maybe_update();
  std::map<std::string, double> do_update();
  void accumulate(const std::map<std::string, double>& m);
  void flush_train_metrics();
  void log_line(const std::map<std::string, double>& rec);
  std::vector<float> random_action();
  void advance_model(const Tensor& image, const Tensor& action);

  TrainConfig cfg_;
  std::string run_dir_;
  std::unique_ptr<Env> env_;
  std::unique_ptr<EpisodeStore> store_;
  Agent agent_;
  OptimizerConfig wm_opt_, actor_opt_, critic_opt_;

  Rng collect_rng_, prefill_rng_, model_rng_, sample_rng_, imagine_rng_;

  int64_t env_steps_ = 0;
  int64_t updates_ = 0;
  int64_t episode_index_ = 0;   // collection episodes started
  int64_t eval_index_ = 0;
  int64_t next_eval_at_ = 0;
  int64_t next_ckpt_at_ = 0;
  bool episode_open_ = false;
  bool random_episode_ = true;  // current episode collected with the uniform policy
  double episode_return_ = 0.0;
  int64_t episode_len_ = 0;

  ModelState policy_state_;
  Tensor prev_action_;  // [1, A]

  std::map<std::string, double> metric_sums_;
  int64_t metric_count_ = 0;
  double last_episode_return_ = 0.0;
  std::ofstream metrics_out_;
};

// Loads <run_dir>/config.cfg + model.ckpt and evaluates the mode policy.
EvalReport evaluate_checkpoint(const std::string& run_dir, int64_t episodes, uint64_t eval_seed,
                               const std::string& video_dir = "");

}  // namespace dreamcc
