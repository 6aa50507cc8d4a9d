#include "dreamcc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dreamcc/checkpoint.hpp"
#include "dreamcc/errors.hpp"
#include "dreamcc/plot.hpp"

namespace dreamcc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int64_t kLogEveryUpdates = 50;

DType dtype_from(const std::string& s) { return s == "f64" ? DType::kF64 : DType::kF32; }

WorldModelConfig wm_config_from(const TrainConfig& cfg, const ActionSpace& space) {
  WorldModelConfig w;
  w.image_size = static_cast<int>(cfg.image_size);
  w.image_channels = 1;
  w.deter_units = static_cast<int>(cfg.deter_units);
  w.latent_vars = static_cast<int>(cfg.latent_vars);
  w.latent_classes = static_cast<int>(cfg.latent_classes);
  w.cnn_depth = static_cast<int>(cfg.cnn_depth);
  w.mlp_layers = static_cast<int>(cfg.mlp_layers);
  w.mlp_units = static_cast<int>(cfg.mlp_units);
  w.kl_scale = cfg.kl_scale;
  w.kl_alpha = cfg.kl_alpha;
  w.free_bits = cfg.free_bits;
  w.layer_norm = cfg.layer_norm;
  w.gaussian_latents = cfg.gaussian_latents;
  w.stop_image_gradients = cfg.stop_image_gradients;
  w.stop_reward_gradients = cfg.stop_reward_gradients;
  w.action_dim = space.dim;
  w.dtype = dtype_from(cfg.dtype);
  return w;
}

BehaviorConfig behavior_config_from(const TrainConfig& cfg, const ActionSpace& space) {
  BehaviorConfig b;
  b.horizon = static_cast<int>(cfg.horizon);
  b.lambda = cfg.lambda;
  b.discount = cfg.discount;
  b.rho = cfg.rho;
  b.eta = cfg.eta;
  b.slow_critic_interval = static_cast<int>(cfg.slow_critic_interval);
  b.mlp_layers = static_cast<int>(cfg.mlp_layers);
  b.mlp_units = static_cast<int>(cfg.mlp_units);
  b.discrete_actions = space.discrete;
  b.action_dim = space.dim;
  b.dtype = dtype_from(cfg.dtype);
  return b;
}

EnvConfig env_config_from(const TrainConfig& cfg) {
  EnvConfig e;
  e.action_repeat = cfg.action_repeat;
  e.time_limit_steps = cfg.time_limit_steps;
  e.image_size = cfg.image_size;
  e.sticky_actions = cfg.sticky_actions;
  e.seed = cfg.seed;
  return e;
}

OptimizerConfig opt_config(double lr, const TrainConfig& cfg) {
  OptimizerConfig o;
  o.learning_rate = lr;
  o.epsilon = cfg.adam_eps;
  o.weight_decay = cfg.weight_decay;
  o.clip_norm = cfg.clip;
  return o;
}

Tensor obs_to_tensor(const EnvStep& s, DType dt) {
  const auto& shape = s.image.shape();
  Tensor out = Tensor::zeros({1, shape[0], shape[1], shape[2]}, dt);
  for (int64_t i = 0; i < s.image.size(); ++i) out.set_at(i, s.image.at(i));
  return out;
}

std::string state_path(const std::string& dir) { return (fs::path(dir) / "state.json").string(); }
std::string model_path(const std::string& dir) { return (fs::path(dir) / "model.ckpt").string(); }
std::string config_path(const std::string& dir) { return (fs::path(dir) / "config.cfg").string(); }

}  // namespace

std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("DREAMCC_OUTPUT_ROOT");
  if (root && *root && fs::path(dir).is_relative()) return (fs::path(root) / dir).string();
  return dir;
}

std::vector<Parameter*> Agent::all_parameters() const {
  std::vector<Parameter*> out = wm->parameters();
  for (Parameter* p : ac->actor_parameters()) out.push_back(p);
  for (Parameter* p : ac->critic_parameters()) out.push_back(p);
  for (Parameter* p : ac->slow_critic_parameters()) out.push_back(p);
  return out;
}

Agent build_agent(const TrainConfig& cfg, const ActionSpace& space) {
  Agent agent;
  agent.wm = std::make_unique<WorldModel>(wm_config_from(cfg, space), cfg.seed);
  agent.ac = std::make_unique<ActorCritic>(behavior_config_from(cfg, space),
                                           agent.wm->config().feature_dim(), cfg.seed);
  return agent;
}

EvalReport run_eval(Env& env, const WorldModel& wm, const ActorCritic& ac, int64_t episodes,
                    uint64_t eval_seed, const std::string& video_dir) {
  EvalReport report;
  if (!video_dir.empty()) fs::create_directories(video_dir);
  const DType dt = wm.config().dtype;
  const ActionSpace space = env.action_space();
  for (int64_t ep = 0; ep < episodes; ++ep) {
    Rng rng = make_stream(eval_seed, "eval_episode_" + std::to_string(ep));
    EnvStep step = env.reset(derive_seed(eval_seed, "eval_env_" + std::to_string(ep)));
    ModelState state = wm.initial_state(1);
    Tensor action = Tensor::zeros({1, space.dim}, dt);
    double ret = 0.0;
    int64_t frame = 0;
    auto dump = [&](const EnvStep& s) {
      if (video_dir.empty()) return;
      char name[64];
      std::snprintf(name, sizeof(name), "ep%03lld_f%05lld.png", static_cast<long long>(ep),
                    static_cast<long long>(frame));
      write_png_gray((fs::path(video_dir) / name).string(), env.image_size(), env.image_size(),
                     s.image_u8);
      ++frame;
    };
    dump(step);
    while (true) {
      Tensor embed = wm.encode(obs_to_tensor(step, dt), /*frozen=*/true);
      auto obs = wm.observe_step(state, action, embed, rng, /*frozen=*/true);
      state = detach_state(obs.post);
      action = ac.act(wm.features(state), rng, /*sample=*/false);
      std::vector<float> av(space.dim);
      for (int64_t i = 0; i < space.dim; ++i) av[i] = static_cast<float>(action.at(i));
      step = env.step(av);
      ret += step.reward;
      dump(step);
      if (step.terminal || step.truncated) break;
    }
    report.returns.push_back(ret);
  }
  if (!report.returns.empty()) {
    double sum = 0.0, success = 0.0;
    for (double r : report.returns) {
      sum += r;
      if (r > 0.5) success += 1.0;
    }
    report.mean = sum / report.returns.size();
    report.success_rate = success / report.returns.size();
    double var = 0.0;
    for (double r : report.returns) var += (r - report.mean) * (r - report.mean);
    report.stddev = std::sqrt(var / report.returns.size());
  }
  return report;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  validate_config(cfg_);
  run_dir_ = resolve_output_dir(cfg_.output_dir);
  fs::create_directories(run_dir_);
  env_ = make_env(cfg_.task, env_config_from(cfg_));
  ReplayConfig rc;
  rc.capacity_steps = cfg_.dataset_capacity;
  store_ = std::make_unique<EpisodeStore>(rc);
  store_->set_geometry(1, cfg_.image_size, cfg_.image_size, env_->action_space().dim);
  agent_ = build_agent(cfg_, env_->action_space());
  wm_opt_ = opt_config(cfg_.wm_lr, cfg_);
  actor_opt_ = opt_config(cfg_.actor_lr, cfg_);
  critic_opt_ = opt_config(cfg_.critic_lr, cfg_);
  collect_rng_ = make_stream(cfg_.seed, "collect");
  prefill_rng_ = make_stream(cfg_.seed, "prefill");
  model_rng_ = make_stream(cfg_.seed, "model");
  sample_rng_ = make_stream(cfg_.seed, "replay");
  imagine_rng_ = make_stream(cfg_.seed, "imagine");
  next_eval_at_ = cfg_.prefill_steps + cfg_.eval_every;
  next_ckpt_at_ = cfg_.prefill_steps + cfg_.checkpoint_every;
  metrics_out_.open((fs::path(run_dir_) / "metrics.jsonl").string(), std::ios::app);
  if (!metrics_out_) throw UsageError("cannot open metrics.jsonl under " + run_dir_);
}

std::unique_ptr<Trainer> Trainer::resume(const std::string& run_dir) {
  const std::string dir = resolve_output_dir(run_dir);
  TrainConfig cfg = parse_config_file(config_path(dir));
  cfg.output_dir = dir;  // keep writing into the same place regardless of env root
  auto trainer = std::make_unique<Trainer>(cfg);
  trainer->load_state(dir);
  return trainer;
}

void Trainer::load_state(const std::string& run_dir) {
  std::ifstream is(state_path(run_dir));
  if (!is) throw LoadError("missing state.json in " + run_dir);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw LoadError(std::string("bad state.json: ") + e.what());
  }
  env_steps_ = j.at("env_steps").get<int64_t>();
  updates_ = j.at("updates").get<int64_t>();
  episode_index_ = j.at("episode_index").get<int64_t>();
  eval_index_ = j.at("eval_index").get<int64_t>();
  next_eval_at_ = j.at("next_eval_at").get<int64_t>();
  next_ckpt_at_ = j.at("next_ckpt_at").get<int64_t>();
  last_episode_return_ = j.at("last_episode_return").get<double>();
  collect_rng_ = rng_from_string(j.at("rng_collect").get<std::string>());
  prefill_rng_ = rng_from_string(j.at("rng_prefill").get<std::string>());
  model_rng_ = rng_from_string(j.at("rng_model").get<std::string>());
  sample_rng_ = rng_from_string(j.at("rng_replay").get<std::string>());
  imagine_rng_ = rng_from_string(j.at("rng_imagine").get<std::string>());
  auto params = agent_.all_parameters();
  load_params(model_path(run_dir), params);
  const std::string replay_dir = (fs::path(run_dir) / "replay").string();
  if (fs::exists(replay_dir)) store_->load_episodes(replay_dir);
  episode_open_ = false;
}

void Trainer::save_checkpoint() {
  flush_train_metrics();
  auto params = agent_.all_parameters();
  save_params(model_path(run_dir_), params);
  std::ofstream cfg_out(config_path(run_dir_), std::ios::trunc);
  cfg_out << serialize_config(cfg_);
  json j;
  j["env_steps"] = env_steps_;
  j["updates"] = updates_;
  j["episode_index"] = episode_index_;
  j["eval_index"] = eval_index_;
  j["next_eval_at"] = next_eval_at_;
  j["next_ckpt_at"] = next_ckpt_at_;
  j["last_episode_return"] = last_episode_return_;
  j["rng_collect"] = rng_to_string(collect_rng_);
  j["rng_prefill"] = rng_to_string(prefill_rng_);
  j["rng_model"] = rng_to_string(model_rng_);
  j["rng_replay"] = rng_to_string(sample_rng_);
  j["rng_imagine"] = rng_to_string(imagine_rng_);
  std::ofstream st(state_path(run_dir_), std::ios::trunc);
  st << j.dump(2) << "\n";
  if (!st) throw UsageError("cannot write state.json under " + run_dir_);
  store_->save_episodes((fs::path(run_dir_) / "replay").string());
}

std::vector<float> Trainer::random_action() {
  const ActionSpace space = env_->action_space();
  std::vector<float> a(space.dim, 0.0f);
  if (space.discrete) {
    std::uniform_int_distribution<int> pick(0, space.dim - 1);
    a[pick(prefill_rng_)] = 1.0f;
  } else {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto& v : a) v = u(prefill_rng_);
  }
  return a;
}

void Trainer::advance_model(const Tensor& image, const Tensor& action) {
  Tensor embed = agent_.wm->encode(image, /*frozen=*/true);
  auto obs = agent_.wm->observe_step(policy_state_, action, embed, collect_rng_, /*frozen=*/true);
  policy_state_ = detach_state(obs.post);
}

void Trainer::start_episode() {
  const uint64_t ep_seed = derive_seed(cfg_.seed, "episode_" + std::to_string(episode_index_));
  ++episode_index_;
  EnvStep step = env_->reset(ep_seed);
  const ActionSpace space = env_->action_space();
  Transition t;
  t.image = step.image_u8;
  t.action.assign(space.dim, 0.0f);
  store_->append(t, /*episode_start=*/true);
  episode_open_ = true;
  episode_return_ = 0.0;
  episode_len_ = 0;
  random_episode_ = env_steps_ < cfg_.prefill_steps;
  if (!random_episode_) {
    policy_state_ = agent_.wm->initial_state(1);
    prev_action_ = Tensor::zeros({1, space.dim}, dtype_from(cfg_.dtype));
    advance_model(obs_to_tensor(step, dtype_from(cfg_.dtype)), prev_action_);
  }
}

void Trainer::collect_step() {
  if (!episode_open_) start_episode();
  const ActionSpace space = env_->action_space();
  std::vector<float> av;
  if (random_episode_) {
    av = random_action();
  } else {
    Tensor a = agent_.ac->act(agent_.wm->features(policy_state_), collect_rng_, /*sample=*/true);
    av.resize(space.dim);
    for (int64_t i = 0; i < space.dim; ++i) av[i] = static_cast<float>(a.at(i));
  }
  EnvStep step = env_->step(av);
  env_steps_ += cfg_.action_repeat;
  episode_return_ += step.reward;
  ++episode_len_;
  Transition t;
  t.image = step.image_u8;
  t.action = av;
  t.reward = step.reward;
  t.terminal = step.terminal;
  t.truncated = step.truncated;
  store_->append(t, /*episode_start=*/false);
  if (step.terminal || step.truncated) {
    episode_open_ = false;
    last_episode_return_ = episode_return_;
  } else if (!random_episode_) {
    Tensor at = Tensor::zeros({1, space.dim}, dtype_from(cfg_.dtype));
    for (int64_t i = 0; i < space.dim; ++i) at.set_at(i, av[i]);
    advance_model(obs_to_tensor(step, dtype_from(cfg_.dtype)), at);
  }
}

std::map<std::string, double> Trainer::do_update() {
  SequenceBatch batch =
      store_->sample(cfg_.batch_size, cfg_.sequence_length, sample_rng_, dtype_from(cfg_.dtype));
  WorldModelLoss wm_out = agent_.wm->loss(batch, model_rng_);
  backward(wm_out.total);
  auto wm_params = agent_.wm->parameters();
  const double wm_norm = optimizer_update(wm_params, wm_opt_);

  ImaginedTrajectory traj = agent_.ac->imagine_rollout(*agent_.wm, wm_out.posteriors,
                                                       static_cast<int>(cfg_.horizon),
                                                       imagine_rng_);
  Tensor closs = agent_.ac->critic_loss(traj);
  Tensor aloss = agent_.ac->actor_loss(traj);
  check_finite(closs, "critic loss");
  check_finite(aloss, "actor loss");
  backward(closs);
  backward(aloss);
  auto critic_params = agent_.ac->critic_parameters();
  auto actor_params = agent_.ac->actor_parameters();
  const double critic_norm = optimizer_update(critic_params, critic_opt_);
  const double actor_norm = optimizer_update(actor_params, actor_opt_);
  ++updates_;
  agent_.ac->update_slow_critic(updates_);

  std::map<std::string, double> m = wm_out.metrics;
  m["critic_loss"] = closs.item();
  m["actor_loss"] = aloss.item();
  m["grad_norm_wm"] = wm_norm;
  m["grad_norm_critic"] = critic_norm;
  m["grad_norm_actor"] = actor_norm;
  for (const auto& [k, v] : agent_.ac->rollout_metrics(traj)) m[k] = v;
  return m;
}

void Trainer::accumulate(const std::map<std::string, double>& m) {
  for (const auto& [k, v] : m) metric_sums_[k] += v;
  ++metric_count_;
}

void Trainer::flush_train_metrics() {
  if (metric_count_ == 0) return;
  std::map<std::string, double> rec;
  for (const auto& [k, v] : metric_sums_) rec[k] = v / static_cast<double>(metric_count_);
  rec["env_steps"] = static_cast<double>(env_steps_);
  rec["updates"] = static_cast<double>(updates_);
  rec["episode_return"] = last_episode_return_;
  rec["replay_steps"] = static_cast<double>(store_->steps());
  log_line(rec);
  metric_sums_.clear();
  metric_count_ = 0;
}

void Trainer::log_line(const std::map<std::string, double>& rec) {
  json j;
  for (const auto& [k, v] : rec) j[k] = v;
  metrics_out_ << j.dump() << "\n";
  metrics_out_.flush();
  if (!metrics_out_) throw UsageError("metrics.jsonl write failed (disk full?)");
}

void Trainer::maybe_update() {
  if (env_steps_ < cfg_.prefill_steps) return;
  const int64_t target = (env_steps_ - cfg_.prefill_steps) / cfg_.env_steps_per_update;
  while (updates_ < target) {
    accumulate(do_update());
    if (updates_ % kLogEveryUpdates == 0) flush_train_metrics();
  }
}

EvalReport Trainer::evaluate(int64_t episodes, uint64_t eval_seed, const std::string& video_dir) {
  auto env = make_env(cfg_.task, env_config_from(cfg_));
  return run_eval(*env, *agent_.wm, *agent_.ac, episodes, eval_seed, video_dir);
}

TrainResult Trainer::run() {
  TrainResult result;
  result.run_dir = run_dir_;
  double last_eval = 0.0;
  bool stopped = false;
  try {
    while (env_steps_ < cfg_.total_env_steps && !stopped) {
      collect_step();
      maybe_update();
      if (env_steps_ >= next_eval_at_ && cfg_.eval_episodes > 0) {
        next_eval_at_ += cfg_.eval_every;
        const uint64_t eval_seed = derive_seed(cfg_.seed, "eval_" + std::to_string(eval_index_));
        ++eval_index_;
        EvalReport report = evaluate(cfg_.eval_episodes, eval_seed);
        last_eval = report.mean;
        std::map<std::string, double> rec;
        rec["env_steps"] = static_cast<double>(env_steps_);
        rec["updates"] = static_cast<double>(updates_);
        rec["eval_return"] = report.mean;
        rec["eval_return_std"] = report.stddev;
        rec["eval_success"] = report.success_rate;
        rec["eval_episodes"] = static_cast<double>(report.returns.size());
        log_line(rec);
        std::cout << "env_steps " << env_steps_ << "  updates " << updates_ << "  eval_return "
                  << report.mean << "\n";
        if (cfg_.early_stop && report.mean >= cfg_.early_stop_return) stopped = true;
      }
      if (!episode_open_ && env_steps_ >= next_ckpt_at_) {
        next_ckpt_at_ += cfg_.checkpoint_every;
        save_checkpoint();
      }
    }
  } catch (const NumericError& e) {
    flush_train_metrics();
    std::ofstream abort_file((fs::path(run_dir_) / "abort.txt").string(), std::ios::trunc);
    abort_file << "aborted at env_steps=" << env_steps_ << " updates=" << updates_ << "\n"
               << e.what() << "\n";
    std::cerr << "training aborted: " << e.what() << "\n";
    throw;
  }
  flush_train_metrics();
  save_checkpoint();
  result.env_steps = env_steps_;
  result.updates = updates_;
  result.episodes = episode_index_;
  result.final_eval_return = last_eval;
  result.early_stopped = stopped;
  return result;
}

EvalReport evaluate_checkpoint(const std::string& run_dir, int64_t episodes, uint64_t eval_seed,
                               const std::string& video_dir) {
  const std::string dir = resolve_output_dir(run_dir);
  TrainConfig cfg = parse_config_file(config_path(dir));
  auto env = make_env(cfg.task, env_config_from(cfg));
  Agent agent = build_agent(cfg, env->action_space());
  auto params = agent.all_parameters();
  load_params(model_path(dir), params);
  return run_eval(*env, *agent.wm, *agent.ac, episodes, eval_seed, video_dir);
}

}  // namespace dreamcc
