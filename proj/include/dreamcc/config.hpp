#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dreamcc {

// Flat key=value training configuration. Defaults are the full-scale ones;
// configs/*.cfg hold the desk-scale setups.
struct TrainConfig {
  std::string task = "catch";
  std::string output_dir = "runs/default";
  uint64_t seed = 0;

  int64_t total_env_steps = 400'000;
  int64_t prefill_steps = 5'000;
  int64_t eval_every = 10'000;
  int64_t eval_episodes = 20;
  int64_t checkpoint_every = 50'000;
  double early_stop_return = 0.0;  // stop once mean eval return reaches this
  bool early_stop = false;

  // environment
  int action_repeat = 4;
  int64_t time_limit_steps = 1000;
  int64_t image_size = 64;
  bool sticky_actions = false;

  // replay
  int64_t dataset_capacity = 2'000'000;
  int64_t batch_size = 50;
  int64_t sequence_length = 50;

  // world model
  int64_t deter_units = 600;
  int64_t latent_vars = 32;
  int64_t latent_classes = 32;
  int64_t cnn_depth = 48;
  int64_t mlp_layers = 4;
  int64_t mlp_units = 400;
  double kl_scale = 0.1;
  double kl_alpha = 0.8;
  double free_bits = 0.0;
  bool layer_norm = false;
  bool gaussian_latents = false;
  bool stop_image_gradients = false;
  bool stop_reward_gradients = false;
  double wm_lr = 2e-4;

  // behavior
  int64_t horizon = 15;
  double lambda = 0.95;
  double discount = 0.999;
  double rho = 1.0;
  double eta = 1e-3;
  double actor_lr = 4e-5;
  double critic_lr = 1e-4;
  int64_t slow_critic_interval = 100;

  // optimisation
  double clip = 100.0;
  double adam_eps = 1e-5;
  double weight_decay = 1e-6;
  int64_t env_steps_per_update = 4;

  std::string dtype = "f32";  // f32 | f64
};

// All recognised keys in declaration order.
std::vector<std::string> config_keys();

// key=value lines; '#' starts a comment; blank lines ignored.
// Unknown keys or malformed values raise ParseError with the line number.
TrainConfig parse_config_text(const std::string& text, const TrainConfig& base = {});
TrainConfig parse_config_file(const std::string& path, const TrainConfig& base = {});

// "key=value" as given on the command line.
void apply_override(TrainConfig& cfg, const std::string& assignment);

// Canonical round-trippable key=value dump.
std::string serialize_config(const TrainConfig& cfg);

// Value sanity (positive sizes, rho in [0,1], known task/dtype, ...).
void validate_config(const TrainConfig& cfg);

}  // namespace dreamcc
