#include "dreamcc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace {

struct Field {
  std::string name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& v) {
  size_t used = 0;
  // scientific notation like 2e6 is accepted for counts
  const double d = std::stod(v, &used);
  if (used != v.size() || d != std::floor(d) || std::abs(d) > 9e18)
    throw ParseError("expected an integer, got '" + v + "'");
  return static_cast<int64_t>(d);
}

double parse_real(const std::string& v) {
  size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw ParseError("expected a number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("expected true/false, got '" + v + "'");
}

std::string real_str(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

template <typename T>
Field int_field(const std::string& name, T TrainConfig::* member) {
  return {name,
          [member](TrainConfig& c, const std::string& v) { c.*member = static_cast<T>(parse_int(v)); },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const std::string& name, double TrainConfig::* member) {
  return {name, [member](TrainConfig& c, const std::string& v) { c.*member = parse_real(v); },
          [member](const TrainConfig& c) { return real_str(c.*member); }};
}

Field bool_field(const std::string& name, bool TrainConfig::* member) {
  return {name, [member](TrainConfig& c, const std::string& v) { c.*member = parse_bool(v); },
          [member](const TrainConfig& c) { return c.*member ? std::string("true") : "false"; }};
}

Field str_field(const std::string& name, std::string TrainConfig::* member) {
  return {name, [member](TrainConfig& c, const std::string& v) { c.*member = v; },
          [member](const TrainConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      str_field("task", &TrainConfig::task),
      str_field("output_dir", &TrainConfig::output_dir),
      int_field("seed", &TrainConfig::seed),
      int_field("total_env_steps", &TrainConfig::total_env_steps),
      int_field("prefill_steps", &TrainConfig::prefill_steps),
      int_field("eval_every", &TrainConfig::eval_every),
      int_field("eval_episodes", &TrainConfig::eval_episodes),
      int_field("checkpoint_every", &TrainConfig::checkpoint_every),
      real_field("early_stop_return", &TrainConfig::early_stop_return),
      bool_field("early_stop", &TrainConfig::early_stop),
      int_field("action_repeat", &TrainConfig::action_repeat),
      int_field("time_limit_steps", &TrainConfig::time_limit_steps),
      int_field("image_size", &TrainConfig::image_size),
      bool_field("sticky_actions", &TrainConfig::sticky_actions),
      int_field("dataset_capacity", &TrainConfig::dataset_capacity),
      int_field("batch_size", &TrainConfig::batch_size),
      int_field("sequence_length", &TrainConfig::sequence_length),
      int_field("deter_units", &TrainConfig::deter_units),
      int_field("latent_vars", &TrainConfig::latent_vars),
      int_field("latent_classes", &TrainConfig::latent_classes),
      int_field("cnn_depth", &TrainConfig::cnn_depth),
      int_field("mlp_layers", &TrainConfig::mlp_layers),
      int_field("mlp_units", &TrainConfig::mlp_units),
      real_field("kl_scale", &TrainConfig::kl_scale),
      real_field("kl_alpha", &TrainConfig::kl_alpha),
      real_field("free_bits", &TrainConfig::free_bits),
      bool_field("layer_norm", &TrainConfig::layer_norm),
      bool_field("gaussian_latents", &TrainConfig::gaussian_latents),
      bool_field("stop_image_gradients", &TrainConfig::stop_image_gradients),
      bool_field("stop_reward_gradients", &TrainConfig::stop_reward_gradients),
      real_field("wm_lr", &TrainConfig::wm_lr),
      int_field("horizon", &TrainConfig::horizon),
      real_field("lambda", &TrainConfig::lambda),
      real_field("discount", &TrainConfig::discount),
      real_field("rho", &TrainConfig::rho),
      real_field("eta", &TrainConfig::eta),
      real_field("actor_lr", &TrainConfig::actor_lr),
      real_field("critic_lr", &TrainConfig::critic_lr),
      int_field("slow_critic_interval", &TrainConfig::slow_critic_interval),
      real_field("clip", &TrainConfig::clip),
      real_field("adam_eps", &TrainConfig::adam_eps),
      real_field("weight_decay", &TrainConfig::weight_decay),
      int_field("env_steps_per_update", &TrainConfig::env_steps_per_update),
      str_field("dtype", &TrainConfig::dtype),
  };
  return f;
}

const Field* find_field(const std::string& name) {
  for (const auto& f : fields())
    if (f.name == name) return &f;
  return nullptr;
}

void assign(TrainConfig& cfg, const std::string& key, const std::string& value, int line) {
  const Field* f = find_field(key);
  if (!f) throw ParseError("unknown config key '" + key + "'", line);
  try {
    f->set(cfg, value);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " for key '" + key + "'", line);
  } catch (const std::exception&) {
    throw ParseError("bad value '" + value + "' for key '" + key + "'", line);
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.name);
  return out;
}

TrainConfig parse_config_text(const std::string& text, const TrainConfig& base) {
  TrainConfig cfg = base;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + raw + "'", line);
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line);
    assign(cfg, key, value, line);
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path, const TrainConfig& base) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), base);
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParseError("override must be key=value, got '" + assignment + "'");
  assign(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), -1);
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.name << " = " << f.get(cfg) << "\n";
  return os.str();
}

void validate_config(const TrainConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError("config: " + msg);
  };
  require(cfg.task == "catch" || cfg.task == "keydoor" || cfg.task == "pointgoal",
          "unknown task '" + cfg.task + "'");
  require(cfg.dtype == "f32" || cfg.dtype == "f64", "dtype must be f32 or f64");
  require(cfg.batch_size > 0 && cfg.sequence_length > 1, "batch_size/sequence_length too small");
  require(cfg.dataset_capacity >= cfg.sequence_length, "dataset_capacity below sequence_length");
  require(cfg.image_size == 32 || cfg.image_size == 64, "image_size must be 32 or 64");
  require(cfg.action_repeat >= 1, "action_repeat must be >= 1");
  require(cfg.latent_vars > 0 && cfg.latent_classes > 1, "latent geometry invalid");
  require(cfg.deter_units > 0 && cfg.cnn_depth > 0 && cfg.mlp_units > 0 && cfg.mlp_layers > 0,
          "network sizes must be positive");
  require(cfg.horizon >= 2, "horizon must be >= 2");
  require(cfg.rho >= 0.0 && cfg.rho <= 1.0, "rho must lie in [0,1]");
  require(cfg.lambda >= 0.0 && cfg.lambda <= 1.0, "lambda must lie in [0,1]");
  require(cfg.discount > 0.0 && cfg.discount < 1.0, "discount must lie in (0,1)");
  require(cfg.kl_alpha >= 0.0 && cfg.kl_alpha <= 1.0, "kl_alpha must lie in [0,1]");
  require(cfg.env_steps_per_update >= 1, "env_steps_per_update must be >= 1");
  require(cfg.prefill_steps >= cfg.sequence_length, "prefill_steps below sequence_length");
  require(cfg.total_env_steps >= cfg.prefill_steps, "total_env_steps below prefill_steps");
  require(cfg.eval_every > 0 && cfg.eval_episodes >= 0, "eval schedule invalid");
  require(cfg.wm_lr > 0 && cfg.actor_lr > 0 && cfg.critic_lr > 0, "learning rates must be positive");
  require(cfg.slow_critic_interval >= 1, "slow_critic_interval must be >= 1");
}

}  // namespace dreamcc
