#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dreamcc/rng.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc {

struct EnvStep {
  Tensor image;                  // [C,S,S], pixels in [-0.5, 0.5]
  std::vector<uint8_t> image_u8; // same pixels as stored bytes
  float reward = 0.0f;
  bool terminal = false;
  bool truncated = false;
};

struct EnvConfig {
  int action_repeat = 4;
  int64_t time_limit_steps = 1000;  // counts inner env steps
  int64_t image_size = 64;
  bool grayscale = true;
  bool sticky_actions = false;  // repeat previous action with p = 0.25
  uint64_t seed = 0;
};

struct ActionSpace {
  bool discrete = true;
  int dim = 0;  // number of actions (discrete) or box dimensions
};

class Env {
 public:
  virtual ~Env() = default;
  virtual ActionSpace action_space() const = 0;
  virtual int64_t image_size() const = 0;
  virtual int64_t channels() const { return 1; }
  virtual EnvStep reset(uint64_t seed) = 0;
  // Discrete envs take a one-hot row (argmax decides); continuous take box values.
  virtual EnvStep step(const std::vector<float>& action) = 0;
};

// Falling ball on an 8-wide board; paddle moves left/stay/right. +1 catch, -1 miss.
class CatchEnv : public Env {
 public:
  explicit CatchEnv(int64_t image_size = 32);
  ActionSpace action_space() const override { return {true, 3}; }
  int64_t image_size() const override { return size_; }
  EnvStep reset(uint64_t seed) override;
  EnvStep step(const std::vector<float>& action) override;

  static constexpr int kGrid = 8;

 private:
  EnvStep observe(float reward, bool terminal) const;
  int64_t size_;
  int ball_row_ = 0, ball_col_ = 0, paddle_col_ = 0;
  bool done_ = true;
};

// Gridworld: touch the key first, then the door pays +1. Door without key ends at 0.
class KeyDoorEnv : public Env {
 public:
  explicit KeyDoorEnv(int64_t image_size = 32);
  ActionSpace action_space() const override { return {true, 4}; }
  int64_t image_size() const override { return size_; }
  EnvStep reset(uint64_t seed) override;
  EnvStep step(const std::vector<float>& action) override;

  static constexpr int kGrid = 8;
  static constexpr int kKeyRow = 1, kKeyCol = 1;
  static constexpr int kDoorRow = 6, kDoorCol = 6;

 private:
  EnvStep observe(float reward, bool terminal) const;
  int64_t size_;
  int row_ = 0, col_ = 0;
  bool has_key_ = false;
  bool done_ = true;
};

// Point mass with velocity; 2-dim action in [-1,1]^2. +1 inside the goal disc
// (terminal), control cost -0.01 * |a|^2 every step.
class PointGoalEnv : public Env {
 public:
  explicit PointGoalEnv(int64_t image_size = 32);
  ActionSpace action_space() const override { return {false, 2}; }
  int64_t image_size() const override { return size_; }
  EnvStep reset(uint64_t seed) override;
  EnvStep step(const std::vector<float>& action) override;

  static constexpr double kGoalX = 0.5, kGoalY = 0.5, kGoalRadius = 0.3;

 private:
  EnvStep observe(float reward, bool terminal) const;
  int64_t size_;
  double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
  bool done_ = true;
};

class ActionRepeatWrapper : public Env {
 public:
  ActionRepeatWrapper(std::unique_ptr<Env> inner, int repeat);
  ActionSpace action_space() const override { return inner_->action_space(); }
  int64_t image_size() const override { return inner_->image_size(); }
  int64_t channels() const override { return inner_->channels(); }
  EnvStep reset(uint64_t seed) override { return inner_->reset(seed); }
  EnvStep step(const std::vector<float>& action) override;

 private:
  std::unique_ptr<Env> inner_;
  int repeat_;
};

class TimeLimitWrapper : public Env {
 public:
  TimeLimitWrapper(std::unique_ptr<Env> inner, int64_t max_steps);
  ActionSpace action_space() const override { return inner_->action_space(); }
  int64_t image_size() const override { return inner_->image_size(); }
  int64_t channels() const override { return inner_->channels(); }
  EnvStep reset(uint64_t seed) override;
  EnvStep step(const std::vector<float>& action) override;

 private:
  std::unique_ptr<Env> inner_;
  int64_t max_steps_;
  int64_t elapsed_ = 0;
  bool truncated_ = false;
};

class StickyActionWrapper : public Env {
 public:
  StickyActionWrapper(std::unique_ptr<Env> inner, double stick_prob = 0.25);
  ActionSpace action_space() const override { return inner_->action_space(); }
  int64_t image_size() const override { return inner_->image_size(); }
  int64_t channels() const override { return inner_->channels(); }
  EnvStep reset(uint64_t seed) override;
  EnvStep step(const std::vector<float>& action) override;

 private:
  std::unique_ptr<Env> inner_;
  double stick_prob_;
  std::vector<float> prev_action_;
  Rng rng_;
};

// "catch" | "keydoor" | "pointgoal", wrapped per config
// (time limit innermost, then action repeat, sticky outermost).
std::unique_ptr<Env> make_env(const std::string& name, const EnvConfig& cfg);

// Box-filter downscale with exact fractional-overlap weighting.
std::vector<uint8_t> resize_area(const std::vector<uint8_t>& src, int64_t src_h, int64_t src_w,
                                 int64_t dst_h, int64_t dst_w);
// Luma conversion, interleaved RGB input.
std::vector<uint8_t> rgb_to_gray(const std::vector<uint8_t>& rgb);

}  // namespace dreamcc
