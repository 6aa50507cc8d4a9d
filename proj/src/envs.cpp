#include "dreamcc/envs.hpp"

#include <algorithm>
#include <cmath>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace {

int argmax_action(const std::vector<float>& action, int n) {
  if (static_cast<int>(action.size()) != n)
    throw DimensionError("env step: expected " + std::to_string(n) + " action entries, got " +
                         std::to_string(action.size()));
  return static_cast<int>(std::max_element(action.begin(), action.end()) - action.begin());
}

EnvStep pack_obs(std::vector<uint8_t> bytes, int64_t size, float reward, bool terminal) {
  EnvStep s;
  s.image = Tensor::zeros({1, size, size}, DType::kF32);
  for (int64_t i = 0; i < size * size; ++i) s.image.set_at(i, bytes[i] / 255.0 - 0.5);
  s.image_u8 = std::move(bytes);
  s.reward = reward;
  s.terminal = terminal;
  return s;
}

void fill_cell(std::vector<uint8_t>& img, int64_t size, int grid, int row, int col,
               uint8_t value) {
  const int64_t cell = size / grid;
  for (int64_t y = row * cell; y < (row + 1) * cell; ++y)
    for (int64_t x = col * cell; x < (col + 1) * cell; ++x) img[y * size + x] = value;
}

void check_size(int64_t size, int grid) {
  if (size < grid || size % grid != 0)
    throw UsageError("env image_size must be a positive multiple of " + std::to_string(grid));
}

}  // namespace

// ---- Catch ----

CatchEnv::CatchEnv(int64_t image_size) : size_(image_size) { check_size(size_, kGrid); }

EnvStep CatchEnv::reset(uint64_t seed) {
  Rng rng = make_stream(seed, "catch");
  std::uniform_int_distribution<int> col(0, kGrid - 1);
  ball_row_ = 0;
  ball_col_ = col(rng);
  paddle_col_ = kGrid / 2;
  done_ = false;
  return observe(0.0f, false);
}

EnvStep CatchEnv::step(const std::vector<float>& action) {
  if (done_) throw UsageError("step after terminal; call reset");
  const int a = argmax_action(action, 3);  // 0 left, 1 stay, 2 right
  paddle_col_ = std::clamp(paddle_col_ + (a - 1), 0, kGrid - 1);
  ball_row_ += 1;
  float reward = 0.0f;
  if (ball_row_ == kGrid - 1) {
    reward = ball_col_ == paddle_col_ ? 1.0f : -1.0f;
    done_ = true;
  }
  return observe(reward, done_);
}

EnvStep CatchEnv::observe(float reward, bool terminal) const {
  std::vector<uint8_t> img(size_ * size_, 0);
  fill_cell(img, size_, kGrid, ball_row_, ball_col_, 255);
  fill_cell(img, size_, kGrid, kGrid - 1, paddle_col_, 255);
  return pack_obs(std::move(img), size_, reward, terminal);
}

// ---- KeyDoor ----

KeyDoorEnv::KeyDoorEnv(int64_t image_size) : size_(image_size) { check_size(size_, kGrid); }

EnvStep KeyDoorEnv::reset(uint64_t seed) {
  Rng rng = make_stream(seed, "keydoor");
  std::uniform_int_distribution<int> cell(0, kGrid - 1);
  do {
    row_ = cell(rng);
    col_ = cell(rng);
  } while ((row_ == kKeyRow && col_ == kKeyCol) || (row_ == kDoorRow && col_ == kDoorCol));
  has_key_ = false;
  done_ = false;
  return observe(0.0f, false);
}

EnvStep KeyDoorEnv::step(const std::vector<float>& action) {
  if (done_) throw UsageError("step after terminal; call reset");
  const int a = argmax_action(action, 4);  // 0 up, 1 down, 2 left, 3 right
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  row_ = std::clamp(row_ + dr[a], 0, kGrid - 1);
  col_ = std::clamp(col_ + dc[a], 0, kGrid - 1);
  float reward = 0.0f;
  if (row_ == kKeyRow && col_ == kKeyCol) has_key_ = true;
  if (row_ == kDoorRow && col_ == kDoorCol) {
    reward = has_key_ ? 1.0f : 0.0f;
    done_ = true;
  }
  return observe(reward, done_);
}

EnvStep KeyDoorEnv::observe(float reward, bool terminal) const {
  std::vector<uint8_t> img(size_ * size_, 0);
  if (!has_key_) fill_cell(img, size_, kGrid, kKeyRow, kKeyCol, 96);
  fill_cell(img, size_, kGrid, kDoorRow, kDoorCol, 160);
  fill_cell(img, size_, kGrid, row_, col_, 255);
  return pack_obs(std::move(img), size_, reward, terminal);
}

// ---- PointGoal ----

PointGoalEnv::PointGoalEnv(int64_t image_size) : size_(image_size) {
  if (size_ < 8) throw UsageError("pointgoal image_size must be at least 8");
}

EnvStep PointGoalEnv::reset(uint64_t seed) {
  Rng rng = make_stream(seed, "pointgoal");
  std::uniform_real_distribution<double> start(-0.7, -0.3);
  px_ = start(rng);
  py_ = start(rng);
  vx_ = vy_ = 0.0;
  done_ = false;
  return observe(0.0f, false);
}

EnvStep PointGoalEnv::step(const std::vector<float>& action) {
  if (done_) throw UsageError("step after terminal; call reset");
  if (action.size() != 2) throw DimensionError("pointgoal: expected 2 action entries");
  const double ax = std::clamp<double>(action[0], -1.0, 1.0);
  const double ay = std::clamp<double>(action[1], -1.0, 1.0);
  vx_ = 0.8 * vx_ + 0.1 * ax;
  vy_ = 0.8 * vy_ + 0.1 * ay;
  px_ += vx_;
  py_ += vy_;
  if (px_ < -1.0 || px_ > 1.0) {
    px_ = std::clamp(px_, -1.0, 1.0);
    vx_ = 0.0;
  }
  if (py_ < -1.0 || py_ > 1.0) {
    py_ = std::clamp(py_, -1.0, 1.0);
    vy_ = 0.0;
  }
  float reward = static_cast<float>(-0.01 * (ax * ax + ay * ay));
  const double dx = px_ - kGoalX, dy = py_ - kGoalY;
  if (std::sqrt(dx * dx + dy * dy) <= kGoalRadius) {
    reward += 1.0f;
    done_ = true;
  }
  return observe(reward, done_);
}

EnvStep PointGoalEnv::observe(float reward, bool terminal) const {
  std::vector<uint8_t> img(size_ * size_, 0);
  auto to_px = [&](double v) { return (v + 1.0) / 2.0 * (size_ - 1); };
  const double gr = to_px(kGoalY), gc = to_px(kGoalX);
  const double pr = kGoalRadius / 2.0 * (size_ - 1);
  for (int64_t y = 0; y < size_; ++y)
    for (int64_t x = 0; x < size_; ++x) {
      const double dy = y - gr, dx = x - gc;
      if (dy * dy + dx * dx <= pr * pr) img[y * size_ + x] = 100;
    }
  const int64_t ar = std::llround(to_px(py_)), ac = std::llround(to_px(px_));
  for (int64_t y = std::max<int64_t>(0, ar - 1); y <= std::min(size_ - 1, ar + 1); ++y)
    for (int64_t x = std::max<int64_t>(0, ac - 1); x <= std::min(size_ - 1, ac + 1); ++x)
      img[y * size_ + x] = 255;
  return pack_obs(std::move(img), size_, reward, terminal);
}

// ---- wrappers ----

ActionRepeatWrapper::ActionRepeatWrapper(std::unique_ptr<Env> inner, int repeat)
    : inner_(std::move(inner)), repeat_(repeat) {
  if (repeat_ < 1) throw UsageError("action_repeat must be >= 1");
}

EnvStep ActionRepeatWrapper::step(const std::vector<float>& action) {
  EnvStep out;
  float total = 0.0f;
  for (int i = 0; i < repeat_; ++i) {
    out = inner_->step(action);
    total += out.reward;
    if (out.terminal || out.truncated) break;
  }
  out.reward = total;
  return out;
}

TimeLimitWrapper::TimeLimitWrapper(std::unique_ptr<Env> inner, int64_t max_steps)
    : inner_(std::move(inner)), max_steps_(max_steps) {
  if (max_steps_ < 1) throw UsageError("time_limit_steps must be >= 1");
}

EnvStep TimeLimitWrapper::reset(uint64_t seed) {
  elapsed_ = 0;
  truncated_ = false;
  return inner_->reset(seed);
}

EnvStep TimeLimitWrapper::step(const std::vector<float>& action) {
  if (truncated_) throw UsageError("step after truncation; call reset");
  EnvStep out = inner_->step(action);
  ++elapsed_;
  if (!out.terminal && elapsed_ >= max_steps_) {
    out.truncated = true;
    truncated_ = true;
  }
  return out;
}

StickyActionWrapper::StickyActionWrapper(std::unique_ptr<Env> inner, double stick_prob)
    : inner_(std::move(inner)), stick_prob_(stick_prob) {}

EnvStep StickyActionWrapper::reset(uint64_t seed) {
  rng_ = make_stream(seed, "sticky");
  prev_action_.clear();
  return inner_->reset(seed);
}

EnvStep StickyActionWrapper::step(const std::vector<float>& action) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool stick = !prev_action_.empty() && u(rng_) < stick_prob_;
  const std::vector<float>& applied = stick ? prev_action_ : action;
  EnvStep out = inner_->step(applied);
  prev_action_ = applied;
  return out;
}

std::unique_ptr<Env> make_env(const std::string& name, const EnvConfig& cfg) {
  if (cfg.action_repeat < 1) throw UsageError("action_repeat must be >= 1");
  std::unique_ptr<Env> env;
  if (name == "catch")
    env = std::make_unique<CatchEnv>(cfg.image_size);
  else if (name == "keydoor")
    env = std::make_unique<KeyDoorEnv>(cfg.image_size);
  else if (name == "pointgoal")
    env = std::make_unique<PointGoalEnv>(cfg.image_size);
  else
    throw UsageError("unknown env: " + name + " (expected catch|keydoor|pointgoal)");
  env = std::make_unique<TimeLimitWrapper>(std::move(env), cfg.time_limit_steps);
  if (cfg.action_repeat > 1)
    env = std::make_unique<ActionRepeatWrapper>(std::move(env), cfg.action_repeat);
  if (cfg.sticky_actions) env = std::make_unique<StickyActionWrapper>(std::move(env));
  return env;
}

std::vector<uint8_t> resize_area(const std::vector<uint8_t>& src, int64_t src_h, int64_t src_w,
                                 int64_t dst_h, int64_t dst_w) {
  if (static_cast<int64_t>(src.size()) != src_h * src_w)
    throw DimensionError("resize_area: source size mismatch");
  if (dst_h < 1 || dst_w < 1 || dst_h > src_h || dst_w > src_w)
    throw UsageError("resize_area: only downscaling is supported");
  std::vector<uint8_t> dst(dst_h * dst_w);
  const double sy = static_cast<double>(src_h) / dst_h;
  const double sx = static_cast<double>(src_w) / dst_w;
  for (int64_t oy = 0; oy < dst_h; ++oy)
    for (int64_t ox = 0; ox < dst_w; ++ox) {
      const double y0 = oy * sy, y1 = (oy + 1) * sy;
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      double acc = 0.0;
      for (int64_t y = static_cast<int64_t>(y0); y < src_h && y < y1; ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        for (int64_t x = static_cast<int64_t>(x0); x < src_w && x < x1; ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          acc += wy * wx * src[y * src_w + x];
        }
      }
      dst[oy * dst_w + ox] = static_cast<uint8_t>(std::lround(acc / (sy * sx)));
    }
  return dst;
}

std::vector<uint8_t> rgb_to_gray(const std::vector<uint8_t>& rgb) {
  if (rgb.size() % 3 != 0) throw DimensionError("rgb_to_gray: length must be divisible by 3");
  std::vector<uint8_t> gray(rgb.size() / 3);
  for (size_t i = 0; i < gray.size(); ++i) {
    const double v = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    gray[i] = static_cast<uint8_t>(std::lround(v));
  }
  return gray;
}

}  // namespace dreamcc
