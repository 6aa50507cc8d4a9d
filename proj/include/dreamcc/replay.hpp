#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "dreamcc/rng.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc {

struct Transition {
  std::vector<uint8_t> image;  // C*H*W bytes; 0..255 maps to [-0.5, 0.5]
  std::vector<float> action;   // one-hot (discrete) or box values
  float reward = 0.0f;
  bool terminal = false;   // real environment termination
  bool truncated = false;  // time-limit cut; discount target stays 1
};

struct Episode {
  int64_t id = 0;
  bool completed = false;
  std::vector<Transition> steps;  // steps[0] is the reset step (zero action/reward)
  int64_t length() const { return static_cast<int64_t>(steps.size()); }
  double return_sum() const;
};

// Time-major training batch: flat row index is t*B + b.
struct SequenceBatch {
  int64_t B = 0, L = 0;
  int64_t C = 0, H = 0, W = 0, A = 0;
  Tensor images;            // [L*B, C, H, W], pixels in [-0.5, 0.5]
  Tensor actions;           // [L*B, A]; row t holds the action that led to image t
  Tensor rewards;           // [L*B], raw env rewards
  Tensor discount_targets;  // [L*B]; 0 only on terminal steps
};

struct ReplayConfig {
  int64_t capacity_steps = 2'000'000;  // FIFO over whole episodes
  std::string persist_dir;             // when set, completed episodes are written here
};

struct ReplayStats {
  int64_t num_steps = 0;
  int64_t num_episodes = 0;
  double mean_episode_return = 0.0;
  double mean_episode_length = 0.0;
};

// Whole-episode FIFO store. Mutex-guarded so a collector and a trainer thread
// may share it, though the default harness loop is single-threaded.
class EpisodeStore {
 public:
  explicit EpisodeStore(ReplayConfig cfg);

  void set_geometry(int64_t c, int64_t h, int64_t w, int64_t a);

  // episode_start begins a new episode with this (reset) transition.
  void append(const Transition& t, bool episode_start);

  // B sequences of exactly L consecutive steps from completed episodes.
  // Episode choice is uniform over eligible episodes (length >= L; shorter
  // ones are retained but never sampled). The start index is uniform over
  // [0, len-1], then clipped to min(start, len-L) so episode ends are
  // sampled often. Throws NotReadyError when nothing is eligible.
  SequenceBatch sample(int64_t B, int64_t L, Rng& rng, DType dt = DType::kF32) const;

  ReplayStats stats() const;
  int64_t steps() const;
  int64_t completed_episodes() const;

  void save_episodes(const std::string& dir) const;
  int64_t load_episodes(const std::string& dir);

 private:
  void evict_locked();
  void persist_locked(const Episode& ep) const;

  ReplayConfig cfg_;
  mutable std::mutex mu_;
  std::deque<Episode> episodes_;  // front = oldest; back may be open
  int64_t total_steps_ = 0;
  int64_t next_id_ = 0;
  int64_t C_ = 0, H_ = 0, W_ = 0, A_ = 0;
};

// Binary episode files, one per episode (layout in docs/formats.md).
void write_episode_file(const std::string& path, const Episode& ep, int64_t C, int64_t H,
                        int64_t W, int64_t A);
Episode read_episode_file(const std::string& path, int64_t& C, int64_t& H, int64_t& W,
                          int64_t& A);

}  // namespace dreamcc
