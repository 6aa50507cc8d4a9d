#include "dreamcc/replay.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace fs = std::filesystem;

double Episode::return_sum() const {
  double s = 0.0;
  for (const auto& t : steps) s += t.reward;
  return s;
}

EpisodeStore::EpisodeStore(ReplayConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.capacity_steps <= 0) throw UsageError("replay: capacity_steps must be positive");
}

void EpisodeStore::set_geometry(int64_t c, int64_t h, int64_t w, int64_t a) {
  std::lock_guard<std::mutex> lock(mu_);
  C_ = c;
  H_ = h;
  W_ = w;
  A_ = a;
}

void EpisodeStore::append(const Transition& t, bool episode_start) {
  std::lock_guard<std::mutex> lock(mu_);
  if (C_ == 0) throw UsageError("replay: set_geometry before append");
  if (static_cast<int64_t>(t.image.size()) != C_ * H_ * W_)
    throw DimensionError("replay: image byte count does not match geometry");
  if (static_cast<int64_t>(t.action.size()) != A_)
    throw DimensionError("replay: action width does not match geometry");
  if (episode_start) {
    if (!episodes_.empty() && !episodes_.back().completed)
      throw UsageError("replay: previous episode still open at episode_start");
    Episode ep;
    ep.id = next_id_++;
    episodes_.push_back(std::move(ep));
  }
  if (episodes_.empty() || episodes_.back().completed)
    throw UsageError("replay: append without an open episode");
  Episode& ep = episodes_.back();
  ep.steps.push_back(t);
  ++total_steps_;
  if (t.terminal || t.truncated) {
    ep.completed = true;
    if (!cfg_.persist_dir.empty()) persist_locked(ep);
  }
  evict_locked();
}

void EpisodeStore::evict_locked() {
  while (total_steps_ > cfg_.capacity_steps && episodes_.size() > 1 &&
         episodes_.front().completed) {
    total_steps_ -= episodes_.front().length();
    episodes_.pop_front();
  }
}

SequenceBatch EpisodeStore::sample(int64_t B, int64_t L, Rng& rng, DType dt) const {
  if (B <= 0 || L <= 0) throw UsageError("replay sample: B and L must be positive");
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<const Episode*> eligible;
  for (const auto& ep : episodes_)
    if (ep.completed && ep.length() >= L) eligible.push_back(&ep);
  if (eligible.empty())
    throw NotReadyError("replay sample: no completed episode of length >= " + std::to_string(L));

  SequenceBatch batch;
  batch.B = B;
  batch.L = L;
  batch.C = C_;
  batch.H = H_;
  batch.W = W_;
  batch.A = A_;
  const int64_t N = L * B;
  const int64_t pixels = C_ * H_ * W_;
  batch.images = Tensor::zeros({N, C_, H_, W_}, dt);
  batch.actions = Tensor::zeros({N, A_}, dt);
  batch.rewards = Tensor::zeros({N}, dt);
  batch.discount_targets = Tensor::zeros({N}, dt);

  std::uniform_int_distribution<size_t> pick_ep(0, eligible.size() - 1);
  for (int64_t b = 0; b < B; ++b) {
    const Episode& ep = *eligible[pick_ep(rng)];
    const int64_t len = ep.length();
    std::uniform_int_distribution<int64_t> pick_start(0, len - 1);
    const int64_t start = std::min(pick_start(rng), len - L);
    for (int64_t t = 0; t < L; ++t) {
      const Transition& tr = ep.steps[start + t];
      const int64_t row = t * B + b;
      for (int64_t p = 0; p < pixels; ++p)
        batch.images.set_at(row * pixels + p, tr.image[p] / 255.0 - 0.5);
      for (int64_t a = 0; a < A_; ++a) batch.actions.set_at(row * A_ + a, tr.action[a]);
      batch.rewards.set_at(row, tr.reward);
      batch.discount_targets.set_at(row, tr.terminal ? 0.0 : 1.0);
    }
  }
  return batch;
}

ReplayStats EpisodeStore::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  ReplayStats s;
  s.num_steps = total_steps_;
  double ret = 0.0, len = 0.0;
  int64_t done = 0;
  for (const auto& ep : episodes_) {
    if (!ep.completed) continue;
    ++done;
    ret += ep.return_sum();
    len += static_cast<double>(ep.length());
  }
  s.num_episodes = done;
  if (done > 0) {
    s.mean_episode_return = ret / done;
    s.mean_episode_length = len / done;
  }
  return s;
}

int64_t EpisodeStore::steps() const {
  std::lock_guard<std::mutex> lock(mu_);
  return total_steps_;
}

int64_t EpisodeStore::completed_episodes() const {
  std::lock_guard<std::mutex> lock(mu_);
  int64_t done = 0;
  for (const auto& ep : episodes_)
    if (ep.completed) ++done;
  return done;
}

void EpisodeStore::persist_locked(const Episode& ep) const {
  fs::create_directories(cfg_.persist_dir);
  char name[64];
  std::snprintf(name, sizeof(name), "episode_%010lld.dcep", static_cast<long long>(ep.id));
  write_episode_file((fs::path(cfg_.persist_dir) / name).string(), ep, C_, H_, W_, A_);
}

void EpisodeStore::save_episodes(const std::string& dir) const {
  std::lock_guard<std::mutex> lock(mu_);
  fs::create_directories(dir);
  for (const auto& ep : episodes_) {
    if (!ep.completed) continue;
    char name[64];
    std::snprintf(name, sizeof(name), "episode_%010lld.dcep", static_cast<long long>(ep.id));
    write_episode_file((fs::path(dir) / name).string(), ep, C_, H_, W_, A_);
  }
}

int64_t EpisodeStore::load_episodes(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".dcep") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  int64_t loaded = 0;
  for (const auto& f : files) {
    int64_t c = 0, h = 0, w = 0, a = 0;
    Episode ep = read_episode_file(f.string(), c, h, w, a);
    std::lock_guard<std::mutex> lock(mu_);
    if (C_ == 0) {
      C_ = c;
      H_ = h;
      W_ = w;
      A_ = a;
    } else if (c != C_ || h != H_ || w != W_ || a != A_) {
      throw LoadError("replay load: episode geometry mismatch in " + f.string());
    }
    ep.id = next_id_++;
    total_steps_ += ep.length();
    episodes_.push_back(std::move(ep));
    evict_locked();
    ++loaded;
  }
  return loaded;
}

namespace {

constexpr char kEpisodeMagic[8] = {'D', 'C', 'E', 'P', '\0', '\0', '\0', '\0'};
constexpr uint32_t kEpisodeVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw LoadError("episode file truncated: " + path);
  return v;
}

}  // namespace

void write_episode_file(const std::string& path, const Episode& ep, int64_t C, int64_t H,
                        int64_t W, int64_t A) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UsageError("cannot open for writing: " + path);
  os.write(kEpisodeMagic, sizeof(kEpisodeMagic));
  put<uint32_t>(os, kEpisodeVersion);
  put<int64_t>(os, C);
  put<int64_t>(os, H);
  put<int64_t>(os, W);
  put<int64_t>(os, A);
  put<int64_t>(os, ep.length());
  for (const auto& t : ep.steps) {
    os.write(reinterpret_cast<const char*>(t.image.data()),
             static_cast<std::streamsize>(t.image.size()));
    os.write(reinterpret_cast<const char*>(t.action.data()),
             static_cast<std::streamsize>(t.action.size() * sizeof(float)));
    put<float>(os, t.reward);
    put<uint8_t>(os, t.terminal ? 1 : 0);
    put<uint8_t>(os, t.truncated ? 1 : 0);
  }
  if (!os) throw UsageError("write failed: " + path);
}

Episode read_episode_file(const std::string& path, int64_t& C, int64_t& H, int64_t& W,
                          int64_t& A) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kEpisodeMagic, sizeof(magic)) != 0)
    throw LoadError("bad episode magic: " + path);
  const uint32_t version = take<uint32_t>(is, path);
  if (version != kEpisodeVersion)
    throw LoadError("unsupported episode version " + std::to_string(version) + ": " + path);
  C = take<int64_t>(is, path);
  H = take<int64_t>(is, path);
  W = take<int64_t>(is, path);
  A = take<int64_t>(is, path);
  const int64_t len = take<int64_t>(is, path);
  if (C <= 0 || H <= 0 || W <= 0 || A <= 0 || len < 0)
    throw LoadError("bad episode header: " + path);
  Episode ep;
  ep.completed = true;
  ep.steps.resize(len);
  const int64_t pixels = C * H * W;
  for (auto& t : ep.steps) {
    t.image.resize(pixels);
    is.read(reinterpret_cast<char*>(t.image.data()), pixels);
    t.action.resize(A);
    is.read(reinterpret_cast<char*>(t.action.data()),
            static_cast<std::streamsize>(A * sizeof(float)));
    if (!is) throw LoadError("episode file truncated: " + path);
    t.reward = take<float>(is, path);
    t.terminal = take<uint8_t>(is, path) != 0;
    t.truncated = take<uint8_t>(is, path) != 0;
  }
  return ep;
}

}  // namespace dreamcc
