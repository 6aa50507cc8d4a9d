#pragma once

#include <map>
#include <string>
#include <vector>

#include "dreamcc/dists.hpp"
#include "dreamcc/nn.hpp"
#include "dreamcc/replay.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc {

// The image likelihood is summed over pixels (one unit-variance Gaussian per
// pixel), then averaged over batch and time with the other terms.
inline constexpr bool kImageLossSumsPixels = true;

struct WorldModelConfig {
  int image_size = 64;  // 32 or 64
  int image_channels = 1;
  int deter_units = 600;
  int latent_vars = 32;     // K categorical variables ...
  int latent_classes = 32;  // ... with C classes each
  int cnn_depth = 48;
  int mlp_layers = 4;  // reward/discount heads
  int mlp_units = 400;
  double kl_scale = 0.1;  // beta (0.1 discrete-control default, 1.0 continuous)
  double kl_alpha = 0.8;  // balancing: alpha trains the prior toward the posterior
  double free_bits = 0.0;
  bool layer_norm = false;            // layer-normalised GRU pre-activations
  bool gaussian_latents = false;      // ablation: diagonal Gaussian instead of categorical
  bool stop_image_gradients = false;  // ablation: image head trains but does not shape z
  bool stop_reward_gradients = false;
  int action_dim = 0;
  DType dtype = DType::kF32;

  int64_t stoch_dim() const { return int64_t{1} * latent_vars * latent_classes; }
  int64_t feature_dim() const { return deter_units + stoch_dim(); }
};

// Latent state for a batch of B elements.
struct ModelState {
  Tensor deter;  // [B, D]
  Tensor stoch;  // [B, K, C] one-hot rows, or [B, S] when gaussian
  Tensor dist;   // [B, K, C] logits, or [B, 2S] (mean | raw std) when gaussian
  int64_t batch() const { return deter.dim(0); }
};

ModelState detach_state(const ModelState& s);
// Row-concatenation into a fresh leaf state (used to pool posteriors).
ModelState concat_states(const std::vector<ModelState>& states);

struct HeadsOut {
  Tensor image_mean;     // [B, C, H, W]
  Tensor reward_mean;    // [B]
  Tensor discount_logit; // [B]
};

struct WorldModelLoss {
  Tensor total;           // scalar
  ModelState posteriors;  // detached, B*L rows, time-major
  std::map<std::string, double> metrics;
};

class WorldModel {
 public:
  WorldModel(const WorldModelConfig& cfg, uint64_t seed);

  const WorldModelConfig& config() const { return cfg_; }
  int64_t embed_dim() const { return embed_dim_; }

  ModelState initial_state(int64_t batch) const;

  // [N, C, H, W] -> [N, E]; throws DimensionError on a wrong image size.
  Tensor encode(const Tensor& images, bool frozen = false) const;

  // Prior transition: h' = f(h, z, a); z' ~ prior(h'). With sample=false the
  // stochastic part is the distribution mode.
  ModelState imagine_step(const ModelState& prev, const Tensor& action, Rng& rng,
                          bool frozen = false, bool sample = true) const;

  struct ObserveOut {
    ModelState post;
    ModelState prior;  // stoch holds the prior mode; its dist is what the KL trains
  };
  ObserveOut observe_step(const ModelState& prev, const Tensor& prev_action,
                          const Tensor& embed, Rng& rng, bool frozen = false,
                          bool sample = true) const;

  Tensor features(const ModelState& s) const;  // [B, D + stoch]

  HeadsOut decode_heads(const ModelState& s, bool frozen = false) const;
  Tensor predict_reward(const ModelState& s, bool frozen = false) const;         // [B]
  Tensor predict_discount_prob(const ModelState& s, bool frozen = false) const;  // [B] in (0,1)
  // head access on a feature batch (lets imagination run the heads in one pass)
  Tensor reward_from_features(const Tensor& feat, bool frozen = false) const;        // [N]
  Tensor discount_prob_from_features(const Tensor& feat, bool frozen = false) const; // [N]

  // Joint ELBO loss over a sequence batch (Eq. components):
  //   mean over B*L of [ -ln p(x|z) - ln p(tanh(r)|z) - ln p(gamma-target|z)
  //                      + kl_scale * balanced KL ]
  WorldModelLoss loss(const SequenceBatch& batch, Rng& rng);

  std::vector<Parameter*> parameters();

 private:
  Tensor latent_sample(const Tensor& dist_params, Rng& rng, bool sample) const;
  Tensor decode_image(const Tensor& feat, bool frozen) const;

  WorldModelConfig cfg_;
  std::vector<Conv2dLayer> enc_;
  DenseLayer dec_in_;
  std::vector<ConvT2dLayer> dec_;
  DenseLayer img_in_;  // [stoch + action] -> GRU input
  GruCell gru_;
  DenseLayer prior_h_, prior_out_;
  DenseLayer post_h_, post_out_;
  Mlp reward_, discount_;
  int64_t embed_dim_ = 0;
};

}  // namespace dreamcc
