#include "dreamcc/world_model.hpp"

#include <cmath>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace {

double mean_value(const Tensor& t) {
  double s = 0;
  for (int64_t i = 0; i < t.size(); ++i) s += t.at(i);
  return s / static_cast<double>(t.size());
}

}  // namespace

ModelState detach_state(const ModelState& s) {
  return {s.deter.detach(), s.stoch.detach(), s.dist.detach()};
}

ModelState concat_states(const std::vector<ModelState>& states) {
  if (states.empty()) throw UsageError("concat_states: empty input");
  auto flatten = [](Tensor stacked) {
    Shape s = stacked.shape();
    Shape out;
    out.push_back(s[0] * s[1]);
    out.insert(out.end(), s.begin() + 2, s.end());
    return stacked.reshape(out).detach();
  };
  std::vector<Tensor> deters, stochs, dists;
  for (const auto& st : states) {
    deters.push_back(st.deter);
    stochs.push_back(st.stoch);
    dists.push_back(st.dist);
  }
  return {flatten(stack_rows_leaf(deters)), flatten(stack_rows_leaf(stochs)),
          flatten(stack_rows_leaf(dists))};
}

WorldModel::WorldModel(const WorldModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg.image_size != 32 && cfg.image_size != 64)
    throw DimensionError("WorldModel: image_size must be 32 or 64");
  if (cfg.action_dim <= 0) throw UsageError("WorldModel: action_dim must be set");
  Rng rng = make_stream(seed, "wm_init");
  const DType dt = cfg.dtype;
  const int64_t d = cfg.cnn_depth;
  const int64_t ch = cfg.image_channels;

  if (cfg.image_size == 32) {
    enc_.emplace_back("wm/enc0", ch, d, 4, 2, rng, dt);        // 32 -> 15
    enc_.emplace_back("wm/enc1", d, 2 * d, 4, 2, rng, dt);     // 15 -> 6
    enc_.emplace_back("wm/enc2", 2 * d, 4 * d, 4, 2, rng, dt); // 6 -> 2
    embed_dim_ = 4 * d * 2 * 2;
  } else {
    enc_.emplace_back("wm/enc0", ch, d, 4, 2, rng, dt);        // 64 -> 31
    enc_.emplace_back("wm/enc1", d, 2 * d, 4, 2, rng, dt);     // 31 -> 14
    enc_.emplace_back("wm/enc2", 2 * d, 4 * d, 4, 2, rng, dt); // 14 -> 6
    enc_.emplace_back("wm/enc3", 4 * d, 8 * d, 4, 2, rng, dt); // 6 -> 2
    embed_dim_ = 8 * d * 2 * 2;
  }

  const int64_t feat = cfg.feature_dim();
  if (cfg.image_size == 32) {
    const int64_t c0 = 16 * d;
    dec_in_ = DenseLayer("wm/dec_in", feat, c0, rng, dt);
    dec_.emplace_back("wm/dec0", c0, 2 * d, 5, 2, 5, 5, rng, dt);     // 1 -> 5
    dec_.emplace_back("wm/dec1", 2 * d, d, 6, 2, 14, 14, rng, dt);    // 5 -> 14
    dec_.emplace_back("wm/dec2", d, ch, 6, 2, 32, 32, rng, dt);       // 14 -> 32
  } else {
    const int64_t c0 = 32 * d;
    dec_in_ = DenseLayer("wm/dec_in", feat, c0, rng, dt);
    dec_.emplace_back("wm/dec0", c0, 4 * d, 5, 2, 5, 5, rng, dt);     // 1 -> 5
    dec_.emplace_back("wm/dec1", 4 * d, 2 * d, 5, 2, 13, 13, rng, dt);// 5 -> 13
    dec_.emplace_back("wm/dec2", 2 * d, d, 6, 2, 30, 30, rng, dt);    // 13 -> 30
    dec_.emplace_back("wm/dec3", d, ch, 6, 2, 64, 64, rng, dt);       // 30 -> 64
  }

  const int64_t dist_dim = cfg.gaussian_latents ? 2 * cfg.stoch_dim()
                                                : cfg.stoch_dim();
  img_in_ = DenseLayer("wm/img_in", cfg.stoch_dim() + cfg.action_dim, cfg.deter_units, rng, dt);
  gru_ = GruCell("wm/gru", cfg.deter_units, cfg.deter_units, cfg.layer_norm, rng, dt);
  prior_h_ = DenseLayer("wm/prior_h", cfg.deter_units, cfg.deter_units, rng, dt);
  prior_out_ = DenseLayer("wm/prior_out", cfg.deter_units, dist_dim, rng, dt);
  post_h_ = DenseLayer("wm/post_h", cfg.deter_units + embed_dim_, cfg.deter_units, rng, dt);
  post_out_ = DenseLayer("wm/post_out", cfg.deter_units, dist_dim, rng, dt);
  reward_ = Mlp("wm/reward", feat, cfg.mlp_units, cfg.mlp_layers, 1, rng, dt);
  discount_ = Mlp("wm/discount", feat, cfg.mlp_units, cfg.mlp_layers, 1, rng, dt);
}

ModelState WorldModel::initial_state(int64_t batch) const {
  ModelState s;
  const DType dt = cfg_.dtype;
  s.deter = Tensor::zeros({batch, cfg_.deter_units}, dt);
  if (cfg_.gaussian_latents) {
    s.stoch = Tensor::zeros({batch, cfg_.stoch_dim()}, dt);
    s.dist = Tensor::zeros({batch, 2 * cfg_.stoch_dim()}, dt);
  } else {
    s.stoch = Tensor::zeros({batch, cfg_.latent_vars, cfg_.latent_classes}, dt);
    s.dist = Tensor::zeros({batch, cfg_.latent_vars, cfg_.latent_classes}, dt);
  }
  return s;
}

Tensor WorldModel::encode(const Tensor& images, bool frozen) const {
  if (images.ndim() != 4 || images.dim(1) != cfg_.image_channels ||
      images.dim(2) != cfg_.image_size || images.dim(3) != cfg_.image_size)
    throw DimensionError("encode: expected [N," + std::to_string(cfg_.image_channels) + "," +
                         std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                         "], got " + shape_str(images.shape()));
  Tensor x = images;
  for (const auto& layer : enc_) x = elu(layer.forward(x, frozen));
  return x.reshape({x.dim(0), embed_dim_});
}

Tensor WorldModel::latent_sample(const Tensor& dist_params, Rng& rng, bool sample) const {
  if (cfg_.gaussian_latents) {
    const int64_t S = cfg_.stoch_dim();
    Tensor mean = slice_cols(dist_params, 0, S);
    if (!sample) return mean;
    Tensor std = add_scalar(softplus(slice_cols(dist_params, S, 2 * S)), 0.1);
    Tensor eps = Tensor::zeros(mean.shape(), mean.dtype());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int64_t i = 0; i < eps.size(); ++i) eps.set_at(i, normal(rng));
    return add(mean, mul(std, eps));
  }
  return sample ? sample_straight_through(dist_params, rng)
                : mode_straight_through(dist_params);
}

ModelState WorldModel::imagine_step(const ModelState& prev, const Tensor& action, Rng& rng,
                                    bool frozen, bool sample) const {
  Tensor stoch_flat = prev.stoch.ndim() == 3
                          ? prev.stoch.reshape({prev.batch(), cfg_.stoch_dim()})
                          : prev.stoch;
  Tensor x = elu(img_in_.forward(concat_cols(stoch_flat, action), frozen));
  Tensor deter = gru_.step(prev.deter, x, frozen);
  Tensor hp = elu(prior_h_.forward(deter, frozen));
  Tensor dist = prior_out_.forward(hp, frozen);
  if (!cfg_.gaussian_latents)
    dist = dist.reshape({prev.batch(), cfg_.latent_vars, cfg_.latent_classes});
  ModelState out;
  out.deter = deter;
  out.dist = dist;
  out.stoch = latent_sample(dist, rng, sample);
  return out;
}

WorldModel::ObserveOut WorldModel::observe_step(const ModelState& prev,
                                                const Tensor& prev_action, const Tensor& embed,
                                                Rng& rng, bool frozen, bool sample) const {
  ModelState prior = imagine_step(prev, prev_action, rng, frozen, /*sample=*/false);
  Tensor hin = concat_cols(prior.deter, embed);
  Tensor hq = elu(post_h_.forward(hin, frozen));
  Tensor dist = post_out_.forward(hq, frozen);
  if (!cfg_.gaussian_latents)
    dist = dist.reshape({prev.batch(), cfg_.latent_vars, cfg_.latent_classes});
  ModelState post;
  post.deter = prior.deter;
  post.dist = dist;
  post.stoch = latent_sample(dist, rng, sample);
  return {post, prior};
}

Tensor WorldModel::features(const ModelState& s) const {
  Tensor stoch_flat =
      s.stoch.ndim() == 3 ? s.stoch.reshape({s.batch(), cfg_.stoch_dim()}) : s.stoch;
  return concat_cols(s.deter, stoch_flat);
}

Tensor WorldModel::decode_image(const Tensor& feat, bool frozen) const {
  Tensor x = dec_in_.forward(feat, frozen);
  x = x.reshape({feat.dim(0), x.dim(1), 1, 1});
  for (size_t i = 0; i < dec_.size(); ++i) {
    x = dec_[i].forward(x, frozen);
    if (i + 1 < dec_.size()) x = elu(x);
  }
  return x;
}

HeadsOut WorldModel::decode_heads(const ModelState& s, bool frozen) const {
  Tensor feat = features(s);
  HeadsOut out;
  out.image_mean = decode_image(feat, frozen);
  out.reward_mean = reward_.forward(feat, frozen).reshape({s.batch()});
  out.discount_logit = discount_.forward(feat, frozen).reshape({s.batch()});
  return out;
}

Tensor WorldModel::predict_reward(const ModelState& s, bool frozen) const {
  return reward_from_features(features(s), frozen);
}

Tensor WorldModel::predict_discount_prob(const ModelState& s, bool frozen) const {
  return discount_prob_from_features(features(s), frozen);
}

Tensor WorldModel::reward_from_features(const Tensor& feat, bool frozen) const {
  return reward_.forward(feat, frozen).reshape({feat.dim(0)});
}

Tensor WorldModel::discount_prob_from_features(const Tensor& feat, bool frozen) const {
  return sigmoid(discount_.forward(feat, frozen).reshape({feat.dim(0)}));
}

WorldModelLoss WorldModel::loss(const SequenceBatch& batch, Rng& rng) {
  const int64_t B = batch.B, L = batch.L;
  const int64_t N = B * L;
  if (batch.images.dim(0) != N) throw DimensionError("world model loss: batch layout mismatch");

  Tensor embeds = encode(batch.images);
  ModelState state = initial_state(B);
  std::vector<Tensor> post_dists, prior_dists, feats;
  std::vector<ModelState> posts;
  post_dists.reserve(L);
  prior_dists.reserve(L);
  feats.reserve(L);
  posts.reserve(L);
  for (int64_t t = 0; t < L; ++t) {
    Tensor embed_t = slice_rows(embeds, t * B, (t + 1) * B);
    Tensor action_t = slice_rows(batch.actions, t * B, (t + 1) * B);
    ObserveOut oo = observe_step(state, action_t, embed_t, rng);
    post_dists.push_back(oo.post.dist);
    prior_dists.push_back(oo.prior.dist);
    feats.push_back(features(oo.post));
    posts.push_back(detach_state(oo.post));
    state = oo.post;
  }
  Tensor feat_all = concat_rows(feats);

  const int64_t chw = int64_t{1} * cfg_.image_channels * cfg_.image_size * cfg_.image_size;
  Tensor img_feat = cfg_.stop_image_gradients ? stop_grad(feat_all) : feat_all;
  Tensor img_mean = decode_image(img_feat, false);
  Tensor img_lp =
      gaussian_log_prob_unit(img_mean.reshape({N, chw}), batch.images.reshape({N, chw}));

  Tensor rew_feat = cfg_.stop_reward_gradients ? stop_grad(feat_all) : feat_all;
  Tensor rew_mean = reward_.forward(rew_feat);
  Tensor rew_lp = gaussian_log_prob_unit(rew_mean, tanh(batch.rewards).reshape({N, 1}));

  Tensor disc_logit = discount_.forward(feat_all).reshape({N});
  Tensor disc_lp = bernoulli_log_prob(disc_logit, batch.discount_targets);

  Tensor post_all = concat_rows(post_dists);
  Tensor prior_all = concat_rows(prior_dists);
  Tensor kl_loss, kl_value;
  if (cfg_.gaussian_latents) {
    const int64_t S = cfg_.stoch_dim();
    auto split = [&](const Tensor& p) {
      Tensor mean = slice_cols(p, 0, S);
      Tensor std = add_scalar(softplus(slice_cols(p, S, 2 * S)), 0.1);
      return std::make_pair(mean, std);
    };
    auto [pm, ps] = split(post_all);
    auto [qm, qs] = split(prior_all);
    kl_value = diag_gaussian_kl(pm, ps, qm, qs);
    Tensor lhs = diag_gaussian_kl(stop_grad(pm), stop_grad(ps), qm, qs);
    Tensor rhs = diag_gaussian_kl(pm, ps, stop_grad(qm), stop_grad(qs));
    if (cfg_.free_bits > 0.0) {
      lhs = maximum(lhs, cfg_.free_bits);
      rhs = maximum(rhs, cfg_.free_bits);
    }
    kl_loss = add(scale(lhs, cfg_.kl_alpha), scale(rhs, 1.0 - cfg_.kl_alpha));
  } else {
    auto [loss_t, value_t] = kl_balanced(post_all, prior_all, cfg_.kl_alpha, cfg_.free_bits);
    kl_loss = loss_t;
    kl_value = value_t;
  }

  Tensor nll = add(add(neg(img_lp), neg(rew_lp)), add(neg(disc_lp), scale(kl_loss, cfg_.kl_scale)));
  Tensor total = mean_all(nll);
  check_finite(total, "world model loss");

  WorldModelLoss out;
  out.total = total;
  out.posteriors = concat_states(posts);
  out.metrics["wm_loss"] = total.item();
  out.metrics["image_loss"] = -mean_value(img_lp);
  out.metrics["reward_loss"] = -mean_value(rew_lp);
  out.metrics["discount_loss"] = -mean_value(disc_lp);
  out.metrics["kl_value"] = mean_value(kl_value);
  out.metrics["kl_loss"] = mean_value(kl_loss);
  if (!cfg_.gaussian_latents) {
    out.metrics["prior_entropy"] = mean_value(entropy_categorical(prior_all.detach()));
    out.metrics["post_entropy"] = mean_value(entropy_categorical(post_all.detach()));
  }
  return out;
}

std::vector<Parameter*> WorldModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : enc_) l.params(out);
  dec_in_.params(out);
  for (auto& l : dec_) l.params(out);
  img_in_.params(out);
  gru_.params(out);
  prior_h_.params(out);
  prior_out_.params(out);
  post_h_.params(out);
  post_out_.params(out);
  reward_.params(out);
  discount_.params(out);
  return out;
}

}  // namespace dreamcc
