#include "dreamcc/behavior.hpp"

#include <cmath>
#include <string>

#include "dreamcc/dists.hpp"
#include "dreamcc/errors.hpp"

namespace dreamcc {

std::vector<Tensor> lambda_returns(const std::vector<Tensor>& rewards,
                                   const std::vector<Tensor>& discounts,
                                   const std::vector<Tensor>& values, double lambda) {
  const size_t H = rewards.size();
  if (H == 0) throw UsageError("lambda_returns: empty horizon");
  if (discounts.size() != H || values.size() != H)
    throw DimensionError("lambda_returns: rewards/discounts/values must all hold H entries");
  std::vector<Tensor> targets(H);
  targets[H - 1] = values[H - 1];  // V^lambda_H = v(z_H)
  for (int64_t i = static_cast<int64_t>(H) - 2; i >= 0; --i) {
    Tensor mix = add(scale(values[i + 1], 1.0 - lambda), scale(targets[i + 1], lambda));
    targets[i] = add(rewards[i], mul(discounts[i], mix));
  }
  return targets;
}

std::vector<Tensor> cumulative_weights(const std::vector<Tensor>& discounts) {
  if (discounts.empty()) throw UsageError("cumulative_weights: empty horizon");
  std::vector<Tensor> w(discounts.size());
  w[0] = Tensor::constant(discounts[0].shape(), 1.0, discounts[0].dtype());
  for (size_t i = 1; i < discounts.size(); ++i) w[i] = mul(w[i - 1], discounts[i - 1].detach());
  return w;
}

ActorCritic::ActorCritic(const BehaviorConfig& cfg, int64_t feature_dim, uint64_t seed)
    : cfg_(cfg) {
  if (cfg.action_dim <= 0) throw UsageError("behavior: action_dim must be set");
  if (cfg.horizon < 2) throw UsageError("behavior: horizon must be at least 2");
  if (cfg.rho < 0.0 || cfg.rho > 1.0) throw UsageError("behavior: rho must lie in [0,1]");
  const int64_t actor_out =
      cfg.discrete_actions ? cfg.action_dim : 2 * static_cast<int64_t>(cfg.action_dim);
  Rng rng = make_stream(seed, "behavior_init");
  actor_ = Mlp("actor", feature_dim, cfg.mlp_units, cfg.mlp_layers, actor_out, rng, cfg.dtype,
               /*zero_init_out=*/true);
  critic_ = Mlp("critic", feature_dim, cfg.mlp_units, cfg.mlp_layers, 1, rng, cfg.dtype);
  slow_critic_ = Mlp("slow_critic", feature_dim, cfg.mlp_units, cfg.mlp_layers, 1, rng, cfg.dtype);
  std::vector<Parameter*> fast, slow;
  critic_.params(fast);
  slow_critic_.params(slow);
  for (size_t i = 0; i < fast.size(); ++i) slow[i]->copy_from(*fast[i]);
}

ActorCritic::PolicyDist ActorCritic::policy(const Tensor& feat, bool frozen) const {
  PolicyDist d;
  Tensor raw = actor_.forward(feat, frozen);
  if (cfg_.discrete_actions) {
    d.logits = raw;
  } else {
    const int64_t A = cfg_.action_dim;
    d.mean = tanh(slice_cols(raw, 0, A));
    d.std = add_scalar(scale(sigmoid(scale(slice_cols(raw, A, 2 * A), 0.5)), 2.0), cfg_.min_std);
  }
  return d;
}

Tensor ActorCritic::policy_sample(const PolicyDist& d, Rng& rng) const {
  if (cfg_.discrete_actions) return sample_straight_through(d.logits, rng);
  return sample_truncated_normal(d.mean, d.std, cfg_.action_low, cfg_.action_high, rng);
}

Tensor ActorCritic::policy_mode(const PolicyDist& d) const {
  if (cfg_.discrete_actions) return mode_straight_through(d.logits);
  return clamp_straight_through(d.mean, cfg_.action_low, cfg_.action_high);
}

Tensor ActorCritic::policy_log_prob(const PolicyDist& d, const Tensor& action) const {
  if (cfg_.discrete_actions) return log_prob_onehot(d.logits, action);
  return truncated_normal_log_prob(d.mean, d.std, cfg_.action_low, cfg_.action_high, action);
}

Tensor ActorCritic::policy_entropy(const PolicyDist& d) const {
  if (cfg_.discrete_actions) return entropy_categorical(d.logits);
  return truncated_normal_entropy(d.mean, d.std, cfg_.action_low, cfg_.action_high);
}

ImaginedTrajectory ActorCritic::imagine_rollout(const WorldModel& wm, const ModelState& start,
                                                int horizon, Rng& rng) const {
  if (horizon < 0) throw UsageError("imagine_rollout: horizon must be non-negative");
  const bool live_actor = cfg_.rho < 1.0;  // dynamics path wants actor grads through actions
  ImaginedTrajectory traj;
  traj.horizon = horizon;
  traj.N = start.batch();
  traj.states.reserve(horizon + 1);
  traj.feats.reserve(horizon + 1);
  traj.states.push_back(detach_state(start));
  traj.feats.push_back(wm.features(traj.states[0]));
  if (horizon == 0) {  // degenerate: start states only
    traj.values.push_back(slow_critic_value(traj.feats[0], /*frozen=*/true));
    return traj;
  }
  for (int t = 0; t < horizon; ++t) {
    PolicyDist d = policy(traj.feats.back(), /*frozen=*/!live_actor);
    Tensor action = policy_sample(d, rng);
    ModelState next = wm.imagine_step(traj.states.back(), action, rng, /*frozen=*/true,
                                      /*sample=*/true);
    traj.actions.push_back(action);
    traj.states.push_back(next);
    traj.feats.push_back(wm.features(next));
  }

  // reward/discount heads over states 1..H in one pass
  std::vector<Tensor> next_feats(traj.feats.begin() + 1, traj.feats.end());
  Tensor feat_next = concat_rows(next_feats);                                   // [H*N, F]
  Tensor r_all = wm.reward_from_features(feat_next, /*frozen=*/true);           // [H*N]
  Tensor g_all = scale(wm.discount_prob_from_features(feat_next, true), cfg_.discount);
  Tensor feat_all = concat_rows(traj.feats);                                    // [(H+1)*N, F]
  Tensor v_all = slow_critic_value(feat_all, /*frozen=*/true);                  // [(H+1)*N]
  const int64_t N = traj.N;
  for (int t = 0; t < horizon; ++t) {
    traj.rewards.push_back(slice_rows(r_all, t * N, (t + 1) * N));
    traj.discounts.push_back(slice_rows(g_all, t * N, (t + 1) * N));
  }
  for (int t = 0; t <= horizon; ++t)
    traj.values.push_back(slice_rows(v_all, t * N, (t + 1) * N));

  std::vector<Tensor> boot(traj.values.begin() + 1, traj.values.end());  // v(z_1)..v(z_H)
  traj.targets = lambda_returns(traj.rewards, traj.discounts, boot, cfg_.lambda);
  traj.weights = cumulative_weights(traj.discounts);
  return traj;
}

Tensor ActorCritic::critic_loss(const ImaginedTrajectory& traj) const {
  const int H = traj.horizon;
  if (H < 2) return Tensor::zeros({1}, cfg_.dtype);  // no usable step
  std::vector<Tensor> feats, tgts, ws;
  for (int i = 0; i + 1 < H; ++i) {  // t = 1..H-1 -> states[1..H-1]
    feats.push_back(stop_grad(traj.feats[i + 1]));
    tgts.push_back(stop_grad(traj.targets[i]));
    ws.push_back(stop_grad(traj.weights[i]));
  }
  Tensor v = critic_value(concat_rows(feats), /*frozen=*/false);
  Tensor err = sub(v, concat_rows(tgts));
  Tensor l = mul(concat_rows(ws), scale(square(err), 0.5));
  return scale(sum_all(l), 1.0 / static_cast<double>(traj.N));
}

Tensor ActorCritic::actor_loss(const ImaginedTrajectory& traj) const {
  const int H = traj.horizon;
  if (H < 2) return Tensor::zeros({1}, cfg_.dtype);  // no usable step
  std::vector<Tensor> feats, tgts, acts, ws;
  for (int i = 0; i + 1 < H; ++i) {
    feats.push_back(stop_grad(traj.feats[i + 1]));
    tgts.push_back(traj.targets[i]);  // keeps the dynamics graph when rho < 1
    acts.push_back(stop_grad(traj.actions[i + 1]));
    ws.push_back(stop_grad(traj.weights[i]));
  }
  Tensor feat = concat_rows(feats);
  Tensor target = concat_rows(tgts);
  PolicyDist d = policy(feat, /*frozen=*/false);
  Tensor terms = scale(policy_entropy(d), -cfg_.eta);
  if (cfg_.rho > 0.0) {
    Tensor baseline = critic_value(feat, /*frozen=*/true);
    Tensor adv = stop_grad(sub(target, baseline));
    Tensor lp = policy_log_prob(d, concat_rows(acts));
    terms = add(terms, scale(mul(lp, adv), -cfg_.rho));
  }
  if (cfg_.rho < 1.0) terms = add(terms, scale(target, -(1.0 - cfg_.rho)));
  Tensor l = mul(concat_rows(ws), terms);
  return scale(sum_all(l), 1.0 / static_cast<double>(traj.N));
}

void ActorCritic::update_slow_critic(int64_t step_counter) {
  if (cfg_.slow_critic_interval <= 0 || step_counter % cfg_.slow_critic_interval != 0) return;
  std::vector<Parameter*> fast, slow;
  critic_.params(fast);
  slow_critic_.params(slow);
  for (size_t i = 0; i < fast.size(); ++i) slow[i]->copy_from(*fast[i]);
}

Tensor ActorCritic::act(const Tensor& feat, Rng& rng, bool sample) const {
  PolicyDist d = policy(feat, /*frozen=*/true);
  Tensor a = sample ? policy_sample(d, rng) : policy_mode(d);
  return a.detach();
}

std::map<std::string, double> ActorCritic::rollout_metrics(const ImaginedTrajectory& traj) const {
  std::map<std::string, double> m;
  std::vector<Tensor> feats(traj.feats.begin() + 1, traj.feats.end() - 1);
  for (auto& f : feats) f = stop_grad(f);
  PolicyDist d = policy(concat_rows(feats), /*frozen=*/true);
  m["policy_entropy"] = mean_all(policy_entropy(d)).item();
  m["value_mean"] = mean_all(stop_grad(concat_rows(traj.values))).item();
  m["target_mean"] = mean_all(stop_grad(concat_rows(traj.targets))).item();
  m["imag_reward_mean"] = mean_all(stop_grad(concat_rows(traj.rewards))).item();
  m["imag_discount_mean"] = mean_all(stop_grad(concat_rows(traj.discounts))).item();
  return m;
}

Tensor ActorCritic::critic_value(const Tensor& feat, bool frozen) const {
  return critic_.forward(feat, frozen).reshape({feat.dim(0)});
}

Tensor ActorCritic::slow_critic_value(const Tensor& feat, bool frozen) const {
  return slow_critic_.forward(feat, frozen).reshape({feat.dim(0)});
}

std::vector<Parameter*> ActorCritic::actor_parameters() {
  std::vector<Parameter*> out;
  actor_.params(out);
  return out;
}

std::vector<Parameter*> ActorCritic::critic_parameters() {
  std::vector<Parameter*> out;
  critic_.params(out);
  return out;
}

std::vector<Parameter*> ActorCritic::slow_critic_parameters() {
  std::vector<Parameter*> out;
  slow_critic_.params(out);
  return out;
}

}  // namespace dreamcc
