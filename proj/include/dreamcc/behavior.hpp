#pragma once

#include <map>
#include <string>
#include <vector>

#include "dreamcc/nn.hpp"
#include "dreamcc/tensor.hpp"
#include "dreamcc/world_model.hpp"

namespace dreamcc {

struct BehaviorConfig {
  int horizon = 15;            // H
  double lambda = 0.95;        // lambda-target mixing
  double discount = 0.999;     // gamma; scales the predicted discount
  double rho = 1.0;            // 1 = pure Reinforce, 0 = pure dynamics backprop
  double eta = 1e-3;           // entropy scale
  int slow_critic_interval = 100;
  int mlp_layers = 4;
  int mlp_units = 400;
  bool discrete_actions = true;
  int action_dim = 0;
  double action_low = -1.0, action_high = 1.0;  // continuous support
  double min_std = 0.1;
  DType dtype = DType::kF32;
};

// Index convention (t is the paper's step index, arrays are 0-based):
//   states[i]    = z_i for i = 0..H           (states[0] is the start state)
//   actions[i]   = a_i taken at state i        i = 0..H-1
//   rewards[i]   = r_{i+1} decoded at state i+1
//   discounts[i] = gamma_{i+1} in [0, gamma]
//   values[i]    = v_slow(z_i)                 i = 0..H
//   targets[i]   = V^lambda_{i+1}; targets[H-1] = values[H] (bootstrap only)
//   weights[i]   = w_{i+1}, w_1 = 1, w_{t+1} = w_t * gamma_t (detached)
struct ImaginedTrajectory {
  int64_t N = 0;
  int horizon = 0;
  std::vector<ModelState> states;
  std::vector<Tensor> feats;  // cached features(states[i])
  std::vector<Tensor> actions;
  std::vector<Tensor> rewards;
  std::vector<Tensor> discounts;
  std::vector<Tensor> values;
  std::vector<Tensor> targets;
  std::vector<Tensor> weights;
};

// V^lambda_t = r_t + gamma_t * ((1-lambda) v(z_{t+1}) + lambda V^lambda_{t+1}),
// V^lambda_H = v(z_H). Arrays hold t = 1..H; values[i] = v(z_{i+1}).
std::vector<Tensor> lambda_returns(const std::vector<Tensor>& rewards,
                                   const std::vector<Tensor>& discounts,
                                   const std::vector<Tensor>& values, double lambda);

// weights[0] = 1; weights[i] = weights[i-1] * discounts[i-1] (detached inputs).
std::vector<Tensor> cumulative_weights(const std::vector<Tensor>& discounts);

class ActorCritic {
 public:
  ActorCritic(const BehaviorConfig& cfg, int64_t feature_dim, uint64_t seed);

  const BehaviorConfig& config() const { return cfg_; }

  // Rolls the frozen world model forward `horizon` steps from every start
  // state under the current policy. World-model parameters enter the graph
  // as constants; for rho < 1 the actions keep reparameterised /
  // straight-through gradients so the dynamics path can train the actor.
  ImaginedTrajectory imagine_rollout(const WorldModel& wm, const ModelState& start, int horizon,
                                     Rng& rng) const;

  // mean over N of sum_{t=1}^{H-1} w_t * 0.5 (v(z_t) - sg(V^lambda_t))^2.
  // Gradients reach only the fast critic.
  Tensor critic_loss(const ImaginedTrajectory& traj) const;

  // mean over N of sum_{t=1}^{H-1} w_t * (
  //     -rho ln pi(a_t | z_t) sg(V^lambda_t - v(z_t))
  //     -(1-rho) V^lambda_t  -  eta H[a_t | z_t] )
  Tensor actor_loss(const ImaginedTrajectory& traj) const;

  // Copies fast critic -> slow critic when step_counter % interval == 0.
  void update_slow_critic(int64_t step_counter);

  // Action for a feature row batch. sample=false gives the distribution mode.
  // One-hot rows (discrete) or box values (continuous); no gradient flow.
  Tensor act(const Tensor& feat, Rng& rng, bool sample) const;

  Tensor critic_value(const Tensor& feat, bool frozen) const;       // fast critic, [N]
  Tensor slow_critic_value(const Tensor& feat, bool frozen) const;  // [N]

  // Diagnostics over a rollout: policy_entropy, value_mean, target_mean,
  // imag_reward_mean, imag_discount_mean. No gradients.
  std::map<std::string, double> rollout_metrics(const ImaginedTrajectory& traj) const;

  std::vector<Parameter*> actor_parameters();
  std::vector<Parameter*> critic_parameters();      // fast critic only
  std::vector<Parameter*> slow_critic_parameters(); // checkpointed, not optimised

 private:
  struct PolicyDist {
    Tensor logits;     // discrete
    Tensor mean, std;  // continuous
  };
  PolicyDist policy(const Tensor& feat, bool frozen) const;
  Tensor policy_sample(const PolicyDist& d, Rng& rng) const;  // keeps grads to actor
  Tensor policy_mode(const PolicyDist& d) const;
  Tensor policy_log_prob(const PolicyDist& d, const Tensor& action) const;
  Tensor policy_entropy(const PolicyDist& d) const;

  BehaviorConfig cfg_;
  Mlp actor_, critic_, slow_critic_;
};

}  // namespace dreamcc
