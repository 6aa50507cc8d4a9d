#pragma once

#include <utility>

#include "dreamcc/tensor.hpp"

namespace dreamcc {

// Probabilities are floored here before any direct log; logits paths go
// through log_softmax, which never forms the raw probability.
inline constexpr double kProbFloor = 1e-8;

// KL between latent posteriors/priors is summed over the categorical
// variables (KL of the factorised joint). Fixed convention, not a config key.
inline constexpr bool kKlSumOverLatents = true;

// One draw per categorical; forward value is exactly the one-hot sample,
// backward is the softmax gradient:
//   sample = one_hot(draw(logits));  probs = softmax(logits)
//   sample = sample + probs - stop_grad(probs)
// logits: [..., C]; a [B,K,C] tensor is K independent categoricals per row.
Tensor sample_straight_through(const Tensor& logits, Rng& rng);

// Mode (argmax) as one-hot with the same straight-through gradient.
Tensor mode_straight_through(const Tensor& logits);

// KL(p || q) over the last axis; for rank >= 3 the result is additionally
// summed over axis -2 (the K latent variables): [B,K,C] -> [B].
Tensor kl_categorical(const Tensor& p_logits, const Tensor& q_logits);

// Balanced KL (two stop-gradient copies):
//   loss = alpha * max(KL(sg(post) || prior), free_bits)
//        + (1-alpha) * max(KL(post || sg(prior)), free_bits)
// Returns {loss, value} per batch element, value = unbalanced KL (no sg).
std::pair<Tensor, Tensor> kl_balanced(const Tensor& post_logits, const Tensor& prior_logits,
                                      double alpha, double free_bits = 0.0);

// Entropy over the last axis, summed over axis -2 for rank >= 3.
Tensor entropy_categorical(const Tensor& logits);

// log prob of a one-hot selection; same reduction rule as kl_categorical.
Tensor log_prob_onehot(const Tensor& logits, const Tensor& onehot);

// Unit-variance Gaussian log likelihood, summed over the last axis:
//   sum_d [ -0.5*(target-mean)^2 - 0.5*ln(2*pi) ]   -> [...]
Tensor gaussian_log_prob_unit(const Tensor& mean, const Tensor& target);

// Bernoulli(sigmoid(logit)) log likelihood of targets in {0,1}; elementwise.
Tensor bernoulli_log_prob(const Tensor& logits, const Tensor& targets);

// Diagonal-Gaussian KL (p || q), summed over the last axis.
Tensor diag_gaussian_kl(const Tensor& mean_p, const Tensor& std_p, const Tensor& mean_q,
                        const Tensor& std_q);

// ---------------------------------------------------------------------------
// Truncated normal on [low, high] (continuous-control actor).
// ---------------------------------------------------------------------------

// Exact inverse-CDF sample; gradients reach mean/std by reparameterisation
// through a detached standard score, and the final clamp to the support is
// straight-through.
Tensor sample_truncated_normal(const Tensor& mean, const Tensor& std, double low, double high,
                               Rng& rng);

// log density of x under TN(mean, std, low, high), summed over the last axis.
Tensor truncated_normal_log_prob(const Tensor& mean, const Tensor& std, double low, double high,
                                 const Tensor& x);

// differential entropy, summed over the last axis.
Tensor truncated_normal_entropy(const Tensor& mean, const Tensor& std, double low, double high);

// scalar standard-normal helpers (double precision; used by sampling and tests)
double normal_cdf(double x);
double normal_quantile(double p);  // inverse CDF, Wichura's PPND16

}  // namespace dreamcc
