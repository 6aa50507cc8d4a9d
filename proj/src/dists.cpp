#include "dreamcc/dists.hpp"

#include <cmath>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;    // 0.5*ln(2*pi)
constexpr double kHalfLog2PiE = 1.4189385332046727;   // 0.5*ln(2*pi*e)
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

// sum over the latent-variable axis when one is present ([B,K] -> [B])
Tensor reduce_vars(const Tensor& t) {
  if (kKlSumOverLatents && t.ndim() >= 2) return sum_rows(t);
  return t;
}

// standard normal CDF as a tensor op
Tensor phi_cdf(const Tensor& z) {
  return scale(add_scalar(erf(scale(z, kInvSqrt2)), 1.0), 0.5);
}

// standard normal pdf as a tensor op
Tensor phi_pdf(const Tensor& z) {
  return scale(exp(scale(square(z), -0.5)), kInvSqrt2Pi);
}

void require_positive_std(const Tensor& std) {
  for (int64_t i = 0; i < std.size(); ++i)
    if (!(std.at(i) > 0.0)) throw DomainError("truncated normal: std must be positive");
}

}  // namespace

Tensor sample_straight_through(const Tensor& logits, Rng& rng) {
  const int64_t C = logits.shape().back();
  Tensor p = softmax(logits);
  auto idx = sample_categorical_rows(logits, rng);
  Tensor oh = one_hot_rows(idx, C, logits.dtype()).reshape(logits.shape());
  return add(oh, sub(p, stop_grad(p)));
}

Tensor mode_straight_through(const Tensor& logits) {
  const int64_t C = logits.shape().back();
  const int64_t R = logits.size() / C;
  std::vector<int64_t> idx(static_cast<size_t>(R));
  for (int64_t r = 0; r < R; ++r) {
    int64_t best = 0;
    double best_v = logits.at(r * C);
    for (int64_t c = 1; c < C; ++c) {
      const double v = logits.at(r * C + c);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    idx[static_cast<size_t>(r)] = best;
  }
  Tensor p = softmax(logits);
  Tensor oh = one_hot_rows(idx, C, logits.dtype()).reshape(logits.shape());
  return add(oh, sub(p, stop_grad(p)));
}

Tensor kl_categorical(const Tensor& p_logits, const Tensor& q_logits) {
  if (p_logits.shape() != q_logits.shape())
    throw DimensionError("kl_categorical: shape mismatch");
  Tensor p = softmax(p_logits);
  Tensor diff = sub(log_softmax(p_logits), log_softmax(q_logits));
  return reduce_vars(sum_rows(mul(p, diff)));
}

std::pair<Tensor, Tensor> kl_balanced(const Tensor& post_logits, const Tensor& prior_logits,
                                      double alpha, double free_bits) {
  if (alpha < 0.0 || alpha > 1.0) throw DomainError("kl_balanced: alpha must be in [0,1]");
  Tensor value = kl_categorical(post_logits, prior_logits);
  Tensor lhs = kl_categorical(stop_grad(post_logits), prior_logits);  // trains the prior
  Tensor rhs = kl_categorical(post_logits, stop_grad(prior_logits));  // regularises the posterior
  if (free_bits > 0.0) {
    lhs = maximum(lhs, free_bits);
    rhs = maximum(rhs, free_bits);
  }
  Tensor loss = add(scale(lhs, alpha), scale(rhs, 1.0 - alpha));
  return {loss, value};
}

Tensor entropy_categorical(const Tensor& logits) {
  Tensor p = softmax(logits);
  return reduce_vars(neg(sum_rows(mul(p, log_softmax(logits)))));
}

Tensor log_prob_onehot(const Tensor& logits, const Tensor& onehot) {
  if (logits.shape() != onehot.shape())
    throw DimensionError("log_prob_onehot: shape mismatch");
  return reduce_vars(sum_rows(mul(log_softmax(logits), onehot)));
}

Tensor gaussian_log_prob_unit(const Tensor& mean, const Tensor& target) {
  if (mean.shape() != target.shape())
    throw DimensionError("gaussian_log_prob_unit: shape mismatch");
  Tensor el = add_scalar(scale(square(sub(target, mean)), -0.5), -kHalfLog2Pi);
  return sum_rows(el);
}

Tensor bernoulli_log_prob(const Tensor& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape())
    throw DimensionError("bernoulli_log_prob: shape mismatch");
  // log sigmoid(l) = -softplus(-l); log(1 - sigmoid(l)) = -softplus(l)
  Tensor sp_neg = softplus(neg(logits));
  Tensor sp_pos = softplus(logits);
  return neg(add(mul(targets, sp_neg), mul(one_minus(targets), sp_pos)));
}

Tensor diag_gaussian_kl(const Tensor& mean_p, const Tensor& std_p, const Tensor& mean_q,
                        const Tensor& std_q) {
  Tensor term = div(add(square(std_p), square(sub(mean_p, mean_q))),
                    scale(square(std_q), 2.0));
  Tensor el = add_scalar(add(sub(log(std_q), log(std_p)), term), -0.5);
  return sum_rows(el);
}

Tensor sample_truncated_normal(const Tensor& mean, const Tensor& std, double low, double high,
                               Rng& rng) {
  if (mean.shape() != std.shape())
    throw DimensionError("sample_truncated_normal: mean/std shape mismatch");
  if (!(low < high)) throw DomainError("sample_truncated_normal: low must be < high");
  require_positive_std(std);
  // inverse-CDF draw from the detached parameters ...
  Tensor z = Tensor::zeros(mean.shape(), mean.dtype());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int64_t i = 0; i < mean.size(); ++i) {
    const double mu = mean.at(i), sd = std.at(i);
    const double a = (low - mu) / sd, b = (high - mu) / sd;
    const double pa = normal_cdf(a), pb = normal_cdf(b);
    double p = pa + uni(rng) * (pb - pa);
    p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    z.set_at(i, normal_quantile(p));
  }
  // ... then reparameterise so mean/std receive pathwise gradients, and pass
  // the boundary clamp through.
  Tensor x = add(mean, mul(std, z));
  return clamp_straight_through(x, low, high);
}

Tensor truncated_normal_log_prob(const Tensor& mean, const Tensor& std, double low, double high,
                                 const Tensor& x) {
  if (mean.shape() != std.shape() || mean.shape() != x.shape())
    throw DimensionError("truncated_normal_log_prob: shape mismatch");
  Tensor alpha = div(add_scalar(neg(mean), low), std);
  Tensor beta = div(add_scalar(neg(mean), high), std);
  Tensor z_norm = maximum(sub(phi_cdf(beta), phi_cdf(alpha)), kProbFloor);
  Tensor score = div(sub(x, mean), std);
  Tensor el = sub(add_scalar(scale(square(score), -0.5), -kHalfLog2Pi),
                  add(log(std), log(z_norm)));
  return sum_rows(el);
}

Tensor truncated_normal_entropy(const Tensor& mean, const Tensor& std, double low, double high) {
  if (mean.shape() != std.shape())
    throw DimensionError("truncated_normal_entropy: shape mismatch");
  Tensor alpha = div(add_scalar(neg(mean), low), std);
  Tensor beta = div(add_scalar(neg(mean), high), std);
  Tensor z_norm = maximum(sub(phi_cdf(beta), phi_cdf(alpha)), kProbFloor);
  Tensor frac = div(sub(mul(alpha, phi_pdf(alpha)), mul(beta, phi_pdf(beta))),
                    scale(z_norm, 2.0));
  Tensor el = add(add_scalar(add(log(std), log(z_norm)), kHalfLog2PiE), frac);
  return sum_rows(el);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Wichura's PPND16 (algorithm AS 241): double-precision inverse normal CDF.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0,1)");
  const double q = p - 0.5;
  double r, num, den;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
              1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
            1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
              5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
            4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  val = num / den;
  return q < 0.0 ? -val : val;
}

}  // namespace dreamcc
