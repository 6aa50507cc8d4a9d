#include "dreamcc/nn.hpp"

#include <cmath>

namespace dreamcc {

void init_trunc_normal(Tensor& t, int64_t fan_in, Rng& rng) {
  const double std = 1.0 / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int64_t i = 0; i < t.size(); ++i) {
    double z;
    do {
      z = normal(rng);
    } while (std::abs(z) > 2.0);
    t.set_at(i, z * std);
  }
}

DenseLayer::DenseLayer(const std::string& name, int64_t in, int64_t out, Rng& rng, DType dt,
                       bool zero_init) {
  Tensor wt = Tensor::zeros({in, out}, dt);
  if (!zero_init) init_trunc_normal(wt, in, rng);
  w = Parameter(name + "/w", wt);
  b = Parameter(name + "/b", Tensor::zeros({out}, dt));
}

Tensor DenseLayer::forward(const Tensor& x, bool frozen) const {
  return add_bias(matmul(x, frozen ? w.frozen() : w.value), frozen ? b.frozen() : b.value);
}

void DenseLayer::params(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

LayerNormParams::LayerNormParams(const std::string& name, int64_t dim, DType dt) {
  gain = Parameter(name + "/gain", Tensor::constant({dim}, 1.0, dt));
  bias = Parameter(name + "/bias", Tensor::zeros({dim}, dt));
}

Tensor LayerNormParams::forward(const Tensor& x, bool frozen) const {
  return layer_norm(x, frozen ? gain.frozen() : gain.value, frozen ? bias.frozen() : bias.value);
}

void LayerNormParams::params(std::vector<Parameter*>& out) {
  out.push_back(&gain);
  out.push_back(&bias);
}

Conv2dLayer::Conv2dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, int ksize,
                         int stride_, Rng& rng, DType dt)
    : stride(stride_) {
  Tensor kt = Tensor::zeros({out_ch, in_ch, ksize, ksize}, dt);
  init_trunc_normal(kt, in_ch * ksize * ksize, rng);
  k = Parameter(name + "/k", kt);
  b = Parameter(name + "/b", Tensor::zeros({out_ch}, dt));
}

Tensor Conv2dLayer::forward(const Tensor& x, bool frozen) const {
  return add_channel_bias(conv2d(x, frozen ? k.frozen() : k.value, stride),
                          frozen ? b.frozen() : b.value);
}

void Conv2dLayer::params(std::vector<Parameter*>& out) {
  out.push_back(&k);
  out.push_back(&b);
}

ConvT2dLayer::ConvT2dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, int ksize,
                           int stride_, int64_t out_h_, int64_t out_w_, Rng& rng, DType dt)
    : stride(stride_), out_h(out_h_), out_w(out_w_) {
  Tensor kt = Tensor::zeros({in_ch, out_ch, ksize, ksize}, dt);
  init_trunc_normal(kt, in_ch * ksize * ksize, rng);
  k = Parameter(name + "/k", kt);
  b = Parameter(name + "/b", Tensor::zeros({out_ch}, dt));
}

Tensor ConvT2dLayer::forward(const Tensor& x, bool frozen) const {
  return add_channel_bias(
      conv2d_transpose(x, frozen ? k.frozen() : k.value, stride, out_h, out_w),
      frozen ? b.frozen() : b.value);
}

void ConvT2dLayer::params(std::vector<Parameter*>& out) {
  out.push_back(&k);
  out.push_back(&b);
}

GruCell::GruCell(const std::string& name, int64_t hidden, int64_t input, bool layer_norm_,
                 Rng& rng, DType dt)
    : layer_norm(layer_norm_) {
  const int64_t in = hidden + input;
  auto make_w = [&](const char* gate) {
    Tensor t = Tensor::zeros({in, hidden}, dt);
    init_trunc_normal(t, in, rng);
    return Parameter(name + "/w_" + gate, t);
  };
  auto make_b = [&](const char* gate) {
    return Parameter(name + "/b_" + gate, Tensor::zeros({hidden}, dt));
  };
  w_u = make_w("u");
  b_u = make_b("u");
  w_r = make_w("r");
  b_r = make_b("r");
  w_n = make_w("n");
  b_n = make_b("n");
  if (layer_norm) {
    ln_u = LayerNormParams(name + "/ln_u", hidden, dt);
    ln_r = LayerNormParams(name + "/ln_r", hidden, dt);
    ln_n = LayerNormParams(name + "/ln_n", hidden, dt);
  }
}

Tensor GruCell::step(const Tensor& h, const Tensor& x, bool frozen) const {
  auto pick = [frozen](const Parameter& p) { return frozen ? p.frozen() : p.value; };
  GruParams p;
  p.w_u = pick(w_u);
  p.b_u = pick(b_u);
  p.w_r = pick(w_r);
  p.b_r = pick(b_r);
  p.w_n = pick(w_n);
  p.b_n = pick(b_n);
  if (layer_norm) {
    p.ln_u_gain = pick(ln_u.gain);
    p.ln_u_bias = pick(ln_u.bias);
    p.ln_r_gain = pick(ln_r.gain);
    p.ln_r_bias = pick(ln_r.bias);
    p.ln_n_gain = pick(ln_n.gain);
    p.ln_n_bias = pick(ln_n.bias);
  }
  return gru_step(h, x, p, layer_norm);
}

Tensor gru_step(const Tensor& h, const Tensor& x, const GruParams& p, bool use_layer_norm) {
  if (h.ndim() != 2 || x.ndim() != 2 || h.dim(0) != x.dim(0))
    throw DimensionError("gru_step: h and x must be [B,D] and [B,E]");
  Tensor hx = concat_cols(h, x);
  Tensor pre_u = add_bias(matmul(hx, p.w_u), p.b_u);
  Tensor pre_r = add_bias(matmul(hx, p.w_r), p.b_r);
  if (use_layer_norm) {
    pre_u = layer_norm(pre_u, p.ln_u_gain, p.ln_u_bias);
    pre_r = layer_norm(pre_r, p.ln_r_gain, p.ln_r_bias);
  }
  Tensor u = sigmoid(pre_u);
  Tensor r = sigmoid(pre_r);
  Tensor rhx = concat_cols(mul(r, h), x);
  Tensor pre_n = add_bias(matmul(rhx, p.w_n), p.b_n);
  if (use_layer_norm) pre_n = layer_norm(pre_n, p.ln_n_gain, p.ln_n_bias);
  Tensor n = tanh(pre_n);
  return add(mul(one_minus(u), n), mul(u, h));
}

void GruCell::params(std::vector<Parameter*>& out) {
  out.push_back(&w_u);
  out.push_back(&b_u);
  out.push_back(&w_r);
  out.push_back(&b_r);
  out.push_back(&w_n);
  out.push_back(&b_n);
  if (layer_norm) {
    ln_u.params(out);
    ln_r.params(out);
    ln_n.params(out);
  }
}

Mlp::Mlp(const std::string& name, int64_t in, int64_t units, int layers, int64_t out_dim,
         Rng& rng, DType dt, bool zero_init_out) {
  int64_t prev = in;
  for (int i = 0; i < layers; ++i) {
    hidden.emplace_back(name + "/h" + std::to_string(i), prev, units, rng, dt);
    prev = units;
  }
  out = DenseLayer(name + "/out", prev, out_dim, rng, dt, zero_init_out);
}

Tensor Mlp::forward(const Tensor& x, bool frozen) const {
  Tensor h = x;
  for (const auto& layer : hidden) h = elu(layer.forward(h, frozen));
  return out.forward(h, frozen);
}

void Mlp::params(std::vector<Parameter*>& out_params) {
  for (auto& layer : hidden) layer.params(out_params);
  out.params(out_params);
}

}  // namespace dreamcc
