#pragma once

#include <string>
#include <vector>

#include "dreamcc/optim.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc {

// Truncated-normal fan-in init: std = 1/sqrt(fan_in), resampled beyond 2 std.
void init_trunc_normal(Tensor& t, int64_t fan_in, Rng& rng);

struct DenseLayer {
  Parameter w, b;
  DenseLayer() = default;
  // zero_init makes the layer output exactly 0 at start (actor head).
  DenseLayer(const std::string& name, int64_t in, int64_t out, Rng& rng,
             DType dt = DType::kF32, bool zero_init = false);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
  int64_t in_dim() const { return w.value.dim(0); }
  int64_t out_dim() const { return w.value.dim(1); }
};

struct LayerNormParams {
  Parameter gain, bias;
  LayerNormParams() = default;
  LayerNormParams(const std::string& name, int64_t dim, DType dt);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
};

struct Conv2dLayer {
  Parameter k, b;
  int stride = 1;
  Conv2dLayer() = default;
  Conv2dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, int ksize, int stride,
              Rng& rng, DType dt = DType::kF32);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
};

struct ConvT2dLayer {
  Parameter k, b;  // k: [in_ch, out_ch, ksize, ksize]
  int stride = 1;
  int64_t out_h = 0, out_w = 0;
  ConvT2dLayer() = default;
  ConvT2dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, int ksize, int stride,
               int64_t out_h, int64_t out_w, Rng& rng, DType dt = DType::kF32);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
};

// Gate convention (fixed; covered by unit tests):
//   u = sigmoid(W_u [h,x] + b_u)          update/carry gate
//   r = sigmoid(W_r [h,x] + b_r)          reset gate
//   n = tanh   (W_n [r*h, x] + b_n)       candidate
//   h' = (1-u) * n + u * h
// With layer_norm, each pre-activation is layer-normalised before its
// nonlinearity.
struct GruCell {
  Parameter w_u, b_u, w_r, b_r, w_n, b_n;
  LayerNormParams ln_u, ln_r, ln_n;
  bool layer_norm = false;
  GruCell() = default;
  GruCell(const std::string& name, int64_t hidden, int64_t input, bool layer_norm, Rng& rng,
          DType dt = DType::kF32);
  Tensor step(const Tensor& h, const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
  int64_t hidden_dim() const { return b_u.value.dim(0); }
};

// Free-function form of the GRU update for a caller-assembled parameter set.
struct GruParams {
  Tensor w_u, b_u, w_r, b_r, w_n, b_n;
  Tensor ln_u_gain, ln_u_bias, ln_r_gain, ln_r_bias, ln_n_gain, ln_n_bias;
};
Tensor gru_step(const Tensor& h, const Tensor& x, const GruParams& p, bool layer_norm);

// hidden layers with ELU activations, linear output layer.
struct Mlp {
  std::vector<DenseLayer> hidden;
  DenseLayer out;
  Mlp() = default;
  Mlp(const std::string& name, int64_t in, int64_t units, int layers, int64_t out_dim, Rng& rng,
      DType dt = DType::kF32, bool zero_init_out = false);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void params(std::vector<Parameter*>& out);
};

}  // namespace dreamcc
