#pragma once

#include <string>
#include <vector>

#include "dreamcc/tensor.hpp"

namespace dreamcc {

// A named trainable tensor plus its Adam state. The value node is shared with
// every graph that uses the parameter, so grads land here after backward().
struct Parameter {
  std::string name;
  Tensor value;
  Buffer adam_m, adam_v;
  int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor value);

  // value with gradient flow cut; used when a consumer must treat the
  // parameter as a constant (imagination keeps world-model weights fixed).
  Tensor frozen() const { return value.detach(); }
  // copies values + optimizer state from src (shapes must match)
  void copy_from(const Parameter& src);
  void reset_moments();
};

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-5;
  double weight_decay = 1e-6;  // decoupled; applied as value *= 1 - lr*wd
  double clip_norm = 100.0;    // global L2 clip before the update; <=0 disables
};

// Global L2 norm over the gradients of `params` (missing grads count as 0).
// If the norm exceeds max_norm, every gradient is scaled by max_norm/norm in
// place. Returns the pre-clip norm. Throws NumericError on NaN/Inf grads.
double clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

// One decoupled-weight-decay Adam update from the accumulated gradient.
// No-op when the parameter has no gradient. Bias-corrected moments,
// epsilon added outside the square root. Clears the gradient afterwards.
void adam_step(Parameter& p, const OptimizerConfig& cfg);

// Convenience: clip over the set, then update each parameter.
// Returns the pre-clip global norm.
double optimizer_update(const std::vector<Parameter*>& params, const OptimizerConfig& cfg);

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace dreamcc
