#include "dreamcc/optim.hpp"

#include <cmath>

#include "dreamcc/errors.hpp"

namespace dreamcc {

Parameter::Parameter(std::string name_, Tensor value_) : name(std::move(name_)), value(value_) {
  value.node()->requires_grad = true;
  value.node()->op = "param";
  adam_m = Buffer(value.dtype(), value.size());
  adam_v = Buffer(value.dtype(), value.size());
}

void Parameter::copy_from(const Parameter& src) {
  if (value.shape() != src.value.shape() || value.dtype() != src.value.dtype())
    throw DimensionError("Parameter::copy_from: mismatched parameter " + name);
  value.node()->value = src.value.buffer().clone();
  adam_m = src.adam_m.clone();
  adam_v = src.adam_v.clone();
  step_count = src.step_count;
}

void Parameter::reset_moments() {
  adam_m.fill(0.0);
  adam_v.fill(0.0);
  step_count = 0;
}

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    const Buffer& g = p->value.node()->grad;
    if (g.empty()) continue;
    if (!all_finite(g))
      throw NumericError("clip_global_norm: non-finite gradient in " + p->name);
    for (int64_t i = 0, n = g.size(); i < n; ++i) {
      const double v = g.get(i);
      sq += v * v;
    }
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      Buffer& g = p->value.node()->grad;
      for (int64_t i = 0, n = g.size(); i < n; ++i) g.set(i, g.get(i) * s);
    }
  }
  return norm;
}

void adam_step(Parameter& p, const OptimizerConfig& cfg) {
  Buffer& g = p.value.node()->grad;
  if (g.empty()) return;
  if (!all_finite(g)) throw NumericError("adam_step: non-finite gradient in " + p.name);
  p.step_count += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step_count));
  Buffer& val = p.value.buffer();
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (int64_t i = 0, n = val.size(); i < n; ++i) {
    const double gi = g.get(i);
    const double m = cfg.beta1 * p.adam_m.get(i) + (1.0 - cfg.beta1) * gi;
    const double v = cfg.beta2 * p.adam_v.get(i) + (1.0 - cfg.beta2) * gi * gi;
    p.adam_m.set(i, m);
    p.adam_v.set(i, v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    double x = val.get(i) * decay;
    x -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    val.set(i, x);
  }
  p.value.zero_grad();
}

double optimizer_update(const std::vector<Parameter*>& params, const OptimizerConfig& cfg) {
  const double norm = clip_global_norm(params, cfg.clip_norm);
  for (Parameter* p : params) adam_step(*p, cfg);
  return norm;
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->value.zero_grad();
}

}  // namespace dreamcc
