#include "tandem/adam.hpp"

#include <cmath>

namespace tandem {

void adam_step(ParamStore& params, const ParamStore& grads, OptimState& state,
               const std::map<std::string, double>* lr_scale) {
  for (const auto& [name, g] : grads) {
    if (!params.count(name)) throw Error("adam_step: unknown param '" + name + "'");
    if (!g.all_finite())
      throw Error("adam_step: non-finite gradient for '" + name + "'");
    if (g.shape != params.at(name).shape)
      throw Error("adam_step: gradient shape mismatch for '" + name + "'");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.cfg.beta1, t);
  const double c2 = 1.0 - std::pow(state.cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    Tensor& m = state.m.try_emplace(name, Tensor(p.shape)).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor(p.shape)).first->second;
    double lr = state.cfg.lr;
    if (lr_scale) {
      auto it = lr_scale->find(name);
      if (it != lr_scale->end()) lr *= it->second;
    }
    for (size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = state.cfg.beta1 * m.data[i] + (1.0 - state.cfg.beta1) * g.data[i];
      v.data[i] = state.cfg.beta2 * v.data[i] + (1.0 - state.cfg.beta2) * g.data[i] * g.data[i];
      const double mh = m.data[i] / c1;
      const double vh = v.data[i] / c2;
      p.data[i] -= lr * mh / std::sqrt(vh + state.cfg.eps);
    }
  }
}

}  // namespace tandem
