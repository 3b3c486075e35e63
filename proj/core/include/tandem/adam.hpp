#ifndef TANDEM_ADAM_HPP_
#define TANDEM_ADAM_HPP_

#include <map>
#include <string>

#include "tandem/graph.hpp"

namespace tandem {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moment accumulators.
struct OptimState {
  AdamConfig cfg;
  ParamStore m;
  ParamStore v;
  int64_t step = 0;
};

// Bias-corrected Adam update (eps inside the square-root denominator).
// Parameters missing from `grads` are left untouched. A non-finite gradient
// rejects the whole update with parameters unchanged.
// `lr_scale` optionally multiplies the learning rate per parameter name.
void adam_step(ParamStore& params, const ParamStore& grads, OptimState& state,
               const std::map<std::string, double>* lr_scale = nullptr);

}  // namespace tandem

#endif  // TANDEM_ADAM_HPP_
