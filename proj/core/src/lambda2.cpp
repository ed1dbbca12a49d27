#include "polaron/lambda2.hpp"

#include <algorithm>

#include "polaron/errors.hpp"

namespace polaron {

double default_lambda2_margin(const ModelParams& params, double factor) {
  double h2 = params.coupling.envelope_norm_sq(params.dim);
  return std::max(factor * params.alpha * params.alpha * h2, 1e-3);
}

Lambda2Proxy lambda2_proxy(const ModelParams& params, VecView p, std::optional<double> margin) {
  Lambda2Proxy out;
  out.margin = margin ? *margin : default_lambda2_margin(params);
  if (out.margin < 0.0) throw InputError("lambda2_proxy: margin must be >= 0");
  out.bare = threshold(params, 2, p);
  out.value = out.bare - out.margin;
  return out;
}

}  // namespace polaron
