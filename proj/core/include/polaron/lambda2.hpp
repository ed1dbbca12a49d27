#pragma once

#include <optional>

#include "polaron/model.hpp"

namespace polaron {

// Stand-in for the two-boson edge: lambda_2^0(p) - margin.
struct Lambda2Proxy {
  double value = 0.0;
  double margin = 0.0;
  double bare = 0.0;  // lambda_2^0(p)
};

// Default margin: max(10 alpha^2 ||h||^2, 1e-3). `factor` replaces the 10.
double default_lambda2_margin(const ModelParams& params, double factor = 10.0);
Lambda2Proxy lambda2_proxy(const ModelParams& params, VecView p,
                           std::optional<double> margin = std::nullopt);

}  // namespace polaron
