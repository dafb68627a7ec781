#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "cmiknn/classifier.hpp"
#include "cmiknn/resample.hpp"

namespace cmiknn {

/// Inputs to the concentration-bound diagnostics. gamma_d (minimal number of
/// angle-pi/6 cones covering d-space) has no closed form here and is supplied
/// by the caller; defaults elsewhere are conservative upper bounds.
/// lipschitz_b / norm_k / param_count_h are network diagnostics needed only
/// by the fourth bound; for ReLU nets they are empirical proxies, not exact
/// constants.
struct BoundParams {
  std::size_t n = 0, m = 0, k = 0, b = 0;
  double tau = 1e-3;
  double p1 = 0.5;
  int d = 1;
  double gamma_d = 0.0;
  double alpha = 0.0, beta = 0.0;  // density lower/upper bounds
  double lambda_x = 0.0;           // measure of the x support
  double epsilon_star = 0.0;
  std::optional<double> lipschitz_b;
  std::optional<double> norm_k;
  std::optional<std::size_t> param_count_h;
};

/// From a batch schedule: copies n, m, k, b and the implied class prior.
BoundParams bound_params_from_schedule(const BatchSchedule& schedule);

/// K = parameter norm, h = parameter count, B = product of layer weight
/// norms (an upper-bound proxy for the network's Lipschitz constant).
void fill_net_diagnostics(BoundParams& params, const Classifier& net);

/// log of: 2 exp(-2 e^2 k^2 / (n c^2)) + 2 exp(-2 e^2 k^2 / ((n-m) c^2))
///       + exp(-(n-m) e^2 / (8 M^2 gamma_d^2)).
/// Computed with log-sum-exp so vanishingly small values stay comparable.
double log_delta1(double eps, double c, double M, const BoundParams& params);
double delta1(double eps, double c, double M, const BoundParams& params);

/// The composed bound family, i in 2..7; each builds on log_delta1 with
/// tau- and p1-dependent constants, evaluated entirely in the log domain
/// (the fourth bound's (4BK sqrt(h)/(tau e))^h factor overflows otherwise).
double log_delta_chain(int i, double eps, const BoundParams& params);
double delta_chain(int i, double eps, const BoundParams& params);

/// (eta, eps) = ( tau^3 (1-tau) eps* / (2 (2 tau^2 - 2 tau + 1) beta),
///               (eta/(1-tau))^2 alpha / (2 lambda_x) ).
std::pair<double, double> eta_eps(const BoundParams& params);

}  // namespace cmiknn
