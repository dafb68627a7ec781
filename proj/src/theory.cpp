#include "cmiknn/theory.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>

namespace cmiknn {
namespace {

double log_sum_exp(std::initializer_list<double> logs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double l : logs) hi = std::max(hi, l);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - hi);
  return hi + std::log(acc);
}

constexpr double kLog2 = 0.6931471805599453;

void check_core(const BoundParams& p) {
  if (p.n == 0 || p.k == 0) throw std::invalid_argument("bounds: need n, k >= 1");
  if (p.m >= p.n) throw std::invalid_argument("bounds: m must be < n");
  if (!(p.gamma_d > 0.0))
    throw std::invalid_argument("bounds: gamma_d must be positive");
}

void check_tau(const BoundParams& p) {
  if (!(p.tau > 0.0 && p.tau < std::min(0.5, p.p1)))
    throw std::invalid_argument("bounds: need 0 < tau < min(1/2, p1)");
  if (!(p.p1 > 0.0 && p.p1 < 1.0))
    throw std::invalid_argument("bounds: p1 must lie in (0, 1)");
}

}  // namespace

BoundParams bound_params_from_schedule(const BatchSchedule& schedule) {
  BoundParams p;
  p.n = schedule.n;
  p.m = schedule.m;
  p.k = schedule.k;
  p.b = schedule.b;
  p.p1 = schedule.p1();
  return p;
}

void fill_net_diagnostics(BoundParams& params, const Classifier& net) {
  params.norm_k = net.parameter_norm();
  params.param_count_h = net.parameter_count();
  // product of per-layer weight norms upper-bounds the network's Lipschitz
  // constant (ReLU is 1-Lipschitz)
  params.lipschitz_b = net.layer_norm_product();
}

double log_delta1(double eps, double c, double M, const BoundParams& params) {
  check_core(params);
  if (!(eps > 0.0) || !(c > 0.0) || !(M > 0.0))
    throw std::invalid_argument("log_delta1: eps, c, M must be positive");
  const double n = static_cast<double>(params.n);
  const double m = static_cast<double>(params.m);
  const double k = static_cast<double>(params.k);
  const double e2 = eps * eps;
  const double l1 = kLog2 - 2.0 * e2 * k * k / (n * c * c);
  const double l2 = kLog2 - 2.0 * e2 * k * k / ((n - m) * c * c);
  const double l3 = -(n - m) * e2 / (8.0 * M * M * params.gamma_d * params.gamma_d);
  return log_sum_exp({l1, l2, l3});
}

double delta1(double eps, double c, double M, const BoundParams& params) {
  return std::exp(log_delta1(eps, c, M, params));
}

double log_delta_chain(int i, double eps, const BoundParams& params) {
  if (i < 2 || i > 7)
    throw std::invalid_argument("log_delta_chain: index must be in 2..7");
  if (!(eps > 0.0)) throw std::invalid_argument("log_delta_chain: eps <= 0");
  check_tau(params);

  const double tau = params.tau;
  const double p1 = params.p1;
  const double b = static_cast<double>(params.b);
  const double c_tau = std::log((1.0 - tau) / tau);
  const double m_tau = -std::log(tau);
  // the two Gamma-range constants reused by the 5th and 6th bounds
  const double c_gamma = (1.0 - p1) / p1 * (1.0 - 2.0 * tau) / (tau * (1.0 - tau));
  const double m_gamma = (1.0 - p1) / p1 * (1.0 - tau) / tau;

  switch (i) {
    case 2:
      return log_delta1(eps, c_tau, m_tau, params);
    case 3: {
      const double scale = 3.0 - 2.0 * p1;
      const double tail =
          kLog2 - 2.0 * b * eps * eps / ((scale * c_tau) * (scale * c_tau));
      return log_sum_exp({log_delta_chain(2, eps / scale, params), tail});
    }
    case 4: {
      if (!params.lipschitz_b || !params.norm_k || !params.param_count_h)
        throw std::invalid_argument(
            "log_delta_chain: the 4th bound needs B, K, h network diagnostics");
      const double B = *params.lipschitz_b;
      const double K = *params.norm_k;
      const double h = static_cast<double>(*params.param_count_h);
      const double log_factor =
          h * std::log(4.0 * B * K * std::sqrt(h) / (tau * eps));
      return log_factor + log_delta_chain(3, eps, params);
    }
    case 5: {
      const double denom = 2.0 * tau + 6.0 * p1 - 8.0 * p1 * tau;
      const double eps5 = (1.0 - p1) * eps * tau / denom;
      const double tail =
          kLog2 - b * (1.0 - p1) * (1.0 - p1) * eps * eps * tau * tau /
                      (2.0 * (denom * c_tau) * (denom * c_tau));
      return log_sum_exp({log_delta1(eps5, c_gamma, m_gamma, params), tail});
    }
    case 6: {
      const double tail = kLog2 - b * eps * eps / (128.0 * c_tau * c_tau);
      return log_sum_exp(
          {log_delta1(eps / 8.0, c_gamma, m_gamma, params), tail});
    }
    case 7:
      return kLog2 - b * eps * eps / (8.0 * c_tau * c_tau);
  }
  return 0.0;  // unreachable
}

double delta_chain(int i, double eps, const BoundParams& params) {
  return std::exp(log_delta_chain(i, eps, params));
}

std::pair<double, double> eta_eps(const BoundParams& params) {
  const double tau = params.tau;
  if (!(tau > 0.0 && tau < 0.5))
    throw std::invalid_argument("eta_eps: tau must lie in (0, 0.5)");
  if (!(params.beta > 0.0) || !(params.alpha > 0.0) || !(params.lambda_x > 0.0) ||
      !(params.epsilon_star > 0.0))
    throw std::invalid_argument(
        "eta_eps: alpha, beta, lambda_x, epsilon_star must be positive");
  const double eta = tau * tau * tau * (1.0 - tau) * params.epsilon_star /
                     (2.0 * (2.0 * tau * tau - 2.0 * tau + 1.0) * params.beta);
  const double ratio = eta / (1.0 - tau);
  const double eps = ratio * ratio * params.alpha / (2.0 * params.lambda_x);
  return {eta, eps};
}

}  // namespace cmiknn
