#include <cmath>

#include "cmiknn/resample.hpp"
#include "cmiknn/theory.hpp"
#include "doctest.h"

using namespace cmiknn;

namespace {

// the worked reference point: eps=0.1, c=1, M=1, gamma_d=2,
// n=1e4, m=100, k=1e3 -> 2e^-2 + 2e^-2.0202... + e^-3.09375 ~= 0.5813
BoundParams reference_params() {
  BoundParams p;
  p.n = 10000;
  p.m = 100;
  p.k = 1000;
  p.b = 10000;
  p.gamma_d = 2.0;
  p.tau = 0.1;
  p.p1 = 0.5;
  p.d = 1;
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("theory");

TEST_CASE("first tail bound matches the hand-evaluated reference") {
  CHECK(delta1(0.1, 1.0, 1.0, reference_params()) ==
        doctest::Approx(0.581259545491027727448977290347).epsilon(1e-12));
}

TEST_CASE("first tail bound vanishes along the schedule") {
  double prev = 1e300;
  for (std::size_t n : {std::size_t{10000}, std::size_t{100000},
                        std::size_t{1000000}}) {
    const BatchSchedule s = schedule_from_n(n, 0.1, ScheduleMode::theory);
    BoundParams p = bound_params_from_schedule(s);
    p.gamma_d = 2.0;
    p.tau = 0.1;
    const double v = delta1(0.1, 1.0, 1.0, p);
    CHECK(v < prev);
    prev = v;
  }
  // far asymptotic regime, evaluated in the log domain to dodge underflow;
  // the leading exponent is 2 eps^2 k^2 / n = 0.02 n^0.2, so n must be huge
  // before the bound dips below 1e-6
  BoundParams big;
  big.n = 10000000000000000ull;  // 1e16
  big.k = static_cast<std::size_t>(std::ceil(std::pow(1e16, 0.6)));
  big.m = big.k;
  big.b = big.n;
  big.gamma_d = 2.0;
  big.tau = 0.1;
  big.p1 = 0.5;
  CHECK(log_delta1(0.1, 1.0, 1.0, big) < std::log(1e-6));
}

TEST_CASE("first tail bound tightens in k and in eps") {
  BoundParams p = reference_params();
  double prev = 1e300;
  for (std::size_t k : {std::size_t{500}, std::size_t{1000},
                        std::size_t{2000}, std::size_t{4000}}) {
    p.k = k;
    const double v = delta1(0.1, 1.0, 1.0, p);
    CHECK(v < prev);
    prev = v;
  }
  p = reference_params();
  prev = 1e300;
  for (double eps : {0.05, 0.1, 0.2, 0.4}) {
    const double v = delta1(eps, 1.0, 1.0, p);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("bound composition substitutes the clamp constants") {
  const BoundParams p = reference_params();
  // second bound = first bound at c = log((1-tau)/tau), M = -log tau
  const double expected =
      delta1(0.1, std::log((1 - p.tau) / p.tau), -std::log(p.tau), p);
  CHECK(delta_chain(2, 0.1, p) == doctest::Approx(expected).epsilon(1e-12));

  // third bound adds a nonnegative term on top of a rescaled second bound
  const double eps = 0.1;
  const double rescaled = delta_chain(2, eps / (3 - 2 * p.p1), p);
  CHECK(delta_chain(3, eps, p) >= rescaled);
}

TEST_CASE("covering-number bound requires network diagnostics") {
  BoundParams p = reference_params();
  CHECK_THROWS(delta_chain(4, 0.1, p));
  p.lipschitz_b = 10.0;
  p.norm_k = 5.0;
  p.param_count_h = 100;
  const double v = log_delta_chain(4, 0.1, p);
  CHECK(std::isfinite(v));
  // the covering factor only inflates the underlying bound
  CHECK(v >= log_delta_chain(3, 0.1, p));
}

TEST_CASE("later bounds shrink as the batch grows") {
  BoundParams p = reference_params();
  const double small_b = log_delta_chain(7, 0.1, p);
  p.b = 1000000;
  const double large_b = log_delta_chain(7, 0.1, p);
  CHECK(large_b < small_b);

  // the pure-batch bound: 2 exp(-b eps^2 / (8 log^2((1-tau)/tau)))
  const double c = std::log((1 - 0.1) / 0.1);
  const double direct =
      std::log(2.0) - 1e6 * 0.01 / (8 * c * c);
  CHECK(log_delta_chain(7, 0.1, p) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("derived thresholds match the worked example") {
  BoundParams p = reference_params();
  p.tau = 0.1;
  p.epsilon_star = 1.0;
  p.beta = 1.0;
  p.alpha = 0.5;
  p.lambda_x = 1.0;
  const auto [eta, eps] = eta_eps(p);
  CHECK(eta == doctest::Approx(5.48780487804878e-4).epsilon(1e-12));
  // eps = (eta/(1-tau))^2 * alpha / (2 lambda)
  const double expected_eps =
      std::pow(eta / 0.9, 2.0) * 0.5 / 2.0;
  CHECK(eps == doctest::Approx(expected_eps).epsilon(1e-12));
  // linear scaling in alpha
  BoundParams p2 = p;
  p2.alpha = 1.0;
  CHECK(eta_eps(p2).second == doctest::Approx(2 * eps).epsilon(1e-12));
}

TEST_CASE("domain validation") {
  BoundParams p = reference_params();
  p.m = p.n;  // m must stay below n
  CHECK_THROWS(delta1(0.1, 1.0, 1.0, p));

  p = reference_params();
  p.tau = 0.6;
  CHECK_THROWS(delta_chain(2, 0.1, p));

  p = reference_params();
  p.p1 = 0.05;  // tau >= p1 violates the clamp hypothesis
  p.tau = 0.1;
  CHECK_THROWS(delta_chain(2, 0.1, p));
}

TEST_SUITE_END();
