#include <cmath>
#include <vector>

#include "cmiknn/estimator.hpp"
#include "cmiknn/gaussian_chain.hpp"
#include "cmiknn/resample.hpp"
#include "doctest.h"

using namespace cmiknn;

namespace {

GaussianChainConfig default_chain(int d = 3) {
  GaussianChainConfig cfg;
  cfg.sigma_x = 10;
  cfg.sigma_y = 1;
  cfg.sigma_z = 5;
  cfg.dim = d;
  return cfg;
}

LabeledBatch batch_from(const Dataset& ds, int label) {
  LabeledBatch b;
  b.samples = ds;
  b.label = label;
  b.origin = label == 1 ? BatchOrigin::joint : BatchOrigin::isolated_knn;
  return b;
}

// classifier with all-zero weights and a fixed output bias: constant omega
Classifier constant_net(int input_dim, double tau, double bias) {
  NetConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = {4};
  cfg.tau = tau;
  cfg.init_seed = 1;
  Classifier net = Classifier::init(cfg);
  std::vector<double> flat(net.parameter_count(), 0.0);
  flat.back() = bias;
  net.set_parameters(flat);
  return net;
}

}  // namespace

TEST_SUITE_BEGIN("estimator");

TEST_CASE("gamma transform at reference points") {
  const Dataset ds = sample_gaussian_chain(default_chain(1), 8, 3);
  const LabeledBatch joint = batch_from(ds, 1);

  // omega = 0.5, p1 = 0.5 -> Gamma = 1 -> log Gamma = 0
  RatioModel even = RatioModel::learned(constant_net(3, 0.1, 0.0), 0.5);
  for (double lg : even.log_gamma_batch(joint))
    CHECK(std::abs(lg) < 1e-12);

  // omega = 1 - tau = 0.9 at p1 = 0.5 -> Gamma = 9
  RatioModel sat = RatioModel::learned(constant_net(3, 0.1, 1e3), 0.5);
  for (double lg : sat.log_gamma_batch(joint))
    CHECK(std::exp(lg) == doctest::Approx(9.0).epsilon(1e-9));

  // omega = 0.5 at p1 = 2/3 -> Gamma = (1/3)/(2/3) = 0.5
  RatioModel skew = RatioModel::learned(constant_net(3, 0.1, 0.0), 2.0 / 3.0);
  for (double lg : skew.log_gamma_batch(joint))
    CHECK(std::exp(lg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("constant ratio gives zero DV and NWJ, log-constant LDR") {
  const Dataset ds = sample_gaussian_chain(default_chain(1), 16, 5);
  const LabeledBatch joint = batch_from(ds, 1);
  const LabeledBatch product = batch_from(ds, 0);

  RatioModel even = RatioModel::learned(constant_net(3, 0.1, 0.0), 0.5);
  CHECK(std::abs(estimate_dv(even, joint, product)) < 1e-12);
  CHECK(std::abs(estimate_nwj(even, joint, product)) < 1e-12);
  CHECK(std::abs(estimate_ldr(even, joint)) < 1e-12);

  // Gamma = c everywhere: DV stays 0 (scale cancels), LDR = log c
  RatioModel c9 = RatioModel::learned(constant_net(3, 0.1, 1e3), 0.5);
  CHECK(std::abs(estimate_dv(c9, joint, product)) < 1e-9);
  CHECK(estimate_ldr(c9, joint) == doctest::Approx(std::log(9.0)));
}

TEST_CASE("oracle ratio recovers the closed form on fresh samples") {
  const GaussianChainConfig cfg = default_chain(3);
  const double truth = true_cmi_xy_given_z(cfg);
  const std::size_t n = 20000;

  const Dataset joint_ds = sample_gaussian_chain(cfg, n, 101);
  Rng rng(103);
  const Dataset product_ds = resample_x_given_z(cfg, joint_ds, rng);
  const LabeledBatch joint = batch_from(joint_ds, 1);
  const LabeledBatch product = batch_from(product_ds, 0);

  const RatioModel oracle = RatioModel::oracle(cfg);
  CHECK(estimate_dv(oracle, joint, product) ==
        doctest::Approx(truth).epsilon(0.05));
  CHECK(estimate_nwj(oracle, joint, product) ==
        doctest::Approx(truth).epsilon(0.08));
  CHECK(estimate_ldr(oracle, joint) == doctest::Approx(truth).epsilon(0.05));
  CHECK_THROWS(RatioModel::oracle([] {
    GaussianChainConfig c;
    c.rho = 0.2;
    return c;
  }()));
}

TEST_CASE("nwj never exceeds dv") {
  // random learned models on random batches
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    NetConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = {6};
    cfg.tau = 1e-3;
    cfg.init_seed = 100 + static_cast<std::uint64_t>(rep);
    const Classifier net = Classifier::init(cfg);
    const Dataset a = sample_gaussian_chain(default_chain(1), 64,
                                            200 + static_cast<std::uint64_t>(rep));
    const Dataset b = sample_gaussian_chain(default_chain(1), 48,
                                            300 + static_cast<std::uint64_t>(rep));
    const RatioModel model = RatioModel::learned(net, 0.5);
    const LabeledBatch joint = batch_from(a, 1);
    const LabeledBatch product = batch_from(b, 0);
    CHECK(estimate_nwj(model, joint, product) <=
          estimate_dv(model, joint, product) + 1e-9);
  }
}

TEST_CASE("learned gamma respects the clamp-implied range") {
  NetConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = {8, 8};
  cfg.tau = 1e-3;
  cfg.init_seed = 9;
  const double p1 = 0.4;
  const RatioModel model = RatioModel::learned(Classifier::init(cfg), p1);
  const double lo = std::log((1 - p1) / p1 * cfg.tau / (1 - cfg.tau));
  const double hi = std::log((1 - p1) / p1 * (1 - cfg.tau) / cfg.tau);

  const Dataset ds = sample_gaussian_chain(default_chain(1), 500, 77);
  for (double lg : model.log_gamma_batch(batch_from(ds, 1))) {
    CHECK(lg >= lo - 1e-12);
    CHECK(lg <= hi + 1e-12);
  }
}

TEST_CASE("algorithm 1 report structure and determinism") {
  const Dataset ds = sample_gaussian_chain(default_chain(1), 2000, 555);
  Algorithm1Params params;
  params.trials = 3;
  params.k = 2;
  NetConfig net;
  net.hidden = {8};
  net.epochs = 2;
  net.input_dim = 1;  // overwritten inside

  const EstimateReport a = run_algorithm1(ds, params, net, 42);
  REQUIRE(a.trials.size() == 3);
  CHECK(a.schedule.k == 2);
  CHECK(a.n_total == 2000);
  CHECK(a.dims.x == 1);

  // averages equal the mean of per-trial values exactly
  double dv_sum = 0.0;
  for (const auto& t : a.trials) dv_sum += t.dv;
  CHECK(a.dv.mean == doctest::Approx(dv_sum / 3.0).epsilon(1e-15));

  // same seed reproduces; thread count is irrelevant
  const EstimateReport b = run_algorithm1(ds, params, net, 42);
  Algorithm1Params threaded = params;
  threaded.threads = 4;
  const EstimateReport c = run_algorithm1(ds, threaded, net, 42);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(a.trials[t].dv == b.trials[t].dv);
    CHECK(a.trials[t].dv == c.trials[t].dv);
    CHECK(a.trials[t].nwj == c.trials[t].nwj);
    CHECK(a.trials[t].ldr == c.trials[t].ldr);
    CHECK(a.trials[t].nwj <= a.trials[t].dv + 1e-9);
  }

  // T = 1: averages equal the single trial
  Algorithm1Params single = params;
  single.trials = 1;
  const EstimateReport s = run_algorithm1(ds, single, net, 43);
  CHECK(s.dv.mean == s.trials[0].dv);
  CHECK(s.dv.min == s.dv.max);
}

TEST_CASE("midiff runs and reports coupled terms") {
  const Dataset ds = sample_gaussian_chain(default_chain(1), 1500, 888);
  MidiffParams params;
  params.trials = 2;
  NetConfig net;
  net.hidden = {8};
  net.epochs = 2;

  const MidiffReport r = run_midiff(ds, params, net, 99);
  REQUIRE(r.trials.size() == 2);
  for (const auto& t : r.trials) {
    CHECK(t.dv_diff == doctest::Approx(t.dv_xyz - t.dv_xz).epsilon(1e-12));
    CHECK(t.nwj_diff == doctest::Approx(t.nwj_xyz - t.nwj_xz).epsilon(1e-12));
  }
  const MidiffReport r2 = run_midiff(ds, params, net, 99);
  CHECK(r.trials[0].dv_diff == r2.trials[0].dv_diff);
}

TEST_CASE("summary statistics") {
  const SummaryStats s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));  // population form
}

TEST_SUITE_END();
