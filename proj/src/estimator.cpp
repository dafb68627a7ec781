#include "cmiknn/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "cmiknn/util.hpp"

namespace cmiknn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double log_mean_exp(const std::vector<double>& logs) {
  const double hi = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - hi);
  return hi + std::log(acc / static_cast<double>(logs.size()));
}

std::vector<double> flatten_rows(const LabeledBatch& batch) {
  const Dataset& ds = batch.samples;
  const auto dim = static_cast<std::size_t>(ds.dims().total());
  std::vector<double> rows(ds.size() * dim);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    double* r = rows.data() + s * dim;
    const auto x = ds.x(s), y = ds.y(s), z = ds.z(s);
    r = std::copy(x.begin(), x.end(), r);
    r = std::copy(y.begin(), y.end(), r);
    std::copy(z.begin(), z.end(), r);
  }
  return rows;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::dv: return "dv";
    case EstimatorKind::nwj: return "nwj";
    case EstimatorKind::ldr: return "ldr";
  }
  return "?";
}

RatioModel RatioModel::learned(Classifier net, double p1) {
  if (!(p1 > 0.0 && p1 < 1.0))
    throw std::invalid_argument("RatioModel: p1 must lie in (0, 1)");
  RatioModel m;
  m.classifier_ = std::move(net);
  m.p1_ = p1;
  return m;
}

RatioModel RatioModel::oracle(const GaussianChainConfig& config) {
  config.validate();
  if (config.rho != 0.0)
    throw std::invalid_argument(
        "RatioModel::oracle: analytic ratio requires rho = 0");
  RatioModel m;
  m.oracle_ = config;
  m.cond_ = chain_conditionals(config);
  return m;
}

double RatioModel::tau() const {
  return classifier_ ? classifier_->config().tau : 0.0;
}

std::vector<double> RatioModel::log_gamma_batch(const LabeledBatch& batch) const {
  const std::size_t n = batch.size();
  std::vector<double> out(n);
  if (classifier_) {
    const auto rows = flatten_rows(batch);
    std::vector<double> probs(n);
    classifier_->evaluate_batch(rows.data(), n, probs.data());
    const double log_prior = std::log((1.0 - p1_) / p1_);
    for (std::size_t s = 0; s < n; ++s)
      out[s] = log_prior + std::log(probs[s]) - std::log(1.0 - probs[s]);
    return out;
  }

  const RoleDims dims = batch.samples.dims();
  if (dims.x != oracle_->dim || dims.y != oracle_->dim || dims.z != oracle_->dim)
    throw std::invalid_argument(
        "RatioModel::oracle: batch dimensions do not match the chain model");
  const ChainConditionals& c = *cond_;
  const double log_det_term =
      0.5 * oracle_->dim * (std::log(c.v_xz) - std::log(c.v_xy));
  for (std::size_t s = 0; s < n; ++s) {
    const auto x = batch.samples.x(s);
    const auto y = batch.samples.y(s);
    const auto z = batch.samples.z(s);
    double q_xy = 0.0, q_xz = 0.0;
    for (int d = 0; d < oracle_->dim; ++d) {
      const double rxy = x[d] - c.a_xy * y[d];
      const double rxz = x[d] - c.a_xz * z[d];
      q_xy += rxy * rxy;
      q_xz += rxz * rxz;
    }
    out[s] = log_det_term + q_xz / (2.0 * c.v_xz) - q_xy / (2.0 * c.v_xy);
  }
  return out;
}

double estimate_dv(const RatioModel& model, const LabeledBatch& joint_test,
                   const LabeledBatch& product_test) {
  if (joint_test.size() == 0 || product_test.size() == 0)
    throw std::invalid_argument("estimate_dv: empty batch");
  const auto joint_logs = model.log_gamma_batch(joint_test);
  const auto prod_logs = model.log_gamma_batch(product_test);
  return mean_of(joint_logs) - log_mean_exp(prod_logs);
}

double estimate_nwj(const RatioModel& model, const LabeledBatch& joint_test,
                    const LabeledBatch& product_test) {
  if (joint_test.size() == 0 || product_test.size() == 0)
    throw std::invalid_argument("estimate_nwj: empty batch");
  const auto joint_logs = model.log_gamma_batch(joint_test);
  const auto prod_logs = model.log_gamma_batch(product_test);
  double mean_gamma = 0.0;
  for (double l : prod_logs) mean_gamma += std::exp(l);
  mean_gamma /= static_cast<double>(prod_logs.size());
  return 1.0 + mean_of(joint_logs) - mean_gamma;
}

double estimate_ldr(const RatioModel& model, const LabeledBatch& joint_test) {
  if (joint_test.size() == 0)
    throw std::invalid_argument("estimate_ldr: empty batch");
  return mean_of(model.log_gamma_batch(joint_test));
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

EstimateReport run_algorithm1(const Dataset& data,
                              const Algorithm1Params& params,
                              const NetConfig& net, std::uint64_t seed) {
  if (params.trials < 1)
    throw std::invalid_argument("run_algorithm1: trials must be >= 1");
  const auto t_total = Clock::now();

  Rng master(seed);
  Rng split_rng = master.fork(0);
  auto [train_ds, test_ds] = split_dataset(data, params.train_fraction, split_rng);
  const std::size_t usable = std::min(train_ds.size(), test_ds.size());
  std::size_t b_target = params.b_target == 0
                             ? usable
                             : std::min(params.b_target, usable);
  const BatchSchedule schedule = schedule_from_n(
      usable, params.epsilon_0, params.mode, params.k, b_target);

  NetConfig net_cfg = net;
  net_cfg.input_dim = data.dims().total();
  net_cfg.validate();

  EstimateReport report;
  report.trials.resize(static_cast<std::size_t>(params.trials));
  report.schedule = schedule;
  report.net = net_cfg;
  report.train_fraction = params.train_fraction;
  report.n_total = data.size();
  report.dims = data.dims();
  report.master_seed = seed;
  report.data_provenance = data.provenance;

  std::mutex time_mutex;
  parallel_for(static_cast<std::size_t>(params.trials), params.threads,
               [&](std::size_t t) {
    try {
      Rng trial_rng = master.fork(1000 + t);
      StageSeconds sec;

      auto t0 = Clock::now();
      Rng rj = trial_rng.fork(1);
      const LabeledBatch train_joint = joint_batch(train_ds, schedule.b, rj);
      Rng rp = trial_rng.fork(2);
      const LabeledBatch train_prod = isolated_knn_batch(
          train_ds, schedule.m, schedule.k, rp, params.index_kind);
      sec.resample += seconds_since(t0);

      t0 = Clock::now();
      NetConfig cfg = net_cfg;
      cfg.init_seed = trial_rng.fork(3).next_u64();
      Classifier clf = Classifier::init(cfg);
      Rng rt = trial_rng.fork(4);
      clf = train(std::move(clf), train_joint, train_prod, rt);
      sec.train += seconds_since(t0);

      t0 = Clock::now();
      Rng rtj = trial_rng.fork(5);
      const LabeledBatch test_joint = joint_batch(test_ds, schedule.b, rtj);
      Rng rtp = trial_rng.fork(6);
      const LabeledBatch test_prod = isolated_knn_batch(
          test_ds, schedule.m, schedule.k, rtp, params.index_kind);
      sec.resample += seconds_since(t0);

      t0 = Clock::now();
      TrialResult r;
      r.final_train_loss = clf.epoch_losses().empty()
                               ? empirical_loss(clf, train_joint, train_prod)
                               : clf.epoch_losses().back();
      r.classifier_norm = clf.parameter_norm();
      r.classifier_lipschitz = clf.layer_norm_product();
      const RatioModel model = RatioModel::learned(std::move(clf), schedule.p1());
      r.dv = estimate_dv(model, test_joint, test_prod);
      r.nwj = estimate_nwj(model, test_joint, test_prod);
      r.ldr = estimate_ldr(model, test_joint);
      sec.evaluate += seconds_since(t0);

      report.trials[t] = r;
      std::lock_guard lock(time_mutex);
      report.seconds.resample += sec.resample;
      report.seconds.train += sec.train;
      report.seconds.evaluate += sec.evaluate;
    } catch (const std::exception& e) {
      throw std::runtime_error("run_algorithm1: trial " + std::to_string(t) +
                               " failed: " + e.what());
    }
  });

  std::vector<double> dv, nwj, ldr;
  for (const auto& r : report.trials) {
    dv.push_back(r.dv);
    nwj.push_back(r.nwj);
    ldr.push_back(r.ldr);
  }
  report.dv = summarize(dv);
  report.nwj = summarize(nwj);
  report.ldr = summarize(ldr);
  report.seconds.total = seconds_since(t_total);
  return report;
}

MidiffReport run_midiff(const Dataset& data, const MidiffParams& params,
                        const NetConfig& net, std::uint64_t seed) {
  if (params.trials < 1)
    throw std::invalid_argument("run_midiff: trials must be >= 1");
  const auto t_total = Clock::now();

  Rng master(seed);
  Rng split_rng = master.fork(0);
  auto [train_ds, test_ds] = split_dataset(data, params.train_fraction, split_rng);
  const std::size_t usable = std::min(train_ds.size(), test_ds.size());
  const std::size_t b =
      params.b == 0 ? usable : std::min(params.b, usable);

  const RoleDims dims = data.dims();
  const std::vector<RoleSlice> all_x = {{Role::X, 0, dims.x}};
  const std::vector<RoleSlice> all_z = {{Role::Z, 0, dims.z}};
  const Dataset train_xz = recompose(train_ds, all_x, {}, all_z);
  const Dataset test_xz = recompose(test_ds, all_x, {}, all_z);

  NetConfig cfg_xyz = net;
  cfg_xyz.input_dim = dims.total();
  cfg_xyz.validate();
  NetConfig cfg_xz = net;
  cfg_xz.input_dim = dims.x + dims.z;
  cfg_xz.validate();

  MidiffReport report;
  report.trials.resize(static_cast<std::size_t>(params.trials));
  report.b = b;
  report.net = net;
  report.train_fraction = params.train_fraction;
  report.n_total = data.size();
  report.dims = dims;
  report.master_seed = seed;
  report.data_provenance = data.provenance;

  std::mutex time_mutex;
  parallel_for(static_cast<std::size_t>(params.trials), params.threads,
               [&](std::size_t t) {
    try {
      Rng trial_rng = master.fork(2000 + t);
      StageSeconds sec;

      auto run_term = [&](const Dataset& tr, const Dataset& te,
                          const NetConfig& cfg, bool with_y, int tag,
                          double& dv_out, double& nwj_out) {
        auto t0 = Clock::now();
        Rng rj = trial_rng.fork(10 * tag + 1);
        const LabeledBatch jb = joint_batch(tr, b, rj);
        Rng rp = trial_rng.fork(10 * tag + 2);
        const LabeledBatch pb = with_y
                                    ? midiff_product_batch_xyz(tr, b, rp)
                                    : midiff_product_batch_xz(tr, b, rp);
        sec.resample += seconds_since(t0);

        t0 = Clock::now();
        NetConfig c = cfg;
        c.init_seed = trial_rng.fork(10 * tag + 3).next_u64();
        Classifier clf = Classifier::init(c);
        Rng rt = trial_rng.fork(10 * tag + 4);
        clf = train(std::move(clf), jb, pb, rt);
        sec.train += seconds_since(t0);

        t0 = Clock::now();
        Rng rtj = trial_rng.fork(10 * tag + 5);
        const LabeledBatch tjb = joint_batch(te, b, rtj);
        Rng rtp = trial_rng.fork(10 * tag + 6);
        const LabeledBatch tpb = with_y
                                     ? midiff_product_batch_xyz(te, b, rtp)
                                     : midiff_product_batch_xz(te, b, rtp);
        const double p1 =
            static_cast<double>(tjb.size()) /
            static_cast<double>(tjb.size() + tpb.size());
        const RatioModel model = RatioModel::learned(std::move(clf), p1);
        dv_out = estimate_dv(model, tjb, tpb);
        nwj_out = estimate_nwj(model, tjb, tpb);
        sec.evaluate += seconds_since(t0);
      };

      MidiffTrial r;
      // Product batches for term 1 pair x with (y,z); for term 2 the y role
      // is dropped entirely.
      run_term(train_ds, test_ds, cfg_xyz, true, 1, r.dv_xyz, r.nwj_xyz);
      run_term(train_xz, test_xz, cfg_xz, false, 2, r.dv_xz, r.nwj_xz);
      r.dv_diff = r.dv_xyz - r.dv_xz;
      r.nwj_diff = r.nwj_xyz - r.nwj_xz;
      report.trials[t] = r;

      std::lock_guard lock(time_mutex);
      report.seconds.resample += sec.resample;
      report.seconds.train += sec.train;
      report.seconds.evaluate += sec.evaluate;
    } catch (const std::exception& e) {
      throw std::runtime_error("run_midiff: trial " + std::to_string(t) +
                               " failed: " + e.what());
    }
  });

  std::vector<double> dv, nwj;
  for (const auto& r : report.trials) {
    dv.push_back(r.dv_diff);
    nwj.push_back(r.nwj_diff);
  }
  report.dv_diff = summarize(dv);
  report.nwj_diff = summarize(nwj);
  report.seconds.total = seconds_since(t_total);
  return report;
}

}  // namespace cmiknn
