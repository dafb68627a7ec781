#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmiknn/classifier.hpp"
#include "cmiknn/gaussian_chain.hpp"
#include "cmiknn/resample.hpp"

namespace cmiknn {

enum class EstimatorKind { dv, nwj, ldr };
std::string to_string(EstimatorKind kind);

/// Likelihood-ratio model Gamma(x,y,z) ~= p(x,y,z) / (p(x|z) p(y,z)).
/// Learned variant: odds transform of a trained classifier,
/// (1-p1)/p1 * w/(1-w), which the clamp confines to
/// [((1-p1)/p1) tau/(1-tau), ((1-p1)/p1) (1-tau)/tau].
/// Oracle variant: the analytic ratio for the Gaussian chain (rho = 0),
/// used for consistency checks without any training noise.
class RatioModel {
 public:
  static RatioModel learned(Classifier net, double p1);
  static RatioModel oracle(const GaussianChainConfig& config);

  /// log Gamma for every sample of the batch, in batch order.
  std::vector<double> log_gamma_batch(const LabeledBatch& batch) const;

  double p1() const { return p1_; }
  double tau() const;
  bool is_learned() const { return classifier_.has_value(); }
  const Classifier& classifier() const { return *classifier_; }

 private:
  RatioModel() = default;
  std::optional<Classifier> classifier_;
  double p1_ = 0.5;
  std::optional<GaussianChainConfig> oracle_;
  std::optional<ChainConditionals> cond_;
};

/// mean log Gamma over the joint batch minus log of the mean Gamma over the
/// product batch (log-sum-exp form).
double estimate_dv(const RatioModel& model, const LabeledBatch& joint_test,
                   const LabeledBatch& product_test);

/// 1 + mean log Gamma (joint) - mean Gamma (product). Never exceeds the
/// matching estimate_dv value (1 + log t <= t).
double estimate_nwj(const RatioModel& model, const LabeledBatch& joint_test,
                    const LabeledBatch& product_test);

/// mean log Gamma over the joint batch.
double estimate_ldr(const RatioModel& model, const LabeledBatch& joint_test);

struct TrialResult {
  double dv = 0.0;
  double nwj = 0.0;
  double ldr = 0.0;
  double final_train_loss = 0.0;
  double classifier_norm = 0.0;       // parameter 2-norm after training
  double classifier_lipschitz = 0.0;  // product of layer Frobenius norms
};

struct StageSeconds {
  double resample = 0.0;
  double train = 0.0;
  double evaluate = 0.0;
  double total = 0.0;
};

struct SummaryStats {
  double mean = 0.0, min = 0.0, max = 0.0, stddev = 0.0;
};
SummaryStats summarize(const std::vector<double>& values);

struct EstimateReport {
  std::vector<TrialResult> trials;
  SummaryStats dv, nwj, ldr;
  BatchSchedule schedule;
  NetConfig net;
  double train_fraction = 0.5;
  std::size_t n_total = 0;
  RoleDims dims;
  std::uint64_t master_seed = 0;
  std::string data_provenance;
  // Wall-clock only; serialized to a sidecar, never to the canonical report,
  // so reports stay byte-identical across thread counts.
  StageSeconds seconds;
};

struct Algorithm1Params {
  int trials = 5;  // T
  double train_fraction = 0.5;
  ScheduleMode mode = ScheduleMode::fixed_k;
  std::size_t k = 2;         // fixed_k mode
  double epsilon_0 = 0.1;    // theory mode
  std::size_t b_target = 0;  // 0 -> use the full split
  IndexKind index_kind = IndexKind::kdtree;
  int threads = 1;
};

/// Joint-vs-product training on the train split, estimation on the held-out
/// split, for params.trials independent trials with per-trial derived seeds;
/// reports per-trial values and their averages. Train and test use the same
/// (b, m, k), computed from the smaller split. Results are independent of
/// params.threads.
EstimateReport run_algorithm1(const Dataset& data,
                              const Algorithm1Params& params,
                              const NetConfig& net, std::uint64_t seed);

struct MidiffTrial {
  double dv_xyz = 0.0, dv_xz = 0.0, dv_diff = 0.0;
  double nwj_xyz = 0.0, nwj_xz = 0.0, nwj_diff = 0.0;
};

struct MidiffReport {
  std::vector<MidiffTrial> trials;
  SummaryStats dv_diff, nwj_diff;
  std::size_t b = 0;
  NetConfig net;
  double train_fraction = 0.5;
  std::size_t n_total = 0;
  RoleDims dims;
  std::uint64_t master_seed = 0;
  std::string data_provenance;
  StageSeconds seconds;
};

struct MidiffParams {
  int trials = 5;
  double train_fraction = 0.5;
  std::size_t b = 0;  // 0 -> use the full split
  int threads = 1;
};

/// Baseline that computes the difference of two mutual-information terms,
/// I(X;Y,Z) - I(X;Z), each with its own classifier trained on joint vs.
/// independently-permuted product batches.
MidiffReport run_midiff(const Dataset& data, const MidiffParams& params,
                        const NetConfig& net, std::uint64_t seed);

}  // namespace cmiknn
