#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmiknn/resample.hpp"
#include "cmiknn/rng.hpp"

namespace cmiknn {

enum class LrSchedule {
  exponential,  // learning_rate * epoch_decay^epoch
  cosine,       // anneal from learning_rate to 0 over the full step budget
  constant,     // fixed learning_rate throughout
};

struct OptimizerConfig {
  double learning_rate = 1e-3;  // base rate; the schedule shapes it per step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  // Constant-rate training keeps inflating logits long after the classifier
  // has fit the task, which miscalibrates the ratio estimates the epochs
  // setting cannot be trusted to stop in time. The default therefore decays
  // the rate on a fixed horizon, so large epoch budgets converge instead of
  // drifting.
  LrSchedule schedule = LrSchedule::exponential;
  double epoch_decay = 0.97;  // per-epoch factor for the exponential schedule
};

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden = {64, 64};  // empty = plain logistic regression
  double tau = 1e-3;                   // output clamp [tau, 1-tau]
  OptimizerConfig optimizer;
  int minibatch_size = 128;
  int epochs = 200;
  std::uint64_t init_seed = 0;

  void validate() const;  // throws on bad field values
};

/// Feed-forward ReLU network with a single sigmoid output, used as a binary
/// joint-vs-product classifier. Outputs are always clamped to [tau, 1-tau] so
/// downstream density-ratio transforms stay bounded; the clamp's subgradient
/// is zero, so saturated samples stop contributing training signal.
class Classifier {
 public:
  static Classifier init(const NetConfig& config);

  /// Forward pass on one concatenated (x,y,z) vector; result in [tau, 1-tau].
  double evaluate(std::span<const double> sample) const;

  /// Forward pass on count samples stored row-major (count x input_dim).
  void evaluate_batch(const double* samples, std::size_t count,
                      double* out) const;

  const NetConfig& config() const { return config_; }
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }

  std::size_t parameter_count() const;
  double parameter_norm() const;  // L2 over all weights and biases

  /// Product of per-layer weight-matrix Frobenius norms; an upper-bound
  /// proxy for the network's Lipschitz constant (ReLU is 1-Lipschitz).
  double layer_norm_product() const;

  /// Parameters flattened layer by layer, weights row-major then biases.
  std::vector<double> flatten_parameters() const;
  void set_parameters(std::span<const double> flat);

  /// Analytic gradient of empirical_loss on (joint, product), flattened in
  /// the same order as flatten_parameters. Used by the finite-difference
  /// gradient audit.
  std::vector<double> loss_gradient(const LabeledBatch& joint,
                                    const LabeledBatch& product) const;

  void save_checkpoint(const std::string& path) const;
  static Classifier load_checkpoint(const std::string& path);

  friend Classifier train(Classifier net, const LabeledBatch& joint,
                          const LabeledBatch& product, Rng& rng);

 private:
  Classifier() = default;

  // Forward to the pre-sigmoid logit for a column-per-sample block.
  Eigen::RowVectorXd forward_logits(const Eigen::MatrixXd& inputs) const;

  NetConfig config_;
  std::vector<Eigen::MatrixXd> weights_;  // weights_[l]: out x in
  std::vector<Eigen::VectorXd> biases_;
  std::vector<double> epoch_losses_;
};

/// p1 * (joint mean of -log w) + (1 - p1) * (product mean of -log(1 - w)),
/// p1 = b / (b + b'); identical to the plain mean binary cross-entropy over
/// the pooled labeled set.
double empirical_loss(const Classifier& net, const LabeledBatch& joint,
                      const LabeledBatch& product);

/// Minibatch adaptive-moment descent on the pooled batches for
/// config.epochs epochs, reshuffling each epoch. Deterministic given the
/// classifier's init seed and the rng state. Throws if the loss goes
/// non-finite.
Classifier train(Classifier net, const LabeledBatch& joint,
                 const LabeledBatch& product, Rng& rng);

}  // namespace cmiknn
