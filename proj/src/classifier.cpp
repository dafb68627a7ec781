#include "cmiknn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace cmiknn {
namespace {

constexpr double kPi = 3.14159265358979323846;

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// One column per sample, concatenated (x, y, z).
Eigen::MatrixXd batch_columns(const LabeledBatch& batch) {
  const Dataset& ds = batch.samples;
  const RoleDims dims = ds.dims();
  Eigen::MatrixXd cols(dims.total(), ds.size());
  for (std::size_t s = 0; s < ds.size(); ++s) {
    double* col = cols.col(static_cast<Eigen::Index>(s)).data();
    const auto x = ds.x(s), y = ds.y(s), z = ds.z(s);
    col = std::copy(x.begin(), x.end(), col);
    col = std::copy(y.begin(), y.end(), col);
    std::copy(z.begin(), z.end(), col);
  }
  return cols;
}

void check_pair(const Classifier& net, const LabeledBatch& joint,
                const LabeledBatch& product) {
  if (joint.size() == 0 || product.size() == 0)
    throw std::invalid_argument("classifier: empty batch");
  if (joint.label != 1 || product.label != 0)
    throw std::invalid_argument(
        "classifier: expected labels q=1 (joint) and q=0 (product)");
  if (joint.samples.dims().total() != net.config().input_dim ||
      product.samples.dims().total() != net.config().input_dim)
    throw std::invalid_argument(
        "classifier: batch sample dimension does not match input_dim");
}

}  // namespace

void NetConfig::validate() const {
  if (input_dim < 1)
    throw std::invalid_argument("NetConfig: input_dim must be >= 1");
  for (int w : hidden)
    if (w < 1)
      throw std::invalid_argument("NetConfig: hidden layer width must be >= 1");
  if (!(tau > 0.0 && tau < 0.5))
    throw std::invalid_argument("NetConfig: tau must lie in (0, 0.5)");
  if (minibatch_size < 1)
    throw std::invalid_argument("NetConfig: minibatch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("NetConfig: epochs must be >= 0");
  if (!(optimizer.learning_rate > 0.0) || !(optimizer.epsilon_hat > 0.0) ||
      !(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0))
    throw std::invalid_argument("NetConfig: bad optimizer parameters");
}

Classifier Classifier::init(const NetConfig& config) {
  config.validate();
  Classifier net;
  net.config_ = config;

  std::vector<int> widths;
  widths.push_back(config.input_dim);
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);

  Rng rng(config.init_seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    Eigen::MatrixXd w(out, in);
    // near-zero output layer keeps initial logits inside the clamp even for
    // wide-scale inputs, so every sample contributes gradient from step one
    const bool head = l + 2 == widths.size();
    const double limit = std::sqrt(6.0 / in) * (head ? 0.01 : 1.0);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c)
        w(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

Eigen::RowVectorXd Classifier::forward_logits(
    const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd a = inputs;
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = z.cwiseMax(0.0);
  }
  Eigen::MatrixXd logit = weights_[last] * a;
  logit.colwise() += biases_[last];
  return logit.row(0);
}

double Classifier::evaluate(std::span<const double> sample) const {
  if (static_cast<int>(sample.size()) != config_.input_dim)
    throw std::invalid_argument("Classifier::evaluate: wrong input dimension");
  Eigen::Map<const Eigen::MatrixXd> in(sample.data(), config_.input_dim, 1);
  const double s = stable_sigmoid(forward_logits(in)(0));
  return std::clamp(s, config_.tau, 1.0 - config_.tau);
}

void Classifier::evaluate_batch(const double* samples, std::size_t count,
                                double* out) const {
  constexpr std::size_t kChunk = 8192;
  const int dim = config_.input_dim;
  Eigen::MatrixXd block(dim, static_cast<Eigen::Index>(std::min(count, kChunk)));
  for (std::size_t start = 0; start < count; start += kChunk) {
    const auto c = static_cast<Eigen::Index>(std::min(kChunk, count - start));
    for (Eigen::Index j = 0; j < c; ++j)
      block.col(j) = Eigen::Map<const Eigen::VectorXd>(
          samples + (start + static_cast<std::size_t>(j)) * dim, dim);
    const Eigen::RowVectorXd logits = forward_logits(block.leftCols(c));
    for (Eigen::Index j = 0; j < c; ++j)
      out[start + static_cast<std::size_t>(j)] = std::clamp(
          stable_sigmoid(logits(j)), config_.tau, 1.0 - config_.tau);
  }
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size()) +
         static_cast<std::size_t>(biases_[l].size());
  return n;
}

double Classifier::parameter_norm() const {
  double sq = 0.0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    sq += weights_[l].squaredNorm() + biases_[l].squaredNorm();
  return std::sqrt(sq);
}

double Classifier::layer_norm_product() const {
  double prod = 1.0;
  for (const auto& w : weights_) prod *= w.norm();
  return prod;
}

std::vector<double> Classifier::flatten_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r)
      flat.push_back(biases_[l](r));
  }
  return flat;
}

void Classifier::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("Classifier::set_parameters: size mismatch");
  std::size_t i = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[i++];
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r)
      biases_[l](r) = flat[i++];
  }
}

double empirical_loss(const Classifier& net, const LabeledBatch& joint,
                      const LabeledBatch& product) {
  check_pair(net, joint, product);
  const auto b = static_cast<double>(joint.size());
  const auto bp = static_cast<double>(product.size());
  const double p1 = b / (b + bp);

  auto mean_term = [&](const LabeledBatch& batch, bool is_joint) {
    const Dataset& ds = batch.samples;
    const auto dim = static_cast<std::size_t>(ds.dims().total());
    std::vector<double> rows(batch.size() * dim);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      double* r = rows.data() + s * dim;
      const auto x = ds.x(s), y = ds.y(s), z = ds.z(s);
      r = std::copy(x.begin(), x.end(), r);
      r = std::copy(y.begin(), y.end(), r);
      std::copy(z.begin(), z.end(), r);
    }
    std::vector<double> probs(batch.size());
    net.evaluate_batch(rows.data(), batch.size(), probs.data());
    double acc = 0.0;
    for (double w : probs) acc += is_joint ? -std::log(w) : -std::log(1.0 - w);
    return acc / static_cast<double>(batch.size());
  };

  return p1 * mean_term(joint, true) + (1.0 - p1) * mean_term(product, false);
}

std::vector<double> Classifier::loss_gradient(const LabeledBatch& joint,
                                              const LabeledBatch& product) const {
  check_pair(*this, joint, product);
  const Eigen::MatrixXd jc = batch_columns(joint);
  const Eigen::MatrixXd pc = batch_columns(product);
  const Eigen::Index nj = jc.cols(), np = pc.cols(), n = nj + np;

  Eigen::MatrixXd inputs(jc.rows(), n);
  inputs << jc, pc;
  Eigen::RowVectorXd labels(n);
  labels.leftCols(nj).setOnes();
  labels.rightCols(np).setZero();

  const std::size_t last = weights_.size() - 1;
  std::vector<Eigen::MatrixXd> acts(weights_.size());
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < last; ++l) {
    acts[l] = a;
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = z.cwiseMax(0.0);
  }
  acts[last] = a;
  Eigen::RowVectorXd logit = (weights_[last] * a).row(0);
  logit.array() += biases_[last](0);

  // d(mean BCE)/d logit, with zero signal wherever the clamp is active
  Eigen::RowVectorXd dlogit(n);
  const double tau = config_.tau;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = stable_sigmoid(logit(j));
    dlogit(j) = (s > tau && s < 1.0 - tau)
                    ? (s - labels(j)) / static_cast<double>(n)
                    : 0.0;
  }

  std::vector<Eigen::MatrixXd> gw(weights_.size());
  std::vector<Eigen::VectorXd> gb(weights_.size());
  Eigen::MatrixXd delta = dlogit;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    gw[l] = delta * acts[l].transpose();
    gb[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weights_[l].transpose() * delta;
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }

  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index r = 0; r < gw[l].rows(); ++r)
      for (Eigen::Index c = 0; c < gw[l].cols(); ++c) flat.push_back(gw[l](r, c));
    for (Eigen::Index r = 0; r < gb[l].size(); ++r) flat.push_back(gb[l](r));
  }
  return flat;
}

Classifier train(Classifier net, const LabeledBatch& joint,
                 const LabeledBatch& product, Rng& rng) {
  check_pair(net, joint, product);
  const Eigen::MatrixXd jc = batch_columns(joint);
  const Eigen::MatrixXd pc = batch_columns(product);
  const Eigen::Index n = jc.cols() + pc.cols();
  Eigen::MatrixXd pool(jc.rows(), n);
  pool << jc, pc;
  Eigen::RowVectorXd labels(n);
  labels.leftCols(jc.cols()).setOnes();
  labels.rightCols(pc.cols()).setZero();

  const auto& cfg = net.config_;
  const auto& opt = cfg.optimizer;
  const double tau = cfg.tau;
  const Eigen::Index bsz =
      std::min<Eigen::Index>(cfg.minibatch_size, n);
  const std::size_t layers = net.weights_.size();

  std::vector<Eigen::MatrixXd> mw(layers), vw(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(net.weights_[l].rows(), net.weights_[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(net.biases_[l].size());
    vb[l] = mb[l];
  }

  std::vector<std::uint32_t> perm(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i)
    perm[i] = static_cast<std::uint32_t>(i);

  std::vector<Eigen::MatrixXd> acts(layers);
  std::vector<Eigen::MatrixXd> grad_w(layers);
  std::vector<Eigen::VectorXd> grad_b(layers);
  Eigen::MatrixXd block(pool.rows(), bsz);
  Eigen::RowVectorXd qs(bsz);

  auto epoch_rate = [&](int epoch) {
    switch (opt.schedule) {
      case LrSchedule::exponential:
        return opt.learning_rate *
               std::pow(opt.epoch_decay, static_cast<double>(epoch));
      case LrSchedule::cosine: {
        if (cfg.epochs <= 1) return opt.learning_rate;
        const double phase =
            static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
        return opt.learning_rate * 0.5 * (1.0 + std::cos(kPi * phase));
      }
      case LrSchedule::constant:
        break;
    }
    return opt.learning_rate;
  };

  long long step = 0;
  net.epoch_losses_.clear();
  net.epoch_losses_.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(perm, rng);
    const double rate = epoch_rate(epoch);
    double epoch_loss = 0.0;
    Eigen::Index seen = 0;

    for (Eigen::Index start = 0; start < n; start += bsz) {
      const Eigen::Index c = std::min(bsz, n - start);
      for (Eigen::Index j = 0; j < c; ++j) {
        const auto src = perm[static_cast<std::size_t>(start + j)];
        block.col(j) = pool.col(src);
        qs(j) = labels(src);
      }

      // forward
      const std::size_t last = layers - 1;
      Eigen::MatrixXd a = block.leftCols(c);
      for (std::size_t l = 0; l < last; ++l) {
        acts[l] = a;
        Eigen::MatrixXd z = net.weights_[l] * a;
        z.colwise() += net.biases_[l];
        a = z.cwiseMax(0.0);
      }
      acts[last] = a;
      Eigen::RowVectorXd logit = (net.weights_[last] * a).row(0);
      logit.array() += net.biases_[last](0);

      double loss = 0.0;
      Eigen::MatrixXd delta(1, c);
      for (Eigen::Index j = 0; j < c; ++j) {
        const double s = stable_sigmoid(logit(j));
        const double w = std::clamp(s, tau, 1.0 - tau);
        const double q = qs(j);
        loss += q > 0.5 ? -std::log(w) : -std::log(1.0 - w);
        delta(0, j) = (s > tau && s < 1.0 - tau)
                          ? (s - q) / static_cast<double>(c)
                          : 0.0;
      }
      loss /= static_cast<double>(c);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: loss became non-finite at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(c);
      seen += c;

      // backward
      Eigen::MatrixXd d = delta;
      for (std::size_t l = layers; l-- > 0;) {
        grad_w[l] = d * acts[l].transpose();
        grad_b[l] = d.rowwise().sum();
        if (l > 0) {
          Eigen::MatrixXd back = net.weights_[l].transpose() * d;
          d = back.cwiseProduct(
              (acts[l].array() > 0.0).cast<double>().matrix());
        }
      }

      // adaptive-moment update
      ++step;
      const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = opt.beta1 * mw[l] + (1.0 - opt.beta1) * grad_w[l];
        vw[l].array() = opt.beta2 * vw[l].array() +
                        (1.0 - opt.beta2) * grad_w[l].array().square();
        net.weights_[l].array() -=
            rate * (mw[l].array() / bc1) /
            ((vw[l].array() / bc2).sqrt() + opt.epsilon_hat);
        mb[l] = opt.beta1 * mb[l] + (1.0 - opt.beta1) * grad_b[l];
        vb[l].array() = opt.beta2 * vb[l].array() +
                        (1.0 - opt.beta2) * grad_b[l].array().square();
        net.biases_[l].array() -=
            rate * (mb[l].array() / bc1) /
            ((vb[l].array() / bc2).sqrt() + opt.epsilon_hat);
      }
    }
    net.epoch_losses_.push_back(epoch_loss / static_cast<double>(seen));
  }
  return net;
}

void Classifier::save_checkpoint(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["format"] = "cmiknn-net-v1";
  doc["input_dim"] = config_.input_dim;
  doc["hidden"] = config_.hidden;
  doc["tau"] = config_.tau;
  doc["minibatch_size"] = config_.minibatch_size;
  doc["epochs"] = config_.epochs;
  doc["init_seed"] = config_.init_seed;
  doc["optimizer"] = {
      {"learning_rate", config_.optimizer.learning_rate},
      {"beta1", config_.optimizer.beta1},
      {"beta2", config_.optimizer.beta2},
      {"epsilon_hat", config_.optimizer.epsilon_hat},
      {"schedule", config_.optimizer.schedule == LrSchedule::exponential
                       ? "exponential"
                       : config_.optimizer.schedule == LrSchedule::cosine
                             ? "cosine"
                             : "constant"},
      {"epoch_decay", config_.optimizer.epoch_decay}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    nlohmann::ordered_json layer;
    layer["rows"] = weights_[l].rows();
    layer["cols"] = weights_[l].cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weights_[l].size()));
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c)
        w.push_back(weights_[l](r, c));
    layer["weights"] = w;
    std::vector<double> b(biases_[l].data(),
                          biases_[l].data() + biases_[l].size());
    layer["bias"] = b;
    layers.push_back(std::move(layer));
  }
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
  out << doc.dump(2) << '\n';
}

Classifier Classifier::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot read " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.value("format", "") != "cmiknn-net-v1")
    throw std::runtime_error("load_checkpoint: unrecognized format tag");

  NetConfig cfg;
  cfg.input_dim = doc.at("input_dim").get<int>();
  cfg.hidden = doc.at("hidden").get<std::vector<int>>();
  cfg.tau = doc.at("tau").get<double>();
  cfg.minibatch_size = doc.at("minibatch_size").get<int>();
  cfg.epochs = doc.at("epochs").get<int>();
  cfg.init_seed = doc.at("init_seed").get<std::uint64_t>();
  const auto& opt = doc.at("optimizer");
  cfg.optimizer.learning_rate = opt.at("learning_rate").get<double>();
  cfg.optimizer.beta1 = opt.at("beta1").get<double>();
  cfg.optimizer.beta2 = opt.at("beta2").get<double>();
  cfg.optimizer.epsilon_hat = opt.at("epsilon_hat").get<double>();
  const std::string sched = opt.value("schedule", "exponential");
  if (sched == "exponential")
    cfg.optimizer.schedule = LrSchedule::exponential;
  else if (sched == "cosine")
    cfg.optimizer.schedule = LrSchedule::cosine;
  else if (sched == "constant")
    cfg.optimizer.schedule = LrSchedule::constant;
  else
    throw std::runtime_error("load_checkpoint: unknown schedule " + sched);
  cfg.optimizer.epoch_decay = opt.value("epoch_decay", 0.97);

  Classifier net = Classifier::init(cfg);
  const auto& layers = doc.at("layers");
  if (layers.size() != net.weights_.size())
    throw std::runtime_error("load_checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    const auto& layer = layers.at(l);
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    if (rows != net.weights_[l].rows() || cols != net.weights_[l].cols())
      throw std::runtime_error("load_checkpoint: layer shape mismatch");
    const auto w = layer.at("weights").get<std::vector<double>>();
    const auto b = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
      throw std::runtime_error("load_checkpoint: layer payload size mismatch");
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) net.weights_[l](r, c) = w[i++];
    for (Eigen::Index r = 0; r < rows; ++r) net.biases_[l](r) = b[r];
  }
  return net;
}

}  // namespace cmiknn
