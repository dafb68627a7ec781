#include "cmiknn/gaussian_chain.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace cmiknn {

void GaussianChainConfig::validate() const {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(sigma_z > 0.0)) {
    throw std::invalid_argument("GaussianChainConfig: sigmas must be positive");
  }
  if (dim < 1) throw std::invalid_argument("GaussianChainConfig: dim must be >= 1");
  if (!(std::abs(rho) < 0.5)) {
    throw std::invalid_argument(
        "GaussianChainConfig: |rho| must be < 0.5 for a positive definite covariance");
  }
}

namespace {

Eigen::MatrixXd tridiagonal_cholesky(int dim, double rho) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) {
    cov(i, i + 1) = rho;
    cov(i + 1, i) = rho;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianChainConfig: covariance not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

Dataset sample_gaussian_chain(const GaussianChainConfig& config, std::size_t n,
                              std::uint64_t seed) {
  config.validate();
  if (n < 1) throw std::invalid_argument("sample_gaussian_chain: n must be >= 1");

  const int d = config.dim;
  const Eigen::MatrixXd chol = tridiagonal_cholesky(d, config.rho);
  Dataset out({d, d, d}, n);
  Rng rng(seed);

  Eigen::VectorXd g(d), noise(d);
  auto draw = [&](double sigma) {
    for (int c = 0; c < d; ++c) g(c) = rng.gaussian();
    noise.noalias() = sigma * (chol * g);
  };
  for (std::size_t i = 0; i < n; ++i) {
    auto x = out.x(i);
    auto y = out.y(i);
    auto z = out.z(i);
    draw(config.sigma_x);
    for (int c = 0; c < d; ++c) x[c] = noise(c);
    draw(config.sigma_y);
    for (int c = 0; c < d; ++c) y[c] = x[c] + noise(c);
    draw(config.sigma_z);
    for (int c = 0; c < d; ++c) z[c] = y[c] + noise(c);
  }
  out.seed = seed;
  out.provenance = "gaussian_chain";
  return out;
}

double true_cmi_xy_given_z(const GaussianChainConfig& config) {
  config.validate();
  if (config.rho != 0.0) {
    throw std::invalid_argument(
        "true_cmi_xy_given_z: closed form available for rho = 0 only");
  }
  const double sx2 = config.sigma_x * config.sigma_x;
  const double sy2 = config.sigma_y * config.sigma_y;
  const double sz2 = config.sigma_z * config.sigma_z;
  return 0.5 * config.dim *
         (std::log1p(sx2 / sy2) - std::log1p(sx2 / (sy2 + sz2)));
}

double true_cmi_xz_given_y(const GaussianChainConfig& config) {
  config.validate();
  return 0.0;
}

ChainConditionals chain_conditionals(const GaussianChainConfig& config) {
  config.validate();
  if (config.rho != 0.0) {
    throw std::invalid_argument("chain_conditionals: requires rho = 0");
  }
  const double sx2 = config.sigma_x * config.sigma_x;
  const double sy2 = config.sigma_y * config.sigma_y;
  const double sz2 = config.sigma_z * config.sigma_z;
  ChainConditionals c{};
  c.a_xy = sx2 / (sx2 + sy2);
  c.v_xy = sx2 * sy2 / (sx2 + sy2);
  c.a_xz = sx2 / (sx2 + sy2 + sz2);
  c.v_xz = sx2 * (sy2 + sz2) / (sx2 + sy2 + sz2);
  return c;
}

Dataset resample_x_given_z(const GaussianChainConfig& config,
                           const Dataset& joint, Rng& rng) {
  const auto cond = chain_conditionals(config);
  if (joint.dims().x != config.dim || joint.dims().z != config.dim) {
    throw std::invalid_argument("resample_x_given_z: dataset dims do not match config");
  }
  Dataset out = joint;
  const double sd = std::sqrt(cond.v_xz);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto x = out.x(i);
    const auto z = out.z(i);
    for (int c = 0; c < config.dim; ++c) {
      x[c] = cond.a_xz * z[c] + sd * rng.gaussian();
    }
  }
  out.provenance = joint.provenance + "/x_given_z";
  return out;
}

ComponentMap::ComponentMap(Kind kind, double a, double b, std::string descriptor)
    : kind_(kind), a_(a), b_(b), descriptor_(std::move(descriptor)) {}

ComponentMap ComponentMap::identity() {
  return ComponentMap(Kind::identity, 0.0, 0.0, "identity");
}

ComponentMap ComponentMap::tanh_scale(double a) {
  return ComponentMap(Kind::tanh_scale, a, 0.0, "tanh:" + std::to_string(a));
}

ComponentMap ComponentMap::affine(double a, double b) {
  return ComponentMap(Kind::affine, a, b,
                      "affine:" + std::to_string(a) + "," + std::to_string(b));
}

ComponentMap ComponentMap::parse(const std::string& descriptor) {
  if (descriptor == "identity") return identity();
  const auto colon = descriptor.find(':');
  const std::string name = descriptor.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
  try {
    if (name == "tanh") return tanh_scale(std::stod(args));
    if (name == "affine") {
      const auto comma = args.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("affine needs a,b");
      return affine(std::stod(args.substr(0, comma)), std::stod(args.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("ComponentMap: bad arguments in '" + descriptor + "'");
  }
  throw std::invalid_argument("ComponentMap: unknown map '" + descriptor + "'");
}

double ComponentMap::operator()(double v) const {
  switch (kind_) {
    case Kind::identity: return v;
    case Kind::tanh_scale: return std::tanh(a_ * v);
    case Kind::affine: return a_ * v + b_;
  }
  return v;
}

Dataset apply_componentwise(const Dataset& dataset, Role role,
                            const ComponentMap& map) {
  Dataset out = dataset;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (double& v : out.role(role, i)) v = map(v);
  }
  out.provenance = dataset.provenance + "/" + map.descriptor();
  return out;
}

}  // namespace cmiknn
