#pragma once

#include <cstdint>
#include <string>

#include "cmiknn/dataset.hpp"
#include "cmiknn/rng.hpp"

namespace cmiknn {

/// Markov chain X -> Y -> Z with X ~ N(0, sx^2 S), Y ~ N(X, sy^2 S),
/// Z ~ N(Y, sz^2 S), where S is the d x d tridiagonal matrix with unit
/// diagonal and off-diagonal rho. |rho| < 0.5 keeps S strictly diagonally
/// dominant, hence positive definite; rho = 0 gives the identity.
struct GaussianChainConfig {
  double sigma_x = 10.0;
  double sigma_y = 1.0;
  double sigma_z = 5.0;
  int dim = 3;
  double rho = 0.0;

  void validate() const;
};

Dataset sample_gaussian_chain(const GaussianChainConfig& config, std::size_t n,
                              std::uint64_t seed);

/// Closed form for I(X;Y|Z) in nats:
///   d/2 * [log(1 + sx^2/sy^2) - log(1 + sx^2/(sy^2 + sz^2))].
/// Only exposed for rho = 0.
double true_cmi_xy_given_z(const GaussianChainConfig& config);

/// I(X;Z|Y) = 0 for every parameterization (Markov chain X -> Y -> Z).
double true_cmi_xz_given_y(const GaussianChainConfig& config);

/// Coefficients of the Gaussian conditionals used by the analytic density
/// ratio: X|Y=y ~ N(a_xy * y, v_xy * I) and X|Z=z ~ N(a_xz * z, v_xz * I).
/// Valid for rho = 0 (independent coordinates).
struct ChainConditionals {
  double a_xy, v_xy;
  double a_xz, v_xz;
};
ChainConditionals chain_conditionals(const GaussianChainConfig& config);

/// Replaces each x_i by a fresh draw from p(x | z_i), leaving (y, z) intact.
/// The result is an exact sample from the product density p(x|z)p(y,z); used
/// as a Monte-Carlo oracle. Requires rho = 0.
Dataset resample_x_given_z(const GaussianChainConfig& config,
                           const Dataset& joint, Rng& rng);

/// Scalar map applied element-wise to one role. Registered names:
///   "identity", "tanh:<a>" (x -> tanh(a*x)), "affine:<a>,<b>" (x -> a*x+b).
class ComponentMap {
 public:
  static ComponentMap parse(const std::string& descriptor);
  static ComponentMap identity();
  static ComponentMap tanh_scale(double a);
  static ComponentMap affine(double a, double b);

  double operator()(double v) const;
  const std::string& descriptor() const { return descriptor_; }

 private:
  enum class Kind { identity, tanh_scale, affine };
  ComponentMap(Kind kind, double a, double b, std::string descriptor);
  Kind kind_;
  double a_, b_;
  std::string descriptor_;
};

Dataset apply_componentwise(const Dataset& dataset, Role role,
                            const ComponentMap& map);

}  // namespace cmiknn
