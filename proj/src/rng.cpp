#include "cmiknn/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cmiknn {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::fork(std::uint64_t tag) const {
  return Rng(mix64(seed_ + kGolden * (tag + 1)));
}

std::uint64_t Rng::next_u64() {
  counter_ += kGolden;
  return mix64(counter_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be > 0");
  const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(bound | 1);
  std::uint64_t v;
  do {
    v = next_u64() & mask;
  } while (v >= bound);
  return v;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<std::uint32_t> sample_without_replacement(std::uint32_t population,
                                                      std::uint32_t m, Rng& rng) {
  if (m > population) {
    throw std::invalid_argument("sample_without_replacement: m exceeds population");
  }
  std::vector<std::uint32_t> pool(population);
  for (std::uint32_t i = 0; i < population; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::uint32_t>(rng.below(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  return pool;
}

void shuffle_indices(std::span<std::uint32_t> items, Rng& rng) {
  if (items.empty()) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(items[i], items[j]);
  }
}

}  // namespace cmiknn
