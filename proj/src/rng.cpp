#include "densinf/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace densinf {

std::uint64_t mix64(std::uint64_t z) noexcept {
  // splitmix64 finalizer
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, Stage stage, std::uint64_t task)
    : key_(mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stage)) ^ task)) {}

std::uint64_t RngStream::next_u64() noexcept {
  return mix64(key_ ^ mix64(++counter_));
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

std::uint64_t task_id(double value, std::uint64_t index) noexcept {
  return mix64(std::bit_cast<std::uint64_t>(value + 0.0) ^ mix64(index));
}

}  // namespace densinf
