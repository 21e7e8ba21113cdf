#pragma once

#include <cstdint>

namespace densinf {

/// Pipeline stages; part of every stream key so stages never share draws.
enum class Stage : std::uint64_t {
  kGeneric = 0,
  kDensity = 1,
  kKinf = 2,
  kLipschitz = 3,
  kRugosity = 4,
  kVerify = 5,
};

/// Counter-based random stream keyed by (seed, stage, task).
///
/// Output k of a stream is a pure function of (key, k), so results never
/// depend on the order in which tasks are executed. Normal variates use a
/// local Box-Muller transform so the bit patterns do not depend on the
/// standard library's distribution implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, Stage stage, std::uint64_t task);
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t id() const noexcept { return key_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Task id derived from a real parameter (e.g. a fiber level) and an index.
std::uint64_t task_id(double value, std::uint64_t index) noexcept;

}  // namespace densinf
