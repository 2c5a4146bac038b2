#pragma once

#include <array>
#include <cstdint>

#include "nested_hinf/linalg.h"

namespace nested_hinf {

/// Philox4x32-10 counter-based generator. The stream is a pure function of
/// (seed, draw index), so results do not depend on the platform's <random>.
class Philox {
 public:
  explicit Philox(std::uint64_t seed);

  std::uint32_t NextU32();
  /// Uniform on the open interval (0, 1).
  double Uniform();
  /// Standard normal (Box-Muller).
  double Normal();
  /// rows×cols matrix of independent standard normal draws, filled row-major.
  Matrix NormalMatrix(Eigen::Index rows, Eigen::Index cols);

 private:
  void Refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nested_hinf
