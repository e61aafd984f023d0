#pragma once

#include <cstdint>
#include <random>

namespace ncc {

/// A reproducible random stream keyed by (root seed, stream id).
///
/// Satisfies UniformRandomBitGenerator, so it can drive standard
/// distributions and std::sample directly.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  RngStream(std::uint64_t root_seed, std::uint64_t stream_id);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform draw on the open interval (0, 1).
  double uniform_open();
  /// Standard normal draw.
  double normal();

  [[nodiscard]] std::uint64_t root_seed() const { return root_seed_; }
  [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream id for group `group` of replication `replication`.
constexpr std::uint64_t stream_id(std::uint64_t replication, std::uint64_t group) {
  return (replication << 32) | (group & 0xffffffffULL);
}

}  // namespace ncc
