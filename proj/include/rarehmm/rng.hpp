#pragma once

#include <cstdint>
#include <random>

namespace rarehmm {

// splitmix64 finalizer; also used as the building block for hashes.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Reproducible random stream keyed by (master seed, stream index).
/// Distinct indices give statistically independent streams; the same key
/// always replays the identical sequence.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed),
        stream_index_(stream_index),
        engine_(mix64(mix64(master_seed) ^ mix64(stream_index) ^
                      0x6a09e667f3bcc909ULL)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
};

// Composes a stream index from a purpose tag and two coordinates so that
// independent jobs (sweep rows, replicates) never share a stream.
constexpr std::uint64_t compose_stream(std::uint64_t tag, std::uint64_t row,
                                       std::uint64_t rep) noexcept {
  return (tag << 56) ^ (row << 28) ^ rep;
}

namespace stream_tag {
inline constexpr std::uint64_t entropy = 1;
inline constexpr std::uint64_t decode = 2;
inline constexpr std::uint64_t events = 3;
inline constexpr std::uint64_t paired = 4;
inline constexpr std::uint64_t tail = 5;
inline constexpr std::uint64_t sample = 6;
}  // namespace stream_tag

}  // namespace rarehmm
