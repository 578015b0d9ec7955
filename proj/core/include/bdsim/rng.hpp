#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace bdsim {

// Counter-based stream: Philox4x32-10 keyed per stream, so any replica's
// stream is reproducible from (master_seed, replica_index) alone and results
// cannot depend on thread scheduling. The counter is 128 bits; exhaustion is
// not reachable.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(uint64_t key64);

  // Stream for replica `index` under `master_seed`.
  static RngStream derive(uint64_t master_seed, uint64_t index);
  // Independent substream of this stream (does not disturb this stream).
  RngStream child(uint64_t salt) const;

  uint64_t key64() const { return key64_; }

  uint32_t next_u32();
  uint64_t next_u64();

  // Strictly inside (0,1); 53-bit resolution, never 0 (safe under log).
  double uniform();
  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via ziggurat (128 layers).
  double normal();

  // Exp(rate); rate <= 0 yields +infinity (used for "no branching").
  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform()) / rate;
  }

  // Index in [0, n) (unbiased via rejection).
  uint64_t below(uint64_t n);

 private:
  void refill();

  uint64_t key64_ = 0;
  std::array<uint32_t, 2> key_{};
  std::array<uint32_t, 4> ctr_{};
  std::array<uint32_t, 4> buf_{};
  int avail_ = 0;  // unread words in buf_, consumed from the back
};

// SplitMix64 finalizer; the stream-derivation hash.
uint64_t mix64(uint64_t z);

// One raw Philox4x32-10 block (counter, key) -> 4 words; the bijection the
// stream draws from. Exposed so known-answer vectors can pin the generator.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key);

}  // namespace bdsim
