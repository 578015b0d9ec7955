#include "bdsim/rng.hpp"

#include <cmath>

namespace bdsim {

uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& x, uint32_t k0, uint32_t k1) {
  const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * x[0];
  const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * x[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
}

// Marsaglia–Tsang ziggurat tables for the standard normal, 128 layers.
struct ZigTables {
  uint32_t kn[128];
  double wn[128];
  double fn[128];
  ZigTables() {
    const double m1 = 2147483648.0;  // 2^31
    double dn = 3.442619855899, tn = dn;
    const double vn = 9.91256303526217e-3;
    double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

const ZigTables kZig;
constexpr double kZigR = 3.442619855899;

}  // namespace

RngStream::RngStream(uint64_t key64) : key64_(key64) {
  key_ = {static_cast<uint32_t>(key64), static_cast<uint32_t>(key64 >> 32)};
}

RngStream RngStream::derive(uint64_t master_seed, uint64_t index) {
  return RngStream(mix64(master_seed + 0x9E3779B97F4A7C15ull * index));
}

RngStream RngStream::child(uint64_t salt) const {
  return RngStream(mix64(key64_ ^ mix64(salt)));
}

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    philox_round(ctr, key[0], key[1]);
  }
  return ctr;
}

void RngStream::refill() {
  buf_ = philox4x32(ctr_, key_);
  for (int i = 0; i < 4; ++i)
    if (++ctr_[static_cast<size_t>(i)] != 0) break;
  avail_ = 4;
}

uint32_t RngStream::next_u32() {
  if (avail_ == 0) refill();
  return buf_[static_cast<size_t>(--avail_)];
}

uint64_t RngStream::next_u64() {
  const uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double RngStream::uniform() {
  // (x + 0.5) / 2^53: strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t RngStream::below(uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t lim = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % n;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= lim);
  return x % n;
}

double RngStream::normal() {
  for (;;) {
    const int32_t hz = static_cast<int32_t>(next_u32());
    const int iz = hz & 127;
    if (static_cast<uint32_t>(hz < 0 ? -static_cast<int64_t>(hz) : hz) < kZig.kn[iz])
      return hz * kZig.wn[iz];
    if (iz == 0) {
      // Tail beyond the base strip.
      double x, y;
      do {
        x = -std::log(uniform()) / kZigR;
        y = -std::log(uniform());
      } while (y + y < x * x);
      return hz < 0 ? -(kZigR + x) : (kZigR + x);
    }
    const double x = hz * kZig.wn[iz];
    if (kZig.fn[iz] + uniform() * (kZig.fn[iz - 1] - kZig.fn[iz]) < std::exp(-0.5 * x * x))
      return x;
  }
}

}  // namespace bdsim
