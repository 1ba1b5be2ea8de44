#include "cavfeed/rng.hpp"

#include <stdexcept>

namespace cavfeed {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(
    const std::array<std::uint32_t, 4>& c,
    const std::array<std::uint32_t, 2>& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round_once(ctr, key);
  }
  return ctr;
}

PhiloxStream::PhiloxStream(std::uint64_t seed, RngDomain domain,
                           std::uint64_t index)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      index_(static_cast<std::uint32_t>(index)),
      domain_(static_cast<std::uint32_t>(domain)) {
  if (index >> 32)
    throw std::invalid_argument("stream index must fit in 32 bits");
}

void PhiloxStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32), index_, domain_};
  const auto out = philox4x32(ctr, key_);
  ++block_;
  const std::uint64_t x0 =
      (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const std::uint64_t x1 =
      (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  buf_[0] = (static_cast<double>(x0 >> 11) + 0.5) * 0x1.0p-53;
  buf_[1] = (static_cast<double>(x1 >> 11) + 0.5) * 0x1.0p-53;
  avail_ = 2;
}

double PhiloxStream::uniform() {
  if (avail_ == 0) refill();
  return buf_[2 - avail_--];
}

std::pair<double, double> PhiloxStream::uniform_pair() {
  const double a = uniform();
  const double b = uniform();
  return {a, b};
}

}  // namespace cavfeed
