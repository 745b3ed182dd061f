#include "kinex/random.hpp"

#include <bit>
#include <cmath>

namespace kinex {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) {
    x += 0x9e3779b97f4a7c15ULL;
    word = splitmix64(x);
  }
}

RandomStream RandomStream::child(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  key = splitmix64(key ^ splitmix64(lane + 0x8cb92ba72f3d8dd7ULL));
  return RandomStream(key);
}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RandomStream::exponential(double rate) {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Lemire's nearly-divisionless method.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace kinex
