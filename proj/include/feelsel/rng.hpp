#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace feelsel {

// Seeded generator with named, independent substreams. A substream's seed
// depends only on the root seed and the stream name, so drawing from one
// stream never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng stream(std::string_view name) const { return Rng(mix(seed_ ^ fnv1a(name))); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  // Always consumes one draw, so stream alignment does not depend on p.
  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean, double sd) {
    if (sd <= 0.0) return mean;
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

  static constexpr std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Stream names used by the engine.
namespace streams {
inline constexpr std::string_view placement = "placement";
inline constexpr std::string_view collision = "collision";
inline constexpr std::string_view departure = "departure";
inline constexpr std::string_view policy = "policy";
inline constexpr std::string_view oracle = "oracle";
}  // namespace streams

}  // namespace feelsel
