#ifndef FEDIDS_RNG_H_
#define FEDIDS_RNG_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace fedids {

// Well-known stream ids. Each consumer of randomness owns its own stream so
// that results never depend on which thread ran first.
enum class StreamId : std::uint64_t {
  kServer = 1,
  kClient = 2,
  kSplit = 3,
  kAssemble = 4,
  kRepetition = 5,
  kSynthetic = 6,
};

// Reproducible random stream keyed by (seed, stream id, optional sub-keys).
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Distributions are implemented here rather than taken from
// <random> because the standard leaves their algorithms unspecified, and the
// draws must be identical across standard library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  RngStream(std::uint64_t seed, StreamId stream_id)
      : RngStream(seed, static_cast<std::uint64_t>(stream_id)) {}

  // Stream keyed by the seed followed by an arbitrary key path, e.g.
  // (seed, kClient, client_id, iteration).
  static RngStream Derive(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t Below(std::uint64_t bound);

  // Standard normal via Box-Muller.
  double Normal();

  // Fisher-Yates shuffle.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to combine seeds with stream keys.
std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b);

}  // namespace fedids

#endif  // FEDIDS_RNG_H_
