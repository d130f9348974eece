#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace semtrack {

/// Independent substreams derived from one experiment seed. Each part of the
/// generator draws from its own stream, so matched seeds share the support,
/// gains, exogenous inputs and noise across regimes.
enum class Stream : std::uint64_t {
  Support = 1,
  Weights = 2,
  Exogenous = 3,
  Noise = 4,
};

/// Seedable generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so the
/// uniform and Gaussian transforms are done here: 53-bit uniforms and the
/// cosine branch of Box-Muller. Substream seeds come from SplitMix64.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64+splitmix64-substreams+box-muller";
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, Stream stream);

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform on {0, ..., n-1}.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace semtrack
