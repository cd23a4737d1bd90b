// random.hpp
// Seeded random streams.
//
// Every Monte-Carlo stream is derived from the user seed by feeding
// (seed low word, seed high word, worker index, setting index, purpose tag)
// through std::seed_seq into a 64-bit Mersenne twister. Streams for distinct
// (worker, setting, tag) triples are therefore independent and reproducible.

#pragma once

#include <cstdint>
#include <random>

namespace fiberbell {

using RandomStream = std::mt19937_64;

enum class StreamTag : std::uint32_t {
  kAcquisition = 1,
  kPhaseLoop = 2,
  kReferenceNoise = 3,
};

inline RandomStream make_stream(std::uint64_t seed, std::uint64_t worker, std::uint64_t setting,
                                StreamTag tag = StreamTag::kAcquisition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker), static_cast<std::uint32_t>(worker >> 32),
                    static_cast<std::uint32_t>(setting), static_cast<std::uint32_t>(setting >> 32),
                    static_cast<std::uint32_t>(tag)};
  return RandomStream(seq);
}

}  // namespace fiberbell
