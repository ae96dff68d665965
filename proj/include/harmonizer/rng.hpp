#ifndef HARMONIZER_RNG_HPP
#define HARMONIZER_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace harmonizer {

// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

// Reserved stream ids that are not vehicle ids.
inline constexpr std::uint64_t kLaneChangeStream = 0xFFFF'FFFF'0000'0001ULL;
inline constexpr std::uint64_t kTrajectoryStream = 0xFFFF'FFFF'0000'0002ULL;

// mt19937_64 (output sequence fixed by the C++ standard) with uniform and
// Box-Muller normal draws written out here, since std::normal_distribution
// differs between standard library implementations.
class NoiseStream {
   public:
    NoiseStream() = default;
    NoiseStream(std::uint64_t seed, std::uint64_t stream) : engine_(substream_seed(seed, stream)) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

    bool operator==(const NoiseStream&) const = default;

   private:
    std::mt19937_64 engine_{substream_seed(0, 0)};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace harmonizer

#endif  // HARMONIZER_RNG_HPP
