#pragma once

#include <array>
#include <cstdint>

namespace rfi {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, a, b, c).
///
/// Every (seed, a, b, c) tuple names an independent stream, so chains and
/// steps can be drawn in any order or on any thread with identical results.
/// The engine uses a = chain, b = step, c = component.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    /// Standard normal conditioned on |z| <= limit (resampling).
    double truncated_normal(double limit);

    /// Number of 32-bit words consumed so far.
    std::uint64_t position() const noexcept { return consumed_; }

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    unsigned cursor_ = 4;
    std::uint64_t consumed_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Reserved values for the component word of RngStream.
namespace stream {
inline constexpr std::uint32_t kIndex = 0;
inline constexpr std::uint32_t kInitial = 1;
inline constexpr std::uint32_t kProblem = 2;
inline constexpr std::uint32_t kPairs = 3;
inline constexpr std::uint32_t kShared = 4;
inline constexpr std::uint32_t kBootstrap = 5;
inline constexpr std::uint32_t kNoiseMc = 6;
inline constexpr std::uint32_t kDiscrepancy = 7;
} // namespace stream

} // namespace rfi
