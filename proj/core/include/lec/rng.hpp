#pragma once

#include <array>
#include <cstdint>

namespace lec {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, stream id, domain). Every draw is a pure
/// function of that key and an internal block counter, so paths generated in
/// parallel are bit-identical to paths generated sequentially.
class RngStream {
public:
    /// Domains separate independent uses of the same (seed, index) pair.
    enum class Domain : std::uint32_t {
        biometric = 1,
        settlement = 2,
        intervention = 3,
        resampling = 4,
        generic = 5,
    };

    RngStream(std::uint64_t seed, std::uint64_t stream, Domain domain = Domain::generic) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    /// Exponential with unit mean.
    double exponential() noexcept;

    /// Standard normal (Box-Muller, one value per call).
    double normal() noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t stream_id() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buffer_{};
    std::uint64_t stream_ = 0;
    int used_ = 4;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace lec
