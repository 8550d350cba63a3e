#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hlda {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// The 64-bit key selects the experiment seed and the upper half of the
// counter selects an independent substream, so every Monte Carlo path owns
// its own stream without any shared state between workers.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0u, 0u, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    // Two 32-bit lanes of the current block per 64-bit output.
    result_type operator()() {
        if (index_ == 4) {
            block_ = encrypt(counter_, key_);
            increment();
            index_ = 0;
        }
        const result_type lo = block_[index_];
        const result_type hi = block_[index_ + 1];
        index_ += 2;
        return lo | (hi << 32);
    }

    // Raw block function, exposed for known-answer tests.
    static counter_type encrypt(counter_type ctr, key_type key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void increment() {
        if (++counter_[0] == 0) ++counter_[1];
    }

    key_type key_;
    counter_type counter_;
    counter_type block_{};
    int index_ = 4;
};

using Rng = Philox4x32;

// Stream for path `index` of an experiment seeded with `seed`.
inline Rng path_stream(std::uint64_t seed, std::uint64_t index) { return Rng(seed, index); }

}  // namespace hlda
