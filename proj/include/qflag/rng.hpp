#pragma once

// Counter-based random streams.
//
// Every path draws from its own Philox4x32-10 stream keyed by the 64-bit root
// seed, with the 128-bit counter laid out as
//
//   word 0     block index within the stream
//   word 1     substream id (distinguishes independent noises of one path)
//   words 2,3  path index (low, high)
//
// so the numbers consumed by path p never depend on which worker runs it or on
// how many other paths exist.

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace qflag {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(const Counter& ctr, const Key& key) {
        std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

    /// Blocks for counters ctr, ctr+1, ..., ctr+W-1 (word 0 incremented),
    /// interleaved so the rounds overlap.
    template <int W>
    static void blocks(const Counter& ctr, const Key& key, std::uint32_t* out) {
        std::uint32_t c0[W], c1[W], c2[W], c3[W];
        for (int w = 0; w < W; ++w) {
            c0[w] = ctr[0] + static_cast<std::uint32_t>(w);
            c1[w] = ctr[1];
            c2[w] = ctr[2];
            c3[w] = ctr[3];
        }
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int r = 0; r < 10; ++r) {
            for (int w = 0; w < W; ++w) {
                const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0[w];
                const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2[w];
                const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
                const auto lo0 = static_cast<std::uint32_t>(p0);
                const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
                const auto lo1 = static_cast<std::uint32_t>(p1);
                c0[w] = hi1 ^ c1[w] ^ k0;
                c1[w] = lo1;
                c2[w] = hi0 ^ c3[w] ^ k1;
                c3[w] = lo0;
            }
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        for (int w = 0; w < W; ++w) {
            out[4 * w] = c0[w];
            out[4 * w + 1] = c1[w];
            out[4 * w + 2] = c2[w];
            out[4 * w + 3] = c3[w];
        }
    }
};

/// Uniform 32-bit engine over one (seed, path, substream) Philox stream.
class StreamEngine {
public:
    using result_type = std::uint32_t;

    StreamEngine(std::uint64_t seed, std::uint64_t path, std::uint32_t substream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0u, substream, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == kBuffered) {
            Philox4x32::blocks<kBlocks>(ctr_, key_, buf_.data());
            ctr_[0] += kBlocks;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    Philox4x32::Key key_;
    Philox4x32::Counter ctr_;
    static constexpr int kBlocks = 8;
    static constexpr unsigned kBuffered = 4 * kBlocks;
    std::array<std::uint32_t, kBuffered> buf_{};
    unsigned pos_ = kBuffered;
};

/// Standard normal draws from a stream.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint32_t substream = 0)
        : eng_(seed, path, substream) {}

    double operator()() { return dist_(eng_); }

    template <class It>
    void fill(It first, It last, double scale = 1.0) {
        for (; first != last; ++first) *first = scale * dist_(eng_);
    }

private:
    StreamEngine eng_;
    boost::random::normal_distribution<double> dist_;
};

/// Substream ids used by the samplers.
namespace substream {
inline constexpr std::uint32_t group = 0;
inline constexpr std::uint32_t fiber = 1;
inline constexpr std::uint32_t simplex = 2;
inline constexpr std::uint32_t sphere = 3;
}  // namespace substream

}  // namespace qflag
