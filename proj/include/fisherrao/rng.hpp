#ifndef FISHERRAO_RNG_HPP
#define FISHERRAO_RNG_HPP

#include <array>
#include <cstdint>

namespace fisherrao {

namespace detail {

// Philox2x64-10 block cipher (Salmon et al. counter-based generator).
// A block is a pure function of (key, counter), which is what makes the
// Monte Carlo draws reproducible under any parallel chunking.
struct Philox2x64 {
    static constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
    static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

    static std::array<std::uint64_t, 2> block(std::uint64_t key, std::uint64_t c0,
                                              std::uint64_t c1) {
        for (int round = 0; round < 10; ++round) {
            const unsigned __int128 prod = static_cast<unsigned __int128>(kMul) * c0;
            const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
            const std::uint64_t lo = static_cast<std::uint64_t>(prod);
            c0 = hi ^ key ^ c1;
            c1 = lo;
            key += kWeyl;
        }
        return {c0, c1};
    }
};

}  // namespace detail

/// Random substream for one Monte Carlo draw: all output is a pure
/// function of (seed, draw_index, position), so draw i is identical no
/// matter which thread or chunk produces it.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t draw_index)
        : key_(seed), draw_(draw_index) {}

    std::uint64_t next_u64() {
        if (pos_ == 2) {
            buf_ = detail::Philox2x64::block(key_, draw_, block_++);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe to pass to log().
    double next_u01_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

  private:
    std::uint64_t key_;
    std::uint64_t draw_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{0, 0};
    int pos_ = 2;
};

}  // namespace fisherrao

#endif
