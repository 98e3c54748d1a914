#ifndef FISHERRAO_DETAIL_REDUCE_HPP
#define FISHERRAO_DETAIL_REDUCE_HPP

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fisherrao::detail {

// Leaf block of the fixed reduction tree. Each leaf is summed
// sequentially in enumeration order; leaf sums combine pairwise. The tree
// depends only on n, never on the thread count or schedule, which is what
// makes parallel and serial results bit-identical.
inline constexpr std::size_t kLeafSize = 64;

inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 2) {
        if (v.empty()) return 0.0;
        if (v.size() == 1) return v[0];
        return v[0] + v[1];
    }
    const std::size_t mid = v.size() / 2;
    return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

// term(i, acc) adds the i-th contribution into acc (an array of Lanes
// doubles). Returns the pairwise-combined totals.
template <std::size_t Lanes, class TermFn>
std::array<double, Lanes> block_reduce(std::size_t n, bool parallel, TermFn&& term) {
    const std::size_t leaves = n == 0 ? 0 : (n + kLeafSize - 1) / kLeafSize;
    std::vector<double> partial(leaves * Lanes, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::ptrdiff_t leaf = 0; leaf < static_cast<std::ptrdiff_t>(leaves); ++leaf) {
        const std::size_t lo = static_cast<std::size_t>(leaf) * kLeafSize;
        const std::size_t hi = lo + kLeafSize < n ? lo + kLeafSize : n;
        double acc[Lanes] = {};
        for (std::size_t i = lo; i < hi; ++i) {
            term(i, acc);
        }
        for (std::size_t lane = 0; lane < Lanes; ++lane) {
            partial[lane * leaves + static_cast<std::size_t>(leaf)] = acc[lane];
        }
    }
    (void)parallel;

    std::array<double, Lanes> out{};
    for (std::size_t lane = 0; lane < Lanes; ++lane) {
        out[lane] = pairwise_sum({partial.data() + lane * leaves, leaves});
    }
    return out;
}

}  // namespace fisherrao::detail

#endif
