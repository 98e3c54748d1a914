#ifndef FISHERRAO_EXPECTATION_HPP
#define FISHERRAO_EXPECTATION_HPP

#include <cstdint>
#include <functional>

#include "fisherrao/model.hpp"
#include "fisherrao/types.hpp"

namespace fisherrao {

struct ExpectationMethod {
    enum class Kind { Exact, MonteCarlo };

    Kind kind = Kind::Exact;
    std::size_t mc_samples = 100000;
    std::uint64_t seed = 0;

    static ExpectationMethod exact() { return {}; }
    static ExpectationMethod monte_carlo(std::size_t samples, std::uint64_t seed) {
        return {Kind::MonteCarlo, samples, seed};
    }
    bool is_mc() const { return kind == Kind::MonteCarlo; }
};

using SampleFunction = std::function<double(SamplePointView)>;

/// E(g | p): weighted sum over the reference points (Exact) or the mean
/// over mc_samples Philox-keyed draws (MonteCarlo). Both backends reduce
/// through a fixed pairwise tree over 64-element leaf blocks, so results
/// are bit-identical across runs, thread counts, and the serial variant.
double expect(const SampleFunction& g, const ParametricFamily& family, const ParamVec& p,
              const ExpectationMethod& method);

/// Serial reference implementation; same reduction tree, kept for tests
/// and the benchmark.
double expect_serial(const SampleFunction& g, const ParametricFamily& family,
                     const ParamVec& p, const ExpectationMethod& method);

struct PairExpectation {
    double eg = 0.0;
    double eh = 0.0;
    double egh = 0.0;
};

/// (E[g], E[h], E[g*h]) over one pass: MonteCarlo evaluates all three on
/// the same draws.
PairExpectation expect_pair(const SampleFunction& g, const SampleFunction& h,
                            const ParametricFamily& family, const ParamVec& p,
                            const ExpectationMethod& method);

PairExpectation expect_pair_serial(const SampleFunction& g, const SampleFunction& h,
                                   const ParametricFamily& family, const ParamVec& p,
                                   const ExpectationMethod& method);

}  // namespace fisherrao

#endif
