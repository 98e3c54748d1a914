#include "fisherrao/expectation.hpp"

#include <array>
#include <cmath>

#include "detail/reduce.hpp"
#include "fisherrao/rng.hpp"

namespace fisherrao {

namespace {

constexpr std::size_t kMaxDim = 8;

void require_usable(const ParametricFamily& family, const ParamVec& p,
                    const ExpectationMethod& method) {
    family.require_in_domain(p);
    if (method.kind == ExpectationMethod::Kind::Exact && !family.space.exact_allowed())
        throw DomainError("exact expectation requested on an oversized space (" +
                          std::to_string(family.space.size()) + " points, dim " +
                          std::to_string(family.space.dim()) + "); use Monte Carlo");
    if (method.is_mc() && method.mc_samples == 0)
        throw DomainError("Monte Carlo needs at least one sample");
}

// One lane per requested expectation: {g}, or {g, h, g*h}.
template <std::size_t Lanes>
std::array<double, Lanes> run(const SampleFunction& g, const SampleFunction* h,
                              const ParametricFamily& family, const ParamVec& p,
                              const ExpectationMethod& method, bool parallel) {
    require_usable(family, p, method);
    const std::size_t dim = family.space.dim();

    if (method.kind == ExpectationMethod::Kind::Exact) {
        const SampleSpace& space = family.space;
        return detail::block_reduce<Lanes>(
            space.size(), parallel, [&](std::size_t i, double* acc) {
                double buf[kMaxDim];
                const SamplePointView x{buf, dim};
                space.gather(i, {buf, dim});
                const double mass = space.weight(i) * family.density(p, x);
                const double gv = g(x);
                if constexpr (Lanes == 1) {
                    acc[0] += mass * gv;
                } else {
                    const double hv = (*h)(x);
                    acc[0] += mass * gv;
                    acc[1] += mass * hv;
                    acc[2] += mass * gv * hv;
                }
            });
    }

    auto sums = detail::block_reduce<Lanes>(
        method.mc_samples, parallel, [&](std::size_t i, double* acc) {
            RandomStream rng(method.seed, i);
            double buf[kMaxDim];
            family.sampler(p, rng, {buf, dim});
            const SamplePointView x{buf, dim};
            const double gv = g(x);
            if constexpr (Lanes == 1) {
                acc[0] += gv;
            } else {
                const double hv = (*h)(x);
                acc[0] += gv;
                acc[1] += hv;
                acc[2] += gv * hv;
            }
        });
    for (auto& s : sums) s /= static_cast<double>(method.mc_samples);
    return sums;
}

}  // namespace

double expect(const SampleFunction& g, const ParametricFamily& family, const ParamVec& p,
              const ExpectationMethod& method) {
    return run<1>(g, nullptr, family, p, method, /*parallel=*/true)[0];
}

double expect_serial(const SampleFunction& g, const ParametricFamily& family,
                     const ParamVec& p, const ExpectationMethod& method) {
    return run<1>(g, nullptr, family, p, method, /*parallel=*/false)[0];
}

PairExpectation expect_pair(const SampleFunction& g, const SampleFunction& h,
                            const ParametricFamily& family, const ParamVec& p,
                            const ExpectationMethod& method) {
    const auto s = run<3>(g, &h, family, p, method, /*parallel=*/true);
    return {s[0], s[1], s[2]};
}

PairExpectation expect_pair_serial(const SampleFunction& g, const SampleFunction& h,
                                   const ParametricFamily& family, const ParamVec& p,
                                   const ExpectationMethod& method) {
    const auto s = run<3>(g, &h, family, p, method, /*parallel=*/false);
    return {s[0], s[1], s[2]};
}

}  // namespace fisherrao
