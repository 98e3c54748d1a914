#ifndef FISHERRAO_SCORE_HPP
#define FISHERRAO_SCORE_HPP

#include <functional>
#include <vector>

#include "fisherrao/expectation.hpp"
#include "fisherrao/model.hpp"
#include "fisherrao/types.hpp"

namespace fisherrao {

/// Tangent vector at base_point, components in the family's chart.
struct TangentVector {
    ParamVec base_point;
    std::vector<double> components;
};

inline TangentVector tangent(ParamVec p, std::vector<double> components) {
    return {std::move(p), std::move(components)};
}

/// Central-difference scheme; the step for coordinate i is
/// relative_step * max(1, |p_i|), shrunk (halved, at most twice) when the
/// stencil would leave the parameter domain.
struct FDScheme {
    double relative_step = 1e-5;
};

/// L_x(p) = log f_p(x). Densities at or below kDensityFloor are treated
/// as zero and rejected.
double log_likelihood(const ParametricFamily& family, const ParamVec& p, SamplePointView x);

inline constexpr double kDensityFloor = 1e-300;

/// The score one-form evaluated on v: the analytic score dotted with
/// v.components when the family has one, otherwise a central finite
/// difference of t -> L_x(p + t v).
double score_directional(const ParametricFamily& family, const TangentVector& v,
                         SamplePointView x, const FDScheme& fd = {});

/// Always takes the finite-difference path, ignoring any analytic score.
double score_directional_fd(const ParametricFamily& family, const TangentVector& v,
                            SamplePointView x, const FDScheme& fd = {});

/// All k coordinate scores dL_x/dphi_i at p (analytic when available,
/// else per-coordinate central differences).
std::vector<double> score_coordinates(const ParametricFamily& family, const ParamVec& p,
                                      SamplePointView x, const FDScheme& fd = {});

/// E(lambda_x(v) | p); zero for every regular family up to numerics.
double score_mean(const ParametricFamily& family, const TangentVector& v,
                  const ExpectationMethod& method, const FDScheme& fd = {});

/// The same measures expressed against the reweighted reference measure
/// w * mu: densities become f_p / w. Samplers and analytic scores carry
/// over unchanged (the measures themselves do not move). Leaf spaces only.
ParametricFamily reweight_reference_measure(
    const ParametricFamily& family, const std::function<double(SamplePointView)>& w);

struct ScorePair {
    double original = 0.0;
    double reweighted = 0.0;
};

/// Evaluates the same score against the original and the reweighted
/// reference measure; the two must agree since the log w term carries no
/// parameter dependence. force_fd drives both through finite differences.
ScorePair check_reference_measure_invariance(const ParametricFamily& family,
                                             const std::function<double(SamplePointView)>& w,
                                             const TangentVector& v, SamplePointView x,
                                             const FDScheme& fd = {}, bool force_fd = false);

}  // namespace fisherrao

#endif
