#ifndef FISHERRAO_ESTIMATION_HPP
#define FISHERRAO_ESTIMATION_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisherrao/expectation.hpp"
#include "fisherrao/geometry.hpp"
#include "fisherrao/model.hpp"
#include "fisherrao/score.hpp"
#include "fisherrao/types.hpp"

namespace fisherrao {

/// Scalar estimator on the sample space.
struct Estimator {
    std::string label;
    std::function<double(SamplePointView)> evaluate;
};

/// Unbiasedness is a for-all-p hypothesis; it is checked on this finite
/// probe grid (per_dim points per coordinate, spread over the box,
/// filtered through extra_domain).
std::vector<ParamVec> bias_probe_grid(const ParametricFamily& family, std::size_t per_dim = 5);

/// E(estimator | p) - theta(p).
double bias(const Estimator& estimator, const ParameterFunction& theta,
            const ParametricFamily& family, const ParamVec& p,
            const ExpectationMethod& method = {});

inline constexpr double kExactBiasTolerance = 1e-8;

/// Bias check over the probe grid. Uses exact expectation when the space
/// admits it (regardless of the requested variance method), otherwise
/// Monte Carlo with a standard-error margin.
bool unbiased_on_probe_grid(const Estimator& estimator, const ParameterFunction& theta,
                            const ParametricFamily& family, const ExpectationMethod& method,
                            double* max_abs_bias = nullptr);

struct VarianceResult {
    double variance = 0.0;
    /// Standard error of the variance estimate (fourth-moment formula);
    /// present for MonteCarlo only.
    std::optional<double> mc_std_error;
};

/// Two-pass variance E[(est - E est)^2 | p]; MonteCarlo reuses the same
/// draws for both passes.
VarianceResult variance(const Estimator& estimator, const ParametricFamily& family,
                        const ParamVec& p, const ExpectationMethod& method = {});

struct BoundReport {
    ParamVec at;
    double theta_value = 0.0;
    double estimator_mean = 0.0;
    double bias = 0.0;
    bool biased = false;  // bias check failed somewhere on the probe grid
    double max_probe_bias = 0.0;
    double variance = 0.0;
    double bound = 0.0;
    double slack = 0.0;       // variance - bound
    double efficiency = 0.0;  // bound / variance; 1 = efficient
    ExpectationMethod method;
    std::optional<double> mc_std_error;
};

/// Computes both sides of the bound at p and reports them together. A
/// biased estimator is reported, not rejected: the report carries
/// biased=true and the bound claim is inapplicable.
BoundReport verify_bound(const Estimator& estimator, const ParameterFunction& theta,
                         const ParametricFamily& family, const ParamVec& p,
                         const ExpectationMethod& method = {}, const FDScheme& fd = {});

struct DthetaCheck {
    double lhs = 0.0;  // central difference of t -> E(est | p + t v)
    double rhs = 0.0;  // E[est * lambda_x(v)]
};

/// Numeric replay of the identity d theta(v) = E[theta_hat lambda_x(v)]
/// for theta(p) = E(theta_hat | p).
DthetaCheck dtheta_via_estimator(const Estimator& estimator, const ParametricFamily& family,
                                 const TangentVector& v, const ExpectationMethod& method = {},
                                 const FDScheme& fd = {});

/// The four quantities of the bound's derivation, in order:
///   grad_norm_sq       |grad theta|^2
///   covariance_term    E[(est - theta(p)) lambda_x(grad theta)]
///   cauchy_schwarz     sqrt(V) * sqrt(I(grad theta, grad theta))
///   variance_route     sqrt(V) * |grad theta|
/// The first two are equal, bounded by the third, which equals the fourth.
struct ProofChainLedger {
    double grad_norm_sq = 0.0;
    double covariance_term = 0.0;
    double cauchy_schwarz = 0.0;
    double variance_route = 0.0;
};

ProofChainLedger proof_chain_check(const Estimator& estimator, const ParameterFunction& theta,
                                   const ParametricFamily& family, const ParamVec& p,
                                   const ExpectationMethod& method = {},
                                   const FDScheme& fd = {});

struct McSeedResult {
    std::uint64_t seed = 0;
    double variance = 0.0;
    double std_error = 0.0;
    double slack = 0.0;
    bool pass = false;
};

struct McVerifySummary {
    double bound = 0.0;
    std::size_t mc_samples = 0;
    std::vector<McSeedResult> per_seed;
    std::size_t n_pass = 0;
    double pass_rate = 0.0;
    double min_slack = 0.0;
    bool passed = false;  // pass_rate >= 0.95
};

/// Statistical confirmation of the bound: one Monte Carlo variance per
/// seed, accepted when it clears bound - 3 standard errors. The bound
/// itself is computed exactly when the space allows.
McVerifySummary mc_verify(const Estimator& estimator, const ParameterFunction& theta,
                          const ParametricFamily& family, const ParamVec& p,
                          std::span<const std::uint64_t> seeds, std::size_t mc_samples,
                          const FDScheme& fd = {});

}  // namespace fisherrao

#endif
