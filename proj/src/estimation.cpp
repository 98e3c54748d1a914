#include "fisherrao/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fisherrao {

std::vector<ParamVec> bias_probe_grid(const ParametricFamily& family, std::size_t per_dim) {
    std::vector<double> fractions(per_dim);
    for (std::size_t i = 0; i < per_dim; ++i)
        fractions[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(per_dim);

    std::vector<ParamVec> grid;
    ParamVec point(family.k);
    std::vector<std::size_t> idx(family.k, 0);
    for (;;) {
        for (std::size_t d = 0; d < family.k; ++d)
            point[d] = family.param_domain[d].at_fraction(fractions[idx[d]]);
        if (family.in_domain(point)) grid.push_back(point);
        std::size_t d = 0;
        while (d < family.k && ++idx[d] == per_dim) idx[d++] = 0;
        if (d == family.k) break;
    }
    return grid;
}

double bias(const Estimator& estimator, const ParameterFunction& theta,
            const ParametricFamily& family, const ParamVec& p,
            const ExpectationMethod& method) {
    return expect(estimator.evaluate, family, p, method) - theta.evaluate(p);
}

bool unbiased_on_probe_grid(const Estimator& estimator, const ParameterFunction& theta,
                            const ParametricFamily& family, const ExpectationMethod& method,
                            double* max_abs_bias) {
    // The hypothesis is checked exactly whenever the space allows it, no
    // matter which method the variance side uses.
    ExpectationMethod probe = family.space.exact_allowed() ? ExpectationMethod::exact() : method;
    double tolerance = kExactBiasTolerance;
    if (probe.is_mc()) {
        probe.mc_samples = std::max<std::size_t>(probe.mc_samples, 10000);
        tolerance = 0.0;  // per-point margin computed below
    }

    bool ok = true;
    double worst = 0.0;
    for (const ParamVec& p : bias_probe_grid(family)) {
        const double b = bias(estimator, theta, family, p, probe);
        double tol = tolerance;
        if (probe.is_mc()) {
            const double var = variance(estimator, family, p, probe).variance;
            tol = std::max(kExactBiasTolerance,
                           5.0 * std::sqrt(std::max(var, 0.0) /
                                           static_cast<double>(probe.mc_samples)));
        }
        worst = std::max(worst, std::abs(b));
        if (std::abs(b) > tol) ok = false;
    }
    if (max_abs_bias) *max_abs_bias = worst;
    return ok;
}

VarianceResult variance(const Estimator& estimator, const ParametricFamily& family,
                        const ParamVec& p, const ExpectationMethod& method) {
    if (method.is_mc() && method.mc_samples < 1000)
        throw DomainError("variance reporting requires at least 1000 Monte Carlo samples");
    const double mean = expect(estimator.evaluate, family, p, method);
    // Two-pass, mean-subtracted: second pass yields the variance and the
    // fourth central moment together (same draws for Monte Carlo).
    const SampleFunction centered_sq = [&](SamplePointView x) {
        const double d = estimator.evaluate(x) - mean;
        return d * d;
    };
    const PairExpectation m = expect_pair(centered_sq, centered_sq, family, p, method);
    VarianceResult out;
    out.variance = m.eg;
    if (method.is_mc()) {
        const double fourth = m.egh;
        const double var_of_var =
            std::max(fourth - m.eg * m.eg, 0.0) / static_cast<double>(method.mc_samples);
        out.mc_std_error = std::sqrt(var_of_var);
    }
    return out;
}

BoundReport verify_bound(const Estimator& estimator, const ParameterFunction& theta,
                         const ParametricFamily& family, const ParamVec& p,
                         const ExpectationMethod& method, const FDScheme& fd) {
    family.require_in_domain(p);

    BoundReport report;
    report.at = p;
    report.method = method;
    report.theta_value = theta.evaluate(p);
    report.biased = !unbiased_on_probe_grid(estimator, theta, family, method,
                                            &report.max_probe_bias);
    report.estimator_mean = expect(estimator.evaluate, family, p, method);
    report.bias = report.estimator_mean - report.theta_value;
    const VarianceResult var = variance(estimator, family, p, method);
    report.variance = var.variance;
    report.mc_std_error = var.mc_std_error;
    report.bound = crb(theta, family, p, method, fd);
    report.slack = report.variance - report.bound;
    if (report.variance > 0.0) {
        report.efficiency = report.bound / report.variance;
    } else {
        report.efficiency = report.bound <= 0.0 ? 1.0 : 0.0;
    }
    return report;
}

DthetaCheck dtheta_via_estimator(const Estimator& estimator, const ParametricFamily& family,
                                 const TangentVector& v, const ExpectationMethod& method,
                                 const FDScheme& fd) {
    family.require_in_domain(v.base_point);
    const ParamVec& p = v.base_point;

    // lhs: central difference of t -> E(est | p + t v), reconstructed by
    // the same expectation engine (common draws under Monte Carlo).
    double scale = 1.0;
    for (double c : v.components) scale = std::max(scale, std::abs(c));
    double base = 1.0;
    for (double x : p) base = std::max(base, std::abs(x));
    double h = fd.relative_step * base / scale;
    ParamVec hi(p.size()), lo(p.size());
    for (int attempt = 0;; ++attempt) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            hi[i] = p[i] + h * v.components[i];
            lo[i] = p[i] - h * v.components[i];
        }
        if (family.in_domain(hi) && family.in_domain(lo)) break;
        if (attempt == 2)
            throw DomainError("finite-difference stencil leaves the domain at " +
                              format_point(p));
        h *= 0.5;
    }
    DthetaCheck out;
    out.lhs = (expect(estimator.evaluate, family, hi, method) -
               expect(estimator.evaluate, family, lo, method)) /
              (2.0 * h);
    out.rhs = expect(
        [&](SamplePointView x) {
            return estimator.evaluate(x) * score_directional(family, v, x, fd);
        },
        family, p, method);
    return out;
}

ProofChainLedger proof_chain_check(const Estimator& estimator, const ParameterFunction& theta,
                                   const ParametricFamily& family, const ParamVec& p,
                                   const ExpectationMethod& method, const FDScheme& fd) {
    const FisherMatrix fisher = fisher_matrix(family, p, method, fd);
    const GradientVector grad = gradient(theta, fisher, family.param_domain, fd);
    const TangentVector grad_dir = grad.as_tangent();
    const double theta_at_p = theta.evaluate(p);

    ProofChainLedger ledger;
    ledger.grad_norm_sq = grad.squared_norm;
    ledger.covariance_term = expect(
        [&](SamplePointView x) {
            return (estimator.evaluate(x) - theta_at_p) *
                   score_directional(family, grad_dir, x, fd);
        },
        family, p, method);
    const double var = variance(estimator, family, p, method).variance;
    const double metric_norm_sq = metric_pair(family, grad_dir, grad_dir, method, fd);
    ledger.cauchy_schwarz = std::sqrt(std::max(var, 0.0)) *
                            std::sqrt(std::max(metric_norm_sq, 0.0));
    ledger.variance_route = std::sqrt(std::max(var, 0.0)) *
                            std::sqrt(std::max(grad.squared_norm, 0.0));
    return ledger;
}

McVerifySummary mc_verify(const Estimator& estimator, const ParameterFunction& theta,
                          const ParametricFamily& family, const ParamVec& p,
                          std::span<const std::uint64_t> seeds, std::size_t mc_samples,
                          const FDScheme& fd) {
    if (mc_samples < 10000)
        throw DomainError("mc_verify requires at least 10^4 samples per seed");
    if (seeds.empty()) throw DomainError("mc_verify requires at least one seed");

    McVerifySummary summary;
    summary.mc_samples = mc_samples;
    // The bound itself is deterministic; compute it exactly when possible.
    const ExpectationMethod bound_method =
        family.space.exact_allowed()
            ? ExpectationMethod::exact()
            : ExpectationMethod::monte_carlo(std::max<std::size_t>(mc_samples, 100000),
                                             seeds[0]);
    summary.bound = crb(theta, family, p, bound_method, fd);

    summary.min_slack = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : seeds) {
        const VarianceResult var =
            variance(estimator, family, p, ExpectationMethod::monte_carlo(mc_samples, seed));
        McSeedResult r;
        r.seed = seed;
        r.variance = var.variance;
        r.std_error = var.mc_std_error.value_or(0.0);
        r.slack = var.variance - summary.bound;
        r.pass = var.variance >= summary.bound - 3.0 * r.std_error;
        summary.min_slack = std::min(summary.min_slack, r.slack);
        if (r.pass) ++summary.n_pass;
        summary.per_seed.push_back(r);
    }
    summary.pass_rate =
        static_cast<double>(summary.n_pass) / static_cast<double>(seeds.size());
    summary.passed = summary.pass_rate >= 0.95;
    return summary;
}

}  // namespace fisherrao
