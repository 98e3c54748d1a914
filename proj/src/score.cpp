#include "fisherrao/score.hpp"

#include <cmath>
#include <string>

namespace fisherrao {

namespace {

ParamVec displaced(const ParamVec& p, const std::vector<double>& direction, double t) {
    ParamVec q = p;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += t * direction[i];
    return q;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Step for a central difference along `direction` at p, shrunk (halved, at
// most twice) until both stencil points are inside the domain.
double fd_step(const ParametricFamily& family, const ParamVec& p,
               const std::vector<double>& direction, const FDScheme& fd) {
    double h = fd.relative_step * std::max(1.0, max_abs(p)) / std::max(1.0, max_abs(direction));
    for (int attempt = 0;; ++attempt) {
        if (family.in_domain(displaced(p, direction, h)) &&
            family.in_domain(displaced(p, direction, -h)))
            return h;
        if (attempt == 2)
            throw DomainError("finite-difference stencil leaves the domain at " +
                              format_point(p) + " for family '" + family.name + "'");
        h *= 0.5;
    }
}

void require_based_at(const TangentVector& v, const ParametricFamily& family) {
    if (v.base_point.size() != family.k || v.components.size() != family.k)
        throw DomainError("tangent vector dimension does not match family '" + family.name +
                          "'");
    family.require_in_domain(v.base_point);
    for (double c : v.components)
        if (!std::isfinite(c)) throw DomainError("tangent vector has non-finite components");
}

}  // namespace

double log_likelihood(const ParametricFamily& family, const ParamVec& p, SamplePointView x) {
    family.require_in_domain(p);
    const double f = family.density(p, x);
    if (!(f > kDensityFloor))
        throw DomainError("density vanishes at the evaluation point for family '" +
                          family.name + "' at " + format_point(p));
    return std::log(f);
}

double score_directional_fd(const ParametricFamily& family, const TangentVector& v,
                            SamplePointView x, const FDScheme& fd) {
    require_based_at(v, family);
    if (max_abs(v.components) == 0.0) return 0.0;
    const ParamVec& p = v.base_point;
    const double h = fd_step(family, p, v.components, fd);
    const double forward = log_likelihood(family, displaced(p, v.components, h), x);
    const double backward = log_likelihood(family, displaced(p, v.components, -h), x);
    return (forward - backward) / (2.0 * h);
}

double score_directional(const ParametricFamily& family, const TangentVector& v,
                         SamplePointView x, const FDScheme& fd) {
    if (!family.has_analytic_score()) return score_directional_fd(family, v, x, fd);
    require_based_at(v, family);
    double total = 0.0;
    for (std::size_t i = 0; i < family.k; ++i) {
        if (v.components[i] == 0.0) continue;
        total += v.components[i] * family.analytic_score(v.base_point, x, i);
    }
    return total;
}

std::vector<double> score_coordinates(const ParametricFamily& family, const ParamVec& p,
                                      SamplePointView x, const FDScheme& fd) {
    family.require_in_domain(p);
    std::vector<double> s(family.k);
    if (family.has_analytic_score()) {
        for (std::size_t i = 0; i < family.k; ++i) s[i] = family.analytic_score(p, x, i);
        return s;
    }
    std::vector<double> direction(family.k, 0.0);
    for (std::size_t i = 0; i < family.k; ++i) {
        direction[i] = 1.0;
        double h = fd.relative_step * std::max(1.0, std::abs(p[i]));
        for (int attempt = 0;; ++attempt) {
            if (family.in_domain(displaced(p, direction, h)) &&
                family.in_domain(displaced(p, direction, -h)))
                break;
            if (attempt == 2)
                throw DomainError("finite-difference stencil leaves the domain at " +
                                  format_point(p));
            h *= 0.5;
        }
        s[i] = (log_likelihood(family, displaced(p, direction, h), x) -
                log_likelihood(family, displaced(p, direction, -h), x)) /
               (2.0 * h);
        direction[i] = 0.0;
    }
    return s;
}

double score_mean(const ParametricFamily& family, const TangentVector& v,
                  const ExpectationMethod& method, const FDScheme& fd) {
    require_based_at(v, family);
    return expect([&](SamplePointView x) { return score_directional(family, v, x, fd); },
                  family, v.base_point, method);
}

ParametricFamily reweight_reference_measure(
    const ParametricFamily& family, const std::function<double(SamplePointView)>& w) {
    ParametricFamily out = family;
    out.name = family.name + "/reweighted";
    out.space = family.space.reweighted(w);
    const auto base_density = family.density;
    out.density = [base_density, w](const ParamVec& p, SamplePointView x) {
        return base_density(p, x) / w(x);
    };
    // Scores and samplers describe the measures themselves, which do not
    // change under a reference-measure swap.
    return out;
}

ScorePair check_reference_measure_invariance(const ParametricFamily& family,
                                             const std::function<double(SamplePointView)>& w,
                                             const TangentVector& v, SamplePointView x,
                                             const FDScheme& fd, bool force_fd) {
    const ParametricFamily reweighted = reweight_reference_measure(family, w);
    if (force_fd || !family.has_analytic_score()) {
        return {score_directional_fd(family, v, x, fd),
                score_directional_fd(reweighted, v, x, fd)};
    }
    return {score_directional(family, v, x, fd), score_directional(reweighted, v, x, fd)};
}

}  // namespace fisherrao
