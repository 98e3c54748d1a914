#include "fisherrao/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <utility>

namespace fisherrao {

ParameterFunction constant_function(double value) {
    return {"const", [value](const ParamVec&) { return value; },
            [](const ParamVec&, std::size_t) { return 0.0; }};
}

ParameterFunction coordinate_function(std::size_t index, std::string name) {
    return {std::move(name), [index](const ParamVec& p) { return p[index]; },
            [index](const ParamVec&, std::size_t i) { return i == index ? 1.0 : 0.0; }};
}

namespace {

bool box_contains(const std::vector<Interval>& box, const ParamVec& p) {
    for (std::size_t i = 0; i < box.size(); ++i)
        if (!box[i].contains(p[i])) return false;
    return true;
}

}  // namespace

double theta_partial(const ParameterFunction& theta, const ParamVec& p, std::size_t i,
                     const std::vector<Interval>& box, const FDScheme& fd) {
    if (theta.analytic_partial) return theta.analytic_partial(p, i);
    double h = fd.relative_step * std::max(1.0, std::abs(p[i]));
    ParamVec hi = p, lo = p;
    for (int attempt = 0;; ++attempt) {
        hi[i] = p[i] + h;
        lo[i] = p[i] - h;
        if (box_contains(box, hi) && box_contains(box, lo)) break;
        if (attempt == 2)
            throw DomainError("finite-difference stencil for theta leaves the domain at " +
                              format_point(p));
        h *= 0.5;
    }
    return (theta.evaluate(hi) - theta.evaluate(lo)) / (2.0 * h);
}

std::vector<double> theta_differential(const ParameterFunction& theta, const ParamVec& p,
                                       const std::vector<Interval>& box, const FDScheme& fd) {
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) d[i] = theta_partial(theta, p, i, box, fd);
    return d;
}

namespace {

double score_coordinate(const ParametricFamily& family, const ParamVec& p, SamplePointView x,
                        std::size_t i, const FDScheme& fd) {
    if (family.has_analytic_score()) return family.analytic_score(p, x, i);
    std::vector<double> e(family.k, 0.0);
    e[i] = 1.0;
    return score_directional_fd(family, tangent(p, std::move(e)), x, fd);
}

}  // namespace

FisherMatrix fisher_matrix(const ParametricFamily& family, const ParamVec& p,
                           const ExpectationMethod& method, const FDScheme& fd) {
    family.require_in_domain(p);
    const auto k = static_cast<Eigen::Index>(family.k);
    Eigen::MatrixXd entries(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i; j < k; ++j) {
            const auto si = static_cast<std::size_t>(i);
            const auto sj = static_cast<std::size_t>(j);
            const double value = expect(
                [&](SamplePointView x) {
                    if (si == sj) {
                        const double s = score_coordinate(family, p, x, si, fd);
                        return s * s;
                    }
                    return score_coordinate(family, p, x, si, fd) *
                           score_coordinate(family, p, x, sj, fd);
                },
                family, p, method);
            entries(i, j) = value;
            entries(j, i) = value;
        }
    }
    entries = ((entries + entries.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries);
    if (eig.info() != Eigen::Success)
        throw SingularInformation("eigenfactorization failed at " + format_point(p));
    const double max_diag = entries.diagonal().maxCoeff();
    const double min_eig = eig.eigenvalues().minCoeff();
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (!(min_eig > 1e-10 * max_diag))
        throw SingularInformation("Fisher information is singular or indefinite at " +
                                  format_point(p) + " for family '" + family.name +
                                  "' (min eigenvalue " + std::to_string(min_eig) + ")");

    FisherMatrix out;
    out.at = p;
    out.entries = entries;
    out.inverse = eig.eigenvectors() *
                  eig.eigenvalues().cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
    out.inverse = ((out.inverse + out.inverse.transpose()) * 0.5).eval();
    out.condition_estimate = max_eig / min_eig;
    out.method = method;

    const double residual =
        (entries * out.inverse - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw SingularInformation("Fisher inverse failed the identity check at " +
                                  format_point(p) + " (residual " + std::to_string(residual) +
                                  ")");
    return out;
}

double metric_pair(const ParametricFamily& family, const TangentVector& u,
                   const TangentVector& v, const ExpectationMethod& method,
                   const FDScheme& fd) {
    if (u.base_point != v.base_point)
        throw DomainError("metric pairing requires tangent vectors at the same point");
    return expect(
        [&](SamplePointView x) {
            return score_directional(family, u, x, fd) * score_directional(family, v, x, fd);
        },
        family, u.base_point, method);
}

GradientVector gradient(const ParameterFunction& theta, const FisherMatrix& fisher,
                        const std::vector<Interval>& box, const FDScheme& fd) {
    const std::size_t k = fisher.at.size();
    const std::vector<double> d = theta_differential(theta, fisher.at, box, fd);

    GradientVector out;
    out.base_point = fisher.at;
    out.components.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < k; ++i)
            out.components[j] += fisher.inverse(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(j)) *
                                 d[i];
    double norm_sq = 0.0;
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t i = 0; i < k; ++i)
            norm_sq += fisher.inverse(static_cast<Eigen::Index>(m),
                                      static_cast<Eigen::Index>(i)) *
                       d[i] * d[m];
    out.squared_norm = norm_sq;
    return out;
}

double differential_applied(const ParameterFunction& theta, const TangentVector& w,
                            const std::vector<Interval>& box, const FDScheme& fd) {
    const std::vector<double> d = theta_differential(theta, w.base_point, box, fd);
    double value = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) value += d[j] * w.components[j];
    return value;
}

double crb(const ParameterFunction& theta, const ParametricFamily& family, const ParamVec& p,
           const ExpectationMethod& method, const FDScheme& fd) {
    const FisherMatrix fisher = fisher_matrix(family, p, method, fd);
    return gradient(theta, fisher, family.param_domain, fd).squared_norm;
}

Eigen::MatrixXd chart_jacobian(const Chart& chart, const ParamVec& q, std::size_t k,
                               const std::vector<Interval>& new_box, const FDScheme& fd) {
    if (chart.jacobian) return chart.jacobian(q);
    const auto n = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd jac(n, n);
    for (std::size_t j = 0; j < k; ++j) {
        double h = fd.relative_step * std::max(1.0, std::abs(q[j]));
        ParamVec hi = q, lo = q;
        for (int attempt = 0;; ++attempt) {
            hi[j] = q[j] + h;
            lo[j] = q[j] - h;
            if (box_contains(new_box, hi) && box_contains(new_box, lo)) break;
            if (attempt == 2)
                throw DomainError("chart Jacobian stencil leaves the domain at " +
                                  format_point(q));
            h *= 0.5;
        }
        const ParamVec fhi = chart.inverse(hi);
        const ParamVec flo = chart.inverse(lo);
        for (std::size_t i = 0; i < k; ++i)
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (fhi[i] - flo[i]) / (2.0 * h);
    }
    return jac;
}

ParametricFamily reparameterize(const ParametricFamily& family, const Chart& chart) {
    const std::size_t k = family.k;

    // Invertibility probe: forward then inverse must return to the start.
    for (double t : {0.25, 0.5, 0.75}) {
        ParamVec p(k);
        for (std::size_t i = 0; i < k; ++i) p[i] = family.param_domain[i].at_fraction(t);
        if (!family.in_domain(p)) continue;
        const ParamVec q = chart.forward(p);
        if (q.size() != k) throw ModelError("chart: forward map changes dimension");
        const ParamVec back = chart.inverse(q);
        for (std::size_t i = 0; i < k; ++i)
            if (std::abs(back[i] - p[i]) > 1e-8 * std::max(1.0, std::abs(p[i])))
                throw ModelError("chart '" + chart.name +
                                 "' is not invertible on the parameter box");
    }

    std::vector<Interval> new_box = chart.new_domain;
    if (new_box.empty()) {
        // Coordinatewise default: map each interval's endpoints through the
        // forward map at the box center.
        ParamVec center(k);
        for (std::size_t i = 0; i < k; ++i) center[i] = family.param_domain[i].at_fraction(0.5);
        new_box.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            ParamVec lo_pt = center, hi_pt = center;
            lo_pt[i] = family.param_domain[i].lo;
            hi_pt[i] = family.param_domain[i].hi;
            const double a = chart.forward(lo_pt)[i];
            const double b = chart.forward(hi_pt)[i];
            new_box[i] = a < b ? Interval{a, b} : Interval{b, a};
        }
    }

    ParametricFamily out;
    out.name = family.name + "@" + chart.name;
    out.k = k;
    out.coordinate_names = chart.new_names.empty() ? family.coordinate_names : chart.new_names;
    out.param_domain = new_box;
    out.space = family.space;

    auto base = std::make_shared<ParametricFamily>(family);
    auto inverse = chart.inverse;
    out.extra_domain = [base, inverse](const ParamVec& q) {
        return base->in_domain(inverse(q));
    };
    out.density = [base, inverse](const ParamVec& q, SamplePointView x) {
        return base->density(inverse(q), x);
    };
    if (family.has_analytic_score()) {
        auto chart_copy = std::make_shared<Chart>(chart);
        auto box_copy = std::make_shared<std::vector<Interval>>(new_box);
        out.analytic_score = [base, chart_copy, box_copy, k](const ParamVec& q,
                                                             SamplePointView x,
                                                             std::size_t j) {
            const Eigen::MatrixXd jac = chart_jacobian(*chart_copy, q, k, *box_copy);
            const ParamVec p = chart_copy->inverse(q);
            double total = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                total += jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                         base->analytic_score(p, x, i);
            return total;
        };
    }
    if (family.sampler) {
        out.sampler = [base, inverse](const ParamVec& q, RandomStream& rng,
                                      std::span<double> x) {
            base->sampler(inverse(q), rng, x);
        };
    }
    return out;
}

}  // namespace fisherrao
