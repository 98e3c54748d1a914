#ifndef FISHERRAO_GEOMETRY_HPP
#define FISHERRAO_GEOMETRY_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fisherrao/expectation.hpp"
#include "fisherrao/model.hpp"
#include "fisherrao/score.hpp"
#include "fisherrao/types.hpp"

namespace fisherrao {

/// Coordinate representation of the Fisher-Rao metric at one parameter
/// point, with its inverse and conditioning metadata. Construction
/// enforces symmetry and positive definiteness; a failed check raises
/// SingularInformation instead of returning a pseudo-inverse.
struct FisherMatrix {
    ParamVec at;
    Eigen::MatrixXd entries;
    Eigen::MatrixXd inverse;
    double condition_estimate = 0.0;
    ExpectationMethod method;
};

/// Scalar function theta on parameter space with its partial derivatives
/// (analytic for built-ins, finite differences otherwise).
struct ParameterFunction {
    std::string label;
    std::function<double(const ParamVec&)> evaluate;
    /// d theta / d phi_i; empty means finite differences.
    std::function<double(const ParamVec&, std::size_t)> analytic_partial;
};

ParameterFunction constant_function(double value);
ParameterFunction coordinate_function(std::size_t index, std::string name);

/// One partial derivative of theta, analytic or central-difference inside
/// the domain box.
double theta_partial(const ParameterFunction& theta, const ParamVec& p, std::size_t i,
                     const std::vector<Interval>& box, const FDScheme& fd = {});

/// All k partials of theta at p.
std::vector<double> theta_differential(const ParameterFunction& theta, const ParamVec& p,
                                       const std::vector<Interval>& box,
                                       const FDScheme& fd = {});

/// I_ij(p) = E[(dL/dphi_i)(dL/dphi_j) | p], symmetrized, inverted by
/// symmetric eigenfactorization. Throws SingularInformation when the
/// smallest eigenvalue does not clear 1e-10 times the largest diagonal
/// entry.
FisherMatrix fisher_matrix(const ParametricFamily& family, const ParamVec& p,
                           const ExpectationMethod& method = {}, const FDScheme& fd = {});

/// The metric pairing I(u, v) = E[lambda_x(u) lambda_x(v)] at the common
/// base point of u and v.
double metric_pair(const ParametricFamily& family, const TangentVector& u,
                   const TangentVector& v, const ExpectationMethod& method = {},
                   const FDScheme& fd = {});

/// Metric gradient of theta in the chart: components_j = sum_i I^{ij}
/// dtheta/dphi_i, squared_norm = sum_{i,m} I^{mi} dtheta_i dtheta_m.
struct GradientVector {
    ParamVec base_point;
    std::vector<double> components;
    double squared_norm = 0.0;

    TangentVector as_tangent() const { return {base_point, components}; }
};

GradientVector gradient(const ParameterFunction& theta, const FisherMatrix& fisher,
                        const std::vector<Interval>& box, const FDScheme& fd = {});

/// dtheta(w) = sum_j dtheta/dphi_j w_j for a tangent vector w at p.
double differential_applied(const ParameterFunction& theta, const TangentVector& w,
                            const std::vector<Interval>& box, const FDScheme& fd = {});

/// The Cramer-Rao lower bound |grad theta(p)|^2 =
/// sum_{i,m} I^{mi}(p) dtheta_i(p) dtheta_m(p).
double crb(const ParameterFunction& theta, const ParametricFamily& family, const ParamVec& p,
           const ExpectationMethod& method = {}, const FDScheme& fd = {});

/// A change of chart psi(phi) with inverse. The Jacobian convention is
/// J(q)[i][j] = dphi_i/dpsi_j evaluated at the new-chart point q, so the
/// metric transforms as I_psi = J^T I_phi J; when absent it is computed
/// by finite differences of the inverse map.
struct Chart {
    std::string name;
    std::function<ParamVec(const ParamVec&)> forward;
    std::function<ParamVec(const ParamVec&)> inverse;
    std::function<Eigen::MatrixXd(const ParamVec&)> jacobian;
    std::vector<std::string> new_names;    // optional; defaults to old names
    std::vector<Interval> new_domain;      // optional for coordinatewise maps
};

Eigen::MatrixXd chart_jacobian(const Chart& chart, const ParamVec& q, std::size_t k,
                               const std::vector<Interval>& new_box, const FDScheme& fd = {});

/// The same family of measures expressed in psi-coordinates.
ParametricFamily reparameterize(const ParametricFamily& family, const Chart& chart);

}  // namespace fisherrao

#endif
