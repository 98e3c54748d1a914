#ifndef FISHERRAO_MODEL_HPP
#define FISHERRAO_MODEL_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fisherrao/rng.hpp"
#include "fisherrao/types.hpp"

namespace fisherrao {

enum class SpaceKind { DiscreteFinite, ContinuousGrid, Product };

/// Sample space with its reference measure, stored as per-point weights:
/// counting weights for discrete supports, composite-Simpson quadrature
/// weights for truncated continuous grids. Product spaces enumerate the
/// Cartesian product of their (one-dimensional) factors lazily, last
/// factor fastest. Immutable after construction.
class SampleSpace {
  public:
    /// Empty space; factories produce every usable instance.
    SampleSpace() = default;

    /// Exact expectation over products is limited to dimension 4 and to
    /// this many total points; larger requests must use Monte Carlo.
    static constexpr std::size_t kMaxExactDim = 4;
    static constexpr std::size_t kMaxExactPoints = std::size_t{1} << 26;

    static SampleSpace discrete(std::vector<double> points, std::vector<double> weights);
    /// Composite Simpson rule on [a, b] with an odd node count n >= 3.
    static SampleSpace simpson_grid(double a, double b, std::size_t nodes);
    static SampleSpace product(std::vector<SampleSpace> factors);

    SpaceKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    /// Number of reference points (product of factor sizes for products).
    std::size_t size() const { return size_; }

    double weight(std::size_t i) const;
    /// Writes the coordinates of point i into out (out.size() == dim()).
    void gather(std::size_t i, std::span<double> out) const;
    /// Coordinate of point i of a one-dimensional space.
    double point1d(std::size_t i) const;

    bool exact_allowed() const {
        return dim_ <= kMaxExactDim && size_ <= kMaxExactPoints;
    }

    const std::vector<SampleSpace>& factors() const { return factors_; }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Same points, weights scaled by the (strictly positive) function w.
    /// Only leaf spaces can be reweighted.
    SampleSpace reweighted(const std::function<double(SamplePointView)>& w) const;

  private:
    SpaceKind kind_ = SpaceKind::DiscreteFinite;
    std::size_t dim_ = 1;
    std::size_t size_ = 0;
    std::vector<double> points_;   // leaf spaces only
    std::vector<double> weights_;  // leaf spaces only
    std::vector<SampleSpace> factors_;
};

/// Parametric family of densities f_p with respect to the reference
/// measure carried by `space`. Immutable after construction; samplers
/// take an explicit RandomStream so there is no hidden mutable state.
struct ParametricFamily {
    std::string name;
    std::size_t k = 0;
    std::vector<std::string> coordinate_names;
    std::vector<Interval> param_domain;
    /// Extra joint constraint on top of the box (e.g. the categorical
    /// simplex condition); empty means no constraint.
    std::function<bool(const ParamVec&)> extra_domain;

    SampleSpace space;

    /// f_p(x) >= 0; defined for every p in the domain and x in the space.
    std::function<double(const ParamVec&, SamplePointView)> density;
    /// dL_x/dphi_i when a closed form is known; empty otherwise.
    std::function<double(const ParamVec&, SamplePointView, std::size_t)> analytic_score;
    /// Draws one sample point into out (out.size() == space.dim()).
    std::function<void(const ParamVec&, RandomStream&, std::span<double>)> sampler;

    bool has_analytic_score() const { return static_cast<bool>(analytic_score); }
    bool in_domain(const ParamVec& p) const;
    /// Throws DomainError when p is outside the parameter domain.
    void require_in_domain(const ParamVec& p) const;
    std::size_t coordinate_index(const std::string& name) const;
};

struct GaussianConfig {
    bool mu_known = false;
    double mu_value = 0.0;
    Interval mu_domain{-5.0, 5.0};
    bool sigma_known = true;
    double sigma_value = 1.0;
    Interval sigma_domain{0.5, 2.5};
    std::size_t nodes = 2001;
    double span_sigmas = 10.0;
};

/// Gaussian family over a truncated Simpson grid spanning the whole mu
/// range plus span_sigmas of the largest admissible sigma on each side.
ParametricFamily make_gaussian(const GaussianConfig& config = {});

ParametricFamily make_bernoulli(Interval p_domain = {1e-3, 1.0 - 1e-3});

/// Poisson family truncated at the smallest n whose upper tail mass is
/// below tail_mass for every lambda in the domain.
ParametricFamily make_poisson(Interval lambda_domain = {0.5, 8.0}, double tail_mass = 1e-12);

/// Categorical distribution on outcomes {1, ..., m} with the first m-1
/// probabilities as coordinates; the joint constraint sum(p_i) <= 1 - margin
/// keeps the density of outcome m positive.
ParametricFamily make_categorical(std::size_t m, double margin = 1e-3);

/// One joint coordinate identified across factors. Factor coordinates not
/// mentioned in any entry are identified by name: same name, same joint
/// coordinate.
struct SharedParam {
    std::string joint_name;
    std::vector<std::pair<std::size_t, std::string>> members;  // (factor, coordinate)
};

/// Independent product of the factors over the product sample space; the
/// joint density is the product of factor densities and the joint score
/// the sum of factor scores.
ParametricFamily make_product(std::vector<ParametricFamily> factors,
                              const std::vector<SharedParam>& shared = {});

/// Densities tabulated on a rectangular grid of parameter points:
/// rows[j] holds the density at grid point j (row-major over param_axes,
/// last axis fastest) for every sample point of the space.
struct TabulatedTable {
    std::vector<std::string> coordinate_names;
    std::vector<std::vector<double>> param_axes;  // strictly increasing
    std::vector<std::vector<double>> rows;
};

/// Family interpolating the table multilinearly in the parameters.
/// No analytic score; derivatives fall back to finite differences.
ParametricFamily make_tabulated(SampleSpace space, TabulatedTable table,
                                std::string name = "tabulated");

/// An interior point of the domain usable as a generic probe (box center,
/// nudged toward the lower corner until extra_domain admits it).
ParamVec domain_probe_point(const ParametricFamily& family);

/// Verifies the normalization invariant at p for exact-expectation spaces.
void check_normalization(const ParametricFamily& family, const ParamVec& p,
                         double tolerance = 1e-9);

}  // namespace fisherrao

#endif
