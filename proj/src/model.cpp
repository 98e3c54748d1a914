#include "fisherrao/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "fisherrao/expectation.hpp"

namespace fisherrao {

std::string format_point(const ParamVec& p) {
    std::ostringstream os;
    os.precision(12);
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) os << ", ";
        os << p[i];
    }
    os << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// SampleSpace

SampleSpace SampleSpace::discrete(std::vector<double> points, std::vector<double> weights) {
    if (points.empty()) throw ModelError("discrete space needs at least one point");
    if (points.size() != weights.size())
        throw ModelError("discrete space: points/weights size mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw ModelError("reference weights must be strictly positive");
    SampleSpace s;
    s.kind_ = SpaceKind::DiscreteFinite;
    s.dim_ = 1;
    s.size_ = points.size();
    s.points_ = std::move(points);
    s.weights_ = std::move(weights);
    return s;
}

SampleSpace SampleSpace::simpson_grid(double a, double b, std::size_t nodes) {
    if (!(a < b)) throw ModelError("grid requires a < b");
    if (nodes < 3 || nodes % 2 == 0)
        throw ModelError("composite Simpson grid needs an odd node count >= 3");
    SampleSpace s;
    s.kind_ = SpaceKind::ContinuousGrid;
    s.dim_ = 1;
    s.size_ = nodes;
    s.points_.resize(nodes);
    s.weights_.resize(nodes);
    const double h = (b - a) / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) {
        s.points_[i] = a + h * static_cast<double>(i);
        const bool edge = i == 0 || i + 1 == nodes;
        s.weights_[i] = edge ? h / 3.0 : (i % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    }
    return s;
}

SampleSpace SampleSpace::product(std::vector<SampleSpace> factors) {
    if (factors.size() < 2) throw ModelError("product space needs at least two factors");
    SampleSpace s;
    s.kind_ = SpaceKind::Product;
    s.size_ = 1;
    for (auto& f : factors) {
        if (f.kind() == SpaceKind::Product) {
            // flatten nested products
            for (auto& g : f.factors_) s.factors_.push_back(std::move(g));
        } else {
            s.factors_.push_back(std::move(f));
        }
    }
    for (const auto& f : s.factors_) s.size_ *= f.size_;
    s.dim_ = s.factors_.size();
    return s;
}

double SampleSpace::weight(std::size_t i) const {
    if (kind_ != SpaceKind::Product) return weights_[i];
    double w = 1.0;
    for (std::size_t f = factors_.size(); f-- > 0;) {
        const SampleSpace& fac = factors_[f];
        w *= fac.weights_[i % fac.size_];
        i /= fac.size_;
    }
    return w;
}

void SampleSpace::gather(std::size_t i, std::span<double> out) const {
    if (kind_ != SpaceKind::Product) {
        out[0] = points_[i];
        return;
    }
    for (std::size_t f = factors_.size(); f-- > 0;) {
        const SampleSpace& fac = factors_[f];
        out[f] = fac.points_[i % fac.size_];
        i /= fac.size_;
    }
}

double SampleSpace::point1d(std::size_t i) const {
    if (kind_ == SpaceKind::Product) throw ModelError("point1d on a product space");
    return points_[i];
}

SampleSpace SampleSpace::reweighted(const std::function<double(SamplePointView)>& w) const {
    if (kind_ == SpaceKind::Product)
        throw ModelError("reference-measure reweighting supports leaf spaces only");
    SampleSpace s = *this;
    for (std::size_t i = 0; i < size_; ++i) {
        const double factor = w(SamplePointView{&points_[i], 1});
        if (!(factor > 0.0) || !std::isfinite(factor))
            throw ModelError("reweighting function must be strictly positive and finite");
        s.weights_[i] = weights_[i] * factor;
    }
    return s;
}

// ---------------------------------------------------------------------------
// ParametricFamily

bool ParametricFamily::in_domain(const ParamVec& p) const {
    if (p.size() != k) return false;
    for (std::size_t i = 0; i < k; ++i)
        if (!param_domain[i].contains(p[i])) return false;
    if (extra_domain && !extra_domain(p)) return false;
    return true;
}

void ParametricFamily::require_in_domain(const ParamVec& p) const {
    if (!in_domain(p))
        throw DomainError("parameter outside domain of family '" + name +
                          "': " + format_point(p));
}

std::size_t ParametricFamily::coordinate_index(const std::string& coord) const {
    for (std::size_t i = 0; i < coordinate_names.size(); ++i)
        if (coordinate_names[i] == coord) return i;
    throw ModelError("family '" + name + "' has no coordinate '" + coord + "'");
}

ParamVec domain_probe_point(const ParametricFamily& family) {
    for (double t : {0.5, 0.3, 0.2, 0.1}) {
        ParamVec p(family.k);
        for (std::size_t i = 0; i < family.k; ++i) p[i] = family.param_domain[i].at_fraction(t);
        if (family.in_domain(p)) return p;
    }
    throw ModelError("could not find an interior probe point for family '" + family.name + "'");
}

void check_normalization(const ParametricFamily& family, const ParamVec& p, double tolerance) {
    if (!family.space.exact_allowed()) return;
    const double total =
        expect([](SamplePointView) { return 1.0; }, family, p, ExpectationMethod::exact());
    if (std::abs(total - 1.0) > tolerance)
        throw ModelError("family '" + family.name + "' is not normalized at " +
                         format_point(p) + ": integral = " + std::to_string(total));
}

// ---------------------------------------------------------------------------
// Gaussian

ParametricFamily make_gaussian(const GaussianConfig& config) {
    if (config.mu_known && config.sigma_known)
        throw ModelError("gaussian: at least one of mu, sigma must be free");
    if (config.sigma_known) {
        if (!(config.sigma_value > 0.0)) throw ModelError("gaussian: sigma must be positive");
    } else if (!(config.sigma_domain.lo > 0.0)) {
        throw ModelError("gaussian: sigma domain must exclude sigma <= 0");
    }
    if (!config.mu_known && !(config.mu_domain.lo < config.mu_domain.hi))
        throw ModelError("gaussian: empty mu domain");

    const double mu_lo = config.mu_known ? config.mu_value : config.mu_domain.lo;
    const double mu_hi = config.mu_known ? config.mu_value : config.mu_domain.hi;
    const double sigma_hi = config.sigma_known ? config.sigma_value : config.sigma_domain.hi;
    const double a = mu_lo - config.span_sigmas * sigma_hi;
    const double b = mu_hi + config.span_sigmas * sigma_hi;

    ParametricFamily fam;
    fam.space = SampleSpace::simpson_grid(a, b, config.nodes);

    const bool mu_free = !config.mu_known;
    const bool sigma_free = !config.sigma_known;
    if (mu_free) {
        fam.coordinate_names.push_back("mu");
        fam.param_domain.push_back(config.mu_domain);
    }
    if (sigma_free) {
        fam.coordinate_names.push_back("sigma");
        fam.param_domain.push_back(config.sigma_domain);
    }
    fam.k = fam.coordinate_names.size();
    fam.name = "gaussian";

    const double mu_fixed = config.mu_value;
    const double sigma_fixed = config.sigma_value;
    const auto unpack = [mu_free, sigma_free, mu_fixed, sigma_fixed](const ParamVec& p) {
        double mu = mu_fixed, sigma = sigma_fixed;
        std::size_t slot = 0;
        if (mu_free) mu = p[slot++];
        if (sigma_free) sigma = p[slot];
        return std::pair{mu, sigma};
    };

    fam.density = [unpack](const ParamVec& p, SamplePointView x) {
        const auto [mu, sigma] = unpack(p);
        const double z = (x[0] - mu) / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    fam.analytic_score = [unpack, mu_free](const ParamVec& p, SamplePointView x,
                                           std::size_t i) {
        const auto [mu, sigma] = unpack(p);
        const double z = (x[0] - mu) / sigma;
        const bool wants_mu = mu_free && i == 0;
        return wants_mu ? z / sigma : (z * z - 1.0) / sigma;
    };
    fam.sampler = [unpack](const ParamVec& p, RandomStream& rng, std::span<double> out) {
        const auto [mu, sigma] = unpack(p);
        const double u1 = rng.next_u01_pos();
        const double u2 = rng.next_u01();
        const double z =
            std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        out[0] = mu + sigma * z;
    };

    check_normalization(fam, domain_probe_point(fam));
    return fam;
}

// ---------------------------------------------------------------------------
// Bernoulli

ParametricFamily make_bernoulli(Interval p_domain) {
    if (!(p_domain.lo >= 0.0 && p_domain.hi <= 1.0 && p_domain.lo < p_domain.hi))
        throw ModelError("bernoulli: domain must be an open subinterval of (0, 1)");

    ParametricFamily fam;
    fam.name = "bernoulli";
    fam.k = 1;
    fam.coordinate_names = {"p"};
    fam.param_domain = {p_domain};
    fam.space = SampleSpace::discrete({0.0, 1.0}, {1.0, 1.0});
    fam.density = [](const ParamVec& p, SamplePointView x) {
        return x[0] > 0.5 ? p[0] : 1.0 - p[0];
    };
    fam.analytic_score = [](const ParamVec& p, SamplePointView x, std::size_t) {
        return x[0] > 0.5 ? 1.0 / p[0] : -1.0 / (1.0 - p[0]);
    };
    fam.sampler = [](const ParamVec& p, RandomStream& rng, std::span<double> out) {
        out[0] = rng.next_u01() < p[0] ? 1.0 : 0.0;
    };
    check_normalization(fam, domain_probe_point(fam));
    return fam;
}

// ---------------------------------------------------------------------------
// Poisson

namespace {

double poisson_pmf(double lambda, double n) {
    return std::exp(n * std::log(lambda) - lambda - std::lgamma(n + 1.0));
}

}  // namespace

ParametricFamily make_poisson(Interval lambda_domain, double tail_mass) {
    if (!(lambda_domain.lo > 0.0 && lambda_domain.lo < lambda_domain.hi))
        throw ModelError("poisson: lambda domain must be positive");
    if (!(tail_mass > 0.0) || tail_mass > 1e-12)
        throw ModelError("poisson: tail mass must lie in (0, 1e-12]");

    // Truncate where the upper tail is below tail_mass for the heaviest
    // lambda in the domain.
    const double lambda_max = lambda_domain.hi;
    double cumulative = 0.0;
    std::size_t n_max = 0;
    for (;; ++n_max) {
        cumulative += poisson_pmf(lambda_max, static_cast<double>(n_max));
        if (1.0 - cumulative < tail_mass) break;
        if (n_max > 100000) throw ModelError("poisson: truncation point unreasonably large");
    }

    std::vector<double> points(n_max + 1), weights(n_max + 1, 1.0);
    for (std::size_t i = 0; i <= n_max; ++i) points[i] = static_cast<double>(i);

    ParametricFamily fam;
    fam.name = "poisson";
    fam.k = 1;
    fam.coordinate_names = {"lambda"};
    fam.param_domain = {lambda_domain};
    fam.space = SampleSpace::discrete(std::move(points), std::move(weights));
    fam.density = [](const ParamVec& p, SamplePointView x) { return poisson_pmf(p[0], x[0]); };
    fam.analytic_score = [](const ParamVec& p, SamplePointView x, std::size_t) {
        return x[0] / p[0] - 1.0;
    };
    const std::size_t support = n_max;
    fam.sampler = [support](const ParamVec& p, RandomStream& rng, std::span<double> out) {
        // inverse CDF over the truncated support
        const double u = rng.next_u01();
        double cum = 0.0;
        for (std::size_t n = 0; n <= support; ++n) {
            cum += poisson_pmf(p[0], static_cast<double>(n));
            if (u < cum) {
                out[0] = static_cast<double>(n);
                return;
            }
        }
        out[0] = static_cast<double>(support);
    };
    check_normalization(fam, domain_probe_point(fam));
    return fam;
}

// ---------------------------------------------------------------------------
// Categorical

ParametricFamily make_categorical(std::size_t m, double margin) {
    if (m < 2) throw ModelError("categorical: need at least two outcomes");
    if (!(margin > 0.0 && margin < 0.5)) throw ModelError("categorical: bad margin");

    ParametricFamily fam;
    fam.name = "categorical" + std::to_string(m);
    fam.k = m - 1;
    for (std::size_t i = 1; i < m; ++i) fam.coordinate_names.push_back("p" + std::to_string(i));
    fam.param_domain.assign(m - 1, Interval{margin, 1.0 - margin});
    fam.extra_domain = [margin](const ParamVec& p) {
        double total = 0.0;
        for (double v : p) total += v;
        return total <= 1.0 - margin;
    };

    std::vector<double> points(m), weights(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) points[i] = static_cast<double>(i + 1);
    fam.space = SampleSpace::discrete(std::move(points), std::move(weights));

    const std::size_t outcomes = m;
    fam.density = [outcomes](const ParamVec& p, SamplePointView x) {
        const auto outcome = static_cast<std::size_t>(x[0] + 0.5);
        if (outcome < outcomes) return p[outcome - 1];
        double rest = 1.0;
        for (double v : p) rest -= v;
        return rest;
    };
    fam.analytic_score = [outcomes](const ParamVec& p, SamplePointView x, std::size_t i) {
        const auto outcome = static_cast<std::size_t>(x[0] + 0.5);
        if (outcome < outcomes) return outcome - 1 == i ? 1.0 / p[outcome - 1] : 0.0;
        double rest = 1.0;
        for (double v : p) rest -= v;
        return -1.0 / rest;
    };
    fam.sampler = [outcomes](const ParamVec& p, RandomStream& rng, std::span<double> out) {
        const double u = rng.next_u01();
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < outcomes; ++i) {
            cum += p[i];
            if (u < cum) {
                out[0] = static_cast<double>(i + 1);
                return;
            }
        }
        out[0] = static_cast<double>(outcomes);
    };

    ParamVec uniform(m - 1, 1.0 / static_cast<double>(m));
    check_normalization(fam, uniform);
    return fam;
}

// ---------------------------------------------------------------------------
// Product

namespace {

struct FactorBinding {
    // joint coordinate slot for each factor coordinate
    std::vector<std::size_t> joint_slot;
};

}  // namespace

ParametricFamily make_product(std::vector<ParametricFamily> factors,
                              const std::vector<SharedParam>& shared) {
    if (factors.size() < 2) throw ModelError("product: need at least two factors");
    for (const auto& f : factors)
        if (f.space.kind() == SpaceKind::Product)
            throw ModelError("product: factors must be scalar families");

    // Resolve each factor coordinate to a joint name: explicit entries from
    // the identification map win, everything else keeps its own name (so
    // same-named coordinates are shared).
    std::vector<std::vector<std::string>> joint_name_of(factors.size());
    for (std::size_t f = 0; f < factors.size(); ++f)
        joint_name_of[f] = factors[f].coordinate_names;
    for (const auto& entry : shared) {
        for (const auto& [f, coord] : entry.members) {
            if (f >= factors.size())
                throw ModelError("product: identification map names factor " +
                                 std::to_string(f) + " but there are only " +
                                 std::to_string(factors.size()));
            const std::size_t ci = factors[f].coordinate_index(coord);
            if (joint_name_of[f][ci] != factors[f].coordinate_names[ci])
                throw ModelError("product: coordinate '" + coord + "' of factor " +
                                 std::to_string(f) + " identified twice");
            joint_name_of[f][ci] = entry.joint_name;
        }
    }

    ParametricFamily fam;
    fam.name = "product";
    std::vector<FactorBinding> bindings(factors.size());
    for (std::size_t f = 0; f < factors.size(); ++f) {
        bindings[f].joint_slot.resize(factors[f].k);
        for (std::size_t c = 0; c < factors[f].k; ++c) {
            const std::string& jn = joint_name_of[f][c];
            auto it = std::find(fam.coordinate_names.begin(), fam.coordinate_names.end(), jn);
            std::size_t slot;
            if (it == fam.coordinate_names.end()) {
                slot = fam.coordinate_names.size();
                fam.coordinate_names.push_back(jn);
                fam.param_domain.push_back(factors[f].param_domain[c]);
            } else {
                slot = static_cast<std::size_t>(it - fam.coordinate_names.begin());
                // shared coordinate: domain is the intersection
                Interval& dom = fam.param_domain[slot];
                dom.lo = std::max(dom.lo, factors[f].param_domain[c].lo);
                dom.hi = std::min(dom.hi, factors[f].param_domain[c].hi);
                if (!(dom.lo < dom.hi))
                    throw ModelError("product: empty joint domain for coordinate '" + jn + "'");
            }
            bindings[f].joint_slot[c] = slot;
        }
    }
    fam.k = fam.coordinate_names.size();

    std::vector<SampleSpace> spaces;
    std::vector<std::size_t> dim_offset(factors.size());
    std::size_t offset = 0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
        dim_offset[f] = offset;
        offset += factors[f].space.dim();
        spaces.push_back(factors[f].space);
    }
    fam.space = SampleSpace::product(std::move(spaces));

    // Shared immutable state for the closures.
    auto held = std::make_shared<std::vector<ParametricFamily>>(std::move(factors));
    auto binds = std::make_shared<std::vector<FactorBinding>>(std::move(bindings));
    auto offsets = std::make_shared<std::vector<std::size_t>>(std::move(dim_offset));

    const auto factor_params = [binds](const ParametricFamily& factor, std::size_t f,
                                       const ParamVec& p) {
        ParamVec q(factor.k);
        for (std::size_t c = 0; c < factor.k; ++c) q[c] = p[(*binds)[f].joint_slot[c]];
        return q;
    };

    fam.extra_domain = [held, factor_params](const ParamVec& p) {
        for (std::size_t f = 0; f < held->size(); ++f) {
            const auto& factor = (*held)[f];
            if (!factor.in_domain(factor_params(factor, f, p))) return false;
        }
        return true;
    };
    fam.density = [held, offsets, factor_params](const ParamVec& p, SamplePointView x) {
        double prod = 1.0;
        for (std::size_t f = 0; f < held->size(); ++f) {
            const auto& factor = (*held)[f];
            prod *= factor.density(factor_params(factor, f, p),
                                   x.subspan((*offsets)[f], factor.space.dim()));
        }
        return prod;
    };
    bool all_analytic = true;
    for (const auto& factor : *held) all_analytic = all_analytic && factor.has_analytic_score();
    if (all_analytic) {
        fam.analytic_score = [held, binds, offsets, factor_params](
                                 const ParamVec& p, SamplePointView x, std::size_t i) {
            double total = 0.0;
            for (std::size_t f = 0; f < held->size(); ++f) {
                const auto& factor = (*held)[f];
                for (std::size_t c = 0; c < factor.k; ++c) {
                    if ((*binds)[f].joint_slot[c] != i) continue;
                    total += factor.analytic_score(
                        factor_params(factor, f, p),
                        x.subspan((*offsets)[f], factor.space.dim()), c);
                }
            }
            return total;
        };
    }
    fam.sampler = [held, offsets, factor_params](const ParamVec& p, RandomStream& rng,
                                                 std::span<double> out) {
        for (std::size_t f = 0; f < held->size(); ++f) {
            const auto& factor = (*held)[f];
            factor.sampler(factor_params(factor, f, p), rng,
                           out.subspan((*offsets)[f], factor.space.dim()));
        }
    };

    if (fam.space.exact_allowed()) check_normalization(fam, domain_probe_point(fam));
    return fam;
}

// ---------------------------------------------------------------------------
// Tabulated

namespace {

struct TableData {
    std::vector<std::vector<double>> axes;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> strides;  // row-major, last axis fastest

    // Multilinear interpolation weights: corner rows and coefficients.
    double interpolate(const ParamVec& p, std::size_t point) const {
        const std::size_t k = axes.size();
        // locate the cell and local coordinate per axis
        double value = 0.0;
        std::size_t corners = std::size_t{1} << k;
        std::vector<std::size_t> cell(k);
        std::vector<double> t(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto& axis = axes[i];
            auto it = std::upper_bound(axis.begin(), axis.end(), p[i]);
            std::size_t hi = static_cast<std::size_t>(it - axis.begin());
            if (hi == 0 || hi == axis.size()) throw DomainError("parameter outside table grid");
            cell[i] = hi - 1;
            t[i] = (p[i] - axis[hi - 1]) / (axis[hi] - axis[hi - 1]);
        }
        for (std::size_t corner = 0; corner < corners; ++corner) {
            double coeff = 1.0;
            std::size_t row = 0;
            for (std::size_t i = 0; i < k; ++i) {
                const bool high = (corner >> i) & 1;
                coeff *= high ? t[i] : 1.0 - t[i];
                row += strides[i] * (cell[i] + (high ? 1 : 0));
            }
            value += coeff * rows[row][point];
        }
        return value;
    }
};

// Bit-exact lookup from sample coordinates to the point index. Expectation
// gathers stored coordinates and samplers emit stored points, so equality
// on the double bit patterns is reliable.
struct PointIndex {
    std::unordered_map<std::string, std::size_t> map;

    static std::string key(SamplePointView x) {
        return std::string(reinterpret_cast<const char*>(x.data()), x.size_bytes());
    }

    explicit PointIndex(const SampleSpace& space) {
        std::vector<double> buf(space.dim());
        for (std::size_t i = 0; i < space.size(); ++i) {
            space.gather(i, buf);
            map.emplace(key({buf.data(), buf.size()}), i);
        }
    }

    std::size_t at(SamplePointView x) const {
        auto it = map.find(key(x));
        if (it == map.end())
            throw DomainError("tabulated family: sample point is not in the table support");
        return it->second;
    }
};

}  // namespace

ParametricFamily make_tabulated(SampleSpace space, TabulatedTable table, std::string name) {
    const std::size_t k = table.param_axes.size();
    if (k == 0) throw ModelError("tabulated: need at least one parameter axis");
    if (table.coordinate_names.size() != k)
        throw ModelError("tabulated: coordinate_names/param_axes size mismatch");
    std::size_t grid_points = 1;
    for (const auto& axis : table.param_axes) {
        if (axis.size() < 2) throw ModelError("tabulated: each axis needs >= 2 grid values");
        if (!std::is_sorted(axis.begin(), axis.end()) ||
            std::adjacent_find(axis.begin(), axis.end()) != axis.end())
            throw ModelError("tabulated: axes must be strictly increasing");
        grid_points *= axis.size();
    }
    if (table.rows.size() != grid_points)
        throw ModelError("tabulated: expected " + std::to_string(grid_points) +
                         " table rows, got " + std::to_string(table.rows.size()));

    for (const auto& row : table.rows) {
        if (row.size() != space.size())
            throw ModelError("tabulated: table row length does not match the space");
        double mass = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] < 0.0) throw ModelError("tabulated: negative density in table");
            mass += row[i] * space.weight(i);
        }
        if (std::abs(mass - 1.0) > 1e-6)
            throw ModelError("tabulated: table row has mass " + std::to_string(mass) +
                             ", expected 1 within 1e-6");
    }

    auto data = std::make_shared<TableData>();
    data->axes = std::move(table.param_axes);
    data->rows = std::move(table.rows);
    data->strides.assign(k, 1);
    for (std::size_t i = k; i-- > 1;)
        data->strides[i - 1] = data->strides[i] * data->axes[i].size();
    auto index = std::make_shared<PointIndex>(space);

    ParametricFamily fam;
    fam.name = std::move(name);
    fam.k = k;
    fam.coordinate_names = std::move(table.coordinate_names);
    fam.param_domain.reserve(k);
    for (const auto& axis : data->axes)
        fam.param_domain.push_back(Interval{axis.front(), axis.back()});
    fam.space = std::move(space);
    fam.density = [data, index](const ParamVec& p, SamplePointView x) {
        return data->interpolate(p, index->at(x));
    };

    auto space_copy = std::make_shared<SampleSpace>(fam.space);
    fam.sampler = [data, space_copy](const ParamVec& p, RandomStream& rng,
                                     std::span<double> out) {
        const SampleSpace& sp = *space_copy;
        double total = 0.0;
        std::vector<double> mass(sp.size());
        std::vector<double> buf(sp.dim());
        for (std::size_t i = 0; i < sp.size(); ++i) {
            sp.gather(i, buf);
            mass[i] = data->interpolate(p, i) * sp.weight(i);
            total += mass[i];
        }
        const double u = rng.next_u01() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < sp.size(); ++i) {
            cum += mass[i];
            if (u < cum || i + 1 == sp.size()) {
                sp.gather(i, out);
                return;
            }
        }
    };
    return fam;
}

}  // namespace fisherrao
