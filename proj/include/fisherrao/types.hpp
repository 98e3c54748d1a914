#ifndef FISHERRAO_TYPES_HPP
#define FISHERRAO_TYPES_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fisherrao {

/// A parameter point in the chart coordinates of a family.
using ParamVec = std::vector<double>;

/// A view of one sample point's coordinates (length = space dimension).
using SamplePointView = std::span<const double>;

/// Open interval (lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double x) const { return x > lo && x < hi; }
    double width() const { return hi - lo; }
    double at_fraction(double t) const { return lo + t * (hi - lo); }
};

/// Parameter point outside its domain, evaluation point outside the
/// support, or a request the model cannot satisfy (e.g. exact expectation
/// on an oversized product space).
class DomainError : public std::invalid_argument {
  public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid construction input: bad configuration, non-normalized table,
/// inconsistent parameter identification, non-invertible chart.
class ModelError : public std::invalid_argument {
  public:
    explicit ModelError(const std::string& what) : std::invalid_argument(what) {}
};

/// Fisher information matrix failed the positive-definiteness check.
class SingularInformation : public std::runtime_error {
  public:
    explicit SingularInformation(const std::string& what) : std::runtime_error(what) {}
};

/// "name=(v1, v2, ...)" used in diagnostics.
std::string format_point(const ParamVec& p);

}  // namespace fisherrao

#endif
