#ifndef FISHERRAO_MODELSPEC_HPP
#define FISHERRAO_MODELSPEC_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fisherrao/estimation.hpp"
#include "fisherrao/expr.hpp"
#include "fisherrao/geometry.hpp"
#include "fisherrao/model.hpp"

namespace fisherrao {

/// A model spec document turned into executable objects. The loader
/// validates strictly against the published schema (schemas/
/// modelspec.schema.json): unknown keys are rejected, required fields and
/// value ranges enforced, before any computation starts.
struct BuiltModel {
    ParametricFamily family;
    ParameterFunction theta;
    std::optional<Estimator> estimator;
    ExpectationMethod method;
    FDScheme fd;
    /// Names the estimator expression may bind: "x" for scalar spaces,
    /// "x1".."xd" for products.
    std::vector<std::string> sample_vars;
};

std::vector<std::string> sample_variable_names(const SampleSpace& space);

ParameterFunction theta_from_expression(const std::string& source,
                                        const std::vector<std::string>& coordinate_names);
Estimator estimator_from_expression(const std::string& source,
                                    const std::vector<std::string>& sample_vars);

/// Builds the model from a parsed spec document. base_dir resolves any
/// relative table_path.
BuiltModel build_model(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

BuiltModel load_model_file(const std::filesystem::path& path);

/// Parses "name=value,name=value" against the family's coordinates.
ParamVec parse_point(const std::string& text, const ParametricFamily& family);

}  // namespace fisherrao

#endif
