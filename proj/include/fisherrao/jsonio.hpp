#ifndef FISHERRAO_JSONIO_HPP
#define FISHERRAO_JSONIO_HPP

#include <string>

#include <json.hpp>

#include "fisherrao/estimation.hpp"
#include "fisherrao/geometry.hpp"

namespace fisherrao {

/// Serializes with floating-point numbers rendered at 17 significant
/// digits (round-trip exact for doubles) and object keys in sorted order,
/// so identical documents produce byte-identical text.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

nlohmann::json method_to_json(const ExpectationMethod& method);
nlohmann::json point_to_json(const std::vector<std::string>& names, const ParamVec& p);
nlohmann::json fisher_to_json(const FisherMatrix& fisher,
                              const std::vector<std::string>& names);
nlohmann::json report_to_json(const BoundReport& report,
                              const std::vector<std::string>& names);
nlohmann::json mc_summary_to_json(const McVerifySummary& summary);

}  // namespace fisherrao

#endif
