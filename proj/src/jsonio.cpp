#include "fisherrao/jsonio.hpp"

#include <cmath>
#include <cstdio>

namespace fisherrao {

namespace {

void append_escaped(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void append_number(double value, std::string& out) {
    if (!std::isfinite(value))
        throw std::invalid_argument("non-finite number in JSON output");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += buf;
}

void dump(const nlohmann::json& v, int indent, int level, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * (level + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * level, ' ');
    switch (v.type()) {
        case nlohmann::json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += '\n';
                out += pad;
                append_escaped(it.key(), out);
                out += ": ";
                dump(it.value(), indent, level + 1, out);
            }
            out += '\n';
            out += close_pad;
            out += '}';
            return;
        }
        case nlohmann::json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                out += '\n';
                out += pad;
                dump(item, indent, level + 1, out);
            }
            out += '\n';
            out += close_pad;
            out += ']';
            return;
        }
        case nlohmann::json::value_t::string:
            append_escaped(v.get_ref<const std::string&>(), out);
            return;
        case nlohmann::json::value_t::boolean:
            out += v.get<bool>() ? "true" : "false";
            return;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(v.get<std::int64_t>());
            return;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(v.get<std::uint64_t>());
            return;
        case nlohmann::json::value_t::number_float:
            append_number(v.get<double>(), out);
            return;
        case nlohmann::json::value_t::null:
        default:
            out += "null";
            return;
    }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::string dump_json(const nlohmann::json& doc, int indent) {
    std::string out;
    dump(doc, indent, 0, out);
    return out;
}

nlohmann::json method_to_json(const ExpectationMethod& method) {
    nlohmann::json j;
    j["kind"] = method.is_mc() ? "mc" : "exact";
    if (method.is_mc()) {
        j["samples"] = method.mc_samples;
        j["seed"] = method.seed;
    }
    return j;
}

nlohmann::json point_to_json(const std::vector<std::string>& names, const ParamVec& p) {
    nlohmann::json j;
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = p[i];
    return j;
}

nlohmann::json fisher_to_json(const FisherMatrix& fisher,
                              const std::vector<std::string>& names) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "fisher";
    j["at"] = point_to_json(names, fisher.at);
    j["coordinates"] = names;
    j["fisher"] = matrix_to_json(fisher.entries);
    j["inverse"] = matrix_to_json(fisher.inverse);
    j["condition"] = fisher.condition_estimate;
    j["method"] = method_to_json(fisher.method);
    return j;
}

nlohmann::json report_to_json(const BoundReport& report,
                              const std::vector<std::string>& names) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "bound_report";
    j["at"] = point_to_json(names, report.at);
    j["theta_value"] = report.theta_value;
    j["estimator_mean"] = report.estimator_mean;
    j["bias"] = report.bias;
    j["biased"] = report.biased;
    j["max_probe_bias"] = report.max_probe_bias;
    j["variance"] = report.variance;
    j["bound"] = report.bound;
    j["slack"] = report.slack;
    j["efficiency"] = report.efficiency;
    j["method"] = method_to_json(report.method);
    if (report.mc_std_error) j["mc_std_error"] = *report.mc_std_error;
    return j;
}

nlohmann::json mc_summary_to_json(const McVerifySummary& summary) {
    nlohmann::json j;
    j["bound"] = summary.bound;
    j["samples"] = summary.mc_samples;
    j["n_pass"] = summary.n_pass;
    j["pass_rate"] = summary.pass_rate;
    j["min_slack"] = summary.min_slack;
    j["passed"] = summary.passed;
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& r : summary.per_seed) {
        nlohmann::json s;
        s["seed"] = r.seed;
        s["variance"] = r.variance;
        s["std_error"] = r.std_error;
        s["slack"] = r.slack;
        s["pass"] = r.pass;
        seeds.push_back(s);
    }
    j["per_seed"] = seeds;
    return j;
}

}  // namespace fisherrao
