#include "cli/app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fisherrao/estimation.hpp"
#include "fisherrao/geometry.hpp"
#include "fisherrao/jsonio.hpp"
#include "fisherrao/modelspec.hpp"

namespace fisherrao::cli {

namespace {

constexpr double kExactSlackTolerance = -1e-7;

struct CommonOpts {
    std::string spec_path;
    std::string at;
    std::string format = "table";
    std::optional<std::uint64_t> seed;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool at_required) {
    cmd->add_option("spec", opts.spec_path, "model spec JSON file")->required();
    auto* at = cmd->add_option("--at", opts.at, "parameter point, e.g. \"mu=0.5,sigma=1\"");
    if (at_required) at->required();
    cmd->add_option("--format", opts.format, "output format")
        ->check(CLI::IsMember({"table", "json"}));
    cmd->add_option("--seed", opts.seed, "override the Monte Carlo seed");
    cmd->add_option("--out", opts.out_path, "write the report to a file instead of stdout");
}

BuiltModel load(const CommonOpts& opts) {
    BuiltModel model = load_model_file(opts.spec_path);
    if (opts.seed) model.method.seed = *opts.seed;
    return model;
}

void emit(const CommonOpts& opts, const std::string& text, std::ostream& out) {
    if (opts.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(opts.out_path, std::ios::binary);
    if (!file) throw ModelError("cannot open output file '" + opts.out_path + "'");
    file << text;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_point_named(const ParametricFamily& family, const ParamVec& p) {
    std::string s;
    for (std::size_t i = 0; i < family.k; ++i) {
        if (i) s += ", ";
        s += family.coordinate_names[i] + "=" + format_double(p[i]);
    }
    return s;
}

void print_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << " ";
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << " " << format_double(m(i, j));
        os << "\n";
    }
}

// ---------------------------------------------------------------------------
// fisher

int cmd_fisher(const CommonOpts& opts, std::ostream& out) {
    const BuiltModel model = load(opts);
    const ParamVec p = parse_point(opts.at, model.family);
    const FisherMatrix fisher = fisher_matrix(model.family, p, model.method, model.fd);

    if (opts.format == "json") {
        emit(opts, dump_json(fisher_to_json(fisher, model.family.coordinate_names)) + "\n",
             out);
        return kExitOk;
    }
    std::ostringstream os;
    os << "family: " << model.family.name << "\n";
    os << "at: " << format_point_named(model.family, p) << "\n";
    os << "fisher:\n";
    print_matrix(os, fisher.entries);
    os << "inverse:\n";
    print_matrix(os, fisher.inverse);
    os << "condition: " << format_double(fisher.condition_estimate) << "\n";
    emit(opts, os.str(), out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// crb

int cmd_crb(const CommonOpts& opts, const std::string& theta_override, std::ostream& out) {
    BuiltModel model = load(opts);
    if (!theta_override.empty())
        model.theta = theta_from_expression(theta_override, model.family.coordinate_names);
    const ParamVec p = parse_point(opts.at, model.family);
    const double bound = crb(model.theta, model.family, p, model.method, model.fd);

    if (opts.format == "json") {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["kind"] = "crb";
        j["at"] = point_to_json(model.family.coordinate_names, p);
        j["theta"] = model.theta.label;
        j["bound"] = bound;
        j["method"] = method_to_json(model.method);
        emit(opts, dump_json(j) + "\n", out);
        return kExitOk;
    }
    std::ostringstream os;
    os << "family: " << model.family.name << "\n";
    os << "at: " << format_point_named(model.family, p) << "\n";
    os << "theta: " << model.theta.label << "\n";
    os << "bound: " << format_double(bound) << "\n";
    emit(opts, os.str(), out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const CommonOpts& opts, unsigned mc_seeds, std::ostream& out) {
    const BuiltModel model = load(opts);
    if (!model.estimator)
        throw ModelError("verify requires an 'estimator' entry in the model spec");
    const ParamVec p = parse_point(opts.at, model.family);
    const BoundReport report =
        verify_bound(*model.estimator, model.theta, model.family, p, model.method, model.fd);

    std::optional<McVerifySummary> mc;
    if (mc_seeds > 0) {
        std::vector<std::uint64_t> seeds(mc_seeds);
        const std::uint64_t base = opts.seed.value_or(model.method.seed);
        for (unsigned i = 0; i < mc_seeds; ++i) seeds[i] = base + 1 + i;
        const std::size_t samples =
            model.method.is_mc() ? std::max<std::size_t>(model.method.mc_samples, 10000)
                                 : 100000;
        mc = mc_verify(*model.estimator, model.theta, model.family, p, seeds, samples,
                       model.fd);
    }

    bool pass = !report.biased;
    if (pass) {
        if (mc) {
            pass = mc->passed;
        } else if (report.method.is_mc()) {
            pass = report.slack >= -3.0 * report.mc_std_error.value_or(0.0);
        } else {
            pass = report.slack >= kExactSlackTolerance;
        }
    }

    if (opts.format == "json") {
        nlohmann::json j = report_to_json(report, model.family.coordinate_names);
        j["estimator"] = model.estimator->label;
        j["theta"] = model.theta.label;
        j["pass"] = pass;
        if (mc) j["mc_summary"] = mc_summary_to_json(*mc);
        emit(opts, dump_json(j) + "\n", out);
        return pass ? kExitOk : kExitBoundFail;
    }

    std::ostringstream os;
    os << "family: " << model.family.name << "\n";
    os << "at: " << format_point_named(model.family, p) << "\n";
    os << "theta: " << model.theta.label << "\n";
    os << "estimator: " << model.estimator->label << "\n";
    os << "theta value: " << format_double(report.theta_value) << "\n";
    os << "estimator mean: " << format_double(report.estimator_mean) << "\n";
    os << "bias: " << format_double(report.bias) << "\n";
    os << "biased: " << (report.biased ? "yes" : "no")
       << " (max probe bias " << format_double(report.max_probe_bias) << ")\n";
    os << "variance: " << format_double(report.variance) << "\n";
    if (report.mc_std_error)
        os << "variance std error: " << format_double(*report.mc_std_error) << "\n";
    os << "bound: " << format_double(report.bound) << "\n";
    os << "slack: " << format_double(report.slack) << "\n";
    os << "efficiency: " << format_double(report.efficiency) << "\n";
    if (mc) {
        os << "mc-verify: " << mc->n_pass << "/" << mc->per_seed.size()
           << " seeds pass, min slack " << format_double(mc->min_slack) << "\n";
    }
    os << "verdict: " << (pass ? "PASS" : "FAIL") << "\n";
    emit(opts, os.str(), out);
    return pass ? kExitOk : kExitBoundFail;
}

// ---------------------------------------------------------------------------
// check

struct CheckRow {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

Chart builtin_chart(const ParametricFamily& family) {
    if (family.name == "bernoulli") {
        return Chart{
            "log-odds",
            [](const ParamVec& p) {
                return ParamVec{std::log(p[0] / (1.0 - p[0]))};
            },
            [](const ParamVec& q) {
                return ParamVec{1.0 / (1.0 + std::exp(-q[0]))};
            },
            nullptr,
            {"psi"},
            {}};
    }
    if (family.name == "poisson") {
        return Chart{"log",
                     [](const ParamVec& p) { return ParamVec{std::log(p[0])}; },
                     [](const ParamVec& q) { return ParamVec{std::exp(q[0])}; },
                     nullptr,
                     {"log_lambda"},
                     {}};
    }
    const std::size_t k = family.k;
    return Chart{"scale2",
                 [k](const ParamVec& p) {
                     ParamVec q(k);
                     for (std::size_t i = 0; i < k; ++i) q[i] = 2.0 * p[i];
                     return q;
                 },
                 [k](const ParamVec& q) {
                     ParamVec p(k);
                     for (std::size_t i = 0; i < k; ++i) p[i] = 0.5 * q[i];
                     return p;
                 },
                 nullptr,
                 {},
                 {}};
}

std::vector<TangentVector> probe_directions(const ParametricFamily& family,
                                            const ParamVec& p) {
    std::vector<TangentVector> dirs;
    for (std::size_t i = 0; i < family.k; ++i) {
        std::vector<double> e(family.k, 0.0);
        e[i] = 1.0;
        dirs.push_back(tangent(p, std::move(e)));
    }
    if (family.k > 1) {
        std::vector<double> mixed(family.k);
        for (std::size_t i = 0; i < family.k; ++i) mixed[i] = i % 2 == 0 ? 1.0 : -1.0;
        dirs.push_back(tangent(p, std::move(mixed)));
    }
    return dirs;
}

int cmd_check(const CommonOpts& opts, std::ostream& out) {
    const BuiltModel model = load(opts);
    const ParametricFamily& family = model.family;
    const ParamVec at = opts.at.empty() ? domain_probe_point(family)
                                        : parse_point(opts.at, family);
    // Model diagnostics run exactly whenever the space admits it.
    const ExpectationMethod method =
        family.space.exact_allowed() ? ExpectationMethod::exact() : model.method;
    const bool exact = !method.is_mc();
    const FDScheme fd = model.fd;

    std::vector<CheckRow> rows;
    const auto add = [&rows](CheckRow row) { rows.push_back(std::move(row)); };

    // 1. zero-mean score
    {
        CheckRow row{"score-zero-mean", 0.0,
                     exact ? (family.has_analytic_score() ? 1e-8 : 1e-6) : 1e-2, false, ""};
        for (const auto& v : probe_directions(family, at))
            row.residual = std::max(row.residual, std::abs(score_mean(family, v, method, fd)));
        row.pass = row.residual <= row.tolerance;
        add(row);
    }

    // 2. reference-measure invariance of scores and of the ML argmax
    if (family.space.kind() == SpaceKind::Product) {
        add({"reference-measure-invariance", 0.0, 0.0, true, "skipped: product space"});
    } else {
        const auto weight = [](SamplePointView x) { return std::exp(x[0] * x[0] / 100.0); };
        CheckRow row{"reference-measure-invariance", 0.0,
                     family.has_analytic_score() ? 1e-10 : 1e-7, false, ""};
        std::vector<double> probe_x(family.space.dim());
        CheckRow argmax_row{"ml-argmax-invariance", 0.0, 0.0, true, ""};
        const ParametricFamily reweighted = reweight_reference_measure(family, weight);
        for (std::size_t xi : {family.space.size() / 3, family.space.size() / 2}) {
            family.space.gather(xi, probe_x);
            for (const auto& v : probe_directions(family, at)) {
                const ScorePair pair = check_reference_measure_invariance(
                    family, weight, v, {probe_x.data(), probe_x.size()}, fd);
                row.residual =
                    std::max(row.residual, std::abs(pair.original - pair.reweighted));
            }
            // grid argmax of the log-likelihood along the first coordinate
            std::size_t best_orig = 0, best_rew = 0;
            double max_orig = -1e308, max_rew = -1e308;
            for (std::size_t gi = 0; gi < 41; ++gi) {
                ParamVec q = at;
                q[0] = family.param_domain[0].at_fraction(0.1 + 0.8 * gi / 40.0);
                if (!family.in_domain(q)) continue;
                const SamplePointView xv{probe_x.data(), probe_x.size()};
                const double l_orig = log_likelihood(family, q, xv);
                const double l_rew = log_likelihood(reweighted, q, xv);
                if (l_orig > max_orig) max_orig = l_orig, best_orig = gi;
                if (l_rew > max_rew) max_rew = l_rew, best_rew = gi;
            }
            if (best_orig != best_rew) argmax_row.pass = false;
        }
        row.pass = row.residual <= row.tolerance;
        add(row);
        add(argmax_row);
    }

    // 3. the unbiased-estimator differential identity
    if (model.estimator) {
        CheckRow row{"dtheta-via-estimator", 0.0, 1e-6, false, ""};
        for (const auto& v : probe_directions(family, at)) {
            const DthetaCheck check =
                dtheta_via_estimator(*model.estimator, family, v, method, fd);
            row.residual = std::max(row.residual, std::abs(check.lhs - check.rhs));
        }
        row.pass = row.residual <= row.tolerance;
        add(row);
    }

    // 4. the derivation chain of the bound
    if (model.estimator) {
        const ProofChainLedger ledger =
            proof_chain_check(*model.estimator, model.theta, family, at, method, fd);
        const double scale =
            std::max({1.0, std::abs(ledger.grad_norm_sq), std::abs(ledger.cauchy_schwarz)});
        CheckRow row{"proof-chain", 0.0, 1e-7, false, ""};
        row.residual = std::abs(ledger.grad_norm_sq - ledger.covariance_term) / scale;
        row.residual = std::max(
            row.residual,
            std::max(0.0, ledger.covariance_term - ledger.cauchy_schwarz - 1e-9) / scale);
        row.residual = std::max(
            row.residual, std::abs(ledger.cauchy_schwarz - ledger.variance_route) / scale);
        row.pass = row.residual <= row.tolerance;
        add(row);
    }

    // 5. chart invariance: tensor law and the bound across charts
    {
        const Chart chart = builtin_chart(family);
        const ParametricFamily psi_family = reparameterize(family, chart);
        const ParamVec q = chart.forward(at);
        const FisherMatrix fisher_phi = fisher_matrix(family, at, method, fd);
        const FisherMatrix fisher_psi = fisher_matrix(psi_family, q, method, fd);
        const Eigen::MatrixXd jac =
            chart_jacobian(chart, q, family.k, psi_family.param_domain, fd);
        const Eigen::MatrixXd expected = jac.transpose() * fisher_phi.entries * jac;
        const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());

        CheckRow tensor{"tensor-law", 0.0, 1e-6, false, "chart " + chart.name};
        tensor.residual = (fisher_psi.entries - expected).cwiseAbs().maxCoeff() / scale;
        tensor.pass = tensor.residual <= tensor.tolerance;
        add(tensor);

        auto theta_phi = model.theta;
        auto inverse = chart.inverse;
        ParameterFunction theta_psi;
        theta_psi.label = model.theta.label;
        theta_psi.evaluate = [theta_phi, inverse](const ParamVec& qq) {
            return theta_phi.evaluate(inverse(qq));
        };
        const double bound_phi =
            gradient(model.theta, fisher_phi, family.param_domain, fd).squared_norm;
        const double bound_psi =
            gradient(theta_psi, fisher_psi, psi_family.param_domain, fd).squared_norm;
        CheckRow inv{"chart-invariance", 0.0, 1e-6, false, "chart " + chart.name};
        inv.residual = std::abs(bound_phi - bound_psi) / std::max(1.0, std::abs(bound_phi));
        inv.pass = inv.residual <= inv.tolerance;
        add(inv);
    }

    bool all_pass = true;
    for (const auto& row : rows) all_pass = all_pass && row.pass;

    if (opts.format == "json") {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["kind"] = "check";
        j["at"] = point_to_json(family.coordinate_names, at);
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json c;
            c["name"] = row.name;
            c["residual"] = row.residual;
            c["tolerance"] = row.tolerance;
            c["pass"] = row.pass;
            if (!row.note.empty()) c["note"] = row.note;
            checks.push_back(c);
        }
        j["checks"] = checks;
        j["pass"] = all_pass;
        emit(opts, dump_json(j) + "\n", out);
        return all_pass ? kExitOk : kExitBoundFail;
    }

    std::ostringstream os;
    os << "family: " << family.name << "\n";
    os << "at: " << format_point_named(family, at) << "\n";
    for (const auto& row : rows) {
        os << (row.pass ? "PASS" : "FAIL") << "  " << row.name
           << "  residual=" << format_double(row.residual)
           << " tolerance=" << format_double(row.tolerance);
        if (!row.note.empty()) os << "  (" << row.note << ")";
        os << "\n";
    }
    os << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    emit(opts, os.str(), out);
    return all_pass ? kExitOk : kExitBoundFail;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRange {
    std::string coordinate;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 0;
};

SweepRange parse_range(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw ModelError("--range expects name=lo:hi:steps, got '" + text + "'");
    SweepRange range;
    range.coordinate = text.substr(0, eq);
    const std::string rest = text.substr(eq + 1);
    const auto c1 = rest.find(':');
    const auto c2 = rest.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw ModelError("--range expects name=lo:hi:steps, got '" + text + "'");
    try {
        range.lo = std::stod(rest.substr(0, c1));
        range.hi = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
        const long long steps = std::stoll(rest.substr(c2 + 1));
        if (steps < 1) throw std::invalid_argument("steps");
        range.steps = static_cast<std::size_t>(steps);
    } catch (const std::exception&) {
        throw ModelError("malformed --range '" + text + "'");
    }
    return range;
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_sweep(const CommonOpts& opts, const std::string& range_text, std::ostream& out) {
    const BuiltModel model = load(opts);
    const ParametricFamily& family = model.family;
    if (!model.estimator)
        throw ModelError("sweep requires an 'estimator' entry in the model spec");
    const SweepRange range = parse_range(range_text);
    const std::size_t swept = family.coordinate_index(range.coordinate);

    ParamVec base(family.k, 0.0);
    if (family.k > 1) {
        if (opts.at.empty())
            throw ModelError("sweep over a multi-parameter family needs --at for the fixed "
                             "coordinates");
        std::vector<bool> seen(family.k, false);
        // reuse parse_point but tolerate the swept coordinate being absent
        std::string text = opts.at;
        ParamVec parsed(family.k, 0.0);
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw ModelError("--at expects name=value pairs, got '" + item + "'");
            const std::size_t slot = family.coordinate_index(item.substr(0, eq));
            parsed[slot] = std::stod(item.substr(eq + 1));
            seen[slot] = true;
        }
        for (std::size_t i = 0; i < family.k; ++i) {
            if (i == swept) continue;
            if (!seen[i])
                throw ModelError("--at is missing coordinate '" + family.coordinate_names[i] +
                                 "'");
            base[i] = parsed[i];
        }
    }

    // All rows validated before any computation.
    std::vector<ParamVec> points;
    for (std::size_t i = 0; i < range.steps; ++i) {
        ParamVec p = base;
        p[swept] = range.steps == 1
                       ? range.lo
                       : range.lo + (range.hi - range.lo) * static_cast<double>(i) /
                             static_cast<double>(range.steps - 1);
        if (!family.in_domain(p))
            throw ModelError("sweep point " + format_point(p) + " is outside the domain");
        points.push_back(std::move(p));
    }

    std::ostringstream csv;
    csv << "point,theta,variance,bound,slack,efficiency,error\n";
    for (const ParamVec& p : points) {
        const double theta_value = model.theta.evaluate(p);
        csv << csv_double(p[swept]) << "," << csv_double(theta_value) << ",";
        try {
            const double var =
                variance(*model.estimator, family, p, model.method).variance;
            const double bound = crb(model.theta, family, p, model.method, model.fd);
            const double slack = var - bound;
            const double efficiency = var > 0.0 ? bound / var : (bound <= 0.0 ? 1.0 : 0.0);
            csv << csv_double(var) << "," << csv_double(bound) << "," << csv_double(slack)
                << "," << csv_double(efficiency) << ",\n";
        } catch (const SingularInformation&) {
            csv << ",,,,singular_information\n";
        }
    }
    emit(opts, csv.str(), out);
    return kExitOk;
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fisher-Rao metric and Cramer-Rao bound toolkit"};
    app.require_subcommand(1);

    CommonOpts fisher_opts, crb_opts, verify_opts, check_opts, sweep_opts;
    std::string theta_override, range_text;
    unsigned mc_seeds = 0;

    auto* fisher_cmd =
        app.add_subcommand("fisher", "Fisher information matrix, inverse and condition");
    add_common(fisher_cmd, fisher_opts, /*at_required=*/true);

    auto* crb_cmd = app.add_subcommand("crb", "Cramer-Rao lower bound for theta");
    add_common(crb_cmd, crb_opts, /*at_required=*/true);
    crb_cmd->add_option("--theta", theta_override, "theta expression (overrides the spec)");

    auto* verify_cmd =
        app.add_subcommand("verify", "verify the variance bound for the spec's estimator");
    add_common(verify_cmd, verify_opts, /*at_required=*/true);
    verify_cmd->add_option("--mc-seeds", mc_seeds,
                           "append a Monte Carlo confirmation over this many seeds");

    auto* check_cmd =
        app.add_subcommand("check", "model self-checks: score, invariance, chain, charts");
    add_common(check_cmd, check_opts, /*at_required=*/false);

    auto* sweep_cmd = app.add_subcommand("sweep", "tabulate the bound across a range (CSV)");
    add_common(sweep_cmd, sweep_opts, /*at_required=*/false);
    sweep_cmd->add_option("--range", range_text, "swept coordinate, name=lo:hi:steps")
        ->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (fisher_cmd->parsed()) return cmd_fisher(fisher_opts, out);
        if (crb_cmd->parsed()) return cmd_crb(crb_opts, theta_override, out);
        if (verify_cmd->parsed()) return cmd_verify(verify_opts, mc_seeds, out);
        if (check_cmd->parsed()) return cmd_check(check_opts, out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, range_text, out);
        err << "error: no subcommand\n";
        return kExitInput;
    } catch (const SingularInformation& e) {
        err << "error: " << e.what() << "\n";
        return kExitSingular;
    } catch (const expr::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const expr::EvalError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace fisherrao::cli
