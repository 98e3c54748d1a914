#include "fisherrao/modelspec.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace fisherrao {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& context, const std::string& message) {
    throw ModelError("model spec: " + context + ": " + message);
}

void require_object(const json& j, const std::string& context) {
    if (!j.is_object()) fail(context, "expected an object");
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) fail(context, "unknown key '" + it.key() + "'");
    }
}

double get_number(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) fail(context, "missing key '" + key + "'");
    if (!j.at(key).is_number()) fail(context, "'" + key + "' must be a number");
    return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(context, "'" + key + "' must be a number");
    return j.at(key).get<double>();
}

Interval get_interval(const json& j, const std::string& key, Interval fallback,
                      const std::string& context) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(context, "'" + key + "' must be a [lo, hi] pair");
    Interval out{v[0].get<double>(), v[1].get<double>()};
    if (!(out.lo < out.hi)) fail(context, "'" + key + "' must satisfy lo < hi");
    return out;
}

std::string get_string(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key) || !j.at(key).is_string())
        fail(context, "missing string key '" + key + "'");
    return j.at(key).get<std::string>();
}

struct GridOverrides {
    std::optional<std::size_t> nodes;
    std::optional<double> span_sigmas;
    std::optional<double> tail_mass;
};

GridOverrides parse_grid(const json& doc) {
    GridOverrides g;
    if (!doc.contains("grid")) return g;
    const json& j = doc.at("grid");
    require_object(j, "grid");
    reject_unknown_keys(j, {"nodes", "span_sigmas", "poisson_tail_mass"}, "grid");
    if (j.contains("nodes")) {
        if (!j.at("nodes").is_number_integer()) fail("grid", "'nodes' must be an integer");
        const auto n = j.at("nodes").get<std::int64_t>();
        if (n < 3 || n % 2 == 0) fail("grid", "'nodes' must be odd and >= 3");
        g.nodes = static_cast<std::size_t>(n);
    }
    if (j.contains("span_sigmas")) {
        const double s = get_number(j, "span_sigmas", "grid");
        if (!(s > 0.0)) fail("grid", "'span_sigmas' must be positive");
        g.span_sigmas = s;
    }
    if (j.contains("poisson_tail_mass")) {
        g.tail_mass = get_number(j, "poisson_tail_mass", "grid");
    }
    return g;
}

ParametricFamily build_gaussian(const json& sub, const GridOverrides& grid) {
    GaussianConfig cfg;
    if (!sub.is_null()) {
        require_object(sub, "gaussian");
        reject_unknown_keys(sub, {"mu", "sigma"}, "gaussian");
        if (sub.contains("mu")) {
            const json& mu = sub.at("mu");
            require_object(mu, "gaussian.mu");
            reject_unknown_keys(mu, {"known", "value", "domain"}, "gaussian.mu");
            if (mu.contains("known")) {
                if (!mu.at("known").is_boolean()) fail("gaussian.mu", "'known' must be a boolean");
                cfg.mu_known = mu.at("known").get<bool>();
            }
            if (cfg.mu_known) cfg.mu_value = get_number(mu, "value", "gaussian.mu");
            cfg.mu_domain = get_interval(mu, "domain", cfg.mu_domain, "gaussian.mu");
        }
        if (sub.contains("sigma")) {
            const json& sg = sub.at("sigma");
            require_object(sg, "gaussian.sigma");
            reject_unknown_keys(sg, {"known", "value", "domain"}, "gaussian.sigma");
            if (sg.contains("known")) {
                if (!sg.at("known").is_boolean()) fail("gaussian.sigma", "'known' must be a boolean");
                cfg.sigma_known = sg.at("known").get<bool>();
            }
            if (cfg.sigma_known)
                cfg.sigma_value = get_number_or(sg, "value", cfg.sigma_value, "gaussian.sigma");
            else
                cfg.sigma_domain = get_interval(sg, "domain", cfg.sigma_domain,
                                                "gaussian.sigma");
        }
    }
    if (grid.nodes) cfg.nodes = *grid.nodes;
    if (grid.span_sigmas) cfg.span_sigmas = *grid.span_sigmas;
    return make_gaussian(cfg);
}

ParametricFamily build_bernoulli(const json& sub) {
    Interval domain{1e-3, 1.0 - 1e-3};
    if (!sub.is_null()) {
        require_object(sub, "bernoulli");
        reject_unknown_keys(sub, {"domain"}, "bernoulli");
        domain = get_interval(sub, "domain", domain, "bernoulli");
    }
    return make_bernoulli(domain);
}

ParametricFamily build_poisson(const json& sub, const GridOverrides& grid) {
    Interval domain{0.5, 8.0};
    double tail_mass = 1e-12;
    if (!sub.is_null()) {
        require_object(sub, "poisson");
        reject_unknown_keys(sub, {"domain", "tail_mass"}, "poisson");
        domain = get_interval(sub, "domain", domain, "poisson");
        tail_mass = get_number_or(sub, "tail_mass", tail_mass, "poisson");
    }
    if (grid.tail_mass) tail_mass = *grid.tail_mass;
    return make_poisson(domain, tail_mass);
}

ParametricFamily build_categorical(const json& sub) {
    if (sub.is_null()) fail("categorical", "missing 'categorical' object with 'm'");
    require_object(sub, "categorical");
    reject_unknown_keys(sub, {"m", "margin"}, "categorical");
    if (!sub.contains("m") || !sub.at("m").is_number_integer())
        fail("categorical", "'m' must be an integer");
    const auto m = sub.at("m").get<std::int64_t>();
    if (m < 2) fail("categorical", "'m' must be >= 2");
    const double margin = get_number_or(sub, "margin", 1e-3, "categorical");
    return make_categorical(static_cast<std::size_t>(m), margin);
}

SampleSpace build_space(const json& j) {
    require_object(j, "space");
    const std::string kind = get_string(j, "kind", "space");
    if (kind == "discrete") {
        reject_unknown_keys(j, {"kind", "points", "weights"}, "space");
        if (!j.contains("points") || !j.at("points").is_array())
            fail("space", "'points' must be an array");
        std::vector<double> points = j.at("points").get<std::vector<double>>();
        std::vector<double> weights(points.size(), 1.0);
        if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
        return SampleSpace::discrete(std::move(points), std::move(weights));
    }
    if (kind == "grid") {
        reject_unknown_keys(j, {"kind", "a", "b", "nodes"}, "space");
        const double a = get_number(j, "a", "space");
        const double b = get_number(j, "b", "space");
        if (!j.contains("nodes") || !j.at("nodes").is_number_integer())
            fail("space", "'nodes' must be an integer");
        return SampleSpace::simpson_grid(a, b, j.at("nodes").get<std::size_t>());
    }
    fail("space", "unknown kind '" + kind + "' (expected 'discrete' or 'grid')");
}

ParametricFamily build_tabulated(const json& sub, const std::filesystem::path& base_dir) {
    if (sub.is_null()) fail("tabulated", "missing 'tabulated' object");
    require_object(sub, "tabulated");
    reject_unknown_keys(sub, {"space", "coordinates", "param_axes", "rows", "table_path"},
                        "tabulated");
    if (!sub.contains("space")) fail("tabulated", "missing 'space'");
    SampleSpace space = build_space(sub.at("space"));

    json table_doc = sub;
    if (sub.contains("table_path")) {
        const std::filesystem::path rel = sub.at("table_path").get<std::string>();
        const std::filesystem::path path = rel.is_absolute() ? rel : base_dir / rel;
        std::ifstream in(path);
        if (!in) fail("tabulated", "cannot open table file '" + path.string() + "'");
        try {
            table_doc = json::parse(in);
        } catch (const json::parse_error& e) {
            fail("tabulated", std::string("table file is not valid JSON: ") + e.what());
        }
        require_object(table_doc, "tabulated table file");
        reject_unknown_keys(table_doc, {"coordinates", "param_axes", "rows"},
                            "tabulated table file");
    }

    TabulatedTable table;
    if (!table_doc.contains("coordinates") || !table_doc.at("coordinates").is_array())
        fail("tabulated", "missing 'coordinates' array");
    table.coordinate_names = table_doc.at("coordinates").get<std::vector<std::string>>();
    if (!table_doc.contains("param_axes") || !table_doc.at("param_axes").is_array())
        fail("tabulated", "missing 'param_axes'");
    table.param_axes =
        table_doc.at("param_axes").get<std::vector<std::vector<double>>>();
    if (!table_doc.contains("rows") || !table_doc.at("rows").is_array())
        fail("tabulated", "missing 'rows'");
    table.rows = table_doc.at("rows").get<std::vector<std::vector<double>>>();
    return make_tabulated(std::move(space), std::move(table));
}

ParametricFamily build_family(const json& doc, const GridOverrides& grid,
                              const std::filesystem::path& base_dir, bool top_level);

ParametricFamily build_product(const json& sub, const GridOverrides& grid,
                               const std::filesystem::path& base_dir) {
    if (sub.is_null()) fail("product", "missing 'product' object with 'factors'");
    require_object(sub, "product");
    reject_unknown_keys(sub, {"factors", "share"}, "product");
    if (!sub.contains("factors") || !sub.at("factors").is_array() ||
        sub.at("factors").size() < 2)
        fail("product", "'factors' must be an array of at least two families");

    std::vector<ParametricFamily> factors;
    std::vector<SharedParam> shared;
    std::size_t index = 0;
    for (const json& fdoc : sub.at("factors")) {
        require_object(fdoc, "product factor");
        json inner = fdoc;
        json rename = json::object();
        if (inner.contains("rename")) {
            rename = inner.at("rename");
            require_object(rename, "product factor rename");
            inner.erase("rename");
        }
        ParametricFamily factor = build_family(inner, grid, base_dir, /*top_level=*/false);
        for (auto it = rename.begin(); it != rename.end(); ++it) {
            if (!it.value().is_string()) fail("product", "'rename' values must be strings");
            shared.push_back(SharedParam{it.value().get<std::string>(), {{index, it.key()}}});
        }
        factors.push_back(std::move(factor));
        ++index;
    }
    if (sub.contains("share")) {
        const json& share = sub.at("share");
        require_object(share, "product.share");
        for (auto it = share.begin(); it != share.end(); ++it) {
            SharedParam entry;
            entry.joint_name = it.key();
            if (!it.value().is_array()) fail("product", "'share' entries must be arrays");
            for (const json& member : it.value()) {
                if (!member.is_array() || member.size() != 2 ||
                    !member[0].is_number_integer() || !member[1].is_string())
                    fail("product", "'share' members must be [factor_index, coordinate]");
                entry.members.emplace_back(member[0].get<std::size_t>(),
                                           member[1].get<std::string>());
            }
            shared.push_back(std::move(entry));
        }
    }
    return make_product(std::move(factors), shared);
}

const std::set<std::string> kFamilyKinds{"gaussian",    "bernoulli", "poisson",
                                         "categorical", "product",   "tabulated"};

ParametricFamily build_family(const json& doc, const GridOverrides& grid,
                              const std::filesystem::path& base_dir, bool top_level) {
    require_object(doc, "family");
    const std::string kind = get_string(doc, "family", "spec");
    if (!kFamilyKinds.count(kind)) fail("spec", "unknown family '" + kind + "'");

    std::set<std::string> allowed{"family", kind};
    if (top_level) {
        allowed.insert({"schema_version", "theta", "estimator", "method", "fd", "grid"});
    }
    reject_unknown_keys(doc, allowed, top_level ? "spec" : "product factor");

    const json sub = doc.contains(kind) ? doc.at(kind) : json();
    if (kind == "gaussian") return build_gaussian(sub, grid);
    if (kind == "bernoulli") return build_bernoulli(sub);
    if (kind == "poisson") return build_poisson(sub, grid);
    if (kind == "categorical") return build_categorical(sub);
    if (kind == "product") {
        if (!top_level) fail("product", "nested product families are not supported");
        return build_product(sub, grid, base_dir);
    }
    return build_tabulated(sub, base_dir);
}

ExpectationMethod parse_method(const json& doc) {
    ExpectationMethod method;
    if (!doc.contains("method")) return method;
    const json& j = doc.at("method");
    require_object(j, "method");
    reject_unknown_keys(j, {"kind", "samples", "seed"}, "method");
    const std::string kind = get_string(j, "kind", "method");
    if (kind == "exact") {
        if (j.contains("samples") || j.contains("seed"))
            fail("method", "'samples'/'seed' only apply to kind 'mc'");
        return method;
    }
    if (kind != "mc") fail("method", "kind must be 'exact' or 'mc'");
    method.kind = ExpectationMethod::Kind::MonteCarlo;
    if (j.contains("samples")) {
        if (!j.at("samples").is_number_integer() || j.at("samples").get<std::int64_t>() < 1)
            fail("method", "'samples' must be a positive integer");
        method.mc_samples = j.at("samples").get<std::size_t>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer()) fail("method", "'seed' must be an integer");
        method.seed = j.at("seed").get<std::uint64_t>();
    }
    return method;
}

FDScheme parse_fd(const json& doc) {
    FDScheme fd;
    if (!doc.contains("fd")) return fd;
    const json& j = doc.at("fd");
    require_object(j, "fd");
    reject_unknown_keys(j, {"relative_step"}, "fd");
    fd.relative_step = get_number_or(j, "relative_step", fd.relative_step, "fd");
    if (!(fd.relative_step > 0.0) || fd.relative_step > 0.1)
        fail("fd", "'relative_step' must lie in (0, 0.1]");
    return fd;
}

}  // namespace

std::vector<std::string> sample_variable_names(const SampleSpace& space) {
    if (space.dim() == 1) return {"x"};
    std::vector<std::string> names;
    for (std::size_t i = 0; i < space.dim(); ++i)
        names.push_back("x" + std::to_string(i + 1));
    return names;
}

ParameterFunction theta_from_expression(const std::string& source,
                                        const std::vector<std::string>& coordinate_names) {
    auto parsed = std::make_shared<expr::Expr>(expr::parse(source, coordinate_names));
    ParameterFunction theta;
    theta.label = source;
    theta.evaluate = [parsed](const ParamVec& p) { return parsed->eval(p); };
    return theta;
}

Estimator estimator_from_expression(const std::string& source,
                                    const std::vector<std::string>& sample_vars) {
    auto parsed = std::make_shared<expr::Expr>(expr::parse(source, sample_vars));
    return Estimator{source,
                     [parsed](SamplePointView x) { return parsed->eval(x); }};
}

BuiltModel build_model(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    require_object(doc, "spec");
    if (doc.contains("schema_version")) {
        if (!doc.at("schema_version").is_number_integer() ||
            doc.at("schema_version").get<std::int64_t>() != 1)
            fail("spec", "unsupported schema_version (expected 1)");
    }

    BuiltModel model;
    const GridOverrides grid = parse_grid(doc);
    model.family = build_family(doc, grid, base_dir, /*top_level=*/true);
    model.method = parse_method(doc);
    model.fd = parse_fd(doc);
    model.sample_vars = sample_variable_names(model.family.space);

    if (doc.contains("theta")) {
        const std::string source = get_string(doc, "theta", "spec");
        model.theta = theta_from_expression(source, model.family.coordinate_names);
    } else {
        model.theta = coordinate_function(0, model.family.coordinate_names.front());
    }
    if (doc.contains("estimator")) {
        const std::string source = get_string(doc, "estimator", "spec");
        model.estimator = estimator_from_expression(source, model.sample_vars);
    }
    return model;
}

BuiltModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model spec '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("model spec is not valid JSON: ") + e.what());
    }
    return build_model(doc, path.parent_path());
}

ParamVec parse_point(const std::string& text, const ParametricFamily& family) {
    std::vector<bool> seen(family.k, false);
    ParamVec p(family.k, 0.0);
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ModelError("--at expects name=value pairs, got '" + item + "'");
        std::string name = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        // trim surrounding spaces
        const auto strip = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.pop_back();
        };
        strip(name);
        strip(value);
        const std::size_t slot = family.coordinate_index(name);
        try {
            std::size_t used = 0;
            p[slot] = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ModelError("invalid value '" + value + "' for coordinate '" + name + "'");
        }
        seen[slot] = true;
    }
    for (std::size_t i = 0; i < family.k; ++i)
        if (!seen[i])
            throw ModelError("--at is missing coordinate '" + family.coordinate_names[i] +
                             "'");
    return p;
}

}  // namespace fisherrao
