#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bifurcata/problems.hpp"

namespace bifurcata {

/// Parsed analysis configuration. Unset optionals mean "use the module default".
struct AnalysisConfig {
    std::string problem_kind = "builtin"; ///< builtin | polynomial | bvp
    std::string builtin_name;
    ProblemSpec problem;
    double a = 0.0;
    double b = 1.0;
    int steps = 200;
    std::optional<double> eps_null;
    std::optional<double> tau_psi;
    std::optional<double> eps_track;
    std::optional<double> delta;
    std::optional<double> rho;
    int grid_m = 5;
    std::string report_path;
    std::string csv_dir;
    int verbosity = 0;

    bool operator==(const AnalysisConfig&) const = default;

    PotentialFamily family() const {
        return make_family(problem, problem_kind == "builtin" ? builtin_name : problem_kind);
    }
};

namespace detail {

using json = nlohmann::ordered_json;

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigSemanticError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

inline const json& require(const json& obj, const std::string& key, const std::string& field) {
    if (!obj.contains(key)) throw ConfigSemanticError(field, "missing");
    return obj.at(key);
}

inline double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigSemanticError(field, "expected a number");
    return v.get<double>();
}

inline int get_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ConfigSemanticError(field, "expected an integer");
    return v.get<int>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigSemanticError(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<int> get_ints(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigSemanticError(field, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_int(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

/// Optional positive tolerance: absent or null leaves it unset.
inline std::optional<double> get_positive(const json& obj, const std::string& key, const std::string& field) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const double v = get_number(obj.at(key), field);
    if (!(v > 0.0)) throw ConfigSemanticError(field, "must be positive");
    return v;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void parse_problem(const json& p, AnalysisConfig& cfg) {
    if (!p.is_object()) throw ConfigSemanticError("problem", "expected an object");
    const auto& kind = require(p, "kind", "problem.kind");
    if (!kind.is_string()) throw ConfigSemanticError("problem.kind", "expected a string");
    cfg.problem_kind = kind.get<std::string>();
    if (cfg.problem_kind == "builtin") {
        reject_unknown(p, "problem", {"kind", "name"});
        const auto& name = require(p, "name", "problem.name");
        if (!name.is_string()) throw ConfigSemanticError("problem.name", "expected a string");
        cfg.builtin_name = name.get<std::string>();
        try {
            cfg.problem = builtin::by_name(cfg.builtin_name);
        } catch (const ArgumentError& e) {
            throw ConfigSemanticError("problem.name", e.what());
        }
    } else if (cfg.problem_kind == "polynomial") {
        reject_unknown(p, "problem", {"kind", "dim_state", "dim_param", "terms"});
        PolynomialSpec spec;
        spec.dim_state = get_int(require(p, "dim_state", "problem.dim_state"), "problem.dim_state");
        spec.dim_param = p.contains("dim_param") ? get_int(p.at("dim_param"), "problem.dim_param") : 1;
        const auto& terms = require(p, "terms", "problem.terms");
        if (!terms.is_array()) throw ConfigSemanticError("problem.terms", "expected an array");
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::string f = "problem.terms[" + std::to_string(t) + "]";
            if (!terms[t].is_object()) throw ConfigSemanticError(f, "expected an object");
            reject_unknown(terms[t], f, {"lambda", "u", "c"});
            PolynomialTerm term;
            term.lambda_powers = terms[t].contains("lambda") ? get_ints(terms[t].at("lambda"), f + ".lambda")
                                                             : std::vector<int>(static_cast<std::size_t>(spec.dim_param), 0);
            term.u_powers = get_ints(require(terms[t], "u", f + ".u"), f + ".u");
            term.coefficient = get_number(require(terms[t], "c", f + ".c"), f + ".c");
            spec.terms.push_back(std::move(term));
        }
        cfg.problem = std::move(spec);
    } else if (cfg.problem_kind == "bvp") {
        reject_unknown(p, "problem", {"kind", "m", "W", "G", "length"});
        BvpSpec spec;
        spec.m = get_int(require(p, "m", "problem.m"), "problem.m");
        spec.w_coeffs = get_numbers(require(p, "W", "problem.W"), "problem.W");
        spec.g_coeffs = get_numbers(require(p, "G", "problem.G"), "problem.G");
        spec.length = p.contains("length") ? get_number(p.at("length"), "problem.length") : 1.0;
        cfg.problem = std::move(spec);
    } else {
        throw ConfigSemanticError("problem.kind", "unknown kind '" + cfg.problem_kind + "'");
    }
    try {
        const PotentialFamily f = cfg.family();
        if (f.dim_param != 1) throw ConfigSemanticError("problem.dim_param", "parameter sweeps need dim_param = 1");
    } catch (const InvalidSpecError& e) {
        throw ConfigSemanticError("problem", e.what());
    }
}

} // namespace detail

/// Parses the JSON configuration grammar documented in README.md.
inline AnalysisConfig parse_config(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigSyntaxError("config syntax error at line " + std::to_string(line) + ", column " +
                                    std::to_string(col),
                                line, col);
    }
    if (!root.is_object()) throw ConfigSemanticError("(root)", "expected an object");
    detail::reject_unknown(root, "", {"problem", "lambda_range", "steps", "tolerances", "classification", "outputs"});

    AnalysisConfig cfg;
    detail::parse_problem(detail::require(root, "problem", "problem"), cfg);

    const auto range = detail::get_numbers(detail::require(root, "lambda_range", "lambda_range"), "lambda_range");
    if (range.size() != 2) throw ConfigSemanticError("lambda_range", "expected [a, b]");
    cfg.a = range[0];
    cfg.b = range[1];
    if (cfg.a == cfg.b) throw ConfigSemanticError("lambda_range", "degenerate");
    if (cfg.a > cfg.b) throw ConfigSemanticError("lambda_range", "a must be less than b");

    if (root.contains("steps")) cfg.steps = detail::get_int(root.at("steps"), "steps");
    if (cfg.steps < 2) throw ConfigSemanticError("steps", "must be at least 2");

    if (root.contains("tolerances")) {
        const auto& t = root.at("tolerances");
        if (!t.is_object()) throw ConfigSemanticError("tolerances", "expected an object");
        detail::reject_unknown(t, "tolerances", {"eps_null", "tau_psi", "eps_track"});
        cfg.eps_null = detail::get_positive(t, "eps_null", "tolerances.eps_null");
        cfg.tau_psi = detail::get_positive(t, "tau_psi", "tolerances.tau_psi");
        cfg.eps_track = detail::get_positive(t, "eps_track", "tolerances.eps_track");
    }
    if (root.contains("classification")) {
        const auto& c = root.at("classification");
        if (!c.is_object()) throw ConfigSemanticError("classification", "expected an object");
        detail::reject_unknown(c, "classification", {"delta", "rho", "m"});
        cfg.delta = detail::get_positive(c, "delta", "classification.delta");
        cfg.rho = detail::get_positive(c, "rho", "classification.rho");
        if (c.contains("m")) cfg.grid_m = detail::get_int(c.at("m"), "classification.m");
        if (cfg.grid_m < 1) throw ConfigSemanticError("classification.m", "must be at least 1");
    }
    if (root.contains("outputs")) {
        const auto& o = root.at("outputs");
        if (!o.is_object()) throw ConfigSemanticError("outputs", "expected an object");
        detail::reject_unknown(o, "outputs", {"report", "csv_dir", "verbosity"});
        auto str = [&](const char* key) -> std::string {
            if (!o.contains(key) || o.at(key).is_null()) return "";
            if (!o.at(key).is_string()) throw ConfigSemanticError(std::string("outputs.") + key, "expected a string");
            return o.at(key).get<std::string>();
        };
        cfg.report_path = str("report");
        cfg.csv_dir = str("csv_dir");
        if (o.contains("verbosity")) cfg.verbosity = detail::get_int(o.at("verbosity"), "outputs.verbosity");
        if (cfg.verbosity < 0) throw ConfigSemanticError("outputs.verbosity", "must be nonnegative");
    }
    return cfg;
}

inline nlohmann::ordered_json config_to_json(const AnalysisConfig& cfg) {
    using detail::json;
    json problem;
    problem["kind"] = cfg.problem_kind;
    if (cfg.problem_kind == "builtin") {
        problem["name"] = cfg.builtin_name;
    } else if (const auto* poly = std::get_if<PolynomialSpec>(&cfg.problem)) {
        problem["dim_state"] = poly->dim_state;
        problem["dim_param"] = poly->dim_param;
        json terms = json::array();
        for (const auto& t : poly->terms) terms.push_back({{"lambda", t.lambda_powers}, {"u", t.u_powers}, {"c", t.coefficient}});
        problem["terms"] = terms;
    } else if (const auto* bvp = std::get_if<BvpSpec>(&cfg.problem)) {
        problem["m"] = bvp->m;
        problem["W"] = bvp->w_coeffs;
        problem["G"] = bvp->g_coeffs;
        problem["length"] = bvp->length;
    }
    json root;
    root["problem"] = problem;
    root["lambda_range"] = {cfg.a, cfg.b};
    root["steps"] = cfg.steps;
    root["tolerances"] = {{"eps_null", detail::optional_json(cfg.eps_null)},
                          {"tau_psi", detail::optional_json(cfg.tau_psi)},
                          {"eps_track", detail::optional_json(cfg.eps_track)}};
    root["classification"] = {{"delta", detail::optional_json(cfg.delta)},
                              {"rho", detail::optional_json(cfg.rho)},
                              {"m", cfg.grid_m}};
    root["outputs"] = {{"report", cfg.report_path}, {"csv_dir", cfg.csv_dir}, {"verbosity", cfg.verbosity}};
    return root;
}

inline std::string serialize_config(const AnalysisConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

} // namespace bifurcata
