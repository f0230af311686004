#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bifurcata/config.hpp"
#include "bifurcata/detector.hpp"

namespace bifurcata {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* report_schema = "bifurcata.report/1";

struct AnalysisReport {
    AnalysisConfig config;
    DetectionResult result;
    std::vector<std::pair<double, Vector>> trajectory;
    double seconds = 0.0;
};

inline AnalysisReport run(const AnalysisConfig& cfg, int jobs = 1) {
    const auto start = std::chrono::steady_clock::now();
    AnalysisReport rep;
    rep.config = cfg;
    DetectorSettings s;
    s.a = cfg.a;
    s.b = cfg.b;
    s.steps = cfg.steps;
    s.eps_null = cfg.eps_null.value_or(0.0);
    s.tau_psi = cfg.tau_psi.value_or(0.0);
    s.eps_track = cfg.eps_track.value_or(0.0);
    s.delta = cfg.delta.value_or(0.0);
    s.rho = cfg.rho.value_or(0.0);
    s.grid_m = cfg.grid_m;
    s.jobs = jobs;
    const PotentialFamily family = cfg.family();
    rep.result = detect(family, s);
    rep.trajectory = eigenvalue_trajectory(family, cfg.a, cfg.b, cfg.steps);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

namespace detail {

inline std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json vec_json(const Vector& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

inline json flag_json(const Flag& f) { return {{"value", to_string(f.value)}, {"notes", f.notes}}; }

inline json finding_json(const BifurcationFinding& f) {
    json j;
    j["lambda_star"] = vec_json(f.lambda_star);
    j["nullity"] = f.nullity;
    json crit;
    for (const auto& [name, flag] : f.criteria.named()) crit[name] = flag_json(*flag);
    j["criteria"] = crit;
    if (const auto& c = f.criteria.crossing) {
        j["crossing"] = {{"r_plus", c->r_plus},         {"r_minus", c->r_minus},   {"parity", c->parity},
                         {"delta_plus", c->delta_plus}, {"delta_minus", c->delta_minus}, {"eps_track", c->eps_track},
                         {"eps_null", c->eps_null}};
    } else {
        j["crossing"] = nullptr;
    }
    const auto& mj = f.morse_jump;
    j["morse_jump"] = {{"mu_left", mj.mu_left},     {"mu_right", mj.mu_right}, {"mu_star", mj.mu_star},
                       {"nu_star", mj.nu_star},     {"pattern", to_string(mj.tag)}, {"diagnostic", mj.diagnostic}};
    j["alternative"] = to_string(f.alternative);
    j["delta"] = f.delta;
    j["trust_radius"] = f.trust_radius;
    const auto& c = f.classification;
    j["classification"] = {{"delta_used", c.delta_used},   {"shrinks", c.shrinks},         {"converging", c.converging},
                           {"left_counts", c.left_counts}, {"right_counts", c.right_counts}};
    json branches = json::array();
    for (const auto& b : c.branches) {
        branches.push_back({{"lambda", b.lambda}, {"branch_id", b.branch_id}, {"z", vec_json(b.z)}, {"lifted_norm", b.lifted.norm()}});
    }
    j["branches"] = branches;
    if (f.z2) {
        j["z2"] = {{"n_plus", f.z2->n_plus}, {"n_minus", f.z2->n_minus}, {"kernel_dim", f.z2->kernel_dim},
                   {"bound_holds", f.z2->bound_holds}};
    } else {
        j["z2"] = nullptr;
    }
    j["warnings"] = f.warnings;
    return j;
}

} // namespace detail

inline nlohmann::ordered_json report_json(const AnalysisReport& rep) {
    using detail::json;
    json j;
    j["schema"] = report_schema;
    j["tool_version"] = tool_version;
    j["config"] = config_to_json(rep.config);
    j["candidates"] = rep.result.candidates;
    json findings = json::array();
    for (const auto& f : rep.result.findings) findings.push_back(detail::finding_json(f));
    j["findings"] = findings;
    j["warnings"] = rep.result.warnings;
    j["timing"] = {{"total_seconds", rep.seconds}};
    return j;
}

/// File name → contents of every CSV for a report.
inline std::map<std::string, std::string> csv_files(const AnalysisReport& rep) {
    std::map<std::string, std::string> files;
    {
        std::ostringstream os;
        const Eigen::Index n = rep.trajectory.empty() ? 0 : rep.trajectory.front().second.size();
        os << "lambda";
        for (Eigen::Index i = 1; i <= n; ++i) os << ",eig_" << i;
        os << '\n';
        for (const auto& [l, e] : rep.trajectory) {
            os << detail::num17(l);
            for (double v : e) os << ',' << detail::num17(v);
            os << '\n';
        }
        files["eigenvalues.csv"] = os.str();
    }
    for (std::size_t k = 0; k < rep.result.findings.size(); ++k) {
        const auto& f = rep.result.findings[k];
        const std::string id = std::to_string(k + 1);
        std::ostringstream os;
        const Eigen::Index d = f.z2 ? f.z2->kernel_dim : static_cast<Eigen::Index>(f.nullity);
        os << "lambda,branch_id";
        for (Eigen::Index i = 1; i <= d; ++i) os << ",z_" << i;
        os << ",lifted_norm\n";
        for (const auto& b : f.classification.branches) {
            os << detail::num17(b.lambda) << ',' << b.branch_id;
            for (double v : b.z) os << ',' << detail::num17(v);
            os << ',' << detail::num17(b.lifted.norm()) << '\n';
        }
        files["branches_" + id + ".csv"] = os.str();

        if (const auto& c = f.criteria.crossing) {
            std::ostringstream cs;
            cs << "lambda";
            for (int i = 1; i <= c->nu_star; ++i) cs << ",eig0_" << i;
            cs << ",r\n";
            std::vector<const CrossingSample*> rows;
            for (auto it = c->left.rbegin(); it != c->left.rend(); ++it) rows.push_back(&*it);
            for (const auto& s : c->right) rows.push_back(&s);
            for (const auto* s : rows) {
                cs << detail::num17(s->lambda);
                for (int i = 0; i < c->nu_star; ++i) {
                    cs << ',';
                    if (static_cast<std::size_t>(i) < s->eig0.size()) cs << detail::num17(s->eig0[static_cast<std::size_t>(i)]);
                }
                cs << ',' << s->r << '\n';
            }
            files["crossing_" + id + ".csv"] = cs.str();
        }
    }
    return files;
}

namespace detail {

/// Writes every (path, contents) pair to a sibling temp file, then renames
/// them into place; if any temp cannot be written, all temps are removed and nothing is renamed.
inline void atomic_write_all(const std::vector<std::pair<std::filesystem::path, std::string>>& outputs) {
    namespace fs = std::filesystem;
    std::vector<fs::path> temps;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& t : temps) fs::remove(t, ec);
    };
    for (const auto& [path, contents] : outputs) {
        fs::path tmp = path;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            cleanup();
            throw IoError("cannot write " + path.string());
        }
        temps.push_back(tmp);
        out << contents;
        out.close();
        if (!out) {
            cleanup();
            throw IoError("write failed for " + path.string());
        }
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        std::error_code ec;
        fs::rename(temps[i], outputs[i].first, ec);
        if (ec) {
            cleanup();
            throw IoError("cannot move " + temps[i].string() + " into place: " + ec.message());
        }
    }
}

} // namespace detail

inline void emit_csv(const AnalysisReport& rep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::pair<std::filesystem::path, std::string>> outputs;
    for (auto& [name, contents] : csv_files(rep)) outputs.emplace_back(dir / name, std::move(contents));
    detail::atomic_write_all(outputs);
}

/// Report and CSVs in one atomic batch: either every file lands or none does.
/// Empty paths are skipped.
inline void write_outputs(const AnalysisReport& rep, const std::filesystem::path& report_path,
                          const std::filesystem::path& csv_dir) {
    std::vector<std::pair<std::filesystem::path, std::string>> outputs;
    auto make_dir = [](const std::filesystem::path& dir) {
        if (dir.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    };
    if (!csv_dir.empty()) {
        make_dir(csv_dir);
        for (auto& [name, contents] : csv_files(rep)) outputs.emplace_back(csv_dir / name, std::move(contents));
    }
    if (!report_path.empty()) {
        make_dir(report_path.parent_path());
        outputs.emplace_back(report_path, report_json(rep).dump(2) + "\n");
    }
    detail::atomic_write_all(outputs);
}

inline void write_report(const AnalysisReport& rep, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    detail::atomic_write_all({{path, report_json(rep).dump(2) + "\n"}});
}

} // namespace bifurcata
