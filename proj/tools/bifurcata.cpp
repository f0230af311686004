// Batch front end: config in, JSON report and CSVs out.
//
// Exit codes: 0 success, 2 invariant violation / io / numerical failure, 3 configuration error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bifurcata/bifurcata.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bifurcata::ConfigError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bifurcation detection for parameterized potentials"};
    std::string config_path, report_path, csv_dir;
    int jobs = 1;
    bool verbose = false;
    app.add_option("--config", config_path, "analysis config (JSON)")->required();
    app.add_option("--report", report_path, "report path (overrides outputs.report)");
    app.add_option("--csv-dir", csv_dir, "CSV directory (overrides outputs.csv_dir)");
    app.add_option("--jobs", jobs, "candidates analysed concurrently")->check(CLI::PositiveNumber);
    app.add_flag("--verbose", verbose, "progress on stderr");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    bifurcata::AnalysisConfig cfg;
    try {
        cfg = bifurcata::parse_config(read_file(config_path));
    } catch (const bifurcata::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    }
    if (report_path.empty()) report_path = cfg.report_path;
    if (csv_dir.empty()) csv_dir = cfg.csv_dir;
    verbose = verbose || cfg.verbosity > 0;

    try {
        const auto rep = bifurcata::run(cfg, jobs);
        if (verbose) {
            std::cerr << rep.result.candidates.size() << " candidate(s), " << rep.result.findings.size()
                      << " finding(s)\n";
            for (const auto& w : rep.result.warnings) std::cerr << "warning: " << w << '\n';
        }
        bifurcata::write_outputs(rep, report_path, csv_dir);
        if (report_path.empty()) std::cout << bifurcata::report_json(rep).dump(2) << '\n';
    } catch (const bifurcata::InvariantViolationError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 2;
    } catch (const bifurcata::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
