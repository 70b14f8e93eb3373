#include "gaussop/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace gaussop;

namespace {

constexpr const char* k_version = "gaussop 1.0.0";

enum exit_code { ok = 0, config_error = 1, numeric_error = 2, comparison_error = 3 };

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& engine) {
    ScenarioConfig cfg;
    try {
        cfg = load_config(config_path);
        if (!engine.empty()) cfg.engine = parse_engine(engine);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    }
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir);

    RunOutput res;
    try {
        res = run_scenario(cfg);
    } catch (const std::exception& e) {
        std::cerr << "numeric failure in scenario '" << cfg.label << "' (" << cfg.scenario << ", engine "
                  << engine_name(cfg.engine) << "): " << e.what() << "\n";
        return numeric_error;
    }

    try {
        fs::create_directories(dir);
        write_file(dir / (cfg.label + ".csv"), res.csv);
        write_file(dir / (cfg.label + ".summary.json"), res.summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return config_error;
    }
    std::cout << "wrote " << (dir / (cfg.label + ".csv")).string() << "\n";
    if (res.max_deviation) {
        std::cout << "max deviation " << format_number(*res.max_deviation) << " (tolerance "
                  << format_number(cfg.tolerance) << ")\n";
        if (!res.comparison_passed) {
            std::cerr << "comparison failed: deviation exceeds tolerance\n";
            return comparison_error;
        }
    }
    return ok;
}

int cmd_validate(const std::string& config_path) {
    try {
        const ScenarioConfig cfg = load_config(config_path);
        const ValidationOutput v = validate_scenario(cfg);
        std::cout << v.text;
        return v.passed ? ok : config_error;
    } catch (const ConfigError& e) {
        std::cout << "config: FAIL\n  " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cout << "validation: FAIL\n  " << e.what() << "\n";
        return numeric_error;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian operator simulations of quadratic bosonic master equations"};
    app.set_version_flag("--version", k_version);
    app.require_subcommand(1);

    std::string run_config, out_dir, engine;
    auto* run = app.add_subcommand("run", "run a scenario and write CSV plus JSON summary");
    run->add_option("config", run_config, "scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--engine", engine, "closed_form | ode | oracle | both")
        ->check(CLI::IsMember({"closed_form", "ode", "oracle", "both"}));

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "check a scenario config without running it");
    validate->add_option("config", validate_config, "scenario JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    if (run->parsed()) return cmd_run(run_config, out_dir, engine);
    return cmd_validate(validate_config);
}
