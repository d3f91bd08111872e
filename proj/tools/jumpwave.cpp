// Command line entry point: run experiments from JSON configs, validate
// configs without computing, and report the version. Exit codes: 0 success,
// 2 validation failure, 3 numeric failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jumpwave/config.hpp"
#include "jumpwave/errors.hpp"

namespace {

// Machine-readable failure record next to the outputs (or in the working
// directory when the output directory could not be created).
void write_error_record(const std::string& out_dir, const std::string& kind,
                        const std::string& message) {
    nlohmann::json rec;
    rec["kind"] = kind;
    rec["message"] = message;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::filesystem::path p =
        ec ? std::filesystem::path("error.json")
           : std::filesystem::path(out_dir) / "error.json";
    std::ofstream f(p, std::ios::binary);
    f << rec.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jumpwave: transmission waves, Carleman certificates, "
                 "observability and control"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--out", out_dir, "output directory (default: from config)");

    std::string validate_path;
    CLI::App* validate =
        app.add_subcommand("validate", "check a config without computing");
    validate->add_option("config", validate_path, "JSON config file")
        ->required();

    CLI::App* version = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (version->parsed()) {
        std::cout << "jumpwave " << jumpwave::jumpwave_version() << "\n";
        return 0;
    }

    if (validate->parsed()) {
        try {
            jumpwave::ExperimentConfig cfg =
                jumpwave::parse_config(validate_path);
            jumpwave::validate_experiment(cfg);
        } catch (const jumpwave::ValidationError& e) {
            std::cerr << "validation error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
        std::cout << "ok\n";
        return 0;
    }

    std::string effective_out = out_dir;
    try {
        jumpwave::ExperimentConfig cfg = jumpwave::parse_config(config_path);
        if (effective_out.empty()) effective_out = cfg.output_dir;
        jumpwave::run_experiment(cfg, effective_out);
    } catch (const jumpwave::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        write_error_record(effective_out.empty() ? "." : effective_out,
                           "validation", e.what());
        return 2;
    } catch (const jumpwave::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        write_error_record(effective_out.empty() ? "." : effective_out,
                           "numeric", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_record(effective_out.empty() ? "." : effective_out,
                           "internal", e.what());
        return 3;
    }
    return 0;
}
