#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "compop/error.hpp"
#include "compop/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int print_validation(const compop::ValidationReport& report) {
    for (const auto& v : report.violations)
        std::cerr << (v.severity == compop::Severity::Error ? "error" : "warning") << " [" << v.rule << "] "
                  << v.message << "\n";
    if (report.has_errors()) return 2;
    std::cout << "config ok\n";
    return 0;
}

void emit(const compop::RunReport& report, const fs::path& out_dir, bool spectra) {
    fs::create_directories(out_dir);
    write_file(out_dir / "report.json", report.to_json());
    write_file(out_dir / "metrics.json", report.metrics_json());
    if (!report.rows.empty()) write_file(out_dir / "sweep.csv", report.sweep_csv());
    if (spectra)
        for (const auto& trial : report.trials)
            for (const auto& p : trial.paths)
                if (!p.spectrum_csv.empty())
                    write_file(out_dir / ("spectrum_path" + std::to_string(p.path_id) + ".csv"), p.spectrum_csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"COMPOP cooperative vehicle positioning simulator"};
    app.set_version_flag("--version", std::string(compop::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string plane;
    std::string reference;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
    };
    auto add_run = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "override noise.seed");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* validate = app.add_subcommand("validate", "check a scenario without running it");
    add_common(validate);
    auto* los = app.add_subcommand("run-los", "single LoS trial");
    add_run(los);
    los->add_option("--emit-spectrum", plane, "write an xy, xz or yz slice through the image peak")
        ->check(CLI::IsMember({"xy", "xz", "yz"}));
    auto* nlos = app.add_subcommand("run-nlos", "single NLoS trial");
    add_run(nlos);
    nlos->add_option("--emit-spectrum", plane, "write an xy, xz or yz slice through each path's image peak")
        ->check(CLI::IsMember({"xy", "xz", "yz"}));
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over distance, surface count and SV antennas");
    add_run(sweep);
    auto* ref = app.add_subcommand("reference-config", "print a built-in scenario");
    ref->add_option("kind", reference, "los or nlos")->required()->check(CLI::IsMember({"los", "nlos"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ref) {
            const auto config = reference == "los" ? compop::reference_los_config() : compop::reference_nlos_config();
            std::cout << compop::to_json(config) << "\n";
            return 0;
        }
        const compop::ScenarioConfig config = compop::load_config(config_path);
        const compop::ValidationReport validation = compop::validate_config(config);
        if (*validate) return print_validation(validation);
        if (validation.has_errors()) return print_validation(validation);
        for (const auto& v : validation.violations) std::cerr << "warning [" << v.rule << "] " << v.message << "\n";

        compop::RunOptions options;
        options.seed = seed;
        options.workers = workers;
        if (plane == "xy") options.spectrum_plane = compop::SlicePlane::XY;
        if (plane == "xz") options.spectrum_plane = compop::SlicePlane::XZ;
        if (plane == "yz") options.spectrum_plane = compop::SlicePlane::YZ;

        compop::RunReport report;
        if (*los) report = compop::run_los(config, options);
        if (*nlos) report = compop::run_nlos(config, options);
        if (*sweep) report = compop::run_sweep(config, options);
        emit(report, out_dir, options.spectrum_plane.has_value());
        std::cout << report.metrics_json();
        if (report.rows.empty() && !report.trials.empty() && !report.trials.front().ok) return 3;
        return 0;
    } catch (const compop::Error& e) {
        std::cerr << "error (" << compop::to_string(e.kind()) << "): " << e.what() << "\n";
        return e.kind() == compop::ErrorKind::InvalidConfig || e.kind() == compop::ErrorKind::Parse ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
