// ssl <experiment> --config <file> [--out <dir>] [--threads k]
#include "ssl/lab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
    namespace lab = ssl::lab;
    CLI::App app{"soliton stability lab"};
    std::string experiment, config, out;
    int threads = 0;
    app.add_option("experiment", experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(lab::experiment_names()));
    app.add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (overrides output_dir)");
    app.add_option("--threads", threads, "worker threads (default: SSL_THREADS, else 1)")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    lab::ExperimentConfig cfg;
    int nthreads = 1;
    try {
        cfg = lab::load_config(config, experiment);
        if (!out.empty()) cfg.output_dir = out;
        nthreads = lab::resolve_threads(threads);
    } catch (const lab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    const lab::RunManifest m = lab::run(cfg, nthreads);
    for (const auto& c : m.checks) {
        std::printf("%-5s %s%s  value=%.6g %s %.6g", c.passed ? "pass" : "FAIL", c.asserted ? "" : "(report) ",
                    c.name.c_str(), c.value, c.relation.c_str(), c.threshold);
        if (c.relation == "in") std::printf("..%.6g", c.upper);
        std::printf("\n");
    }
    if (!m.failed_stage.empty()) std::fprintf(stderr, "stage '%s' failed: %s\n", m.failed_stage.c_str(), m.error.c_str());
    std::printf("%s: %s in %.1f s, manifest %s/%s/manifest.json\n", cfg.experiment.c_str(), m.ok() ? "ok" : "FAILED",
                m.wall_time, cfg.output_dir.c_str(), cfg.experiment.c_str());
    return m.ok() ? 0 : 1;
}
