#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssl::lab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One named experiment. Every field has a per-experiment default; the
/// tolerance and option maps accept only the keys their defaults define.
struct ExperimentConfig {
    std::string experiment;
    double r_max = 30.0;
    int n = 2048;
    double alpha = 1.0;
    std::map<std::string, double> tolerances;
    double horizon = 0.0;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    nlohmann::json options = nlohmann::json::object();

    double tol(const std::string& key) const;
    double opt(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    nlohmann::json to_json() const;
};

const std::vector<std::string>& experiment_names();
ExperimentConfig default_config(const std::string& experiment);

/// Merge a JSON document over the defaults of its experiment.
/// experiment_hint, when non-empty, must agree with the document.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& experiment_hint = "");
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& experiment_hint = "");

struct Check {
    std::string name;
    int criterion = 0;  ///< acceptance criterion it belongs to, 0 for module properties
    double value = 0.0;
    double threshold = 0.0;
    double upper = 0.0;    ///< upper end when relation is "in"
    std::string relation;  ///< "<", "<=", ">", ">=", "in"
    bool passed = false;
    bool asserted = true;
    std::string note;
};

struct Artifact {
    std::string file;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version;
    double wall_time = 0.0;
    std::vector<Check> checks;
    std::vector<Artifact> artifacts;
    nlohmann::json results = nlohmann::json::object();
    std::string failed_stage;  ///< non-empty when a module error stopped the run
    std::string error;

    /// every asserted check passed and no stage failed
    bool ok() const;
    bool criterion_ok(int k) const;
    nlohmann::json to_json() const;
};

std::string version_string();

/// Run one experiment; artifacts go to <output_dir>/<experiment>/.
RunManifest run(const ExperimentConfig& config, int threads = 1);

/// Flat per-view CSV files next to the manifest; missing artifacts are
/// listed in the returned vector, not fatal.
std::vector<std::string> emit_plotdata(const RunManifest& manifest, const std::filesystem::path& dir);

/// Thread count from --threads, else SSL_THREADS, else 1.
int resolve_threads(int cli_value);

/// SHA-256 of a file as lowercase hex.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace ssl::lab
