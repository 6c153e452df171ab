#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace thermoplate {

// Every parameter a CLI command can take. Serialized as flat "key = value"
// lines; lists are comma separated; doubles use 17 significant digits so
// parse(serialize(c)) == c.
struct RunConfig {
    std::string command;
    std::string output_dir;
    std::uint64_t seed = 20240601;
    bool json = false;

    // sector and multiplier scans
    double lambda0 = 1.0;
    double theta_fraction = 0.95;  // theta = theta_fraction * theta0
    int dimension = 2;
    int max_alpha = 3;
    std::string symbol = "all";
    int j = 0;

    // witness / torus
    std::vector<double> k_list{1.0, 10.0, 100.0};
    int torus_points = 128;
    double torus_length = 6.283185307179586;
    double time = 1.0;

    // bounded domain
    std::string domain = "interval";
    std::vector<int> grid{100};
    std::string bc = "free";
    double beta = 0.5;
    double mu = 0.3;
    double b = 1.0;
    double zero_tol = 0.0;  // <= 0: relative default
    double horizon = 0.0;   // <= 0: automatic
    int samples = 3;
    bool project = true;
    std::vector<int> grids{50, 100, 200};

    bool operator==(const RunConfig&) const = default;
};

// Documented key list in serialization order.
const std::vector<std::string>& run_config_keys();

// Sets one key from its textual value. Throws InvalidArgument on unknown keys
// or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

std::string serialize_config(const RunConfig& config);
// Applies every "key = value" line of text on top of base.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig read_config_file(const std::string& path, RunConfig base = {});

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ArtifactRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    RunConfig config;
    std::string version;
    double wall_seconds = 0.0;
    std::string started_utc;
    std::vector<CheckResult> checks;
    std::vector<ArtifactRecord> artifacts;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

std::string manifest_json(const RunManifest& manifest);

std::string tool_version();

}  // namespace thermoplate
