#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlda/heston_core.hpp"

namespace hlda {

enum class Experiment { rate_fn, mgf_check, classify, ldp_verify, ergodic_check, martingale_check, stopping_time };

const char* to_string(Experiment e);
std::optional<Experiment> experiment_from_string(const std::string& name);

struct ExperimentConfig {
    ModelParams params;
    Experiment experiment = Experiment::rate_fn;
    // Keys of the experiment section after validation, defaults filled in.
    nlohmann::json block = nlohmann::json::object();
    std::uint64_t seed = 42;
    unsigned threads = 0;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Reads the flat TOML-style subset used for configs:
///   # comment
///   key = value            (top level: seed, threads, output_dir)
///   [section]
///   key = 1.5 | 42 | "text" | true | [1, 2, 3]
/// Arrays hold numbers and sit on one line. Returns a JSON object with one
/// member per section (top-level keys at the root). Every syntax error is
/// collected before ValidationError is thrown.
nlohmann::json parse_toml_subset(const std::string& text);

/// parse_toml_subset followed by schema checks: unknown sections and keys,
/// missing or mistyped values, model constraints and the requirement of
/// exactly one experiment section. All problems are reported together.
ExperimentConfig parse_config(const std::string& text);

// Lossless JSON form of a config; config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Version string baked in at build time (git describe).
const char* version_string();

struct RunResult {
    nlohmann::json report;
    std::vector<std::filesystem::path> files;
};

/// Runs the configured experiment and writes report.json plus the experiment's
/// CSV/JSON tables into cfg.output_dir. Files are staged and renamed only once
/// everything succeeded; on error nothing from this run is left behind.
RunResult run_experiment(const ExperimentConfig& cfg);

// Shared 17-significant-digit float formatting for CSV output.
std::string format_double(double v);

}  // namespace hlda
