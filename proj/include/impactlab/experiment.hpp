// SPDX-License-Identifier: MIT
//
// Config-driven experiments: a JSON document names a model from the registry,
// an experiment kind and its parameters; results land as CSV/JSON artifacts in
// one output directory together with a manifest of their digests.
#pragma once

#include "impactlab/market_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace impactlab {

inline constexpr const char* experiment_kinds[] = {
    "curve-check", "discrete-convergence", "split-convergence",
    "price",       "hedge",                "cancellation-check"};

struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::string output_dir;
    nlohmann::json model;
    nlohmann::json params;
    /// The document as read, echoed into the manifest and hashed.
    nlohmann::json document;
};

/// Schema validation; throws ConfigError naming the offending field.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads and validates a config file (IoError when unreadable, ConfigError on bad JSON).
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Model from the "model" section of a config.
[[nodiscard]] MarketModel build_model(const nlohmann::json& spec);

[[nodiscard]] std::string sha256_hex(std::string_view data);
/// Digest of the compact, key-sorted serialization of the document.
[[nodiscard]] std::string config_hash(const nlohmann::json& doc);
/// git-describe-style version of this build.
[[nodiscard]] std::string version_string();

struct RunOptions {
    /// Overrides the config's output_dir.
    std::optional<std::filesystem::path> out_dir;
    unsigned threads = 0;
};

struct Artifact {
    std::string file;  // name relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunOutcome {
    std::filesystem::path dir;
    std::vector<Artifact> artifacts;
    nlohmann::json summary;
    nlohmann::json manifest;
};

/// Runs the experiment and writes its artifacts plus manifest.json. Every CSV opens
/// with a "# config_hash=<hex>" line and every JSON sidecar carries "config_hash".
[[nodiscard]] RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct VerifyReport {
    bool ok = true;
    std::vector<std::string> checked;
    std::vector<std::string> problems;
};

/// Re-hashes the echoed config and every listed artifact, and checks that each artifact
/// embeds the config hash.
[[nodiscard]] VerifyReport verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace impactlab
