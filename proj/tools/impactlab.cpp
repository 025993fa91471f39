// SPDX-License-Identifier: MIT
//
// impactlab run <config.json> [--out DIR] [--threads N]
// impactlab registry
// impactlab verify <manifest.json>
#include "impactlab/errors.hpp"
#include "impactlab/experiment.hpp"
#include "impactlab/registry.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

// Best-effort output directory for error.json, read leniently from the config.
std::optional<fs::path> error_dir(const std::string& config_path, const std::string& out_flag) {
    if (!out_flag.empty()) return fs::path(out_flag);
    std::ifstream in(config_path);
    if (!in) return std::nullopt;
    const auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("output_dir") ||
        !doc["output_dir"].is_string())
        return std::nullopt;
    return fs::path(doc["output_dir"].get<std::string>());
}

int report_error(int code, const std::string& kind, const std::string& message,
                 const std::string& field, const std::optional<fs::path>& dir) {
    json e{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
    if (!field.empty()) e["error"]["field"] = field;
    std::cout << e.dump(2) << '\n';
    if (dir) {
        std::error_code ec;
        fs::create_directories(*dir, ec);
        std::ofstream out(*dir / "error.json", std::ios::binary | std::ios::trunc);
        if (out) out << e.dump(2) << '\n';
    }
    return code;
}

template <typename Body>
int guarded(Body&& body, const std::optional<fs::path>& dir) {
    try {
        return body();
    } catch (const impactlab::ConfigError& e) {
        return report_error(exit_config, "config", e.what(), e.field(), dir);
    } catch (const impactlab::InvalidArgument& e) {
        return report_error(exit_config, "config", e.what(), "", dir);
    } catch (const impactlab::IoError& e) {
        return report_error(exit_io, "io", e.what(), "", dir);
    } catch (const impactlab::NumericalError& e) {
        return report_error(exit_numerical, "numerical", e.what(), "", dir);
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error(exit_io, "io", e.what(), "", dir);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hedging under permanent price impact: experiments and artifacts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", impactlab::version_string());

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    std::string config_path, out_dir;
    unsigned threads = 0;
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    run->add_option("--threads", threads, "worker count (0 = machine parallelism)");

    auto* reg = app.add_subcommand("registry", "list impact functions, coefficients and claims");

    auto* verify = app.add_subcommand("verify", "re-hash a run's artifacts against its manifest");
    std::string manifest_path;
    verify->add_option("manifest", manifest_path, "manifest.json of a run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    if (reg->parsed()) {
        std::cout << impactlab::registry::listing();
        return 0;
    }

    if (verify->parsed()) {
        return guarded(
            [&] {
                const auto rep = impactlab::verify_manifest(manifest_path);
                json j{{"ok", rep.ok}, {"checked", rep.checked}, {"problems", rep.problems}};
                std::cout << j.dump(2) << '\n';
                return rep.ok ? 0 : 1;
            },
            std::nullopt);
    }

    const auto dir = error_dir(config_path, out_dir);
    return guarded(
        [&] {
            const auto cfg = impactlab::load_config(config_path);
            impactlab::RunOptions opts;
            if (!out_dir.empty()) opts.out_dir = fs::path(out_dir);
            opts.threads = threads;
            const auto outcome = impactlab::run_experiment(cfg, opts);
            json j{{"experiment", cfg.kind},
                   {"output_dir", outcome.dir.string()},
                   {"artifacts", outcome.manifest["artifacts"]},
                   {"summary", outcome.summary}};
            std::cout << j.dump(2) << '\n';
            return 0;
        },
        dir);
}
