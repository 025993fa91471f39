// SPDX-License-Identifier: MIT
#include "impactlab/experiment.hpp"

#include "impactlab/csv.hpp"
#include "impactlab/curve_checks.hpp"
#include "impactlab/discrete_rebalance.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/hedging_engine.hpp"
#include "impactlab/jump_splitting.hpp"
#include "impactlab/pricing_pde.hpp"
#include "impactlab/registry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#ifndef IMPACTLAB_GIT_DESCRIBE
#define IMPACTLAB_GIT_DESCRIBE "unknown"
#endif

namespace impactlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Typed reads from one JSON object; finish() rejects keys that were never asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(path_, (path_.empty() ? std::string("config") : path_) +
                                         ": expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& raw(const std::string& key) {
        if (!has(key)) missing(key);
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> def = std::nullopt) {
        if (!has(key)) {
            if (!def) missing(key);
            return *def;
        }
        const auto& v = j_.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            throw ConfigError(join(path_, key), "field '" + join(path_, key) + "' must be a finite number");
        return v.get<double>();
    }

    std::optional<double> optional_number(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) return std::nullopt;
        return number(key);
    }

    std::size_t count(const std::string& key, std::optional<std::size_t> def = std::nullopt,
                      std::size_t min = 1) {
        if (!has(key)) {
            if (!def) missing(key);
            return *def;
        }
        const auto& v = j_.at(key);
        if (!non_negative_integer(v) || v.get<std::uint64_t>() < min)
            throw ConfigError(join(path_, key), "field '" + join(path_, key) +
                                                    "' must be an integer >= " + std::to_string(min));
        return static_cast<std::size_t>(v.get<std::uint64_t>());
    }

    std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) {
        if (!has(key)) {
            if (!def) missing(key);
            return *def;
        }
        const auto& v = j_.at(key);
        if (!v.is_string())
            throw ConfigError(join(path_, key), "field '" + join(path_, key) + "' must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def) {
        if (!has(key)) {
            if (!def) missing(key);
            return *def;
        }
        const auto& v = j_.at(key);
        std::vector<double> out;
        if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_number()) break;
                out.push_back(e.get<double>());
            }
        }
        if (!v.is_array() || out.size() != v.size() || out.empty())
            throw ConfigError(join(path_, key),
                              "field '" + join(path_, key) + "' must be a non-empty array of numbers");
        return out;
    }

    Section child(const std::string& key) { return Section(raw(key), join(path_, key)); }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key))
                throw ConfigError(join(path_, key), "unknown key '" + join(path_, key) + "'");
    }

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    [[noreturn]] void missing(const std::string& key) const {
        throw ConfigError(join(path_, key), "missing field '" + join(path_, key) + "'");
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Registry errors carry no field path; attach one.
template <typename F>
auto with_field(const std::string& field, F&& make) {
    try {
        return make();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(field, field + ": " + e.what());
    }
}

// ---------------------------------------------------------------- parameters

TradingSignal read_signal(Section s, bool jumps_allowed) {
    TradingSignal sig;
    sig.y0 = s.number("y0", 0.0);
    sig.a = {s.number("a", 0.0)};
    sig.b = {s.number("b", 0.0)};
    if (jumps_allowed && s.has("jumps")) {
        const auto& arr = s.raw("jumps");
        if (!arr.is_array())
            throw ConfigError(join(s.path(), "jumps"), "field '" + join(s.path(), "jumps") +
                                                           "' must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section j(arr[i], join(s.path(), "jumps[" + std::to_string(i) + "]"));
            sig.jumps.push_back({j.number("time"), j.number("shares")});
            j.finish();
        }
    }
    s.finish();
    return sig;
}

InitialCondition read_init(Section& p) {
    InitialCondition init;
    init.price = p.number("x0", 0.0);
    init.value = p.number("v0", 0.0);
    return init;
}

struct CurveCheckParams {
    IdentityCheckConfig cfg;
};

CurveCheckParams read_curve_check(Section p, const MarketModel& model) {
    CurveCheckParams out;
    auto& c = out.cfg;
    c.samples = p.count("samples", 1000);
    const auto& box = model.box();
    const double q = 0.25 * box.width();
    const auto range = p.numbers("price_range", std::vector<double>{box.lo + q, box.hi - q});
    if (range.size() != 2 || !(range[1] > range[0]))
        throw ConfigError(join(p.path(), "price_range"), "price_range must be [lo, hi] with lo < hi");
    c.x_lo = range[0];
    c.x_hi = range[1];
    c.share_range = p.number("share_range", 1.0);
    c.tolerance = p.number("tolerance", 1e-8);
    c.round_trip_tolerance = p.number("round_trip_tolerance", 1e-9);
    c.fd_step = p.number("fd_step", 1e-3);
    p.finish();
    with_field(p.path(), [&] { c.check(); return 0; });
    return out;
}

struct DiscreteParams {
    TradingSignal signal;
    std::vector<std::size_t> n_list;
    DiscreteRunConfig cfg;
};

DiscreteParams read_discrete(Section p) {
    DiscreteParams out;
    out.signal = read_signal(p.child("signal"), false);
    out.cfg.init = read_init(p);
    for (double n : p.numbers("n_list", std::vector<double>{8, 16, 32, 64, 128})) {
        if (!(n >= 1.0) || n != std::floor(n))
            throw ConfigError(join(p.path(), "n_list"), "n_list entries must be positive integers");
        out.n_list.push_back(static_cast<std::size_t>(n));
    }
    out.cfg.mc_paths = p.count("mc_paths", 10000, 2);
    out.cfg.base_grid_steps = p.count("base_grid_steps", 2048);
    out.cfg.jackknife_groups = p.count("jackknife_groups", 20, 2);
    p.finish();
    return out;
}

struct SplitParams {
    TradingSignal signal;
    SplitConfig cfg;
};

SplitParams read_split(Section p, double horizon) {
    SplitParams out;
    out.signal = read_signal(p.child("signal"), true);
    if (out.signal.jumps.empty())
        throw ConfigError(join(p.path(), "signal.jumps"), "split-convergence needs at least one jump");
    out.cfg.init = read_init(p);
    std::vector<double> eps;
    for (int k = 4; k <= 8; ++k) eps.push_back(std::ldexp(horizon, -k));
    out.cfg.epsilon_list = p.numbers("epsilon_list", eps);
    out.cfg.mc_paths = p.count("mc_paths", 1000, 2);
    out.cfg.steps_per_epsilon = p.count("steps_per_epsilon", 32);
    out.cfg.jackknife_groups = p.count("jackknife_groups", 20, 2);
    p.finish();
    return out;
}

PdeGrid read_grid(Section g, double horizon) {
    PdeGrid grid;
    grid.x_lo = g.number("x_lo");
    grid.x_hi = g.number("x_hi");
    grid.space_steps = g.count("space_steps", 512, 4);
    grid.time_steps = g.count("time_steps", 512);
    grid.T = horizon;
    g.finish();
    return grid;
}

PdeOptions read_pde_options(Section& p) {
    PdeOptions o;
    o.picard_tol = p.number("picard_tol", o.picard_tol);
    o.max_picard = static_cast<int>(p.count("max_picard", static_cast<std::size_t>(o.max_picard)));
    o.rho = p.number("rho", o.rho);
    o.terminal.k_bound = p.optional_number("k_bound");
    o.terminal.scan_points = p.count("scan_points", o.terminal.scan_points, 2);
    o.terminal.scan_half_width = p.number("scan_half_width", o.terminal.scan_half_width);
    if (!(o.picard_tol > 0.0)) throw ConfigError(join(p.path(), "picard_tol"), "picard_tol must be positive");
    if (o.terminal.k_bound && !(*o.terminal.k_bound > 0.0))
        throw ConfigError(join(p.path(), "k_bound"), "k_bound must be positive");
    return o;
}

struct PriceParams {
    PdeGrid grid;
    PdeOptions opts;
    std::string solver;
};

PriceParams read_price(Section p, double horizon) {
    PriceParams out;
    out.grid = read_grid(p.child("grid"), horizon);
    out.opts = read_pde_options(p);
    out.solver = p.text("solver", std::string("direct"));
    if (out.solver != "direct" && out.solver != "transformed" && out.solver != "both")
        throw ConfigError(join(p.path(), "solver"), "solver must be direct, transformed or both");
    p.finish();
    with_field(join(p.path(), "grid"), [&] { out.grid.check(); return 0; });
    return out;
}

struct HedgeParams {
    PdeGrid grid;
    PdeOptions opts;
    HedgeRun run;
    std::size_t refinement_levels = 0;
};

HedgeParams read_hedge(Section p, double horizon, bool refinement) {
    HedgeParams out;
    out.grid = read_grid(p.child("grid"), horizon);
    out.opts = read_pde_options(p);
    auto& r = out.run;
    r.t0 = p.number("t0", 0.0);
    r.x0 = p.number("x0", 0.0);
    r.v0 = p.optional_number("v0");
    r.steps = p.count("steps", 512);
    r.noise_steps = p.count("noise_steps", 0, 0);
    r.mc_paths = p.count("mc_paths", 1000);
    r.control_cap = p.number("control_cap", r.control_cap);
    r.max_capped_fraction = p.number("max_capped_fraction", r.max_capped_fraction);
    r.traces = p.count("traces", 0, 0);
    const auto scheme = p.text("scheme", "milstein");
    if (scheme == "euler")
        r.scheme = HedgeScheme::euler;
    else if (scheme == "milstein")
        r.scheme = HedgeScheme::milstein;
    else
        throw ConfigError(join(p.path(), "scheme"), "scheme must be 'euler' or 'milstein'");
    r.direction_step = p.number("direction_step", r.direction_step);
    r.terminal = out.opts.terminal;
    if (refinement) out.refinement_levels = p.count("refinement_levels", 0, 0);
    if (out.refinement_levels == 1)
        throw ConfigError(join(p.path(), "refinement_levels"), "refinement_levels must be 0 or >= 2");
    p.finish();
    with_field(join(p.path(), "grid"), [&] { out.grid.check(); return 0; });
    with_field(p.path(), [&] { r.check(); return 0; });
    return out;
}

// ---------------------------------------------------------------- artifacts

class ArtifactSink {
public:
    ArtifactSink(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {}

    template <typename Body>
    void csv(const std::string& name, Body&& body) {
        std::ostringstream os;
        csv::Writer(os).comment("config_hash", hash_);
        body(os);
        write(name, os.str());
    }

    void json_file(const std::string& name, json j) {
        j["config_hash"] = hash_;
        write(name, j.dump(2) + "\n");
    }

    [[nodiscard]] const std::vector<Artifact>& artifacts() const { return artifacts_; }

private:
    void write(const std::string& name, const std::string& bytes) {
        // Artifact names are plain file names; nothing escapes the output directory.
        if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..")
            throw IoError("invalid artifact name '" + name + "'");
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        if (!out) throw IoError("failed writing '" + p.string() + "'");
        artifacts_.push_back({name, sha256_hex(bytes), bytes.size()});
    }

    fs::path dir_;
    std::string hash_;
    std::vector<Artifact> artifacts_;
};

json table_summary(const ConvergenceTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{t.parameter_name, r.parameter}, {t.value_name, r.mse}, {"std_err", r.std_err}});
    return {{"rows", rows}, {"slope", t.fit.slope}, {"fit_residual", t.fit.residual}, {"paths", t.paths}};
}

// ---------------------------------------------------------------- experiments

json run_curve_check(const MarketModel& model, const ExperimentConfig& cfg, ArtifactSink& sink) {
    auto p = read_curve_check(Section(cfg.params, "params"), model);
    p.cfg.seed = cfg.seed;
    const auto rows = check_identities(model.curve, p.cfg);
    sink.csv("identities.csv", [&](std::ostream& os) { write_csv(rows, os); });
    json s;
    bool all = true;
    for (const auto& r : rows) {
        s["max_error"][r.name] = r.max_error;
        all = all && r.passed();
    }
    s["all_passed"] = all;
    return s;
}

json run_discrete(const MarketModel& model, const ExperimentConfig& cfg, unsigned threads,
                  ArtifactSink& sink) {
    auto p = read_discrete(Section(cfg.params, "params"));
    p.cfg.seed = cfg.seed;
    p.cfg.threads = threads;
    const auto table = convergence_study(model, p.signal, p.n_list, p.cfg);
    sink.csv("convergence.csv", [&](std::ostream& os) { write_csv(table, os); });
    return table_summary(table);
}

json run_split(const MarketModel& model, const ExperimentConfig& cfg, unsigned threads,
               ArtifactSink& sink) {
    auto p = read_split(Section(cfg.params, "params"), model.horizon);
    p.cfg.seed = cfg.seed;
    p.cfg.threads = threads;
    const auto table = splitting_convergence(model, p.signal, p.cfg);
    sink.csv("convergence.csv", [&](std::ostream& os) { write_csv(table, os); });
    return table_summary(table);
}

json run_price(const MarketModel& model, const ExperimentConfig& cfg, ArtifactSink& sink) {
    const auto p = read_price(Section(cfg.params, "params"), model.horizon);
    json s;
    std::optional<PdeSolution> direct, transformed;
    if (p.solver != "transformed") {
        direct = solve(model, p.grid, p.opts);
        sink.csv("w_grid.csv", [&](std::ostream& os) { write_csv(*direct, os); });
        sink.json_file("pde_diagnostics.json", json::parse(diagnostics_json(*direct)));
        s["w_initial_at_x0"] = direct->value_at(0, 0.5 * (p.grid.x_lo + p.grid.x_hi));
    }
    if (p.solver != "direct") {
        transformed = solve_transformed(model, p.grid, p.opts);
        sink.csv("w_grid_transformed.csv", [&](std::ostream& os) { write_csv(*transformed, os); });
        sink.json_file("pde_diagnostics_transformed.json",
                       json::parse(diagnostics_json(*transformed)));
    }
    if (direct && transformed) {
        const double q = 0.25 * (p.grid.x_hi - p.grid.x_lo);
        s["max_difference_middle_half"] =
            max_difference(*direct, *transformed, p.grid.x_lo + q, p.grid.x_hi - q);
    }
    s["solver"] = p.solver;
    return s;
}

void write_refinement(const RefinementStudy& study, std::ostream& out) {
    csv::Writer w(out);
    w.header({"level", "space_steps", "time_steps", "hedge_steps", "rms_error", "rms_target",
              "mean_error"});
    for (std::size_t k = 0; k < study.levels.size(); ++k) {
        const auto& l = study.levels[k];
        w.row({std::to_string(k), std::to_string(l.space_steps), std::to_string(l.time_steps),
               std::to_string(l.hedge_steps), csv::format(l.rms_error), csv::format(l.rms_target),
               csv::format(l.mean_error)});
    }
}

json run_hedge_kind(const MarketModel& model, const ExperimentConfig& cfg, unsigned threads,
                    ArtifactSink& sink, bool cancellation) {
    auto p = read_hedge(Section(cfg.params, "params"), model.horizon, !cancellation);
    p.run.seed = cfg.seed;
    p.run.threads = threads;
    if (cancellation) {
        const auto skip = liquidation_cancellation_check(model, HedgeReport{});
        if (!skip.applicable) {
            sink.json_file("cancellation_summary.json",
                           {{"applicable", false}, {"status", skip.status}});
            return {{"applicable", false}, {"status", skip.status}};
        }
    }
    const auto sol = solve(model, p.grid, p.opts);
    const auto report = run_hedge(model, sol, p.run);
    if (cancellation) {
        const auto c = liquidation_cancellation_check(model, report);
        sink.csv("cancellation.csv", [&](std::ostream& os) {
            csv::Writer w(os);
            w.header({"path", "residual"});
            for (std::size_t i = 0; i < c.residuals.size(); ++i)
                w.row({std::to_string(i), csv::format(c.residuals[i])});
        });
        json s{{"applicable", c.applicable},
               {"status", c.status},
               {"max_residual", c.max_residual},
               {"paths", c.residuals.size()},
               {"steps", p.run.steps}};
        sink.json_file("cancellation_summary.json", s);
        return s;
    }
    sink.csv("hedge_paths.csv", [&](std::ostream& os) { write_csv(report, os); });
    for (std::size_t k = 0; k < report.traces.size(); ++k)
        sink.csv("hedge_trace_" + std::to_string(k) + ".csv",
                 [&](std::ostream& os) { write_csv(report.traces[k], os); });
    json s = json::parse(summary_json(report));
    if (p.refinement_levels > 0) {
        const auto study = hedge_refinement(model, p.grid, p.run, p.refinement_levels, p.opts);
        sink.csv("hedge_refinement.csv", [&](std::ostream& os) { write_refinement(study, os); });
        s["observed_order"] = study.observed_order;
    }
    sink.json_file("hedge_summary.json", s);
    return s;
}

// Parameters are validated against the kind before anything is computed.
void validate_params(const ExperimentConfig& cfg, const MarketModel& model) {
    if (cfg.kind == "curve-check") {
        (void)read_curve_check(Section(cfg.params, "params"), model);
    } else if (cfg.kind == "discrete-convergence") {
        (void)read_discrete(Section(cfg.params, "params"));
    } else if (cfg.kind == "split-convergence") {
        (void)read_split(Section(cfg.params, "params"), model.horizon);
    } else if (cfg.kind == "price") {
        (void)read_price(Section(cfg.params, "params"), model.horizon);
    } else {
        (void)read_hedge(Section(cfg.params, "params"), model.horizon, cfg.kind == "hedge");
    }
}

}  // namespace

// ---------------------------------------------------------------- config

MarketModel build_model(const json& spec) {
    Section m(spec, "model");
    auto impact = with_field("model.impact", [&] { return registry::make_impact(m.raw("impact")); });
    Coefficient mu = Coefficient::constant_value(0.0);
    if (m.has("mu"))
        mu = with_field("model.mu", [&] { return registry::make_coefficient(m.raw("mu")); });
    auto sigma = with_field("model.sigma", [&] { return registry::make_coefficient(m.raw("sigma")); });
    auto claim = with_field("model.claim", [&] { return registry::make_claim(m.raw("claim")); });
    const auto box = m.numbers("price_box", std::nullopt);
    if (box.size() != 2 || !(box[1] > box[0]))
        throw ConfigError("model.price_box", "model.price_box must be [lo, hi] with lo < hi");
    const double horizon = m.number("horizon", 1.0);
    DiffusionCoefficients coeffs{std::move(mu), std::move(sigma), m.number("lipschitz_bound", 10.0),
                                 m.number("sigma_floor", 1e-3)};
    CurveOptions copts;
    copts.ode_step = m.number("ode_step", copts.ode_step);
    copts.newton_tol = m.number("newton_tol", copts.newton_tol);
    m.finish();
    return with_field("model", [&] {
        ImpactCurve curve(std::move(impact), PriceBox{box[0], box[1]}, copts);
        return MarketModel::create(std::move(coeffs), std::move(curve), std::move(claim), horizon);
    });
}

ExperimentConfig parse_config(const json& doc) {
    Section root(doc, "");
    ExperimentConfig cfg;
    cfg.document = doc;
    cfg.kind = root.text("experiment");
    if (std::find(std::begin(experiment_kinds), std::end(experiment_kinds), cfg.kind) ==
        std::end(experiment_kinds))
        throw ConfigError("experiment", "unknown experiment '" + cfg.kind + "'");
    const auto& seed = root.raw("seed");
    if (!non_negative_integer(seed))
        throw ConfigError("seed", "field 'seed' must be a non-negative integer");
    cfg.seed = seed.get<std::uint64_t>();
    cfg.output_dir = root.text("output_dir", std::string("impactlab-out"));
    cfg.model = root.raw("model");
    cfg.params = root.has("params") ? root.raw("params") : json::object();
    root.finish();
    const auto model = build_model(cfg.model);
    validate_params(cfg, model);
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalError("sha256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string config_hash(const json& doc) { return sha256_hex(doc.dump()); }

std::string version_string() { return IMPACTLAB_GIT_DESCRIBE; }

// ---------------------------------------------------------------- run / verify

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const auto model = build_model(cfg.model);
    validate_params(cfg, model);

    RunOutcome out;
    out.dir = opts.out_dir ? *opts.out_dir : fs::path(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out.dir, ec);
    if (ec || !fs::is_directory(out.dir))
        throw IoError("cannot create output directory '" + out.dir.string() + "'");

    const std::string hash = config_hash(cfg.document);
    ArtifactSink sink(out.dir, hash);
    const unsigned threads = opts.threads;
    if (cfg.kind == "curve-check") {
        out.summary = run_curve_check(model, cfg, sink);
    } else if (cfg.kind == "discrete-convergence") {
        out.summary = run_discrete(model, cfg, threads, sink);
    } else if (cfg.kind == "split-convergence") {
        out.summary = run_split(model, cfg, threads, sink);
    } else if (cfg.kind == "price") {
        out.summary = run_price(model, cfg, sink);
    } else {
        out.summary = run_hedge_kind(model, cfg, threads, sink, cfg.kind == "cancellation-check");
    }
    out.artifacts = sink.artifacts();

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json checks = json::array();
    for (const auto& c : validate(model).checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    json arts = json::array();
    for (const auto& a : out.artifacts)
        arts.push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    out.manifest = {{"experiment", cfg.kind},
                    {"seed", cfg.seed},
                    {"config", cfg.document},
                    {"config_hash", hash},
                    {"version", version_string()},
                    {"wall_seconds", wall},
                    {"threads", threads},
                    {"artifacts", arts},
                    {"model_checks", checks},
                    {"summary", out.summary}};
    const fs::path mpath = out.dir / "manifest.json";
    std::ofstream m(mpath, std::ios::binary | std::ios::trunc);
    if (!m) throw IoError("cannot open '" + mpath.string() + "' for writing");
    m << out.manifest.dump(2) << '\n';
    if (!m) throw IoError("failed writing '" + mpath.string() + "'");
    return out;
}

VerifyReport verify_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw IoError("cannot read manifest '" + manifest_path.string() + "'");
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!m.is_object() || !m.contains("config") || !m.contains("config_hash") ||
        !m.contains("artifacts") || !m["artifacts"].is_array() || !m["config_hash"].is_string())
        throw ConfigError("", "manifest lacks config, config_hash or artifacts");

    VerifyReport rep;
    auto fail = [&](std::string msg) {
        rep.ok = false;
        rep.problems.push_back(std::move(msg));
    };
    const auto hash = m["config_hash"].get<std::string>();
    if (config_hash(m["config"]) != hash) fail("config echo does not hash to config_hash");

    const fs::path dir = manifest_path.parent_path();
    for (const auto& a : m["artifacts"]) {
        if (!a.is_object() || !a.contains("file") || !a["file"].is_string() ||
            !a.contains("sha256") || !a["sha256"].is_string()) {
            fail("malformed artifact entry");
            continue;
        }
        const auto name = a["file"].get<std::string>();
        if (name.find('/') != std::string::npos || name == ".." || name == ".") {
            fail(name + ": artifact outside the output directory");
            continue;
        }
        std::ifstream f(dir / name, std::ios::binary);
        if (!f) {
            fail(name + ": missing");
            continue;
        }
        std::ostringstream buf;
        buf << f.rdbuf();
        const std::string bytes = buf.str();
        if (sha256_hex(bytes) != a["sha256"].get<std::string>()) fail(name + ": digest mismatch");
        bool embeds = false;
        if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
            embeds = bytes.rfind("# config_hash=" + hash + "\n", 0) == 0;
        } else {
            const auto j = json::parse(bytes, nullptr, false);
            embeds = !j.is_discarded() && j.is_object() && j.value("config_hash", "") == hash;
        }
        if (!embeds) fail(name + ": config hash not embedded");
        rep.checked.push_back(name);
    }
    return rep;
}

}  // namespace impactlab
