// mclab: batch front-end for the metric-coalescent lab.
//
// Commands:
//   verify                 run the acceptance suite, write verify_summary.json
//   simulate               run the coalescent, export the trajectory CSV
//   tokens                 build a token system, export the partition snapshot
//   oracle                 enumerate the small-instance CTMC, export transients
//   experiment <name>      canned reproductions (CSV + meta JSON per run)
//
// Shared flags: --config <path>, --seed <u64>, --replicates <n>, --out <dir>,
// --sigma <real>, --threads <n>. MC_LAB_SEED is the seed fallback.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mclab/acceptance.hpp"
#include "mclab/coalescent.hpp"
#include "mclab/csv.hpp"
#include "mclab/errors.hpp"
#include "mclab/experiments.hpp"
#include "mclab/model_config.hpp"
#include "mclab/oracle.hpp"
#include "mclab/stats.hpp"
#include "mclab/tokens.hpp"

namespace {

using namespace mclab;

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
    if (seed_opt->count() > 0) return seed_flag;
    if (const char* env = std::getenv("MC_LAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("MC_LAB_SEED: not a valid 64-bit seed");
        }
    }
    return seed_flag;
}

// --config accepts a file path or an inline JSON object
ModelConfig resolve_config(const std::string& config) {
    if (!config.empty() && config.front() == '{') return parse_model_config(config);
    return load_model_config(config);
}

ModelConfig require_model(const std::optional<std::string>& config_path, const char* command) {
    if (!config_path) throw ConfigError(std::string(command) + ": --config is required");
    return resolve_config(*config_path);
}

void ensure_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw IOError("cannot create output directory: " + dir.string());
}

int run_verify(const RunConfig& rc) {
    // --replicates scales the pinned per-criterion counts (10^4 = 1.0)
    const double scale = static_cast<double>(rc.replicates) / 10000.0;
    const acceptance::SuiteResult suite = acceptance::run_suite(rc.seed, rc.sigma, scale, rc.threads);
    for (const auto& c : suite.criteria) {
        std::printf("[%s] %2d %-28s (%.2fs)\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), c.seconds);
    }
    ensure_out_dir(rc.out_dir);
    const auto path = rc.out_dir / "verify_summary.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    out << suite.summary_json;
    out.close();
    std::printf("%s: %s\n", suite.all_pass ? "OK" : "FAILED", path.string().c_str());
    return suite.all_pass ? 0 : 1;
}

int run_simulate(const RunConfig& rc) {
    const ModelConfig& m = *rc.model;
    if (!m.measure || !m.measure->is_atomic())
        throw ConfigError("simulate: config needs an atomic measure");
    const DiscreteMeasure& measure = m.measure->as_atomic();
    const std::optional<double> horizon =
        m.raw.contains("t") ? std::optional<double>(m.t) : std::nullopt;
    ensure_out_dir(rc.out_dir);

    RandomStream rng = child_stream(rc.seed, 0);
    const Trajectory traj = run(measure, m.phi, m.space, horizon, rng);
    write_trajectory_csv(traj, rc.out_dir / "trajectory.csv");

    if (rc.replicates > 1 && !horizon) {
        const LocationLaw law = final_location_law(measure, m.phi, m.space, rc.replicates, rc.seed, rc.threads);
        CsvWriter hist(rc.out_dir / "final_locations.csv");
        hist.row({"atom", "count", "frequency"});
        for (std::size_t a = 0; a < measure.size(); ++a)
            hist.row({std::to_string(a), std::to_string(law.count[a]), format_real(law.frequency[a])});
    }
    return 0;
}

int run_tokens(const RunConfig& rc) {
    const ModelConfig& m = *rc.model;
    if (!m.measure) throw ConfigError("tokens: config needs a measure");
    ensure_out_dir(rc.out_dir);
    RandomStream rng = child_stream(rc.seed, 0);
    const TokenSystem sys = TokenSystem::init(*m.measure, m.n_tokens, m.space, m.phi, rng);
    PartitionState state = evolve(sys, m.t);
    write_partition_csv(sys, state, rc.out_dir / "partition.csv");
    return 0;
}

int run_oracle(const RunConfig& rc) {
    const ModelConfig& m = *rc.model;
    if (!m.measure || !m.measure->is_atomic())
        throw ConfigError("oracle: config needs an atomic measure with at most 4 atoms");
    const DiscreteMeasure& measure = m.measure->as_atomic();
    ensure_out_dir(rc.out_dir);
    const CTMCOracle oracle = build_generator(enumerate_states(measure), measure, m.space, m.phi);
    write_transient_csv(oracle, m.t, rc.out_dir / "transient.csv");
    return 0;
}

int run_experiment(const RunConfig& rc) {
    validate_experiment_name(rc.experiment_name);
    TestConfig cfg;
    cfg.replicates = rc.replicates;
    cfg.base_seed = rc.seed;
    cfg.sigma = rc.sigma;
    cfg.threads = rc.threads;

    const nlohmann::json raw = rc.model ? rc.model->raw : nlohmann::json::object();
    const auto num = [&](const char* key, double fallback) { return raw.value(key, fallback); };

    ExperimentResult result;
    if (rc.experiment_name == "bounded_phi_counterexample") {
        const RateFunction phi = rc.model ? rc.model->phi : RateFunction::inverse_power(1.0);
        result = bounded_phi_counterexample(phi, num("x_n", 0.5), num("t", 1.0), cfg);
    } else if (rc.experiment_name == "sparse_support") {
        const RateFunction phi = rc.model ? rc.model->phi : RateFunction::inverse_power(1.0);
        const double exponent = num("r_exponent", 3.0);
        if (!(exponent > 2.0))
            throw ConfigError("experiment.r_exponent: sum 2(i-1) r_i must converge (need exponent > 2)");
        const auto rule = [exponent](std::size_t i) { return std::pow(static_cast<double>(i), -exponent); };
        result = sparse_support(rule, static_cast<std::size_t>(num("n_atoms", 20.0)), num("t", 1.0), phi, cfg);
    } else if (rc.experiment_name == "kingman_sweep") {
        MetricSpace space = MetricSpace::interval();
        RateFunction phi = RateFunction::inverse_power(1.0);
        std::optional<InitialMeasure> measure;
        if (rc.model) {
            space = rc.model->space;
            phi = rc.model->phi;
            measure = rc.model->measure;
            cfg.n_tokens = rc.model->n_tokens;
        }
        if (!measure) {
            std::vector<Atom> atoms;
            for (int k = 0; k < 50; ++k) atoms.push_back({Point::scalar(k / 49.0), 1.0 / 50.0});
            measure = InitialMeasure::atomic(DiscreteMeasure(std::move(atoms)));
        }
        if (!measure->is_atomic())
            throw ConfigError("experiment kingman_sweep: needs an atomic measure (witness cloud)");
        std::vector<Point> witness;
        for (const auto& a : measure->as_atomic().atoms()) witness.push_back(a.location);
        std::vector<double> grid;
        if (raw.contains("t_grid"))
            for (const auto& v : raw.at("t_grid")) grid.push_back(v.get<double>());
        else
            for (int k = 1; k <= 10; ++k) grid.push_back(0.1 * k);
        result = kingman_sweep(*measure, witness, [](const Point&) { return true; }, grid, space, phi, cfg);
    } else {  // tv_convergence
        MetricSpace space = MetricSpace::interval();
        RateFunction phi = RateFunction::inverse_power(1.0);
        InitialMeasure measure = InitialMeasure::uniform_box({{0.0}, {1.0}});
        if (rc.model) {
            space = rc.model->space;
            phi = rc.model->phi;
            if (rc.model->measure) measure = *rc.model->measure;
        }
        std::vector<std::size_t> grid = {64, 128, 256, 512};
        if (raw.contains("n_grid")) {
            grid.clear();
            for (const auto& v : raw.at("n_grid")) grid.push_back(v.get<std::size_t>());
        }
        result = tv_convergence(measure, num("t", 0.5), grid, space, phi, cfg);
    }
    write_experiment(result, rc.out_dir);
    bool ok = true;
    for (const auto& [name, pass] : result.verdicts) {
        std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name.c_str());
        ok = ok && pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metric-coalescent simulation and verification lab"};
    app.require_subcommand(1);

    RunConfig rc;
    std::optional<std::string> config_path;
    std::uint64_t seed_flag = 0;
    std::string out_dir = ".";

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "model/config JSON path");
        auto* seed_opt = cmd->add_option("--seed", seed_flag, "64-bit seed (fallback: MC_LAB_SEED, then 0)");
        cmd->add_option("--replicates", rc.replicates, "replicate count");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--sigma", rc.sigma, "pass threshold in standard errors");
        cmd->add_option("--threads", rc.threads, "worker threads (0 = default, negative = serial reference)");
        return seed_opt;
    };

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    auto* verify_seed = add_common(verify);
    auto* simulate = app.add_subcommand("simulate", "run the coalescent and export the trajectory");
    auto* simulate_seed = add_common(simulate);
    auto* tokens_cmd = app.add_subcommand("tokens", "build a token system and export the partition");
    auto* tokens_seed = add_common(tokens_cmd);
    auto* oracle_cmd = app.add_subcommand("oracle", "exact transient distribution for small atomics");
    auto* oracle_seed = add_common(oracle_cmd);
    auto* experiment = app.add_subcommand("experiment", "run a canned experiment");
    std::string experiment_name;
    experiment->add_option("name", experiment_name, "experiment name")->required();
    auto* experiment_seed = add_common(experiment);

    CLI11_PARSE(app, argc, argv);

    try {
        rc.out_dir = out_dir;
        if (verify->parsed()) {
            rc.command = "verify";
            rc.seed = resolve_seed(verify_seed, seed_flag);
            if (verify->count("--replicates") == 0) rc.replicates = 10000;
            if (config_path) rc.model = resolve_config(*config_path);
            return run_verify(rc);
        }
        if (simulate->parsed()) {
            rc.command = "simulate";
            rc.seed = resolve_seed(simulate_seed, seed_flag);
            rc.model = require_model(config_path, "simulate");
            return run_simulate(rc);
        }
        if (tokens_cmd->parsed()) {
            rc.command = "tokens";
            rc.seed = resolve_seed(tokens_seed, seed_flag);
            rc.model = require_model(config_path, "tokens");
            return run_tokens(rc);
        }
        if (oracle_cmd->parsed()) {
            rc.command = "oracle";
            rc.seed = resolve_seed(oracle_seed, seed_flag);
            rc.model = require_model(config_path, "oracle");
            return run_oracle(rc);
        }
        rc.command = "experiment";
        rc.experiment_name = experiment_name;
        rc.seed = resolve_seed(experiment_seed, seed_flag);
        if (config_path) rc.model = resolve_config(*config_path);
        return run_experiment(rc);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
