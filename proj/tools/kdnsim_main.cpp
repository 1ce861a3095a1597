// kdnsim command line: run one scenario, compare controllers over seeds, or
// validate a config file.
//
//   kdnsim run --config scenario.json --controller kdn --seed 7 --out out/
//   kdnsim compare --config scenario.json --controllers kdn,tet,hrs,rlc --seeds 1..5 --out cmp/
//   kdnsim validate --config scenario.json
//
// Exit codes: 0 success, 1 config validation error, 2 runtime failure.
// KDNSIM_OUT_DIR overrides the output directory when set.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdnsim/runner.hpp"
#include "kdnsim/scenario.hpp"

namespace {

using namespace kdnsim;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "1..5" or "1,2,3".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    const auto range_pos = text.find("..");
    if (range_pos != std::string::npos) {
        const std::uint64_t lo = std::stoull(text.substr(0, range_pos));
        const std::uint64_t hi = std::stoull(text.substr(range_pos + 2));
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
        for (const std::string& item : split_list(text)) seeds.push_back(std::stoull(item));
    }
    return seeds;
}

ScenarioConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return default_stress_scenario();
    return load_scenario_file(config_path);
}

std::string resolve_out_dir(const std::string& flag_value, const std::string& config_value) {
    if (const char* env = std::getenv("KDNSIM_OUT_DIR"); env && *env) return env;
    if (!flag_value.empty()) return flag_value;
    return config_value;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop industrial network control simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, controller, controllers_csv = "kdn,tet,hrs,rlc";
    std::string seeds_text = "1..5";
    std::int64_t seed = -1, steps = -1;

    CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario");
    run_cmd->add_option("--config", config_path, "Scenario config JSON (bundled default if omitted)");
    run_cmd->add_option("--controller", controller, "kdn|tet|hrs|rlc (overrides config)");
    run_cmd->add_option("--seed", seed, "Seed override");
    run_cmd->add_option("--steps", steps, "Step-count override");
    run_cmd->add_option("--out", out_dir, "Output directory");

    CLI::App* compare_cmd = app.add_subcommand("compare", "Run controllers x seeds and aggregate");
    compare_cmd->add_option("--config", config_path, "Scenario config JSON (bundled default if omitted)");
    compare_cmd->add_option("--controllers", controllers_csv, "Comma list (default kdn,tet,hrs,rlc)");
    compare_cmd->add_option("--seeds", seeds_text, "Seed list: 1..5 or 1,2,3 (default 1..5)");
    compare_cmd->add_option("--steps", steps, "Step-count override");
    compare_cmd->add_option("--out", out_dir, "Output directory");

    CLI::App* validate_cmd = app.add_subcommand("validate", "Validate a config file");
    validate_cmd->add_option("--config", config_path, "Scenario config JSON")->required();

    CLI::App* default_cmd =
        app.add_subcommand("default-config", "Print the bundled stress scenario as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (default_cmd->parsed()) {
            std::cout << serialize_scenario(default_stress_scenario());
            return 0;
        }

        ScenarioConfig cfg;
        try {
            cfg = load_or_default(config_path);
            if (validate_cmd->parsed()) {
                validate_scenario(cfg);
                std::cout << "ok: " << config_path << " (fingerprint " << config_fingerprint(cfg)
                          << ")\n";
                return 0;
            }
        } catch (const ConfigError& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }

        if (steps > 0) cfg.steps = steps;

        if (run_cmd->parsed()) {
            if (!controller.empty()) cfg.controller = controller;
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            try {
                validate_scenario(cfg);
            } catch (const ConfigError& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            const RunResult result = run_scenario(cfg, resolve_out_dir(out_dir, cfg.out_dir));
            std::cout << "run complete: controller=" << cfg.controller << " seed=" << cfg.seed
                      << " steps=" << cfg.steps << " wall=" << result.wall_seconds << "s\n";
            std::cout << "  trace: " << result.bundle.trace_csv << "\n";
            std::cout << "  metrics: " << result.bundle.metrics_json << "\n";
            std::cout << "  effectiveness=" << result.metrics.eff.effectiveness_score
                      << " stability=" << result.metrics.stab.stability_score
                      << " decision_latency_ms="
                      << (result.metrics.latency.mean_ms
                              ? std::to_string(*result.metrics.latency.mean_ms)
                              : std::string("n/a"))
                      << "\n";
            return 0;
        }

        if (compare_cmd->parsed()) {
            const std::vector<std::string> controllers = split_list(controllers_csv);
            const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
            const std::string resolved = resolve_out_dir(out_dir, cfg.out_dir);
            const ComparisonTable table = compare_controllers(cfg, controllers, seeds, resolved);
            std::cout << "comparison complete: " << table.rows.size() << " runs\n";
            std::cout << "  table: " << table.table_csv << "\n";
            for (const std::string& plot : table.plot_files) std::cout << "  plot: " << plot << "\n";
            int failures = 0;
            for (const ComparisonRow& row : table.rows)
                if (row.status != "ok") {
                    ++failures;
                    std::cerr << "  failed: " << row.controller << " seed " << row.seed << ": "
                              << row.status << "\n";
                }
            return failures == 0 ? 0 : 2;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
