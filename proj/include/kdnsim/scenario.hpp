#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdnsim/actions.hpp"
#include "kdnsim/controllers.hpp"
#include "kdnsim/metrics.hpp"
#include "kdnsim/telemetry.hpp"
#include "kdnsim/world.hpp"

namespace kdnsim {

struct FlowGenSpec {
    std::uint32_t count = 12;
    double rate_min = 0.5;
    double rate_max = 2.0;
    int priority_levels = 3;
};

struct ExplicitFlowSpec {
    FlowId id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    double rate = 1.0;
    int priority = 0;
    std::vector<LinkId> path; // empty -> shortest path by base delay
};

// Full experiment envelope. Thresholds left at zero are resolved against the
// materialized topology ("auto"); resolution happens at run time so a config
// file round-trips unchanged.
struct ScenarioConfig {
    std::string name = "default";
    std::uint64_t seed = 7;
    std::int64_t steps = 1000;
    double dt_ms = 10.0;
    std::string out_dir = "out";

    TopologySpec topology;
    double work_per_packet = 0.05;
    double penalty_delay_ms = 100.0;

    bool flows_explicit = false;
    FlowGenSpec flow_gen;
    std::vector<ExplicitFlowSpec> explicit_flows;

    std::vector<FaultEvent> faults;

    std::size_t window_k = 4;
    PreprocessConfig preprocess;
    DecisionConfig decision;

    std::string controller = "kdn";
    TetConfig tet{0.0, 0.0, 0.9, 0.5, 0.3, 16}; // zero thresholds -> from preprocess
    HrsConfig hrs;
    RlcConfig rlc;

    MetricsWeights metrics_weights;
    std::size_t baseline_window = 100;
    Tick anomaly_timeout_ticks = 50;

    bool telemetry_dump = false;
    bool graph_dump = false;
};

// Strict parser: unknown keys and malformed values are rejected with
// field-level messages (thrown as ConfigError).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& cfg);

// Semantic checks beyond shape: id references, ranges, role mix.
// Throws ConfigError listing the offending field.
void validate_scenario(const ScenarioConfig& cfg);

// The bundled stress case: 50 nodes, 12 flows, three load fluctuations, two
// link degradations and one node failure spread over 1000 ticks. Fault
// targets are picked deterministically from the seed-7 topology.
ScenarioConfig default_stress_scenario();

// Deterministic flow set for a topology (used when flows are not explicit).
std::vector<Flow> generate_flows(const Topology& topo, const FlowGenSpec& spec,
                                 std::uint64_t seed);

// Shortest path by base delay over up links; throws ConfigError when src and
// dst are disconnected.
std::vector<LinkId> static_shortest_path(const Topology& topo, NodeId src, NodeId dst);

std::string config_fingerprint(const ScenarioConfig& cfg); // fnv1a-64 hex of the canonical form

} // namespace kdnsim
