// Python bindings for the simulator core: world model, telemetry pipeline,
// knowledge graph, decision engine, enforcement, metrics, and the scenario
// runner.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kdnsim/controllers.hpp"
#include "kdnsim/decision.hpp"
#include "kdnsim/enforcer.hpp"
#include "kdnsim/knowledge.hpp"
#include "kdnsim/metrics.hpp"
#include "kdnsim/runner.hpp"
#include "kdnsim/scenario.hpp"

namespace py = pybind11;
using namespace kdnsim;

namespace {

py::dict metrics_to_dict(const MetricsReport& m) {
    py::dict d;
    d["controller"] = m.controller;
    d["scenario"] = m.scenario;
    d["seed"] = m.seed;
    d["steps"] = m.steps;
    d["reproducibility_hash"] = m.reproducibility_hash;
    d["decision_latency_ms"] =
        m.latency.mean_ms ? py::cast(*m.latency.mean_ms) : py::none().cast<py::object>();
    d["latency_samples"] = m.latency.samples_ms.size();
    d["unmatched_anomalies"] = m.latency.unmatched;
    d["delay_reduction"] = m.eff.delay_reduction;
    d["throughput_variability"] = m.eff.throughput_variability;
    d["effectiveness_score"] = m.eff.effectiveness_score;
    d["jitter"] = m.stab.jitter;
    d["throughput_variance"] = m.stab.throughput_variance;
    d["stability_score"] = m.stab.stability_score;
    d["actions_dispatched"] = m.actions_dispatched;
    return d;
}

} // namespace

PYBIND11_MODULE(_kdnsim, m) {
    m.doc() = "Closed-loop industrial network control simulator";

    py::enum_<NodeRole>(m, "NodeRole")
        .value("plc", NodeRole::Plc)
        .value("sensor", NodeRole::Sensor)
        .value("edge_server", NodeRole::EdgeServer)
        .value("enterprise", NodeRole::Enterprise)
        .value("switch", NodeRole::Switch);

    py::enum_<FaultKind>(m, "FaultKind")
        .value("load_fluctuation", FaultKind::LoadFluctuation)
        .value("link_degradation", FaultKind::LinkDegradation)
        .value("node_failure", FaultKind::NodeFailure);

    py::enum_<ActionKind>(m, "ActionKind")
        .value("flow_redirect", ActionKind::FlowRedirect)
        .value("bandwidth_realloc", ActionKind::BandwidthRealloc)
        .value("queue_mgmt", ActionKind::QueueMgmt)
        .value("task_offload", ActionKind::TaskOffload);

    py::class_<NodeSpec>(m, "NodeSpec")
        .def_readonly("id", &NodeSpec::id)
        .def_readonly("role", &NodeSpec::role)
        .def_readonly("cpu_capacity", &NodeSpec::cpu_capacity);

    py::class_<LinkSpec>(m, "LinkSpec")
        .def_readonly("id", &LinkSpec::id)
        .def_readonly("a", &LinkSpec::a)
        .def_readonly("b", &LinkSpec::b)
        .def_readonly("capacity", &LinkSpec::capacity)
        .def_readonly("base_delay_ms", &LinkSpec::base_delay_ms)
        .def_readonly("up", &LinkSpec::up);

    py::class_<Topology>(m, "Topology")
        .def_readonly("nodes", &Topology::nodes)
        .def_readonly("links", &Topology::links);

    py::class_<TopologySpec>(m, "TopologySpec")
        .def(py::init<>())
        .def_readwrite("node_count", &TopologySpec::node_count)
        .def_readwrite("connect_radius", &TopologySpec::connect_radius);

    m.def("build_topology", &build_topology, py::arg("spec"), py::arg("seed"));
    m.def("is_connected", &is_connected);

    py::class_<Flow>(m, "Flow")
        .def(py::init<>())
        .def_readwrite("id", &Flow::id)
        .def_readwrite("src", &Flow::src)
        .def_readwrite("dst", &Flow::dst)
        .def_readwrite("path", &Flow::path)
        .def_readwrite("offered_rate", &Flow::offered_rate)
        .def_readwrite("priority", &Flow::priority);

    py::class_<FaultEvent>(m, "FaultEvent")
        .def(py::init<>())
        .def_readwrite("kind", &FaultEvent::kind)
        .def_readwrite("target", &FaultEvent::target)
        .def_readwrite("start_tick", &FaultEvent::start_tick)
        .def_readwrite("duration_ticks", &FaultEvent::duration_ticks)
        .def_readwrite("magnitude", &FaultEvent::magnitude);

    py::class_<WorldState>(m, "WorldState")
        .def_readonly("topology", &WorldState::topology)
        .def_readonly("flows", &WorldState::flows)
        .def_readonly("queue_len", &WorldState::queue_len)
        .def_readonly("cpu_load", &WorldState::cpu_load)
        .def_readonly("clock", &WorldState::clock)
        .def("__eq__", [](const WorldState& a, const WorldState& b) { return a == b; });

    m.def("make_world", &make_world, py::arg("topology"), py::arg("flows"), py::arg("dt_ms"),
          py::arg("seed"));
    m.def("step", &step);
    m.def("inject_fault", &inject_fault);
    m.def("mean_flow_delay_ms", &mean_flow_delay_ms);
    m.def("total_service_throughput", &total_service_throughput);

    py::class_<TelemetryRecord>(m, "TelemetryRecord")
        .def_readonly("node_id", &TelemetryRecord::node_id)
        .def_readonly("lam", &TelemetryRecord::lambda)
        .def_readonly("delta", &TelemetryRecord::delta)
        .def_readonly("gamma", &TelemetryRecord::gamma)
        .def_readonly("eta", &TelemetryRecord::eta)
        .def_readonly("epsilon", &TelemetryRecord::epsilon)
        .def_readonly("tick", &TelemetryRecord::tick);

    py::class_<TelemetrySnapshot>(m, "TelemetrySnapshot")
        .def_readonly("tick", &TelemetrySnapshot::tick)
        .def_readonly("records", &TelemetrySnapshot::records);

    py::class_<PreprocessConfig>(m, "PreprocessConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &PreprocessConfig::alpha)
        .def_readwrite("delay_thresh_ms", &PreprocessConfig::delay_thresh_ms)
        .def_readwrite("queue_thresh", &PreprocessConfig::queue_thresh)
        .def_readwrite("cpu_thresh", &PreprocessConfig::cpu_thresh);

    m.def("resolve_thresholds", &resolve_thresholds);

    py::class_<TelemetryCollector>(m, "TelemetryCollector")
        .def(py::init<PreprocessConfig>())
        .def("sample", &TelemetryCollector::sample)
        .def("preprocess", &TelemetryCollector::preprocess)
        .def("collect", &TelemetryCollector::collect);

    py::class_<TelemetryWindow>(m, "TelemetryWindow")
        .def(py::init<std::size_t>())
        .def("push", &TelemetryWindow::push)
        .def("size", &TelemetryWindow::size)
        .def_property_readonly("capacity", &TelemetryWindow::capacity);

    py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
        .def_readonly("tick", &KnowledgeGraph::tick)
        .def_readonly("vertices", &KnowledgeGraph::vertices)
        .def_property_readonly("features",
                               [](const KnowledgeGraph& g) {
                                   std::vector<std::vector<double>> rows;
                                   for (const FeatureRow& row : g.features)
                                       rows.emplace_back(row.begin(), row.end());
                                   return rows;
                               })
        .def_property_readonly("edge_count",
                               [](const KnowledgeGraph& g) { return g.edges.size(); });

    m.def("build_graph", &build_graph, py::arg("window"), py::arg("topology"), py::arg("flows"));

    py::class_<DecisionConfig>(m, "DecisionConfig")
        .def(py::init<>())
        .def_readwrite("beta", &DecisionConfig::beta)
        .def_readwrite("max_subset_size", &DecisionConfig::max_subset_size)
        .def_readwrite("exhaustive_limit", &DecisionConfig::exhaustive_limit)
        .def_readwrite("lookahead_ticks", &DecisionConfig::lookahead_ticks);

    py::class_<Action>(m, "Action")
        .def_readonly("id", &Action::id)
        .def_readonly("kind", &Action::kind)
        .def("target_label", &Action::target_label);

    py::class_<ScoredAction>(m, "ScoredAction")
        .def_readonly("action", &ScoredAction::action)
        .def_readonly("utility", &ScoredAction::utility)
        .def_readonly("cost", &ScoredAction::cost);

    py::class_<ActionSet>(m, "ActionSet")
        .def_readonly("actions", &ActionSet::actions)
        .def_readonly("objective_value", &ActionSet::objective_value)
        .def_readonly("candidates_considered", &ActionSet::candidates_considered);

    m.def("enumerate_actions", &enumerate_actions);
    m.def("action_utility", &action_utility);
    m.def("action_cost", &action_cost);
    m.def("score_actions", &score_actions);
    m.def("select_actions", &select_actions);

    py::class_<Command>(m, "Command")
        .def_readonly("id", &Command::id)
        .def_readonly("action_id", &Command::action_id)
        .def_property_readonly("adapter",
                               [](const Command& c) { return std::string(to_string(c.adapter)); })
        .def_property_readonly("verb",
                               [](const Command& c) { return std::string(to_string(c.verb)); });

    m.def("compile_action", &compile_action);

    py::class_<CommandOutcome>(m, "CommandOutcome")
        .def_readonly("command", &CommandOutcome::command)
        .def_readonly("ack", &CommandOutcome::ack)
        .def_readonly("skipped", &CommandOutcome::skipped)
        .def_readonly("rolled_back", &CommandOutcome::rolled_back)
        .def_readonly("latency_ms", &CommandOutcome::latency_ms);

    py::class_<EnforcementReport>(m, "EnforcementReport")
        .def_readonly("dispatch_tick", &EnforcementReport::dispatch_tick)
        .def_readonly("completion_tick", &EnforcementReport::completion_tick)
        .def_readonly("total_latency_ms", &EnforcementReport::total_latency_ms)
        .def_readonly("outcomes", &EnforcementReport::outcomes)
        .def_readonly("acked_actions", &EnforcementReport::acked_actions)
        .def_readonly("failed_actions", &EnforcementReport::failed_actions);

    py::class_<ControlEnforcer>(m, "ControlEnforcer")
        .def(py::init<std::uint64_t>())
        .def("enforce", [](ControlEnforcer& enforcer, WorldState& world,
                           const std::vector<Action>& actions) {
            return enforcer.enforce(world, actions);
        });

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("name", &ScenarioConfig::name)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("steps", &ScenarioConfig::steps)
        .def_readwrite("controller", &ScenarioConfig::controller)
        .def_readwrite("out_dir", &ScenarioConfig::out_dir);

    py::class_<FlowGenSpec>(m, "FlowGenSpec")
        .def(py::init<>())
        .def_readwrite("count", &FlowGenSpec::count)
        .def_readwrite("rate_min", &FlowGenSpec::rate_min)
        .def_readwrite("rate_max", &FlowGenSpec::rate_max);

    m.def("default_stress_scenario", &default_stress_scenario);
    m.def("parse_scenario", &parse_scenario);
    m.def("load_scenario_file", &load_scenario_file);
    m.def("serialize_scenario", &serialize_scenario);
    m.def("validate_scenario", &validate_scenario);
    m.def("config_fingerprint", &config_fingerprint);
    m.def("generate_flows", &generate_flows);

    py::class_<ReportBundle>(m, "ReportBundle")
        .def_readonly("trace_csv", &ReportBundle::trace_csv)
        .def_readonly("metrics_json", &ReportBundle::metrics_json)
        .def_readonly("decisions_csv", &ReportBundle::decisions_csv)
        .def_readonly("enforcement_csv", &ReportBundle::enforcement_csv)
        .def_readonly("timing_csv", &ReportBundle::timing_csv);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("bundle", &RunResult::bundle)
        .def_readonly("wall_seconds", &RunResult::wall_seconds)
        .def_property_readonly("metrics",
                               [](const RunResult& r) { return metrics_to_dict(r.metrics); })
        .def_property_readonly("trace_rows",
                               [](const RunResult& r) { return r.trace.rows.size(); });

    m.def(
        "run_scenario",
        [](const ScenarioConfig& cfg, const std::string& out_dir, std::uint64_t stream_seed) {
            return run_scenario(cfg, out_dir, stream_seed);
        },
        py::arg("config"), py::arg("out_dir") = "", py::arg("stream_seed") = 0);

    m.def(
        "compare_controllers",
        [](const ScenarioConfig& cfg, const std::vector<std::string>& controllers,
           const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
            const ComparisonTable table = compare_controllers(cfg, controllers, seeds, out_dir);
            py::list rows;
            for (const ComparisonRow& row : table.rows) {
                py::dict d;
                d["controller"] = row.controller;
                d["seed"] = row.seed;
                d["status"] = row.status;
                if (row.status == "ok") d["metrics"] = metrics_to_dict(row.metrics);
                rows.append(d);
            }
            py::dict out;
            out["rows"] = rows;
            out["table_csv"] = table.table_csv;
            out["plot_files"] = table.plot_files;
            return out;
        },
        py::arg("config"), py::arg("controllers"), py::arg("seeds"), py::arg("out_dir"));
}
