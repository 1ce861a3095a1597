#include "kdnsim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "kdnsim/format.hpp"
#include "kdnsim/svg.hpp"

namespace kdnsim {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary); // '\n' only, also on Windows
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string actions_field(const ActionSet& set) {
    // kind:target:U:C entries joined by '|'; empty field when no action.
    std::string out;
    for (std::size_t i = 0; i < set.actions.size(); ++i) {
        const ScoredAction& s = set.actions[i];
        if (i) out += '|';
        out += to_string(s.action.kind);
        out += ':';
        out += s.action.target_label();
        out += ':';
        out += fmt_double(s.utility);
        out += ':';
        out += fmt_double(s.cost);
    }
    return out;
}

struct MaterializedScenario {
    WorldState world;
    PreprocessConfig preprocess;
    DecisionConfig decision;
    TetConfig tet;
    RlcConfig rlc;
};

MaterializedScenario materialize(const ScenarioConfig& cfg, std::uint64_t seed) {
    Topology topo = build_topology(cfg.topology, seed);

    std::vector<Flow> flows;
    if (cfg.flows_explicit) {
        for (const ExplicitFlowSpec& spec : cfg.explicit_flows) {
            Flow f;
            f.id = spec.id;
            f.src = spec.src;
            f.dst = spec.dst;
            f.offered_rate = spec.rate;
            f.priority = spec.priority;
            f.path = spec.path.empty() ? static_shortest_path(topo, spec.src, spec.dst) : spec.path;
            flows.push_back(std::move(f));
        }
        std::sort(flows.begin(), flows.end(), [](const Flow& a, const Flow& b) { return a.id < b.id; });
        for (std::size_t i = 0; i < flows.size(); ++i)
            if (flows[i].id != i)
                throw ConfigError("config: flows: ids must be dense starting at 0");
    } else {
        flows = generate_flows(topo, cfg.flow_gen, seed);
    }

    MaterializedScenario m{make_world(std::move(topo), std::move(flows), cfg.dt_ms, seed),
                           cfg.preprocess, cfg.decision, cfg.tet, cfg.rlc};
    m.world.work_per_packet = cfg.work_per_packet;
    m.world.penalty_delay_ms = cfg.penalty_delay_ms;
    m.preprocess = resolve_thresholds(cfg.preprocess, m.world.topology);

    for (const FaultEvent& fault : cfg.faults) inject_fault(m.world, fault);

    // Baseline thresholds left at zero follow the resolved telemetry ones.
    if (m.tet.delay_thresh_ms <= 0.0) m.tet.delay_thresh_ms = m.preprocess.delay_thresh_ms;
    if (m.tet.queue_thresh <= 0.0) m.tet.queue_thresh = m.preprocess.queue_thresh;
    if (m.tet.cpu_thresh <= 0.0) m.tet.cpu_thresh = m.preprocess.cpu_thresh;
    m.rlc.total_steps = cfg.steps;
    return m;
}

std::unique_ptr<Controller> build_controller(const std::string& name, const ScenarioConfig& cfg,
                                             const MaterializedScenario& m, std::uint64_t seed) {
    if (name == "kdn") return std::make_unique<KdnController>(m.decision);
    if (name == "tet") return std::make_unique<TetController>(m.tet);
    if (name == "hrs") return std::make_unique<HrsController>(cfg.hrs);
    if (name == "rlc") {
        auto rlc = std::make_unique<RlcController>(m.rlc, seed);
        rlc->set_delay_thresh(m.preprocess.delay_thresh_ms);
        return rlc;
    }
    throw ConfigError("config: controller: unknown controller '" + name + "'");
}

std::vector<ResourceId> anomaly_touched(const Topology& topo, NodeId node) {
    std::vector<ResourceId> touched;
    touched.push_back({ResourceKind::Node, node});
    for (LinkId lid : topo.incident[node]) {
        touched.push_back({ResourceKind::Link, lid});
        touched.push_back({ResourceKind::Node, topo.peer(lid, node)});
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    return touched;
}

} // namespace

std::unique_ptr<Controller> make_controller(const ScenarioConfig& cfg, const Topology& topo) {
    (void)topo;
    MaterializedScenario m = materialize(cfg, cfg.seed);
    return build_controller(cfg.controller, cfg, m, cfg.seed);
}

RunResult run_scenario_with(const ScenarioConfig& cfg, Controller& controller,
                            const std::string& out_dir, std::uint64_t stream_seed) {
    const auto wall_start = std::chrono::steady_clock::now();
    validate_scenario(cfg);
    if (stream_seed == 0) stream_seed = cfg.seed;

    MaterializedScenario m = materialize(cfg, cfg.seed);
    WorldState& world = m.world;

    TelemetryCollector collector(m.preprocess);
    TelemetryWindow window(cfg.window_k);
    ControlEnforcer enforcer(Rng(stream_seed).fork(0xE4F0ACE5ull).next_u64());

    const bool write_files = !out_dir.empty();
    fs::path dir(out_dir);
    ReportBundle bundle;
    std::ofstream trace_out, decisions_out, enforcement_out, timing_out, telemetry_out,
        graph_edges_out, graph_features_out;
    if (write_files) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw std::runtime_error("cannot create output dir " + dir.string());
        bundle.trace_csv = (dir / "trace.csv").string();
        bundle.metrics_json = (dir / "metrics.json").string();
        bundle.decisions_csv = (dir / "decisions.csv").string();
        bundle.enforcement_csv = (dir / "enforcement.csv").string();
        bundle.timing_csv = (dir / "timing.csv").string();
        trace_out = open_out(bundle.trace_csv);
        decisions_out = open_out(bundle.decisions_csv);
        enforcement_out = open_out(bundle.enforcement_csv);
        timing_out = open_out(bundle.timing_csv);
        trace_out << "tick,mean_delay_ms,throughput_pkts,mean_cpu,total_queue,anomaly_count,"
                     "actions_selected,objective_value,enforcement_latency_ms,latency_increase\n";
        decisions_out << "tick,m,selected,objective_value,actions\n";
        enforcement_out << "tick,action_id,command_id,adapter,verb,outcome,latency_ms\n";
        timing_out << "tick,decision_wall_ms\n";
        if (cfg.telemetry_dump) {
            bundle.telemetry_csv = (dir / "telemetry.csv").string();
            telemetry_out = open_out(bundle.telemetry_csv);
            write_telemetry_header(telemetry_out);
        }
        if (cfg.graph_dump) {
            bundle.graph_edges_csv = (dir / "graph_edges.csv").string();
            bundle.graph_features_csv = (dir / "graph_features.csv").string();
            graph_edges_out = open_out(bundle.graph_edges_csv);
            graph_features_out = open_out(bundle.graph_features_csv);
            write_graph_headers(graph_edges_out, graph_features_out);
        }
    }

    RunTrace trace;
    trace.dt_ms = cfg.dt_ms;
    trace.rows.reserve(static_cast<std::size_t>(cfg.steps));

    std::vector<int> prev_epsilon(world.topology.nodes.size(), 0);
    EnforcementReport prev_report;
    bool have_report = false;
    double fault_baseline_delay = 0.0;
    bool fault_seen = false;
    std::uint32_t next_action_id = 0;
    int actions_dispatched = 0;

    for (Tick t = 0; t < cfg.steps; ++t) {
        TelemetrySnapshot snapshot = collector.collect(world);
        if (have_report) controller.notify(prev_report, snapshot);

        // Anomaly onsets: epsilon transitions 0 -> 1 against the last tick.
        int anomaly_count = 0;
        for (const TelemetryRecord& rec : snapshot.records) {
            anomaly_count += rec.epsilon;
            if (rec.epsilon == 1 && prev_epsilon[rec.node_id] == 0)
                trace.anomalies.push_back(
                    AnomalyEvent{t, rec.node_id, anomaly_touched(world.topology, rec.node_id)});
            prev_epsilon[rec.node_id] = rec.epsilon;
        }

        if (cfg.telemetry_dump && write_files) append_telemetry_csv(telemetry_out, snapshot);

        window.push(snapshot);
        const KnowledgeGraph graph = build_graph(window, world.topology, world.flows);
        if (cfg.graph_dump && write_files)
            append_graph_csv(graph_edges_out, graph_features_out, graph);

        const double mean_delay = mean_flow_delay_ms(world, t);
        for (const FaultEvent& fault : world.active_faults) {
            if (fault.start_tick == t) {
                fault_baseline_delay = mean_delay;
                fault_seen = true;
                break;
            }
        }

        const auto decide_start = std::chrono::steady_clock::now();
        ActionSet selected = controller.decide(snapshot, graph, world);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      decide_start)
                .count();

        std::vector<Action> actions;
        actions.reserve(selected.actions.size());
        for (ScoredAction& s : selected.actions) {
            s.action.id = next_action_id++;
            actions.push_back(s.action);
        }

        EnforcementReport report = enforcer.enforce(world, actions);
        actions_dispatched += static_cast<int>(actions.size());

        // Per-action dispatch latency feeds the decision-latency metric.
        // Enforcement within a tick is sequential on the shared control
        // channel, so an action's dispatch waits for every command queued
        // before its own first command.
        {
            double cumulative_ms = 0.0;
            std::vector<double> first_cmd_latency(actions.size(), 0.0);
            std::vector<bool> seen(actions.size(), false);
            for (const CommandOutcome& o : report.outcomes) {
                if (o.skipped) continue;
                cumulative_ms += o.latency_ms;
                const std::uint32_t local =
                    o.command.action_id - (next_action_id - static_cast<std::uint32_t>(actions.size()));
                if (local < actions.size() && !seen[local]) {
                    seen[local] = true;
                    first_cmd_latency[local] = cumulative_ms;
                }
            }
            for (std::size_t i = 0; i < actions.size(); ++i)
                trace.dispatches.push_back(
                    DispatchEvent{t, actions[i].touched_resources, first_cmd_latency[i]});
        }

        TraceRow row;
        row.tick = t;
        row.mean_delay_ms = mean_delay;
        row.throughput_pkts = total_service_throughput(world);
        double cpu_sum = 0.0;
        for (double c : world.cpu_load) cpu_sum += c;
        row.mean_cpu = cpu_sum / static_cast<double>(world.cpu_load.size());
        for (double q : world.queue_len) row.total_queue += q;
        row.anomaly_count = anomaly_count;
        row.actions_selected = static_cast<int>(actions.size());
        row.objective_value = selected.objective_value;
        row.enforcement_latency_ms = report.total_latency_ms;
        row.latency_increase_ms = fault_seen ? mean_delay - fault_baseline_delay : 0.0;
        trace.rows.push_back(row);

        if (write_files) {
            trace_out << t << ',' << fmt_double(row.mean_delay_ms) << ','
                      << fmt_double(row.throughput_pkts) << ',' << fmt_double(row.mean_cpu) << ','
                      << fmt_double(row.total_queue) << ',' << row.anomaly_count << ','
                      << row.actions_selected << ',' << fmt_double(row.objective_value) << ','
                      << fmt_double(row.enforcement_latency_ms) << ','
                      << fmt_double(row.latency_increase_ms) << '\n';
            decisions_out << t << ',' << selected.candidates_considered << ','
                          << selected.actions.size() << ',' << fmt_double(selected.objective_value)
                          << ',' << actions_field(selected) << '\n';
            for (const CommandOutcome& o : report.outcomes) {
                enforcement_out << t << ',' << o.command.action_id << ',' << o.command.id << ','
                                << to_string(o.command.adapter) << ',' << to_string(o.command.verb)
                                << ',';
                if (o.skipped)
                    enforcement_out << "skipped";
                else if (o.ack)
                    enforcement_out << (o.rolled_back ? "rolled_back" : "ack");
                else
                    enforcement_out << "nack(" << to_string(o.reason) << ")";
                enforcement_out << ',' << fmt_double(o.latency_ms) << '\n';
            }
            timing_out << t << ',' << fmt_double(wall_ms, 4) << '\n';
        }

        prev_report = std::move(report);
        have_report = true;

        step(world);
    }

    RunResult result;
    result.trace = std::move(trace);
    result.bundle = bundle;

    MetricsReport metrics;
    metrics.controller = controller.name();
    metrics.scenario = cfg.name;
    metrics.seed = stream_seed;
    metrics.steps = cfg.steps;
    metrics.reproducibility_hash = config_fingerprint(cfg);
    metrics.latency = decision_latency(result.trace, cfg.anomaly_timeout_ticks);
    metrics.eff = effectiveness(result.trace, cfg.baseline_window, cfg.metrics_weights);
    metrics.stab = stability(result.trace, cfg.metrics_weights);
    metrics.actions_dispatched = actions_dispatched;
    result.metrics = metrics;

    if (write_files) {
        std::ofstream metrics_out = open_out(bundle.metrics_json);
        metrics_out << metrics_report_json(metrics);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

RunResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir_override,
                       std::uint64_t stream_seed) {
    if (stream_seed == 0) stream_seed = cfg.seed;
    MaterializedScenario m = materialize(cfg, cfg.seed);
    std::unique_ptr<Controller> controller =
        build_controller(cfg.controller, cfg, m, stream_seed);
    const std::string out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
    return run_scenario_with(cfg, *controller, out_dir, stream_seed);
}

ComparisonTable compare_controllers(const ScenarioConfig& cfg,
                                    const std::vector<std::string>& controllers,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::string& out_dir) {
    if (controllers.empty()) throw ConfigError("compare: need at least one controller");
    if (seeds.empty()) throw ConfigError("compare: need at least one seed");

    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output dir " + dir.string());

    ComparisonTable table;
    // Per-controller downsampled latency-increase series, seed-averaged.
    std::map<std::string, std::vector<double>> latency_series;
    std::map<std::string, std::vector<double>> series_ticks;

    for (const std::string& name : controllers) {
        std::vector<std::vector<double>> per_seed_series;
        for (std::uint64_t seed : seeds) {
            ScenarioConfig run_cfg = cfg;
            run_cfg.controller = name;
            ComparisonRow row;
            row.controller = name;
            row.seed = seed;
            try {
                const std::string run_dir =
                    (dir / (name + "_s" + std::to_string(seed))).string();
                RunResult result = run_scenario(run_cfg, run_dir, seed);
                row.status = "ok";
                row.metrics = result.metrics;
                const std::size_t stride =
                    std::max<std::size_t>(1, result.trace.rows.size() / 200);
                std::vector<double> series;
                for (std::size_t i = 0; i < result.trace.rows.size(); i += stride)
                    series.push_back(result.trace.rows[i].latency_increase_ms);
                per_seed_series.push_back(std::move(series));
            } catch (const std::exception& e) {
                row.status = e.what();
            }
            table.rows.push_back(std::move(row));
        }
        // Average the per-seed series pointwise over the shortest length.
        std::size_t min_len = std::string::npos;
        for (const auto& s : per_seed_series) min_len = std::min(min_len, s.size());
        if (!per_seed_series.empty() && min_len != std::string::npos && min_len > 0) {
            std::vector<double> avg(min_len, 0.0);
            for (const auto& s : per_seed_series)
                for (std::size_t i = 0; i < min_len; ++i) avg[i] += s[i];
            for (double& v : avg) v /= static_cast<double>(per_seed_series.size());
            latency_series[name] = std::move(avg);
            std::vector<double> ticks(min_len);
            const std::size_t stride = std::max<std::size_t>(
                1, static_cast<std::size_t>(cfg.steps) / 200);
            for (std::size_t i = 0; i < min_len; ++i)
                ticks[i] = static_cast<double>(i * stride);
            series_ticks[name] = std::move(ticks);
        }
    }

    // Table CSV: one row per controller x seed.
    table.table_csv = (dir / "compare.csv").string();
    {
        std::ofstream out = open_out(table.table_csv);
        out << "controller,seed,status,effectiveness_score,delay_reduction,"
               "throughput_variability,stability_score,jitter,throughput_variance,"
               "decision_latency_ms,unmatched_anomalies,actions_dispatched\n";
        for (const ComparisonRow& row : table.rows) {
            out << row.controller << ',' << row.seed << ',' << (row.status == "ok" ? "ok" : "error")
                << ',';
            if (row.status == "ok") {
                out << fmt_double(row.metrics.eff.effectiveness_score) << ','
                    << fmt_double(row.metrics.eff.delay_reduction) << ','
                    << fmt_double(row.metrics.eff.throughput_variability) << ','
                    << fmt_double(row.metrics.stab.stability_score) << ','
                    << fmt_double(row.metrics.stab.jitter) << ','
                    << fmt_double(row.metrics.stab.throughput_variance) << ','
                    << (row.metrics.latency.mean_ms ? fmt_double(*row.metrics.latency.mean_ms) : "")
                    << ',' << row.metrics.latency.unmatched << ','
                    << row.metrics.actions_dispatched << '\n';
            } else {
                out << ",,,,,,,,\n";
            }
        }
    }

    // Seed-averaged summaries per controller, in the caller's order.
    auto controller_mean = [&](const std::string& name, auto getter) {
        double sum = 0.0;
        int n = 0;
        for (const ComparisonRow& row : table.rows) {
            if (row.controller != name || row.status != "ok") continue;
            sum += getter(row.metrics);
            ++n;
        }
        return n > 0 ? sum / n : 0.0;
    };

    std::vector<BarPanel> eff_panels(3), stab_panels(3);
    eff_panels[0].title = "delay reduction";
    eff_panels[1].title = "throughput variability";
    eff_panels[2].title = "effectiveness score";
    stab_panels[0].title = "delay jitter";
    stab_panels[1].title = "throughput variance";
    stab_panels[2].title = "stability score";
    std::vector<ChartBar> latency_bars;
    for (const std::string& name : controllers) {
        eff_panels[0].bars.push_back(
            {name, controller_mean(name, [](const MetricsReport& m) { return m.eff.delay_reduction; })});
        eff_panels[1].bars.push_back(
            {name, controller_mean(
                       name, [](const MetricsReport& m) { return m.eff.throughput_variability; })});
        eff_panels[2].bars.push_back(
            {name, controller_mean(
                       name, [](const MetricsReport& m) { return m.eff.effectiveness_score; })});
        stab_panels[0].bars.push_back(
            {name, controller_mean(name, [](const MetricsReport& m) { return m.stab.jitter; })});
        stab_panels[1].bars.push_back(
            {name, controller_mean(
                       name, [](const MetricsReport& m) { return m.stab.throughput_variance; })});
        stab_panels[2].bars.push_back(
            {name, controller_mean(
                       name, [](const MetricsReport& m) { return m.stab.stability_score; })});
        latency_bars.push_back(
            {name, controller_mean(name, [](const MetricsReport& m) {
                 return m.latency.mean_ms.value_or(0.0);
             })});
    }

    std::vector<ChartSeries> latency_increase_series;
    for (const std::string& name : controllers) {
        ChartSeries s;
        s.name = name;
        if (auto it = latency_series.find(name); it != latency_series.end()) {
            s.y = it->second;
            s.x = series_ticks[name];
        }
        latency_increase_series.push_back(std::move(s));
    }

    struct Plot {
        const char* filename;
        std::string content;
    };
    const Plot plots[] = {
        {"effectiveness.svg", svg_bar_panels("Control effectiveness", eff_panels)},
        {"stability.svg", svg_bar_panels("System stability", stab_panels)},
        {"decision_latency.svg", svg_bar_chart("Decision latency", "ms", latency_bars)},
        {"latency_increase.svg",
         svg_line_chart("Latency increase", "tick", "mean delay delta (ms)",
                        latency_increase_series)},
    };
    for (const Plot& plot : plots) {
        const fs::path path = dir / plot.filename;
        std::ofstream out = open_out(path);
        out << plot.content;
        table.plot_files.push_back(path.string());
    }
    return table;
}

} // namespace kdnsim
