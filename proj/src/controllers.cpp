#include "kdnsim/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kdnsim {

namespace {

constexpr double kTiny = 1e-9;

ActionSet as_unscored_set(std::vector<Action> actions, int candidates) {
    ActionSet set;
    set.objective_value = 0.0;
    set.candidates_considered = candidates;
    for (Action& a : actions) {
        ScoredAction s;
        s.action = std::move(a);
        set.actions.push_back(std::move(s));
    }
    return set;
}

double population_variance(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

double snapshot_mean_delay(const TelemetrySnapshot& snap) {
    if (snap.records.empty()) return 0.0;
    double sum = 0.0;
    for (const TelemetryRecord& rec : snap.records) sum += rec.lambda;
    return sum / static_cast<double>(snap.records.size());
}

double snapshot_mean_throughput(const TelemetrySnapshot& snap) {
    if (snap.records.empty()) return 0.0;
    double sum = 0.0;
    for (const TelemetryRecord& rec : snap.records) sum += rec.delta;
    return sum / static_cast<double>(snap.records.size());
}

} // namespace

ActionSet KdnController::decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                                const WorldState& world) {
    (void)snapshot;
    const std::vector<Action> candidates = enumerate_actions(graph, world, cfg_);
    const std::vector<ScoredAction> scored = score_actions(candidates, graph, world, cfg_);
    ActionSet set = select_actions(scored, cfg_);
    set.candidates_considered = static_cast<int>(candidates.size());
    return set;
}

bool make_queue_action(const WorldState& world, NodeId node, double drain_fraction, Action& out) {
    LinkId link;
    if (!worst_incident_link(world, node, link)) return false;
    Action a;
    a.kind = ActionKind::QueueMgmt;
    a.link = link;
    a.drain_fraction = drain_fraction;
    a.touched_resources = touched_for(a, world);
    out = std::move(a);
    return true;
}

bool make_offload_action(const WorldState& world, NodeId node, double fraction, Action& out) {
    if (node_failed(world, node, world.clock)) return false;
    NodeId dest;
    if (!least_loaded_up_neighbor(world, node, dest)) return false;
    const double amount = fraction * world.assigned_work[node];
    if (amount <= kTiny) return false;
    Action a;
    a.kind = ActionKind::TaskOffload;
    a.node = node;
    a.offload_dest = dest;
    a.work_amount = amount;
    a.touched_resources = touched_for(a, world);
    out = std::move(a);
    return true;
}

bool make_redirect_action(const WorldState& world, NodeId node, Action& out) {
    // Reroute a flow away from the node's worst incident link, cheapest
    // alternate first. Falls back over incident links in queue order.
    LinkId link;
    if (!worst_incident_link(world, node, link)) {
        // All incident links idle or down; try any down incident link so dead
        // flows can still be revived.
        bool have = false;
        for (LinkId lid : world.topology.incident[node]) {
            if (!link_up(world, lid, world.clock)) {
                link = lid;
                have = true;
                break;
            }
        }
        if (!have) return false;
    }
    FlowId flow;
    std::vector<LinkId> alt;
    if (!flow_over_link_with_alternate(world, link, flow, alt)) return false;
    Action a;
    a.kind = ActionKind::FlowRedirect;
    a.flow = flow;
    a.old_path = world.flows[flow].path;
    a.new_path = std::move(alt);
    a.touched_resources = touched_for(a, world);
    out = std::move(a);
    return true;
}

bool make_realloc_action(const WorldState& world, LinkId link, double delta, Action& out) {
    if (!link_up(world, link, world.clock)) return false;
    LinkId donor;
    if (!donor_for_link(world, link, delta, donor)) return false;
    Action a;
    a.kind = ActionKind::BandwidthRealloc;
    a.link = link;
    a.capacity_delta = delta;
    a.donor_link = donor;
    a.has_donor = true;
    a.touched_resources = touched_for(a, world);
    out = std::move(a);
    return true;
}

std::vector<Action> drop_conflicts(std::vector<Action> actions, int max_actions) {
    std::vector<Action> kept;
    for (Action& a : actions) {
        if (static_cast<int>(kept.size()) >= max_actions) break;
        bool conflicts = false;
        for (const Action& k : kept)
            if (actions_conflict(k, a)) {
                conflicts = true;
                break;
            }
        if (!conflicts) kept.push_back(std::move(a));
    }
    for (std::uint32_t i = 0; i < kept.size(); ++i) kept[i].id = i;
    return kept;
}

ActionSet TetController::decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                                const WorldState& world) {
    (void)graph;
    // Every breach fires, every tick: eta -> queue_mgmt, gamma -> offload,
    // lambda -> redirect. Deliberately no memory of what fired last tick.
    std::vector<Action> actions;
    for (const TelemetryRecord& rec : snapshot.records) {
        Action a;
        if (rec.eta > cfg_.queue_thresh &&
            make_queue_action(world, rec.node_id, cfg_.drain_fraction, a))
            actions.push_back(a);
        if (rec.gamma > cfg_.cpu_thresh &&
            make_offload_action(world, rec.node_id, cfg_.offload_fraction, a))
            actions.push_back(a);
        if (rec.lambda > cfg_.delay_thresh_ms && make_redirect_action(world, rec.node_id, a))
            actions.push_back(a);
    }
    const int candidates = static_cast<int>(actions.size());
    return as_unscored_set(drop_conflicts(std::move(actions), cfg_.max_actions), candidates);
}

RuleMetric rule_metric_from_string(const std::string& name) {
    if (name == "lambda") return RuleMetric::Lambda;
    if (name == "delta") return RuleMetric::Delta;
    if (name == "gamma") return RuleMetric::Gamma;
    if (name == "eta") return RuleMetric::Eta;
    if (name == "epsilon") return RuleMetric::Epsilon;
    throw std::invalid_argument("unknown rule metric: " + name);
}

RuleOp rule_op_from_string(const std::string& name) {
    if (name == "gt") return RuleOp::Gt;
    if (name == "ge") return RuleOp::Ge;
    if (name == "lt") return RuleOp::Lt;
    if (name == "le") return RuleOp::Le;
    throw std::invalid_argument("unknown rule op: " + name);
}

const char* to_string(RuleMetric metric) {
    switch (metric) {
        case RuleMetric::Lambda: return "lambda";
        case RuleMetric::Delta: return "delta";
        case RuleMetric::Gamma: return "gamma";
        case RuleMetric::Eta: return "eta";
        case RuleMetric::Epsilon: return "epsilon";
    }
    return "unknown";
}

const char* to_string(RuleOp op) {
    switch (op) {
        case RuleOp::Gt: return "gt";
        case RuleOp::Ge: return "ge";
        case RuleOp::Lt: return "lt";
        case RuleOp::Le: return "le";
    }
    return "unknown";
}

namespace {

double metric_value(const TelemetryRecord& rec, RuleMetric metric) {
    switch (metric) {
        case RuleMetric::Lambda: return rec.lambda;
        case RuleMetric::Delta: return rec.delta;
        case RuleMetric::Gamma: return rec.gamma;
        case RuleMetric::Eta: return rec.eta;
        case RuleMetric::Epsilon: return static_cast<double>(rec.epsilon);
    }
    return 0.0;
}

bool rule_matches(const HeuristicRule& rule, const TelemetryRecord& rec) {
    const double v = metric_value(rec, rule.metric);
    switch (rule.op) {
        case RuleOp::Gt: return v > rule.value;
        case RuleOp::Ge: return v >= rule.value;
        case RuleOp::Lt: return v < rule.value;
        case RuleOp::Le: return v <= rule.value;
    }
    return false;
}

} // namespace

ActionSet HrsController::decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                                const WorldState& world) {
    (void)graph;
    std::vector<Action> actions;
    for (const TelemetryRecord& rec : snapshot.records) {
        for (const HeuristicRule& rule : cfg_.rules) {
            if (!rule_matches(rule, rec)) continue;
            Action a;
            bool built = false;
            switch (rule.action) {
                case ActionKind::QueueMgmt:
                    built = make_queue_action(world, rec.node_id, cfg_.drain_fraction, a);
                    break;
                case ActionKind::TaskOffload:
                    built = make_offload_action(world, rec.node_id, cfg_.offload_fraction, a);
                    break;
                case ActionKind::FlowRedirect:
                    built = make_redirect_action(world, rec.node_id, a);
                    break;
                case ActionKind::BandwidthRealloc: {
                    LinkId link;
                    if (worst_incident_link(world, rec.node_id, link))
                        built = make_realloc_action(world, link, cfg_.realloc_step, a);
                    break;
                }
            }
            if (built) actions.push_back(std::move(a));
            break; // first matching rule wins for this node
        }
    }
    const int candidates = static_cast<int>(actions.size());
    return as_unscored_set(drop_conflicts(std::move(actions), cfg_.max_actions), candidates);
}

QTable::QTable(double learning_rate, double discount) : lr_(learning_rate), discount_(discount) {
    if (!(lr_ > 0.0 && lr_ <= 1.0))
        throw std::invalid_argument("qtable: learning rate outside (0,1]");
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw std::invalid_argument("qtable: discount outside [0,1)");
}

int QTable::best_kind(int state) const {
    int best = 0;
    for (int kind = 1; kind < kActionKindCount; ++kind)
        if (value(state, kind) > value(state, best)) best = kind;
    return best;
}

void QTable::update(int state, int kind, double reward, int next_state) {
    const double max_next = value(next_state, best_kind(next_state));
    double& v = table_[index(state, kind)];
    v = v + lr_ * (reward + discount_ * max_next - v);
}

RlcController::RlcController(RlcConfig cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed ^ 0x51CA97E1D00Dull), qtable_(cfg.learning_rate, cfg.discount) {
    if (cfg_.epsilon_start < 0.0 || cfg_.epsilon_start > 1.0 || cfg_.epsilon_end < 0.0 ||
        cfg_.epsilon_end > 1.0)
        throw std::invalid_argument("rlc: epsilon values outside [0,1]");
    if (cfg_.total_steps < 1) throw std::invalid_argument("rlc: total_steps must be >= 1");
}

double RlcController::epsilon_at(std::int64_t tick) const {
    if (cfg_.total_steps <= 1) return cfg_.epsilon_end;
    const double t = std::clamp(static_cast<double>(tick) / static_cast<double>(cfg_.total_steps - 1),
                                0.0, 1.0);
    return cfg_.epsilon_start + (cfg_.epsilon_end - cfg_.epsilon_start) * t;
}

int RlcController::bucket_state(const TelemetrySnapshot& snapshot, double delay_thresh_ms) {
    double mean_lambda = 0.0;
    double mean_gamma = 0.0;
    int anomalies = 0;
    for (const TelemetryRecord& rec : snapshot.records) {
        mean_lambda += rec.lambda;
        mean_gamma += rec.gamma;
        anomalies += rec.epsilon;
    }
    const double n = std::max<std::size_t>(snapshot.records.size(), 1);
    mean_lambda /= n;
    mean_gamma /= n;

    const int lam_bucket = mean_lambda < 0.5 * delay_thresh_ms ? 0
                           : mean_lambda < delay_thresh_ms    ? 1
                                                              : 2;
    const int gam_bucket = mean_gamma < 0.3 ? 0 : mean_gamma < 0.6 ? 1 : 2;
    const int anom_bucket = anomalies == 0 ? 0 : anomalies <= 3 ? 1 : 2;
    return lam_bucket * 9 + gam_bucket * 3 + anom_bucket;
}

ActionSet RlcController::decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                                const WorldState& world) {
    (void)graph;
    const int state = bucket_state(snapshot, delay_thresh_ms_);
    const double eps = epsilon_at(snapshot.tick);
    const int kind = rng_.next_unit() < eps ? static_cast<int>(rng_.next_below(kActionKindCount))
                                            : qtable_.best_kind(state);
    choices_.push_back(kind);

    // Instantiate the chosen kind on the worst offender. A target only
    // qualifies while it is actually offending (deep backlog, hot cpu, or a
    // dead flow); in healthy states the set stays empty. The choice still
    // feeds the value update either way.
    constexpr double kOffendingUtilization = 0.5;
    Action a;
    bool built = false;
    LinkId worst_link = 0;
    bool have_link = worst_queue_link(world, worst_link);
    if (have_link) {
        const double cap = std::max(effective_capacity(world, worst_link, world.clock), 1e-9);
        if (world.queue_len[worst_link] / cap < kOffendingUtilization) have_link = false;
    }
    switch (static_cast<ActionKind>(kind)) {
        case ActionKind::FlowRedirect: {
            if (have_link) {
                FlowId flow;
                std::vector<LinkId> alt;
                if (flow_over_link_with_alternate(world, worst_link, flow, alt)) {
                    a.kind = ActionKind::FlowRedirect;
                    a.flow = flow;
                    a.old_path = world.flows[flow].path;
                    a.new_path = std::move(alt);
                    built = true;
                }
            }
            if (!built) {
                for (const Flow& flow : world.flows) {
                    if (flow_active(world, flow.id, world.clock)) continue;
                    LinkId down = flow.path.front();
                    for (LinkId lid : flow.path)
                        if (!link_up(world, lid, world.clock)) {
                            down = lid;
                            break;
                        }
                    std::vector<LinkId> alt;
                    if (alternate_path(world, flow.id, down, alt)) {
                        a.kind = ActionKind::FlowRedirect;
                        a.flow = flow.id;
                        a.old_path = flow.path;
                        a.new_path = std::move(alt);
                        built = true;
                        break;
                    }
                }
            }
            break;
        }
        case ActionKind::BandwidthRealloc:
            if (have_link) built = make_realloc_action(world, worst_link, cfg_.realloc_step, a);
            break;
        case ActionKind::QueueMgmt:
            if (have_link) {
                a.kind = ActionKind::QueueMgmt;
                a.link = worst_link;
                a.drain_fraction = cfg_.drain_fraction;
                built = true;
            }
            break;
        case ActionKind::TaskOffload: {
            NodeId hottest = 0;
            double best = -1.0;
            for (const TelemetryRecord& rec : snapshot.records)
                if (rec.gamma > best) {
                    best = rec.gamma;
                    hottest = rec.node_id;
                }
            if (best >= 0.75) built = make_offload_action(world, hottest, cfg_.offload_fraction, a);
            break;
        }
    }

    pending_ = true;
    prev_state_ = state;
    prev_kind_ = kind;
    prev_delay_ = snapshot_mean_delay(snapshot);
    throughput_hist_.push_back(snapshot_mean_throughput(snapshot));
    if (throughput_hist_.size() > 8) throughput_hist_.erase(throughput_hist_.begin());
    prev_var_ = population_variance(throughput_hist_);

    std::vector<Action> actions;
    if (built) {
        a.touched_resources = touched_for(a, world);
        actions.push_back(std::move(a));
    }
    const int candidates = static_cast<int>(actions.size());
    return as_unscored_set(drop_conflicts(std::move(actions), 1), candidates);
}

void RlcController::notify(const EnforcementReport& report, const TelemetrySnapshot& next_snapshot) {
    (void)report;
    if (!pending_) return;
    pending_ = false;

    const double next_delay = snapshot_mean_delay(next_snapshot);
    std::vector<double> hist = throughput_hist_;
    hist.push_back(snapshot_mean_throughput(next_snapshot));
    if (hist.size() > 8) hist.erase(hist.begin());
    const double next_var = population_variance(hist);

    const double delay_term =
        prev_delay_ > kTiny ? std::clamp((prev_delay_ - next_delay) / prev_delay_, -1.0, 1.0) : 0.0;
    const double var_term =
        prev_var_ > kTiny ? std::clamp((prev_var_ - next_var) / prev_var_, -1.0, 1.0) : 0.0;
    const double reward = delay_term + var_term;

    const int next_state = bucket_state(next_snapshot, delay_thresh_ms_);
    qtable_.update(prev_state_, prev_kind_, reward, next_state);
}

} // namespace kdnsim
