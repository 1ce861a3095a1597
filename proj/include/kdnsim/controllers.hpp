#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kdnsim/decision.hpp"
#include "kdnsim/enforcer.hpp"
#include "kdnsim/knowledge.hpp"
#include "kdnsim/telemetry.hpp"

namespace kdnsim {

// Uniform surface the loop driver talks to: observe, emit a conflict-free
// ActionSet, and take post-enforcement feedback.
class Controller {
public:
    virtual ~Controller() = default;
    virtual const char* name() const = 0;
    virtual ActionSet decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                             const WorldState& world) = 0;
    virtual void notify(const EnforcementReport& report, const TelemetrySnapshot& next_snapshot) {
        (void)report;
        (void)next_snapshot;
    }
};

// Knowledge-driven pipeline: enumerate candidates over the graph, score
// utility/cost on the cloned model, select via the penalized objective.
class KdnController final : public Controller {
public:
    explicit KdnController(DecisionConfig cfg) : cfg_(cfg) { validate(cfg_); }
    const char* name() const override { return "kdn"; }
    ActionSet decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                     const WorldState& world) override;

private:
    DecisionConfig cfg_;
};

struct TetConfig {
    double delay_thresh_ms = 10.0;
    double queue_thresh = 40.0;
    double cpu_thresh = 0.9;
    double drain_fraction = 0.5;
    double offload_fraction = 0.3;
    int max_actions = 16;
};

// Threshold-triggered: every breach fires its bound action immediately, every
// tick, with no hysteresis or cooldown.
class TetController final : public Controller {
public:
    explicit TetController(TetConfig cfg) : cfg_(cfg) {}
    const char* name() const override { return "tet"; }
    ActionSet decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                     const WorldState& world) override;

private:
    TetConfig cfg_;
};

enum class RuleMetric : std::uint8_t { Lambda = 0, Delta, Gamma, Eta, Epsilon };
enum class RuleOp : std::uint8_t { Gt = 0, Ge, Lt, Le };

RuleMetric rule_metric_from_string(const std::string& name);
RuleOp rule_op_from_string(const std::string& name);
const char* to_string(RuleMetric metric);
const char* to_string(RuleOp op);

struct HeuristicRule {
    RuleMetric metric = RuleMetric::Eta;
    RuleOp op = RuleOp::Gt;
    double value = 0.0;
    ActionKind action = ActionKind::QueueMgmt;
};

struct HrsConfig {
    std::vector<HeuristicRule> rules; // ordered; first match wins per node
    double drain_fraction = 0.5;
    double offload_fraction = 0.3;
    double realloc_step = 2.0;
    int max_actions = 4;
};

// Static rule table, first-match-wins per node, never adapts during a run.
class HrsController final : public Controller {
public:
    explicit HrsController(HrsConfig cfg) : cfg_(std::move(cfg)) {}
    const char* name() const override { return "hrs"; }
    ActionSet decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                     const WorldState& world) override;

private:
    HrsConfig cfg_;
};

struct RlcConfig {
    double learning_rate = 0.3; // in (0,1]
    double discount = 0.8;      // in [0,1)
    double epsilon_start = 0.5;
    double epsilon_end = 0.05;
    std::int64_t total_steps = 1000; // schedule horizon for the decay
    double drain_fraction = 0.5;
    double offload_fraction = 0.3;
    double realloc_step = 2.0;
};

// Tabular state buckets: lambda tercile x gamma tercile x anomaly-count
// bucket = 27 states, 4 action kinds.
class QTable {
public:
    QTable(double learning_rate, double discount);

    double value(int state, int kind) const { return table_[index(state, kind)]; }
    int best_kind(int state) const; // ties break toward the lowest kind index
    void update(int state, int kind, double reward, int next_state);

    static constexpr int kStates = 27;

private:
    static std::size_t index(int state, int kind) {
        return static_cast<std::size_t>(state) * kActionKindCount + static_cast<std::size_t>(kind);
    }
    double lr_;
    double discount_;
    std::array<double, kStates * kActionKindCount> table_{};
};

// Model-free value learner with epsilon-greedy exploration decaying linearly
// over the run. Reward is the realized one-step composite of delay reduction
// and throughput-variability reduction.
class RlcController final : public Controller {
public:
    RlcController(RlcConfig cfg, std::uint64_t seed);
    const char* name() const override { return "rlc"; }
    ActionSet decide(const TelemetrySnapshot& snapshot, const KnowledgeGraph& graph,
                     const WorldState& world) override;
    void notify(const EnforcementReport& report, const TelemetrySnapshot& next_snapshot) override;

    const QTable& qtable() const { return qtable_; }
    const std::vector<int>& choice_history() const { return choices_; }
    double epsilon_at(std::int64_t tick) const;

    static int bucket_state(const TelemetrySnapshot& snapshot, double delay_thresh_ms);
    void set_delay_thresh(double thresh_ms) { delay_thresh_ms_ = thresh_ms; }

private:
    RlcConfig cfg_;
    Rng rng_;
    QTable qtable_;
    double delay_thresh_ms_ = 10.0;
    std::vector<int> choices_;

    bool pending_ = false;
    int prev_state_ = 0;
    int prev_kind_ = 0;
    double prev_delay_ = 0.0;
    double prev_var_ = 0.0;
    std::vector<double> throughput_hist_;
};

// Baseline action builders shared by TET/HRS/RLC. Each returns false when no
// sensible target exists.
bool make_queue_action(const WorldState& world, NodeId node, double drain_fraction, Action& out);
bool make_offload_action(const WorldState& world, NodeId node, double fraction, Action& out);
bool make_redirect_action(const WorldState& world, NodeId node, Action& out);
bool make_realloc_action(const WorldState& world, LinkId link, double delta, Action& out);

// Drops later actions that share touched resources with earlier ones.
std::vector<Action> drop_conflicts(std::vector<Action> actions, int max_actions);

} // namespace kdnsim
