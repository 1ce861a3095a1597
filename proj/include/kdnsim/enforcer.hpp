#pragma once

#include <functional>
#include <vector>

#include "kdnsim/actions.hpp"
#include "kdnsim/rng.hpp"
#include "kdnsim/world.hpp"

namespace kdnsim {

struct CommandOutcome {
    Command command;
    bool ack = false;
    NackReason reason = NackReason::None;
    bool skipped = false;      // scheduled but not attempted (earlier nack)
    bool rolled_back = false;  // applied, then compensated
    double latency_ms = 0.0;
};

struct EnforcementReport {
    Tick dispatch_tick = 0;
    Tick completion_tick = 0;
    double total_latency_ms = 0.0;
    std::vector<CommandOutcome> outcomes;

    bool all_acked() const;
    int acked_actions = 0;
    int failed_actions = 0;
};

// Deterministic action -> command mapping. Same action, same command list.
// flow_redirect: remove one rule per old hop, install one per new hop;
// bandwidth_realloc: one set_capacity; queue_mgmt: one set_queue_policy;
// task_offload: a drain/accept setpoint pair routed to the OT adapter
// matching each endpoint's device class.
std::vector<Command> compile_action(const Action& action, const WorldState& world);

struct EnforceOptions {
    // Test hook: force a nack at these positions in the flattened command
    // sequence (position = index over all commands in dispatch order).
    std::function<bool(std::size_t)> forced_nack;
};

// Executes each action's commands in order against the world. On a nack the
// action's remaining commands are skipped and its applied commands are
// compensated in reverse, so every action lands atomically; other actions in
// the batch are unaffected. Simulated per-command latency is drawn from the
// seeded stream per adapter class (sdn 1-2 ms, OT 3-6 ms).
class ControlEnforcer {
public:
    explicit ControlEnforcer(std::uint64_t seed) : rng_(seed) {}

    EnforcementReport enforce(WorldState& world, const std::vector<Action>& actions,
                              const EnforceOptions& options = {});

private:
    Rng rng_;
};

} // namespace kdnsim
