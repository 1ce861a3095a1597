#include "kdnsim/enforcer.hpp"

#include <cmath>
#include <stdexcept>

namespace kdnsim {

bool EnforcementReport::all_acked() const {
    for (const CommandOutcome& o : outcomes)
        if (!o.ack || o.rolled_back) return false;
    return true;
}

namespace {

Adapter ot_adapter_for(const WorldState& world, NodeId node) {
    return world.topology.nodes[node].role == NodeRole::Sensor ? Adapter::ModbusLike
                                                               : Adapter::OpcUaLike;
}

void validate_action(const Action& action, const WorldState& world) {
    switch (action.kind) {
        case ActionKind::FlowRedirect:
            if (action.flow >= world.flows.size())
                throw std::invalid_argument("compile: unknown flow");
            if (action.new_path.empty())
                throw std::invalid_argument("compile: redirect without a new path");
            for (LinkId lid : action.new_path)
                if (lid >= world.topology.links.size())
                    throw std::invalid_argument("compile: redirect path uses unknown link");
            break;
        case ActionKind::BandwidthRealloc:
            if (action.link >= world.topology.links.size())
                throw std::invalid_argument("compile: unknown link");
            if (action.capacity_delta == 0.0)
                throw std::invalid_argument("compile: realloc with zero delta");
            break;
        case ActionKind::QueueMgmt:
            if (action.link >= world.topology.links.size())
                throw std::invalid_argument("compile: unknown link");
            if (action.drain_fraction <= 0.0 || action.drain_fraction > 1.0)
                throw std::invalid_argument("compile: drain_fraction outside (0,1]");
            break;
        case ActionKind::TaskOffload:
            if (action.node >= world.topology.nodes.size() ||
                action.offload_dest >= world.topology.nodes.size())
                throw std::invalid_argument("compile: unknown node");
            if (action.work_amount <= 0.0)
                throw std::invalid_argument("compile: offload with non-positive work");
            break;
    }
}

} // namespace

std::vector<Command> compile_action(const Action& action, const WorldState& world) {
    validate_action(action, world);

    std::vector<Command> cmds;
    auto next = [&](Verb verb, Adapter adapter) {
        Command c;
        c.id = static_cast<std::uint64_t>(action.id) * 100 + cmds.size();
        c.action_id = action.id;
        c.verb = verb;
        c.adapter = adapter;
        c.issued_tick = world.clock;
        cmds.push_back(c);
        return cmds.size() - 1;
    };

    switch (action.kind) {
        case ActionKind::FlowRedirect: {
            const Flow& flow = world.flows[action.flow];
            for (LinkId lid : flow.path) {
                const std::size_t i = next(Verb::RemoveFlowRule, Adapter::Sdn);
                cmds[i].flow = action.flow;
                cmds[i].link = lid;
            }
            for (LinkId lid : action.new_path) {
                const std::size_t i = next(Verb::InstallFlowRule, Adapter::Sdn);
                cmds[i].flow = action.flow;
                cmds[i].link = lid;
            }
            break;
        }
        case ActionKind::BandwidthRealloc: {
            const std::size_t i = next(Verb::SetCapacity, Adapter::Sdn);
            cmds[i].link = action.link;
            cmds[i].capacity_delta = action.capacity_delta;
            cmds[i].has_donor = action.has_donor;
            cmds[i].donor_link = action.donor_link;
            break;
        }
        case ActionKind::QueueMgmt: {
            const std::size_t i = next(Verb::SetQueuePolicy, Adapter::Sdn);
            cmds[i].link = action.link;
            cmds[i].drain_fraction = action.drain_fraction;
            break;
        }
        case ActionKind::TaskOffload: {
            const std::size_t drain = next(Verb::WriteSetpoint, ot_adapter_for(world, action.node));
            cmds[drain].node = action.node;
            cmds[drain].work_delta = -action.work_amount;
            const std::size_t accept =
                next(Verb::WriteSetpoint, ot_adapter_for(world, action.offload_dest));
            cmds[accept].node = action.offload_dest;
            cmds[accept].work_delta = action.work_amount;
            break;
        }
    }
    return cmds;
}

EnforcementReport ControlEnforcer::enforce(WorldState& world, const std::vector<Action>& actions,
                                           const EnforceOptions& options) {
    EnforcementReport report;
    report.dispatch_tick = world.clock;

    // Undo entry per applied command: the compensation commands that restore
    // the touched state from snapshots taken just before application.
    struct Undo {
        std::size_t outcome_idx;
        std::vector<Command> restores;
    };

    auto restores_for = [&world](const Command& cmd) {
        std::vector<Command> restores;
        Command r = cmd;
        r.compensation = true;
        switch (cmd.verb) {
            case Verb::InstallFlowRule:
                r.verb = Verb::RemoveFlowRule;
                restores.push_back(r);
                break;
            case Verb::RemoveFlowRule:
                r.verb = Verb::InstallFlowRule;
                restores.push_back(r);
                break;
            case Verb::SetCapacity: {
                r.capacity_delta = world.topology.links[cmd.link].capacity;
                r.has_donor = false;
                restores.push_back(r);
                if (cmd.has_donor) {
                    Command d = r;
                    d.link = cmd.donor_link;
                    d.capacity_delta = world.topology.links[cmd.donor_link].capacity;
                    restores.push_back(d);
                }
                break;
            }
            case Verb::SetQueuePolicy:
                r.drain_fraction = world.queue_len[cmd.link];
                restores.push_back(r);
                break;
            case Verb::WriteSetpoint:
                r.work_delta = world.assigned_work[cmd.node];
                restores.push_back(r);
                break;
        }
        return restores;
    };

    std::size_t position = 0;
    for (const Action& action : actions) {
        const std::vector<Command> cmds = compile_action(action, world);
        std::vector<Undo> applied;
        bool failed = false;

        for (const Command& cmd : cmds) {
            CommandOutcome outcome;
            outcome.command = cmd;
            if (failed) {
                outcome.skipped = true;
                report.outcomes.push_back(outcome);
                ++position;
                continue;
            }

            // Latency is drawn for every attempted command, ack or nack.
            outcome.latency_ms = cmd.adapter == Adapter::Sdn ? rng_.next_range(1.0, 2.0)
                                                             : rng_.next_range(3.0, 6.0);
            report.total_latency_ms += outcome.latency_ms;

            std::vector<Command> restores = restores_for(cmd);
            CommandResult result;
            if (options.forced_nack && options.forced_nack(position)) {
                result.ack = false;
                result.reason = NackReason::Infeasible;
                result.detail = "injected";
            } else {
                result = apply_command(world, cmd);
            }
            outcome.ack = result.ack;
            outcome.reason = result.reason;

            const std::size_t idx = report.outcomes.size();
            report.outcomes.push_back(outcome);
            ++position;

            if (result.ack) {
                applied.push_back(Undo{idx, std::move(restores)});
            } else {
                failed = true;
                // Compensate already-applied commands of this action, newest first.
                for (auto it = applied.rbegin(); it != applied.rend(); ++it) {
                    for (const Command& restore : it->restores) {
                        const CommandResult undo = apply_command(world, restore);
                        if (!undo.ack)
                            throw std::logic_error("rollback command nacked: " + undo.detail);
                    }
                    report.outcomes[it->outcome_idx].rolled_back = true;
                }
            }
        }
        if (failed)
            ++report.failed_actions;
        else
            ++report.acked_actions;
    }

    const double ticks = world.dt_ms > 0.0 ? report.total_latency_ms / world.dt_ms : 0.0;
    report.completion_tick = report.dispatch_tick + static_cast<Tick>(std::ceil(ticks));
    return report;
}

} // namespace kdnsim
