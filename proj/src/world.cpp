#include "kdnsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kdnsim {

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::LoadFluctuation: return "load_fluctuation";
        case FaultKind::LinkDegradation: return "link_degradation";
        case FaultKind::NodeFailure: return "node_failure";
    }
    return "unknown";
}

FaultKind fault_kind_from_string(const std::string& name) {
    if (name == "load_fluctuation") return FaultKind::LoadFluctuation;
    if (name == "link_degradation") return FaultKind::LinkDegradation;
    if (name == "node_failure") return FaultKind::NodeFailure;
    throw std::invalid_argument("unknown fault kind: " + name);
}

const char* to_string(Adapter adapter) {
    switch (adapter) {
        case Adapter::Sdn: return "sdn";
        case Adapter::OpcUaLike: return "opcua_like";
        case Adapter::ModbusLike: return "modbus_like";
    }
    return "unknown";
}

const char* to_string(Verb verb) {
    switch (verb) {
        case Verb::InstallFlowRule: return "install_flow_rule";
        case Verb::RemoveFlowRule: return "remove_flow_rule";
        case Verb::SetCapacity: return "set_capacity";
        case Verb::SetQueuePolicy: return "set_queue_policy";
        case Verb::WriteSetpoint: return "write_setpoint";
    }
    return "unknown";
}

const char* to_string(NackReason reason) {
    switch (reason) {
        case NackReason::None: return "none";
        case NackReason::TargetDown: return "target_down";
        case NackReason::UnknownTarget: return "unknown_target";
        case NackReason::Infeasible: return "infeasible";
    }
    return "unknown";
}

bool WorldState::operator==(const WorldState& other) const {
    auto flows_equal = [](const Flow& a, const Flow& b) {
        return a.id == b.id && a.src == b.src && a.dst == b.dst && a.path == b.path &&
               a.offered_rate == b.offered_rate && a.priority == b.priority;
    };
    if (!(topology == other.topology)) return false;
    if (flows.size() != other.flows.size()) return false;
    for (std::size_t i = 0; i < flows.size(); ++i)
        if (!flows_equal(flows[i], other.flows[i])) return false;
    return queue_len == other.queue_len && cpu_load == other.cpu_load &&
           assigned_work == other.assigned_work && delivered_last == other.delivered_last &&
           arrivals_last == other.arrivals_last &&
           dropped_pending == other.dropped_pending && dropped_last == other.dropped_last &&
           staged_rules == other.staged_rules && clock == other.clock && dt_ms == other.dt_ms;
}

namespace {

void validate_flow(const Topology& topo, const Flow& flow) {
    if (flow.src >= topo.nodes.size() || flow.dst >= topo.nodes.size())
        throw std::invalid_argument("flow endpoints reference unknown nodes");
    if (flow.offered_rate < 0.0) throw std::invalid_argument("flow offered_rate must be >= 0");
    if (flow.path.empty()) throw std::invalid_argument("flow path must not be empty");
    NodeId cur = flow.src;
    for (LinkId lid : flow.path) {
        if (lid >= topo.links.size()) throw std::invalid_argument("flow path uses unknown link");
        const LinkSpec& link = topo.links[lid];
        if (link.a != cur && link.b != cur)
            throw std::invalid_argument("flow path is not contiguous");
        cur = link.a == cur ? link.b : link.a;
    }
    if (cur != flow.dst) throw std::invalid_argument("flow path does not end at dst");
}

// A staged rule set commits only when it forms one simple src->dst walk that
// consumes every staged link and all of them are up.
bool staged_forms_walk(const WorldState& world, const Flow& flow,
                       const std::vector<LinkId>& staged, std::vector<LinkId>& walk_out) {
    if (staged.empty()) return false;
    for (LinkId lid : staged)
        if (!link_up(world, lid, world.clock)) return false;
    std::vector<bool> used(staged.size(), false);
    std::vector<LinkId> walk;
    NodeId cur = flow.src;
    for (;;) {
        int found = -1;
        for (std::size_t i = 0; i < staged.size(); ++i) {
            if (used[i]) continue;
            const LinkSpec& link = world.topology.links[staged[i]];
            if (link.a == cur || link.b == cur) {
                if (found >= 0) return false; // branching, not a walk
                found = static_cast<int>(i);
            }
        }
        if (found < 0) break;
        used[static_cast<std::size_t>(found)] = true;
        walk.push_back(staged[static_cast<std::size_t>(found)]);
        cur = world.topology.peer(staged[static_cast<std::size_t>(found)], cur);
    }
    if (cur != flow.dst) return false;
    if (walk.size() != staged.size()) return false;
    walk_out = std::move(walk);
    return true;
}

} // namespace

WorldState make_world(Topology topology, std::vector<Flow> flows, double dt_ms,
                      std::uint64_t seed) {
    if (dt_ms <= 0.0) throw std::invalid_argument("dt_ms must be > 0");
    WorldState world;
    world.topology = std::move(topology);
    for (const Flow& f : flows) validate_flow(world.topology, f);
    world.flows = std::move(flows);
    world.queue_len.assign(world.topology.links.size(), 0.0);
    world.delivered_last.assign(world.topology.links.size(), 0.0);
    world.arrivals_last.assign(world.topology.links.size(), 0.0);
    world.dropped_pending.assign(world.topology.links.size(), 0.0);
    world.dropped_last.assign(world.topology.links.size(), 0.0);
    world.assigned_work.resize(world.topology.nodes.size());
    world.cpu_load.resize(world.topology.nodes.size());
    for (const NodeSpec& node : world.topology.nodes) {
        world.assigned_work[node.id] = node.base_work;
        world.cpu_load[node.id] = std::min(1.0, node.base_work / node.cpu_capacity);
    }
    // Staged rule sets are kept sorted; membership is what matters, and a
    // canonical order keeps rollback byte-exact.
    world.staged_rules.resize(world.flows.size());
    for (const Flow& f : world.flows) {
        std::vector<LinkId> staged = f.path;
        std::sort(staged.begin(), staged.end());
        world.staged_rules[f.id] = std::move(staged);
    }
    world.dt_ms = dt_ms;
    world.rng_seed = seed;
    return world;
}

double effective_capacity(const WorldState& world, LinkId link, Tick tick) {
    double cap = world.topology.links[link].capacity;
    for (const FaultEvent& f : world.active_faults)
        if (f.kind == FaultKind::LinkDegradation && f.target == link && f.active_at(tick))
            cap *= f.magnitude;
    return cap;
}

double effective_rate(const WorldState& world, FlowId flow, Tick tick) {
    double rate = world.flows[flow].offered_rate;
    for (const FaultEvent& f : world.active_faults)
        if (f.kind == FaultKind::LoadFluctuation && f.target == flow && f.active_at(tick))
            rate *= f.magnitude;
    return rate;
}

bool node_failed(const WorldState& world, NodeId node, Tick tick) {
    for (const FaultEvent& f : world.active_faults)
        if (f.kind == FaultKind::NodeFailure && f.target == node && f.active_at(tick))
            return true;
    return false;
}

bool link_up(const WorldState& world, LinkId link, Tick tick) {
    const LinkSpec& spec = world.topology.links[link];
    if (!spec.up) return false;
    return !node_failed(world, spec.a, tick) && !node_failed(world, spec.b, tick);
}

double link_delay_ms(const WorldState& world, LinkId link, Tick tick) {
    const double cap = std::max(effective_capacity(world, link, tick), 1e-9);
    return world.topology.links[link].base_delay_ms + world.queue_len[link] / cap;
}

bool flow_active(const WorldState& world, FlowId flow, Tick tick) {
    for (LinkId lid : world.flows[flow].path)
        if (!link_up(world, lid, tick)) return false;
    return true;
}

double mean_flow_delay_ms(const WorldState& world, Tick tick) {
    if (world.flows.empty()) return 0.0;
    double sum = 0.0;
    for (const Flow& flow : world.flows) {
        if (flow_active(world, flow.id, tick)) {
            double d = 0.0;
            for (LinkId lid : flow.path) d += link_delay_ms(world, lid, tick);
            sum += d;
        } else {
            sum += world.penalty_delay_ms;
        }
    }
    return sum / static_cast<double>(world.flows.size());
}

double total_delivered(const WorldState& world) {
    double sum = 0.0;
    for (double d : world.delivered_last) sum += d;
    return sum;
}

double link_delivered_net(const WorldState& world, LinkId link) {
    return std::max(0.0, world.delivered_last[link] - world.dropped_last[link]);
}

double total_delivered_net(const WorldState& world) {
    double sum = 0.0;
    for (LinkId lid = 0; lid < world.delivered_last.size(); ++lid)
        sum += link_delivered_net(world, lid);
    return sum;
}

double flow_throughput(const WorldState& world, FlowId flow) {
    const Flow& f = world.flows[flow];
    if (!flow_active(world, flow, world.clock)) return 0.0;
    const double rate = effective_rate(world, flow, world.clock);
    if (rate <= 0.0) return 0.0;
    double egress = rate;
    for (LinkId lid : f.path) {
        const double arrivals = world.arrivals_last[lid];
        if (arrivals <= 1e-12) continue; // fresh rule, no sample yet to constrain
        const double share = link_delivered_net(world, lid) * (rate / arrivals);
        egress = std::min(egress, share);
    }
    return std::max(egress, 0.0);
}

double total_flow_throughput(const WorldState& world) {
    double sum = 0.0;
    for (const Flow& f : world.flows) sum += flow_throughput(world, f.id);
    return sum;
}

double total_service_throughput(const WorldState& world) {
    double sum = 0.0;
    for (const Flow& f : world.flows) {
        const double demand = effective_rate(world, f.id, world.clock);
        if (demand <= 1e-12) continue;
        const double served = std::clamp(flow_throughput(world, f.id) / demand, 0.0, 1.0);
        sum += served * f.offered_rate;
    }
    return sum;
}

void step(WorldState& world) {
    const Tick now = world.clock + 1;
    const std::size_t link_count = world.topology.links.size();

    world.dropped_last = world.dropped_pending;
    std::fill(world.dropped_pending.begin(), world.dropped_pending.end(), 0.0);

    std::vector<double> arrivals(link_count, 0.0);
    for (const Flow& flow : world.flows) {
        if (!flow_active(world, flow.id, now)) continue;
        const double rate = effective_rate(world, flow.id, now);
        for (LinkId lid : flow.path) arrivals[lid] += rate;
    }

    world.arrivals_last = arrivals;

    for (LinkId lid = 0; lid < link_count; ++lid) {
        if (!link_up(world, lid, now)) {
            world.delivered_last[lid] = 0.0; // backlog freezes on a down link
            continue;
        }
        const double cap = effective_capacity(world, lid, now);
        const double backlog = world.queue_len[lid] + arrivals[lid];
        const double delivered = std::min(cap, backlog);
        world.delivered_last[lid] = delivered;
        world.queue_len[lid] = backlog - delivered;
    }

    for (const NodeSpec& node : world.topology.nodes) {
        if (node_failed(world, node.id, now)) {
            world.cpu_load[node.id] = 0.0;
            continue;
        }
        double through = 0.0;
        for (LinkId lid : world.topology.incident[node.id]) through += world.delivered_last[lid];
        const double work = world.assigned_work[node.id] + world.work_per_packet * through;
        world.cpu_load[node.id] = std::min(1.0, std::max(0.0, work / node.cpu_capacity));
    }

    world.clock = now;
}

void inject_fault(WorldState& world, const FaultEvent& fault) {
    if (fault.duration_ticks < 1) throw std::invalid_argument("fault duration must be >= 1");
    if (fault.magnitude <= 0.0) throw std::invalid_argument("fault magnitude must be > 0");
    const char* kind = to_string(fault.kind);
    switch (fault.kind) {
        case FaultKind::LoadFluctuation:
            if (fault.target >= world.flows.size())
                throw std::invalid_argument(std::string(kind) + ": unknown flow id " +
                                            std::to_string(fault.target));
            break;
        case FaultKind::LinkDegradation:
            if (fault.target >= world.topology.links.size())
                throw std::invalid_argument(std::string(kind) + ": unknown link id " +
                                            std::to_string(fault.target));
            break;
        case FaultKind::NodeFailure:
            if (fault.target >= world.topology.nodes.size())
                throw std::invalid_argument(std::string(kind) + ": unknown node id " +
                                            std::to_string(fault.target));
            break;
    }
    world.active_faults.push_back(fault);
}

namespace {

CommandResult nack(NackReason reason, std::string detail) {
    return CommandResult{false, reason, std::move(detail)};
}

CommandResult ack() { return CommandResult{true, NackReason::None, {}}; }

} // namespace

CommandResult apply_command(WorldState& world, const Command& cmd) {
    const Tick now = world.clock;
    switch (cmd.verb) {
        case Verb::InstallFlowRule: {
            if (cmd.flow >= world.flows.size())
                return nack(NackReason::UnknownTarget, "flow " + std::to_string(cmd.flow));
            if (cmd.link >= world.topology.links.size())
                return nack(NackReason::UnknownTarget, "link " + std::to_string(cmd.link));
            if (!cmd.compensation && !link_up(world, cmd.link, now))
                return nack(NackReason::Infeasible,
                            "link " + std::to_string(cmd.link) + " is down");
            std::vector<LinkId>& staged = world.staged_rules[cmd.flow];
            auto pos = std::lower_bound(staged.begin(), staged.end(), cmd.link);
            if (pos != staged.end() && *pos == cmd.link)
                return nack(NackReason::Infeasible,
                            "rule already installed on link " + std::to_string(cmd.link));
            staged.insert(pos, cmd.link);
            std::vector<LinkId> walk;
            if (staged_forms_walk(world, world.flows[cmd.flow], staged, walk))
                world.flows[cmd.flow].path = std::move(walk);
            return ack();
        }
        case Verb::RemoveFlowRule: {
            if (cmd.flow >= world.flows.size())
                return nack(NackReason::UnknownTarget, "flow " + std::to_string(cmd.flow));
            if (cmd.link >= world.topology.links.size())
                return nack(NackReason::UnknownTarget, "link " + std::to_string(cmd.link));
            std::vector<LinkId>& staged = world.staged_rules[cmd.flow];
            auto it = std::find(staged.begin(), staged.end(), cmd.link);
            if (it == staged.end())
                return nack(NackReason::Infeasible,
                            "no rule for link " + std::to_string(cmd.link));
            staged.erase(it);
            return ack();
        }
        case Verb::SetCapacity: {
            if (cmd.link >= world.topology.links.size())
                return nack(NackReason::UnknownTarget, "link " + std::to_string(cmd.link));
            LinkSpec& link = world.topology.links[cmd.link];
            if (cmd.compensation) {
                link.capacity = cmd.capacity_delta; // snapshotted absolute value
                return ack();
            }
            if (!link_up(world, cmd.link, now))
                return nack(NackReason::TargetDown, "link " + std::to_string(cmd.link));
            if (link.capacity + cmd.capacity_delta <= 0.0)
                return nack(NackReason::Infeasible, "capacity would drop to zero");
            if (cmd.has_donor) {
                if (cmd.donor_link >= world.topology.links.size())
                    return nack(NackReason::UnknownTarget,
                                "donor link " + std::to_string(cmd.donor_link));
                if (cmd.donor_link == cmd.link)
                    return nack(NackReason::Infeasible, "donor equals target");
                if (!link_up(world, cmd.donor_link, now))
                    return nack(NackReason::TargetDown,
                                "donor link " + std::to_string(cmd.donor_link));
                LinkSpec& donor = world.topology.links[cmd.donor_link];
                if (donor.capacity - cmd.capacity_delta <= 0.0)
                    return nack(NackReason::Infeasible, "donor lacks headroom");
                donor.capacity -= cmd.capacity_delta;
            }
            link.capacity += cmd.capacity_delta;
            return ack();
        }
        case Verb::SetQueuePolicy: {
            if (cmd.link >= world.topology.links.size())
                return nack(NackReason::UnknownTarget, "link " + std::to_string(cmd.link));
            if (cmd.compensation) {
                if (cmd.drain_fraction < 0.0)
                    return nack(NackReason::Infeasible, "negative queue restore");
                // Roll back the drop charge along with the queue itself.
                world.dropped_pending[cmd.link] -=
                    std::max(0.0, cmd.drain_fraction - world.queue_len[cmd.link]);
                if (world.dropped_pending[cmd.link] < 0.0) world.dropped_pending[cmd.link] = 0.0;
                world.queue_len[cmd.link] = cmd.drain_fraction; // snapshotted queue
                return ack();
            }
            if (!link_up(world, cmd.link, now))
                return nack(NackReason::TargetDown, "link " + std::to_string(cmd.link));
            if (cmd.drain_fraction < 0.0 || cmd.drain_fraction > 1.0)
                return nack(NackReason::Infeasible, "drain_fraction outside [0,1]");
            world.dropped_pending[cmd.link] += world.queue_len[cmd.link] * cmd.drain_fraction;
            world.queue_len[cmd.link] *= (1.0 - cmd.drain_fraction);
            return ack();
        }
        case Verb::WriteSetpoint: {
            if (cmd.node >= world.topology.nodes.size())
                return nack(NackReason::UnknownTarget, "node " + std::to_string(cmd.node));
            if (cmd.compensation) {
                if (cmd.work_delta < 0.0)
                    return nack(NackReason::Infeasible, "negative work restore");
                world.assigned_work[cmd.node] = cmd.work_delta; // snapshotted work
                return ack();
            }
            if (node_failed(world, cmd.node, now))
                return nack(NackReason::TargetDown, "node " + std::to_string(cmd.node));
            const double after = world.assigned_work[cmd.node] + cmd.work_delta;
            if (after < 0.0)
                return nack(NackReason::Infeasible, "assigned work would go negative");
            world.assigned_work[cmd.node] = after;
            return ack();
        }
    }
    return nack(NackReason::Infeasible, "unknown verb");
}

std::string describe(const WorldState& world) {
    std::ostringstream out;
    out.precision(12);
    out << "clock=" << world.clock << " dt=" << world.dt_ms << "\n";
    for (const LinkSpec& link : world.topology.links) {
        out << "link " << link.id << " " << link.a << "-" << link.b
            << " cap=" << link.capacity << " delay=" << link.base_delay_ms
            << " up=" << link.up << " q=" << world.queue_len[link.id]
            << " delivered=" << world.delivered_last[link.id] << "\n";
    }
    for (const NodeSpec& node : world.topology.nodes) {
        out << "node " << node.id << " role=" << to_string(node.role)
            << " load=" << world.cpu_load[node.id] << " work=" << world.assigned_work[node.id]
            << "\n";
    }
    for (const Flow& flow : world.flows) {
        out << "flow " << flow.id << " " << flow.src << "->" << flow.dst << " rate="
            << flow.offered_rate << " path=";
        for (std::size_t i = 0; i < flow.path.size(); ++i)
            out << (i ? "," : "") << flow.path[i];
        out << " staged=";
        for (std::size_t i = 0; i < world.staged_rules[flow.id].size(); ++i)
            out << (i ? "," : "") << world.staged_rules[flow.id][i];
        out << "\n";
    }
    return out.str();
}

} // namespace kdnsim
