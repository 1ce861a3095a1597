#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdnsim/topology.hpp"

namespace kdnsim {

using Tick = std::int64_t;

struct Flow {
    FlowId id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::vector<LinkId> path; // contiguous src->dst walk
    double offered_rate = 0.0; // packets/tick
    int priority = 0;
};

enum class FaultKind : std::uint8_t { LoadFluctuation = 0, LinkDegradation, NodeFailure };

const char* to_string(FaultKind kind);
FaultKind fault_kind_from_string(const std::string& name);

// Faults never mutate base parameters; effective values are recomputed from
// the active set each tick, so expiry restores the pre-fault state exactly.
// load_fluctuation targets a flow, link_degradation a link, node_failure a
// node. Concurrent multipliers on one target compose multiplicatively.
struct FaultEvent {
    FaultKind kind = FaultKind::LoadFluctuation;
    std::uint32_t target = 0;
    Tick start_tick = 0;
    Tick duration_ticks = 1;
    double magnitude = 1.0;

    bool active_at(Tick tick) const {
        return tick >= start_tick && tick < start_tick + duration_ticks;
    }
};

enum class Adapter : std::uint8_t { Sdn = 0, OpcUaLike, ModbusLike };
enum class Verb : std::uint8_t {
    InstallFlowRule = 0,
    RemoveFlowRule,
    SetCapacity,
    SetQueuePolicy,
    WriteSetpoint,
};

const char* to_string(Adapter adapter);
const char* to_string(Verb verb);

// Low-level instruction addressed to one simulated control interface.
// Flow rules and link settings go via the SDN adapter; setpoint writes go via
// the OT adapters chosen by target device class.
struct Command {
    std::uint64_t id = 0;
    std::uint32_t action_id = 0;
    Adapter adapter = Adapter::Sdn;
    Verb verb = Verb::InstallFlowRule;
    Tick issued_tick = 0;

    // Payload, interpreted per verb.
    FlowId flow = 0;           // install/remove flow rule
    LinkId link = 0;           // flow rules, set_capacity, set_queue_policy
    double capacity_delta = 0.0;   // set_capacity: applied to link
    bool has_donor = false;        // set_capacity: take the delta from a donor
    LinkId donor_link = 0;
    double drain_fraction = 0.0;   // set_queue_policy: fraction of queue dropped
    NodeId node = 0;               // write_setpoint
    double work_delta = 0.0;       // write_setpoint: assigned-work adjustment

    // Rollback form. Compensation commands bypass availability checks and the
    // scalar verbs reinterpret their payload field as a snapshotted absolute
    // value (capacity_delta -> capacity, work_delta -> assigned work,
    // drain_fraction -> queue length), so restores are bit-exact.
    bool compensation = false;
};

enum class NackReason : std::uint8_t { None = 0, TargetDown, UnknownTarget, Infeasible };

const char* to_string(NackReason reason);

struct CommandResult {
    bool ack = false;
    NackReason reason = NackReason::None;
    std::string detail;
};

// Ground truth for one simulated network. Queues and loads follow the fluid
// model: q' = max(0, q + arrivals - capacity) per link and tick.
struct WorldState {
    Topology topology;
    std::vector<Flow> flows;
    std::vector<double> queue_len;      // per link, packets, >= 0
    std::vector<double> cpu_load;       // per node, fraction in [0, 1]
    std::vector<double> assigned_work;  // per node, mutable via setpoints
    std::vector<double> delivered_last; // per link, packets moved in the last step
    std::vector<double> arrivals_last;   // per link, offered packets in the last step
    std::vector<double> dropped_pending; // per link, packets drained since the last step
    std::vector<double> dropped_last;    // per link, drains charged in the last step
    std::vector<std::vector<LinkId>> staged_rules; // per flow, pending rule set
    std::vector<FaultEvent> active_faults;
    Tick clock = 0;
    double dt_ms = 10.0;
    double work_per_packet = 0.05;   // cpu work induced per delivered packet
    double penalty_delay_ms = 100.0; // stands in for unreachable flows
    std::uint64_t rng_seed = 0;

    bool operator==(const WorldState& other) const;
};

WorldState make_world(Topology topology, std::vector<Flow> flows, double dt_ms,
                      std::uint64_t seed);

// Effective (fault-adjusted) views at a given tick.
double effective_capacity(const WorldState& world, LinkId link, Tick tick);
double effective_rate(const WorldState& world, FlowId flow, Tick tick);
bool node_failed(const WorldState& world, NodeId node, Tick tick);
bool link_up(const WorldState& world, LinkId link, Tick tick);
double link_delay_ms(const WorldState& world, LinkId link, Tick tick);

// True when every link of the flow's path is up at `tick`; inactive flows
// contribute no arrivals and count as undelivered.
bool flow_active(const WorldState& world, FlowId flow, Tick tick);

// Mean end-to-end delay over flows; inactive flows count the penalty delay.
double mean_flow_delay_ms(const WorldState& world, Tick tick);
double total_delivered(const WorldState& world);
// Delivered minus queue drops charged in the last step (goodput view).
double total_delivered_net(const WorldState& world);
double link_delivered_net(const WorldState& world, LinkId link);

// End-to-end delivered rate of one flow: its proportional share of the
// worst (bottleneck) link service along its path, net of drops.
double flow_throughput(const WorldState& world, FlowId flow);
// Sum over flows; invariant to path length, unlike a per-link sum.
double total_flow_throughput(const WorldState& world);

// Demand-normalized delivered throughput: each flow's served fraction of its
// current (fault-scaled) demand, weighted by its nominal rate. Expressed in
// packets/tick against the nominal load, so demand swings injected by load
// fluctuations cancel out and only service degradation moves the series.
double total_service_throughput(const WorldState& world);

// Advances one tick: arrivals accumulate per link, queues drain at effective
// capacity, cpu loads follow delivered traffic, clock increments. Faults whose
// window covers the new clock are in force for the update.
void step(WorldState& world);

// Appends a fault after validating its target. Throws std::invalid_argument
// on unknown targets (message carries the offending id).
void inject_fault(WorldState& world, const FaultEvent& fault);

// Applies one command. A nack leaves the world unchanged.
CommandResult apply_command(WorldState& world, const Command& cmd);

std::string describe(const WorldState& world); // full-state dump for diffs

} // namespace kdnsim
