#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdnsim/topology.hpp"

namespace kdnsim {

enum class ActionKind : std::uint8_t {
    FlowRedirect = 0,
    BandwidthRealloc,
    QueueMgmt,
    TaskOffload,
};
inline constexpr int kActionKindCount = 4;

const char* to_string(ActionKind kind);

enum class ResourceKind : std::uint8_t { Node = 0, Link };

struct ResourceId {
    ResourceKind kind = ResourceKind::Node;
    std::uint32_t id = 0;

    friend bool operator==(const ResourceId&, const ResourceId&) = default;
    friend auto operator<=>(const ResourceId&, const ResourceId&) = default;
};

// One candidate intervention. Parameter fields are interpreted per kind;
// touched_resources lists every node/link the action reads or writes and is
// the basis of the mutual-exclusion rule during subset selection.
struct Action {
    std::uint32_t id = 0;
    ActionKind kind = ActionKind::QueueMgmt;

    FlowId flow = 0;                 // flow_redirect
    std::vector<LinkId> new_path;    // flow_redirect
    std::vector<LinkId> old_path;    // flow_redirect: path at creation time
    LinkId link = 0;                 // bandwidth_realloc, queue_mgmt
    double capacity_delta = 0.0;     // bandwidth_realloc
    LinkId donor_link = 0;           // bandwidth_realloc
    bool has_donor = false;
    double drain_fraction = 0.5;     // queue_mgmt
    NodeId node = 0;                 // task_offload source
    NodeId offload_dest = 0;         // task_offload destination
    double work_amount = 0.0;        // task_offload

    std::vector<ResourceId> touched_resources; // sorted, unique

    std::string target_label() const;
};

bool actions_conflict(const Action& a, const Action& b);

struct ScoredAction {
    Action action;
    double utility = 0.0;
    double cost = 0.0;
};

struct ActionSet {
    std::vector<ScoredAction> actions;
    double objective_value = 0.0;   // sum(U - beta*C) over members, >= 0
    int candidates_considered = 0;  // m, before selection
};

struct DecisionConfig {
    double beta = 1.0;              // cost trade-off, >= 0
    int max_subset_size = 4;
    int exhaustive_limit = 12;      // exact search up to this many candidates
    int lookahead_ticks = 5;
    double weight_delay = 0.5;
    double weight_variability = 0.5;
    int max_candidates = 32;
    double realloc_step = 2.0;      // packets/tick moved per realloc
    double drain_fraction = 0.5;
    double offload_fraction = 0.3;  // share of assigned work moved per offload
    double hot_utilization = 0.5;   // queue/capacity ratio marking a hot link
    double anomaly_rate_thresh = 0.2;
    double eta_norm_hi = 50.0;      // scale for the instability cost term
    double cpu_feature_thresh = 0.9;
};

void validate(const DecisionConfig& cfg);

} // namespace kdnsim
