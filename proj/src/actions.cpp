#include "kdnsim/actions.hpp"

#include <algorithm>
#include <stdexcept>

namespace kdnsim {

const char* to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::FlowRedirect: return "flow_redirect";
        case ActionKind::BandwidthRealloc: return "bandwidth_realloc";
        case ActionKind::QueueMgmt: return "queue_mgmt";
        case ActionKind::TaskOffload: return "task_offload";
    }
    return "unknown";
}

std::string Action::target_label() const {
    switch (kind) {
        case ActionKind::FlowRedirect: return "flow:" + std::to_string(flow);
        case ActionKind::BandwidthRealloc:
        case ActionKind::QueueMgmt: return "link:" + std::to_string(link);
        case ActionKind::TaskOffload: return "node:" + std::to_string(node);
    }
    return "?";
}

bool actions_conflict(const Action& a, const Action& b) {
    // Both touched sets are sorted; standard set intersection test.
    auto i = a.touched_resources.begin();
    auto j = b.touched_resources.begin();
    while (i != a.touched_resources.end() && j != b.touched_resources.end()) {
        if (*i == *j) return true;
        if (*i < *j)
            ++i;
        else
            ++j;
    }
    return false;
}

void validate(const DecisionConfig& cfg) {
    if (cfg.beta < 0.0) throw std::invalid_argument("decision: beta must be >= 0");
    if (cfg.exhaustive_limit < 1)
        throw std::invalid_argument("decision: exhaustive_limit must be >= 1");
    if (cfg.max_subset_size < 1)
        throw std::invalid_argument("decision: max_subset_size must be >= 1");
    if (cfg.lookahead_ticks < 1)
        throw std::invalid_argument("decision: lookahead_ticks must be >= 1");
    if (cfg.max_candidates < 1)
        throw std::invalid_argument("decision: max_candidates must be >= 1");
    if (!(cfg.drain_fraction > 0.0 && cfg.drain_fraction <= 1.0))
        throw std::invalid_argument("decision: drain_fraction outside (0,1]");
    if (!(cfg.offload_fraction > 0.0 && cfg.offload_fraction <= 1.0))
        throw std::invalid_argument("decision: offload_fraction outside (0,1]");
}

} // namespace kdnsim
