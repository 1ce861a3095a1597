#pragma once

#include <vector>

#include "kdnsim/actions.hpp"
#include "kdnsim/knowledge.hpp"
#include "kdnsim/world.hpp"

namespace kdnsim {

// Candidate generation over the current graph: redirects around hot links,
// capacity moves onto them, queue drains, and offloads away from loaded
// nodes. Deterministic; bounded by cfg.max_candidates.
std::vector<Action> enumerate_actions(const KnowledgeGraph& graph, const WorldState& world,
                                      const DecisionConfig& cfg);

// Predicted benefit: clones the fluid model, applies the action, advances
// cfg.lookahead_ticks, and scores mean-delay and throughput-variability
// reduction against the no-action counterfactual. -inf marks infeasible
// actions (some command nacked on the clone).
double action_utility(const Action& action, const WorldState& world, const DecisionConfig& cfg);

// Deterministic additive cost: per-kind base + per-command overhead +
// congestion-scaled instability term.
double action_cost(const Action& action, const KnowledgeGraph& graph, const DecisionConfig& cfg);

std::vector<ScoredAction> score_actions(const std::vector<Action>& actions,
                                        const KnowledgeGraph& graph, const WorldState& world,
                                        const DecisionConfig& cfg);

// Maximizes sum(U - beta*C) over conflict-free subsets of at most
// max_subset_size actions: exact enumeration up to cfg.exhaustive_limit
// candidates, greedy by marginal net gain above it. The empty set (objective
// 0) is always available.
ActionSet select_actions(const std::vector<ScoredAction>& scored, const DecisionConfig& cfg);

// Shared targeting helpers (also used by the baseline controllers).
// All return false when no suitable target exists.
bool worst_queue_link(const WorldState& world, LinkId& out);                 // max queue/capacity
bool worst_incident_link(const WorldState& world, NodeId node, LinkId& out); // max queue
bool least_loaded_up_neighbor(const WorldState& world, NodeId node, NodeId& out);
bool donor_for_link(const WorldState& world, LinkId link, double delta, LinkId& out);
// Cheapest alternate path for `flow` avoiding `avoid`, by current link delay.
bool alternate_path(const WorldState& world, FlowId flow, LinkId avoid,
                    std::vector<LinkId>& out);
bool flow_over_link_with_alternate(const WorldState& world, LinkId link, FlowId& flow_out,
                                   std::vector<LinkId>& path_out);

std::vector<ResourceId> touched_for(const Action& action, const WorldState& world);

} // namespace kdnsim
