#include "kdnsim/decision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>

#include "kdnsim/enforcer.hpp"

namespace kdnsim {

namespace {

constexpr double kTiny = 1e-9;

double utilization(const WorldState& world, LinkId link) {
    const double cap = std::max(effective_capacity(world, link, world.clock), kTiny);
    return world.queue_len[link] / cap;
}

} // namespace

bool worst_queue_link(const WorldState& world, LinkId& out) {
    double best = kTiny;
    bool found = false;
    for (const LinkSpec& link : world.topology.links) {
        if (!link_up(world, link.id, world.clock)) continue;
        const double u = utilization(world, link.id);
        if (u > best) {
            best = u;
            out = link.id;
            found = true;
        }
    }
    return found;
}

bool worst_incident_link(const WorldState& world, NodeId node, LinkId& out) {
    double best = kTiny;
    bool found = false;
    for (LinkId lid : world.topology.incident[node]) {
        if (!link_up(world, lid, world.clock)) continue;
        if (world.queue_len[lid] > best) {
            best = world.queue_len[lid];
            out = lid;
            found = true;
        }
    }
    return found;
}

bool least_loaded_up_neighbor(const WorldState& world, NodeId node, NodeId& out) {
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (LinkId lid : world.topology.incident[node]) {
        if (!link_up(world, lid, world.clock)) continue;
        const NodeId peer = world.topology.peer(lid, node);
        if (node_failed(world, peer, world.clock)) continue;
        if (world.cpu_load[peer] < best) {
            best = world.cpu_load[peer];
            out = peer;
            found = true;
        }
    }
    return found;
}

bool donor_for_link(const WorldState& world, LinkId link, double delta, LinkId& out) {
    const LinkSpec& target = world.topology.links[link];
    double best_headroom = 0.0;
    bool found = false;
    for (NodeId endpoint : {target.a, target.b}) {
        for (LinkId lid : world.topology.incident[endpoint]) {
            if (lid == link || !link_up(world, lid, world.clock)) continue;
            const LinkSpec& cand = world.topology.links[lid];
            if (cand.capacity - delta < 1.0) continue; // donor keeps usable capacity
            if (world.queue_len[lid] / std::max(cand.capacity - delta, kTiny) > 0.5)
                continue; // would congest the donor
            const double headroom = cand.capacity - world.queue_len[lid] - delta;
            if (headroom > best_headroom) {
                best_headroom = headroom;
                out = lid;
                found = true;
            }
        }
    }
    return found;
}

bool alternate_path(const WorldState& world, FlowId flow, LinkId avoid,
                    std::vector<LinkId>& out) {
    const Flow& f = world.flows[flow];
    const std::size_t n = world.topology.nodes.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<LinkId> via(n, 0);
    std::vector<NodeId> prev(n, 0);
    std::vector<bool> done(n, false);
    using Entry = std::pair<double, NodeId>; // (dist, node); node breaks ties
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[f.src] = 0.0;
    heap.emplace(0.0, f.src);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        done[u] = true;
        if (u == f.dst) break;
        for (LinkId lid : world.topology.incident[u]) {
            if (lid == avoid || !link_up(world, lid, world.clock)) continue;
            const NodeId v = world.topology.peer(lid, u);
            const double nd = d + link_delay_ms(world, lid, world.clock);
            if (nd < dist[v] - 1e-15) {
                dist[v] = nd;
                via[v] = lid;
                prev[v] = u;
                heap.emplace(nd, v);
            }
        }
    }
    if (dist[f.dst] == kInf) return false;
    std::vector<LinkId> path;
    for (NodeId cur = f.dst; cur != f.src; cur = prev[cur]) path.push_back(via[cur]);
    std::reverse(path.begin(), path.end());
    if (path == f.path) return false; // no distinct alternate exists
    out = std::move(path);
    return true;
}

bool flow_over_link_with_alternate(const WorldState& world, LinkId link, FlowId& flow_out,
                                   std::vector<LinkId>& path_out) {
    // Highest offered rate first: moving the heaviest flow relieves the most.
    double best_rate = -1.0;
    bool found = false;
    for (const Flow& f : world.flows) {
        if (std::find(f.path.begin(), f.path.end(), link) == f.path.end()) continue;
        if (f.offered_rate <= best_rate) continue;
        std::vector<LinkId> alt;
        if (!alternate_path(world, f.id, link, alt)) continue;
        best_rate = f.offered_rate;
        flow_out = f.id;
        path_out = std::move(alt);
        found = true;
    }
    return found;
}

std::vector<ResourceId> touched_for(const Action& action, const WorldState& world) {
    std::vector<ResourceId> touched;
    auto add_link = [&](LinkId lid) {
        touched.push_back({ResourceKind::Link, lid});
        touched.push_back({ResourceKind::Node, world.topology.links[lid].a});
        touched.push_back({ResourceKind::Node, world.topology.links[lid].b});
    };
    switch (action.kind) {
        case ActionKind::FlowRedirect: {
            const std::vector<LinkId>& old_path =
                action.old_path.empty() ? world.flows[action.flow].path : action.old_path;
            for (LinkId lid : old_path) add_link(lid);
            for (LinkId lid : action.new_path) add_link(lid);
            break;
        }
        case ActionKind::BandwidthRealloc:
            add_link(action.link);
            if (action.has_donor) add_link(action.donor_link);
            break;
        case ActionKind::QueueMgmt:
            add_link(action.link);
            break;
        case ActionKind::TaskOffload:
            touched.push_back({ResourceKind::Node, action.node});
            touched.push_back({ResourceKind::Node, action.offload_dest});
            break;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    return touched;
}

std::vector<Action> enumerate_actions(const KnowledgeGraph& graph, const WorldState& world,
                                      const DecisionConfig& cfg) {
    std::vector<Action> actions;
    std::uint32_t next_id = 0;
    auto emit = [&](Action a) {
        if (static_cast<int>(actions.size()) >= cfg.max_candidates) return;
        a.id = next_id++;
        a.touched_resources = touched_for(a, world);
        actions.push_back(std::move(a));
    };

    // Hot set from the knowledge graph, not ground truth: nodes whose
    // windowed queue feature or anomaly rate is elevated nominate their worst
    // incident link. The engine reacts with the same observational lag as
    // every other pipeline consumer.
    const double hot_eta = cfg.hot_utilization * cfg.eta_norm_hi;
    std::vector<LinkId> hot;
    for (NodeId node : graph.vertices) {
        if (graph.eta(node) < hot_eta && graph.anomaly_rate(node) < cfg.anomaly_rate_thresh)
            continue;
        LinkId worst;
        if (worst_incident_link(world, node, worst)) hot.push_back(worst);
    }
    std::sort(hot.begin(), hot.end());
    hot.erase(std::unique(hot.begin(), hot.end()), hot.end());

    // At most one redirect candidate per flow; several hot links often pick
    // the same heavy flow.
    std::vector<bool> redirect_planned(world.flows.size(), false);

    // Dead flows first: a redirect is the only action that can revive one.
    for (const Flow& flow : world.flows) {
        if (flow_active(world, flow.id, world.clock)) continue;
        LinkId down_link = flow.path.front();
        for (LinkId lid : flow.path)
            if (!link_up(world, lid, world.clock)) {
                down_link = lid;
                break;
            }
        Action a;
        a.kind = ActionKind::FlowRedirect;
        a.flow = flow.id;
        a.old_path = flow.path;
        if (!alternate_path(world, flow.id, down_link, a.new_path)) continue;
        redirect_planned[flow.id] = true;
        emit(std::move(a));
    }

    for (LinkId lid : hot) {
        Action a;
        a.kind = ActionKind::FlowRedirect;
        std::vector<LinkId> alt;
        FlowId fid;
        if (flow_over_link_with_alternate(world, lid, fid, alt) && !redirect_planned[fid]) {
            a.flow = fid;
            a.old_path = world.flows[fid].path;
            a.new_path = std::move(alt);
            redirect_planned[fid] = true;
            emit(std::move(a));
        }
    }

    for (LinkId lid : hot) {
        LinkId donor;
        if (!donor_for_link(world, lid, cfg.realloc_step, donor)) continue;
        Action a;
        a.kind = ActionKind::BandwidthRealloc;
        a.link = lid;
        a.capacity_delta = cfg.realloc_step;
        a.donor_link = donor;
        a.has_donor = true;
        emit(std::move(a));
    }

    // Drains discard real traffic, so they only become candidates once the
    // backlog is at least two service-ticks deep.
    for (LinkId lid : hot) {
        const double cap = std::max(effective_capacity(world, lid, world.clock), kTiny);
        if (world.queue_len[lid] / cap < 2.0 * cfg.hot_utilization) continue;
        Action a;
        a.kind = ActionKind::QueueMgmt;
        a.link = lid;
        a.drain_fraction = cfg.drain_fraction;
        emit(std::move(a));
    }

    for (NodeId node : graph.vertices) {
        if (graph.gamma(node) < cfg.cpu_feature_thresh) continue;
        if (node_failed(world, node, world.clock)) continue;
        const double amount = cfg.offload_fraction * world.assigned_work[node];
        if (amount <= kTiny) continue;
        NodeId dest;
        if (!least_loaded_up_neighbor(world, node, dest)) continue;
        Action a;
        a.kind = ActionKind::TaskOffload;
        a.node = node;
        a.offload_dest = dest;
        a.work_amount = amount;
        emit(std::move(a));
    }

    return actions;
}

namespace {

struct LookaheadStats {
    double mean_delay = 0.0;
    double mean_throughput = 0.0;
    double throughput_sd = 0.0;
};

bool apply_action_to(WorldState& world, const Action& action) {
    const std::vector<Command> cmds = compile_action(action, world);
    for (const Command& cmd : cmds) {
        if (!apply_command(world, cmd).ack) return false;
    }
    return true;
}

LookaheadStats rollout(WorldState world, int ticks) {
    double delay_sum = 0.0;
    std::vector<double> delivered;
    delivered.reserve(static_cast<std::size_t>(ticks));
    for (int i = 0; i < ticks; ++i) {
        step(world);
        delay_sum += mean_flow_delay_ms(world, world.clock);
        delivered.push_back(total_service_throughput(world));
    }
    LookaheadStats stats;
    stats.mean_delay = delay_sum / ticks;
    double mean = 0.0;
    for (double d : delivered) mean += d;
    mean /= delivered.size();
    stats.mean_throughput = mean;
    double var = 0.0;
    for (double d : delivered) var += (d - mean) * (d - mean);
    stats.throughput_sd = std::sqrt(var / delivered.size());
    return stats;
}

} // namespace

double action_utility(const Action& action, const WorldState& world, const DecisionConfig& cfg) {
    WorldState with_action = world;
    if (!apply_action_to(with_action, action))
        return -std::numeric_limits<double>::infinity();

    const LookaheadStats base = rollout(world, cfg.lookahead_ticks);
    const LookaheadStats acted = rollout(std::move(with_action), cfg.lookahead_ticks);

    const double delay_term =
        base.mean_delay > kTiny ? (base.mean_delay - acted.mean_delay) / base.mean_delay : 0.0;
    // Normalize against the counterfactual spread, floored at a fraction of
    // the throughput level so added variability on a perfectly steady
    // baseline still scores negative. Clamped: it is a reduction fraction.
    const double var_floor = std::max({base.throughput_sd, 0.05 * base.mean_throughput, kTiny});
    const double var_term =
        std::clamp((base.throughput_sd - acted.throughput_sd) / var_floor, -1.0, 1.0);
    return cfg.weight_delay * delay_term + cfg.weight_variability * var_term;
}

double action_cost(const Action& action, const KnowledgeGraph& graph, const DecisionConfig& cfg) {
    double base = 0.0;
    switch (action.kind) {
        case ActionKind::FlowRedirect: base = 0.3; break;
        case ActionKind::BandwidthRealloc: base = 0.2; break;
        case ActionKind::QueueMgmt: base = 0.1; break;
        case ActionKind::TaskOffload: base = 0.4; break;
    }

    std::size_t command_count = 0;
    switch (action.kind) {
        case ActionKind::FlowRedirect:
            // One removal per old hop plus one install per new hop.
            command_count = action.old_path.size() + action.new_path.size();
            break;
        case ActionKind::BandwidthRealloc:
        case ActionKind::QueueMgmt: command_count = 1; break;
        case ActionKind::TaskOffload: command_count = 2; break;
    }

    double eta_sum = 0.0;
    std::size_t eta_n = 0;
    for (const ResourceId& r : action.touched_resources) {
        if (r.kind != ResourceKind::Node) continue;
        if (r.id < graph.features.size()) {
            eta_sum += std::clamp(graph.eta(r.id) / std::max(cfg.eta_norm_hi, kTiny), 0.0, 1.0);
            ++eta_n;
        }
    }
    const double instability = eta_n > 0 ? eta_sum / static_cast<double>(eta_n) : 0.0;

    return base + 0.05 * static_cast<double>(command_count) + 0.1 * instability;
}

std::vector<ScoredAction> score_actions(const std::vector<Action>& actions,
                                        const KnowledgeGraph& graph, const WorldState& world,
                                        const DecisionConfig& cfg) {
    std::vector<ScoredAction> scored;
    scored.reserve(actions.size());
    for (const Action& action : actions) {
        ScoredAction s;
        s.action = action;
        s.utility = action_utility(action, world, cfg);
        s.cost = action_cost(action, graph, cfg);
        scored.push_back(std::move(s));
    }
    return scored;
}

ActionSet select_actions(const std::vector<ScoredAction>& scored, const DecisionConfig& cfg) {
    validate(cfg);
    const std::size_t m = scored.size();
    ActionSet result;
    if (m == 0) return result;

    auto gain = [&](const ScoredAction& s) { return s.utility - cfg.beta * s.cost; };

    if (m <= static_cast<std::size_t>(cfg.exhaustive_limit) && m < 64) {
        // Exact: enumerate every conflict-free subset within the size cap.
        std::vector<std::uint64_t> conflict_mask(m, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (actions_conflict(scored[i].action, scored[j].action)) {
                    conflict_mask[i] |= (1ull << j);
                    conflict_mask[j] |= (1ull << i);
                }

        // The empty set (mask 0, objective 0) is the starting incumbent, so
        // the returned objective is never negative. Gains are summed in
        // ascending index order; ties prefer fewer actions, then lower mask.
        std::uint64_t best_mask = 0;
        double best_value = 0.0;
        const std::uint64_t end = 1ull << m;
        for (std::uint64_t mask = 1; mask < end; ++mask) {
            if (std::popcount(mask) > cfg.max_subset_size) continue;
            bool feasible = true;
            double value = 0.0;
            for (std::uint64_t bits = mask; bits;) {
                const int i = std::countr_zero(bits);
                bits &= bits - 1;
                if (conflict_mask[static_cast<std::size_t>(i)] & mask) {
                    feasible = false;
                    break;
                }
                value += gain(scored[static_cast<std::size_t>(i)]);
            }
            if (!feasible) continue;
            const bool better =
                value > best_value ||
                (value == best_value && (std::popcount(mask) < std::popcount(best_mask) ||
                                         (std::popcount(mask) == std::popcount(best_mask) &&
                                          mask < best_mask)));
            if (better) {
                best_mask = mask;
                best_value = value;
            }
        }
        for (std::uint64_t bits = best_mask; bits;) {
            const int i = std::countr_zero(bits);
            bits &= bits - 1;
            result.actions.push_back(scored[static_cast<std::size_t>(i)]);
        }
        result.objective_value = best_value;
        return result;
    }

    // Greedy: take candidates by descending marginal net gain, skipping
    // conflicts, until the size cap or no positive gain remains.
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gain(scored[a]) > gain(scored[b]); });
    for (std::size_t idx : order) {
        if (static_cast<int>(result.actions.size()) >= cfg.max_subset_size) break;
        const double g = gain(scored[idx]);
        if (!(g > 0.0)) break; // also stops on -inf and NaN
        bool conflicts = false;
        for (const ScoredAction& chosen : result.actions)
            if (actions_conflict(chosen.action, scored[idx].action)) {
                conflicts = true;
                break;
            }
        if (conflicts) continue;
        result.actions.push_back(scored[idx]);
        result.objective_value += g;
    }
    return result;
}

} // namespace kdnsim
