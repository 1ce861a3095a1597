#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "kdnsim/decision.hpp"
#include "kdnsim/knowledge.hpp"
#include "kdnsim/rng.hpp"
#include "test_util.hpp"

using namespace kdnsim;
using testutil::diamond_world;
using testutil::line_world;

namespace {

KnowledgeGraph graph_for(const WorldState& world) {
    TelemetryWindow window(0);
    TelemetrySnapshot snap;
    snap.tick = world.clock;
    for (const NodeSpec& node : world.topology.nodes) {
        TelemetryRecord rec;
        rec.node_id = node.id;
        rec.tick = world.clock;
        rec.gamma = world.cpu_load[node.id];
        for (LinkId lid : world.topology.incident[node.id]) rec.eta += world.queue_len[lid];
        snap.records.push_back(rec);
    }
    window.push(snap);
    return build_graph(window, world.topology, world.flows);
}

ScoredAction scored(std::uint32_t id, double utility, double cost,
                    std::vector<ResourceId> touched) {
    ScoredAction s;
    s.action.id = id;
    s.action.kind = ActionKind::QueueMgmt;
    s.action.link = id;
    s.action.drain_fraction = 0.5;
    std::sort(touched.begin(), touched.end());
    s.action.touched_resources = std::move(touched);
    s.utility = utility;
    s.cost = cost;
    return s;
}

// Brute force over all conflict-free subsets; gains summed in ascending index
// order so floating-point results are bit-identical to the implementation.
double brute_force_best(const std::vector<ScoredAction>& scored_actions,
                        const DecisionConfig& cfg) {
    const std::size_t m = scored_actions.size();
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
        if (static_cast<int>(std::popcount(mask)) > cfg.max_subset_size) continue;
        bool ok = true;
        double value = 0.0;
        for (std::size_t i = 0; i < m && ok; ++i) {
            if (!(mask & (1ull << i))) continue;
            for (std::size_t j = i + 1; j < m; ++j)
                if ((mask & (1ull << j)) &&
                    actions_conflict(scored_actions[i].action, scored_actions[j].action)) {
                    ok = false;
                    break;
                }
            if (ok)
                value += scored_actions[i].utility - cfg.beta * scored_actions[i].cost;
        }
        if (ok && value > best) best = value;
    }
    return best;
}

} // namespace

TEST_CASE("healthy graph produces no candidates") {
    WorldState world = diamond_world(1.0);
    step(world);
    const KnowledgeGraph graph = graph_for(world);
    DecisionConfig cfg;
    CHECK(enumerate_actions(graph, world, cfg).empty());
}

TEST_CASE("congested link yields a redirect that avoids it") {
    WorldState world = diamond_world(20.0); // 20 pkts/tick into capacity-10 links
    for (int i = 0; i < 10; ++i) step(world);
    const KnowledgeGraph graph = graph_for(world);
    DecisionConfig cfg;
    const std::vector<Action> actions = enumerate_actions(graph, world, cfg);
    bool found = false;
    for (const Action& a : actions) {
        if (a.kind != ActionKind::FlowRedirect) continue;
        found = true;
        CHECK(std::find(a.new_path.begin(), a.new_path.end(), LinkId{0}) == a.new_path.end());
        CHECK(a.new_path == std::vector<LinkId>{2, 3});
    }
    CHECK(found);
}

TEST_CASE("enumeration is deterministic") {
    TopologySpec spec;
    spec.node_count = 20;
    Topology topo = build_topology(spec, 11);
    Flow f;
    f.id = 0;
    f.src = 0;
    f.dst = topo.links[0].b;
    f.path = {0};
    f.offered_rate = 50.0;
    WorldState world = make_world(topo, {f}, 10.0, 11);
    for (int i = 0; i < 20; ++i) step(world);
    const KnowledgeGraph graph = graph_for(world);
    DecisionConfig cfg;
    const std::vector<Action> a = enumerate_actions(graph, world, cfg);
    const std::vector<Action> b = enumerate_actions(graph, world, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].kind == b[i].kind);
        CHECK(a[i].target_label() == b[i].target_label());
        CHECK(a[i].new_path == b[i].new_path);
    }
}

TEST_CASE("action with zero predicted change scores exactly zero") {
    WorldState world = diamond_world(1.0);
    step(world);
    Action a;
    a.kind = ActionKind::QueueMgmt;
    a.link = 2; // idle link, empty queue: draining changes nothing
    a.drain_fraction = 0.5;
    a.touched_resources = touched_for(a, world);
    DecisionConfig cfg;
    CHECK(action_utility(a, world, cfg) == 0.0);
}

TEST_CASE("redirect around a saturated link onto an idle path has positive utility") {
    WorldState world = diamond_world(20.0);
    for (int i = 0; i < 5; ++i) step(world);
    Action a;
    a.kind = ActionKind::FlowRedirect;
    a.flow = 0;
    a.old_path = world.flows[0].path;
    a.new_path = {2, 3};
    a.touched_resources = touched_for(a, world);
    DecisionConfig cfg;
    CHECK(action_utility(a, world, cfg) > 0.0);
}

TEST_CASE("infeasible action scores negative infinity") {
    WorldState world = diamond_world(2.0);
    world.topology.links[2].up = false;
    Action a;
    a.kind = ActionKind::FlowRedirect;
    a.flow = 0;
    a.old_path = world.flows[0].path;
    a.new_path = {2, 3}; // crosses a down link
    a.touched_resources = touched_for(a, world);
    DecisionConfig cfg;
    CHECK(action_utility(a, world, cfg) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("utility matches an independently coded lookahead predictor") {
    // Second implementation of the rollout: applies the action by direct
    // state edits, advances the same fluid model, and aggregates the same
    // statistics.
    WorldState world = diamond_world(14.0);
    for (int i = 0; i < 6; ++i) step(world);
    DecisionConfig cfg;
    cfg.lookahead_ticks = 5;

    Action a;
    a.kind = ActionKind::FlowRedirect;
    a.flow = 0;
    a.old_path = world.flows[0].path;
    a.new_path = {2, 3};
    a.touched_resources = touched_for(a, world);

    auto series_stats = [&](WorldState w) {
        double delay = 0.0;
        std::vector<double> thr;
        for (int i = 0; i < cfg.lookahead_ticks; ++i) {
            step(w);
            delay += mean_flow_delay_ms(w, w.clock);
            thr.push_back(total_service_throughput(w));
        }
        delay /= cfg.lookahead_ticks;
        double mean = 0.0;
        for (double v : thr) mean += v;
        mean /= thr.size();
        double var = 0.0;
        for (double v : thr) var += (v - mean) * (v - mean);
        return std::tuple{delay, mean, std::sqrt(var / thr.size())};
    };

    WorldState acted = world;
    acted.flows[0].path = a.new_path; // direct-edit application
    acted.staged_rules[0] = a.new_path;
    std::sort(acted.staged_rules[0].begin(), acted.staged_rules[0].end());

    const auto [d_base, m_base, sd_base] = series_stats(world);
    const auto [d_act, m_act, sd_act] = series_stats(acted);
    const double delay_term = d_base > 1e-9 ? (d_base - d_act) / d_base : 0.0;
    const double floor = std::max({sd_base, 0.05 * m_base, 1e-9});
    const double var_term = std::clamp((sd_base - sd_act) / floor, -1.0, 1.0);
    const double expected = cfg.weight_delay * delay_term + cfg.weight_variability * var_term;

    CHECK(action_utility(a, world, cfg) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("queue_mgmt on an idle link costs exactly 0.15") {
    WorldState world = diamond_world(0.0);
    step(world);
    Action a;
    a.kind = ActionKind::QueueMgmt;
    a.link = 0;
    a.drain_fraction = 0.5;
    a.touched_resources = touched_for(a, world);
    const KnowledgeGraph graph = graph_for(world);
    DecisionConfig cfg;
    CHECK(action_cost(a, graph, cfg) == doctest::Approx(0.15));
}

TEST_CASE("same drain on a busier link costs strictly more") {
    WorldState idle = diamond_world(0.0);
    step(idle);
    WorldState busy = diamond_world(20.0);
    for (int i = 0; i < 10; ++i) step(busy);

    Action a;
    a.kind = ActionKind::QueueMgmt;
    a.link = 0;
    a.drain_fraction = 0.5;
    DecisionConfig cfg;
    a.touched_resources = touched_for(a, idle);
    const double quiet = action_cost(a, graph_for(idle), cfg);
    a.touched_resources = touched_for(a, busy);
    const double loaded = action_cost(a, graph_for(busy), cfg);
    CHECK(loaded > quiet);
}

TEST_CASE("costs are never negative") {
    WorldState world = diamond_world(20.0);
    for (int i = 0; i < 10; ++i) step(world);
    const KnowledgeGraph graph = graph_for(world);
    DecisionConfig cfg;
    for (const Action& a : enumerate_actions(graph, world, cfg))
        CHECK(action_cost(a, graph, cfg) >= 0.0);
}

TEST_CASE("empty input selects the empty set at objective zero") {
    DecisionConfig cfg;
    const ActionSet set = select_actions({}, cfg);
    CHECK(set.actions.empty());
    CHECK(set.objective_value == 0.0);
}

TEST_CASE("beta=0 selects every conflict-free positive-utility action") {
    DecisionConfig cfg;
    cfg.beta = 0.0;
    std::vector<ScoredAction> input = {
        scored(0, 1.0, 5.0, {{ResourceKind::Link, 0}}),
        scored(1, 0.5, 5.0, {{ResourceKind::Link, 1}}),
        scored(2, 0.2, 5.0, {{ResourceKind::Link, 2}}),
    };
    const ActionSet set = select_actions(input, cfg);
    CHECK(set.actions.size() == 3);
    CHECK(set.objective_value == doctest::Approx(1.7));
}

TEST_CASE("exact selection matches brute force on random instances") {
    Rng rng(31);
    DecisionConfig cfg;
    cfg.exhaustive_limit = 12;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.next_below(10);
        cfg.beta = std::vector<double>{0.0, 0.5, 1.0, 2.0}[rng.next_below(4)];
        cfg.max_subset_size = 1 + static_cast<int>(rng.next_below(5));
        std::vector<ScoredAction> input;
        for (std::uint32_t i = 0; i < m; ++i) {
            // Random touched resources create random conflicts.
            std::vector<ResourceId> touched;
            const int k = 1 + static_cast<int>(rng.next_below(3));
            for (int j = 0; j < k; ++j)
                touched.push_back({ResourceKind::Link, rng.next_below(6)});
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            input.push_back(scored(i, rng.next_range(-1.0, 2.0), rng.next_range(0.0, 1.0),
                                   touched));
        }
        const ActionSet set = select_actions(input, cfg);
        CHECK(set.objective_value == brute_force_best(input, cfg));
        CHECK(set.objective_value >= 0.0);
        for (std::size_t i = 0; i < set.actions.size(); ++i)
            for (std::size_t j = i + 1; j < set.actions.size(); ++j)
                CHECK_FALSE(actions_conflict(set.actions[i].action, set.actions[j].action));
    }
}

TEST_CASE("objective and selected cost are non-increasing in beta (exact mode)") {
    Rng rng(47);
    DecisionConfig cfg;
    std::vector<ScoredAction> input;
    for (std::uint32_t i = 0; i < 8; ++i)
        input.push_back(scored(i, rng.next_range(0.0, 2.0), rng.next_range(0.1, 1.0),
                               {{ResourceKind::Link, rng.next_below(5)}}));
    double prev_objective = std::numeric_limits<double>::infinity();
    double prev_cost = std::numeric_limits<double>::infinity();
    for (double beta : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        cfg.beta = beta;
        const ActionSet set = select_actions(input, cfg);
        double cost = 0.0;
        for (const ScoredAction& s : set.actions) cost += s.cost;
        CHECK(set.objective_value <= prev_objective + 1e-12);
        CHECK(cost <= prev_cost + 1e-12);
        prev_objective = set.objective_value;
        prev_cost = cost;
    }
}

TEST_CASE("greedy mode stays conflict-free, non-negative, and below the exact optimum") {
    Rng rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        DecisionConfig exact_cfg;
        exact_cfg.beta = 1.5;
        exact_cfg.max_subset_size = 4;
        DecisionConfig greedy_cfg = exact_cfg;
        greedy_cfg.exhaustive_limit = 1; // forces greedy for m > 1

        std::vector<ScoredAction> input;
        const std::size_t m = 10;
        for (std::uint32_t i = 0; i < m; ++i) {
            std::vector<ResourceId> touched{{ResourceKind::Link, rng.next_below(5)}};
            input.push_back(
                scored(i, rng.next_range(-0.5, 2.0), rng.next_range(0.0, 1.0), touched));
        }
        const ActionSet greedy = select_actions(input, greedy_cfg);
        const double exact = brute_force_best(input, exact_cfg);
        CHECK(greedy.objective_value >= 0.0);
        CHECK(greedy.objective_value <= exact + 1e-12);
        for (std::size_t i = 0; i < greedy.actions.size(); ++i)
            for (std::size_t j = i + 1; j < greedy.actions.size(); ++j)
                CHECK_FALSE(actions_conflict(greedy.actions[i].action, greedy.actions[j].action));
    }
}

TEST_CASE("actions with negative-infinity utility are never selected") {
    DecisionConfig cfg;
    cfg.beta = 0.0;
    std::vector<ScoredAction> input = {
        scored(0, -std::numeric_limits<double>::infinity(), 0.1, {{ResourceKind::Link, 0}}),
        scored(1, 0.5, 0.1, {{ResourceKind::Link, 1}}),
    };
    const ActionSet set = select_actions(input, cfg);
    REQUIRE(set.actions.size() == 1);
    CHECK(set.actions[0].action.id == 1);
}
