#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kdnsim/rng.hpp"
#include "kdnsim/topology.hpp"
#include "kdnsim/world.hpp"
#include "test_util.hpp"

using namespace kdnsim;
using testutil::diamond_world;
using testutil::line_world;

TEST_CASE("default topology: 50 nodes, connected") {
    const Topology topo = build_topology(TopologySpec{}, 7);
    CHECK(topo.nodes.size() == 50);
    CHECK(is_connected(topo));
    for (const LinkSpec& link : topo.links) {
        CHECK(link.capacity > 0.0);
        CHECK(link.base_delay_ms >= 0.0);
        CHECK(link.a < topo.nodes.size());
        CHECK(link.b < topo.nodes.size());
    }
    for (const NodeSpec& node : topo.nodes) CHECK(node.cpu_capacity > 0.0);
}

TEST_CASE("two-node all-switch topology: one repair link") {
    TopologySpec spec;
    spec.node_count = 2;
    spec.role_mix = {{NodeRole::Switch, 1.0}};
    const Topology topo = build_topology(spec, 0);
    CHECK(topo.nodes.size() == 2);
    CHECK(topo.links.size() >= 1);
    CHECK(is_connected(topo));
    for (const NodeSpec& node : topo.nodes) CHECK(node.role == NodeRole::Switch);
}

TEST_CASE("topology generation is deterministic") {
    TopologySpec spec;
    spec.node_count = 10;
    const Topology a = build_topology(spec, 3);
    const Topology b = build_topology(spec, 3);
    CHECK(a == b);
    const Topology c = build_topology(spec, 4);
    CHECK_FALSE(a == c);
}

TEST_CASE("topology spec validation") {
    TopologySpec spec;
    spec.node_count = 1;
    CHECK_THROWS_AS(build_topology(spec, 0), std::invalid_argument);

    spec.node_count = 5;
    spec.role_mix = {{NodeRole::Switch, 0.6}, {NodeRole::Plc, 0.3}}; // sums to 0.9
    CHECK_THROWS_AS(build_topology(spec, 0), std::invalid_argument);
}

TEST_CASE("idle link stays idle and contributes base delay") {
    WorldState world = line_world(6.0, 0.0);
    step(world);
    CHECK(world.queue_len[1] == 0.0);
    CHECK(link_delay_ms(world, 1, world.clock) == doctest::Approx(1.0));
    CHECK(world.delivered_last[1] == 0.0);
}

TEST_CASE("queue recursion: q=5, arrivals=3, capacity=4 gives 4") {
    WorldState world = line_world(4.0, 3.0);
    world.queue_len[1] = 5.0;
    step(world);
    CHECK(world.queue_len[1] == doctest::Approx(4.0));
}

TEST_CASE("overload growth matches the hand-iterated recursion") {
    // Middle link capacity 6, offered 10: hand-iterating
    // q' = max(0, q + 10 - 6) gives 0,4,8,12,16 before each of 5 steps.
    WorldState world = line_world(6.0, 10.0);
    std::vector<double> observed;
    for (int i = 0; i < 5; ++i) {
        observed.push_back(world.queue_len[1]);
        step(world);
    }
    const std::vector<double> expected{0.0, 4.0, 8.0, 12.0, 16.0};
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(observed[i] == doctest::Approx(expected[i]));
    CHECK(world.clock == 5);
}

TEST_CASE("link degradation halves effective capacity inside its window") {
    WorldState world = line_world(8.0, 0.0);
    inject_fault(world, FaultEvent{FaultKind::LinkDegradation, 1, 2, 3, 0.5});
    CHECK(effective_capacity(world, 1, 1) == doctest::Approx(8.0));
    CHECK(effective_capacity(world, 1, 2) == doctest::Approx(4.0));
    CHECK(effective_capacity(world, 1, 4) == doctest::Approx(4.0));
    CHECK(effective_capacity(world, 1, 5) == doctest::Approx(8.0)); // expiry restores exactly
}

TEST_CASE("node failure downs incident links for its duration") {
    WorldState world = diamond_world();
    inject_fault(world, FaultEvent{FaultKind::NodeFailure, 1, 0, 5, 1.0});
    CHECK_FALSE(link_up(world, 0, 0));
    CHECK_FALSE(link_up(world, 1, 0));
    CHECK(link_up(world, 2, 0));
    CHECK(link_up(world, 0, 5)); // after expiry
    CHECK_FALSE(flow_active(world, 0, 0));
}

TEST_CASE("overlapping load fluctuations compose multiplicatively") {
    // Two-fault oracle: 1.5 * 2.0 = 3.0 on the shared window.
    WorldState world = line_world(100.0, 4.0);
    inject_fault(world, FaultEvent{FaultKind::LoadFluctuation, 0, 1, 10, 1.5});
    inject_fault(world, FaultEvent{FaultKind::LoadFluctuation, 0, 5, 10, 2.0});
    CHECK(effective_rate(world, 0, 0) == doctest::Approx(4.0));
    CHECK(effective_rate(world, 0, 2) == doctest::Approx(6.0));
    CHECK(effective_rate(world, 0, 7) == doctest::Approx(4.0 * 3.0));
    CHECK(effective_rate(world, 0, 12) == doctest::Approx(8.0));
    CHECK(effective_rate(world, 0, 20) == doctest::Approx(4.0));
}

TEST_CASE("fault injection rejects unknown targets with the offending id") {
    WorldState world = line_world(6.0, 1.0);
    CHECK_THROWS_WITH_AS(inject_fault(world, FaultEvent{FaultKind::NodeFailure, 99, 0, 1, 1.0}),
                         doctest::Contains("99"), std::invalid_argument);
    CHECK_THROWS_AS(inject_fault(world, FaultEvent{FaultKind::LinkDegradation, 7, 0, 1, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(inject_fault(world, FaultEvent{FaultKind::LoadFluctuation, 3, 0, 1, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(inject_fault(world, FaultEvent{FaultKind::NodeFailure, 0, 0, 0, 1.0}),
                    std::invalid_argument); // zero duration
}

TEST_CASE("fault expiry restores the no-fault parameter trajectory") {
    WorldState faulty = line_world(6.0, 3.0);
    WorldState clean = line_world(6.0, 3.0);
    inject_fault(faulty, FaultEvent{FaultKind::LinkDegradation, 1, 1, 3, 0.5});
    for (int i = 0; i < 6; ++i) {
        step(faulty);
        step(clean);
    }
    // Static parameters equal the counterfactual after start+duration.
    for (LinkId lid = 0; lid < faulty.topology.links.size(); ++lid) {
        CHECK(faulty.topology.links[lid].capacity == clean.topology.links[lid].capacity);
        CHECK(effective_capacity(faulty, lid, faulty.clock) ==
              effective_capacity(clean, lid, clean.clock));
    }
    CHECK(faulty.assigned_work == clean.assigned_work);
}

TEST_CASE("reroute command sequence replaces the flow path") {
    WorldState world = diamond_world();
    auto cmd = [](Verb verb, FlowId flow, LinkId link) {
        Command c;
        c.verb = verb;
        c.flow = flow;
        c.link = link;
        return c;
    };
    CHECK(apply_command(world, cmd(Verb::RemoveFlowRule, 0, 0)).ack);
    CHECK(apply_command(world, cmd(Verb::RemoveFlowRule, 0, 1)).ack);
    CHECK(apply_command(world, cmd(Verb::InstallFlowRule, 0, 2)).ack);
    CHECK(world.flows[0].path == std::vector<LinkId>{0, 1}); // not committed yet
    CHECK(apply_command(world, cmd(Verb::InstallFlowRule, 0, 3)).ack);
    CHECK(world.flows[0].path == std::vector<LinkId>{2, 3}); // committed on last install
}

TEST_CASE("installing onto a down link nacks infeasible and changes nothing") {
    WorldState world = diamond_world();
    world.topology.links[2].up = false;
    const WorldState before = world;
    Command c;
    c.verb = Verb::InstallFlowRule;
    c.flow = 0;
    c.link = 2;
    const CommandResult result = apply_command(world, c);
    CHECK_FALSE(result.ack);
    CHECK(result.reason == NackReason::Infeasible);
    CHECK(world == before);
}

TEST_CASE("capacity reallocation with headroom acks and adds capacity") {
    WorldState world = diamond_world();
    Command c;
    c.verb = Verb::SetCapacity;
    c.link = 0;
    c.capacity_delta = 2.0;
    c.has_donor = true;
    c.donor_link = 2;
    const double before_target = world.topology.links[0].capacity;
    const double before_donor = world.topology.links[2].capacity;
    CHECK(apply_command(world, c).ack);
    CHECK(world.topology.links[0].capacity == doctest::Approx(before_target + 2.0));
    CHECK(world.topology.links[2].capacity == doctest::Approx(before_donor - 2.0));
}

TEST_CASE("donor without headroom nacks infeasible") {
    WorldState world = diamond_world();
    Command c;
    c.verb = Verb::SetCapacity;
    c.link = 0;
    c.capacity_delta = 7.5; // donor has 8.0, would leave 0.5 < 1.0 floor... rejected by <= 0 rule
    c.has_donor = true;
    c.donor_link = 2;
    c.capacity_delta = 9.0; // donor would go negative
    const WorldState before = world;
    const CommandResult result = apply_command(world, c);
    CHECK_FALSE(result.ack);
    CHECK(result.reason == NackReason::Infeasible);
    CHECK(world == before);
}

TEST_CASE("setpoint writes adjust assigned work and respect failure state") {
    WorldState world = diamond_world();
    Command c;
    c.verb = Verb::WriteSetpoint;
    c.node = 1;
    c.work_delta = -1.5;
    CHECK(apply_command(world, c).ack);
    CHECK(world.assigned_work[1] == doctest::Approx(2.5));

    inject_fault(world, FaultEvent{FaultKind::NodeFailure, 1, 0, 10, 1.0});
    const CommandResult on_failed = apply_command(world, c);
    CHECK_FALSE(on_failed.ack);
    CHECK(on_failed.reason == NackReason::TargetDown);

    Command overdrain = c;
    overdrain.node = 2;
    overdrain.work_delta = -100.0;
    CHECK(apply_command(world, overdrain).reason == NackReason::Infeasible);
}

TEST_CASE("queue drain command truncates the backlog") {
    WorldState world = line_world(4.0, 8.0);
    step(world);
    step(world);
    CHECK(world.queue_len[1] == doctest::Approx(8.0));
    Command c;
    c.verb = Verb::SetQueuePolicy;
    c.link = 1;
    c.drain_fraction = 0.5;
    CHECK(apply_command(world, c).ack);
    CHECK(world.queue_len[1] == doctest::Approx(4.0));
}

TEST_CASE("unknown command targets nack as unknown_target") {
    WorldState world = diamond_world();
    Command c;
    c.verb = Verb::SetCapacity;
    c.link = 42;
    c.capacity_delta = 1.0;
    CHECK(apply_command(world, c).reason == NackReason::UnknownTarget);
    c.verb = Verb::WriteSetpoint;
    c.node = 42;
    CHECK(apply_command(world, c).reason == NackReason::UnknownTarget);
    c.verb = Verb::InstallFlowRule;
    c.flow = 9;
    c.link = 0;
    CHECK(apply_command(world, c).reason == NackReason::UnknownTarget);
}

TEST_CASE("property: queues stay non-negative and loads stay in [0,1]") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        TopologySpec spec;
        spec.node_count = 8 + rng.next_below(8);
        Topology topo = build_topology(spec, rng.next_u64());
        std::vector<Flow> flows;
        for (FlowId i = 0; i < 3; ++i) {
            Flow f;
            f.id = i;
            f.src = rng.next_below(spec.node_count);
            do {
                f.dst = rng.next_below(spec.node_count);
            } while (f.dst == f.src);
            // Greedy-build a path: walk incident links toward unvisited nodes.
            NodeId cur = f.src;
            std::vector<bool> seen(spec.node_count, false);
            seen[cur] = true;
            while (cur != f.dst) {
                LinkId pick = topo.incident[cur][rng.next_below(
                    static_cast<std::uint32_t>(topo.incident[cur].size()))];
                const NodeId nxt = topo.peer(pick, cur);
                if (seen[nxt]) break;
                f.path.push_back(pick);
                seen[nxt] = true;
                cur = nxt;
            }
            if (cur != f.dst) continue; // walk failed; skip this flow
            f.offered_rate = rng.next_range(0.0, 30.0);
            flows.push_back(f);
        }
        for (FlowId i = 0; i < flows.size(); ++i) flows[i].id = i;
        WorldState world = make_world(std::move(topo), std::move(flows), 10.0, trial);
        if (!world.flows.empty())
            inject_fault(world, FaultEvent{FaultKind::LoadFluctuation, 0, 5, 20,
                                           rng.next_range(0.5, 3.0)});
        inject_fault(world,
                     FaultEvent{FaultKind::NodeFailure,
                                rng.next_below(static_cast<std::uint32_t>(world.topology.nodes.size())),
                                10, 15, 1.0});
        for (int s = 0; s < 50; ++s) {
            step(world);
            for (double q : world.queue_len) CHECK(q >= 0.0);
            for (double c : world.cpu_load) {
                CHECK(c >= 0.0);
                CHECK(c <= 1.0);
            }
        }
    }
}

TEST_CASE("property: identical seeds give identical trajectories") {
    auto run = [] {
        WorldState world = line_world(6.0, 5.0);
        inject_fault(world, FaultEvent{FaultKind::LinkDegradation, 1, 3, 4, 0.5});
        std::string out;
        for (int i = 0; i < 20; ++i) {
            step(world);
            out += describe(world);
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("conservation: arrivals land only on the current path") {
    WorldState world = diamond_world(3.0);
    step(world);
    CHECK(world.delivered_last[0] == doctest::Approx(3.0));
    CHECK(world.delivered_last[1] == doctest::Approx(3.0));
    CHECK(world.delivered_last[2] == 0.0);
    CHECK(world.delivered_last[3] == 0.0);

    // Redirect, then the arrivals move with the path, never duplicating.
    Command c;
    c.verb = Verb::RemoveFlowRule;
    c.flow = 0;
    c.link = 0;
    REQUIRE(apply_command(world, c).ack);
    c.link = 1;
    REQUIRE(apply_command(world, c).ack);
    c.verb = Verb::InstallFlowRule;
    c.link = 2;
    REQUIRE(apply_command(world, c).ack);
    c.link = 3;
    REQUIRE(apply_command(world, c).ack);
    step(world);
    CHECK(world.delivered_last[0] == 0.0);
    CHECK(world.delivered_last[1] == 0.0);
    CHECK(world.delivered_last[2] == doctest::Approx(3.0));
    CHECK(world.delivered_last[3] == doctest::Approx(3.0));
}
