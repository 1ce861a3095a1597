#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kdnsim {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;
using FlowId = std::uint32_t;

enum class NodeRole : std::uint8_t { Plc = 0, Sensor, EdgeServer, Enterprise, Switch };

const char* to_string(NodeRole role);
NodeRole node_role_from_string(const std::string& name);

// Links come in two classes: low-capacity/low-delay fieldbus segments between
// OT devices, and higher-capacity IP links everywhere else.
enum class LinkClass : std::uint8_t { Fieldbus = 0, Ip };

const char* to_string(LinkClass cls);

struct NodeSpec {
    NodeId id = 0;
    NodeRole role = NodeRole::Switch;
    double cpu_capacity = 1.0; // work-units/tick, > 0
    double base_work = 0.0;    // standing load, work-units/tick
    double x = 0.0;            // layout position, unit square
    double y = 0.0;
};

struct LinkSpec {
    LinkId id = 0;
    NodeId a = 0;
    NodeId b = 0;
    LinkClass cls = LinkClass::Ip;
    double capacity = 1.0;      // packets/tick, > 0
    double base_delay_ms = 0.0; // >= 0
    bool up = true;
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::vector<std::vector<LinkId>> incident; // node id -> link ids, ascending

    NodeId peer(LinkId link, NodeId from) const {
        const LinkSpec& l = links[link];
        return l.a == from ? l.b : l.a;
    }

    bool operator==(const Topology& other) const;
};

struct LinkClassParams {
    double capacity_min = 10.0;
    double capacity_max = 30.0;
    double base_delay_min = 1.0;
    double base_delay_max = 3.0;
};

struct TopologySpec {
    std::uint32_t node_count = 50;
    // Fractions must sum to 1 within 1e-9.
    std::map<NodeRole, double> role_mix = {
        {NodeRole::Sensor, 0.30}, {NodeRole::Plc, 0.20},   {NodeRole::Switch, 0.20},
        {NodeRole::EdgeServer, 0.20}, {NodeRole::Enterprise, 0.10}};
    double connect_radius = 0.0; // 0 -> auto from node count
    LinkClassParams fieldbus{4.0, 8.0, 0.2, 0.8};
    LinkClassParams ip{10.0, 30.0, 1.0, 3.0};
    std::map<NodeRole, double> cpu_capacity = {
        {NodeRole::Plc, 10.0}, {NodeRole::Sensor, 5.0},      {NodeRole::EdgeServer, 40.0},
        {NodeRole::Enterprise, 60.0}, {NodeRole::Switch, 20.0}};
    std::map<NodeRole, double> base_work_fraction = {
        {NodeRole::Plc, 0.40}, {NodeRole::Sensor, 0.30},     {NodeRole::EdgeServer, 0.50},
        {NodeRole::Enterprise, 0.40}, {NodeRole::Switch, 0.20}};
};

// Random geometric graph over the unit square with connectivity repair:
// nearest cross-component pairs get links until one component remains.
// Identical (spec, seed) yields an identical topology.
Topology build_topology(const TopologySpec& spec, std::uint64_t seed);

bool is_connected(const Topology& topo);

} // namespace kdnsim
