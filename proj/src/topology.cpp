#include "kdnsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "kdnsim/rng.hpp"

namespace kdnsim {

const char* to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Plc: return "plc";
        case NodeRole::Sensor: return "sensor";
        case NodeRole::EdgeServer: return "edge_server";
        case NodeRole::Enterprise: return "enterprise";
        case NodeRole::Switch: return "switch";
    }
    return "unknown";
}

NodeRole node_role_from_string(const std::string& name) {
    if (name == "plc") return NodeRole::Plc;
    if (name == "sensor") return NodeRole::Sensor;
    if (name == "edge_server") return NodeRole::EdgeServer;
    if (name == "enterprise") return NodeRole::Enterprise;
    if (name == "switch") return NodeRole::Switch;
    throw std::invalid_argument("unknown node role: " + name);
}

const char* to_string(LinkClass cls) {
    return cls == LinkClass::Fieldbus ? "fieldbus" : "ip";
}

bool Topology::operator==(const Topology& other) const {
    if (nodes.size() != other.nodes.size() || links.size() != other.links.size()) return false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeSpec& l = nodes[i];
        const NodeSpec& r = other.nodes[i];
        if (l.id != r.id || l.role != r.role || l.cpu_capacity != r.cpu_capacity ||
            l.base_work != r.base_work || l.x != r.x || l.y != r.y)
            return false;
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
        const LinkSpec& l = links[i];
        const LinkSpec& r = other.links[i];
        if (l.id != r.id || l.a != r.a || l.b != r.b || l.cls != r.cls ||
            l.capacity != r.capacity || l.base_delay_ms != r.base_delay_ms || l.up != r.up)
            return false;
    }
    return true;
}

namespace {

struct UnionFind {
    std::vector<std::uint32_t> parent;
    explicit UnionFind(std::uint32_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0u);
    }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

double dist2(const NodeSpec& a, const NodeSpec& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

bool is_ot_role(NodeRole r) { return r == NodeRole::Plc || r == NodeRole::Sensor; }

void validate_spec(const TopologySpec& spec) {
    if (spec.node_count < 2) throw std::invalid_argument("topology: node_count must be >= 2");
    double sum = 0.0;
    for (const auto& [role, frac] : spec.role_mix) {
        if (frac < 0.0) throw std::invalid_argument("topology: negative role fraction");
        sum += frac;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("topology: role fractions must sum to 1");
    for (const LinkClassParams* p : {&spec.fieldbus, &spec.ip}) {
        if (p->capacity_min <= 0.0 || p->capacity_max < p->capacity_min)
            throw std::invalid_argument("topology: invalid capacity range");
        if (p->base_delay_min < 0.0 || p->base_delay_max < p->base_delay_min)
            throw std::invalid_argument("topology: invalid base_delay range");
    }
}

std::vector<NodeRole> assign_roles(const TopologySpec& spec, Rng& rng) {
    const std::uint32_t n = spec.node_count;
    std::vector<NodeRole> pool;
    pool.reserve(n);
    // Largest-remainder apportionment keeps counts matching fractions.
    std::vector<std::pair<NodeRole, double>> mix(spec.role_mix.begin(), spec.role_mix.end());
    std::vector<std::uint32_t> counts(mix.size(), 0);
    std::uint32_t assigned = 0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        counts[i] = static_cast<std::uint32_t>(std::floor(mix[i].second * n));
        assigned += counts[i];
    }
    std::vector<std::size_t> order(mix.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = mix[a].second * n - std::floor(mix[a].second * n);
        const double rb = mix[b].second * n - std::floor(mix[b].second * n);
        return ra > rb;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % order.size()]]++;
    for (std::size_t i = 0; i < mix.size(); ++i)
        for (std::uint32_t c = 0; c < counts[i]; ++c) pool.push_back(mix[i].first);
    // Fisher-Yates with our own rng.
    for (std::uint32_t i = n - 1; i > 0; --i) {
        const std::uint32_t j = rng.next_below(i + 1);
        std::swap(pool[i], pool[j]);
    }
    return pool;
}

} // namespace

Topology build_topology(const TopologySpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    Rng rng(seed ^ 0xC0FFEE1234567890ull);

    const std::uint32_t n = spec.node_count;
    Topology topo;
    topo.nodes.resize(n);
    const std::vector<NodeRole> roles = assign_roles(spec, rng);
    for (std::uint32_t i = 0; i < n; ++i) {
        NodeSpec& node = topo.nodes[i];
        node.id = i;
        node.role = roles[i];
        node.cpu_capacity = spec.cpu_capacity.at(node.role);
        node.base_work = spec.base_work_fraction.at(node.role) * node.cpu_capacity;
        node.x = rng.next_unit();
        node.y = rng.next_unit();
    }

    const double radius =
        spec.connect_radius > 0.0 ? spec.connect_radius : std::sqrt(2.0 / static_cast<double>(n));
    const double r2 = radius * radius;

    auto add_link = [&](NodeId a, NodeId b) {
        LinkSpec link;
        link.id = static_cast<LinkId>(topo.links.size());
        link.a = a;
        link.b = b;
        const bool fieldbus = is_ot_role(topo.nodes[a].role) && is_ot_role(topo.nodes[b].role);
        link.cls = fieldbus ? LinkClass::Fieldbus : LinkClass::Ip;
        const LinkClassParams& p = fieldbus ? spec.fieldbus : spec.ip;
        link.capacity = rng.next_range(p.capacity_min, p.capacity_max);
        link.base_delay_ms = rng.next_range(p.base_delay_min, p.base_delay_max);
        link.up = true;
        topo.links.push_back(link);
    };

    UnionFind uf(n);
    for (NodeId a = 0; a < n; ++a) {
        for (NodeId b = a + 1; b < n; ++b) {
            if (dist2(topo.nodes[a], topo.nodes[b]) <= r2) {
                add_link(a, b);
                uf.unite(a, b);
            }
        }
    }

    // Connectivity repair: link the closest pair straddling two components.
    for (;;) {
        NodeId best_a = 0, best_b = 0;
        double best = std::numeric_limits<double>::infinity();
        bool split = false;
        for (NodeId a = 0; a < n; ++a) {
            for (NodeId b = a + 1; b < n; ++b) {
                if (uf.find(a) == uf.find(b)) continue;
                split = true;
                const double d = dist2(topo.nodes[a], topo.nodes[b]);
                if (d < best) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (!split) break;
        add_link(best_a, best_b);
        uf.unite(best_a, best_b);
    }

    topo.incident.assign(n, {});
    for (const LinkSpec& link : topo.links) {
        topo.incident[link.a].push_back(link.id);
        topo.incident[link.b].push_back(link.id);
    }
    return topo;
}

bool is_connected(const Topology& topo) {
    if (topo.nodes.empty()) return false;
    std::vector<bool> seen(topo.nodes.size(), false);
    std::vector<NodeId> stack{0};
    seen[0] = true;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const NodeId cur = stack.back();
        stack.pop_back();
        for (LinkId lid : topo.incident[cur]) {
            const NodeId next = topo.peer(lid, cur);
            if (!seen[next]) {
                seen[next] = true;
                ++visited;
                stack.push_back(next);
            }
        }
    }
    return visited == topo.nodes.size();
}

} // namespace kdnsim
