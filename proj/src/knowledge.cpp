#include "kdnsim/knowledge.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "kdnsim/format.hpp"

namespace kdnsim {

TelemetryWindow::TelemetryWindow(std::size_t k) : k_(k) {}

void TelemetryWindow::push(TelemetrySnapshot snapshot) {
    if (!buffer_.empty() && snapshot.tick <= buffer_.back().tick)
        throw std::invalid_argument("window: snapshot tick must exceed the newest buffered tick");
    buffer_.push_back(std::move(snapshot));
    if (buffer_.size() > capacity()) buffer_.pop_front();
}

KnowledgeGraph build_graph(const TelemetryWindow& window, const Topology& topology,
                           const std::vector<Flow>& flows) {
    if (window.empty()) throw std::invalid_argument("build_graph: window is empty");

    KnowledgeGraph graph;
    graph.tick = window.snapshots().back().tick;

    const std::size_t n = topology.nodes.size();
    graph.vertices.resize(n);
    for (std::size_t i = 0; i < n; ++i) graph.vertices[i] = topology.nodes[i].id;

    graph.features.assign(n, FeatureRow{});
    for (const TelemetrySnapshot& snap : window.snapshots()) {
        for (const TelemetryRecord& rec : snap.records) {
            FeatureRow& row = graph.features[rec.node_id];
            row[0] += rec.lambda;
            row[1] += rec.delta;
            row[2] += rec.gamma;
            row[3] += rec.eta;
            row[4] += static_cast<double>(rec.epsilon);
        }
    }
    const double count = static_cast<double>(window.size());
    for (FeatureRow& row : graph.features)
        for (double& v : row) v /= count;

    for (const LinkSpec& link : topology.links) {
        GraphEdge e;
        e.u = std::min(link.a, link.b);
        e.v = std::max(link.a, link.b);
        e.kind = EdgeKind::PhysicalLink;
        e.up = link.up;
        graph.edges.push_back(e);
    }
    // Dependency edges from flow adjacency, deduplicated, deterministic order.
    std::vector<std::pair<NodeId, NodeId>> dep;
    for (const Flow& flow : flows) {
        NodeId cur = flow.src;
        for (LinkId lid : flow.path) {
            const NodeId next = topology.peer(lid, cur);
            if (next != cur) dep.emplace_back(std::min(cur, next), std::max(cur, next));
            cur = next;
        }
    }
    std::sort(dep.begin(), dep.end());
    dep.erase(std::unique(dep.begin(), dep.end()), dep.end());
    for (const auto& [u, v] : dep)
        graph.edges.push_back(GraphEdge{u, v, EdgeKind::FlowDependency, true});

    return graph;
}

void write_graph_headers(std::ostream& edges_out, std::ostream& features_out) {
    edges_out << "tick,kind,u,v,up\n";
    features_out << "tick,node_id,lambda,delta,gamma,eta,epsilon\n";
}

void append_graph_csv(std::ostream& edges_out, std::ostream& features_out,
                      const KnowledgeGraph& graph) {
    for (const GraphEdge& e : graph.edges) {
        edges_out << graph.tick << ','
                  << (e.kind == EdgeKind::PhysicalLink ? "physical_link" : "flow_dependency")
                  << ',' << e.u << ',' << e.v << ',' << (e.up ? 1 : 0) << '\n';
    }
    for (std::size_t i = 0; i < graph.vertices.size(); ++i) {
        const FeatureRow& row = graph.features[i];
        features_out << graph.tick << ',' << graph.vertices[i];
        for (double v : row) features_out << ',' << fmt_double(v);
        features_out << '\n';
    }
}

} // namespace kdnsim
