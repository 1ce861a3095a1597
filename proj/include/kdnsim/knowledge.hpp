#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <vector>

#include "kdnsim/telemetry.hpp"

namespace kdnsim {

// Sliding buffer of the k+1 most recent snapshots, strictly tick-ordered.
class TelemetryWindow {
public:
    explicit TelemetryWindow(std::size_t k);

    std::size_t capacity() const { return k_ + 1; }
    std::size_t size() const { return buffer_.size(); }
    bool empty() const { return buffer_.empty(); }
    const std::deque<TelemetrySnapshot>& snapshots() const { return buffer_; }

    // Appends, evicting the oldest once full. Rejects out-of-order or
    // duplicate ticks.
    void push(TelemetrySnapshot snapshot);

private:
    std::size_t k_;
    std::deque<TelemetrySnapshot> buffer_;
};

enum class EdgeKind : std::uint8_t { PhysicalLink = 0, FlowDependency };

struct GraphEdge {
    NodeId u = 0;
    NodeId v = 0;
    EdgeKind kind = EdgeKind::PhysicalLink;
    bool up = true; // meaningful for physical links; flow edges always true
};

inline constexpr std::size_t kFeatureCount = 5; // lambda, delta, gamma, eta, epsilon

using FeatureRow = std::array<double, kFeatureCount>;

// Immutable snapshot of system structure plus windowed moving-average
// telemetry per vertex. Row i of `features` belongs to `vertices[i]`;
// vertices ascend by node id.
struct KnowledgeGraph {
    Tick tick = 0;
    std::vector<NodeId> vertices;
    std::vector<GraphEdge> edges;
    std::vector<FeatureRow> features;

    const FeatureRow& row(NodeId node) const { return features[node]; }
    double lambda(NodeId node) const { return features[node][0]; }
    double delta(NodeId node) const { return features[node][1]; }
    double gamma(NodeId node) const { return features[node][2]; }
    double eta(NodeId node) const { return features[node][3]; }
    double anomaly_rate(NodeId node) const { return features[node][4]; }
};

// Moving average over the buffered snapshots (actual count before the window
// fills). Edges are physical links (down ones flagged) plus flow-dependency
// edges between consecutive distinct nodes of active flow paths.
KnowledgeGraph build_graph(const TelemetryWindow& window, const Topology& topology,
                           const std::vector<Flow>& flows);

// Debug dump pair: edges (tick,kind,u,v,up) and features
// (tick,node_id,lambda,delta,gamma,eta,epsilon).
void write_graph_headers(std::ostream& edges_out, std::ostream& features_out);
void append_graph_csv(std::ostream& edges_out, std::ostream& features_out,
                      const KnowledgeGraph& graph);

} // namespace kdnsim
