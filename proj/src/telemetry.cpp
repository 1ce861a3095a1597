#include "kdnsim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "kdnsim/format.hpp"

namespace kdnsim {

PreprocessConfig resolve_thresholds(PreprocessConfig cfg, const Topology& topo) {
    if (cfg.delay_thresh_ms <= 0.0) {
        double sum = 0.0;
        for (const LinkSpec& link : topo.links) sum += link.base_delay_ms;
        const double mean = topo.links.empty() ? 1.0 : sum / static_cast<double>(topo.links.size());
        cfg.delay_thresh_ms = 3.0 * std::max(mean, 1e-9);
    }
    if (cfg.queue_thresh <= 0.0) {
        double max_cap = 0.0;
        for (const LinkSpec& link : topo.links) max_cap = std::max(max_cap, link.capacity);
        cfg.queue_thresh = 0.8 * std::max(max_cap, 1.0);
    }
    if (cfg.penalty_delay_ms <= 0.0) cfg.penalty_delay_ms = 10.0 * cfg.delay_thresh_ms;
    return cfg;
}

TelemetryCollector::TelemetryCollector(PreprocessConfig cfg) : cfg_(cfg) {
    if (!(cfg_.alpha > 0.0 && cfg_.alpha <= 1.0))
        throw std::invalid_argument("preprocess: alpha must be in (0,1]");
    if (!std::isfinite(cfg_.delay_thresh_ms) || !std::isfinite(cfg_.queue_thresh) ||
        !std::isfinite(cfg_.cpu_thresh))
        throw std::invalid_argument("preprocess: thresholds must be finite");
}

TelemetrySnapshot TelemetryCollector::sample(const WorldState& world) const {
    TelemetrySnapshot snap;
    snap.tick = world.clock;
    snap.records.reserve(world.topology.nodes.size());
    for (const NodeSpec& node : world.topology.nodes) {
        TelemetryRecord rec;
        rec.node_id = node.id;
        rec.tick = world.clock;
        rec.gamma = world.cpu_load[node.id];
        double delay_sum = 0.0;
        int up_links = 0;
        for (LinkId lid : world.topology.incident[node.id]) {
            rec.eta += world.queue_len[lid];
            if (link_up(world, lid, world.clock)) {
                delay_sum += link_delay_ms(world, lid, world.clock);
                rec.delta += link_delivered_net(world, lid);
                ++up_links;
            }
        }
        if (node_failed(world, node.id, world.clock) || up_links == 0) {
            rec.lambda = cfg_.penalty_delay_ms;
        } else {
            rec.lambda = delay_sum / up_links;
        }
        rec.epsilon = 0; // set by preprocess
        snap.records.push_back(rec);
    }
    return snap;
}

TelemetrySnapshot TelemetryCollector::preprocess(const TelemetrySnapshot& snapshot) {
    if (smooth_.size() < snapshot.records.size()) smooth_.resize(snapshot.records.size());

    auto normalize = [](double x, const ValueRange& range) {
        const double span = range.hi - range.lo;
        if (span <= 0.0) return 0.0;
        return std::clamp((x - range.lo) / span, 0.0, 1.0);
    };

    TelemetrySnapshot out;
    out.tick = snapshot.tick;
    out.records.reserve(snapshot.records.size());
    const double a = cfg_.alpha;
    for (const TelemetryRecord& raw : snapshot.records) {
        Smoothed& s = smooth_[raw.node_id];
        if (!s.primed) {
            s.lambda = raw.lambda;
            s.delta = raw.delta;
            s.gamma = raw.gamma;
            s.eta = raw.eta;
            s.primed = true;
        } else {
            s.lambda = a * raw.lambda + (1.0 - a) * s.lambda;
            s.delta = a * raw.delta + (1.0 - a) * s.delta;
            s.gamma = a * raw.gamma + (1.0 - a) * s.gamma;
            s.eta = a * raw.eta + (1.0 - a) * s.eta;
        }

        TelemetryRecord rec = raw;
        rec.lambda = s.lambda;
        rec.delta = s.delta;
        rec.gamma = s.gamma;
        rec.eta = s.eta;
        rec.epsilon = (rec.lambda > cfg_.delay_thresh_ms || rec.eta > cfg_.queue_thresh ||
                       rec.gamma > cfg_.cpu_thresh)
                          ? 1
                          : 0;
        rec.norm_lambda = normalize(rec.lambda, cfg_.lambda_range);
        rec.norm_delta = normalize(rec.delta, cfg_.delta_range);
        rec.norm_gamma = normalize(rec.gamma, cfg_.gamma_range);
        rec.norm_eta = normalize(rec.eta, cfg_.eta_range);
        out.records.push_back(rec);
    }
    return out;
}

void write_telemetry_header(std::ostream& out) {
    out << "tick,node_id,lambda,delta,gamma,eta,epsilon\n";
}

void append_telemetry_csv(std::ostream& out, const TelemetrySnapshot& snapshot) {
    for (const TelemetryRecord& rec : snapshot.records) {
        out << snapshot.tick << ',' << rec.node_id << ',' << fmt_double(rec.lambda) << ','
            << fmt_double(rec.delta) << ',' << fmt_double(rec.gamma) << ','
            << fmt_double(rec.eta) << ',' << rec.epsilon << '\n';
    }
}

} // namespace kdnsim
