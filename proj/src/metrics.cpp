#include "kdnsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kdnsim/format.hpp"

namespace kdnsim {

namespace {

constexpr double kTiny = 1e-12;

bool resources_overlap(const std::vector<ResourceId>& a, const std::vector<ResourceId>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j)
            ++i;
        else
            ++j;
    }
    return false;
}

} // namespace

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double population_variance_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    const double mean = mean_of(xs);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

LatencyStat decision_latency(const RunTrace& trace, Tick timeout_ticks) {
    LatencyStat stat;
    for (const AnomalyEvent& anomaly : trace.anomalies) {
        bool matched = false;
        for (const DispatchEvent& dispatch : trace.dispatches) {
            if (dispatch.tick < anomaly.tick) continue;
            if (dispatch.tick - anomaly.tick > timeout_ticks) break; // dispatches tick-ordered
            if (!resources_overlap(anomaly.touched, dispatch.touched)) continue;
            const double latency = static_cast<double>(dispatch.tick - anomaly.tick) * trace.dt_ms +
                                   dispatch.pipeline_latency_ms;
            stat.samples_ms.push_back(latency);
            matched = true;
            break;
        }
        if (!matched) ++stat.unmatched;
    }
    if (!stat.samples_ms.empty()) stat.mean_ms = mean_of(stat.samples_ms);
    return stat;
}

EffectivenessResult effectiveness(const RunTrace& trace, std::size_t baseline_window,
                                  const MetricsWeights& weights) {
    EffectivenessResult result;
    const std::size_t n = trace.rows.size();
    if (n == 0 || baseline_window == 0 || n <= baseline_window) return result;

    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < baseline_window; ++i) first += trace.rows[i].mean_delay_ms;
    for (std::size_t i = n - baseline_window; i < n; ++i) last += trace.rows[i].mean_delay_ms;
    first /= static_cast<double>(baseline_window);
    last /= static_cast<double>(baseline_window);
    result.delay_reduction = first > kTiny ? std::clamp((first - last) / first, 0.0, 1.0) : 0.0;

    std::vector<double> throughput;
    throughput.reserve(n - baseline_window);
    for (std::size_t i = baseline_window; i < n; ++i)
        throughput.push_back(trace.rows[i].throughput_pkts);
    const double mean = mean_of(throughput);
    const double sd = std::sqrt(population_variance_of(throughput));
    result.throughput_variability = mean > kTiny ? sd / mean : 0.0;

    result.effectiveness_score =
        weights.effectiveness_delay * result.delay_reduction +
        weights.effectiveness_variability * (1.0 - std::min(1.0, result.throughput_variability));
    result.effectiveness_score = std::clamp(result.effectiveness_score, 0.0, 1.0);
    return result;
}

StabilityResult stability(const RunTrace& trace, const MetricsWeights& weights) {
    StabilityResult result;
    const std::size_t n = trace.rows.size();
    if (n < 2) {
        result.stability_score = 1.0;
        return result;
    }

    std::vector<double> deltas;
    deltas.reserve(n - 1);
    std::vector<double> delays;
    delays.reserve(n);
    std::vector<double> throughput;
    throughput.reserve(n);
    for (const TraceRow& row : trace.rows) {
        delays.push_back(row.mean_delay_ms);
        throughput.push_back(row.throughput_pkts);
    }
    for (std::size_t i = 1; i < n; ++i) deltas.push_back(delays[i] - delays[i - 1]);

    result.jitter = std::sqrt(population_variance_of(deltas));
    result.throughput_variance = population_variance_of(throughput);

    // Min-max normalization against the configured reference scales. Both
    // components vanish for constant traces, so the score tops out at 1.
    const double jhat = result.jitter / std::max(weights.jitter_norm_hi, kTiny);
    const double vhat = result.throughput_variance / std::max(weights.variance_norm_hi, kTiny);
    result.stability_score = 1.0 / (1.0 + weights.stability_jitter * jhat +
                                    weights.stability_variance * vhat);
    return result;
}

std::string metrics_report_json(const MetricsReport& report) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"controller\": \"" << report.controller << "\",\n";
    out << "  \"scenario\": \"" << report.scenario << "\",\n";
    out << "  \"seed\": " << report.seed << ",\n";
    out << "  \"steps\": " << report.steps << ",\n";
    out << "  \"reproducibility_hash\": \"" << report.reproducibility_hash << "\",\n";
    out << "  \"decision_latency_ms\": "
        << (report.latency.mean_ms ? fmt_double(*report.latency.mean_ms) : "null") << ",\n";
    out << "  \"latency_samples\": " << report.latency.samples_ms.size() << ",\n";
    out << "  \"unmatched_anomalies\": " << report.latency.unmatched << ",\n";
    out << "  \"delay_reduction\": " << fmt_double(report.eff.delay_reduction) << ",\n";
    out << "  \"throughput_variability\": " << fmt_double(report.eff.throughput_variability)
        << ",\n";
    out << "  \"effectiveness_score\": " << fmt_double(report.eff.effectiveness_score) << ",\n";
    out << "  \"jitter\": " << fmt_double(report.stab.jitter) << ",\n";
    out << "  \"throughput_variance\": " << fmt_double(report.stab.throughput_variance) << ",\n";
    out << "  \"stability_score\": " << fmt_double(report.stab.stability_score) << ",\n";
    out << "  \"actions_dispatched\": " << report.actions_dispatched << "\n";
    out << "}\n";
    return out.str();
}

} // namespace kdnsim
