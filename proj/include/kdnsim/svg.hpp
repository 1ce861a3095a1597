#pragma once

#include <string>
#include <vector>

namespace kdnsim {

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartBar {
    std::string label;
    double value = 0.0;
};

// Self-contained deterministic SVG emission: fixed palette, fixed-precision
// coordinates, no external renderer. Identical input yields identical bytes.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series);

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<ChartBar>& bars);

// Several bar panels side by side (sub-metric layouts).
struct BarPanel {
    std::string title;
    std::vector<ChartBar> bars;
};
std::string svg_bar_panels(const std::string& title, const std::vector<BarPanel>& panels);

} // namespace kdnsim
