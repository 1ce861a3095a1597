#include "kdnsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kdnsim/format.hpp"

namespace kdnsim {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct Extent {
    double lo = 0.0;
    double hi = 1.0;
};

Extent extent_of(const std::vector<double>& values) {
    Extent e{0.0, 1.0};
    bool first = true;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        if (first) {
            e.lo = e.hi = v;
            first = false;
        } else {
            e.lo = std::min(e.lo, v);
            e.hi = std::max(e.hi, v);
        }
    }
    if (first) return Extent{0.0, 1.0};
    if (e.hi - e.lo < 1e-12) {
        e.lo -= 0.5;
        e.hi += 0.5;
    }
    return e;
}

std::string coord(double v) { return fmt_double(v, 2); }

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

void open_svg(std::ostringstream& out, int width, int height, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << escape(title) << "</text>\n";
}

} // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series) {
    const int width = 760, height = 420;
    const double left = 70, right = 640, top = 50, bottom = 360;

    std::ostringstream out;
    open_svg(out, width, height, title);

    bool any_data = false;
    std::vector<double> all_x, all_y;
    for (const ChartSeries& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            all_x.push_back(s.x[i]);
            all_y.push_back(s.y[i]);
            any_data = true;
        }

    if (!any_data) {
        out << "<text x=\"" << width / 2 << "\" y=\"" << height / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
               "fill=\"#888\">no data</text>\n</svg>\n";
        return out.str();
    }

    const Extent ex = extent_of(all_x);
    const Extent ey = extent_of(all_y);
    auto px = [&](double v) { return left + (v - ex.lo) / (ex.hi - ex.lo) * (right - left); };
    auto py = [&](double v) { return bottom - (v - ey.lo) / (ey.hi - ey.lo) * (bottom - top); };

    // Axes and reference gridlines.
    out << "<g stroke=\"#000\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(top) << "\" x2=\"" << coord(left)
        << "\" y2=\"" << coord(bottom) << "\"/>\n";
    out << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(bottom) << "\" x2=\""
        << coord(right) << "\" y2=\"" << coord(bottom) << "\"/>\n";
    out << "</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double fy = ey.lo + (ey.hi - ey.lo) * i / 4.0;
        const double yy = py(fy);
        out << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(yy) << "\" x2=\""
            << coord(right) << "\" y2=\"" << coord(yy)
            << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
        out << "<text x=\"" << coord(left - 6) << "\" y=\"" << coord(yy + 4)
            << "\" text-anchor=\"end\">" << fmt_double(fy, 3) << "</text>\n";
        const double fx = ex.lo + (ex.hi - ex.lo) * i / 4.0;
        out << "<text x=\"" << coord(px(fx)) << "\" y=\"" << coord(bottom + 16)
            << "\" text-anchor=\"middle\">" << fmt_double(fx, 3) << "</text>\n";
    }
    out << "<text x=\"" << coord((left + right) / 2) << "\" y=\"" << coord(bottom + 34)
        << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << coord((top + bottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << coord((top + bottom) / 2)
        << ")\">" << escape(y_label) << "</text>\n";
    out << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const ChartSeries& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (n == 1) {
            out << "<circle cx=\"" << coord(px(s.x[0])) << "\" cy=\"" << coord(py(s.y[0]))
                << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        } else if (n > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i) {
                if (i) out << ' ';
                out << coord(px(s.x[i])) << ',' << coord(py(s.y[i]));
            }
            out << "\"/>\n";
        }
        // Legend entry, config order.
        const double ly = top + 16.0 * static_cast<double>(si);
        out << "<rect x=\"" << coord(right + 12) << "\" y=\"" << coord(ly - 8)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << coord(right + 26) << "\" y=\"" << coord(ly + 1)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

namespace {

void draw_bars(std::ostringstream& out, const std::vector<ChartBar>& bars, double left,
               double right, double top, double bottom) {
    std::vector<double> values;
    for (const ChartBar& b : bars) values.push_back(b.value);
    Extent ey = extent_of(values);
    ey.lo = std::min(ey.lo, 0.0);
    auto py = [&](double v) { return bottom - (v - ey.lo) / (ey.hi - ey.lo) * (bottom - top); };

    out << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(bottom) << "\" x2=\""
        << coord(right) << "\" y2=\"" << coord(bottom) << "\" stroke=\"#000\"/>\n";

    const double slot = (right - left) / std::max<std::size_t>(bars.size(), 1);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x = left + slot * static_cast<double>(i) + slot * 0.15;
        const double w = slot * 0.7;
        const double y = py(bars[i].value);
        const char* color = kPalette[i % kPaletteSize];
        out << "<rect x=\"" << coord(x) << "\" y=\"" << coord(std::min(y, py(0.0))) << "\" width=\""
            << coord(w) << "\" height=\"" << coord(std::abs(py(0.0) - y)) << "\" fill=\"" << color
            << "\"/>\n";
        out << "<text x=\"" << coord(x + w / 2) << "\" y=\"" << coord(bottom + 14)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << escape(bars[i].label) << "</text>\n";
        out << "<text x=\"" << coord(x + w / 2) << "\" y=\"" << coord(y - 4)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << fmt_double(bars[i].value, 4) << "</text>\n";
    }
}

} // namespace

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<ChartBar>& bars) {
    const int width = 560, height = 380;
    std::ostringstream out;
    open_svg(out, width, height, title);
    if (bars.empty()) {
        out << "<text x=\"" << width / 2 << "\" y=\"" << height / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
               "fill=\"#888\">no data</text>\n</svg>\n";
        return out.str();
    }
    out << "<text x=\"18\" y=\"190\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\" transform=\"rotate(-90 18 190)\">"
        << escape(y_label) << "</text>\n";
    draw_bars(out, bars, 70, 520, 50, 320);
    out << "</svg>\n";
    return out.str();
}

std::string svg_bar_panels(const std::string& title, const std::vector<BarPanel>& panels) {
    const int panel_w = 320, height = 400;
    const int width = panel_w * std::max<std::size_t>(panels.size(), 1) + 40;
    std::ostringstream out;
    open_svg(out, width, height, title);
    if (panels.empty()) {
        out << "<text x=\"" << width / 2 << "\" y=\"" << height / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
               "fill=\"#888\">no data</text>\n</svg>\n";
        return out.str();
    }
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const double left = 40.0 + panel_w * static_cast<double>(p) + 20.0;
        const double right = left + panel_w - 60.0;
        out << "<text x=\"" << coord((left + right) / 2) << "\" y=\"48\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"13\">"
            << escape(panels[p].title) << "</text>\n";
        draw_bars(out, panels[p].bars, left, right, 70, 340);
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace kdnsim
