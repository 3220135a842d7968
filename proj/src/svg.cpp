#include "flcc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "flcc/errors.hpp"

namespace flcc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

constexpr double kWidth = 760.0;
constexpr double kPanelHeight = 300.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 40.0, kBottom = 45.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_chart_svg(const std::string& path, const std::vector<ChartPanel>& panels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    double total_h = kPanelHeight * panels.size();
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << total_h << "\" viewBox=\"0 0 " << kWidth << ' ' << total_h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const ChartPanel& panel = panels[pi];
        const double y0 = pi * kPanelHeight;
        const double plot_w = kWidth - kLeft - kRight;
        const double plot_h = kPanelHeight - kTop - kBottom;

        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const Series& s : panel.series) {
            for (double v : s.x) {
                if (std::isfinite(v)) {
                    xmin = std::min(xmin, v);
                    xmax = std::max(xmax, v);
                }
            }
            for (double v : s.y) {
                if (std::isfinite(v)) {
                    ymin = std::min(ymin, v);
                    ymax = std::max(ymax, v);
                }
            }
        }
        if (!std::isfinite(xmin)) {
            xmin = 0;
            xmax = 1;
            ymin = 0;
            ymax = 1;
        }
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;

        auto sx = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * plot_w; };
        auto sy = [&](double v) {
            return y0 + kTop + plot_h - (v - ymin) / (ymax - ymin) * plot_h;
        };

        out << "<text x=\"" << kWidth / 2 << "\" y=\"" << y0 + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
            << xml_escape(panel.title) << "</text>\n";
        // axes
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y0 + kTop + plot_h << "\" x2=\""
            << kLeft + plot_w << "\" y2=\"" << y0 + kTop + plot_h
            << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y0 + kTop << "\" x2=\"" << kLeft
            << "\" y2=\"" << y0 + kTop + plot_h << "\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            double fx = xmin + (xmax - xmin) * t / 4.0;
            double fy = ymin + (ymax - ymin) * t / 4.0;
            out << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(y0 + kTop + plot_h + 18)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << tick(fx) << "</text>\n";
            out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(fy) + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                << tick(fy) << "</text>\n";
        }
        out << "<text x=\"" << kWidth / 2 << "\" y=\"" << y0 + kPanelHeight - 8
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << xml_escape(panel.x_label) << "</text>\n";
        out << "<text x=\"16\" y=\"" << y0 + kTop + plot_h / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "transform=\"rotate(-90 16 "
            << y0 + kTop + plot_h / 2 << ")\">" << xml_escape(panel.y_label) << "</text>\n";

        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const Series& s = panel.series[si];
            const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
            out << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
            }
            out << "\"/>\n";
            out << "<text x=\"" << num(kLeft + plot_w - 8) << "\" y=\""
                << num(y0 + kTop + 14 + 14 * si)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
                << color << "\">" << xml_escape(s.label) << "</text>\n";
        }
    }
    out << "</svg>\n";
}

}  // namespace flcc
