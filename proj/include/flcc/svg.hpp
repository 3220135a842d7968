#pragma once

#include <string>
#include <vector>

namespace flcc {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Deterministic multi-panel line chart. No rendering dependency; the output
/// is plain SVG markup, stable byte-for-byte for identical inputs.
void write_chart_svg(const std::string& path, const std::vector<ChartPanel>& panels);

}  // namespace flcc
