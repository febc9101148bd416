#pragma once

#include <string>
#include <vector>

namespace oxsim::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;  // markers instead of a polyline
};

/// Single-panel chart. Deterministic output: fixed palette, shortest
/// round-trip number formatting, no timestamps.
struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    std::vector<Series> series;
    std::vector<std::pair<std::string, std::pair<double, double>>> annotations;  // text at (x, y)

    [[nodiscard]] std::string render(int width = 640, int height = 420) const;
};

/// Side-by-side panels in one SVG document.
std::string render_panels(const std::vector<Chart>& charts, int panel_width = 520,
                          int panel_height = 400);

}  // namespace oxsim::svg
