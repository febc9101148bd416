#include "oxsim/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace oxsim::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kPaletteSize = 10;

std::string fmt(double value) {
    if (!std::isfinite(value)) return "0";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

Range data_range(const std::vector<const std::vector<double>*>& columns) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto* column : columns) {
        for (double v : *column) {
            if (std::isfinite(v)) r.expand(v);
        }
    }
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) return {0.0, 1.0};
    if (r.lo == r.hi) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    const double pad = 0.05 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
}

std::vector<double> linear_ticks(const Range& r, int target = 6) {
    const double span = r.hi - r.lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    std::vector<double> ticks;
    for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-12 * span; v += step) {
        ticks.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
    }
    return ticks;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

class Panel {
public:
    Panel(const Chart& chart, int width, int height, double x_offset)
        : chart_(chart), width_(width), height_(height), x0_(x_offset) {
        std::vector<const std::vector<double>*> xs;
        std::vector<const std::vector<double>*> ys;
        for (const auto& s : chart.series) {
            xs.push_back(&s.x);
            ys.push_back(&s.y);
        }
        if (chart.log_x) {
            logged_x_.resize(chart.series.size());
            xs.clear();
            for (std::size_t i = 0; i < chart.series.size(); ++i) {
                for (double v : chart.series[i].x) {
                    logged_x_[i].push_back(v > 0.0 ? std::log10(v) : 0.0);
                }
                xs.push_back(&logged_x_[i]);
            }
        }
        rx_ = data_range(xs);
        ry_ = data_range(ys);
    }

    std::string render() const {
        std::string out;
        out += "<g>\n";
        frame(out);
        axes(out);
        for (std::size_t i = 0; i < chart_.series.size(); ++i) {
            draw_series(out, i);
        }
        legend(out);
        for (const auto& [text, at] : chart_.annotations) {
            out += "<text x=\"" + fmt(px(value_x(at.first))) + "\" y=\"" +
                   fmt(py(at.second)) + "\" font-size=\"12\" fill=\"#333\">" + escape(text) +
                   "</text>\n";
        }
        out += "</g>\n";
        return out;
    }

private:
    static constexpr double kMarginLeft = 62.0;
    static constexpr double kMarginRight = 16.0;
    static constexpr double kMarginTop = 34.0;
    static constexpr double kMarginBottom = 46.0;

    double value_x(double v) const { return chart_.log_x && v > 0.0 ? std::log10(v) : v; }

    double px(double vx) const {
        const double w = width_ - kMarginLeft - kMarginRight;
        return x0_ + kMarginLeft + (vx - rx_.lo) / (rx_.hi - rx_.lo) * w;
    }
    double py(double vy) const {
        const double h = height_ - kMarginTop - kMarginBottom;
        return kMarginTop + (ry_.hi - vy) / (ry_.hi - ry_.lo) * h;
    }

    void frame(std::string& out) const {
        out += "<rect x=\"" + fmt(x0_ + kMarginLeft) + "\" y=\"" + fmt(kMarginTop) +
               "\" width=\"" + fmt(width_ - kMarginLeft - kMarginRight) + "\" height=\"" +
               fmt(height_ - kMarginTop - kMarginBottom) +
               "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + fmt(x0_ + width_ / 2.0) +
               "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\" fill=\"#111\">" +
               escape(chart_.title) + "</text>\n";
        out += "<text x=\"" + fmt(x0_ + width_ / 2.0) + "\" y=\"" + fmt(height_ - 8.0) +
               "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\">" +
               escape(chart_.x_label) + "</text>\n";
        out += "<text x=\"" + fmt(x0_ + 14.0) + "\" y=\"" + fmt(height_ / 2.0) +
               "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\" transform=\"rotate(-90 " +
               fmt(x0_ + 14.0) + " " + fmt(height_ / 2.0) + ")\">" + escape(chart_.y_label) +
               "</text>\n";
    }

    void axes(std::string& out) const {
        for (double tick : linear_ticks(rx_)) {
            const double x = px(tick);
            out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(py(ry_.lo)) + "\" x2=\"" + fmt(x) +
                   "\" y2=\"" + fmt(py(ry_.lo) + 4) + "\" stroke=\"#444\"/>\n";
            const std::string label = chart_.log_x ? ("1e" + fmt(tick)) : fmt(tick);
            out += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(py(ry_.lo) + 17) +
                   "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333\">" + label +
                   "</text>\n";
        }
        for (double tick : linear_ticks(ry_)) {
            const double y = py(tick);
            out += "<line x1=\"" + fmt(x0_ + kMarginLeft - 4) + "\" y1=\"" + fmt(y) +
                   "\" x2=\"" + fmt(x0_ + kMarginLeft) + "\" y2=\"" + fmt(y) +
                   "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + fmt(x0_ + kMarginLeft - 7) + "\" y=\"" + fmt(y + 3) +
                   "\" font-size=\"10\" text-anchor=\"end\" fill=\"#333\">" + fmt(tick) +
                   "</text>\n";
        }
    }

    void draw_series(std::string& out, std::size_t index) const {
        const Series& s = chart_.series[index];
        const char* color = kPalette[index % kPaletteSize];
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                out += "<circle cx=\"" + fmt(px(value_x(s.x[i]))) + "\" cy=\"" + fmt(py(s.y[i])) +
                       "\" r=\"1.6\" fill=\"" + color + "\" fill-opacity=\"0.55\"/>\n";
            }
            return;
        }
        std::string points;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            points += fmt(px(value_x(s.x[i]))) + "," + fmt(py(s.y[i])) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.4\" points=\"" + points + "\"/>\n";
    }

    void legend(std::string& out) const {
        double y = kMarginTop + 12.0;
        for (std::size_t i = 0; i < chart_.series.size(); ++i) {
            if (chart_.series[i].label.empty()) continue;
            const char* color = kPalette[i % kPaletteSize];
            const double x = x0_ + width_ - kMarginRight - 120.0;
            out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y - 4) + "\" x2=\"" + fmt(x + 16) +
                   "\" y2=\"" + fmt(y - 4) + "\" stroke=\"" + color +
                   "\" stroke-width=\"2\"/>\n";
            out += "<text x=\"" + fmt(x + 20) + "\" y=\"" + fmt(y) +
                   "\" font-size=\"10\" fill=\"#333\">" + escape(chart_.series[i].label) +
                   "</text>\n";
            y += 13.0;
        }
    }

    const Chart& chart_;
    int width_;
    int height_;
    double x0_ = 0.0;
    Range rx_;
    Range ry_;
    std::vector<std::vector<double>> logged_x_;
};

std::string document(int width, int height, const std::string& body) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += body;
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string Chart::render(int width, int height) const {
    return document(width, height, Panel(*this, width, height, 0.0).render());
}

std::string render_panels(const std::vector<Chart>& charts, int panel_width,
                          int panel_height) {
    std::string body;
    double offset = 0.0;
    for (const auto& chart : charts) {
        body += Panel(chart, panel_width, panel_height, offset).render();
        offset += panel_width;
    }
    return document(panel_width * static_cast<int>(charts.size()), panel_height, body);
}

}  // namespace oxsim::svg
