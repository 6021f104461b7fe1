#include "eveopt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace eveopt {

namespace {

constexpr double kWidth = 720.0, kHeight = 440.0;
constexpr double kLeft = 72.0, kRight = 24.0, kTop = 40.0, kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};
constexpr int kPaletteSize = 10;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double transform(double v) const { return log ? std::log10(v) : v; }
    // Fraction of the axis (0..1) for a data value.
    double frac(double v) const {
        const double t = transform(v);
        return hi == lo ? 0.5 : (t - lo) / (hi - lo);
    }
};

Axis fit_axis(std::span<const double> values, bool allow_log) {
    Axis ax;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool all_pos = true;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v <= 0.0) all_pos = false;
    }
    if (!std::isfinite(lo)) { lo = 0.0; hi = 1.0; }
    ax.log = allow_log && all_pos && hi > 0.0;
    if (ax.log) {
        ax.lo = std::log10(lo);
        ax.hi = std::log10(hi);
    } else {
        ax.lo = lo;
        ax.hi = hi;
    }
    if (ax.hi == ax.lo) ax.hi = ax.lo + 1.0;
    return ax;
}

std::string header(const std::string& title) {
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
         " " + num(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) +
         "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
         "text-anchor=\"middle\">" +
         esc(title) + "</text>\n";
    return s;
}

std::string axes_and_ticks(const Axis& xax, const Axis& yax,
                           const std::string& x_label,
                           const std::string& y_label) {
    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;
    std::string s;
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) +
         "\" y2=\"" + num(y0) + "\" stroke=\"#333333\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) +
         "\" y2=\"" + num(y1) + "\" stroke=\"#333333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double f = i / 5.0;
        const double px = x0 + f * (x1 - x0);
        const double py = y0 - f * (y0 - y1);
        const double xv = xax.lo + f * (xax.hi - xax.lo);
        const double yv = yax.lo + f * (yax.hi - yax.lo);
        s += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px) +
             "\" y2=\"" + num(y0 + 5) + "\" stroke=\"#333333\"/>\n";
        s += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 18) +
             "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"middle\">" +
             sci(xax.log ? std::pow(10.0, xv) : xv) + "</text>\n";
        s += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py) + "\" x2=\"" +
             num(x0) + "\" y2=\"" + num(py) + "\" stroke=\"#333333\"/>\n";
        s += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"end\">" +
             sci(yax.log ? std::pow(10.0, yv) : yv) + "</text>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">" +
         esc(x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num((y0 + y1) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 " +
         num((y0 + y1) / 2) + ")\">" + esc(y_label) + "</text>\n";
    return s;
}

} // namespace

std::string svg_line_plot(const std::string& title,
                          std::span<const SvgSeries> series,
                          const std::string& x_label,
                          const std::string& y_label) {
    std::vector<double> all_x, all_y;
    for (const auto& s : series) {
        all_x.insert(all_x.end(), s.x.begin(), s.x.end());
        all_y.insert(all_y.end(), s.y.begin(), s.y.end());
    }
    const Axis xax = fit_axis(all_x, false);
    const Axis yax = fit_axis(all_y, true);

    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;

    std::string svg = header(title);
    svg += axes_and_ticks(xax, yax, x_label,
                          yax.log ? y_label + " (log scale)" : y_label);
    int color = 0;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            const double px = x0 + xax.frac(s.x[i]) * (x1 - x0);
            const double py = y0 - yax.frac(s.y[i]) * (y0 - y1);
            pts += num(px) + "," + num(py) + " ";
        }
        if (!pts.empty()) pts.pop_back();
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += kPalette[color % kPaletteSize];
        svg += "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

std::string svg_histogram(const std::string& title,
                          std::span<const double> values, int bins,
                          const std::string& x_label) {
    if (bins < 1) bins = 1;
    const Axis xax = fit_axis(values, true);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        double f = xax.frac(v);
        f = std::clamp(f, 0.0, 1.0);
        auto b = static_cast<std::size_t>(f * bins);
        if (b >= counts.size()) b = counts.size() - 1;
        counts[b] += 1;
    }
    const double max_count = static_cast<double>(
        *std::max_element(counts.begin(), counts.end()));

    Axis yax;
    yax.lo = 0.0;
    yax.hi = std::max(1.0, max_count);

    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;

    std::string svg = header(title);
    svg += axes_and_ticks(xax, yax,
                          xax.log ? x_label + " (log scale)" : x_label, "count");
    const double bw = (x1 - x0) / bins;
    for (int b = 0; b < bins; ++b) {
        const double h = (y0 - y1) * counts[static_cast<std::size_t>(b)] / yax.hi;
        svg += "<rect x=\"" + num(x0 + b * bw + 1) + "\" y=\"" + num(y0 - h) +
               "\" width=\"" + num(bw - 2) + "\" height=\"" + num(h) +
               "\" fill=\"#1f77b4\" stroke=\"#123a5e\" stroke-width=\"0.5\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace eveopt
