#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eveopt {

// Minimal deterministic SVG emission: standalone documents, fixed palette,
// no external assets. Values are plotted on a log10 y-axis when every value
// is positive, linearly otherwise.

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Line plot with one polyline per series.
std::string svg_line_plot(const std::string& title,
                          std::span<const SvgSeries> series,
                          const std::string& x_label,
                          const std::string& y_label);

// Histogram of `values` with the given bin count (log-spaced bins when all
// values are positive).
std::string svg_histogram(const std::string& title,
                          std::span<const double> values, int bins,
                          const std::string& x_label);

} // namespace eveopt
