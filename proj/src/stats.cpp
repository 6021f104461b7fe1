#include "eveopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace eveopt {

SummaryStats summarize_values(std::span<const double> values) {
    if (values.empty()) throw ConfigError("summarize: empty value pool");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    SummaryStats s;
    s.count = sorted.size();
    s.min = sorted.front();
    const std::size_t n = sorted.size();
    s.median = n % 2 == 1 ? sorted[n / 2]
                          : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double sum = 0.0;
    for (double v : sorted) sum += v;
    s.mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(n));
    return s;
}

std::string format_grouped(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    std::string s(buf);
    // Insert commas into the integer part, leaving any sign alone.
    const std::size_t dot = s.find('.');
    std::size_t end = dot == std::string::npos ? s.size() : dot;
    const std::size_t begin = s.empty() || (s[0] != '-' && s[0] != '+') ? 0 : 1;
    if (end <= begin) return s;
    for (std::size_t pos = end; pos > begin + 3;) {
        pos -= 3;
        s.insert(pos, ",");
    }
    return s;
}

std::string format_stats_row(const SummaryStats& stats) {
    return format_grouped(stats.median) + " / " + format_grouped(stats.mean) +
           " / " + format_grouped(stats.std) + " / " + format_grouped(stats.min);
}

std::string format_stats_block(
    const std::vector<std::pair<std::string, SummaryStats>>& rows) {
    std::size_t label_w = std::string("Optimizer").size();
    for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());
    std::string out = "Optimizer";
    out.append(label_w - 9, ' ');
    out += " | Median / Mean / STD / min\n";
    for (const auto& [label, stats] : rows) {
        out += label;
        out.append(label_w - label.size(), ' ');
        out += " | " + format_stats_row(stats) + "\n";
    }
    return out;
}

} // namespace eveopt
