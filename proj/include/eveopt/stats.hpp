#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eveopt/errors.hpp"

namespace eveopt {

// Order statistics and moments of a loss pool. median uses the midpoint
// convention for even counts; std is the population standard deviation.
struct SummaryStats {
    double median = 0.0;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    std::size_t count = 0;
};

// Throws ConfigError on empty input.
SummaryStats summarize_values(std::span<const double> values);

// Formats a number with two decimals and comma thousands grouping
// (e.g. 3833.714 -> "3,833.71").
std::string format_grouped(double value);

// One Median / Mean / STD / min row, e.g. "3.73 / 251.93 / 3,833.71 / 2.55".
std::string format_stats_row(const SummaryStats& stats);

// Multi-row stats block with a header line; rows are (label, stats) pairs.
std::string format_stats_block(
    const std::vector<std::pair<std::string, SummaryStats>>& rows);

} // namespace eveopt
