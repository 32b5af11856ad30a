#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "fearfactor/date.hpp"

namespace fearfactor {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Values on an ascending date grid; NaN marks a missing observation.
struct DatedSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return dates.size(); }
};

/// Value of `s` on each date of `grid` (NaN where `s` has no observation).
std::vector<double> align_to(const DatedSeries& s, const std::vector<Date>& grid);

/// First differences; element 0 and any difference touching a gap are NaN.
std::vector<double> first_differences(const std::vector<double>& levels);

/// Index of the last grid date in each calendar month, in order.
std::vector<std::size_t> month_end_indices(const std::vector<Date>& grid);

}  // namespace fearfactor
