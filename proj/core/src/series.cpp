#include "fearfactor/series.hpp"

#include <algorithm>

namespace fearfactor {

std::vector<double> align_to(const DatedSeries& s, const std::vector<Date>& grid) {
    std::vector<double> out(grid.size(), kMissing);
    std::size_t j = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        while (j < s.dates.size() && s.dates[j] < grid[i]) ++j;
        if (j < s.dates.size() && s.dates[j] == grid[i]) out[i] = s.values[j];
    }
    return out;
}

std::vector<double> first_differences(const std::vector<double>& levels) {
    std::vector<double> out(levels.size(), kMissing);
    for (std::size_t t = 1; t < levels.size(); ++t) out[t] = levels[t] - levels[t - 1];
    return out;
}

std::vector<std::size_t> month_end_indices(const std::vector<Date>& grid) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i + 1 == grid.size() || grid[i + 1].month_index() != grid[i].month_index()) out.push_back(i);
    }
    return out;
}

}  // namespace fearfactor
