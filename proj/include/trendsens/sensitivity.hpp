#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trendsens/series.hpp"
#include "trendsens/trend.hpp"

namespace trendsens {

enum class SweepMode { start_sweep, end_sweep };

std::string_view to_string(SweepMode m);

/// Trend fits over windows that share one fixed endpoint, and the percent
/// change of each slope relative to the base year's slope:
///   pct_change[y] = 100 * (slope[y] - slope[base]) / slope[base].
/// Positive values mean the trend is steeper in the direction of the base trend.
struct SensitivitySweep {
    std::string series_id;
    SweepMode mode = SweepMode::start_sweep;
    int base_year = 0;
    Date fixed_endpoint;
    std::map<int, TrendFit> fits;
    std::map<int, double> pct_change;
    /// Quadratic through (year, pct_change); descriptive only, absent with fewer than 3 years.
    std::optional<QuadraticFit> overlay;
};

/// Windows [Jan 1 of y, end] for each y in start_years.
SensitivitySweep start_date_sweep(const TimeSeries& s, std::span<const int> start_years, Date end,
                                  int base_year);
/// Windows [start, Dec 31 of y] for each y in end_years.
SensitivitySweep end_date_sweep(const TimeSeries& s, std::span<const int> end_years, Date start,
                                int base_year);

struct LongDiffRow {
    int start_year = 0;
    int end_year = 0;
    std::vector<double> values;  // one entry per table column

    std::string label() const { return std::to_string(start_year) + "-" + std::to_string(end_year); }
};

struct LongDiffTable {
    int span_years = 0;
    Aggregation aggregation = Aggregation::mean;
    std::vector<std::string> columns;
    std::vector<LongDiffRow> rows;
    /// One entry per omitted row, naming the series and missing year.
    std::vector<std::string> warnings;
};

using LabeledSeries = std::vector<std::pair<std::string, TimeSeries>>;

LongDiffTable long_difference_table(const LabeledSeries& series, int span_years,
                                    std::span<const int> end_years,
                                    Aggregation how = Aggregation::mean);

struct VolatilityRow {
    Date date;
    double value = 0.0;
    std::optional<double> volatility;  // absent during the rolling-window warm-up
    double influence = 0.0;
    double cooks_d = 0.0;
    double leverage = 0.0;
};

struct VolatilityInfluenceReport {
    std::string series_id;
    int vol_window_years = 0;
    TrendFit fit;
    std::vector<VolatilityRow> rows;
    /// Spearman correlation between rolling volatility and |influence|;
    /// absent when either side is constant or fewer than 3 rows have both.
    std::optional<double> rank_correlation;
};

VolatilityInfluenceReport volatility_influence_report(const TimeSeries& s, const Window& w,
                                                      int vol_window_years);

/// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

}  // namespace trendsens
