#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trendsens {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view text);
std::string format_date(Date d);
Date make_date(int year, unsigned month, unsigned day);
Date jan1(int year);
Date dec31(int year);
int year_of(Date d);
/// Calendar shift by whole years; Feb 29 clamps to Feb 28.
Date add_years(Date d, int years);

/// Decimal-year coordinate used as the regression time axis.  Month and
/// quarter starts fall on exact multiples of 1/12 and 1/4.
double decimal_year(Date d);

enum class Frequency { annual, quarterly, monthly, daily };
enum class Unit { percent_points, ratio, dollars, index, persons };
enum class Aggregation { mean, last };

std::string_view to_string(Frequency f);
std::string_view to_string(Unit u);
std::string_view to_string(Aggregation a);
Frequency parse_frequency(std::string_view text);
Unit parse_unit(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

/// Months between consecutive stamps (12, 3, 1); 0 for daily.
int months_per_period(Frequency f);
/// True when `a` is strictly finer than `b` (daily < monthly < quarterly < annual).
bool finer_than(Frequency a, Frequency b);

struct Point {
    Date date;
    double value;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Inclusive calendar window.
struct Window {
    Date start;
    Date end;

    Window(Date s, Date e);
    static Window years(int first_year, int last_year);

    bool contains(Date d) const { return start <= d && d <= end; }
    std::optional<Window> intersect(const Window& other) const;

    friend bool operator==(const Window&, const Window&) = default;
};

using Metadata = std::map<std::string, std::string>;

/// Ordered, single-unit observations at a declared frequency.
///
/// Construction validates that dates are strictly increasing and, for the
/// month-based frequencies, stamped at period start with no sub-frequency
/// spacing.  Gaps are allowed.
class TimeSeries {
public:
    TimeSeries(std::string id, Frequency freq, Unit unit, std::vector<Point> points,
               Metadata metadata = {});

    const std::string& id() const noexcept { return id_; }
    Frequency frequency() const noexcept { return freq_; }
    Unit unit() const noexcept { return unit_; }
    const std::vector<Point>& points() const noexcept { return points_; }
    const Metadata& metadata() const noexcept { return metadata_; }

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    const Point& front() const { return points_.front(); }
    const Point& back() const { return points_.back(); }

    std::vector<Date> dates() const;
    std::vector<double> values() const;
    std::optional<double> value_at(Date d) const;

    TimeSeries with_id(std::string id) const;
    TimeSeries with_unit(Unit unit) const;
    TimeSeries with_points(std::vector<Point> points) const;
    TimeSeries with_metadata(const std::string& key, std::string value) const;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::string id_;
    Frequency freq_;
    Unit unit_;
    std::vector<Point> points_;
    Metadata metadata_;
};

TimeSeries slice(const TimeSeries& s, const Window& w);

/// Aggregates to a coarser (or equal) frequency.  Periods with fewer than
/// the expected number of sub-observations are kept and listed in the
/// "partial_periods" metadata entry.
TimeSeries resample(const TimeSeries& s, Frequency target, Aggregation how);
TimeSeries resample_annual(const TimeSeries& s, Aggregation how);

/// Repeats each observation across the finer periods it covers (step hold).
TimeSeries hold_to_frequency(const TimeSeries& s, Frequency target);

/// Brings a series to `target`: finer inputs are aggregated with `how`,
/// coarser inputs are held.
TimeSeries convert_frequency(const TimeSeries& s, Frequency target, Aggregation how = Aggregation::mean);

/// Trailing mean over (date - window_years, date]; emitted only for full windows.
TimeSeries moving_average(const TimeSeries& s, int window_years);
/// Trailing sample standard deviation (divisor n - 1) over full windows.
TimeSeries rolling_std(const TimeSeries& s, int window_years);

/// value(end_year) - value(end_year - span) on the annualized series.
double long_difference(const TimeSeries& s, int span_years, int end_year,
                       Aggregation how = Aggregation::mean);

/// Restricts every input to the common set of dates.
std::vector<TimeSeries> align(const std::vector<TimeSeries>& series);

/// Pointwise map, preserving dates.
TimeSeries map_values(const TimeSeries& s, const std::function<double(double)>& fn,
                      std::string id, Unit unit);

/// Aligns and combines a list of series pointwise.
TimeSeries combine(const std::vector<TimeSeries>& inputs,
                   const std::function<double(std::span<const double>)>& fn,
                   std::string id, Unit unit);

}  // namespace trendsens
