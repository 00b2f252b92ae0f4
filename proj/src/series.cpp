#include "trendsens/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>
#include <set>

#include "trendsens/error.hpp"

namespace trendsens {

namespace chr = std::chrono;

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

int month_index(Date d) {
    return static_cast<int>(d.year()) * 12 + static_cast<int>(static_cast<unsigned>(d.month())) - 1;
}

unsigned days_in_month(Date d) {
    return static_cast<unsigned>(chr::year_month_day_last(d.year(), chr::month_day_last(d.month())).day());
}

int frequency_rank(Frequency f) {
    switch (f) {
        case Frequency::daily: return 0;
        case Frequency::monthly: return 1;
        case Frequency::quarterly: return 2;
        case Frequency::annual: return 3;
    }
    return 0;
}

// Start date of the target-frequency period containing d.
Date period_start(Date d, Frequency target) {
    const int y = year_of(d);
    const unsigned m = static_cast<unsigned>(d.month());
    switch (target) {
        case Frequency::annual: return jan1(y);
        case Frequency::quarterly: return make_date(y, (m - 1) / 3 * 3 + 1, 1);
        case Frequency::monthly: return make_date(y, m, 1);
        case Frequency::daily: return d;
    }
    return d;
}

Date add_months(Date d, int months) {
    const int idx = month_index(d) + months;
    const int y = idx >= 0 ? idx / 12 : (idx - 11) / 12;
    const unsigned m = static_cast<unsigned>(idx - y * 12) + 1;
    return make_date(y, m, static_cast<unsigned>(d.day()));
}

long days_between(Date a, Date b) {
    return (chr::sys_days(b) - chr::sys_days(a)).count();
}

// Number of source-frequency observations a complete target period holds.
long expected_count(Date period, Frequency source, Frequency target) {
    if (source != Frequency::daily) return months_per_period(target) / months_per_period(source);
    const Date next = target == Frequency::daily ? Date(chr::sys_days(period) + chr::days(1))
                                                 : add_months(period, months_per_period(target));
    return days_between(period, next);
}

// Observations a full trailing window (d - years, d] should contain.
long window_expected_count(const TimeSeries& s, Date d, int years) {
    if (s.frequency() == Frequency::daily) return days_between(add_years(d, -years), d);
    return static_cast<long>(years) * 12 / months_per_period(s.frequency());
}

template <typename Reducer>
TimeSeries trailing_windows(const TimeSeries& s, int window_years, std::size_t min_points,
                            Reducer reduce) {
    std::vector<Point> out;
    const auto& pts = s.points();
    std::size_t first = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Date lower = add_years(pts[i].date, -window_years);
        while (pts[first].date <= lower) ++first;
        const std::size_t count = i - first + 1;
        if (static_cast<long>(count) != window_expected_count(s, pts[i].date, window_years)) continue;
        if (count < min_points) continue;
        out.push_back({pts[i].date, reduce(std::span<const Point>(pts.data() + first, count))});
    }
    return s.with_points(std::move(out));
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::numerical: return 4;
    }
    return 1;
}

Date make_date(int year, unsigned month, unsigned day) {
    return Date{chr::year{year}, chr::month{month}, chr::day{day}};
}

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !all_digits(text.substr(0, 4)) ||
        !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
        throw data_error("bad-date", "expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    const Date d = make_date(to_int(text.substr(0, 4)), static_cast<unsigned>(to_int(text.substr(5, 2))),
                             static_cast<unsigned>(to_int(text.substr(8, 2))));
    if (!d.ok()) throw data_error("bad-date", "no such calendar date '" + std::string(text) + "'");
    return d;
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

Date jan1(int year) { return make_date(year, 1, 1); }
Date dec31(int year) { return make_date(year, 12, 31); }
int year_of(Date d) { return static_cast<int>(d.year()); }

Date add_years(Date d, int years) {
    Date out = d + chr::years{years};
    if (!out.ok()) out = make_date(year_of(out), static_cast<unsigned>(out.month()), 28);
    return out;
}

double decimal_year(Date d) {
    const double month = static_cast<double>(static_cast<unsigned>(d.month()) - 1);
    const double day = static_cast<double>(static_cast<unsigned>(d.day()) - 1);
    return static_cast<double>(year_of(d)) + month / 12.0 + day / (12.0 * days_in_month(d));
}

std::string_view to_string(Frequency f) {
    switch (f) {
        case Frequency::annual: return "annual";
        case Frequency::quarterly: return "quarterly";
        case Frequency::monthly: return "monthly";
        case Frequency::daily: return "daily";
    }
    return "?";
}

std::string_view to_string(Unit u) {
    switch (u) {
        case Unit::percent_points: return "percent_points";
        case Unit::ratio: return "ratio";
        case Unit::dollars: return "dollars";
        case Unit::index: return "index";
        case Unit::persons: return "persons";
    }
    return "?";
}

std::string_view to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "last"; }

Frequency parse_frequency(std::string_view text) {
    for (auto f : {Frequency::annual, Frequency::quarterly, Frequency::monthly, Frequency::daily})
        if (to_string(f) == text) return f;
    throw config_error("bad-frequency", "unknown frequency '" + std::string(text) + "'");
}

Unit parse_unit(std::string_view text) {
    for (auto u : {Unit::percent_points, Unit::ratio, Unit::dollars, Unit::index, Unit::persons})
        if (to_string(u) == text) return u;
    throw config_error("bad-unit", "unknown unit '" + std::string(text) + "'");
}

Aggregation parse_aggregation(std::string_view text) {
    if (text == "mean") return Aggregation::mean;
    if (text == "last") return Aggregation::last;
    throw config_error("bad-aggregation", "unknown aggregation '" + std::string(text) + "'");
}

int months_per_period(Frequency f) {
    switch (f) {
        case Frequency::annual: return 12;
        case Frequency::quarterly: return 3;
        case Frequency::monthly: return 1;
        case Frequency::daily: return 0;
    }
    return 0;
}

bool finer_than(Frequency a, Frequency b) { return frequency_rank(a) < frequency_rank(b); }

Window::Window(Date s, Date e) : start(s), end(e) {
    if (!s.ok() || !e.ok()) throw config_error("bad-window", "invalid calendar date");
    if (e < s) throw config_error("bad-window", "start " + format_date(s) + " after end " + format_date(e));
}

Window Window::years(int first_year, int last_year) { return Window(jan1(first_year), dec31(last_year)); }

std::optional<Window> Window::intersect(const Window& other) const {
    const Date s = std::max(start, other.start);
    const Date e = std::min(end, other.end);
    if (e < s) return std::nullopt;
    return Window(s, e);
}

TimeSeries::TimeSeries(std::string id, Frequency freq, Unit unit, std::vector<Point> points,
                       Metadata metadata)
    : id_(std::move(id)), freq_(freq), unit_(unit), points_(std::move(points)), metadata_(std::move(metadata)) {
    const int step = months_per_period(freq_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const Date d = points_[i].date;
        if (!d.ok()) throw data_error("bad-date", id_ + ": invalid date at position " + std::to_string(i));
        if (step > 0) {
            const unsigned m = static_cast<unsigned>(d.month());
            if (static_cast<unsigned>(d.day()) != 1 || (m - 1) % static_cast<unsigned>(step) != 0) {
                throw data_error("frequency-mismatch", id_ + ": " + format_date(d) + " is not a " +
                                                           std::string(to_string(freq_)) + " period start");
            }
        }
        if (i == 0) continue;
        const Date prev = points_[i - 1].date;
        if (!(prev < d)) {
            throw data_error("unordered-dates", id_ + ": " + format_date(d) + " does not follow " + format_date(prev));
        }
        if (step > 0 && month_index(d) - month_index(prev) < step) {
            throw data_error("frequency-mismatch", id_ + ": sub-" + std::string(to_string(freq_)) +
                                                       " spacing at " + format_date(d));
        }
    }
}

std::vector<Date> TimeSeries::dates() const {
    std::vector<Date> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.date);
    return out;
}

std::vector<double> TimeSeries::values() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.value);
    return out;
}

std::optional<double> TimeSeries::value_at(Date d) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), d,
                               [](const Point& p, Date key) { return p.date < key; });
    if (it == points_.end() || it->date != d) return std::nullopt;
    return it->value;
}

TimeSeries TimeSeries::with_id(std::string id) const {
    TimeSeries out = *this;
    out.id_ = std::move(id);
    return out;
}

TimeSeries TimeSeries::with_unit(Unit unit) const {
    TimeSeries out = *this;
    out.unit_ = unit;
    return out;
}

TimeSeries TimeSeries::with_points(std::vector<Point> points) const {
    return TimeSeries(id_, freq_, unit_, std::move(points), metadata_);
}

TimeSeries TimeSeries::with_metadata(const std::string& key, std::string value) const {
    TimeSeries out = *this;
    out.metadata_[key] = std::move(value);
    return out;
}

TimeSeries slice(const TimeSeries& s, const Window& w) {
    std::vector<Point> out;
    for (const auto& p : s.points())
        if (w.contains(p.date)) out.push_back(p);
    return s.with_points(std::move(out));
}

TimeSeries resample(const TimeSeries& s, Frequency target, Aggregation how) {
    if (s.frequency() == target) return s;
    if (finer_than(target, s.frequency())) {
        throw config_error("resample-direction", s.id() + ": cannot aggregate " +
                                                     std::string(to_string(s.frequency())) + " to finer " +
                                                     std::string(to_string(target)));
    }
    std::vector<Point> out;
    std::string partial;
    const auto& pts = s.points();
    for (std::size_t i = 0; i < pts.size();) {
        const Date period = period_start(pts[i].date, target);
        std::size_t j = i;
        double sum = 0.0;
        while (j < pts.size() && period_start(pts[j].date, target) == period) sum += pts[j++].value;
        const std::size_t count = j - i;
        const double value = how == Aggregation::mean ? sum / static_cast<double>(count) : pts[j - 1].value;
        out.push_back({period, value});
        if (static_cast<long>(count) < expected_count(period, s.frequency(), target)) {
            if (!partial.empty()) partial += ',';
            partial += format_date(period);
        }
        i = j;
    }
    Metadata meta = s.metadata();
    meta["aggregation"] = std::string(to_string(how));
    if (!partial.empty()) meta["partial_periods"] = partial;
    return TimeSeries(s.id(), target, s.unit(), std::move(out), std::move(meta));
}

TimeSeries resample_annual(const TimeSeries& s, Aggregation how) {
    return resample(s, Frequency::annual, how);
}

TimeSeries hold_to_frequency(const TimeSeries& s, Frequency target) {
    if (s.frequency() == target) return s;
    if (target == Frequency::daily || finer_than(s.frequency(), target)) {
        throw config_error("hold-direction", s.id() + ": cannot hold " + std::string(to_string(s.frequency())) +
                                                 " values at " + std::string(to_string(target)) + " frequency");
    }
    const int ratio = months_per_period(s.frequency()) / months_per_period(target);
    std::vector<Point> out;
    out.reserve(s.size() * static_cast<std::size_t>(ratio));
    for (const auto& p : s.points())
        for (int k = 0; k < ratio; ++k) out.push_back({add_months(p.date, k * months_per_period(target)), p.value});
    Metadata meta = s.metadata();
    meta["disaggregation"] = "hold";
    return TimeSeries(s.id(), target, s.unit(), std::move(out), std::move(meta));
}

TimeSeries convert_frequency(const TimeSeries& s, Frequency target, Aggregation how) {
    if (finer_than(s.frequency(), target)) return resample(s, target, how);
    return hold_to_frequency(s, target);
}

TimeSeries moving_average(const TimeSeries& s, int window_years) {
    if (window_years <= 0) throw config_error("bad-window", "moving-average window must be positive");
    if (s.empty()) throw data_error("empty-series", s.id() + ": moving average of an empty series");
    // Sums are taken relative to the window's first value so constant windows are exact.
    return trailing_windows(s, window_years, 1, [](std::span<const Point> w) {
        const double shift = w.front().value;
        double sum = 0.0;
        for (const auto& p : w) sum += p.value - shift;
        return shift + sum / static_cast<double>(w.size());
    });
}

TimeSeries rolling_std(const TimeSeries& s, int window_years) {
    if (window_years <= 0) throw config_error("bad-window", "rolling-std window must be positive");
    auto out = trailing_windows(s, window_years, 2, [](std::span<const Point> w) {
        const double shift = w.front().value;
        double mean = 0.0;
        for (const auto& p : w) mean += p.value - shift;
        mean /= static_cast<double>(w.size());
        double ss = 0.0;
        for (const auto& p : w) ss += (p.value - shift - mean) * (p.value - shift - mean);
        return std::sqrt(ss / static_cast<double>(w.size() - 1));
    });
    if (out.empty()) {
        throw data_error("no-full-window", s.id() + ": no complete " + std::to_string(window_years) +
                                               "-year window with at least two points");
    }
    return out;
}

double long_difference(const TimeSeries& s, int span_years, int end_year, Aggregation how) {
    const TimeSeries annual = resample_annual(s, how);
    const int start_year = end_year - span_years;
    const auto last = annual.value_at(jan1(end_year));
    const auto first = annual.value_at(jan1(start_year));
    if (!first) throw data_error("missing-year", s.id() + ": no observation in " + std::to_string(start_year));
    if (!last) throw data_error("missing-year", s.id() + ": no observation in " + std::to_string(end_year));
    return *last - *first;
}

std::vector<TimeSeries> align(const std::vector<TimeSeries>& series) {
    if (series.empty()) return {};
    for (const auto& s : series) {
        if (s.frequency() != series.front().frequency()) {
            throw data_error("frequency-mismatch", "cannot align " + series.front().id() + " (" +
                                                       std::string(to_string(series.front().frequency())) +
                                                       ") with " + s.id() + " (" +
                                                       std::string(to_string(s.frequency())) + ")");
        }
    }
    std::vector<Date> common = series.front().dates();
    for (std::size_t k = 1; k < series.size(); ++k) {
        const auto other = series[k].dates();
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), other.begin(), other.end(), std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) {
        std::string ids;
        for (const auto& s : series) ids += (ids.empty() ? "" : ", ") + s.id();
        throw data_error("empty-intersection", "no common dates among " + ids);
    }
    std::vector<TimeSeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        if (s.size() == common.size()) {
            out.push_back(s);
            continue;
        }
        std::vector<Point> pts;
        pts.reserve(common.size());
        std::size_t c = 0;
        for (const auto& p : s.points()) {
            if (c < common.size() && p.date == common[c]) {
                pts.push_back(p);
                ++c;
            }
        }
        out.push_back(s.with_points(std::move(pts)));
    }
    return out;
}

TimeSeries map_values(const TimeSeries& s, const std::function<double(double)>& fn, std::string id, Unit unit) {
    std::vector<Point> out;
    out.reserve(s.size());
    for (const auto& p : s.points()) out.push_back({p.date, fn(p.value)});
    return TimeSeries(std::move(id), s.frequency(), unit, std::move(out));
}

TimeSeries combine(const std::vector<TimeSeries>& inputs,
                   const std::function<double(std::span<const double>)>& fn, std::string id, Unit unit) {
    const auto aligned = align(inputs);
    const std::size_t n = aligned.front().size();
    std::vector<Point> out;
    out.reserve(n);
    std::vector<double> row(aligned.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < aligned.size(); ++k) row[k] = aligned[k][i].value;
        out.push_back({aligned.front()[i].date, fn(row)});
    }
    return TimeSeries(std::move(id), aligned.front().frequency(), unit, std::move(out));
}

}  // namespace trendsens
