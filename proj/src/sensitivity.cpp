#include "trendsens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trendsens/error.hpp"

namespace trendsens {

namespace {

constexpr double kMinBaseSlope = 1e-12;

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

template <typename WindowFor>
SensitivitySweep sweep(const TimeSeries& s, std::span<const int> years, int base_year, SweepMode mode,
                       Date fixed, WindowFor window_for) {
    if (std::find(years.begin(), years.end(), base_year) == years.end()) {
        throw config_error("base-not-in-years",
                           "base year " + std::to_string(base_year) + " is not among the swept years");
    }
    SensitivitySweep out;
    out.series_id = s.id();
    out.mode = mode;
    out.base_year = base_year;
    out.fixed_endpoint = fixed;
    for (int y : years) {
        if (out.fits.count(y)) continue;
        try {
            out.fits.emplace(y, fit_linear(s, window_for(y)));
        } catch (const Error& e) {
            throw e.within((mode == SweepMode::start_sweep ? "start year " : "end year ") + std::to_string(y));
        }
    }
    const double base = out.fits.at(base_year).slope;
    if (std::abs(base) < kMinBaseSlope) {
        throw numerical_error("base-slope-zero", s.id() + ": base-year slope is zero; percent change undefined");
    }
    std::vector<XY> curve;
    for (const auto& [year, fit] : out.fits) {
        const double pct = year == base_year ? 0.0 : 100.0 * (fit.slope - base) / base;
        out.pct_change[year] = pct;
        curve.push_back({static_cast<double>(year), pct});
    }
    if (curve.size() >= 3) out.overlay = fit_quadratic(curve);
    return out;
}

}  // namespace

std::string_view to_string(SweepMode m) { return m == SweepMode::start_sweep ? "start_sweep" : "end_sweep"; }

SensitivitySweep start_date_sweep(const TimeSeries& s, std::span<const int> start_years, Date end,
                                  int base_year) {
    return sweep(s, start_years, base_year, SweepMode::start_sweep, end,
                 [&](int y) { return Window(jan1(y), end); });
}

SensitivitySweep end_date_sweep(const TimeSeries& s, std::span<const int> end_years, Date start,
                                int base_year) {
    return sweep(s, end_years, base_year, SweepMode::end_sweep, start,
                 [&](int y) { return Window(start, dec31(y)); });
}

LongDiffTable long_difference_table(const LabeledSeries& series, int span_years, std::span<const int> end_years,
                                    Aggregation how) {
    if (span_years <= 0) throw config_error("bad-span", "long-difference span must be positive");
    LongDiffTable table;
    table.span_years = span_years;
    table.aggregation = how;
    std::vector<TimeSeries> annual;
    for (const auto& [label, s] : series) {
        table.columns.push_back(label);
        annual.push_back(resample_annual(s, how));
    }
    for (int end_year : end_years) {
        LongDiffRow row{end_year - span_years, end_year, {}};
        bool complete = true;
        for (std::size_t k = 0; k < annual.size() && complete; ++k) {
            try {
                row.values.push_back(long_difference(annual[k], span_years, end_year, how));
            } catch (const Error& e) {
                if (e.code() != "missing-year") throw;
                table.warnings.push_back("row " + row.label() + " omitted: " + e.detail());
                complete = false;
            }
        }
        if (complete) table.rows.push_back(std::move(row));
    }
    return table;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 3) return std::nullopt;
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

VolatilityInfluenceReport volatility_influence_report(const TimeSeries& s, const Window& w,
                                                      int vol_window_years) {
    VolatilityInfluenceReport report{s.id(), vol_window_years, fit_linear(s, w), {}, std::nullopt};
    const TrendFit& fit = report.fit;
    const TimeSeries vol = rolling_std(s, vol_window_years);
    const auto influence = influence_values(fit, s);
    const auto cooks = cooks_distance(fit, s);

    std::vector<double> vol_part;
    std::vector<double> abs_if_part;
    for (std::size_t i = 0; i < fit.n; ++i) {
        VolatilityRow row;
        row.date = fit.dates[i];
        row.value = fit.y[i];
        row.volatility = vol.value_at(row.date);
        row.influence = influence[i];
        row.cooks_d = cooks[i];
        row.leverage = fit.leverage[i];
        if (row.volatility) {
            vol_part.push_back(*row.volatility);
            abs_if_part.push_back(std::abs(row.influence));
        }
        report.rows.push_back(row);
    }
    report.rank_correlation = spearman(vol_part, abs_if_part);
    return report;
}

}  // namespace trendsens
