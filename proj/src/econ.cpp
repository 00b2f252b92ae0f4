#include "trendsens/econ.hpp"

#include <cmath>

#include "trendsens/error.hpp"

namespace trendsens {

namespace {

void require_all(const TimeSeries& s, bool (*ok)(double), const char* code, const std::string& what) {
    for (const auto& p : s.points()) {
        if (!ok(p.value)) {
            throw numerical_error(code, s.id() + " at " + format_date(p.date) + ": " + what + " (value " +
                                            std::to_string(p.value) + ")");
        }
    }
}

}  // namespace

std::string_view to_string(GrowthMode g) { return g == GrowthMode::log ? "log" : "simple"; }

GrowthMode parse_growth_mode(std::string_view text) {
    if (text == "log") return GrowthMode::log;
    if (text == "simple") return GrowthMode::simple;
    throw config_error("bad-growth-mode", "unknown growth mode '" + std::string(text) + "'");
}

TimeSeries expected_inflation(const TimeSeries& index, GrowthMode growth, int window_years) {
    require_all(index, [](double v) { return v > 0.0; }, "nonpositive-index", "price index must be positive");
    std::vector<Point> yoy;
    for (const auto& p : index.points()) {
        const auto prior = index.value_at(add_years(p.date, -1));
        if (!prior) continue;
        const double ratio = p.value / *prior;
        yoy.push_back({p.date, 100.0 * (growth == GrowthMode::log ? std::log(ratio) : ratio - 1.0)});
    }
    if (yoy.empty()) {
        throw data_error("insufficient-history", index.id() + ": no year-over-year pairs to compute inflation");
    }
    const TimeSeries growth_series(index.id() + "_yoy", index.frequency(), Unit::percent_points, std::move(yoy));
    TimeSeries nu = moving_average(growth_series, window_years);
    if (nu.empty()) {
        throw data_error("insufficient-history", index.id() + ": fewer than " + std::to_string(window_years) +
                                                     " complete years of inflation history");
    }
    return TimeSeries("expected_inflation", nu.frequency(), Unit::percent_points, nu.points(),
                      {{"growth", std::string(to_string(growth))},
                       {"window_years", std::to_string(window_years)},
                       {"source", index.id()}});
}

TimeSeries real_rate(const TimeSeries& nominal_yield, const TimeSeries& nu) {
    return combine({nominal_yield, nu}, [](std::span<const double> v) { return v[0] - v[1]; }, "real_rate",
                   Unit::percent_points);
}

TimeSeries cost_of_finance(const CapitalCostInputs& in) {
    require_all(in.debt_share, [](double d) { return d >= 0.0 && d <= 1.0; }, "debt-share-domain",
                "debt share must lie in [0, 1]");
    const double premium = in.equity_premium;
    return combine(
        {in.treasury_yield, in.baa_yield, in.debt_share},
        [premium](std::span<const double> v) {
            const double d = v[2];
            return d * v[1] + (1.0 - d) * (v[0] + premium);
        },
        "cost_of_finance", Unit::percent_points);
}

TimeSeries cost_of_capital(const TimeSeries& rho, const TimeSeries& nu, const TimeSeries& delta,
                           const TimeSeries& tau, const TimeSeries& z) {
    require_all(tau, [](double t) { return t < 1.0; }, "tax-rate-unity", "tax rate must be below 1");
    require_all(z, [](double v) { return v >= 0.0 && v <= 1.0; }, "allowance-domain",
                "depreciation allowances must lie in [0, 1]");
    return combine(
        {rho, nu, delta, tau, z},
        [](std::span<const double> v) { return (v[0] - v[1] + v[2]) * (1.0 - v[4] * v[3]) / (1.0 - v[3]); },
        "cost_of_capital", Unit::percent_points);
}

TimeSeries cost_of_capital(const CapitalCostInputs& in) {
    return cost_of_capital(cost_of_finance(in), in.expected_inflation, in.depreciation, in.tax_rate,
                           in.allowances);
}

ShareDecomposition decompose_value_added(const AccountsBundle& acct, const TimeSeries& rc,
                                         bool subtract_production_taxes) {
    require_all(acct.value_added, [](double y) { return y > 0.0; }, "nonpositive-value-added",
                "value added must be positive");
    const auto parts = align({acct.value_added, acct.compensation, rc, acct.capital_stock, acct.production_taxes});
    const TimeSeries& y = parts[0];
    std::vector<Point> labor, capital, taxes, profit;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const Date d = y[i].date;
        const double l = parts[1][i].value / y[i].value;
        const double c = parts[2][i].value / 100.0 * parts[3][i].value / y[i].value;
        const double t = subtract_production_taxes ? parts[4][i].value / y[i].value : 0.0;
        labor.push_back({d, l});
        capital.push_back({d, c});
        taxes.push_back({d, t});
        profit.push_back({d, 1.0 - l - c - t});
    }
    const Frequency f = y.frequency();
    const Metadata meta{{"production_taxes", subtract_production_taxes ? "subtracted" : "ignored"}};
    return ShareDecomposition{
        TimeSeries("labor_share", f, Unit::ratio, std::move(labor)),
        TimeSeries("capital_share", f, Unit::ratio, std::move(capital)),
        TimeSeries("production_tax_share", f, Unit::ratio, std::move(taxes)),
        TimeSeries("profit_share", f, Unit::ratio, std::move(profit), meta),
    };
}

TimeSeries profit_share(const AccountsBundle& acct, const TimeSeries& rc, bool subtract_production_taxes) {
    return decompose_value_added(acct, rc, subtract_production_taxes).profit;
}

TimeSeries markup(const TimeSeries& pi) {
    require_all(pi, [](double v) { return v < 2.0; }, "markup-pole", "profit share must be below 2");
    return map_values(pi, [](double v) { return 2.0 / (2.0 - v); }, "markup", Unit::ratio);
}

TimeSeries profit_dollars(const TimeSeries& pi, const TimeSeries& value_added) {
    return combine({pi, value_added}, [](std::span<const double> v) { return v[0] * v[1]; }, "profit_dollars",
                   Unit::dollars);
}

TimeSeries profit_per_worker(const TimeSeries& dollars, const TimeSeries& employment) {
    require_all(employment, [](double e) { return e > 0.0; }, "nonpositive-employment",
                "employment must be positive");
    return combine({dollars, employment}, [](std::span<const double> v) { return v[0] / v[1]; },
                   "profit_per_worker", Unit::dollars);
}

}  // namespace trendsens
