#pragma once

#include "trendsens/series.hpp"

namespace trendsens {

enum class GrowthMode { log, simple };

std::string_view to_string(GrowthMode g);
GrowthMode parse_growth_mode(std::string_view text);

/// Expected capital inflation in percentage points: trailing moving average
/// (default three years) of year-over-year growth of the capital price index.
/// Years whose prior-year observation is missing produce no growth value.
TimeSeries expected_inflation(const TimeSeries& capital_price_index, GrowthMode growth = GrowthMode::log,
                              int window_years = 3);

/// Nominal yield less expected inflation, both in percentage points.
TimeSeries real_rate(const TimeSeries& nominal_yield, const TimeSeries& expected_inflation);

/// Inputs to the user cost of capital.  Rates are in percentage points,
/// shares (d, tau, z) are fractions.
struct CapitalCostInputs {
    TimeSeries treasury_yield;      // i
    TimeSeries baa_yield;           // R_d, expected return on debt
    double equity_premium = 5.0;    // R_e = i + equity_premium
    TimeSeries debt_share;          // d
    TimeSeries expected_inflation;  // nu
    TimeSeries depreciation;        // delta
    TimeSeries tax_rate;            // tau
    TimeSeries allowances;          // z, present value of depreciation allowances
};

/// Weighted average cost of finance rho = d R_d + (1 - d)(i + equity_premium).
TimeSeries cost_of_finance(const CapitalCostInputs& in);

/// Hall-Jorgenson rental rate R_c = (rho - nu + delta)(1 - z tau) / (1 - tau).
TimeSeries cost_of_capital(const CapitalCostInputs& in);
TimeSeries cost_of_capital(const TimeSeries& rho, const TimeSeries& nu, const TimeSeries& delta,
                           const TimeSeries& tau, const TimeSeries& z);

/// National-accounts aggregates for the corporate sector.
struct AccountsBundle {
    TimeSeries value_added;       // Y
    TimeSeries compensation;      // W L
    TimeSeries capital_stock;     // K, current cost
    TimeSeries production_taxes;  // taxes on production and imports
    TimeSeries employment;
};

/// Value added split into shares that sum to one at every date.
struct ShareDecomposition {
    TimeSeries labor;
    TimeSeries capital;
    TimeSeries taxes;   // all zeros when production taxes are excluded
    TimeSeries profit;  // 1 - labor - capital - taxes
};

ShareDecomposition decompose_value_added(const AccountsBundle& acct, const TimeSeries& cost_of_capital,
                                         bool subtract_production_taxes = true);

/// Economic profit share Pi = 1 - WL/Y - (R_c / 100) K/Y - T/Y.
TimeSeries profit_share(const AccountsBundle& acct, const TimeSeries& cost_of_capital,
                        bool subtract_production_taxes = true);

/// Markup on gross output 2 / (2 - Pi), assuming an intermediate share of 0.5.
TimeSeries markup(const TimeSeries& profit_share);

TimeSeries profit_dollars(const TimeSeries& profit_share, const TimeSeries& value_added);
TimeSeries profit_per_worker(const TimeSeries& profit_dollars, const TimeSeries& employment);

}  // namespace trendsens
