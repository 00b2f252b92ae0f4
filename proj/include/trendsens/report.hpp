#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "trendsens/econ.hpp"
#include "trendsens/ingest.hpp"
#include "trendsens/sensitivity.hpp"

namespace trendsens {

inline constexpr const char* software_version = TRENDSENS_VERSION;

/// Input series ids the pipeline expects, in the order they are listed in
/// the run manifest.
const std::vector<std::string>& pipeline_roles();

struct PipelineConfig {
    Frequency frequency = Frequency::quarterly;
    double equity_premium = 5.0;
    GrowthMode inflation_growth = GrowthMode::log;
    int inflation_window_years = 3;
    bool subtract_production_taxes = true;
};

struct RunConfig {
    std::string vintage;
    std::vector<SeriesSpec> series;
    PipelineConfig pipeline;

    Window trend_window = Window::years(1984, 2014);
    std::vector<int> sweep_start_years{1980, 1981, 1982, 1983, 1984, 1985, 1986, 1987, 1988, 1989};
    int sweep_base_year = 1980;
    Date sweep_end = dec31(2019);
    int headline_start_year = 1984;

    int table_span_years = 15;
    std::vector<int> table_end_years{2012, 2014, 2016, 2018, 2020, 2022};
    Aggregation table_aggregation = Aggregation::mean;

    std::string diagnose_series = "real_rate";
    Window diagnose_window = Window::years(1980, 2019);
    int vol_window_years = 5;

    nlohmann::json reference = nlohmann::json::object();

    std::filesystem::path base_dir;  // relative csv paths resolve here
    std::string sha256;              // of the config file bytes
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Every constructed series at the pipeline frequency.
struct Pipeline {
    TimeSeries expected_inflation;
    TimeSeries real_rate;
    TimeSeries cost_of_finance;
    TimeSeries cost_of_capital;
    ShareDecomposition shares;
    TimeSeries profit_share;
    TimeSeries markup;
    TimeSeries value_added;
    TimeSeries employment;

    /// Output series by id (real_rate, cost_of_capital, profit_share, ...).
    const TimeSeries& at(const std::string& id) const;
};

using InputSet = std::map<std::string, TimeSeries>;

Pipeline run_pipeline(const InputSet& inputs, const PipelineConfig& cfg);

/// Looks `id` up among pipeline outputs first, then raw inputs.
const TimeSeries& find_series(const Pipeline* pipeline, const InputSet& inputs, const std::string& id);

/// File name -> contents.  Everything is rendered in memory so a run can be
/// hashed and written in one step.
using Bundle = std::map<std::string, std::string>;

/// Tidy long format: series,date,value,facet.
struct TidyWriter {
    std::string text = "series,date,value,facet\n";
    void row(const std::string& series, Date d, double v, const std::string& facet);
    void series(const TimeSeries& s, const std::string& facet);
};

std::string emit_sweep(const SensitivitySweep& sweep);
std::string emit_diagnostics(const VolatilityInfluenceReport& r);

struct Table1 {
    LongDiffTable table;
    std::string csv;
    std::string markdown;
};
Table1 build_table1(const Pipeline& p, const RunConfig& cfg);

/// Headline trend sensitivities and the dollar value of the profit-share gap.
nlohmann::json build_headline(const Pipeline& p, const RunConfig& cfg);

struct Provenance {
    std::string snapshot_sha256;
    std::string vintage;
    std::vector<SnapshotEntry> entries;
};

/// All figure data, sweeps, table 1, headline numbers and the run manifest.
Bundle build_report(const InputSet& inputs, const RunConfig& cfg, const Provenance& prov);

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);

}  // namespace trendsens
