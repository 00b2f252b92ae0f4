#include "trendsens/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trendsens/error.hpp"

namespace trendsens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kOutputs{"expected_inflation", "real_rate", "cost_of_finance", "cost_of_capital",
                                        "profit_share",       "markup"};
const std::vector<std::string> kHeadlineSeries{"real_rate", "cost_of_capital", "profit_share", "markup"};

Window window_from(const json& j, const char* key) {
    const auto& w = j.at(key);
    if (!w.is_array() || w.size() != 2) throw config_error("bad-config", std::string(key) + " must be [first_year, last_year]");
    return Window::years(w[0].get<int>(), w[1].get<int>());
}

Date date_or_year(const json& j) {
    if (j.is_number_integer()) return dec31(j.get<int>());
    return parse_date(j.get<std::string>());
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

TimeSeries annual_mean(const TimeSeries& s) { return resample_annual(s, Aggregation::mean); }

double value_in_year(const TimeSeries& annual, int year, const char* what) {
    const auto v = annual.value_at(jan1(year));
    if (!v) throw data_error("missing-year", std::string(what) + " has no observation for " + std::to_string(year));
    return *v;
}

void add_trend(TidyWriter& w, const TimeSeries& s, const Window& window) {
    const auto fit = fit_linear(s, window);
    const std::string facet = "trend_" + std::to_string(year_of(window.start)) + "_" + std::to_string(year_of(window.end));
    for (const auto& d : fit.dates) w.row(s.id(), d, fit.predict_at(d), facet);
}

void add_sweep(TidyWriter& w, const SensitivitySweep& sw) {
    for (const auto& [year, fit] : sw.fits) w.row(sw.series_id, jan1(year), fit.slope, "slope");
    for (const auto& [year, pct] : sw.pct_change) w.row(sw.series_id, jan1(year), pct, "pct_change");
    if (sw.overlay)
        for (const auto& [year, pct] : sw.pct_change) w.row(sw.series_id, jan1(year), (*sw.overlay)(year), "quadratic");
}

void add_diagnostics(TidyWriter& w, const VolatilityInfluenceReport& r) {
    for (const auto& row : r.rows) w.row(r.series_id, row.date, row.value, "value");
    for (const auto& row : r.rows)
        if (row.volatility) w.row(r.series_id, row.date, *row.volatility, "volatility");
    for (const auto& row : r.rows) w.row(r.series_id, row.date, row.influence, "influence");
    for (const auto& row : r.rows) w.row(r.series_id, row.date, row.cooks_d, "cooks_distance");
    for (const auto& row : r.rows) w.row(r.series_id, row.date, row.leverage, "leverage");
}

json deviation(const std::string& cell, double reference, std::optional<double> value, double tolerance) {
    json d{{"cell", cell}, {"reference", reference}, {"tolerance", tolerance}};
    if (value) {
        d["value"] = *value;
        d["deviation"] = *value - reference;
        d["within_tolerance"] = std::abs(*value - reference) <= tolerance;
    } else {
        d["value"] = nullptr;
        d["deviation"] = nullptr;
        d["within_tolerance"] = false;
    }
    return d;
}

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw e.within(name);
    }
}

}  // namespace

const std::vector<std::string>& pipeline_roles() {
    static const std::vector<std::string> roles{
        "treasury_yield", "baa_yield",    "debt_share",      "capital_price_index", "depreciation",     "tax_rate",
        "allowances",     "value_added",  "compensation",    "capital_stock",       "production_taxes", "employment"};
    return roles;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    try {
        if (!j.is_object()) throw config_error("bad-config", "config must be a JSON object");
        c.vintage = j.value("vintage", std::string());
        if (j.contains("series")) c.series = j.at("series").get<std::vector<SeriesSpec>>();
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            c.pipeline.frequency = parse_frequency(p.value("frequency", std::string("quarterly")));
            c.pipeline.equity_premium = p.value("equity_premium", 5.0);
            c.pipeline.inflation_growth = parse_growth_mode(p.value("inflation_growth", std::string("log")));
            c.pipeline.inflation_window_years = p.value("inflation_window_years", 3);
            c.pipeline.subtract_production_taxes = p.value("subtract_production_taxes", true);
        }
        if (j.contains("trend_window")) c.trend_window = window_from(j, "trend_window");
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("start_years")) c.sweep_start_years = s.at("start_years").get<std::vector<int>>();
            c.sweep_base_year = s.value("base_year", c.sweep_base_year);
            if (s.contains("end")) c.sweep_end = date_or_year(s.at("end"));
            c.headline_start_year = s.value("headline_start_year", c.headline_start_year);
        }
        if (j.contains("table1")) {
            const auto& t = j.at("table1");
            c.table_span_years = t.value("span_years", c.table_span_years);
            if (t.contains("end_years")) c.table_end_years = t.at("end_years").get<std::vector<int>>();
            c.table_aggregation = parse_aggregation(t.value("aggregation", std::string("mean")));
        }
        if (j.contains("diagnose")) {
            const auto& d = j.at("diagnose");
            c.diagnose_series = d.value("series", c.diagnose_series);
            if (d.contains("window")) c.diagnose_window = window_from(d, "window");
            c.vol_window_years = d.value("vol_window_years", c.vol_window_years);
        }
        if (j.contains("reference")) c.reference = j.at("reference");
    } catch (const json::exception& e) {
        throw config_error("bad-config", e.what());
    }
    if (c.pipeline.inflation_window_years <= 0 || c.vol_window_years <= 0 || c.table_span_years <= 0)
        throw config_error("bad-config", "window lengths must be positive");
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("missing-config", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error("bad-config", path.string() + ": " + e.what());
    }
    RunConfig c = parse_config(j);
    c.base_dir = path.parent_path();
    c.sha256 = sha256_hex(text);
    return c;
}

const TimeSeries& Pipeline::at(const std::string& id) const {
    if (id == "expected_inflation") return expected_inflation;
    if (id == "real_rate") return real_rate;
    if (id == "cost_of_finance") return cost_of_finance;
    if (id == "cost_of_capital") return cost_of_capital;
    if (id == "profit_share") return profit_share;
    if (id == "markup") return markup;
    throw config_error("unknown-series", "no pipeline output named '" + id + "'");
}

Pipeline run_pipeline(const InputSet& inputs, const PipelineConfig& cfg) {
    for (const auto& role : pipeline_roles())
        if (!inputs.count(role)) throw config_error("missing-input", "pipeline input '" + role + "' is not available");
    const auto at_freq = [&](const std::string& id) {
        return convert_frequency(inputs.at(id), cfg.frequency, Aggregation::mean);
    };

    const auto nu = convert_frequency(
        expected_inflation(inputs.at("capital_price_index"), cfg.inflation_growth, cfg.inflation_window_years),
        cfg.frequency);
    const auto treasury = at_freq("treasury_yield");
    CapitalCostInputs cap{treasury,           at_freq("baa_yield"),    cfg.equity_premium,
                          at_freq("debt_share"), nu,                   at_freq("depreciation"),
                          at_freq("tax_rate"), at_freq("allowances")};
    AccountsBundle acct{at_freq("value_added"), at_freq("compensation"), at_freq("capital_stock"),
                        at_freq("production_taxes"), at_freq("employment")};

    auto rho = cost_of_finance(cap);
    auto rc = cost_of_capital(cap);
    auto shares = decompose_value_added(acct, rc, cfg.subtract_production_taxes);
    auto m = markup(shares.profit);
    return Pipeline{nu,
                    real_rate(treasury, nu),
                    std::move(rho),
                    std::move(rc),
                    shares,
                    shares.profit,
                    std::move(m),
                    acct.value_added,
                    acct.employment};
}

const TimeSeries& find_series(const Pipeline* pipeline, const InputSet& inputs, const std::string& id) {
    if (pipeline && std::find(kOutputs.begin(), kOutputs.end(), id) != kOutputs.end()) return pipeline->at(id);
    const auto it = inputs.find(id);
    if (it != inputs.end()) return it->second;
    throw config_error("unknown-series", "no series named '" + id + "'");
}

void TidyWriter::row(const std::string& series_id, Date d, double v, const std::string& facet) {
    text += series_id;
    text += ',';
    text += format_date(d);
    text += ',';
    text += format_number(v);
    text += ',';
    text += facet;
    text += '\n';
}

void TidyWriter::series(const TimeSeries& s, const std::string& facet) {
    for (const auto& p : s.points()) row(s.id(), p.date, p.value, facet);
}

std::string emit_sweep(const SensitivitySweep& sweep) {
    TidyWriter w;
    add_sweep(w, sweep);
    return w.text;
}

std::string emit_diagnostics(const VolatilityInfluenceReport& r) {
    TidyWriter w;
    add_diagnostics(w, r);
    return w.text;
}

Table1 build_table1(const Pipeline& p, const RunConfig& cfg) {
    const auto profit_pp = map_values(p.profit_share, [](double v) { return 100.0 * v; }, "profit_share", Unit::percent_points);
    const LabeledSeries cols{{"real_rate", p.real_rate},
                             {"cost_of_capital", p.cost_of_capital},
                             {"profit_share", profit_pp},
                             {"markup", p.markup}};
    Table1 out{long_difference_table(cols, cfg.table_span_years, cfg.table_end_years, cfg.table_aggregation), "", ""};

    out.csv = "sample,start_year,end_year";
    for (const auto& c : out.table.columns) out.csv += ",d_" + c;
    out.csv += '\n';
    for (const auto& row : out.table.rows) {
        out.csv += row.label() + "," + std::to_string(row.start_year) + "," + std::to_string(row.end_year);
        for (double v : row.values) out.csv += "," + format_number(v);
        out.csv += '\n';
    }

    out.markdown = "| Sample | Δ(i − ν) (pp) | ΔR_c (pp) | ΔΠ (pp) | ΔM |\n|---|---:|---:|---:|---:|\n";
    for (const auto& row : out.table.rows) {
        out.markdown += "| " + row.label() + " | " + fixed(row.values[0], 2) + " | " + fixed(row.values[1], 2) + " | " +
                        fixed(row.values[2], 2) + " | " + fixed(row.values[3], 4) + " |\n";
    }
    out.markdown += "\nLong differences of " + std::string(to_string(cfg.table_aggregation)) + " annual values, " +
                    std::to_string(cfg.table_span_years) + "-year span. ΔM is in markup units.\n";
    for (const auto& w : out.table.warnings) out.markdown += "\nNote: " + w + "\n";
    return out;
}

json build_headline(const Pipeline& p, const RunConfig& cfg) {
    json h{{"base_year", cfg.sweep_base_year},
           {"start_year", cfg.headline_start_year},
           {"end", format_date(cfg.sweep_end)},
           {"pct_change", json::object()},
           {"slope_per_year", json::object()}};
    const int years[] = {cfg.sweep_base_year, cfg.headline_start_year};
    std::optional<SensitivitySweep> profit;
    for (const auto& id : kHeadlineSeries) {
        auto sw = start_date_sweep(p.at(id), years, cfg.sweep_end, cfg.sweep_base_year);
        h["pct_change"][id] = sw.pct_change.at(cfg.headline_start_year);
        h["slope_per_year"][id] = {{std::to_string(cfg.sweep_base_year), sw.fits.at(cfg.sweep_base_year).slope},
                                   {std::to_string(cfg.headline_start_year), sw.fits.at(cfg.headline_start_year).slope}};
        if (id == "profit_share") profit = std::move(sw);
    }

    // Difference between the two trend-implied profit-share changes over the
    // shorter sample, priced at end-year value added.
    const auto& late = profit->fits.at(cfg.headline_start_year);
    const auto& early = profit->fits.at(cfg.sweep_base_year);
    const double span = late.t.back() - late.t.front();
    const double share_gap = (late.slope - early.slope) * span;
    const int end_year = year_of(cfg.sweep_end);
    const double y_end = value_in_year(annual_mean(p.value_added), end_year, "value_added");
    const double l_end = value_in_year(annual_mean(p.employment), end_year, "employment");
    if (l_end <= 0.0) throw numerical_error("nonpositive-employment", "employment is not positive in " + std::to_string(end_year));
    h["profit_gap"] = {{"span_years", span},
                       {"share_points", 100.0 * share_gap},
                       {"value_added_end_year", y_end},
                       {"employment_end_year", l_end},
                       {"dollars", share_gap * y_end},
                       {"per_worker", share_gap * y_end / l_end}};
    return h;
}

Bundle build_report(const InputSet& inputs, const RunConfig& cfg, const Provenance& prov) {
    const Pipeline p = stage("pipeline", [&] { return run_pipeline(inputs, cfg.pipeline); });
    Bundle b;

    stage("figures", [&] {
        TidyWriter f1;
        f1.series(p.real_rate, "level");
        add_trend(f1, p.real_rate, cfg.trend_window);
        b["fig1_real_rate.csv"] = f1.text;

        TidyWriter f2;
        f2.series(p.cost_of_capital, "level");
        add_trend(f2, p.cost_of_capital, cfg.trend_window);
        f2.series(p.cost_of_finance, "level");
        b["fig2_cost_of_capital.csv"] = f2.text;

        TidyWriter f3;
        f3.series(p.profit_share, "level");
        add_trend(f3, p.profit_share, cfg.trend_window);
        f3.series(p.markup, "level");
        add_trend(f3, p.markup, cfg.trend_window);
        b["fig3_profit_markup.csv"] = f3.text;

        TidyWriter f4;
        add_diagnostics(f4, volatility_influence_report(find_series(&p, inputs, cfg.diagnose_series), cfg.diagnose_window,
                                                        cfg.vol_window_years));
        b["fig4_influence.csv"] = f4.text;
        return 0;
    });

    stage("sweeps", [&] {
        TidyWriter w;
        for (const auto& id : kHeadlineSeries)
            add_sweep(w, start_date_sweep(p.at(id), cfg.sweep_start_years, cfg.sweep_end, cfg.sweep_base_year));
        b["sweeps.csv"] = w.text;
        return 0;
    });

    const Table1 t1 = stage("table1", [&] { return build_table1(p, cfg); });
    b["table1.csv"] = t1.csv;
    b["table1.md"] = t1.markdown;

    const json headline = stage("headline", [&] { return build_headline(p, cfg); });
    b["headline.json"] = dump(headline);

    json manifest{{"software_version", software_version},
                  {"config_sha256", cfg.sha256},
                  {"snapshot_sha256", prov.snapshot_sha256},
                  {"vintage", prov.vintage},
                  {"inputs", json::array()},
                  {"files", json::object()},
                  {"warnings", t1.table.warnings},
                  {"table1_deviations", json::array()},
                  {"headline_deviations", json::array()}};
    for (const auto& e : prov.entries)
        manifest["inputs"].push_back({{"id", e.spec.id},
                                      {"source", std::string(to_string(e.spec.source)) + ":" + e.spec.source_id},
                                      {"sha256", e.sha256}});
    for (const auto& [name, bytes] : b) manifest["files"][name] = sha256_hex(bytes);

    const auto& ref = cfg.reference;
    if (ref.contains("table1")) {
        const double tol = ref.value("table1_tolerance", 0.5);
        for (const auto& [label, cells] : ref.at("table1").items()) {
            const LongDiffRow* row = nullptr;
            for (const auto& r : t1.table.rows)
                if (r.label() == label) row = &r;
            for (const auto& [column, reference] : cells.items()) {
                std::optional<double> value;
                const auto it = std::find(t1.table.columns.begin(), t1.table.columns.end(), column);
                if (it == t1.table.columns.end()) throw config_error("bad-config", "reference column '" + column + "' is not in table 1");
                if (row) value = row->values[static_cast<std::size_t>(it - t1.table.columns.begin())];
                manifest["table1_deviations"].push_back(deviation(label + "/" + column, reference.get<double>(), value, tol));
            }
        }
    }
    if (ref.contains("headline")) {
        const double tol = ref.value("headline_tolerance", 5.0);
        for (const auto& [id, reference] : ref.at("headline").items()) {
            if (!headline["pct_change"].contains(id)) throw config_error("bad-config", "reference headline '" + id + "' is unknown");
            manifest["headline_deviations"].push_back(
                deviation("pct_change/" + id, reference.get<double>(), headline["pct_change"][id].get<double>(), tol));
        }
    }
    for (const char* key : {"dollars", "per_worker"}) {
        const std::string ref_key = std::string("profit_gap_") + key;
        if (!ref.contains(ref_key)) continue;
        const double tol = ref.value(ref_key + "_tolerance", 0.0);
        manifest["headline_deviations"].push_back(deviation("profit_gap/" + std::string(key), ref.at(ref_key).get<double>(),
                                                            headline["profit_gap"][key].get<double>(), tol));
    }
    b["manifest.json"] = dump(manifest);
    return b;
}

void write_bundle(const fs::path& dir, const Bundle& bundle) {
    fs::create_directories(dir);
    for (const auto& [name, bytes] : bundle) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw config_error("write-failed", "cannot write " + (dir / name).string());
    }
}

}  // namespace trendsens
