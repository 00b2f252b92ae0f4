#include "trendsens/cli.hpp"

#include <cstdlib>
#include <optional>

#include <CLI11.hpp>

#include "trendsens/error.hpp"
#include "trendsens/report.hpp"

namespace trendsens {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::string snapshot;
    bool offline = false;
    std::string out = "out";
    std::string fred_url = FredOptions{}.base_url;
};

struct Loaded {
    InputSet inputs;
    Provenance prov;
};

FredOptions fred_options(const Globals& g) {
    FredOptions o;
    o.base_url = g.fred_url;
    o.network_allowed = !g.offline;
    if (const char* key = std::getenv("FRED_API_KEY")) o.api_key = key;
    return o;
}

RunConfig config_for(const Globals& g) {
    if (g.config.empty()) return RunConfig{};
    return load_config(g.config);
}

Loaded load_inputs(const Globals& g, const RunConfig& cfg) {
    Loaded l;
    if (!g.snapshot.empty()) {
        auto snap = snapshot_load(g.snapshot);
        l.inputs = std::move(snap.series);
        l.prov = {snap.manifest_sha256, snap.vintage, std::move(snap.entries)};
        return l;
    }
    if (g.offline) throw data_error("no-snapshot", "--offline requires --snapshot");
    if (cfg.series.empty()) throw config_error("no-inputs", "give --snapshot, or --config with a series list");
    const auto fred = fred_options(g);
    std::string digest;
    for (const auto& spec : cfg.series) {
        const auto payload = fetch_payload(spec, fred, cfg.base_dir);
        auto decoded = decode_payload(spec, payload);
        const auto hash = sha256_hex(payload);
        digest += spec.id + " " + hash + "\n";
        l.prov.entries.push_back({spec, "", hash, "", decoded.dropped});
        l.inputs.emplace(spec.id, std::move(decoded.series));
    }
    l.prov.snapshot_sha256 = sha256_hex(digest);
    l.prov.vintage = cfg.vintage.empty() ? "unpinned" : cfg.vintage + " (unpinned)";
    return l;
}

std::vector<int> parse_years(const std::string& text) {
    std::vector<int> out;
    const auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw config_error("bad-years", "cannot read '" + text + "' as years (use 1980..1989 or 1980,1984)");
        }
    };
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const int a = to_int(text.substr(0, dots)), b = to_int(text.substr(dots + 2));
        if (b < a) throw config_error("bad-years", "empty year range '" + text + "'");
        for (int y = a; y <= b; ++y) out.push_back(y);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        out.push_back(to_int(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

Date end_date(const std::string& text) {
    if (text.size() == 4) return dec31(parse_years(text).front());
    return parse_date(text);
}

Date start_date(const std::string& text) {
    if (text.size() == 4) return jan1(parse_years(text).front());
    return parse_date(text);
}

const TimeSeries& resolve_series(const InputSet& inputs, const RunConfig& cfg, std::optional<Pipeline>& p,
                                 const std::string& id) {
    if (const auto it = inputs.find(id); it != inputs.end()) return it->second;
    if (!p) p = run_pipeline(inputs, cfg.pipeline);
    return p->at(id);
}

void write_one(const Globals& g, std::ostream& out, const std::string& name, const std::string& bytes) {
    write_bundle(g.out, Bundle{{name, bytes}});
    out << (fs::path(g.out) / name).string() << "\n";
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

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trend sensitivity and influence diagnostics for macro time series", "trendsens"};
    app.set_version_flag("--version", std::string(software_version));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--snapshot", g.snapshot, "Snapshot directory to read (or, for `snapshot`, to create)");
    app.add_flag("--offline", g.offline, "Forbid all network access");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--fred-url", g.fred_url, "FRED API base URL")->capture_default_str();

    auto* fetch = app.add_subcommand("fetch", "Download raw FRED observations (needs FRED_API_KEY)");
    std::vector<std::string> fetch_ids;
    std::optional<int> fetch_from, fetch_to;
    fetch->add_option("--id", fetch_ids, "FRED series id")->required();
    fetch->add_option("--start", fetch_from, "First year");
    fetch->add_option("--end", fetch_to, "Last year");

    auto* snapshot = app.add_subcommand("snapshot", "Pin every configured series into --snapshot");
    std::string vintage, fetched_at;
    snapshot->add_option("--vintage", vintage, "Vintage label (default: config vintage)");
    snapshot->add_option("--fetched-at", fetched_at, "Fixed fetch timestamp for reproducible snapshots");

    auto* build = app.add_subcommand("build", "Emit figure data, sweeps, table 1 and headline numbers");
    std::optional<int> trend_from, trend_to;
    build->add_option("--start", trend_from, "First year of the trend overlay window");
    build->add_option("--end", trend_to, "Last year of the trend overlay window");

    auto* sweep = app.add_subcommand("sweep", "Trend slopes over start (or end) years");
    std::string sweep_series, sweep_mode = "start", sweep_years, sweep_end, sweep_start;
    std::optional<int> sweep_base;
    sweep->add_option("--series", sweep_series, "Series id")->required();
    sweep->add_option("--mode", sweep_mode, "start or end")->check(CLI::IsMember({"start", "end"}))->capture_default_str();
    sweep->add_option("--years,--start-years,--end-years", sweep_years, "Years, e.g. 1980..1989 or 1980,1984");
    sweep->add_option("--base", sweep_base, "Base year (default: first year)");
    sweep->add_option("--end", sweep_end, "Fixed end (year or date) for start sweeps");
    sweep->add_option("--start", sweep_start, "Fixed start (year or date) for end sweeps");

    auto* diagnose = app.add_subcommand("diagnose", "Rolling volatility, influence, Cook's distance and leverage");
    std::string diag_series;
    std::optional<int> diag_from, diag_to, diag_vol;
    diagnose->add_option("--series", diag_series, "Series id (default: from config)");
    diagnose->add_option("--start", diag_from, "First year of the fit window");
    diagnose->add_option("--end", diag_to, "Last year of the fit window");
    diagnose->add_option("--vol-window", diag_vol, "Rolling volatility window in years");

    auto* table1 = app.add_subcommand("table1", "Long-difference table");
    std::optional<int> span;
    std::string end_years;
    table1->add_option("--span", span, "Span in years");
    table1->add_option("--end-years", end_years, "End years, e.g. 2012,2014");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fetch->parsed()) {
            std::optional<Window> w;
            if (fetch_from || fetch_to) w = Window::years(fetch_from.value_or(1776), fetch_to.value_or(9999));
            const auto bodies = fetch_fred_many(fetch_ids, fred_options(g), w);
            for (std::size_t i = 0; i < bodies.size(); ++i) write_one(g, out, fetch_ids[i] + ".json", bodies[i]);
            return 0;
        }

        RunConfig cfg = stage("config", [&] { return config_for(g); });

        if (snapshot->parsed()) {
            if (g.snapshot.empty()) throw config_error("missing-option", "snapshot needs --snapshot DEST");
            if (cfg.series.empty()) throw config_error("no-inputs", "snapshot needs --config with a series list");
            SnapshotOptions opts{vintage.empty() ? cfg.vintage : vintage, fred_options(g), cfg.base_dir, fetched_at};
            const auto snap = stage("snapshot", [&] { return snapshot_create(cfg.series, g.snapshot, opts); });
            out << g.snapshot << " " << snap.manifest_sha256 << "\n";
            return 0;
        }

        const Loaded loaded = stage("load", [&] { return load_inputs(g, cfg); });

        if (build->parsed()) {
            if (trend_from || trend_to)
                cfg.trend_window = Window::years(trend_from.value_or(year_of(cfg.trend_window.start)),
                                                 trend_to.value_or(year_of(cfg.trend_window.end)));
            const auto bundle = build_report(loaded.inputs, cfg, loaded.prov);
            stage("write", [&] {
                write_bundle(g.out, bundle);
                return 0;
            });
            for (const auto& [name, bytes] : bundle) out << (fs::path(g.out) / name).string() << "\n";
            return 0;
        }

        std::optional<Pipeline> pipeline;
        if (sweep->parsed()) {
            const auto& s = stage("pipeline", [&]() -> const TimeSeries& {
                return resolve_series(loaded.inputs, cfg, pipeline, sweep_series);
            });
            const bool start_mode = sweep_mode == "start";
            const auto years = sweep_years.empty() ? cfg.sweep_start_years : parse_years(sweep_years);
            const int base = sweep_base.value_or(years.front());
            const auto result = stage("sweep", [&] {
                return start_mode ? start_date_sweep(s, years, sweep_end.empty() ? cfg.sweep_end : end_date(sweep_end), base)
                                  : end_date_sweep(s, years, sweep_start.empty() ? s.front().date : start_date(sweep_start),
                                                   base);
            });
            write_one(g, out, "sweep_" + sweep_series + "_" + sweep_mode + ".csv", emit_sweep(result));
            return 0;
        }

        if (diagnose->parsed()) {
            const std::string id = diag_series.empty() ? cfg.diagnose_series : diag_series;
            const auto& s = stage("pipeline", [&]() -> const TimeSeries& {
                return resolve_series(loaded.inputs, cfg, pipeline, id);
            });
            const Window w = Window::years(diag_from.value_or(year_of(cfg.diagnose_window.start)),
                                           diag_to.value_or(year_of(cfg.diagnose_window.end)));
            const auto report = stage("diagnose", [&] { return volatility_influence_report(s, w, diag_vol.value_or(cfg.vol_window_years)); });
            write_one(g, out, "diagnose_" + id + ".csv", emit_diagnostics(report));
            return 0;
        }

        if (table1->parsed()) {
            if (span) cfg.table_span_years = *span;
            if (!end_years.empty()) cfg.table_end_years = parse_years(end_years);
            const auto p = stage("pipeline", [&] { return run_pipeline(loaded.inputs, cfg.pipeline); });
            const auto t = stage("table1", [&] { return build_table1(p, cfg); });
            write_one(g, out, "table1.csv", t.csv);
            write_one(g, out, "table1.md", t.markdown);
            for (const auto& w : t.table.warnings) err << "trendsens: warning: " << w << "\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "trendsens: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "trendsens: io-error: " << e.what() << "\n";
        return exit_code(ErrorKind::data);
    }
    return 0;
}

}  // namespace trendsens
