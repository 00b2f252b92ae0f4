#include "trendsens/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include "trendsens/error.hpp"

namespace trendsens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<std::size_t> g_requests{0};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

// RFC 4180 fields within a single line; doubled quotes inside quotes unescape.
std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string read_file(const fs::path& path, const char* missing_code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(missing_code, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("write-failed", "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw config_error("write-failed", "cannot write " + path.string());
}

TimeSeries build_series(const SeriesSpec& spec, std::vector<Point> pts, const std::string& origin) {
    try {
        return TimeSeries(spec.id, spec.freq, spec.unit, std::move(pts));
    } catch (const Error& e) {
        throw e.within(origin);
    }
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool valid_id(std::string_view id) {
    if (id.empty() || id.front() == '.') return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

std::pair<std::string, int> split_bea_source(const std::string& source_id) {
    const auto hash = source_id.rfind('#');
    if (hash == std::string::npos || hash == 0) throw config_error("bad-source-id", "bea_csv source_id must be 'path#line', got '" + source_id + "'");
    const auto line = parse_double(std::string_view(source_id).substr(hash + 1));
    if (!line || *line != std::floor(*line) || *line < 1)
        throw config_error("bad-source-id", "bad line number in '" + source_id + "'");
    return {source_id.substr(0, hash), static_cast<int>(*line)};
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string_view to_string(Source s) {
    switch (s) {
        case Source::csv: return "csv";
        case Source::fred: return "fred";
        case Source::bea_csv: return "bea_csv";
    }
    return "?";
}

Source parse_source(std::string_view text) {
    for (auto s : {Source::csv, Source::fred, Source::bea_csv})
        if (to_string(s) == text) return s;
    throw config_error("bad-source", "unknown source '" + std::string(text) + "'");
}

void SeriesSpec::validate() const {
    if (!valid_id(id)) throw config_error("bad-series-id", "series id '" + id + "' must be [A-Za-z0-9_.-]+");
    if (source_id.empty()) throw config_error("bad-source-id", id + ": empty source_id");
    if (source == Source::bea_csv) split_bea_source(source_id);
    if (!transform.empty() && transform != "pct_yoy" && !transform.starts_with("scale:"))
        throw config_error("bad-transform", id + ": unknown transform '" + transform + "'");
    if (transform.starts_with("scale:") && !parse_double(std::string_view(transform).substr(6)))
        throw config_error("bad-transform", id + ": bad scale factor in '" + transform + "'");
}

void to_json(json& j, const SeriesSpec& s) {
    j = json{{"id", s.id},
             {"source", std::string(to_string(s.source))},
             {"source_id", s.source_id},
             {"unit", std::string(to_string(s.unit))},
             {"freq", std::string(to_string(s.freq))}};
    if (!s.transform.empty()) j["transform"] = s.transform;
}

void from_json(const json& j, SeriesSpec& s) {
    try {
        s.id = j.at("id").get<std::string>();
        s.source = parse_source(j.at("source").get<std::string>());
        s.source_id = j.at("source_id").get<std::string>();
        s.unit = parse_unit(j.at("unit").get<std::string>());
        s.freq = parse_frequency(j.at("freq").get<std::string>());
        s.transform = j.value("transform", std::string());
    } catch (const json::exception& e) {
        throw config_error("bad-series-spec", e.what());
    }
    s.validate();
}

CsvLoad parse_csv(std::string_view text, const SeriesSpec& spec, const std::string& origin, const RowFilter& where) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw data_error("parse-error", origin + ": empty file");
    const auto header = split_fields(lines[0]);
    std::optional<std::size_t> date_col, value_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = trim(header[c]);
        if (h == "date" || h == "observation_date" || h == "DATE") date_col = c;
        if (h == "value") value_col = c;
    }
    // FRED downloads name the value column after the series.
    if (date_col && !value_col && header.size() == 2) value_col = 1 - *date_col;
    if (!date_col || !value_col)
        throw data_error("parse-error", origin + ":1: header must contain 'date' and 'value' columns");
    std::vector<std::pair<std::size_t, std::string>> filters;
    for (const auto& [column, wanted] : where) {
        const auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == column; });
        if (it == header.end()) throw data_error("parse-error", origin + ":1: no column '" + column + "'");
        filters.emplace_back(static_cast<std::size_t>(it - header.begin()), wanted);
    }

    CsvLoad out{TimeSeries(spec.id, spec.freq, spec.unit, {}), 0};
    std::vector<Point> pts;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string at = origin + ":" + std::to_string(i + 1);
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != header.size())
            throw data_error("parse-error", at + ": expected " + std::to_string(header.size()) + " fields");
        if (std::any_of(filters.begin(), filters.end(), [&](const auto& f) { return trim(fields[f.first]) != f.second; }))
            continue;
        Date d;
        try {
            d = parse_date(trim(fields[*date_col]));
        } catch (const Error& e) {
            throw data_error("parse-error", at + ": " + e.detail());
        }
        const auto raw = trim(fields[*value_col]);
        if (raw.empty() || raw == ".") {
            ++out.dropped;
            continue;
        }
        const auto v = parse_double(raw);
        if (!v) throw data_error("parse-error", at + ": bad value '" + std::string(raw) + "'");
        pts.push_back({d, *v});
    }
    out.series = build_series(spec, std::move(pts), origin);
    return out;
}

CsvLoad load_csv(const fs::path& path, const SeriesSpec& spec, const RowFilter& where) {
    return parse_csv(read_file(path, "missing-file"), spec, path.string(), where);
}

std::string format_number(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string write_csv(const TimeSeries& s) {
    std::string out = "date,value\n";
    for (const auto& p : s.points()) {
        out += format_date(p.date);
        out += ',';
        out += format_number(p.value);
        out += '\n';
    }
    return out;
}

void write_csv(const fs::path& path, const TimeSeries& s) { write_file(path, write_csv(s)); }

TimeSeries apply_transform(const TimeSeries& s, std::string_view transform) {
    if (transform.empty()) return s;
    if (transform.starts_with("scale:")) {
        const double k = *parse_double(transform.substr(6));
        return map_values(s, [k](double v) { return v * k; }, s.id(), s.unit())
            .with_metadata("transform", std::string(transform));
    }
    if (transform == "pct_yoy") {
        std::vector<Point> pts;
        for (const auto& p : s.points()) {
            const auto prior = s.value_at(add_years(p.date, -1));
            if (!prior) continue;
            if (*prior == 0.0) throw numerical_error("zero-base", s.id() + ": pct_yoy against zero at " + format_date(p.date));
            pts.push_back({p.date, 100.0 * (p.value / *prior - 1.0)});
        }
        return TimeSeries(s.id(), s.frequency(), Unit::percent_points, std::move(pts), s.metadata())
            .with_metadata("transform", "pct_yoy");
    }
    throw config_error("bad-transform", "unknown transform '" + std::string(transform) + "'");
}

CsvLoad parse_bea_table(std::string_view text, int line, const SeriesSpec& spec, const std::string& origin) {
    const auto lines = split_lines(text);
    std::optional<std::size_t> header_row;
    for (std::size_t i = 0; i < lines.size() && !header_row; ++i) {
        const auto f = split_fields(lines[i]);
        if (!f.empty() && trim(f[0]) == "Line") header_row = i;
    }
    if (!header_row) throw data_error("parse-error", origin + ": no 'Line' header row");

    const auto header = split_fields(lines[*header_row]);
    std::vector<std::optional<Date>> dates;
    for (const auto& h : header) {
        const auto t = trim(h);
        std::optional<Date> d;
        int year = 0;
        if (t.size() >= 4 && std::from_chars(t.data(), t.data() + 4, year).ec == std::errc()) {
            if (t.size() == 4) d = jan1(year);
            else if (t.size() == 6 && t[4] == 'Q' && t[5] >= '1' && t[5] <= '4')
                d = make_date(year, static_cast<unsigned>(t[5] - '1') * 3 + 1, 1);
        }
        dates.push_back(d);
    }

    const std::string want = std::to_string(line);
    for (std::size_t i = *header_row + 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        if (f.empty() || trim(f[0]) != want) continue;
        const std::string where = origin + ":" + std::to_string(i + 1);
        CsvLoad out{TimeSeries(spec.id, spec.freq, spec.unit, {}), 0};
        std::vector<Point> pts;
        for (std::size_t c = 0; c < f.size() && c < dates.size(); ++c) {
            if (!dates[c]) continue;
            std::string cleaned;
            for (char ch : trim(f[c]))
                if (ch != ',') cleaned += ch;
            if (cleaned.empty() || cleaned == "(NA)" || cleaned == "---" || cleaned == "." || cleaned == "(D)") {
                ++out.dropped;
                continue;
            }
            const auto v = parse_double(cleaned);
            if (!v) throw data_error("parse-error", where + ": bad value '" + cleaned + "' under " + std::string(trim(header[c])));
            pts.push_back({*dates[c], *v});
        }
        out.series = build_series(spec, std::move(pts), where)
                         .with_metadata("description", f.size() > 1 ? std::string(trim(f[1])) : std::string());
        return out;
    }
    throw data_error("missing-line", origin + ": no line " + want);
}

std::vector<std::pair<std::string, std::string>> parse_fred_observations(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw data_error("bad-payload", std::string("FRED response is not JSON: ") + e.what());
    }
    if (!j.contains("observations") || !j["observations"].is_array())
        throw data_error("bad-payload", "FRED response has no observations array");
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& o : j["observations"]) {
        if (!o.contains("date") || !o.contains("value") || !o["date"].is_string() || !o["value"].is_string())
            throw data_error("bad-payload", "FRED observation without string date/value");
        out.emplace_back(o["date"].get<std::string>(), o["value"].get<std::string>());
    }
    return out;
}

CsvLoad parse_fred_payload(std::string_view body, const SeriesSpec& spec) {
    CsvLoad out{TimeSeries(spec.id, spec.freq, spec.unit, {}), 0};
    std::vector<Point> pts;
    const std::string origin = "fred:" + spec.source_id;
    for (const auto& [date, value] : parse_fred_observations(body)) {
        const auto raw = trim(value);
        if (raw.empty() || raw == ".") {
            ++out.dropped;
            continue;
        }
        const auto v = parse_double(raw);
        if (!v) throw data_error("parse-error", origin + ": bad value '" + value + "' at " + date);
        try {
            pts.push_back({parse_date(date), *v});
        } catch (const Error& e) {
            throw e.within(origin);
        }
    }
    out.series = build_series(spec, std::move(pts), origin);
    return out;
}

std::size_t network_request_count() noexcept { return g_requests.load(); }

std::string fetch_fred(const std::string& series_id, const FredOptions& opts, const std::optional<Window>& window) {
    if (!opts.network_allowed)
        throw config_error("network-disabled", "refusing to fetch '" + series_id + "': network access not enabled");
    if (opts.api_key.empty()) throw config_error("missing-api-key", "FRED_API_KEY is not set");
    if (series_id.empty()) throw config_error("bad-source-id", "empty FRED series id");

    httplib::Client cli(opts.base_url);
    cli.set_connection_timeout(opts.timeout);
    cli.set_read_timeout(opts.timeout);
    httplib::Params params{{"series_id", series_id}, {"api_key", opts.api_key}, {"file_type", "json"}};
    if (window) {
        params.emplace("observation_start", format_date(window->start));
        params.emplace("observation_end", format_date(window->end));
    }

    std::string last_failure;
    auto backoff = opts.initial_backoff;
    for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        ++g_requests;
        auto res = cli.Get("/fred/series/observations", params, httplib::Headers{});
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        if (status == 200) return res->body;
        if (status == 429 || status >= 500) {
            last_failure = "HTTP " + std::to_string(status);
            continue;
        }
        if (status == 404 || res->body.find("series does not exist") != std::string::npos)
            throw config_error("unknown-series", "FRED has no series '" + series_id + "'");
        if (status == 400 || status == 401 || status == 403)
            throw config_error("auth-error", "FRED rejected the request for '" + series_id + "' (HTTP " +
                                                 std::to_string(status) + "); check FRED_API_KEY");
        throw data_error("http-error", "FRED returned HTTP " + std::to_string(status) + " for '" + series_id + "'");
    }
    throw data_error("network-exhausted", "'" + series_id + "' failed after " + std::to_string(opts.max_attempts) +
                                              " attempts; last: " + last_failure);
}

std::vector<std::string> fetch_fred_many(const std::vector<std::string>& series_ids, const FredOptions& opts,
                                         const std::optional<Window>& window) {
    std::counting_semaphore<4> slots(4);
    std::vector<std::string> bodies(series_ids.size());
    std::vector<std::exception_ptr> failures(series_ids.size());
    {
        std::vector<std::jthread> workers;
        for (std::size_t i = 0; i < series_ids.size(); ++i) {
            workers.emplace_back([&, i] {
                slots.acquire();
                try {
                    bodies[i] = fetch_fred(series_ids[i], opts, window);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
                slots.release();
            });
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return bodies;
}

std::string fetch_payload(const SeriesSpec& spec, const FredOptions& opts, const fs::path& base_dir) {
    spec.validate();
    switch (spec.source) {
        case Source::csv: return read_file(resolve(base_dir, spec.source_id), "missing-file");
        case Source::bea_csv: return read_file(resolve(base_dir, split_bea_source(spec.source_id).first), "missing-file");
        case Source::fred: return fetch_fred(spec.source_id, opts);
    }
    return {};
}

CsvLoad decode_payload(const SeriesSpec& spec, std::string_view payload) {
    spec.validate();
    CsvLoad out{TimeSeries(spec.id, spec.freq, spec.unit, {}), 0};
    switch (spec.source) {
        case Source::csv: out = parse_csv(payload, spec, spec.source_id); break;
        case Source::fred: out = parse_fred_payload(payload, spec); break;
        case Source::bea_csv: {
            const auto [path, line] = split_bea_source(spec.source_id);
            out = parse_bea_table(payload, line, spec, path);
            break;
        }
    }
    out.series = apply_transform(out.series, spec.transform)
                     .with_metadata("source", std::string(to_string(spec.source)) + ":" + spec.source_id);
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw numerical_error("hash-failed", "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

const TimeSeries& Snapshot::at(const std::string& id) const {
    const auto it = series.find(id);
    if (it == series.end()) throw config_error("unknown-series", "snapshot " + root.string() + " has no series '" + id + "'");
    return it->second;
}

Snapshot snapshot_create(const std::vector<SeriesSpec>& specs, const fs::path& destination, const SnapshotOptions& opts) {
    if (fs::exists(destination) && !(fs::is_directory(destination) && fs::is_empty(destination)))
        throw config_error("snapshot-exists", destination.string() + " already exists; snapshots are immutable");
    std::map<std::string, int> seen;
    for (const auto& s : specs) {
        s.validate();
        if (seen[s.id]++) throw config_error("duplicate-series", "series id '" + s.id + "' appears twice");
    }

    // Fetch and decode everything before writing, so a failure leaves nothing behind.
    std::vector<std::string> payloads(specs.size());
    std::vector<std::string> fred_ids;
    std::vector<std::size_t> fred_index;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].source == Source::fred) {
            fred_ids.push_back(specs[i].source_id);
            fred_index.push_back(i);
        } else {
            payloads[i] = fetch_payload(specs[i], opts.fred, opts.base_dir);
        }
    }
    if (!fred_ids.empty()) {
        auto bodies = fetch_fred_many(fred_ids, opts.fred);
        for (std::size_t k = 0; k < bodies.size(); ++k) payloads[fred_index[k]] = std::move(bodies[k]);
    }

    Snapshot snap;
    snap.root = destination;
    snap.vintage = opts.vintage;
    const std::string stamp = opts.fetched_at.empty() ? utc_now() : opts.fetched_at;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto decoded = decode_payload(specs[i], payloads[i]);
        const std::string file =
            "payloads/" + specs[i].id + (specs[i].source == Source::fred ? ".json" : ".csv");
        snap.entries.push_back({specs[i], file, sha256_hex(payloads[i]), stamp, decoded.dropped});
        snap.series.emplace(specs[i].id, std::move(decoded.series));
    }

    json manifest{{"format", 1}, {"vintage", opts.vintage}, {"series", json::array()}};
    for (const auto& e : snap.entries)
        manifest["series"].push_back(
            {{"spec", e.spec}, {"file", e.file}, {"sha256", e.sha256}, {"fetched_at", e.fetched_at}, {"dropped", e.dropped}});
    const std::string manifest_text = manifest.dump(2) + "\n";

    const fs::path staging = destination.string() + ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging / "payloads");
    for (std::size_t i = 0; i < specs.size(); ++i) write_file(staging / snap.entries[i].file, payloads[i]);
    write_file(staging / "manifest.json", manifest_text);
    if (fs::exists(destination)) fs::remove(destination);
    if (destination.has_parent_path()) fs::create_directories(destination.parent_path());
    fs::rename(staging, destination);

    snap.manifest_sha256 = sha256_hex(manifest_text);
    return snap;
}

Snapshot snapshot_load(const fs::path& path) {
    if (!fs::is_directory(path)) throw data_error("no-snapshot", "no snapshot directory at " + path.string());
    const auto manifest_path = path / "manifest.json";
    if (!fs::exists(manifest_path)) throw data_error("no-manifest", path.string() + " has no manifest.json");
    const std::string manifest_text = read_file(manifest_path, "no-manifest");

    Snapshot snap;
    snap.root = path;
    snap.manifest_sha256 = sha256_hex(manifest_text);
    try {
        const auto manifest = json::parse(manifest_text);
        snap.vintage = manifest.at("vintage").get<std::string>();
        for (const auto& e : manifest.at("series")) {
            SnapshotEntry entry{e.at("spec").get<SeriesSpec>(), e.at("file").get<std::string>(),
                                e.at("sha256").get<std::string>(), e.value("fetched_at", std::string()),
                                e.value("dropped", std::size_t{0})};
            snap.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw data_error("bad-manifest", manifest_path.string() + ": " + e.what());
    }

    for (const auto& e : snap.entries) {
        const fs::path file = path / e.file;
        const std::string payload = read_file(file, "missing-payload");
        if (sha256_hex(payload) != e.sha256)
            throw data_error("hash-mismatch", file.string() + " does not match its manifest hash");
        auto decoded = decode_payload(e.spec, payload);
        if (!snap.series.emplace(e.spec.id, std::move(decoded.series)).second)
            throw data_error("bad-manifest", "series id '" + e.spec.id + "' appears twice");
    }
    return snap;
}

}  // namespace trendsens
