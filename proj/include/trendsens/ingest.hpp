#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trendsens/series.hpp"

namespace trendsens {

enum class Source { csv, fred, bea_csv };

std::string_view to_string(Source s);
Source parse_source(std::string_view text);

/// Where one input series comes from and what it should look like.
///
/// `source_id` is a file path for csv, a FRED series id for fred, and
/// "path#line" for bea_csv (the line number in the table's "Line" column).
/// `transform` is empty, "pct_yoy", or "scale:<factor>".
struct SeriesSpec {
    std::string id;
    Source source = Source::csv;
    std::string source_id;
    Unit unit = Unit::percent_points;
    Frequency freq = Frequency::annual;
    std::string transform;

    void validate() const;
    friend bool operator==(const SeriesSpec&, const SeriesSpec&) = default;
};

void to_json(nlohmann::json& j, const SeriesSpec& s);
void from_json(const nlohmann::json& j, SeriesSpec& s);

struct CsvLoad {
    TimeSeries series;
    std::size_t dropped = 0;  // rows whose value was empty or "."
};

/// Column name -> required value; rows that differ are skipped.  Used to
/// read one series back out of a tidy multi-series file.
using RowFilter = std::map<std::string, std::string>;

/// Parses `date,value` text; extra columns are ignored.  `origin` only
/// labels error messages.
CsvLoad parse_csv(std::string_view text, const SeriesSpec& spec, const std::string& origin = "<memory>",
                  const RowFilter& where = {});
CsvLoad load_csv(const std::filesystem::path& path, const SeriesSpec& spec, const RowFilter& where = {});

/// Shortest round-trip formatting, so parse_csv(write_csv(s)) == s.
std::string write_csv(const TimeSeries& s);
void write_csv(const std::filesystem::path& path, const TimeSeries& s);
std::string format_number(double v);

TimeSeries apply_transform(const TimeSeries& s, std::string_view transform);

/// One line item of a BEA interactive-table CSV export.
CsvLoad parse_bea_table(std::string_view text, int line, const SeriesSpec& spec, const std::string& origin);

/// (date, value) string pairs from a FRED series/observations JSON body.
std::vector<std::pair<std::string, std::string>> parse_fred_observations(std::string_view body);
CsvLoad parse_fred_payload(std::string_view body, const SeriesSpec& spec);

struct FredOptions {
    std::string base_url = "https://api.stlouisfed.org";
    std::string api_key;
    bool network_allowed = false;
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{30};
};

/// Raw observations JSON for `series_id`.  Retries 429, 5xx and transport
/// failures with doubling backoff; other 4xx fail at once.
std::string fetch_fred(const std::string& series_id, const FredOptions& opts,
                       const std::optional<Window>& window = std::nullopt);

/// Fetches several ids with at most four requests in flight.  Results are
/// in input order; the first failure (in input order) is rethrown.
std::vector<std::string> fetch_fred_many(const std::vector<std::string>& series_ids, const FredOptions& opts,
                                         const std::optional<Window>& window = std::nullopt);

/// HTTP attempts made by this process.
std::size_t network_request_count() noexcept;

/// Reads the raw payload for a spec: the file contents for csv and bea_csv,
/// a FRED response for fred.  Relative paths resolve against `base_dir`.
std::string fetch_payload(const SeriesSpec& spec, const FredOptions& opts,
                          const std::filesystem::path& base_dir = {});

/// Decodes a payload produced by fetch_payload and applies the transform.
CsvLoad decode_payload(const SeriesSpec& spec, std::string_view payload);

std::string sha256_hex(std::string_view bytes);

struct SnapshotEntry {
    SeriesSpec spec;
    std::string file;  // relative to the snapshot directory
    std::string sha256;
    std::string fetched_at;
    std::size_t dropped = 0;
};

/// Pinned raw payloads plus a manifest of their hashes.
struct Snapshot {
    std::filesystem::path root;
    std::string vintage;
    std::vector<SnapshotEntry> entries;
    std::map<std::string, TimeSeries> series;
    std::string manifest_sha256;

    const TimeSeries& at(const std::string& id) const;
};

struct SnapshotOptions {
    std::string vintage;
    FredOptions fred;
    std::filesystem::path base_dir;
    // Fixed timestamp for reproducible fixture snapshots; empty means now.
    std::string fetched_at;
};

/// Fetches every spec and writes manifest.json plus one payload per series.
/// Refuses to touch an existing snapshot.
Snapshot snapshot_create(const std::vector<SeriesSpec>& specs, const std::filesystem::path& destination,
                         const SnapshotOptions& opts);
/// Verifies every payload hash before decoding.
Snapshot snapshot_load(const std::filesystem::path& path);

}  // namespace trendsens
