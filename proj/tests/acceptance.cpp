// Acceptance checks, one PASS/FAIL line each.  The default run covers the
// numerical and determinism criteria; --data-vintage covers the reproduction
// targets that depend on what the pinned snapshot contains.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "oracles.hpp"
#include "trendsens/cli.hpp"
#include "trendsens/error.hpp"
#include "trendsens/report.hpp"

using namespace trendsens;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances
constexpr double kCooksRel = 1e-10;
constexpr double kLooAbs = 1e-10;
constexpr double kLeverageSumAbs = 1e-9;
constexpr double kQuadraticAbs = 1e-9;
constexpr double kAccountingAbs = 1e-12;
constexpr double kSweepAbs = 1e-9;
constexpr double kCorpusSeconds = 10.0;
constexpr double kBuildSeconds = 5.0;
constexpr int kCorpusSize = 1000;

const fs::path kData = fs::path(TRENDSENS_SOURCE_DIR) / "data";

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << o.detail << std::endl;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

TrendFit fit_all(const TimeSeries& s) { return fit_linear(s, Window(s.front().date, s.back().date)); }

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<oracle::RandomLine> corpus() {
    std::mt19937_64 rng(20240607);
    std::uniform_int_distribution<std::size_t> n_d(10, 200);
    std::vector<oracle::RandomLine> out;
    out.reserve(kCorpusSize);
    for (int k = 0; k < kCorpusSize; ++k) out.push_back(oracle::random_line_series(rng, n_d(rng)));
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "trendsens");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("trendsens-acc-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Outcome oracle_equivalence(const std::vector<oracle::RandomLine>& series) {
    const auto t0 = Clock::now();
    std::size_t cooks_bad = 0, sign_bad = 0, points = 0;
    double worst = 0.0;
    for (const auto& r : series) {
        const auto f = fit_all(r.series);
        const auto closed = cooks_distance(f, r.series);
        const auto ref = oracle::cooks_definitional(f.t, f.y);
        const auto iv = influence_values(f, r.series);
        const auto loo = oracle::loo_slopes(f.t, f.y);
        std::vector<double> delta(f.n);
        for (std::size_t i = 0; i < f.n; ++i) delta[i] = f.slope - loo[i];
        for (std::size_t i = 0; i < f.n; ++i, ++points) {
            const double scale = std::max({std::abs(closed[i]), std::abs(ref[i]), 1e-300});
            worst = std::max(worst, std::abs(closed[i] - ref[i]) / scale);
            if (!close_rel(closed[i], ref[i], kCooksRel)) ++cooks_bad;
            if (f.leverage[i] < 1.0 &&
                oracle::sign_with_zero_band(iv[i], iv) != oracle::sign_with_zero_band(delta[i], delta))
                ++sign_bad;
        }
    }
    const double secs = seconds_since(t0);
    return {cooks_bad == 0 && sign_bad == 0 && secs < kCorpusSeconds,
            std::to_string(series.size()) + " series, " + std::to_string(points) + " points; Cook's mismatches " +
                std::to_string(cooks_bad) + " (worst rel " + num(worst) + ", tol " + num(kCooksRel) +
                "); sign mismatches " + std::to_string(sign_bad) + "; " + num(secs) + " s (limit " +
                num(kCorpusSeconds) + ")"};
}

Outcome exact_identities(const std::vector<oracle::RandomLine>& series) {
    double worst_loo = 0.0, worst_h = 0.0;
    for (const auto& r : series) {
        const auto f = fit_all(r.series);
        const auto loo = leave_one_out_slopes(f, r.series);
        double hsum = 0.0;
        for (std::size_t i = 0; i < f.n; ++i) {
            const double rhs = f.residuals[i] * (f.t[i] - f.t_mean) / (f.s_tt * (1.0 - f.leverage[i]));
            worst_loo = std::max(worst_loo, std::abs((f.slope - loo[i]) - rhs));
            hsum += f.leverage[i];
        }
        worst_h = std::max(worst_h, std::abs(hsum - 2.0));
    }

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> n_d(3, 200);
    double worst_q = 0.0;
    for (int k = 0; k < kCorpusSize; ++k) {
        const double a = coef(rng), b = coef(rng), c = coef(rng) * 10;
        const double x0 = 1950.0 + coef(rng) * 10;
        const int n = n_d(rng);
        std::vector<XY> pts;
        for (int i = 0; i < n; ++i) {
            const double x = x0 + 0.25 * i;
            const double u = x - x0;
            pts.push_back({x, a * u * u + b * u + c});
        }
        const auto q = fit_quadratic(pts);
        for (const auto& p : pts) worst_q = std::max(worst_q, std::abs(q(p.x) - p.y));
    }
    return {worst_loo <= kLooAbs && worst_h <= kLeverageSumAbs && worst_q <= kQuadraticAbs,
            "max |LOO identity error| " + num(worst_loo) + " (tol " + num(kLooAbs) + "); max |sum h - 2| " +
                num(worst_h) + " (tol " + num(kLeverageSumAbs) + "); max quadratic residual " + num(worst_q) +
                " (tol " + num(kQuadraticAbs) + ")"};
}

Outcome endpoint_leverage() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    std::string detail;
    bool ok = true;
    for (std::size_t n : {10u, 50u, 200u}) {
        std::vector<double> v(n);
        for (auto& x : v) x = z(rng);
        for (const auto& s : {oracle::annual("a", 1950, v), oracle::quarterly("q", 1950, v)}) {
            const auto f = fit_all(s);
            const auto mx = static_cast<std::size_t>(std::max_element(f.leverage.begin(), f.leverage.end()) -
                                                     f.leverage.begin());
            const bool at_end = mx == 0 || mx == n - 1;
            ok = ok && at_end;
            detail += (detail.empty() ? "" : ", ") + std::string(to_string(s.frequency())) + " n=" +
                      std::to_string(n) + " argmax h at " + std::to_string(mx);
        }
    }
    return {ok, detail};
}

Outcome accounting_identity() {
    const auto snap = snapshot_load(kData / "snapshot");
    const auto cfg = load_config(kData / "config.json");
    const auto p = run_pipeline(snap.series, cfg.pipeline);
    const auto& sh = p.shares;
    double worst = 0.0;
    for (std::size_t i = 0; i < sh.profit.size(); ++i) {
        const Date d = sh.profit[i].date;
        const double sum = sh.profit[i].value + sh.labor.value_at(d).value() + sh.capital.value_at(d).value() +
                           sh.taxes.value_at(d).value();
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {!sh.profit.empty() && worst <= kAccountingAbs,
            std::to_string(sh.profit.size()) + " dates, max |sum - 1| " + num(worst) + " (tol " +
                num(kAccountingAbs) + ")"};
}

Outcome sweep_properties() {
    std::vector<int> years;
    for (int y = 1980; y <= 1989; ++y) years.push_back(y);
    std::vector<double> line;
    for (int i = 0; i < 4 * 45; ++i) line.push_back(3.0 - 0.07 * (i / 4.0));
    const auto linear = start_date_sweep(oracle::quarterly("l", 1975, line), years, dec31(2019), 1980);
    double worst_linear = 0.0;
    for (const auto& [y, v] : linear.pct_change) worst_linear = std::max(worst_linear, std::abs(v));

    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 1.0);
    double worst_affine = 0.0;
    for (int k = 0; k < 50; ++k) {
        std::vector<double> v(4 * 45);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 8.0 - 0.1 * (i / 4.0) + z(rng);
        const auto s = oracle::quarterly("r", 1975, v);
        const auto base = start_date_sweep(s, years, dec31(2019), 1980);
        for (const auto [a, b] : {std::pair{2.5, -4.0}, std::pair{-0.3, 100.0}, std::pair{1e3, 1e-3}}) {
            const auto moved = map_values(s, [a, b](double x) { return a * x + b; }, "m", s.unit());
            const auto sw = start_date_sweep(moved, years, dec31(2019), 1980);
            for (const auto& [y, pct] : base.pct_change)
                worst_affine = std::max(worst_affine, std::abs(sw.pct_change.at(y) - pct));
        }
    }
    return {worst_linear <= kSweepAbs && worst_affine <= kSweepAbs,
            "linear input max |pct_change| " + num(worst_linear) + "; affine max |diff| " + num(worst_affine) +
                " (tol " + num(kSweepAbs) + ")"};
}

Outcome offline_determinism() {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Get(".*", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 500;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string url = "http://127.0.0.1:" + std::to_string(port);

    TempDir a, b;
    const auto before = network_request_count();
    std::string err;
    const std::vector<std::string> common{"--snapshot", (kData / "snapshot").string(), "--config",
                                          (kData / "config.json").string(), "--offline", "--fred-url", url};
    auto args = common;
    args.insert(args.end(), {"--out", a.path.string(), "build"});
    const int c1 = cli(args, &err);
    args = common;
    args.insert(args.end(), {"--out", b.path.string(), "build"});
    const int c2 = cli(args);
    const auto calls = network_request_count() - before;
    server.stop();
    thread.join();

    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(a.path)) {
        ++files;
        const auto other = b.path / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
    }
    const auto count_b = static_cast<std::size_t>(std::distance(fs::directory_iterator(b.path), fs::directory_iterator{}));
    const bool ok = c1 == 0 && c2 == 0 && files > 0 && differ == 0 && count_b == files && calls == 0 && hits == 0;
    return {ok, "exit codes " + std::to_string(c1) + "/" + std::to_string(c2) + ", " + std::to_string(files) +
                    " files, " + std::to_string(differ) + " differ; client requests " + std::to_string(calls) +
                    ", requests seen by listener " + std::to_string(hits.load()) + (err.empty() ? "" : "; " + err)};
}

// Builds the report once from the pinned snapshot and reads the reference
// comparisons recorded in its manifest.
struct VintageRun {
    int code = -1;
    double seconds = 0.0;
    nlohmann::json manifest;
    nlohmann::json headline;
};

VintageRun vintage_run() {
    TempDir out;
    VintageRun r;
    const auto t0 = Clock::now();
    r.code = cli({"--snapshot", (kData / "snapshot").string(), "--config", (kData / "config.json").string(),
                  "--offline", "--out", out.path.string(), "build"});
    r.seconds = seconds_since(t0);
    if (r.code == 0) {
        r.manifest = nlohmann::json::parse(slurp(out.path / "manifest.json"));
        r.headline = nlohmann::json::parse(slurp(out.path / "headline.json"));
    }
    return r;
}

Outcome deviations(const VintageRun& r, const char* key, double limit_seconds) {
    if (r.code != 0) return {false, "build exited " + std::to_string(r.code)};
    const auto& devs = r.manifest.at(key);
    std::size_t within = 0;
    std::string misses;
    for (const auto& d : devs) {
        if (d.at("within_tolerance").get<bool>()) {
            ++within;
            continue;
        }
        misses += "\n      " + d.at("cell").get<std::string>() + ": value " + num(d.at("value").get<double>()) +
                  ", reference " + num(d.at("reference").get<double>()) + " +/- " +
                  num(d.at("tolerance").get<double>());
    }
    const bool fast = limit_seconds <= 0 || r.seconds < limit_seconds;
    std::string detail = std::to_string(within) + "/" + std::to_string(devs.size()) + " cells within tolerance";
    if (limit_seconds > 0) detail += "; build " + num(r.seconds) + " s (limit " + num(limit_seconds) + ")";
    detail += "; vintage " + r.manifest.value("vintage", std::string("?")) + misses;
    return {!devs.empty() && within == devs.size() && fast, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const bool vintage = argc > 1 && std::string(argv[1]) == "--data-vintage";
    if (vintage) {
        const auto r = vintage_run();
        report(5, "long-difference table vs reference", [&] { return deviations(r, "table1_deviations", kBuildSeconds); });
        report(6, "headline sensitivities and profit gap vs reference", [&] { return deviations(r, "headline_deviations", 0); });
    } else {
        const auto series = corpus();
        report(1, "Cook's distance and influence sign vs refit oracle", [&] { return oracle_equivalence(series); });
        report(2, "leave-one-out identity, leverage sum, quadratic recovery", [&] { return exact_identities(series); });
        report(3, "leverage is largest at an endpoint", endpoint_leverage);
        report(4, "value-added shares sum to one on the pinned snapshot", accounting_identity);
        report(7, "sweep pct_change on linear and affinely mapped input", sweep_properties);
        report(8, "offline builds are byte-identical and make no requests", offline_determinism);
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
