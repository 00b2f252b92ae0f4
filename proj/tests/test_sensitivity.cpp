#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "trendsens/error.hpp"
#include "trendsens/sensitivity.hpp"

using namespace trendsens;

namespace {

std::string error_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

TimeSeries noisy_quarterly(std::uint64_t seed, int first_year, int last_year, double slope, double sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sigma);
    std::vector<double> v;
    for (int i = 0; i < (last_year - first_year + 1) * 4; ++i) v.push_back(10.0 + slope * i / 4.0 + z(rng));
    return oracle::quarterly("noisy", first_year, v);
}

const std::vector<int> k1980s{1980, 1981, 1982, 1983, 1984, 1985, 1986, 1987, 1988, 1989};

}  // namespace

TEST_CASE("start_date_sweep") {
    const auto s = noisy_quarterly(1, 1978, 2022, -0.15, 1.0);
    const int only[] = {1980};
    const auto single = start_date_sweep(s, only, dec31(2019), 1980);
    CHECK(single.pct_change.size() == 1);
    CHECK(single.pct_change.at(1980) == 0.0);
    CHECK_FALSE(single.overlay.has_value());

    const auto sw = start_date_sweep(s, k1980s, dec31(2019), 1980);
    CHECK(sw.pct_change.at(1980) == 0.0);
    REQUIRE(sw.overlay.has_value());
    for (const auto& [year, fit] : sw.fits) {
        CHECK(fit.window.end == dec31(2019));
        CHECK(fit.window.start == jan1(year));
        CHECK(sw.pct_change.at(year) ==
              doctest::Approx(100.0 * (fit.slope - sw.fits.at(1980).slope) / sw.fits.at(1980).slope));
    }
    // later start => subset sample
    for (int y = 1981; y <= 1989; ++y) {
        const auto& later = sw.fits.at(y).dates;
        const auto& earlier = sw.fits.at(y - 1).dates;
        CHECK(std::includes(earlier.begin(), earlier.end(), later.begin(), later.end()));
        CHECK(later.size() < earlier.size());
    }

    SUBCASE("slopes agree with direct refits") {
        for (const auto& [year, fit] : sw.fits) {
            const auto sample = slice(s, Window(jan1(year), dec31(2019)));
            std::vector<double> t;
            for (const auto& p : sample.points()) t.push_back(decimal_year(p.date));
            const auto ref = oracle::ols(t, sample.values());
            CHECK(fit.slope == doctest::Approx(static_cast<double>(ref.slope)).epsilon(1e-9));
        }
    }
}

TEST_CASE("sweep on exactly linear input is flat") {
    std::vector<double> v;
    for (int i = 0; i < 180; ++i) v.push_back(3.0 - 0.037 * i);
    const auto line = oracle::quarterly("line", 1978, v);
    const auto sw = start_date_sweep(line, k1980s, dec31(2019), 1980);
    for (const auto& [year, pct] : sw.pct_change) CHECK(std::abs(pct) <= 1e-9);
    const int ends[] = {2010, 2011, 2012, 2013};
    const auto ew = end_date_sweep(line, ends, jan1(1985), 2010);
    for (const auto& [year, pct] : ew.pct_change) CHECK(std::abs(pct) <= 1e-9);
}

TEST_CASE("pct_change is invariant under affine maps of y") {
    const auto s = noisy_quarterly(2, 1978, 2022, 0.08, 0.7);
    const auto base = start_date_sweep(s, k1980s, dec31(2019), 1980);
    for (double a : {3.0, -0.5, 1e-3}) {
        const auto moved = map_values(s, [a](double v) { return a * v + 42.0; }, "m", s.unit());
        const auto sw = start_date_sweep(moved, k1980s, dec31(2019), 1980);
        for (const auto& [year, pct] : base.pct_change) CHECK(std::abs(sw.pct_change.at(year) - pct) <= 1e-9);
    }
}

TEST_CASE("sweep errors") {
    const auto s = noisy_quarterly(3, 1978, 2022, 0.1, 1.0);
    const int years[] = {1981, 1982};
    CHECK(error_code([&] { start_date_sweep(s, years, dec31(2019), 1980); }) == "base-not-in-years");

    std::vector<double> flat(100, 2.0);
    const auto constant = oracle::quarterly("flat", 1980, flat);
    const int one[] = {1980, 1981};
    CHECK(error_code([&] { start_date_sweep(constant, one, dec31(1999), 1980); }) == "base-slope-zero");

    const int late[] = {1980, 2019};
    try {
        start_date_sweep(s, late, parse_date("2019-06-30"), 1980);
        FAIL("expected insufficient-points");
    } catch (const Error& e) {
        CHECK(e.code() == "insufficient-points");
        CHECK(std::string(e.what()).find("start year 2019") != std::string::npos);
    }
}

TEST_CASE("end_date_sweep") {
    const auto s = noisy_quarterly(4, 1980, 2020, 0.1, 1.0);
    const int only[] = {2010};
    CHECK(end_date_sweep(s, only, jan1(1980), 2010).pct_change == std::map<int, double>{{2010, 0.0}});

    const int ends[] = {2015, 2016, 2017, 2018};
    const auto ew = end_date_sweep(s, ends, jan1(1980), 2015);
    for (const auto& [year, fit] : ew.fits) {
        CHECK(fit.window.start == jan1(1980));
        CHECK(fit.window.end == dec31(year));
    }

    SUBCASE("a +3 sigma spike in the final year steepens the trend") {
        std::mt19937_64 rng(99);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> v;
        for (int y = 0; y < 41; ++y) v.push_back(0.1 * y + z(rng));
        v.back() = 0.1 * 40 + 3.0;
        const auto spiky = oracle::annual("spiky", 1980, v);
        const int e2[] = {2010, 2019, 2020};
        const auto sw = end_date_sweep(spiky, e2, jan1(1980), 2010);

        std::vector<double> t(41);
        for (int i = 0; i < 41; ++i) t[static_cast<std::size_t>(i)] = i;
        const auto slope_to = [&](int n) {
            return static_cast<double>(oracle::ols(std::span<const double>(t).first(static_cast<std::size_t>(n)),
                                                   std::span<const double>(v).first(static_cast<std::size_t>(n)))
                                           .slope);
        };
        const double b10 = slope_to(31), b19 = slope_to(40), b20 = slope_to(41);
        const double pct19 = 100 * (b19 - b10) / b10, pct20 = 100 * (b20 - b10) / b10;
        CHECK(std::abs(pct20) > std::abs(pct19));
        CHECK(sw.pct_change.at(2019) == doctest::Approx(pct19).epsilon(1e-9));
        CHECK(sw.pct_change.at(2020) == doctest::Approx(pct20).epsilon(1e-9));
        CHECK(std::abs(sw.pct_change.at(2020)) > std::abs(sw.pct_change.at(2019)));
    }
}

TEST_CASE("long_difference_table") {
    std::vector<double> c(30, 1.5);
    const auto constant = oracle::annual("c", 1990, c);
    const int ends[] = {2012, 2014};
    const auto zero = long_difference_table({{"a", constant}, {"b", constant}}, 15, ends);
    REQUIRE(zero.rows.size() == 2);
    for (const auto& row : zero.rows) {
        CHECK(row.end_year - row.start_year == 15);
        for (double v : row.values) CHECK(v == 0.0);
    }
    CHECK(zero.rows[0].label() == "1997-2012");

    const auto s = noisy_quarterly(5, 1990, 2022, 0.2, 1.0);
    const auto shifted = map_values(s, [](double v) { return v + 100.0; }, "s", s.unit());
    const int e2[] = {2012, 2018, 2030};
    const auto t1 = long_difference_table({{"x", s}}, 15, e2);
    const auto t2 = long_difference_table({{"x", shifted}}, 15, e2);
    REQUIRE(t1.rows.size() == 2);
    for (std::size_t r = 0; r < t1.rows.size(); ++r) CHECK(t1.rows[r].values[0] == doctest::Approx(t2.rows[r].values[0]).epsilon(1e-12));
    REQUIRE(t1.warnings.size() == 1);
    CHECK(t1.warnings[0].find("2015-2030") != std::string::npos);

    // entries equal differences of annual means
    const auto annual = resample_annual(s, Aggregation::mean);
    CHECK(t1.rows[0].values[0] == *annual.value_at(jan1(2012)) - *annual.value_at(jan1(1997)));
}

TEST_CASE("volatility_influence_report") {
    std::vector<double> flat(80, 3.0);
    const auto constant = oracle::quarterly("flat", 1980, flat);
    const auto r = volatility_influence_report(constant, Window::years(1985, 1999), 5);
    for (const auto& row : r.rows) {
        CHECK(row.cooks_d == 0.0);
        CHECK(row.influence == 0.0);
        if (row.volatility) CHECK(*row.volatility == 0.0);
    }
    CHECK_FALSE(r.rank_correlation.has_value());

    SUBCASE("a volatile endpoint regime holds the most influential points") {
        // 100 quarterly points, the last 10 with ten times the noise.
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> z(0.0, 1.0);
        int in_regime = 0, total = 0;
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> v;
            for (int i = 0; i < 100; ++i) v.push_back(1.0 + 0.05 * i + (i >= 90 ? 10.0 : 1.0) * z(rng));
            const auto s = oracle::quarterly("mc", 1990, v);
            const auto rep_report = volatility_influence_report(s, Window::years(1990, 2014), 2);
            std::vector<double> d;
            for (const auto& row : rep_report.rows) d.push_back(row.cooks_d);
            const auto ref = oracle::cooks_definitional(rep_report.fit.t, rep_report.fit.y);
            std::vector<std::size_t> idx(d.size()), ref_idx(d.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = ref_idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d[a] > d[b]; });
            std::sort(ref_idx.begin(), ref_idx.end(), [&](auto a, auto b) { return ref[a] > ref[b]; });
            idx.resize(10);
            ref_idx.resize(10);
            std::sort(idx.begin(), idx.end());
            std::sort(ref_idx.begin(), ref_idx.end());
            CHECK(idx == ref_idx);
            for (auto i : idx) {
                in_regime += i >= 90;
                ++total;
            }
        }
        const double share = static_cast<double>(in_regime) / total;
        MESSAGE("top-decile share in the volatile regime: " << share);
        CHECK(share > 0.5);
    }
}

TEST_CASE("spearman") {
    const double a[] = {1, 2, 3, 4}, b[] = {10, 20, 30, 40}, c[] = {4, 3, 2, 1}, ties[] = {1, 1, 2, 2};
    CHECK(*spearman(a, b) == doctest::Approx(1.0));
    CHECK(*spearman(a, c) == doctest::Approx(-1.0));
    CHECK(*spearman(a, ties) == doctest::Approx(0.894427191).epsilon(1e-9));
    const double same[] = {5, 5, 5, 5};
    CHECK_FALSE(spearman(a, same).has_value());
}
