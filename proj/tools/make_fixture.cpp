// Writes the synthetic input files under data/fixture/.  The numbers are
// generated, not downloaded: they have roughly the right magnitudes and a
// volatile early-1980s rate spike, but they are not any agency's data.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "trendsens/series.hpp"

using namespace trendsens;
namespace fs = std::filesystem;

namespace {

constexpr int kFirst = 1977;
constexpr int kLast = 2022;

// Piecewise-linear path through (decimal year, value) anchors.
double path(const std::map<double, double>& anchors, double t) {
    auto hi = anchors.lower_bound(t);
    if (hi == anchors.begin()) return hi->second;
    if (hi == anchors.end()) return std::prev(hi)->second;
    auto lo = std::prev(hi);
    const double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("data/fixture");
    fs::create_directories(dir);
    std::mt19937_64 rng(19840101);
    std::normal_distribution<double> z(0.0, 1.0);

    // Monthly 10-year and Baa yields, percent.
    const std::map<double, double> gs10_path{{1977.0, 7.4},  {1979.5, 9.0},  {1980.2, 11.5}, {1981.7, 14.5},
                                             {1982.8, 10.8}, {1984.45, 13.4}, {1986.5, 7.5}, {1990.0, 8.5},
                                             {1994.0, 6.5},  {2000.0, 6.0},   {2003.5, 4.0}, {2007.0, 4.7},
                                             {2012.5, 1.6},  {2013.9, 2.9},   {2016.5, 1.5}, {2018.8, 3.1},
                                             {2019.9, 1.8},  {2020.5, 0.6},   {2021.9, 1.5}, {2022.9, 3.9}};
    std::string gs10 = "observation_date,GS10\n", baa = "observation_date,BAA\n";
    double ar = 0.0, spread_ar = 0.0;
    for (int y = kFirst; y <= kLast; ++y) {
        for (unsigned m = 1; m <= 12; ++m) {
            const double t = y + (m - 1) / 12.0;
            const double sigma = (t >= 1979.5 && t < 1986.0) ? 0.45 : 0.12;
            ar = 0.75 * ar + sigma * z(rng);
            spread_ar = 0.8 * spread_ar + 0.08 * z(rng);
            const double i = std::max(0.3, path(gs10_path, t) + ar);
            const double spread = (t >= 1980 && t < 1983) || (t >= 2008.7 && t < 2009.6) ? 3.0 : 1.9;
            const std::string date = format_date(make_date(y, m, 1));
            // A handful of missing-value markers, as in real downloads.
            gs10 += date + "," + ((y == 1995 && m == 7) ? std::string(".") : fmt(i, 2)) + "\n";
            baa += date + "," + fmt(i + spread + spread_ar, 2) + "\n";
        }
    }
    write(dir / "GS10.csv", gs10);
    write(dir / "BAA.csv", baa);

    // Quarterly corporate value added, compensation and production taxes, billions at annual rates.
    std::string t114 =
        "SYNTHETIC FIXTURE: generated test data in the layout of a national-accounts table export\n"
        "[Billions of dollars] Seasonally adjusted at annual rates\n"
        "Line,";
    for (int y = kFirst; y <= kLast; ++y)
        for (int q = 1; q <= 4; ++q) t114 += "," + std::to_string(y) + "Q" + std::to_string(q);
    t114 += "\n";
    std::string y_row = "1,\"Gross value added of corporate business\"", wl_row = "4,\"Compensation of employees\"",
                t_row = "7,\"Taxes on production and imports less subsidies\"";
    const std::map<double, double> labor_path{{1977.0, 0.615}, {1984.0, 0.600}, {2000.0, 0.590}, {2014.0, 0.555}, {2022.0, 0.565}};
    double level = 1180.0;
    for (int y = kFirst; y <= kLast; ++y) {
        for (int q = 1; q <= 4; ++q) {
            const double t = y + (q - 1) / 4.0;
            const double growth = (t >= 2020.0 && t < 2020.5) ? -0.03 : 0.0135 + 0.004 * z(rng);
            level *= 1.0 + growth;
            const double labor = path(labor_path, t) + 0.004 * z(rng);
            const double tax = 0.075 + 0.002 * z(rng);
            y_row += ",\"" + fmt(level, 1) + "\"";
            wl_row += ",\"" + fmt(level * labor, 1) + "\"";
            t_row += ",\"" + fmt(level * tax, 1) + "\"";
        }
    }
    write(dir / "table_value_added.csv", t114 + y_row + "\n" + wl_row + "\n" + t_row + "\n\"Legend / Footnotes:\"\n");

    // Annual capital stock, depreciation rate and capital price index.
    std::string t41 =
        "SYNTHETIC FIXTURE: generated test data in the layout of a fixed-assets table export\n"
        "[Billions of dollars; index 2017=100; percent]\n"
        "Line,";
    for (int y = kFirst; y <= kLast; ++y) t41 += "," + std::to_string(y);
    t41 += "\n";
    std::string k_row = "1,\"Current-cost net stock of fixed assets and inventories\"",
                p_row = "2,\"Price index for fixed assets\"", d_row = "3,\"Depreciation rate\"";
    const std::map<double, double> inflation_path{{1977.0, 7.5}, {1980.0, 10.5}, {1982.0, 6.0}, {1984.0, 3.0},
                                                  {1990.0, 2.8}, {2000.0, 1.6},  {2010.0, 1.2}, {2019.0, 1.8},
                                                  {2021.0, 5.5}, {2022.0, 9.0}};
    double price = 24.0;
    for (int y = kFirst; y <= kLast; ++y) {
        price *= 1.0 + (path(inflation_path, y) + 0.5 * z(rng)) / 100.0;
        const double ratio = 1.3 + 0.08 * std::sin((y - kFirst) / 7.0) + 0.01 * z(rng);
        const double annual_y = 1180.0 * std::pow(1.0555, y - kFirst);
        k_row += ",\"" + fmt(ratio * annual_y, 1) + "\"";
        p_row += "," + fmt(price, 3);
        d_row += "," + fmt(6.8 + 1.6 * (y - kFirst) / (kLast - kFirst) + 0.1 * z(rng), 3);
    }
    write(dir / "table_fixed_assets.csv", t41 + k_row + "\n" + p_row + "\n" + d_row + "\n");

    // Annual tax parameters and debt share, plain date,value files.
    std::string tau = "date,value\n", allow = "date,value\n", debt = "date,value\n";
    for (int y = kFirst; y <= kLast; ++y) {
        const double statutory = y <= 1986 ? 0.495 : y == 1987 ? 0.43 : y < 2018 ? 0.385 : 0.257;
        tau += format_date(jan1(y)) + "," + fmt(statutory, 3) + "\n";
        allow += format_date(jan1(y)) + "," + fmt(std::min(0.95, 0.62 + 0.004 * (y - kFirst) + 0.01 * z(rng)), 3) + "\n";
        debt += format_date(jan1(y)) + "," + fmt(0.33 - 0.002 * (y - kFirst) + 0.015 * z(rng), 3) + "\n";
    }
    write(dir / "tax_rate.csv", tau);
    write(dir / "allowances.csv", allow);
    write(dir / "debt_share.csv", debt);

    // Monthly payroll employment, thousands of persons.
    std::string emp = "date,value\n";
    double jobs = 82000.0;
    for (int y = kFirst; y <= kLast; ++y) {
        for (unsigned m = 1; m <= 12; ++m) {
            const double t = y + (m - 1) / 12.0;
            double g = 0.0012 + 0.0008 * z(rng);
            if ((t >= 1981.5 && t < 1982.9) || (t >= 2008.7 && t < 2010.0)) g = -0.003;
            if (t >= 2020.25 && t < 2020.34) g = -0.13;
            if (t >= 2020.4 && t < 2021.0) g = 0.012;
            jobs *= 1.0 + g;
            emp += format_date(make_date(y, m, 1)) + "," + fmt(jobs, 0) + "\n";
        }
    }
    write(dir / "employment.csv", emp);
    return 0;
}
