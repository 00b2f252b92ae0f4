#include "trendsens/trend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

#include "trendsens/error.hpp"

namespace trendsens {

namespace {

void require_matching(const TrendFit& fit, const TimeSeries& s) {
    const TimeSeries sample = slice(s, fit.window);
    if (sample.size() != fit.n || sample.dates() != fit.dates || sample.values() != fit.y) {
        throw config_error("fit-series-mismatch",
                           s.id() + ": series does not match the observations the trend was fitted on");
    }
}

// 3x3 solve with partial pivoting.  Returns false on a (numerically) singular system.
bool solve3(std::array<std::array<double, 4>, 3> m, std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-14) return false;
        std::swap(m[col], m[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double acc = m[r][3];
        for (int k = r + 1; k < 3; ++k) acc -= m[r][k] * x[k];
        x[r] = acc / m[r][r];
    }
    return true;
}

}  // namespace

bool LineFit::exact() const {
    double sse = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sse += residuals[i] * residuals[i];
        syy += y[i] * y[i];
    }
    return sse <= 1e-24 * syy;
}

LineFit fit_line(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw config_error("length-mismatch", "time and value vectors differ in length");
    const std::size_t n = t.size();
    if (n < 3) throw data_error("insufficient-points", "need at least 3 observations, got " + std::to_string(n));

    LineFit fit;
    fit.n = n;
    fit.t.assign(t.begin(), t.end());
    fit.y.assign(y.begin(), y.end());
    // Extended precision keeps small residuals accurate relative to themselves
    // when the level of y is large.
    long double tm = 0.0L, ym = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        tm += t[i];
        ym += y[i];
    }
    tm /= n;
    ym /= n;

    long double s_tt = 0.0L, s_ty = 0.0L, s_yy = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dt = t[i] - tm;
        const long double dy = y[i] - ym;
        s_tt += dt * dt;
        s_ty += dt * dy;
        s_yy += dy * dy;
    }
    if (s_tt <= 0.0L) throw numerical_error("degenerate-time", "all observations share one time value");

    const long double slope = s_ty / s_tt;
    fit.t_mean = static_cast<double>(tm);
    fit.y_mean = static_cast<double>(ym);
    fit.s_tt = static_cast<double>(s_tt);
    fit.slope = static_cast<double>(slope);
    fit.intercept = static_cast<double>(ym - slope * tm);

    fit.residuals.resize(n);
    fit.leverage.resize(n);
    long double sse_l = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dt = t[i] - tm;
        const long double e = (y[i] - ym) - slope * dt;
        fit.residuals[i] = static_cast<double>(e);
        fit.leverage[i] = static_cast<double>(1.0L / n + dt * dt / s_tt);
        sse_l += e * e;
    }
    const double sse = static_cast<double>(sse_l);
    fit.mse = sse / static_cast<double>(n - 2);
    // A constant series is fitted perfectly; report r2 = 1 rather than 0/0.
    fit.r2 = s_yy > 0.0L ? static_cast<double>(1.0L - sse_l / s_yy) : 1.0;
    return fit;
}

TrendFit fit_linear(const TimeSeries& s, const Window& w) {
    const TimeSeries sample = slice(s, w);
    if (sample.size() < 3) {
        throw data_error("insufficient-points", s.id() + ": " + std::to_string(sample.size()) +
                                                    " observations in " + format_date(w.start) + ".." +
                                                    format_date(w.end) + ", need at least 3");
    }
    const Date origin = sample.front().date;
    const double t0 = decimal_year(origin);
    std::vector<double> t;
    t.reserve(sample.size());
    for (const auto& p : sample.points()) t.push_back(decimal_year(p.date) - t0);
    const auto y = sample.values();
    return TrendFit(fit_line(t, y), w, origin, sample.dates());
}

double QuadraticFit::operator()(double x) const {
    const double u = (x - x_center) / x_scale;
    return (ca_ * u + cb_) * u + cc_;
}

QuadraticFit fit_quadratic(std::span<const XY> points) {
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.x);
    if (distinct.size() < 3) {
        throw numerical_error("rank-deficient", "quadratic fit needs at least 3 distinct x values, got " +
                                                    std::to_string(distinct.size()));
    }
    QuadraticFit fit;
    fit.n = points.size();
    for (const auto& p : points) fit.x_center += p.x;
    fit.x_center /= static_cast<double>(fit.n);
    fit.x_scale = 0.0;
    for (const auto& p : points) fit.x_scale = std::max(fit.x_scale, std::abs(p.x - fit.x_center));

    // Normal equations in u = (x - center) / scale, unknowns (A, B, C) of A u^2 + B u + C.
    std::array<double, 5> pow_sum{};  // sum of u^k, k = 0..4
    std::array<double, 3> rhs{};      // sum of u^k y, k = 0..2
    for (const auto& p : points) {
        const double u = (p.x - fit.x_center) / fit.x_scale;
        double uk = 1.0;
        for (int k = 0; k < 5; ++k) {
            pow_sum[k] += uk;
            if (k < 3) rhs[k] += uk * p.y;
            uk *= u;
        }
    }
    std::array<std::array<double, 4>, 3> m{{
        {pow_sum[4], pow_sum[3], pow_sum[2], rhs[2]},
        {pow_sum[3], pow_sum[2], pow_sum[1], rhs[1]},
        {pow_sum[2], pow_sum[1], pow_sum[0], rhs[0]},
    }};
    std::array<double, 3> coef{};
    if (!solve3(m, coef)) throw numerical_error("rank-deficient", "quadratic normal equations are singular");
    fit.ca_ = coef[0];
    fit.cb_ = coef[1];
    fit.cc_ = coef[2];

    const double s = fit.x_scale;
    const double c0 = fit.x_center;
    fit.a = coef[0] / (s * s);
    fit.b = coef[1] / s - 2.0 * coef[0] * c0 / (s * s);
    fit.c = coef[0] * c0 * c0 / (s * s) - coef[1] * c0 / s + coef[2];

    fit.residuals.reserve(fit.n);
    for (const auto& p : points) fit.residuals.push_back(p.y - fit(p.x));
    return fit;
}

std::vector<double> influence_values(const LineFit& fit) {
    const double var_t = fit.s_tt / static_cast<double>(fit.n);
    if (var_t <= 0.0) throw numerical_error("degenerate-time", "zero variance in time");
    std::vector<double> out(fit.n);
    for (std::size_t i = 0; i < fit.n; ++i) {
        const double dt = fit.t[i] - fit.t_mean;
        out[i] = dt / var_t * (fit.y[i] - fit.y_mean - fit.slope * dt);
    }
    return out;
}

std::vector<double> cooks_distance(const LineFit& fit) {
    if (fit.n < 4) throw data_error("insufficient-points", "Cook's distance needs at least 4 observations");
    std::vector<double> out(fit.n, 0.0);
    if (fit.exact()) return out;
    for (std::size_t i = 0; i < fit.n; ++i) {
        const double h = fit.leverage[i];
        const double one_minus_h = 1.0 - h;
        if (one_minus_h <= 1e-12) {
            throw numerical_error("leverage-one", "observation " + std::to_string(i) + " has leverage 1");
        }
        const double e = fit.residuals[i];
        out[i] = e * e * h / (2.0 * fit.mse * one_minus_h * one_minus_h);
    }
    return out;
}

std::vector<double> leave_one_out_slopes(const LineFit& fit) {
    if (fit.n < 4) throw data_error("insufficient-points", "leave-one-out refits need at least 4 observations");
    std::vector<double> out(fit.n);
    std::vector<double> t(fit.n - 1);
    std::vector<double> y(fit.n - 1);
    for (std::size_t i = 0; i < fit.n; ++i) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < fit.n; ++j) {
            if (j == i) continue;
            t[k] = fit.t[j];
            y[k] = fit.y[j];
            ++k;
        }
        out[i] = fit_line(t, y).slope;
    }
    return out;
}

// Series-checked forms prefix errors with the series id.
template <typename Fn>
std::vector<double> checked(const TrendFit& fit, const TimeSeries& s, Fn fn) {
    require_matching(fit, s);
    try {
        return fn(static_cast<const LineFit&>(fit));
    } catch (const Error& e) {
        throw e.within(s.id());
    }
}

std::vector<double> influence_values(const TrendFit& fit, const TimeSeries& s) {
    return checked(fit, s, [](const LineFit& f) { return influence_values(f); });
}

std::vector<double> cooks_distance(const TrendFit& fit, const TimeSeries& s) {
    return checked(fit, s, [](const LineFit& f) { return cooks_distance(f); });
}

std::vector<double> leave_one_out_slopes(const TrendFit& fit, const TimeSeries& s) {
    return checked(fit, s, [](const LineFit& f) { return leave_one_out_slopes(f); });
}

InfluenceReport influence_report(const TrendFit& fit, const TimeSeries& s) {
    InfluenceReport report;
    report.dates = fit.dates;
    report.influence = influence_values(fit, s);
    report.cooks_d = cooks_distance(fit, s);
    report.leverage = fit.leverage;
    report.loo_slope = leave_one_out_slopes(fit, s);
    return report;
}

}  // namespace trendsens
