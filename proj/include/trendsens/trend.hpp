#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trendsens/series.hpp"

namespace trendsens {

/// Ordinary least squares line y = slope * t + intercept on raw coordinates.
struct LineFit {
    std::size_t n = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double t_mean = 0.0;
    double y_mean = 0.0;
    double s_tt = 0.0;  // sum of squared time deviations
    double mse = 0.0;   // SSE / (n - 2)
    double r2 = 0.0;
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> residuals;
    std::vector<double> leverage;

    double predict(double at) const { return intercept + slope * at; }

    /// True when the residuals are pure rounding noise (RMS residual at most
    /// 1e-12 of RMS(y)); deletion diagnostics treat such fits as mse = 0.
    bool exact() const;
};

/// Requires n >= 3 and non-constant t.
LineFit fit_line(std::span<const double> t, std::span<const double> y);

/// Linear trend over one sample window.  Time is measured in decimal years
/// since `time_origin`, the first observation inside the window, so the slope
/// is in units of y per year whatever the sampling frequency.
struct TrendFit : LineFit {
    Window window;
    Date time_origin;
    std::vector<Date> dates;

    TrendFit(LineFit line, Window w, Date origin, std::vector<Date> d)
        : LineFit(std::move(line)), window(w), time_origin(origin), dates(std::move(d)) {}

    double time_of(Date d) const { return decimal_year(d) - decimal_year(time_origin); }
    double predict_at(Date d) const { return predict(time_of(d)); }
};

TrendFit fit_linear(const TimeSeries& s, const Window& w);

struct XY {
    double x;
    double y;
};

/// y = a x^2 + b x + c.  Coefficients are solved on x centered at
/// `x_center` and scaled by `x_scale`; evaluation goes through that basis.
struct QuadraticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double x_center = 0.0;
    double x_scale = 1.0;
    std::size_t n = 0;
    std::vector<double> residuals;

    double operator()(double x) const;

private:
    friend QuadraticFit fit_quadratic(std::span<const XY> points);
    double ca_ = 0.0, cb_ = 0.0, cc_ = 0.0;  // coefficients in the scaled basis
};

QuadraticFit fit_quadratic(std::span<const XY> points);

/// Raw-fit forms of the diagnostics below.
std::vector<double> influence_values(const LineFit& fit);
std::vector<double> cooks_distance(const LineFit& fit);
std::vector<double> leave_one_out_slopes(const LineFit& fit);

/// Per-observation influence of each point on the slope:
///   (t_i - mean t) / Var t * (y_i - mean y - slope (t_i - mean t)),
/// with population moments (divisor n) over the fitted window.
std::vector<double> influence_values(const TrendFit& fit, const TimeSeries& s);

/// Cook's distance via D_i = e_i^2 h_i / (2 mse (1 - h_i)^2).  Exact fits
/// give all zeros.  Needs n >= 4.
std::vector<double> cooks_distance(const TrendFit& fit, const TimeSeries& s);

/// Slopes from direct refits with each observation deleted.  Needs n >= 4.
std::vector<double> leave_one_out_slopes(const TrendFit& fit, const TimeSeries& s);

struct InfluenceReport {
    std::vector<Date> dates;
    std::vector<double> influence;
    std::vector<double> cooks_d;
    std::vector<double> leverage;
    std::vector<double> loo_slope;
};

InfluenceReport influence_report(const TrendFit& fit, const TimeSeries& s);

}  // namespace trendsens
