#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdrg/errors.hpp"
#include "tdrg/exact.hpp"
#include "tdrg/sparse.hpp"

namespace tdrg {

enum class FitMethod { automatic, raw, envelope };

inline std::string method_name(FitMethod m) {
    switch (m) {
        case FitMethod::raw: return "raw";
        case FitMethod::envelope: return "envelope";
        default: return "auto";
    }
}

struct FitOptions {
    FitMethod method = FitMethod::automatic;
    int bins_per_decade = 12;
    double stability = 0.02;    // allowed relative spread of the rolling slope
    double min_decades = 1.5;   // shortest acceptable window
    double slope_span = 0.5;    // decades per rolling-slope estimate
};

struct FitResult {
    double alpha_hat = 0.0;
    double intercept = 0.0;  // ln|value| at t = 1
    double t_lo = 0.0, t_hi = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
    FitMethod method = FitMethod::raw;
    std::optional<ExponentPrediction> predicted;
};

struct FitWindow {
    double t_lo = 0.0, t_hi = 0.0;
    bool stable = false;
    double drift = 0.0;  // max relative deviation of the rolling slope inside the window
    double slope = 0.0;
};

inline constexpr double kUnderflowFloor = 1e-300;

namespace detail {

struct LogPoint {
    double x;  // ln t
    double y;  // ln |value|
};

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit least_squares(const std::vector<LogPoint>& p) {
    const double n = static_cast<double>(p.size());
    double mx = 0, my = 0;
    for (const auto& q : p) {
        mx += q.x;
        my += q.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& q : p) {
        sxx += (q.x - mx) * (q.x - mx);
        sxy += (q.x - mx) * (q.y - my);
        syy += (q.y - my) * (q.y - my);
    }
    if (!(sxx > 0.0)) throw NumericError("fit window has no spread in time", std::exp(mx));
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ssr = std::max(0.0, syy - f.slope * sxy);
    f.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    return f;
}

inline std::vector<LogPoint> usable_points(const std::vector<double>& t, const std::vector<cplx>& v, double lo, double hi) {
    std::vector<LogPoint> p;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < lo * (1 - 1e-9) || t[i] > hi * (1 + 1e-9)) continue;
        const double a = std::abs(v[i]);
        if (a > kUnderflowFloor && std::isfinite(a) && t[i] > 0.0) p.push_back({std::log(t[i]), std::log(a)});
    }
    return p;
}

// Dips well below the straight-line trend mean |value| oscillates rather than just rotating in phase.
inline bool looks_oscillatory(const std::vector<LogPoint>& p) {
    if (p.size() < 8) return false;
    const auto f = least_squares(p);
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = p[i].y - (f.intercept + f.slope * p[i].x);
    int deep = 0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i)
        if (r[i] < r[i - 1] && r[i] <= r[i + 1] && r[i] < -0.5) ++deep;
    return deep > 2;
}

// Maxima of |value| in log-time bins anchored at the first point, so a time rescaling moves bins rigidly.
// Bins narrower than the oscillation period are merged forward until they hold a local peak.
inline std::vector<LogPoint> envelope_points(const std::vector<LogPoint>& p, int bins_per_decade) {
    std::vector<LogPoint> out;
    if (p.empty()) return out;
    const double w = std::log(10.0) / bins_per_decade;
    const double x0 = p.front().x;
    std::vector<char> peak(p.size(), 0);
    std::size_t last_peak = 0;
    bool any_peak = false;
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
        if (p[i].y >= p[i - 1].y && p[i].y >= p[i + 1].y) peak[i] = 1, any_peak = true, last_peak = i;

    long cur = -1;
    std::vector<int> count;
    LogPoint best{0, -HUGE_VAL};
    bool has_peak = false;
    int n_in = 0;
    bool past_last = false;  // once oscillation has died out every bin stands on its own
    auto flush = [&] {
        if (n_in == 0) return;
        if (has_peak || !any_peak || past_last) {
            out.push_back(best);
            count.push_back(n_in);
            best = {0, -HUGE_VAL};
            has_peak = false;
            n_in = 0;
        }
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
        const long b = static_cast<long>(std::floor((p[i].x - x0) / w + 1e-9));
        if (b != cur) {
            flush();
            cur = b;
            past_last = any_peak && i > last_peak + 1;
        }
        ++n_in;
        has_peak = has_peak || peak[i];
        if (p[i].y > best.y) best = p[i];
    }
    flush();
    // a sparsely filled trailing bin is a truncated bin, its maximum is biased low
    if (count.size() > 2) {
        auto c = count;
        std::nth_element(c.begin(), c.begin() + static_cast<long>(c.size() / 2), c.end());
        if (2 * count.back() < c[c.size() / 2]) out.pop_back();
    }
    return out;
}

inline void check_samples(const std::vector<double>& t, const std::vector<cplx>& v) {
    if (t.size() != v.size()) throw ConfigError("fit: time and value columns differ in length");
    if (t.empty()) throw NumericError("fit: empty trajectory", 0.0);
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ConfigError("fit: times must be strictly increasing");
    bool any = false;
    for (auto x : v) any = any || std::abs(x) > kUnderflowFloor;
    if (!any) throw NumericError("fit: all-zero trajectory", t.front());
}

}  // namespace detail

// Least-squares slope of ln|value| vs ln t; alpha_hat = -slope.
inline FitResult fit_exponent(const std::vector<double>& t, const std::vector<cplx>& v,
                              std::optional<std::pair<double, double>> window = std::nullopt, const FitOptions& opt = {}) {
    detail::check_samples(t, v);
    double lo = t.front(), hi = t.back();
    if (window) {
        lo = window->first;
        hi = window->second;
        if (!(lo < hi)) throw ConfigError("fit window must have t_lo < t_hi");
        if (lo < t.front() * (1 - 1e-12) || hi > t.back() * (1 + 1e-12)) throw ConfigError("fit window outside the sample range");
    }
    auto pts = detail::usable_points(t, v, lo, hi);
    if (pts.size() < 8) throw NumericError("fit: fewer than 8 usable points in window", lo);
    FitMethod m = opt.method;
    if (m == FitMethod::automatic) m = detail::looks_oscillatory(pts) ? FitMethod::envelope : FitMethod::raw;
    if (m == FitMethod::envelope) {
        pts = detail::envelope_points(pts, opt.bins_per_decade);
        if (pts.size() < 8) throw NumericError("fit: fewer than 8 envelope bins in window", lo);
    }
    const auto f = detail::least_squares(pts);
    FitResult r;
    r.alpha_hat = -f.slope;
    r.intercept = f.intercept;
    r.t_lo = std::exp(pts.front().x);
    r.t_hi = std::exp(pts.back().x);
    r.r_squared = f.r2;
    r.n_points = static_cast<int>(pts.size());
    r.method = m;
    return r;
}

// Latest span over which the rolling local slope stays within opt.stability of its median.
inline FitWindow auto_window(const std::vector<double>& t, const std::vector<cplx>& v, const FitOptions& opt = {}) {
    detail::check_samples(t, v);
    auto pts = detail::usable_points(t, v, t.front(), t.back());
    if (pts.size() < 8) throw NumericError("auto_window: fewer than 8 usable points", t.front());
    const double dec = std::log(10.0);
    if (pts.back().x - pts.front().x < 3.0 * dec * (1 - 1e-9)) throw ConfigError("auto_window needs at least three decades of samples");
    const bool env = opt.method == FitMethod::envelope || (opt.method == FitMethod::automatic && detail::looks_oscillatory(pts));
    if (env) pts = detail::envelope_points(pts, opt.bins_per_decade);

    // rolling slopes on a 0.1-decade grid of window starts
    const double span = opt.slope_span * dec, step = 0.1 * dec;
    const double x0 = pts.front().x, x1 = pts.back().x;
    struct Local {
        double lo, hi, slope;
    };
    std::vector<Local> loc;
    // offsets relative to x0 with a loose tolerance keep membership identical under t -> c t
    for (long k = 0; k * step + span <= x1 - x0 + 1e-9; ++k) {
        const double off = k * step;
        std::vector<detail::LogPoint> sub;
        for (const auto& q : pts) {
            const double rel = q.x - x0;
            if (rel >= off - 1e-9 && rel <= off + span + 1e-9) sub.push_back(q);
        }
        if (sub.size() < 4) continue;
        loc.push_back({x0 + off, x0 + off + span, detail::least_squares(sub).slope});
    }
    if (loc.empty()) throw NumericError("auto_window: samples too sparse for rolling slopes", t.front());

    auto drift_of = [&](std::size_t from) {
        std::vector<double> s;
        for (std::size_t k = from; k < loc.size(); ++k) s.push_back(loc[k].slope);
        std::nth_element(s.begin(), s.begin() + static_cast<long>(s.size() / 2), s.end());
        const double med = s[s.size() / 2];
        double d = 0.0;
        for (std::size_t k = from; k < loc.size(); ++k) d = std::max(d, std::abs(loc[k].slope - med));
        return std::pair{d / std::max(std::abs(med), 1e-12), med};
    };
    // extend backwards from the latest rolling window while the slopes stay coherent
    std::size_t first = loc.size() - 1;
    while (first > 0 && drift_of(first - 1).first <= opt.stability) --first;
    FitWindow w;
    auto [d, med] = drift_of(first);
    w.t_lo = std::exp(loc[first].lo);
    w.t_hi = std::exp(x1);
    w.drift = d;
    w.slope = med;
    w.stable = (loc.back().hi - loc[first].lo) >= opt.min_decades * dec * (1 - 1e-9);
    if (!w.stable) {
        // best candidate: the latest min_decades span, reported with its drift
        std::size_t k = loc.size() - 1;
        while (k > 0 && loc.back().hi - loc[k].lo < opt.min_decades * dec * (1 - 1e-9)) --k;
        const auto dk = drift_of(k);
        w.t_lo = std::exp(loc[k].lo);
        w.drift = dk.first;
        w.slope = dk.second;
    }
    return w;
}

// Window from auto_window, then the fit; unstable windows are still fitted but flagged by the caller.
inline FitResult fit_auto(const std::vector<double>& t, const std::vector<cplx>& v, const FitOptions& opt = {},
                          FitWindow* used = nullptr) {
    const auto w = auto_window(t, v, opt);
    if (used) *used = w;
    return fit_exponent(t, v, std::pair{w.t_lo, w.t_hi}, opt);
}

}  // namespace tdrg
