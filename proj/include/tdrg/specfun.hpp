#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "tdrg/errors.hpp"

namespace tdrg {

struct SpecialValue {
    double value = 0.0;
    double est_error = 0.0;
    // Largest partial-sum magnitude over |value|; 1 when nothing cancelled.
    double cancellation = 1.0;

    bool flagged() const { return est_error > 1e-6 * std::abs(value); }
};

namespace detail {

inline double sinpi(double x) {
    double r = std::fmod(x, 2.0);
    if (r == 0.0 || r == 1.0 || r == -1.0) return 0.0;
    if (r == 0.5 || r == -1.5) return 1.0;
    if (r == -0.5 || r == 1.5) return -1.0;
    return std::sin(std::numbers::pi * r);
}

inline double cospi(double x) { return sinpi(x + 0.5); }

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// Lanczos g = 7, nine terms; relative accuracy ~1e-15 for x >= 0.5.
inline double lanczos_gamma(double x) {
    static constexpr std::array<double, 9> p{0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                             771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                             -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double z = x - 1.0;
    double a = p[0];
    const double t = z + 7.5;
    for (int i = 1; i < 9; ++i) a += p[static_cast<std::size_t>(i)] / (z + i);
    const double half = std::pow(t, 0.5 * (z + 0.5));
    return std::sqrt(2.0 * std::numbers::pi) * half * (half * std::exp(-t)) * a;
}

// Taylor coefficients of 1/Gamma(1+x) about 0.
inline constexpr std::array<double, 29> rgamma1p_coef{
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
    -2.2987456844353702066e-19,
};

}  // namespace detail

// Gamma(x) for real x; Lanczos for x >= 1/2, reflection below.
inline SpecialValue gamma_fn(double x) {
    if (!std::isfinite(x)) throw DomainError("gamma_fn: non-finite argument");
    if (detail::is_nonpositive_integer(x)) throw DomainError("gamma_fn: pole at x = " + std::to_string(x));
    if (x > 171.6) throw DomainError("gamma_fn: overflow at x = " + std::to_string(x));
    double v;
    if (x >= 0.5) {
        v = detail::lanczos_gamma(x);
    } else {
        v = std::numbers::pi / (detail::sinpi(x) * detail::lanczos_gamma(1.0 - x));
    }
    return {v, std::abs(v) * 4e-15 * (1.0 + 0.1 * std::abs(x)), 1.0};
}

// 1/Gamma(x), zero at the poles.
inline double rgamma(double x) {
    if (detail::is_nonpositive_integer(x)) return 0.0;
    if (x > 171.6) return 0.0;
    return 1.0 / gamma_fn(x).value;
}

struct BesselJY {
    double j, y, jp, yp;
};

namespace detail {

// Temme series (x < 2) or Steed's CF2 (x >= 2) for 0 <= order, CF1 + downward
// recurrence for J, upward recurrence for Y.
inline BesselJY bessel_jy_nonneg(double xnu, double x) {
    constexpr int MAXIT = 100000;
    constexpr double EPS = std::numeric_limits<double>::epsilon();
    constexpr double FPMIN = std::numeric_limits<double>::min() / EPS;
    constexpr double XMIN = 2.0;
    constexpr double PI = std::numbers::pi;
    const int nl = x < XMIN ? static_cast<int>(xnu + 0.5) : std::max(0, static_cast<int>(xnu - x + 1.5));
    const double xmu = xnu - nl;
    const double xmu2 = xmu * xmu;
    const double xi = 1.0 / x, xi2 = 2.0 * xi, w = xi2 / PI;

    int isign = 1;
    double h = xnu * xi;
    if (h < FPMIN) h = FPMIN;
    double b = xi2 * xnu, d = 0.0, c = h;
    int i = 0;
    for (; i < MAXIT; ++i) {
        b += xi2;
        d = b - d;
        if (std::abs(d) < FPMIN) d = FPMIN;
        c = b - 1.0 / c;
        if (std::abs(c) < FPMIN) c = FPMIN;
        d = 1.0 / d;
        const double del = c * d;
        h *= del;
        if (d < 0.0) isign = -isign;
        if (std::abs(del - 1.0) <= EPS) break;
    }
    if (i >= MAXIT) throw DomainError("bessel_jy: continued fraction CF1 did not converge");
    double rjl = isign * FPMIN, rjpl = h * rjl;
    const double rjl1 = rjl, rjp1 = rjpl;
    double fact = xnu * xi;
    for (int l = nl - 1; l >= 0; --l) {
        const double rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if (rjl == 0.0) rjl = EPS;
    const double f = rjpl / rjl;
    double rjmu, rymu, rymup, ry1;
    if (x < XMIN) {
        const double x2 = 0.5 * x, pimu = PI * xmu;
        const double fct = std::abs(pimu) < EPS ? 1.0 : pimu / std::sin(pimu);
        double dd = -std::log(x2);
        double e = xmu * dd;
        const double fact2 = std::abs(e) < EPS ? 1.0 : std::sinh(e) / e;
        // gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
        double gam1 = 0.0, gam2 = 0.0, pw = 1.0;
        for (std::size_t k = 0; k < rgamma1p_coef.size(); ++k) {
            if (k % 2 == 0) gam2 += rgamma1p_coef[k] * pw;
            else gam1 -= rgamma1p_coef[k] * pw;
            if (k % 2 == 1) pw *= xmu2;
        }
        const double gampl = gam2 - xmu * gam1, gammi = gam2 + xmu * gam1;
        double ff = 2.0 / PI * fct * (gam1 * std::cosh(e) + gam2 * fact2 * dd);
        e = std::exp(e);
        double p = e / (gampl * PI);
        double q = 1.0 / (e * PI * gammi);
        const double pimu2 = 0.5 * pimu;
        const double fact3 = std::abs(pimu2) < EPS ? 1.0 : std::sin(pimu2) / pimu2;
        const double r = PI * pimu2 * fact3 * fact3;
        double cc = 1.0;
        dd = -x2 * x2;
        double sum = ff + r * q, sum1 = p;
        for (i = 1; i <= MAXIT; ++i) {
            ff = (i * ff + p + q) / (i * i - xmu2);
            cc *= dd / i;
            p /= (i - xmu);
            q /= (i + xmu);
            const double del = cc * (ff + r * q);
            sum += del;
            const double del1 = cc * p - i * del;
            sum1 += del1;
            if (std::abs(del) < (1.0 + std::abs(sum)) * EPS) break;
        }
        if (i > MAXIT) throw DomainError("bessel_jy: Temme series did not converge");
        rymu = -sum;
        ry1 = -sum1 * xi2;
        rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
    } else {
        double a = 0.25 - xmu2, p = -0.5 * xi, q = 1.0;
        const double br = 2.0 * x;
        double bi = 2.0;
        double fct = a * xi / (p * p + q * q);
        double cr = br + q * fct, ci = bi + p * fct;
        double den = br * br + bi * bi;
        double dr = br / den, di = -bi / den;
        double dlr = cr * dr - ci * di, dli = cr * di + ci * dr;
        double temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        for (i = 1; i < MAXIT; ++i) {
            a += 2 * i;
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if (std::abs(dr) + std::abs(di) < FPMIN) dr = FPMIN;
            fct = a / (cr * cr + ci * ci);
            cr = br + cr * fct;
            ci = bi - ci * fct;
            if (std::abs(cr) + std::abs(ci) < FPMIN) cr = FPMIN;
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (std::abs(dlr - 1.0) + std::abs(dli) <= EPS) break;
        }
        if (i >= MAXIT) throw DomainError("bessel_jy: continued fraction CF2 did not converge");
        const double gam = (p - f) / q;
        rjmu = std::sqrt(w / ((p - f) * gam + q));
        rjmu = std::copysign(rjmu, rjl);
        rymu = rjmu * gam;
        rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }
    const double scale = rjmu / rjl;
    BesselJY out;
    out.j = rjl1 * scale;
    out.jp = rjp1 * scale;
    for (i = 1; i <= nl; ++i) {
        const double rytemp = (xmu + i) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    out.y = rymu;
    out.yp = xnu * xi * rymu - ry1;
    return out;
}

}  // namespace detail

// J, Y and their derivatives for real order and x > 0.
inline BesselJY bessel_jy_derivs(double order, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_jy: argument must be positive");
    if (!std::isfinite(order)) throw DomainError("bessel_jy: non-finite order");
    if (order >= 0.0) return detail::bessel_jy_nonneg(order, x);
    const double q = -order;
    const auto b = detail::bessel_jy_nonneg(q, x);
    const double c = detail::cospi(q), s = detail::sinpi(q);
    return {c * b.j - s * b.y, s * b.j + c * b.y, c * b.jp - s * b.yp, s * b.jp + c * b.yp};
}

inline std::pair<SpecialValue, SpecialValue> bessel_jy(double order, double x) {
    const auto b = bessel_jy_derivs(order, x);
    // Absolute accuracy is set by the local amplitude sqrt(J^2 + Y^2).
    const double amp = std::hypot(b.j, b.y);
    const double err = amp * 1e-14 * (1.0 + std::abs(order));
    return {SpecialValue{b.j, err, 1.0}, SpecialValue{b.y, err, 1.0}};
}

// ---------------------------------------------------------------------------
// 1F2(a; b1, b2; z)

namespace detail {

using quad = boost::multiprecision::cpp_bin_float_quad;
using mp50 = boost::multiprecision::cpp_bin_float_50;
using mp100 = boost::multiprecision::cpp_bin_float_100;

struct SeriesResult {
    double value;
    double est_error;
    double cancellation;
};

// Maclaurin series in the working type T. Stops after the terms have started
// to shrink and fall below the precision of T.
template <class T>
SeriesResult hyp1f2_series(double a, double b1, double b2, double z, int max_terms = 20000) {
    using std::abs;
    const T ta = a, tb1 = b1, tb2 = b2, tz = z;
    const T eps = std::numeric_limits<T>::epsilon();
    T term = 1, sum = 1, max_abs = 1;
    int k = 0;
    for (; k < max_terms; ++k) {
        const T kk = k;
        term *= (ta + kk) / ((tb1 + kk) * (tb2 + kk) * (kk + 1)) * tz;
        sum += term;
        const T at = abs(term);
        if (at > max_abs) max_abs = at;
        if (term == 0) break;
        const double kd = static_cast<double>(k);
        const bool shrinking = (kd + 1.0) * (kd + 1.0 + b1) * (kd + 1.0 + b2) > std::abs(z) * std::abs(kd + 1.0 + a) &&
                               kd + 1.0 > std::abs(b1) && kd + 1.0 > std::abs(b2) && kd + 1.0 > std::abs(a);
        if (shrinking && at <= eps * abs(sum)) break;
    }
    if (k >= max_terms) throw DomainError("hyp1f2: series did not converge");
    const double v = static_cast<double>(sum);
    const double err = static_cast<double>(max_abs * eps * T(4 + k)) + static_cast<double>(abs(term));
    const double canc = v != 0.0 ? static_cast<double>(max_abs) / std::abs(v) : std::numeric_limits<double>::infinity();
    return {v, err, canc};
}

// Terminating case a = -m with no vanishing denominator before the cut: a polynomial.
inline SeriesResult hyp1f2_polynomial(int m, double b1, double b2, double z) {
    quad term = 1, sum = 1, max_abs = 1;
    for (int k = 0; k < m; ++k) {
        term *= quad(-m + k) / ((quad(b1) + k) * (quad(b2) + k) * (k + 1)) * quad(z);
        sum += term;
        max_abs = std::max(max_abs, quad(abs(term)));
    }
    const double v = static_cast<double>(sum);
    const double err = static_cast<double>(max_abs * std::numeric_limits<quad>::epsilon() * (4 + m));
    return {v, err, v != 0.0 ? static_cast<double>(max_abs) / std::abs(v) : 1.0};
}

struct AsymptoticResult {
    double value;
    double est_error;
    double scale;  // |algebraic| + |oscillatory amplitude|
};

// Large-x expansion of 1F2(a; b1, b2; -x^2): algebraic x^{-2a} series plus an
// oscillatory x^{m} cos(2x + pi chi) series, each truncated at its smallest term.
inline AsymptoticResult hyp1f2_asymptotic(double a, double b1, double b2, double x) {
    const double gb = gamma_fn(b1).value * gamma_fn(b2).value;
    const double calg = gb * rgamma(b1 - a) * rgamma(b2 - a);
    const double cosc = gb * rgamma(a) / std::sqrt(std::numbers::pi);
    const double ix2 = 1.0 / (x * x);

    double alg = 0.0, alg_err = 0.0;
    if (calg != 0.0) {
        double term = 1.0, sum = 1.0, last = 1.0;
        bool converged = false;
        for (int k = 0; k < 200; ++k) {
            const double next = term * (a + k) * (1.0 + a - b1 + k) * (1.0 + a - b2 + k) / (k + 1) * (-ix2);
            if (std::abs(next) >= std::abs(term) && k > 0) {
                last = std::abs(term);
                converged = true;
                break;
            }
            term = next;
            sum += term;
            last = std::abs(term);
            if (term == 0.0 || std::abs(term) < 1e-17 * std::abs(sum)) {
                converged = true;
                break;
            }
        }
        if (!converged) last = std::abs(term);
        const double pref = calg * std::pow(x, -2.0 * a);
        alg = pref * sum;
        alg_err = std::abs(pref) * (last + 1e-15 * std::abs(sum));
    }

    double osc = 0.0, osc_err = 0.0, osc_amp = 0.0;
    if (cosc != 0.0) {
        const double chi = 0.5 * (a - b1 - b2 + 0.5);
        const double m = 2.0 * chi;
        auto A1 = [&](double s) {
            return std::complex<double>(0.0, 2.0 * (3 * s * s - 5 * s + 4 * b1 * b2 + 4 * (b1 + b2) * s - 2 * (b1 + b2) + 1));
        };
        auto A0 = [&](double s) { return s * (s + 2 * b1 - 2) * (s + 2 * b2 - 2); };
        const double ph = 2.0 * x + std::numbers::pi * chi;
        std::complex<double> dm2 = 0.0, dm1 = 1.0, sum = 1.0;
        double prev = 1.0, last = 0.0, xp = 1.0;
        for (int j = 1; j < 200; ++j) {
            const std::complex<double> dj = -(dm1 * A1(m - j + 1) + dm2 * A0(m - j + 2)) / (8.0 * j);
            xp /= x;
            const double mag = std::abs(dj) * xp;
            if (mag > prev && j > 2) {
                last = prev;
                break;
            }
            sum += dj * xp;
            prev = mag;
            last = mag;
            dm2 = dm1;
            dm1 = dj;
            if (mag < 1e-17 * std::abs(sum)) break;
        }
        const double pref = cosc * std::pow(x, m);
        osc = pref * std::real(std::complex<double>(std::cos(ph), std::sin(ph)) * sum);
        osc_amp = std::abs(pref) * std::abs(sum);
        // Rounding of the phase itself costs ~eps |ph| of the amplitude.
        osc_err = std::abs(pref) * (last + (1e-15 + 4e-16 * std::abs(ph)) * std::abs(sum));
    }
    return {alg + osc, alg_err + osc_err, std::abs(alg) + osc_amp};
}

}  // namespace detail

struct Hyp1f2Options {
    double series_target = 1e-8;      // relative, series regime
    double asymptotic_target = 1e-5;  // relative to the size of the pieces, asymptotic regime
    double asymptotic_min_x = 6.0;
};

inline SpecialValue hyp1f2(double a, double b1, double b2, double z, const Hyp1f2Options& opt = {}) {
    if (!std::isfinite(a) || !std::isfinite(b1) || !std::isfinite(b2) || !std::isfinite(z))
        throw DomainError("hyp1f2: non-finite input");
    if (z == 0.0) return {1.0, 0.0, 1.0};

    const bool terminating = detail::is_nonpositive_integer(a);
    const int m = terminating ? static_cast<int>(-a) : 0;
    for (double b : {b1, b2}) {
        if (detail::is_nonpositive_integer(b) && !(terminating && m <= static_cast<int>(-b)))
            throw DomainError("hyp1f2: parameter pole at b = " + std::to_string(b));
    }
    if (terminating) {
        const auto r = detail::hyp1f2_polynomial(m, b1, b2, z);
        return {r.value, r.est_error, r.cancellation};
    }

    auto series_ok = [&](const detail::SeriesResult& r) { return r.est_error <= opt.series_target * std::abs(r.value); };
    if (z > 0.0) {
        const auto r = detail::hyp1f2_series<detail::quad>(a, b1, b2, z);
        if (!series_ok(r)) throw DomainError("hyp1f2: series accuracy not certified at z = " + std::to_string(z));
        return {r.value, r.est_error, r.cancellation};
    }

    const double x = std::sqrt(-z);
    // Cancellation grows like exp(2x): 113-bit series is ample up to x ~ 12.
    if (x <= 12.0) {
        const auto r = detail::hyp1f2_series<detail::quad>(a, b1, b2, z);
        if (series_ok(r) && r.est_error <= 1e-13 * std::abs(r.value)) return {r.value, r.est_error, r.cancellation};
    }
    if (x >= opt.asymptotic_min_x) {
        const auto r = detail::hyp1f2_asymptotic(a, b1, b2, x);
        if (r.est_error <= 1e-12 * r.scale) return {r.value, r.est_error, r.scale / std::max(std::abs(r.value), 1e-300)};
    }
    if (x <= 30.0) {
        const auto r = detail::hyp1f2_series<detail::mp50>(a, b1, b2, z);
        if (series_ok(r)) return {r.value, r.est_error, r.cancellation};
    }
    if (x <= 80.0) {
        const auto r = detail::hyp1f2_series<detail::mp100>(a, b1, b2, z);
        if (series_ok(r)) return {r.value, r.est_error, r.cancellation};
    }
    if (x >= opt.asymptotic_min_x) {
        const auto r = detail::hyp1f2_asymptotic(a, b1, b2, x);
        if (r.est_error <= opt.asymptotic_target * r.scale)
            return {r.value, r.est_error, r.scale / std::max(std::abs(r.value), 1e-300)};
    }
    throw DomainError("hyp1f2: z = " + std::to_string(z) + " lies in the gap where neither series nor asymptotic form is certified");
}

}  // namespace tdrg
