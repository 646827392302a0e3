#pragma once

// Real intervals and complex rectangles with outward rounding.
//
// Containment is the contract: every result encloses the exact result of the
// operation applied to any members of the operands.  Double endpoints are
// rounded with error-free transformations (TwoSum / FMA residuals) and stepped
// one ulp outward only when the nearest result was inexact, so no global
// rounding mode is touched.  BigFloat endpoints use MPFR's directed rounding.

#include "specgate/numeric.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace specgate {

class IntervalError : public Error {
public:
    using Error::Error;
};

namespace rounding {

constexpr double kTiny = 0x1p-960;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double down(double x) { return std::nextafter(x, -kInf); }
inline double up(double x) { return std::nextafter(x, kInf); }

inline void check(double x)
{
    if (std::isnan(x)) {
        throw IntervalError("invalid (NaN) interval endpoint");
    }
}

// Result of a round-to-nearest op plus the sign of (exact - rounded).
inline double directed(double rounded, double err_sign, bool reliable, bool to_up)
{
    if (std::isinf(rounded) || std::isnan(rounded)) {
        return rounded;
    }
    if (!reliable) {
        return to_up ? up(rounded) : down(rounded);
    }
    if (to_up) {
        return err_sign > 0 ? up(rounded) : rounded;
    }
    return err_sign < 0 ? down(rounded) : rounded;
}

inline double add(double a, double b, bool to_up)
{
    const double s = a + b;
    if (std::isinf(s) && std::isfinite(a) && std::isfinite(b)) {
        // overflow: the exact sum is finite
        return s > 0 ? (to_up ? s : DBL_MAX) : (to_up ? -DBL_MAX : s);
    }
    if (!std::isfinite(s)) {
        return s;
    }
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return directed(s, err, true, to_up);
}

inline double mul(double a, double b, bool to_up)
{
    if (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    const double p = a * b;
    if (std::isinf(p) && std::isfinite(a) && std::isfinite(b)) {
        return p > 0 ? (to_up ? p : DBL_MAX) : (to_up ? -DBL_MAX : p);
    }
    if (!std::isfinite(p)) {
        return p;
    }
    const double e = std::fma(a, b, -p);
    return directed(p, e, std::fabs(p) > kTiny, to_up);
}

inline double div(double a, double b, bool to_up)
{
    if (a == 0.0) {
        return 0.0;
    }
    const double q = a / b;
    if (std::isinf(q) && std::isfinite(a) && std::isfinite(b)) {
        return q > 0 ? (to_up ? q : DBL_MAX) : (to_up ? -DBL_MAX : q);
    }
    if (!std::isfinite(q) || std::isinf(b)) {
        return q;
    }
    const double r = std::fma(-q, b, a);
    const double sign = (r == 0.0) ? 0.0 : ((r > 0) == (b > 0) ? 1.0 : -1.0);
    return directed(q, sign, std::fabs(q) > kTiny && std::fabs(a) > kTiny, to_up);
}

inline double sqrt(double x, bool to_up)
{
    const double s = std::sqrt(x);
    if (!std::isfinite(s) || s == 0.0) {
        return s;
    }
    const double r = std::fma(-s, s, x);
    return directed(s, r, x > kTiny, to_up);
}

inline mpfr_rnd_t mode(bool to_up) { return to_up ? MPFR_RNDU : MPFR_RNDD; }

inline void check(const BigFloat& x)
{
    if (x.is_nan()) {
        throw IntervalError("invalid (NaN) interval endpoint");
    }
}

inline BigFloat add(const BigFloat& a, const BigFloat& b, bool to_up)
{
    BigFloat r;
    mpfr_add(r.raw(), a.raw(), b.raw(), mode(to_up));
    return r;
}

inline BigFloat mul(const BigFloat& a, const BigFloat& b, bool to_up)
{
    BigFloat r;
    if (a.is_zero() || b.is_zero()) {
        return r;
    }
    mpfr_mul(r.raw(), a.raw(), b.raw(), mode(to_up));
    return r;
}

inline BigFloat div(const BigFloat& a, const BigFloat& b, bool to_up)
{
    BigFloat r;
    if (a.is_zero()) {
        return r;
    }
    mpfr_div(r.raw(), a.raw(), b.raw(), mode(to_up));
    return r;
}

inline BigFloat sqrt(const BigFloat& x, bool to_up)
{
    BigFloat r;
    mpfr_sqrt(r.raw(), x.raw(), mode(to_up));
    return r;
}

// Correctly rounded elementary function through MPFR, for either endpoint type.
// Doubles are evaluated in a 53-bit MPFR value so the rounding is directed.
using MpfrUnary = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);

inline double apply(MpfrUnary f, double x, bool to_up)
{
    mpfr_t a;
    mpfr_t r;
    mpfr_init2(a, 53);
    mpfr_init2(r, 53);
    mpfr_set_d(a, x, MPFR_RNDN);
    f(r, a, mode(to_up));
    const double out = mpfr_get_d(r, mode(to_up));
    mpfr_clear(a);
    mpfr_clear(r);
    return out;
}

inline BigFloat apply(MpfrUnary f, const BigFloat& x, bool to_up)
{
    BigFloat r;
    f(r.raw(), x.raw(), mode(to_up));
    return r;
}

inline int pi_wrapper(mpfr_ptr r, mpfr_srcptr, mpfr_rnd_t rnd) { return mpfr_const_pi(r, rnd); }

template <class R>
R decimal(std::string_view s, bool to_up)
{
    std::string tmp(s);
    if constexpr (std::is_same_v<R, double>) {
        mpfr_t a;
        mpfr_init2(a, 53);
        const int bad = mpfr_set_str(a, tmp.c_str(), 10, mode(to_up));
        const double out = mpfr_get_d(a, mode(to_up));
        mpfr_clear(a);
        if (bad != 0) {
            throw IntervalError("not a decimal number: " + tmp);
        }
        return out;
    } else {
        return BigFloat(s, mode(to_up));
    }
}

} // namespace rounding

template <class R>
class Interval {
public:
    Interval() : lo_(0), hi_(0) {}
    Interval(R point) : lo_(point), hi_(std::move(point)) { rounding::check(lo_); } // NOLINT
    Interval(int point) : Interval(R(point)) {}                                      // NOLINT
    Interval(R lo, R hi) : lo_(std::move(lo)), hi_(std::move(hi))
    {
        rounding::check(lo_);
        rounding::check(hi_);
        if (hi_ < lo_) {
            throw IntervalError("interval with lo > hi");
        }
    }

    // Encloses a decimal literal: endpoints are its downward/upward roundings.
    static Interval decimal(std::string_view s)
    {
        return {rounding::decimal<R>(s, false), rounding::decimal<R>(s, true)};
    }

    static Interval pi()
    {
        return {rounding::apply(rounding::pi_wrapper, R(0), false), rounding::apply(rounding::pi_wrapper, R(0), true)};
    }

    static Interval entire() { return {-real_traits<R>::infinity(), real_traits<R>::infinity()}; }

    const R& lo() const { return lo_; }
    const R& hi() const { return hi_; }

    bool contains(const R& x) const { return lo_ <= x && x <= hi_; }
    bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
    bool contains_zero() const { return lo_ <= R(0) && R(0) <= hi_; }
    bool is_point() const { return lo_ == hi_; }

    // Midpoint rounded to nearest; not an enclosure.
    R mid() const
    {
        if (!isfinite(lo_) || !isfinite(hi_)) {
            return lo_ == -hi_ ? R(0) : (isfinite(lo_) ? lo_ : hi_);
        }
        return lo_ + (hi_ - lo_) / R(2);
    }
    R width_upper() const { return rounding::add(hi_, -lo_, true); }
    // Largest |x| over members.
    R mag() const { return max(abs_r(lo_), abs_r(hi_)); }
    // Smallest |x| over members.
    R mig() const { return contains_zero() ? R(0) : min(abs_r(lo_), abs_r(hi_)); }

    friend Interval operator+(const Interval& a, const Interval& b)
    {
        return {rounding::add(a.lo_, b.lo_, false), rounding::add(a.hi_, b.hi_, true)};
    }
    friend Interval operator-(const Interval& a) { return {-a.hi_, -a.lo_}; }
    friend Interval operator-(const Interval& a, const Interval& b)
    {
        return {rounding::add(a.lo_, -b.hi_, false), rounding::add(a.hi_, -b.lo_, true)};
    }
    friend Interval operator*(const Interval& a, const Interval& b)
    {
        const R* ends_a[2] = {&a.lo_, &a.hi_};
        const R* ends_b[2] = {&b.lo_, &b.hi_};
        R lo = rounding::mul(a.lo_, b.lo_, false);
        R hi = rounding::mul(a.lo_, b.lo_, true);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                if (i == 0 && j == 0) {
                    continue;
                }
                R l = rounding::mul(*ends_a[i], *ends_b[j], false);
                R h = rounding::mul(*ends_a[i], *ends_b[j], true);
                if (l < lo) {
                    lo = std::move(l);
                }
                if (hi < h) {
                    hi = std::move(h);
                }
            }
        }
        return {std::move(lo), std::move(hi)};
    }
    friend Interval operator/(const Interval& a, const Interval& b)
    {
        if (b.contains_zero()) {
            throw IntervalError("interval division by an interval containing zero");
        }
        const R* ends_a[2] = {&a.lo_, &a.hi_};
        const R* ends_b[2] = {&b.lo_, &b.hi_};
        R lo = rounding::div(a.lo_, b.lo_, false);
        R hi = rounding::div(a.lo_, b.lo_, true);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                R l = rounding::div(*ends_a[i], *ends_b[j], false);
                R h = rounding::div(*ends_a[i], *ends_b[j], true);
                if (l < lo) {
                    lo = std::move(l);
                }
                if (hi < h) {
                    hi = std::move(h);
                }
            }
        }
        return {std::move(lo), std::move(hi)};
    }
    Interval& operator+=(const Interval& b) { return *this = *this + b; }
    Interval& operator-=(const Interval& b) { return *this = *this - b; }
    Interval& operator*=(const Interval& b) { return *this = *this * b; }

    friend Interval sqr(const Interval& a)
    {
        const R m = a.mig();
        const R M = a.mag();
        return {rounding::mul(m, m, false), rounding::mul(M, M, true)};
    }

    friend Interval sqrt(const Interval& a)
    {
        if (a.lo_ < R(0)) {
            throw IntervalError("sqrt of an interval with negative members");
        }
        return {rounding::sqrt(a.lo_, false), rounding::sqrt(a.hi_, true)};
    }

    friend Interval abs(const Interval& a) { return {a.mig(), a.mag()}; }

    friend Interval exp(const Interval& a)
    {
        return {rounding::apply(mpfr_exp, a.lo_, false), rounding::apply(mpfr_exp, a.hi_, true)};
    }

    friend Interval log(const Interval& a)
    {
        if (!(a.lo_ > R(0))) {
            throw IntervalError("log of an interval with nonpositive members");
        }
        return {rounding::apply(mpfr_log, a.lo_, false), rounding::apply(mpfr_log, a.hi_, true)};
    }

    // Gamma is decreasing on (0, x0] and increasing on [x0, inf), x0 = 1.4616...
    friend Interval tgamma(const Interval& a)
    {
        if (!(a.lo_ > R(0))) {
            throw IntervalError("gamma is only enclosed for positive arguments");
        }
        auto g = [](const R& x, bool to_up) { return rounding::apply(mpfr_gamma, x, to_up); };
        if (a.hi_ <= R(1.4616)) {
            return {g(a.hi_, false), g(a.lo_, true)};
        }
        if (a.lo_ >= R(1.4617)) {
            return {g(a.lo_, false), g(a.hi_, true)};
        }
        // 0.8856031944... is the minimum value
        return {R(0.8856), max(g(a.lo_, true), g(a.hi_, true))};
    }

    friend Interval sin(const Interval& a) { return periodic(a, mpfr_sin); }
    friend Interval cos(const Interval& a) { return periodic(a, mpfr_cos); }

    // x^y for x > 0 via exp(y log x); integer exponents use repeated products.
    friend Interval pow(const Interval& x, const Interval& y)
    {
        if (y.is_point()) {
            const double yd = to_double(y.lo_);
            if (std::floor(yd) == yd && std::fabs(yd) <= 64 && R(yd) == y.lo_) {
                return ipow(x, static_cast<int>(yd));
            }
        }
        return exp(y * log(x));
    }

    friend Interval ipow(const Interval& x, int e)
    {
        if (e < 0) {
            return Interval(1) / ipow(x, -e);
        }
        if (e == 0) {
            return Interval(1);
        }
        if (e % 2 == 0) {
            return sqr(ipow(x, e / 2));
        }
        return x * ipow(x, e - 1);
    }

    friend Interval hull(const Interval& a, const Interval& b) { return {min(a.lo_, b.lo_), max(a.hi_, b.hi_)}; }

private:
    static R abs_r(const R& x)
    {
        using std::fabs;
        return fabs(x);
    }

    // Point arguments are correctly rounded; wider arguments use the
    // Lipschitz bound |f(x) - f(m)| <= |x - m|, clipped to [-1, 1].
    static Interval periodic(const Interval& a, rounding::MpfrUnary f)
    {
        if (!isfinite(a.lo_) || !isfinite(a.hi_)) {
            return {R(-1), R(1)};
        }
        if (a.is_point()) {
            return {rounding::apply(f, a.lo_, false), rounding::apply(f, a.lo_, true)};
        }
        const R w = a.width_upper();
        R lo = rounding::add(rounding::apply(f, a.lo_, false), -w, false);
        R hi = rounding::add(rounding::apply(f, a.lo_, true), w, true);
        return {max(lo, R(-1)), min(hi, R(1))};
    }

    R lo_;
    R hi_;
};

template <class R>
std::string to_string(const Interval<R>& x)
{
    if constexpr (std::is_same_v<R, double>) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", x.lo(), x.hi());
        return buf;
    } else {
        const int d = BigFloat::thread_digits() + 2;
        return "[" + x.lo().to_string(d, MPFR_RNDD) + ", " + x.hi().to_string(d, MPFR_RNDU) + "]";
    }
}

/// Complex interval as an axis-aligned rectangle.
template <class R>
class CIBox {
public:
    CIBox() = default;
    CIBox(Interval<R> re, Interval<R> im) : re_(std::move(re)), im_(std::move(im)) {}
    CIBox(Interval<R> re) : re_(std::move(re)), im_(R(0)) {} // NOLINT(google-explicit-constructor)
    explicit CIBox(const Complex<R>& z) : re_(z.re), im_(z.im) {}

    const Interval<R>& re() const { return re_; }
    const Interval<R>& im() const { return im_; }

    bool contains(const Complex<R>& z) const { return re_.contains(z.re) && im_.contains(z.im); }
    Complex<R> mid() const { return {re_.mid(), im_.mid()}; }

    friend CIBox operator+(const CIBox& a, const CIBox& b) { return {a.re_ + b.re_, a.im_ + b.im_}; }
    friend CIBox operator-(const CIBox& a, const CIBox& b) { return {a.re_ - b.re_, a.im_ - b.im_}; }
    friend CIBox operator-(const CIBox& a) { return {-a.re_, -a.im_}; }
    friend CIBox operator*(const CIBox& a, const CIBox& b)
    {
        return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
    }
    friend CIBox operator*(const Interval<R>& s, const CIBox& a) { return {s * a.re_, s * a.im_}; }
    friend CIBox operator/(const CIBox& a, const CIBox& b)
    {
        const Interval<R> d = norm_sq(b);
        const CIBox n = a * conj(b);
        return {n.re_ / d, n.im_ / d};
    }
    CIBox& operator+=(const CIBox& b) { return *this = *this + b; }

    friend CIBox conj(const CIBox& a) { return {a.re_, -a.im_}; }
    friend Interval<R> norm_sq(const CIBox& a) { return sqr(a.re_) + sqr(a.im_); }
    friend Interval<R> abs(const CIBox& a) { return sqrt(norm_sq(a)); }

private:
    Interval<R> re_;
    Interval<R> im_;
};

// Euclidean norm of a vector of complex boxes.
template <class R>
Interval<R> norm2(const std::vector<CIBox<R>>& v)
{
    Interval<R> s(0);
    for (const auto& x : v) {
        s += norm_sq(x);
    }
    return sqrt(s);
}

} // namespace specgate
