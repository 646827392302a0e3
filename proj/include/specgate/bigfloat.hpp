#pragma once

// RAII wrapper over an MPFR value with a thread-local working precision.
//
// Every BigFloat created on a thread takes that thread's current precision;
// arithmetic rounds to nearest at the precision of the result.  Interval
// arithmetic goes through raw() to call MPFR with directed rounding.

#include <mpfr.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace specgate {

class BigFloat {
public:
    // Decimal digits are converted to bits with a small safety margin.
    static mpfr_prec_t digits_to_bits(int digits)
    {
        return static_cast<mpfr_prec_t>(std::ceil(digits * 3.3219280948873623)) + 4;
    }

    static mpfr_prec_t thread_bits() { return bits_ref(); }
    static int thread_digits() { return digits_ref(); }

    static void set_thread_digits(int digits)
    {
        digits_ref() = digits;
        bits_ref() = digits_to_bits(digits);
    }

    BigFloat()
    {
        mpfr_init2(v_, bits_ref());
        mpfr_set_zero(v_, 1);
    }

    BigFloat(double d) // NOLINT(google-explicit-constructor)
    {
        mpfr_init2(v_, bits_ref());
        mpfr_set_d(v_, d, MPFR_RNDN);
    }

    BigFloat(int i) // NOLINT(google-explicit-constructor)
    {
        mpfr_init2(v_, bits_ref());
        mpfr_set_si(v_, i, MPFR_RNDN);
    }

    BigFloat(long i) // NOLINT(google-explicit-constructor)
    {
        mpfr_init2(v_, bits_ref());
        mpfr_set_si(v_, i, MPFR_RNDN);
    }

    BigFloat(long long i) // NOLINT(google-explicit-constructor)
    {
        mpfr_init2(v_, bits_ref());
        mpfr_set_si(v_, static_cast<long>(i), MPFR_RNDN);
    }

    explicit BigFloat(std::string_view s, mpfr_rnd_t rnd = MPFR_RNDN)
    {
        mpfr_init2(v_, bits_ref());
        std::string tmp(s);
        if (mpfr_set_str(v_, tmp.c_str(), 10, rnd) != 0) {
            mpfr_clear(v_);
            throw std::invalid_argument("not a decimal number: " + tmp);
        }
    }

    BigFloat(const BigFloat& o)
    {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }

    BigFloat(BigFloat&& o) noexcept
    {
        v_[0] = o.v_[0];
        o.v_[0]._mpfr_d = nullptr;
    }

    BigFloat& operator=(const BigFloat& o)
    {
        if (this != &o) {
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }

    BigFloat& operator=(BigFloat&& o) noexcept
    {
        if (this != &o) {
            if (mpfr_get_prec(v_) == mpfr_get_prec(o.v_)) {
                mpfr_swap(v_, o.v_);
            } else {
                mpfr_set(v_, o.v_, MPFR_RNDN);
            }
        }
        return *this;
    }

    ~BigFloat()
    {
        if (v_[0]._mpfr_d != nullptr) {
            mpfr_clear(v_);
        }
    }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }
    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

    double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(v_, rnd); }
    explicit operator double() const { return to_double(); }

    bool is_nan() const { return mpfr_nan_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    // Scientific notation with `sig` significant digits.
    std::string to_string(int sig, mpfr_rnd_t rnd = MPFR_RNDN) const
    {
        return format("%.*R*e", sig - 1, rnd);
    }

    // Fixed notation with `decimals` digits after the point.
    std::string to_fixed(int decimals, mpfr_rnd_t rnd = MPFR_RNDN) const
    {
        return format("%.*R*f", decimals, rnd);
    }

    BigFloat& operator+=(const BigFloat& b)
    {
        mpfr_add(v_, v_, b.v_, MPFR_RNDN);
        return *this;
    }
    BigFloat& operator-=(const BigFloat& b)
    {
        mpfr_sub(v_, v_, b.v_, MPFR_RNDN);
        return *this;
    }
    BigFloat& operator*=(const BigFloat& b)
    {
        mpfr_mul(v_, v_, b.v_, MPFR_RNDN);
        return *this;
    }
    BigFloat& operator/=(const BigFloat& b)
    {
        mpfr_div(v_, v_, b.v_, MPFR_RNDN);
        return *this;
    }

    friend BigFloat operator+(const BigFloat& a, const BigFloat& b)
    {
        BigFloat r;
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator-(const BigFloat& a, const BigFloat& b)
    {
        BigFloat r;
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator*(const BigFloat& a, const BigFloat& b)
    {
        BigFloat r;
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator/(const BigFloat& a, const BigFloat& b)
    {
        BigFloat r;
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator-(const BigFloat& a)
    {
        BigFloat r;
        mpfr_neg(r.v_, a.v_, MPFR_RNDN);
        return r;
    }

    friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator!=(const BigFloat& a, const BigFloat& b) { return !(a == b); }
    friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const BigFloat& a, const BigFloat& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>(const BigFloat& a, const BigFloat& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const BigFloat& a, const BigFloat& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }

private:
    static mpfr_prec_t& bits_ref()
    {
        thread_local mpfr_prec_t bits = digits_to_bits(50);
        return bits;
    }
    static int& digits_ref()
    {
        thread_local int digits = 50;
        return digits;
    }

    std::string format(const char* fmt, int digits, mpfr_rnd_t rnd) const
    {
        char* out = nullptr;
        if (mpfr_asprintf(&out, fmt, digits, rnd, v_) < 0 || out == nullptr) {
            throw std::runtime_error("mpfr_asprintf failed");
        }
        std::string s(out);
        mpfr_free_str(out);
        return s;
    }

    mpfr_t v_;
};

/// Sets the thread's BigFloat precision for the lifetime of the guard.
class PrecisionGuard {
public:
    explicit PrecisionGuard(int digits) : saved_(BigFloat::thread_digits())
    {
        BigFloat::set_thread_digits(digits);
    }
    ~PrecisionGuard() { BigFloat::set_thread_digits(saved_); }
    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
    int saved_;
};

namespace detail {
template <class F>
BigFloat unary_mpfr(const BigFloat& x, F f, mpfr_rnd_t rnd = MPFR_RNDN)
{
    BigFloat r;
    f(r.raw(), x.raw(), rnd);
    return r;
}
} // namespace detail

inline BigFloat sqrt(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_sqrt); }
inline BigFloat abs(const BigFloat& x)
{
    BigFloat r;
    mpfr_abs(r.raw(), x.raw(), MPFR_RNDN);
    return r;
}
inline BigFloat fabs(const BigFloat& x) { return abs(x); }
inline BigFloat exp(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_exp); }
inline BigFloat log(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_log); }
inline BigFloat log10(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_log10); }
inline BigFloat sin(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_sin); }
inline BigFloat cos(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_cos); }
inline BigFloat tgamma(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_gamma); }
inline BigFloat acos(const BigFloat& x) { return detail::unary_mpfr(x, mpfr_acos); }
inline BigFloat atan2(const BigFloat& y, const BigFloat& x)
{
    BigFloat r;
    mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
    return r;
}
inline BigFloat pow(const BigFloat& x, const BigFloat& y)
{
    BigFloat r;
    mpfr_pow(r.raw(), x.raw(), y.raw(), MPFR_RNDN);
    return r;
}
inline BigFloat hypot(const BigFloat& x, const BigFloat& y)
{
    BigFloat r;
    mpfr_hypot(r.raw(), x.raw(), y.raw(), MPFR_RNDN);
    return r;
}
inline BigFloat floor(const BigFloat& x)
{
    BigFloat r;
    mpfr_floor(r.raw(), x.raw());
    return r;
}
inline BigFloat ldexp(const BigFloat& x, int e)
{
    BigFloat r;
    mpfr_mul_2si(r.raw(), x.raw(), e, MPFR_RNDN);
    return r;
}
inline BigFloat fma(const BigFloat& a, const BigFloat& b, const BigFloat& c)
{
    BigFloat r;
    mpfr_fma(r.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
    return r;
}
inline bool isfinite(const BigFloat& x) { return x.is_finite(); }
inline bool isnan(const BigFloat& x) { return x.is_nan(); }
inline const BigFloat& min(const BigFloat& a, const BigFloat& b) { return b < a ? b : a; }
inline const BigFloat& max(const BigFloat& a, const BigFloat& b) { return a < b ? b : a; }

// Double overloads so unqualified calls in this namespace never convert a
// double to BigFloat.
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }
inline double fabs(double x) { return std::fabs(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log10(double x) { return std::log10(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tgamma(double x) { return std::tgamma(x); }
inline double acos(double x) { return std::acos(x); }
inline double atan2(double y, double x) { return std::atan2(y, x); }
inline double pow(double x, double y) { return std::pow(x, y); }
inline double hypot(double x, double y) { return std::hypot(x, y); }
inline double floor(double x) { return std::floor(x); }
inline double ldexp(double x, int e) { return std::ldexp(x, e); }
inline double fma(double a, double b, double c) { return std::fma(a, b, c); }
inline bool isfinite(double x) { return std::isfinite(x); }
inline bool isnan(double x) { return std::isnan(x); }
inline double min(double a, double b) { return b < a ? b : a; }
inline double max(double a, double b) { return a < b ? b : a; }

inline BigFloat bigfloat_pi(mpfr_rnd_t rnd = MPFR_RNDN)
{
    BigFloat r;
    mpfr_const_pi(r.raw(), rnd);
    return r;
}

inline BigFloat bigfloat_inf(int sign = 1)
{
    BigFloat r;
    mpfr_set_inf(r.raw(), sign);
    return r;
}

} // namespace specgate
