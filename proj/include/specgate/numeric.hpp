#pragma once

// Precision contexts, the complex scalar used throughout, and small vector
// helpers.  Everything numeric in the library is a template over the real
// type R, which is either double or BigFloat.

#include "specgate/bigfloat.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace specgate {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PrecisionKind { MachineDouble, BigFloat };

struct PrecisionContext {
    PrecisionKind kind = PrecisionKind::MachineDouble;
    int digits = 16;

    static PrecisionContext machine_double() { return {}; }

    static PrecisionContext bigfloat(int digits)
    {
        if (digits < 16) {
            throw Error("BigFloat precision needs at least 16 digits, got " + std::to_string(digits));
        }
        return {PrecisionKind::BigFloat, digits};
    }

    // "double" or "bigfloat:<digits>"
    static PrecisionContext parse(std::string_view text)
    {
        if (text == "double") {
            return machine_double();
        }
        constexpr std::string_view prefix = "bigfloat:";
        if (text.substr(0, prefix.size()) == prefix) {
            const std::string num(text.substr(prefix.size()));
            char* end = nullptr;
            const long d = std::strtol(num.c_str(), &end, 10);
            if (num.empty() || *end != '\0') {
                throw Error("malformed precision '" + std::string(text) + "'");
            }
            return bigfloat(static_cast<int>(d));
        }
        throw Error("unknown precision '" + std::string(text) + "' (expected double or bigfloat:<digits>)");
    }

    std::string to_string() const
    {
        return kind == PrecisionKind::MachineDouble ? "double" : "bigfloat:" + std::to_string(digits);
    }

    bool is_double() const { return kind == PrecisionKind::MachineDouble; }

    friend bool operator==(const PrecisionContext&, const PrecisionContext&) = default;
};

template <class R>
struct real_traits;

template <>
struct real_traits<double> {
    static double unit_roundoff() { return 0x1p-53; }
    static int digits10() { return 16; }
    static double from_string(std::string_view s) { return std::strtod(std::string(s).c_str(), nullptr); }
    static double pi() { return 3.14159265358979323846; }
    static double infinity() { return HUGE_VAL; }
};

template <>
struct real_traits<BigFloat> {
    static BigFloat unit_roundoff() { return ldexp(BigFloat(1), -static_cast<int>(BigFloat::thread_bits())); }
    static int digits10() { return BigFloat::thread_digits(); }
    static BigFloat from_string(std::string_view s) { return BigFloat(s); }
    static BigFloat pi() { return bigfloat_pi(); }
    static BigFloat infinity() { return bigfloat_inf(); }
};

template <class R>
inline double to_double(const R& x)
{
    if constexpr (std::is_same_v<R, double>) {
        return x;
    } else {
        return x.to_double();
    }
}

/// Runs `f.template operator()<R>()` with R chosen by the context; BigFloat
/// runs under a precision guard so every value created inside uses ctx.digits.
template <class F>
decltype(auto) with_precision(const PrecisionContext& ctx, F&& f)
{
    if (ctx.is_double()) {
        return f.template operator()<double>();
    }
    PrecisionGuard guard(ctx.digits);
    return f.template operator()<BigFloat>();
}

template <class R>
struct Complex {
    R re{};
    R im{};

    Complex() = default;
    Complex(R r) : re(std::move(r)), im(0) {} // NOLINT(google-explicit-constructor)
    Complex(R r, R i) : re(std::move(r)), im(std::move(i)) {}

    template <class S>
        requires(!std::is_same_v<S, R>)
    explicit Complex(const Complex<S>& o)
    {
        if constexpr (std::is_same_v<R, double>) {
            re = to_double(o.re);
            im = to_double(o.im);
        } else {
            re = R(o.re);
            im = R(o.im);
        }
    }

    Complex& operator+=(const Complex& b)
    {
        re += b.re;
        im += b.im;
        return *this;
    }
    Complex& operator-=(const Complex& b)
    {
        re -= b.re;
        im -= b.im;
        return *this;
    }
    Complex& operator*=(const R& s)
    {
        re *= s;
        im *= s;
        return *this;
    }

    friend Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
    friend Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
    friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
    friend Complex operator*(const Complex& a, const Complex& b)
    {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator*(const R& s, const Complex& a) { return {s * a.re, s * a.im}; }
    friend Complex operator*(const Complex& a, const R& s) { return {a.re * s, a.im * s}; }
    friend Complex operator/(const Complex& a, const R& s) { return {a.re / s, a.im / s}; }
    friend Complex operator/(const Complex& a, const Complex& b)
    {
        const R d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    friend bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }
};

template <class R>
Complex<R> conj(const Complex<R>& z)
{
    return {z.re, -z.im};
}

// |z|^2
template <class R>
R norm(const Complex<R>& z)
{
    return z.re * z.re + z.im * z.im;
}

template <class R>
R abs(const Complex<R>& z)
{
    using std::hypot;
    return hypot(z.re, z.im);
}

template <class R>
using CVector = std::vector<Complex<R>>;

template <class R>
R norm2(const CVector<R>& v)
{
    using std::sqrt;
    R s(0);
    for (const auto& x : v) {
        s += norm(x);
    }
    return sqrt(s);
}

// Conjugate-linear in the first argument.
template <class R>
Complex<R> dot(const CVector<R>& a, const CVector<R>& b)
{
    Complex<R> s;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s.re += a[k].re * b[k].re + a[k].im * b[k].im;
        s.im += a[k].re * b[k].im - a[k].im * b[k].re;
    }
    return s;
}

// Bilinear (no conjugation): sum a_k b_k.
template <class R>
Complex<R> bilinear(const CVector<R>& a, const CVector<R>& b)
{
    Complex<R> s;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

template <class R>
void normalize(CVector<R>& v)
{
    const R n = norm2(v);
    if (n == R(0)) {
        throw Error("cannot normalize a zero vector");
    }
    for (auto& x : v) {
        x = x / n;
    }
}

template <class R, class S>
CVector<R> convert_vector(const CVector<S>& v)
{
    if constexpr (std::is_same_v<R, S>) {
        return v;
    } else {
        CVector<R> out;
        out.reserve(v.size());
        for (const auto& x : v) {
            out.emplace_back(x);
        }
        return out;
    }
}

} // namespace specgate
