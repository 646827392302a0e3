// Interval arithmetic checked against exact rationals (gmpxx): every exact
// result for points drawn from the operand intervals must lie inside the
// computed interval.

#include "specgate/interval.hpp"

#include <gmpxx.h>
#include <gtest/gtest.h>

#include <random>

using specgate::BigFloat;
using specgate::Interval;
using specgate::PrecisionGuard;

namespace {

mpq_class exact(double x) { return mpq_class(x); }

mpq_class exact(const BigFloat& x)
{
    mpq_class q;
    mpfr_get_q(q.get_mpq_t(), x.raw());
    return q;
}

bool is_inf(double x) { return std::isinf(x); }
bool is_inf(const BigFloat& x) { return mpfr_inf_p(x.raw()) != 0; }

template <class R>
bool holds(const Interval<R>& iv, const mpq_class& q)
{
    const bool lo_ok = is_inf(iv.lo()) ? iv.lo() < R(0) : exact(iv.lo()) <= q;
    const bool hi_ok = is_inf(iv.hi()) ? iv.hi() > R(0) : q <= exact(iv.hi());
    return lo_ok && hi_ok;
}

class Gen {
public:
    explicit Gen(unsigned long seed) : rng_(seed) {}

    double value()
    {
        std::uniform_int_distribution<int> kind(0, 9);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::uniform_int_distribution<int> ex(-40, 40);
        switch (kind(rng_)) {
        case 0:
            return static_cast<double>(std::uniform_int_distribution<int>(-20, 20)(rng_));
        case 1:
            return std::ldexp(unit(rng_), std::uniform_int_distribution<int>(-1000, 1000)(rng_));
        default:
            return std::ldexp(unit(rng_), ex(rng_));
        }
    }

    Interval<double> interval()
    {
        double a = value();
        double b = std::uniform_int_distribution<int>(0, 4)(rng_) == 0 ? a : value();
        if (b < a) {
            std::swap(a, b);
        }
        return {a, b};
    }

    // exact rational points inside [lo, hi]: both ends and an interior point
    std::vector<mpq_class> points(const Interval<double>& x)
    {
        std::uniform_int_distribution<int> num(0, 1000);
        const mpq_class lo = exact(x.lo());
        const mpq_class hi = exact(x.hi());
        const mpq_class t(num(rng_), 1000);
        return {lo, hi, lo + (hi - lo) * t};
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

} // namespace

TEST(Interval, RandomizedArithmeticAgainstRationals)
{
    Gen g(20240611);
    long violations = 0;
    long checked = 0;
    constexpr int kCases = 100000;
    for (int c = 0; c < kCases; ++c) {
        const Interval<double> x = g.interval();
        const Interval<double> y = g.interval();
        const int op = c % 6;
        try {
            if (op == 0) {
                const Interval<double> r = x + y;
                for (const auto& p : g.points(x)) {
                    for (const auto& q : g.points(y)) {
                        violations += !holds(r, p + q);
                        ++checked;
                    }
                }
            } else if (op == 1) {
                const Interval<double> r = x - y;
                for (const auto& p : g.points(x)) {
                    for (const auto& q : g.points(y)) {
                        violations += !holds(r, p - q);
                        ++checked;
                    }
                }
            } else if (op == 2) {
                const Interval<double> r = x * y;
                for (const auto& p : g.points(x)) {
                    for (const auto& q : g.points(y)) {
                        violations += !holds(r, p * q);
                        ++checked;
                    }
                }
            } else if (op == 3) {
                if (y.contains_zero()) {
                    EXPECT_THROW(x / y, specgate::IntervalError);
                    continue;
                }
                const Interval<double> r = x / y;
                for (const auto& p : g.points(x)) {
                    for (const auto& q : g.points(y)) {
                        violations += !holds(r, p / q);
                        ++checked;
                    }
                }
            } else if (op == 4) {
                const Interval<double> r = sqr(x);
                for (const auto& p : g.points(x)) {
                    violations += !holds(r, p * p);
                    ++checked;
                }
            } else {
                const Interval<double> a = abs(x);
                const Interval<double> r = sqrt(a);
                // sqrt(p) in [lo, hi]  <=>  lo^2 <= p <= hi^2 for lo, hi >= 0
                for (const auto& p : g.points(a)) {
                    const mpq_class lo = exact(r.lo());
                    const bool hi_ok = is_inf(r.hi()) || p <= exact(r.hi()) * exact(r.hi());
                    violations += !(lo >= 0 && lo * lo <= p && hi_ok);
                    ++checked;
                }
            }
        } catch (const specgate::IntervalError&) {
            // overflow to infinity is reported, not silently wrapped
            continue;
        }
    }
    EXPECT_EQ(violations, 0);
    EXPECT_GT(checked, 300000);
}

TEST(Interval, BigFloatArithmeticAgainstRationals)
{
    PrecisionGuard pg(30);
    Gen g(7);
    long violations = 0;
    for (int c = 0; c < 20000; ++c) {
        const Interval<double> xd = g.interval();
        const Interval<double> yd = g.interval();
        const Interval<BigFloat> x(BigFloat(xd.lo()), BigFloat(xd.hi()));
        const Interval<BigFloat> y(BigFloat(yd.lo()), BigFloat(yd.hi()));
        const auto px = g.points(xd);
        const auto py = g.points(yd);
        const Interval<BigFloat> s = x + y;
        const Interval<BigFloat> m = x * y;
        for (const auto& p : px) {
            for (const auto& q : py) {
                violations += !holds(s, p + q);
                violations += !holds(m, p * q);
            }
        }
        if (!yd.contains_zero()) {
            const Interval<BigFloat> d = x / y;
            for (const auto& p : px) {
                for (const auto& q : py) {
                    violations += !holds(d, p / q);
                }
            }
        }
    }
    EXPECT_EQ(violations, 0);
}

TEST(Interval, TranscendentalsEncloseHighPrecisionValues)
{
    Gen g(99);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    long violations = 0;
    for (int c = 0; c < 5000; ++c) {
        double a = u(g.rng());
        double b = a + std::fabs(u(g.rng())) * 1e-3;
        const Interval<double> x(a, b);
        const double t = a + (b - a) * 0.37;
        PrecisionGuard pg(60);
        const BigFloat bt(t);
        auto inside = [&](const Interval<double>& r, const BigFloat& v) {
            return BigFloat(r.lo()) <= v && v <= BigFloat(r.hi());
        };
        violations += !inside(exp(x), exp(bt));
        violations += !inside(sin(x), sin(bt));
        violations += !inside(cos(x), cos(bt));
        const Interval<double> ax(std::fabs(a) + 1e-3, std::fabs(a) + 1e-3 + (b - a));
        violations += !inside(log(ax), log(BigFloat(ax.lo())));
    }
    EXPECT_EQ(violations, 0);
}

TEST(Interval, DirectedRoundingIsTight)
{
    // 0.1 + 0.2 is inexact: the interval has width exactly one ulp
    const Interval<double> r = Interval<double>(0.1) + Interval<double>(0.2);
    EXPECT_EQ(std::nextafter(r.lo(), 1.0), r.hi());
    // exact operations stay points
    const Interval<double> e = Interval<double>(0.5) * Interval<double>(4.0);
    EXPECT_TRUE(e.is_point());
    EXPECT_EQ(e.lo(), 2.0);
}

TEST(Interval, DecimalParsingEnclosesTheString)
{
    const Interval<double> tenth = Interval<double>::decimal("0.1");
    EXPECT_TRUE(holds(tenth, mpq_class(1, 10)));
    EXPECT_FALSE(tenth.is_point());
    const Interval<double> pi = Interval<double>::pi();
    EXPECT_LT(pi.lo(), M_PI + 1e-15);
    EXPECT_GT(pi.hi(), M_PI - 1e-15);
    EXPECT_LE(pi.lo(), pi.hi());
}

TEST(Interval, SinOverWideArgumentIsMinusOneToOne)
{
    const Interval<double> s = sin(Interval<double>(0.0, 10.0));
    EXPECT_EQ(s.lo(), -1.0);
    EXPECT_EQ(s.hi(), 1.0);
}

TEST(Interval, GammaOverIntervalsIsMonotoneOnEachSide)
{
    PrecisionGuard pg(40);
    const Interval<BigFloat> a = Interval<BigFloat>::decimal("11") / Interval<BigFloat>(BigFloat(6));
    const Interval<BigFloat> g = tgamma(a);
    const BigFloat ref = tgamma(BigFloat(11) / BigFloat(6));
    EXPECT_LE(g.lo(), ref);
    EXPECT_GE(g.hi(), ref);
    // straddling the minimum near 1.4616
    const Interval<double> m = tgamma(Interval<double>(1.3, 1.6));
    EXPECT_LE(m.lo(), 0.8856031944108887);
    EXPECT_GE(m.hi(), std::tgamma(1.3));
    EXPECT_THROW(tgamma(Interval<double>(-1.0, 1.0)), specgate::Error);
}

TEST(Interval, DivisionByZeroIntervalThrows)
{
    EXPECT_THROW(Interval<double>(1.0) / Interval<double>(-1.0, 1.0), specgate::IntervalError);
}
