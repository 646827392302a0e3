#include "specgate/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>

using specgate::BigFloat;
using specgate::Complex;
using specgate::Expr;
using specgate::ExprError;
using specgate::PrecisionGuard;

namespace {

Complex<double> ev(const std::string& s, const specgate::Bindings& b = {})
{
    return Expr::parse(s).eval<double>(b);
}

} // namespace

TEST(Expr, PrecedenceAndAssociativity)
{
    EXPECT_DOUBLE_EQ(ev("1+2*3").re, 7.0);
    EXPECT_DOUBLE_EQ(ev("(1+2)*3").re, 9.0);
    EXPECT_DOUBLE_EQ(ev("2^3^2").re, 512.0); // right associative
    EXPECT_DOUBLE_EQ(ev("-2^2").re, -4.0);
    EXPECT_DOUBLE_EQ(ev("8/4/2").re, 1.0);
    EXPECT_DOUBLE_EQ(ev("1.5e2").re, 150.0);
}

TEST(Expr, ImaginaryUnitAndFunctions)
{
    const Complex<double> z = ev("i*i");
    EXPECT_DOUBLE_EQ(z.re, -1.0);
    EXPECT_DOUBLE_EQ(z.im, 0.0);
    EXPECT_NEAR(ev("2*i*sin(1)").im, 2 * std::sin(1.0), 1e-15);
    EXPECT_NEAR(ev("gamma(4/3)").re, std::tgamma(4.0 / 3.0), 1e-15);
    EXPECT_NEAR(ev("exp(log(7))").re, 7.0, 1e-14);
    EXPECT_NEAR(ev("sqrt(2)*cos(pi)").re, -std::sqrt(2.0), 1e-15);
}

TEST(Expr, VariablesBindAtEvaluation)
{
    const Expr e = Expr::parse("n^2/10 + 2*i*sin(n)");
    const auto vars = e.variables();
    ASSERT_EQ(vars.size(), 1u);
    EXPECT_EQ(vars[0], "n");
    const Complex<double> v = e.eval<double>({{"n", 3}});
    EXPECT_NEAR(v.re, 0.9, 1e-15);
    EXPECT_NEAR(v.im, 2 * std::sin(3.0), 1e-15);
    EXPECT_THROW(e.eval<double>({}), ExprError);
}

TEST(Expr, SyntaxErrorsAreReported)
{
    EXPECT_THROW(Expr::parse("1+"), ExprError);
    EXPECT_THROW(Expr::parse("(1"), ExprError);
    EXPECT_THROW(Expr::parse("foo(1)"), ExprError);
    EXPECT_THROW(Expr::parse("1 2"), ExprError);
    EXPECT_THROW(Expr::parse(""), ExprError);
}

TEST(Expr, EnclosureContainsHighPrecisionValue)
{
    PrecisionGuard g(50);
    const Expr e = Expr::parse("(2*gamma(11/6)*(n-1/2)*sqrt(pi)/(sqrt(3)*gamma(4/3)))^(6/5)");
    const auto box = e.enclose<BigFloat>({{"n", 7}});
    const Complex<BigFloat> v = e.eval<BigFloat>({{"n", 7}});
    EXPECT_LE(box.re().lo(), v.re);
    EXPECT_GE(box.re().hi(), v.re);
    EXPECT_LT((box.re().hi() - box.re().lo()).to_double(), 1e-40);

    const auto dbox = e.enclose<double>({{"n", 7}});
    EXPECT_LE(BigFloat(dbox.re().lo()), v.re);
    EXPECT_GE(BigFloat(dbox.re().hi()), v.re);
}

TEST(Expr, ComplexFunctionArgumentsAreNotEnclosable)
{
    const Expr e = Expr::parse("sin(i)");
    EXPECT_NO_THROW(e.eval<double>({}));
    EXPECT_THROW(e.enclose<double>({}), ExprError);
}

TEST(Expr, ComplexArithmeticEncloses)
{
    const auto b = Expr::parse("(1+2*i)*(3-i)/(2+i)").enclose<double>({});
    // (1+2i)(3-i) = 5+5i; (5+5i)/(2+i) = 3+i
    EXPECT_TRUE(b.re().contains(3.0));
    EXPECT_TRUE(b.im().contains(1.0));
}
