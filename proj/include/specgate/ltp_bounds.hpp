#pragma once

// Locally-trivial-pseudospectrum constants and the bounds built from them.
//
// Every bound is evaluated in interval arithmetic at BigFloat precision
// (so exp(n pi / sqrt 3) cannot overflow) and the upper endpoint is then
// rounded upward into the caller's real type.  A value beyond the range of
// that type comes back as +infinity.

#include "specgate/expr.hpp"
#include "specgate/interval.hpp"
#include "specgate/numeric.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace specgate {

class LTPError : public Error {
public:
    using Error::Error;
};

struct LTPModel {
    enum class Kind {
        Strip,       // resolvent bound between consecutive real eigenvalues
        Generalized, // dist(z, Sp) <= C_K eps^(1/p)
    };

    Kind kind = Kind::Strip;
    Expr kappa_bound;       // in n
    Expr lambda_asymptotic; // in n
    Expr c_of_m;            // in m
    Expr gap_floor;         // constant
    Expr constant_ck;       // in n and kappa (Generalized only)
    int multiplicity_p = 1;
    std::vector<std::string> hypotheses;

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["kind"] = kind == Kind::Strip ? "strip" : "generalized";
        j["kappa_bound"] = kappa_bound.source();
        j["lambda_asymptotic"] = lambda_asymptotic.source();
        j["c_of_m"] = c_of_m.source();
        j["gap_floor"] = gap_floor.source();
        j["constant_ck"] = constant_ck.source();
        j["multiplicity_p"] = multiplicity_p;
        j["hypotheses"] = hypotheses;
        return j;
    }

    static LTPModel from_json(const nlohmann::json& j)
    {
        static const std::vector<std::string> known = {"kind",   "kappa_bound", "lambda_asymptotic", "c_of_m",
                                                       "gap_floor", "constant_ck", "multiplicity_p",   "hypotheses"};
        if (!j.is_object()) {
            throw LTPError("LTP model must be a JSON object");
        }
        for (const auto& [k, _] : j.items()) {
            if (std::find(known.begin(), known.end(), k) == known.end()) {
                throw LTPError("unknown LTP model key '" + k + "'");
            }
        }
        LTPModel m;
        try {
            const std::string kind = j.value("kind", "strip");
            if (kind == "strip") {
                m.kind = Kind::Strip;
            } else if (kind == "generalized") {
                m.kind = Kind::Generalized;
            } else {
                throw LTPError("LTP kind must be 'strip' or 'generalized'");
            }
            auto expr = [&](const char* key, const char* fallback) {
                const std::string s = j.value(key, std::string(fallback));
                return s.empty() ? Expr() : Expr::parse(s);
            };
            m.kappa_bound = expr("kappa_bound", "exp(n*pi/sqrt(3))");
            m.lambda_asymptotic = expr("lambda_asymptotic", "");
            m.c_of_m = expr("c_of_m", "");
            m.gap_floor = expr("gap_floor", "");
            m.constant_ck = expr("constant_ck", "");
            m.multiplicity_p = j.value("multiplicity_p", 1);
            m.hypotheses = j.value("hypotheses", std::vector<std::string>{});
        } catch (const nlohmann::json::exception& e) {
            throw LTPError(std::string("malformed LTP model: ") + e.what());
        } catch (const ExprError& e) {
            throw LTPError(std::string("bad LTP expression: ") + e.what());
        }
        if (m.multiplicity_p < 1) {
            throw LTPError("multiplicity_p must be >= 1");
        }
        if (m.kind == Kind::Strip && (m.c_of_m.empty() || m.lambda_asymptotic.empty() || m.gap_floor.empty())) {
            throw LTPError("a strip model needs c_of_m, lambda_asymptotic and gap_floor");
        }
        if (m.kind == Kind::Generalized && m.constant_ck.empty()) {
            throw LTPError("a generalized model needs constant_ck");
        }
        return m;
    }
};

inline LTPModel cubic_ltp_model()
{
    LTPModel m;
    m.kind = LTPModel::Kind::Strip;
    m.kappa_bound = Expr::parse("exp(n*pi/sqrt(3))");
    m.lambda_asymptotic = Expr::parse("(2*gamma(11/6)*(n-1/2)*sqrt(pi)/(sqrt(3)*gamma(4/3)))^(6/5)");
    m.c_of_m = Expr::parse("exp((m+1)*pi/sqrt(3) + (2*gamma(11/6)*sqrt(pi/3)/gamma(4/3)*(m+1))^(6/5))/14");
    m.gap_floor = Expr::parse("pi/sqrt(3)+1");
    m.hypotheses = {"kappa-bound"};
    return m;
}

// Self-adjoint oracle: ||(H-z)^-1|| = 1/dist(z, Sp) exactly.
inline LTPModel harmonic_ltp_model()
{
    LTPModel m;
    m.kind = LTPModel::Kind::Strip;
    m.kappa_bound = Expr::parse("1");
    m.lambda_asymptotic = Expr::parse("2*n-1");
    m.c_of_m = Expr::parse("0");
    m.gap_floor = Expr::parse("2");
    return m;
}

// Simple eigenvalues: first-order perturbation gives dist ~ kappa_n * eps;
// the factor 2 is a safety margin on the estimated condition number.
inline LTPModel lattice_ltp_model()
{
    LTPModel m;
    m.kind = LTPModel::Kind::Generalized;
    m.kappa_bound = Expr::parse("kappa");
    m.constant_ck = Expr::parse("2*kappa");
    m.multiplicity_p = 1;
    m.hypotheses = {"ltp-constant-estimate"};
    return m;
}

inline std::optional<LTPModel> builtin_ltp_model(const std::string& op_id)
{
    if (op_id == "cubic") {
        return cubic_ltp_model();
    }
    if (op_id == "harmonic") {
        return harmonic_ltp_model();
    }
    if (op_id == "lattice") {
        return lattice_ltp_model();
    }
    return std::nullopt;
}

namespace detail {

// Working precision for bound evaluation: at least 40 digits, or the
// caller's BigFloat precision plus a margin.
inline int bound_digits() { return std::max(40, BigFloat::thread_digits() + 10); }

inline Interval<BigFloat> enclose_real(const Expr& e, const Bindings& vars)
{
    const CIBox<BigFloat> b = e.enclose<BigFloat>(vars);
    if (!(b.im().lo().is_zero() && b.im().hi().is_zero())) {
        throw LTPError("LTP expression '" + e.source() + "' is not real");
    }
    return b.re();
}

template <class R>
R upward(const BigFloat& x)
{
    if constexpr (std::is_same_v<R, double>) {
        return x.to_double(MPFR_RNDU);
    } else {
        BigFloat r;
        mpfr_set(r.raw(), x.raw(), MPFR_RNDU);
        return r;
    }
}

template <class R>
R downward(const BigFloat& x)
{
    if constexpr (std::is_same_v<R, double>) {
        return x.to_double(MPFR_RNDD);
    } else {
        BigFloat r;
        mpfr_set(r.raw(), x.raw(), MPFR_RNDD);
        return r;
    }
}

template <class R>
Interval<BigFloat> lift(const R& x)
{
    if constexpr (std::is_same_v<R, double>) {
        return Interval<BigFloat>(BigFloat(x));
    } else {
        BigFloat lo;
        BigFloat hi;
        mpfr_set(lo.raw(), x.raw(), MPFR_RNDD);
        mpfr_set(hi.raw(), x.raw(), MPFR_RNDU);
        return {lo, hi};
    }
}

} // namespace detail

/// Enclosure of a model rule at an integer argument.
inline Interval<BigFloat> model_value(const Expr& e, const char* var, long k, double kappa = 0)
{
    return detail::enclose_real(e, {{var, static_cast<double>(k)}, {"kappa", kappa}});
}

template <class R = double>
R lambda_asymptotic(long n, const LTPModel& model = cubic_ltp_model())
{
    if (n < 1) {
        throw LTPError("lambda_asymptotic needs n >= 1");
    }
    Interval<BigFloat> v = [&] {
        PrecisionGuard g(detail::bound_digits());
        return model_value(model.lambda_asymptotic, "n", n);
    }();
    if constexpr (std::is_same_v<R, double>) {
        return v.mid().to_double();
    } else {
        return R(v.mid());
    }
}

template <class R = double>
R kappa_bound(long n, const LTPModel& model = cubic_ltp_model())
{
    if (n < 1) {
        throw LTPError("kappa_bound needs n >= 1");
    }
    BigFloat hi = [&] {
        PrecisionGuard g(detail::bound_digits());
        return model_value(model.kappa_bound, "n", n).hi();
    }();
    return detail::upward<R>(hi);
}

template <class R = double>
R c_of_m(long m, const LTPModel& model = cubic_ltp_model())
{
    if (m < 1) {
        throw LTPError("c_of_m needs m >= 1");
    }
    BigFloat hi = [&] {
        PrecisionGuard g(detail::bound_digits());
        return model_value(model.c_of_m, "m", m).hi();
    }();
    return detail::upward<R>(hi);
}

template <class R = double>
R gap_floor(const LTPModel& model = cubic_ltp_model())
{
    BigFloat lo = [&] {
        PrecisionGuard g(detail::bound_digits());
        return detail::enclose_real(model.gap_floor, {}).lo();
    }();
    return detail::downward<R>(lo);
}

/// 2 kappa_bound(m) gamma / (1 - c_m gamma), rounded upward; +infinity
/// when c_m gamma >= 1.
template <class R>
R dist_bound(const R& gamma_upper, long m, const LTPModel& model = cubic_ltp_model())
{
    if (gamma_upper < R(0)) {
        throw LTPError("dist_bound needs a nonnegative residual bound");
    }
    if (gamma_upper == R(0)) {
        return R(0);
    }
    if (m < 1) {
        throw LTPError("dist_bound needs m >= 1");
    }
    std::optional<BigFloat> hi = [&]() -> std::optional<BigFloat> {
        PrecisionGuard g(detail::bound_digits());
        const Interval<BigFloat> gam = detail::lift(gamma_upper);
        const Interval<BigFloat> k = model_value(model.kappa_bound, "n", m);
        const Interval<BigFloat> c = model_value(model.c_of_m, "m", m);
        const Interval<BigFloat> den = Interval<BigFloat>(1) - c * gam;
        if (!(den.lo() > BigFloat(0))) {
            return std::nullopt;
        }
        return (Interval<BigFloat>(2) * k * gam / den).hi();
    }();
    if (!hi) {
        return real_traits<R>::infinity();
    }
    return detail::upward<R>(*hi);
}

/// C_K eps^(1/p), rounded upward.
template <class R>
R generalized_dist_bound(const R& eps, const R& ck, int p)
{
    if (eps < R(0) || !(ck > R(0)) || p < 1) {
        throw LTPError("generalized_dist_bound needs eps >= 0, C_K > 0, p >= 1");
    }
    if (eps == R(0)) {
        return R(0);
    }
    BigFloat hi = [&] {
        PrecisionGuard g(detail::bound_digits());
        const Interval<BigFloat> e = detail::lift(eps);
        Interval<BigFloat> root = e;
        if (p > 1) {
            // the p-th root is monotone: enclose each endpoint separately
            auto rt = [p](const BigFloat& x, bool up) {
                BigFloat r;
                mpfr_rootn_ui(r.raw(), x.raw(), static_cast<unsigned long>(p), up ? MPFR_RNDU : MPFR_RNDD);
                return r;
            };
            root = Interval<BigFloat>(rt(e.lo(), false), rt(e.hi(), true));
        }
        return (detail::lift(ck) * root).hi();
    }();
    return detail::upward<R>(hi);
}

/// Constant C_K of a generalized model for index n and estimated kappa.
template <class R>
R generalized_constant(const LTPModel& model, long n, double kappa_estimate)
{
    BigFloat hi = [&] {
        PrecisionGuard g(detail::bound_digits());
        return model_value(model.constant_ck, "n", n, kappa_estimate).hi();
    }();
    return detail::upward<R>(hi);
}

/// Certified location of a real eigenvalue: |lambda - center| <= radius.
struct RealEnclosure {
    double lo; // lower end, rounded down
    double hi; // upper end, rounded up
};

/// Right-hand side of the strip resolvent bound at z, with each |lambda - z|
/// replaced by a certified lower bound.  `left` is the enclosure of
/// lambda_{m-1} (absent for m = 1), `right` that of lambda_m.
template <class R>
R resolvent_bound(const Complex<R>& z, long m, const LTPModel& model, const std::optional<RealEnclosure>& left,
                  const RealEnclosure& right)
{
    if (m < 1) {
        throw LTPError("resolvent_bound needs m >= 1");
    }
    if (m > 1 && !left) {
        throw LTPError("gap membership: lambda_" + std::to_string(m - 1) + " enclosure is required");
    }
    BigFloat hi = [&] {
        PrecisionGuard g(detail::bound_digits());
        const Interval<BigFloat> re = detail::lift(z.re);
        const Interval<BigFloat> im = detail::lift(z.im);
        // lower bound on |lambda - z| for lambda in [lo, hi]
        auto dist_lo = [&](const RealEnclosure& e) {
            const Interval<BigFloat> lam(BigFloat(e.lo), BigFloat(e.hi));
            const BigFloat gap_re = (re - lam).mig();
            return sqrt(Interval<BigFloat>(gap_re) * Interval<BigFloat>(gap_re) + sqr(im)).lo();
        };
        if (left && !(re.lo() > BigFloat(left->hi))) {
            throw LTPError("gap membership: Re z is not certifiably right of lambda_" + std::to_string(m - 1));
        }
        if (!(re.hi() < BigFloat(right.lo))) {
            throw LTPError("gap membership: Re z is not certifiably left of lambda_" + std::to_string(m));
        }
        if (m == 1 && !(re.lo() > BigFloat(0))) {
            throw LTPError("gap membership: the first strip needs Re z > 0");
        }
        Interval<BigFloat> sum = model_value(model.c_of_m, "m", m);
        sum += model_value(model.kappa_bound, "n", m) / Interval<BigFloat>(dist_lo(right));
        if (m > 1) {
            sum += model_value(model.kappa_bound, "n", m - 1) / Interval<BigFloat>(dist_lo(*left));
        }
        return sum.hi();
    }();
    return detail::upward<R>(hi);
}

/// Decimal digits needed so that roundoff times kappa_bound(n) stays below
/// the target: 16 + ceil(n pi / (sqrt(3) ln 10)) + 10.
inline int guard_digits(long n)
{
    return 16 + static_cast<int>(std::ceil(static_cast<double>(n) * 3.14159265358979323846 / (std::sqrt(3.0) * std::log(10.0)))) + 10;
}

} // namespace specgate
