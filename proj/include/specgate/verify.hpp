#pragma once

// Certification: rigorous residual norms and eigenvalue enclosures.
//
// The float stage hands over a candidate (z, v).  verified_residual bounds
// ||(H - z) v|| / ||v|| from above in interval arithmetic with enclosed
// operator entries; that bound is an upper bound on ||(H - z)^-1||^-1 and is
// turned into an enclosure radius by the operator's LTP model.

#include "specgate/interval.hpp"
#include "specgate/ltp_bounds.hpp"
#include "specgate/operator_model.hpp"
#include "specgate/truncation.hpp"

#include "json.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace specgate {

class CertificationError : public Error {
public:
    CertificationError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage))
    {
    }
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Upper bound (as the hi endpoint) on ||(H - z) v|| / ||v||, where v holds
/// the coefficients of columns col_first, col_first + 1, ...  Long-range
/// operators use rows within `pad` of the block and add the certified tail.
template <class R>
Interval<R> verified_residual(const OperatorSpec& op, const CIBox<R>& z, const CVector<R>& v, long col_first,
                              long pad = 0)
{
    if (v.empty()) {
        throw CertificationError("residual", "empty candidate vector");
    }
    const long n = static_cast<long>(v.size());
    const long col_last = col_first + n - 1;
    long up = 0;
    long down = 0;
    R tail(0);
    if (op.banded()) {
        up = *op.upper_bandwidth;
        down = *op.lower_bandwidth;
    } else {
        if (!op.has_tail_bound()) {
            throw CertificationError("residual", "operator " + op.id + " has no tail bound");
        }
        up = n - 1 + pad;
        down = n - 1 + pad;
        tail = R(op.tail_bound(n, pad));
    }
    long row_first = col_first - (op.banded() ? up : pad);
    if (op.index_domain == IndexDomain::NaturalNumbers) {
        row_first = std::max(0L, row_first);
    }
    const long row_last = col_last + (op.banded() ? down : pad);

    std::vector<CIBox<R>> acc(static_cast<std::size_t>(row_last - row_first + 1), CIBox<R>(Interval<R>(0)));
    try {
        for (long c = 0; c < n; ++c) {
            const Complex<R>& vc = v[static_cast<std::size_t>(c)];
            if (vc.re == R(0) && vc.im == R(0)) {
                continue;
            }
            const CIBox<R> x(vc);
            const long j = col_first + c;
            const long lo = std::max(row_first, j - up);
            const long hi = std::min(row_last, j + down);
            for (long i = lo; i <= hi; ++i) {
                CIBox<R> e = op.entry_box<R>(i, j);
                if (i == j) {
                    e = e - z;
                }
                acc[static_cast<std::size_t>(i - row_first)] += e * x;
            }
        }
    } catch (const ExprError& e) {
        throw CertificationError("residual", std::string("entries not enclosable: ") + e.what());
    }
    std::vector<CIBox<R>> vb;
    vb.reserve(v.size());
    for (const auto& x : v) {
        vb.emplace_back(x);
    }
    const Interval<R> den = norm2(vb);
    if (!(den.lo() > R(0))) {
        throw CertificationError("residual", "zero candidate vector");
    }
    Interval<R> r = norm2(acc) / den;
    if (tail > R(0)) {
        r = r + Interval<R>(R(0), tail);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Enclosures

struct Enclosure {
    std::string op_id;
    long index_n = 0;
    std::string center_re;
    std::string center_im = "0";
    std::string radius;
    std::string residual_upper;
    long gap_index_m = 0;
    std::string precision;
    int precision_digits = 16;
    std::vector<std::string> conditional_on;
    long N = 0;
    std::string method; // "strip" or "generalized"

    bool is_real() const { return center_im == "0"; }

    /// Upper bound of the radius as a double.
    double radius_upper() const { return rounding::decimal<double>(radius, true); }
    double center_re_double() const { return std::strtod(center_re.c_str(), nullptr); }
    double center_im_double() const { return std::strtod(center_im.c_str(), nullptr); }

    /// Rectangle guaranteed to contain the enclosed disk.
    template <class R>
    CIBox<R> box() const
    {
        const Interval<R> r = Interval<R>::decimal(radius);
        const Interval<R> rr(-r.hi(), r.hi());
        return {Interval<R>::decimal(center_re) + rr, Interval<R>::decimal(center_im) + rr};
    }

    /// Lower and upper ends of the real projection, outward rounded.
    RealEnclosure real_range() const
    {
        const CIBox<double> b = box<double>();
        return {b.re().lo(), b.re().hi()};
    }

    /// |value - center| <= radius + slack, decided in 160-digit arithmetic
    /// from the decimal strings (no binary rounding of the inputs).
    bool contains(const std::string& re, const std::string& im = "0", const std::string& slack = "0") const
    {
        PrecisionGuard g(160);
        const BigFloat dre = BigFloat(re) - BigFloat(center_re);
        const BigFloat dim = BigFloat(im) - BigFloat(center_im);
        return hypot(dre, dim) <= BigFloat(radius) + BigFloat(slack);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["op_id"] = op_id;
        j["index_n"] = index_n;
        j["center"] = {{"re", center_re}, {"im", center_im}};
        j["radius"] = radius;
        j["residual_upper"] = residual_upper;
        j["gap_index_m"] = gap_index_m;
        j["precision"] = precision;
        j["precision_digits"] = precision_digits;
        j["conditional_on"] = conditional_on;
        j["N"] = N;
        j["method"] = method;
        return j;
    }

    static Enclosure from_json(const nlohmann::json& j)
    {
        Enclosure e;
        e.op_id = j.at("op_id").get<std::string>();
        e.index_n = j.at("index_n").get<long>();
        e.center_re = j.at("center").at("re").get<std::string>();
        e.center_im = j.at("center").at("im").get<std::string>();
        e.radius = j.at("radius").get<std::string>();
        e.residual_upper = j.at("residual_upper").get<std::string>();
        e.gap_index_m = j.at("gap_index_m").get<long>();
        e.precision = j.at("precision").get<std::string>();
        e.precision_digits = j.at("precision_digits").get<int>();
        e.conditional_on = j.at("conditional_on").get<std::vector<std::string>>();
        e.N = j.at("N").get<long>();
        e.method = j.at("method").get<std::string>();
        return e;
    }
};

namespace detail {

inline std::string trim_decimal(std::string s)
{
    if (s.find('.') != std::string::npos && s.find('e') == std::string::npos) {
        while (!s.empty() && s.back() == '0') {
            s.pop_back();
        }
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
        }
    }
    if (s == "-0") {
        s = "0";
    }
    return s;
}

inline BigFloat to_big(const double& x) { return BigFloat(x); }
inline BigFloat to_big(const BigFloat& x)
{
    BigFloat r;
    mpfr_set(r.raw(), x.raw(), MPFR_RNDN);
    return r;
}

} // namespace detail

struct FormattedCenter {
    std::string re;
    std::string im;
    std::string radius;
};

/// Decimal rendering of a disk: the center gets ceil(-log10 radius) + 2
/// digits after the point and the printed radius is inflated (upward) by
/// the rounding of the center, so the printed disk contains the exact one.
template <class R>
FormattedCenter format_disk(const Complex<R>& center, const R& radius, int fallback_decimals)
{
    const int work = std::max(fallback_decimals, 60) + 40;
    PrecisionGuard g(work);
    const BigFloat cre = detail::to_big(center.re);
    const BigFloat cim = detail::to_big(center.im);
    BigFloat rad;
    if constexpr (std::is_same_v<R, double>) {
        rad = BigFloat(radius);
    } else {
        mpfr_set(rad.raw(), radius.raw(), MPFR_RNDU);
    }
    int decimals = fallback_decimals;
    if (rad > BigFloat(0)) {
        decimals = static_cast<int>(std::ceil(-mpfr_get_d(log10(rad).raw(), MPFR_RNDD))) + 2;
        decimals = std::max(1, std::min(decimals, work - 10));
    }
    FormattedCenter out;
    out.re = detail::trim_decimal(cre.to_fixed(decimals));
    out.im = cim.is_zero() ? "0" : detail::trim_decimal(cim.to_fixed(decimals));
    // exact rounding error of the printed center, bounded above
    const Interval<BigFloat> dre = Interval<BigFloat>::decimal(out.re) - Interval<BigFloat>(cre);
    const Interval<BigFloat> dim = Interval<BigFloat>::decimal(out.im) - Interval<BigFloat>(cim);
    const BigFloat shift = sqrt(sqr(Interval<BigFloat>(dre.mag())) + sqr(Interval<BigFloat>(dim.mag()))).hi();
    const BigFloat total = (Interval<BigFloat>(rad) + Interval<BigFloat>(shift)).hi();
    out.radius = total.is_zero() ? "0" : total.to_string(3, MPFR_RNDU);
    return out;
}

template <class R>
std::string format_upper(const R& x)
{
    if constexpr (std::is_same_v<R, double>) {
        return x == 0 ? "0" : BigFloat(x).to_string(3, MPFR_RNDU);
    } else {
        return x.is_zero() ? "0" : x.to_string(3, MPFR_RNDU);
    }
}

template <class R>
struct CertifyRequest {
    Complex<R> z;                // candidate eigenvalue
    CVector<R> v;                // candidate eigenvector coefficients
    long col_first = 0;          // operator index of v[0]
    long pad = 0;                // row padding for long-range operators
    long index_n = 1;            // which eigenvalue is claimed
    long gap_index_m = 1;        // strip index for strip models
    double kappa_estimate = 1;   // used by generalized models
    R residual_floor = R(0);     // residual used if larger than the computed one
    bool snap_real = false;      // move the center to the real axis when the disk allows
    std::vector<Enclosure> neighbors; // previously certified enclosures
    std::vector<std::string> extra_hypotheses;
    std::string precision = "double";
    int precision_digits = 16;
};

namespace detail {

/// Strip plausibility window (w(m-2), w(m)) with w(k) the midpoint of the
/// asymptotic lambda_k and lambda_{k+1} (w(k) = 0 for k < 1).  A necessary
/// condition only; rigor comes from the bootstrap order and the LTP bound.
inline std::pair<double, double> strip_window(const LTPModel& model, long m)
{
    auto w = [&](long k) {
        if (k < 1) {
            return 0.0;
        }
        return 0.5 * (lambda_asymptotic<double>(k, model) + lambda_asymptotic<double>(k + 1, model));
    };
    return {w(m - 2), w(m)};
}

} // namespace detail

template <class R>
Enclosure certify_eigenvalue(const OperatorSpec& op, const LTPModel& model, const CertifyRequest<R>& req)
{
    const double zre = to_double(req.z.re);
    const double zim = to_double(req.z.im);
    Enclosure e;
    e.op_id = op.id;
    e.index_n = req.index_n;
    e.N = static_cast<long>(req.v.size());
    e.precision = req.precision;
    e.precision_digits = req.precision_digits;
    e.conditional_on = model.hypotheses;
    for (const auto& h : req.extra_hypotheses) {
        if (std::find(e.conditional_on.begin(), e.conditional_on.end(), h) == e.conditional_on.end()) {
            e.conditional_on.push_back(h);
        }
    }

    if (model.kind == LTPModel::Kind::Strip) {
        const long m = req.gap_index_m;
        if (m < 1) {
            throw CertificationError("gap-membership", "gap index must be >= 1");
        }
        if (m == 1 && !(zre > 0)) {
            throw CertificationError("gap-membership", "the first strip needs Re z > 0");
        }
        const auto [wlo, whi] = detail::strip_window(model, m);
        if (!(zre > wlo && zre < whi)) {
            throw CertificationError("gap-membership", "Re z = " + std::to_string(zre) + " is outside strip " +
                                                           std::to_string(m) + " (" + std::to_string(wlo) + ", " +
                                                           std::to_string(whi) + ")");
        }
        for (const auto& nb : req.neighbors) {
            if (nb.index_n == m - 1 && !(zre > nb.real_range().hi)) {
                throw CertificationError("gap-membership",
                                         "Re z is not right of the certified lambda_" + std::to_string(m - 1));
            }
        }
    }

    const CIBox<R> zb(req.z);
    const Interval<R> res = verified_residual(op, zb, req.v, req.col_first, req.pad);
    const R r_up = max(res.hi(), req.residual_floor);
    e.residual_upper = format_upper(r_up);

    R radius;
    if (model.kind == LTPModel::Kind::Strip) {
        e.method = "strip";
        e.gap_index_m = req.gap_index_m;
        radius = dist_bound(r_up, req.gap_index_m, model);
    } else {
        e.method = "generalized";
        e.gap_index_m = 0;
        const R ck = generalized_constant<R>(model, req.index_n, req.kappa_estimate);
        radius = generalized_dist_bound(r_up, ck, model.multiplicity_p);
    }
    if (!isfinite(radius)) {
        throw CertificationError("dist-bound", "no finite bound (residual " + e.residual_upper + ", gap index " +
                                                   std::to_string(req.gap_index_m) + ")");
    }

    // Attribution: the disk must sit well inside the gaps to other certified
    // eigenvalues.
    for (const auto& nb : req.neighbors) {
        const double d = std::hypot(zre - nb.center_re_double(), zim - nb.center_im_double());
        if (!(2 * (to_double(radius) + nb.radius_upper()) < d * (1 - 1e-12))) {
            throw CertificationError("attribution", "enclosure overlaps half the gap to certified lambda_" +
                                                        std::to_string(nb.index_n));
        }
    }

    Complex<R> center = req.z;
    if (req.snap_real && abs(center.im) <= radius) {
        // the disk around Re z of radius r + |Im z| contains the original one
        radius = (Interval<R>(radius) + Interval<R>(abs(center.im))).hi();
        center.im = R(0);
    }

    const int fallback = req.precision_digits + 2;
    const FormattedCenter f = format_disk(center, radius, fallback);
    e.center_re = f.re;
    e.center_im = f.im;
    e.radius = f.radius;
    return e;
}

struct NeighborData {
    std::optional<Enclosure> left;  // lambda_{n-1}; absent for n = 1
    std::optional<Enclosure> right; // lambda_{n+1}
};

/// Upper bound on sin of the angle between the candidate vector and the
/// eigenspace of the enclosed eigenvalue; see docs/eigenvector-bound.md.
///
///   sin angle <= (1 + kappa_n) * M * (r + rho)
///
/// with r the residual bound, rho the enclosure radius and M the strip
/// resolvent bound at lambda_n with the n-th pole removed, maximized over
/// the two strips meeting at lambda_n.
inline double eigenvector_error_bound(const Enclosure& enc, double residual_upper, const NeighborData& nb,
                                      const LTPModel& model)
{
    if (residual_upper < 0) {
        throw CertificationError("eigenvector", "negative residual bound");
    }
    if (residual_upper == 0) {
        return 0.0;
    }
    if (model.kind != LTPModel::Kind::Strip) {
        throw CertificationError("eigenvector", "bound needs a strip LTP model");
    }
    if (!nb.right || (enc.index_n > 1 && !nb.left)) {
        throw CertificationError("eigenvector", "neighbor enclosures are required");
    }
    const long n = enc.index_n;
    PrecisionGuard g(40);
    using I = Interval<BigFloat>;
    const RealEnclosure self = enc.real_range();
    auto gap_lo = [&](const RealEnclosure& a, const RealEnclosure& b) {
        // certified lower bound on |lambda_a - lambda_b| for a left of b
        const I d = I(BigFloat(b.lo)) - I(BigFloat(a.hi));
        if (!(d.lo() > BigFloat(0))) {
            throw CertificationError("eigenvector", "complement bound nonpositive: neighbor enclosures overlap");
        }
        return I(d.lo());
    };
    I left_strip = model_value(model.c_of_m, "m", n);
    if (n > 1) {
        left_strip += model_value(model.kappa_bound, "n", n - 1) / gap_lo(nb.left->real_range(), self);
    }
    I right_strip = model_value(model.c_of_m, "m", n + 1) +
                    model_value(model.kappa_bound, "n", n + 1) / gap_lo(self, nb.right->real_range());
    const BigFloat m = max(left_strip.hi(), right_strip.hi());
    const I kap = model_value(model.kappa_bound, "n", n);
    const I dist = I(BigFloat(residual_upper)) + I(Interval<BigFloat>::decimal(enc.radius).hi());
    const I bound = (I(1) + kap) * I(m) * dist;
    return bound.hi().to_double(MPFR_RNDU);
}

} // namespace specgate
