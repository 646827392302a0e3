#pragma once

// Infinite matrices given by entry rules.
//
// An OperatorSpec carries an immutable EntryRule that can produce every
// entry either as a floating-point complex number or as a rigorous complex
// box, in double or BigFloat.  Built-ins: the cubic oscillator p^2 + i x^3
// in the normalized Hermite basis, a long-range lattice operator on Z, and
// the harmonic oscillator (diagonal test oracle).  Further operators are
// loaded from JSON plugin files (see docs/plugins.md).

#include "specgate/expr.hpp"
#include "specgate/interval.hpp"
#include "specgate/numeric.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace specgate {

class StructuralError : public Error {
public:
    using Error::Error;
};

enum class IndexDomain { NaturalNumbers, Integers };

enum class Symmetry { ComplexSymmetric, PTSymmetric, RealSpectrumExpected };

class EntryRule {
public:
    virtual ~EntryRule() = default;
    virtual Complex<double> value_d(long i, long j) const = 0;
    virtual Complex<BigFloat> value_b(long i, long j) const = 0;
    virtual CIBox<double> box_d(long i, long j) const = 0;
    virtual CIBox<BigFloat> box_b(long i, long j) const = 0;
};

// Concrete rules implement value<R>() and box<R>() once as templates.
template <class Derived>
class EntryRuleBase : public EntryRule {
public:
    Complex<double> value_d(long i, long j) const final { return self().template value<double>(i, j); }
    Complex<BigFloat> value_b(long i, long j) const final { return self().template value<BigFloat>(i, j); }
    CIBox<double> box_d(long i, long j) const final { return self().template box<double>(i, j); }
    CIBox<BigFloat> box_b(long i, long j) const final { return self().template box<BigFloat>(i, j); }

private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Upper bound on the squared 2-norm of any column's entries at distance
/// greater than k from the diagonal.
using ColumnTailRule = std::function<double(long k)>;

struct OperatorSpec {
    std::string id;
    IndexDomain index_domain = IndexDomain::NaturalNumbers;
    std::shared_ptr<const EntryRule> rule;
    std::optional<long> lower_bandwidth; // nullopt = unbounded
    std::optional<long> upper_bandwidth;
    ColumnTailRule column_tail_sq;       // empty when the operator is banded
    std::set<Symmetry> symmetry_flags;

    bool banded() const { return lower_bandwidth.has_value() && upper_bandwidth.has_value(); }
    bool has(Symmetry s) const { return symmetry_flags.count(s) != 0; }
    bool has_tail_bound() const { return static_cast<bool>(column_tail_sq); }

    template <class R>
    Complex<R> entry(long i, long j) const
    {
        check_index(i);
        check_index(j);
        if (outside_band(i, j)) {
            return {};
        }
        if constexpr (std::is_same_v<R, double>) {
            return rule->value_d(i, j);
        } else {
            return rule->value_b(i, j);
        }
    }

    template <class R>
    CIBox<R> entry_box(long i, long j) const
    {
        check_index(i);
        check_index(j);
        if (outside_band(i, j)) {
            return CIBox<R>(Interval<R>(0));
        }
        if constexpr (std::is_same_v<R, double>) {
            return rule->box_d(i, j);
        } else {
            return rule->box_b(i, j);
        }
    }

    // Entry (i, j) of the adjoint: conj(entry(j, i)).
    template <class R>
    Complex<R> adjoint_entry(long i, long j) const
    {
        return conj(entry<R>(j, i));
    }

    /// Bound on ||(I - P_{n+m}) H P_n|| for a block of n columns padded by
    /// m rows on each available side.  Each column's tail beyond distance m
    /// has squared norm <= column_tail_sq(m); the Frobenius norm of the
    /// neglected block therefore is at most sqrt(n * column_tail_sq(m)).
    double tail_bound(long n, long m) const
    {
        if (banded()) {
            return m >= std::max(*lower_bandwidth, *upper_bandwidth) ? 0.0 : HUGE_VAL;
        }
        if (!column_tail_sq) {
            return HUGE_VAL;
        }
        const double t = column_tail_sq(m);
        return rounding::sqrt(rounding::mul(static_cast<double>(n), t, true), true);
    }

    bool in_domain(long i) const { return index_domain == IndexDomain::Integers || i >= 0; }

    /// The adjoint as an operator in its own right.
    OperatorSpec adjoint() const;

private:
    bool outside_band(long i, long j) const
    {
        return (upper_bandwidth && j - i > *upper_bandwidth) || (lower_bandwidth && i - j > *lower_bandwidth);
    }

    void check_index(long i) const
    {
        if (!in_domain(i)) {
            throw StructuralError("index " + std::to_string(i) + " outside the domain of operator " + id);
        }
    }
};

namespace detail {

class AdjointRule final : public EntryRuleBase<AdjointRule> {
public:
    explicit AdjointRule(std::shared_ptr<const EntryRule> base) : base_(std::move(base)) {}

    template <class R>
    Complex<R> value(long i, long j) const
    {
        if constexpr (std::is_same_v<R, double>) {
            return conj(base_->value_d(j, i));
        } else {
            return conj(base_->value_b(j, i));
        }
    }

    template <class R>
    CIBox<R> box(long i, long j) const
    {
        if constexpr (std::is_same_v<R, double>) {
            return conj(base_->box_d(j, i));
        } else {
            return conj(base_->box_b(j, i));
        }
    }

private:
    std::shared_ptr<const EntryRule> base_;
};

// sqrt(p / 2^e) for an exact integer p < 2^53: one correctly rounded
// division by a power of two (exact) and one sqrt.
template <class R>
R sqrt_dyadic(double p, int e)
{
    return sqrt(ldexp(R(p), -e));
}

template <class R>
Interval<R> sqrt_dyadic_box(double p, int e)
{
    const R x = ldexp(R(p), -e);
    return {rounding::sqrt(x, false), rounding::sqrt(x, true)};
}

class CubicRule final : public EntryRuleBase<CubicRule> {
public:
    // Column m of p^2 + i x^3 in the normalized Hermite basis:
    //   p^2 u_m = -sqrt(m(m-1))/2 u_{m-2} + (2m+1)/2 u_m - sqrt((m+1)(m+2))/2 u_{m+2}
    //   x^3 u_m = sqrt(m(m-1)(m-2)/8) u_{m-3} + sqrt(9m^3/8) u_{m-1}
    //           + sqrt(9(m+1)^3/8) u_{m+1} + sqrt((m+1)(m+2)(m+3)/8) u_{m+3}
    // Every coefficient is +-sqrt of an exact dyadic rational (or i times one).
    struct Coef {
        double p = 0; // radicand numerator
        int e = 0;    // radicand denominator exponent
        bool imag = false;
        bool negative = false;
        bool plain = false; // value p / 2^e without sqrt
    };

    static Coef coef(long i, long j)
    {
        const double m = static_cast<double>(j);
        switch (i - j) {
        case 0:
            return {2 * m + 1, 1, false, false, true};
        case -2:
            return {m * (m - 1), 2, false, true, false};
        case 2:
            return {(m + 1) * (m + 2), 2, false, true, false};
        case -1:
            return {9 * m * m * m, 3, true, false, false};
        case 1:
            return {9 * (m + 1) * (m + 1) * (m + 1), 3, true, false, false};
        case -3:
            return {m * (m - 1) * (m - 2), 3, true, false, false};
        case 3:
            return {(m + 1) * (m + 2) * (m + 3), 3, true, false, false};
        default:
            return {};
        }
    }

    template <class R>
    Complex<R> value(long i, long j) const
    {
        const Coef c = coef(i, j);
        if (c.p == 0) {
            return {};
        }
        R v = c.plain ? ldexp(R(c.p), -c.e) : sqrt_dyadic<R>(c.p, c.e);
        if (c.negative) {
            v = -v;
        }
        return c.imag ? Complex<R>(R(0), v) : Complex<R>(v);
    }

    template <class R>
    CIBox<R> box(long i, long j) const
    {
        const Coef c = coef(i, j);
        if (c.p == 0) {
            return CIBox<R>(Interval<R>(0));
        }
        Interval<R> v = c.plain ? Interval<R>(ldexp(R(c.p), -c.e)) : sqrt_dyadic_box<R>(c.p, c.e);
        if (c.negative) {
            v = -v;
        }
        return c.imag ? CIBox<R>(Interval<R>(0), v) : CIBox<R>(v);
    }
};

class LatticeRule final : public EntryRuleBase<LatticeRule> {
public:
    // diag n^2/10 + 2i sin(n); off-diagonal 2^(1-|i-j|)
    template <class R>
    Complex<R> value(long i, long j) const
    {
        if (i == j) {
            const R n(static_cast<double>(i));
            return {n * n / R(10), R(2) * sin(n)};
        }
        return Complex<R>(ldexp(R(1), static_cast<int>(1 - std::labs(i - j))));
    }

    template <class R>
    CIBox<R> box(long i, long j) const
    {
        if (i == j) {
            const Interval<R> n(R(static_cast<double>(i)));
            return {sqr(n) / Interval<R>(10), Interval<R>(2) * sin(n)};
        }
        return CIBox<R>(Interval<R>(ldexp(R(1), static_cast<int>(1 - std::labs(i - j)))));
    }
};

class HarmonicRule final : public EntryRuleBase<HarmonicRule> {
public:
    template <class R>
    Complex<R> value(long i, long j) const
    {
        return i == j ? Complex<R>(R(2 * static_cast<double>(i) + 1)) : Complex<R>();
    }

    template <class R>
    CIBox<R> box(long i, long j) const
    {
        return CIBox<R>(Interval<R>(i == j ? R(2 * static_cast<double>(i) + 1) : R(0)));
    }
};

// Plugin rule: entry(n, n + offset) = expr(n, m) with n the row and m the
// column index; entries farther than the listed bands use the optional
// far-field expression in d = |row - col| (and n, m).
class ExprRule final : public EntryRuleBase<ExprRule> {
public:
    ExprRule(std::map<long, Expr> bands, std::optional<Expr> far, long far_from)
        : bands_(std::move(bands)), far_(std::move(far)), far_from_(far_from)
    {
    }

    template <class R>
    Complex<R> value(long i, long j) const
    {
        const Expr* e = pick(i, j);
        return e ? e->eval<R>(bind(i, j)) : Complex<R>();
    }

    template <class R>
    CIBox<R> box(long i, long j) const
    {
        const Expr* e = pick(i, j);
        return e ? e->enclose<R>(bind(i, j)) : CIBox<R>(Interval<R>(0));
    }

private:
    const Expr* pick(long i, long j) const
    {
        const auto it = bands_.find(j - i);
        if (it != bands_.end()) {
            return &it->second;
        }
        if (far_ && std::labs(i - j) >= far_from_) {
            return &*far_;
        }
        return nullptr;
    }

    static Bindings bind(long i, long j)
    {
        return {{"n", static_cast<double>(i)}, {"m", static_cast<double>(j)}, {"d", static_cast<double>(std::labs(i - j))}};
    }

    std::map<long, Expr> bands_;
    std::optional<Expr> far_;
    long far_from_;
};

} // namespace detail

inline OperatorSpec OperatorSpec::adjoint() const
{
    OperatorSpec a = *this;
    a.id = id + "*";
    a.rule = std::make_shared<detail::AdjointRule>(rule);
    a.lower_bandwidth = upper_bandwidth;
    a.upper_bandwidth = lower_bandwidth;
    a.symmetry_flags.erase(Symmetry::ComplexSymmetric);
    return a;
}

inline OperatorSpec hermite_cubic_operator()
{
    OperatorSpec op;
    op.id = "cubic";
    op.index_domain = IndexDomain::NaturalNumbers;
    op.rule = std::make_shared<detail::CubicRule>();
    op.lower_bandwidth = 3;
    op.upper_bandwidth = 3;
    op.symmetry_flags = {Symmetry::ComplexSymmetric, Symmetry::PTSymmetric, Symmetry::RealSpectrumExpected};
    return op;
}

inline OperatorSpec lattice_longrange_operator()
{
    OperatorSpec op;
    op.id = "lattice";
    op.index_domain = IndexDomain::Integers;
    op.rule = std::make_shared<detail::LatticeRule>();
    // Squared column tail beyond distance k on both sides is
    // 2 * sum_{j>k} 4^(1-j) = (8/3) 4^(-k) <= (8/3) 2^(-k); the looser
    // geometric bound is used so padding grows by one row per halving.
    op.column_tail_sq = [](long k) {
        return rounding::mul(8.0 / 3.0 * (1 + 0x1p-50), std::ldexp(1.0, static_cast<int>(-std::min(k, 1070L))), true);
    };
    op.symmetry_flags = {Symmetry::ComplexSymmetric, Symmetry::PTSymmetric};
    return op;
}

inline OperatorSpec harmonic_oscillator_operator()
{
    OperatorSpec op;
    op.id = "harmonic";
    op.index_domain = IndexDomain::NaturalNumbers;
    op.rule = std::make_shared<detail::HarmonicRule>();
    op.lower_bandwidth = 0;
    op.upper_bandwidth = 0;
    op.symmetry_flags = {Symmetry::ComplexSymmetric, Symmetry::RealSpectrumExpected};
    return op;
}

template <class R>
using SparseColumn = std::vector<std::pair<long, Complex<R>>>;

/// Nonzero entries of column col, either within the declared bands or,
/// for long-range operators, within |row - col| <= cutoff.
template <class R>
SparseColumn<R> apply_column(const OperatorSpec& op, long col, std::optional<long> cutoff = std::nullopt)
{
    if (!op.in_domain(col)) {
        throw StructuralError("column " + std::to_string(col) + " outside the domain of operator " + op.id);
    }
    long above = 0;
    long below = 0;
    if (op.banded()) {
        above = *op.upper_bandwidth;
        below = *op.lower_bandwidth;
    } else {
        if (!cutoff) {
            throw StructuralError("operator " + op.id + " has unbounded bandwidth; a cutoff is required");
        }
        above = op.upper_bandwidth.value_or(*cutoff);
        below = op.lower_bandwidth.value_or(*cutoff);
    }
    if (cutoff) {
        above = std::min(above, *cutoff);
        below = std::min(below, *cutoff);
    }
    SparseColumn<R> out;
    for (long i = col - above; i <= col + below; ++i) {
        if (!op.in_domain(i)) {
            continue;
        }
        Complex<R> v = op.entry<R>(i, col);
        if (!(v.re == R(0) && v.im == R(0))) {
            out.emplace_back(i, std::move(v));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plugins

struct PluginSpec {
    OperatorSpec op;
    nlohmann::json ltp; // null when the file carries no LTP model
};

inline OperatorSpec operator_from_json(const nlohmann::json& j, nlohmann::json* ltp_out = nullptr)
{
    static const std::set<std::string> known = {"id", "domain", "bands", "tail", "symmetry", "ltp", "description"};
    if (!j.is_object()) {
        throw StructuralError("plugin description must be a JSON object");
    }
    for (const auto& [k, _] : j.items()) {
        if (!known.count(k)) {
            throw StructuralError("unknown plugin key '" + k + "'");
        }
    }
    OperatorSpec op;
    try {
        op.id = j.at("id").get<std::string>();
        const std::string domain = j.value("domain", "naturals");
        if (domain == "naturals") {
            op.index_domain = IndexDomain::NaturalNumbers;
        } else if (domain == "integers") {
            op.index_domain = IndexDomain::Integers;
        } else {
            throw StructuralError("domain must be 'naturals' or 'integers', got '" + domain + "'");
        }

        std::map<long, Expr> bands;
        long lo = 0;
        long hi = 0;
        for (const auto& b : j.at("bands")) {
            const long off = b.at("offset").get<long>();
            Expr e = Expr::parse(b.at("coefficient").get<std::string>());
            for (const auto& v : e.variables()) {
                if (v != "n" && v != "m") {
                    throw StructuralError("band coefficient uses unknown variable '" + v + "'");
                }
            }
            if (!bands.emplace(off, std::move(e)).second) {
                throw StructuralError("duplicate band offset " + std::to_string(off));
            }
            lo = std::min(lo, off);
            hi = std::max(hi, off);
        }
        if (bands.empty()) {
            throw StructuralError("plugin needs at least one band");
        }

        std::optional<Expr> far;
        long far_from = 0;
        if (j.contains("tail")) {
            const auto& t = j.at("tail");
            far = Expr::parse(t.at("coefficient").get<std::string>());
            far_from = t.at("from_offset").get<long>();
            if (far_from <= std::max(-lo, hi)) {
                throw StructuralError("tail.from_offset must exceed every band offset");
            }
            // Squared column tail beyond distance k: constant * ratio^k.
            const auto& cb = t.at("column_bound");
            const double c = cb.at("constant").get<double>();
            const double r = cb.at("ratio").get<double>();
            if (!(c > 0) || !(r > 0 && r < 1)) {
                throw StructuralError("tail.column_bound needs constant > 0 and 0 < ratio < 1");
            }
            op.column_tail_sq = [c, r](long k) {
                double p = 1.0;
                for (long s = 0; s < k && p > 0; ++s) {
                    p = rounding::mul(p, r, true);
                }
                return rounding::mul(c, p, true);
            };
        } else {
            // offset = col - row: positive offsets sit above the diagonal
            op.lower_bandwidth = std::max(0L, -lo);
            op.upper_bandwidth = std::max(0L, hi);
        }
        op.rule = std::make_shared<detail::ExprRule>(std::move(bands), std::move(far), far_from);

        if (j.contains("symmetry")) {
            for (const auto& s : j.at("symmetry")) {
                const auto name = s.get<std::string>();
                if (name == "complex_symmetric") {
                    op.symmetry_flags.insert(Symmetry::ComplexSymmetric);
                } else if (name == "pt_symmetric") {
                    op.symmetry_flags.insert(Symmetry::PTSymmetric);
                } else if (name == "real_spectrum") {
                    op.symmetry_flags.insert(Symmetry::RealSpectrumExpected);
                } else {
                    throw StructuralError("unknown symmetry flag '" + name + "'");
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("malformed plugin description: ") + e.what());
    } catch (const ExprError& e) {
        throw StructuralError(std::string("bad coefficient expression: ") + e.what());
    }
    if (ltp_out) {
        *ltp_out = j.value("ltp", nlohmann::json());
    }
    return op;
}

inline PluginSpec load_plugin(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("cannot open plugin file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError("plugin file " + path + " is not valid JSON: " + e.what());
    }
    PluginSpec p;
    p.op = operator_from_json(j, &p.ltp);
    return p;
}

inline std::vector<std::string> builtin_operator_ids() { return {"cubic", "lattice", "harmonic"}; }

inline OperatorSpec builtin_operator(const std::string& id)
{
    if (id == "cubic") {
        return hermite_cubic_operator();
    }
    if (id == "lattice") {
        return lattice_longrange_operator();
    }
    if (id == "harmonic") {
        return harmonic_oscillator_operator();
    }
    throw StructuralError("unknown operator '" + id + "'");
}

} // namespace specgate
