#pragma once

// Finite sections of an OperatorSpec.
//
// A rectangular truncation keeps N columns and every row those columns can
// reach: for banded operators that is exact (no neglected entries), for
// long-range operators the rows are padded until the neglected block is
// certified below a requested tolerance.

#include "specgate/linalg.hpp"
#include "specgate/operator_model.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace specgate {

/// Largest padding tail_padding will try before giving up.
inline constexpr long kMaxTailPadding = 4096;

class TailPaddingError : public StructuralError {
public:
    TailPaddingError(const std::string& what, double best) : StructuralError(what), best_bound(best) {}
    double best_bound;
};

/// Smallest m with tail_bound(N, m) <= eps.
inline long tail_padding(const OperatorSpec& op, long N, double eps)
{
    if (!op.has_tail_bound()) {
        throw StructuralError("operator " + op.id + " has no tail bound");
    }
    if (!(eps > 0)) {
        throw StructuralError("tail_padding needs eps > 0");
    }
    // tail_bound is nonincreasing in m: bisect on [0, kMaxTailPadding].
    if (op.tail_bound(N, 0) <= eps) {
        return 0;
    }
    const double best = op.tail_bound(N, kMaxTailPadding);
    if (best > eps) {
        throw TailPaddingError("tail tolerance " + std::to_string(eps) + " unreachable within padding " +
                                   std::to_string(kMaxTailPadding) + "; best bound " + std::to_string(best),
                               best);
    }
    long lo = 0;
    long hi = kMaxTailPadding;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (op.tail_bound(N, mid) <= eps) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

/// Index of the first column of an N-column section: 0 on the naturals,
/// -(N/2) on the integers (so odd N gives the symmetric block -n..n).
inline long first_column(const OperatorSpec& op, long N)
{
    return op.index_domain == IndexDomain::Integers ? -(N / 2) : 0;
}

struct TruncationOptions {
    std::optional<double> tail_eps; // default 2^-(N/2) for long-range operators
};

template <class R>
struct RectTruncation {
    BandMatrix<R> matrix; // (N + k) x N, shift not yet applied
    long N = 0;
    long k = 0;
    Complex<R> shift;
    std::string op_id;
    double tail_defect = 0; // certified bound on the neglected block, rounded up
    long col_first = 0;     // operator index of column 0
    long row_first = 0;     // operator index of row 0

    long diag_offset() const { return col_first - row_first; }

    // The shifted matrix H - z as a band matrix.
    BandMatrix<R> shifted() const
    {
        BandMatrix<R> m = matrix;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const long r = static_cast<long>(c) + diag_offset();
            if (r >= 0 && r < static_cast<long>(m.rows())) {
                m.at(static_cast<std::size_t>(r), c) -= shift;
            }
        }
        return m;
    }

    RectTruncation with_shift(const Complex<R>& z) const
    {
        RectTruncation t = *this;
        t.shift = z;
        return t;
    }
};

/// P_{N+k} (H - z) P_N.
template <class R>
RectTruncation<R> rectangular(const OperatorSpec& op, const Complex<R>& z, long N, const TruncationOptions& opts = {})
{
    if (N < 1) {
        throw StructuralError("truncation needs N >= 1");
    }
    RectTruncation<R> t;
    t.N = N;
    t.shift = z;
    t.op_id = op.id;
    t.col_first = first_column(op, N);
    const long col_last = t.col_first + N - 1;

    long above = 0; // rows above the first column
    long below = 0; // rows below the last column
    long reach_up = 0;
    long reach_down = 0;
    if (op.banded()) {
        above = *op.upper_bandwidth;
        below = *op.lower_bandwidth;
        reach_up = above;
        reach_down = below;
    } else {
        if (!op.has_tail_bound()) {
            throw StructuralError("operator " + op.id + " has unbounded bands and no tail bound");
        }
        const double eps = opts.tail_eps.value_or(std::ldexp(1.0, static_cast<int>(-(N / 2))));
        const long m = tail_padding(op, N, eps);
        above = m;
        below = m;
        t.tail_defect = op.tail_bound(N, m);
        reach_up = N - 1 + m;
        reach_down = N - 1 + m;
    }
    long row_first = t.col_first - above;
    if (op.index_domain == IndexDomain::NaturalNumbers) {
        row_first = std::max(0L, row_first);
    }
    const long row_last = col_last + below;
    t.row_first = row_first;
    t.k = (row_last - row_first + 1) - N;

    const long pad = t.diag_offset();
    t.matrix = BandMatrix<R>(static_cast<std::size_t>(row_last - row_first + 1), static_cast<std::size_t>(N),
                             pad - reach_up, pad + reach_down);
    for (std::size_t c = 0; c < t.matrix.cols(); ++c) {
        const auto [lo, hi] = t.matrix.column_rows(c);
        const long j = t.col_first + static_cast<long>(c);
        for (std::size_t r = lo; r < hi; ++r) {
            t.matrix.at(r, c) = op.entry<R>(row_first + static_cast<long>(r), j);
        }
    }
    return t;
}

/// Leading N x N block of H - z, row-major.
template <class R>
std::vector<Complex<R>> square(const OperatorSpec& op, const Complex<R>& z, long N)
{
    if (N < 1) {
        throw StructuralError("truncation needs N >= 1");
    }
    const long first = first_column(op, N);
    std::vector<Complex<R>> a(static_cast<std::size_t>(N * N));
    for (long r = 0; r < N; ++r) {
        for (long c = 0; c < N; ++c) {
            Complex<R> v = op.entry<R>(first + r, first + c);
            if (r == c) {
                v -= z;
            }
            a[static_cast<std::size_t>(r * N + c)] = std::move(v);
        }
    }
    return a;
}

/// P_N (H - z)^* (H - z) P_N, Hermitian, row-major.  Column inner products
/// run over rows within `cutoff` of each column (must cover the bands).
template <class R>
std::vector<Complex<R>> normal_truncation(const OperatorSpec& op, const Complex<R>& z, long N, long cutoff)
{
    if (N < 1) {
        throw StructuralError("truncation needs N >= 1");
    }
    if (op.banded() && cutoff < std::max(*op.lower_bandwidth, *op.upper_bandwidth)) {
        throw StructuralError("cutoff " + std::to_string(cutoff) + " does not cover the bands of " + op.id);
    }
    const long first = first_column(op, N);
    std::vector<SparseColumn<R>> cols;
    cols.reserve(static_cast<std::size_t>(N));
    for (long c = 0; c < N; ++c) {
        const long j = first + c;
        SparseColumn<R> col = apply_column<R>(op, j, cutoff);
        bool has_diag = false;
        for (auto& [i, v] : col) {
            if (i == j) {
                v -= z;
                has_diag = true;
            }
        }
        if (!has_diag && !(z.re == R(0) && z.im == R(0))) {
            col.emplace_back(j, -z);
            std::sort(col.begin(), col.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        }
        cols.push_back(std::move(col));
    }
    std::vector<Complex<R>> g(static_cast<std::size_t>(N * N));
    for (long a = 0; a < N; ++a) {
        for (long b = a; b < N; ++b) {
            Complex<R> s;
            std::size_t p = 0;
            std::size_t q = 0;
            const auto& ca = cols[static_cast<std::size_t>(a)];
            const auto& cb = cols[static_cast<std::size_t>(b)];
            while (p < ca.size() && q < cb.size()) {
                if (ca[p].first < cb[q].first) {
                    ++p;
                } else if (cb[q].first < ca[p].first) {
                    ++q;
                } else {
                    s += conj(ca[p].second) * cb[q].second;
                    ++p;
                    ++q;
                }
            }
            g[static_cast<std::size_t>(a * N + b)] = s;
            g[static_cast<std::size_t>(b * N + a)] = conj(s);
        }
        // symmetrize the diagonal: exactly real
        g[static_cast<std::size_t>(a * N + a)].im = R(0);
    }
    return g;
}

} // namespace specgate
