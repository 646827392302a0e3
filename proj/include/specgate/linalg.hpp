#pragma once

// Small dense and banded complex linear algebra, generic over the real type.
//
// BandMatrix stores entries (r, c) with dmin <= r - c <= dmax.  The smallest
// singular value of a tall band matrix is found from a Givens QR (Q is never
// formed) followed by inverse iteration on R^* R; a one-sided Jacobi SVD is
// the dense fallback and works at any precision.

#include "specgate/numeric.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

namespace specgate {

template <class R>
class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(std::size_t rows, std::size_t cols, long dmin, long dmax)
        : rows_(rows), cols_(cols), dmin_(clip_lo(dmin, cols)), dmax_(clip_hi(dmax, rows)),
          width_(static_cast<std::size_t>(std::max(0L, dmax_ - dmin_ + 1))), data_(width_ * cols)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    long dmin() const { return dmin_; }
    long dmax() const { return dmax_; }

    bool in_band(std::size_t r, std::size_t c) const
    {
        const long d = static_cast<long>(r) - static_cast<long>(c);
        return r < rows_ && c < cols_ && d >= dmin_ && d <= dmax_;
    }

    Complex<R>& at(std::size_t r, std::size_t c) { return data_[index(r, c)]; }
    const Complex<R>& at(std::size_t r, std::size_t c) const { return data_[index(r, c)]; }

    Complex<R> get(std::size_t r, std::size_t c) const { return in_band(r, c) ? at(r, c) : Complex<R>(); }

    // Row range of column c inside the band, [first, last).
    std::pair<std::size_t, std::size_t> column_rows(std::size_t c) const
    {
        const long lo = std::max(0L, static_cast<long>(c) + dmin_);
        const long hi = std::min(static_cast<long>(rows_), static_cast<long>(c) + dmax_ + 1);
        return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
    }

    CVector<R> multiply(const CVector<R>& x) const
    {
        CVector<R> y(rows_);
        for (std::size_t c = 0; c < cols_; ++c) {
            const auto [lo, hi] = column_rows(c);
            for (std::size_t r = lo; r < hi; ++r) {
                y[r] += at(r, c) * x[c];
            }
        }
        return y;
    }

    std::vector<Complex<R>> dense() const
    {
        std::vector<Complex<R>> out(rows_ * cols_);
        for (std::size_t c = 0; c < cols_; ++c) {
            const auto [lo, hi] = column_rows(c);
            for (std::size_t r = lo; r < hi; ++r) {
                out[r * cols_ + c] = at(r, c);
            }
        }
        return out;
    }

private:
    static long clip_lo(long d, std::size_t cols) { return std::max(d, -static_cast<long>(cols) + 1); }
    static long clip_hi(long d, std::size_t rows) { return std::min(d, static_cast<long>(rows) - 1); }

    std::size_t index(std::size_t r, std::size_t c) const
    {
        return c * width_ + static_cast<std::size_t>(static_cast<long>(r) - static_cast<long>(c) - dmin_);
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    long dmin_ = 0;
    long dmax_ = 0;
    std::size_t width_ = 0;
    std::vector<Complex<R>> data_;
};

namespace detail {

// Double-double accumulator (error-free TwoSum / FMA products).
struct DD {
    double hi = 0.0;
    double lo = 0.0;

    void add(double a)
    {
        const double s = hi + a;
        const double bb = s - hi;
        lo += (hi - (s - bb)) + (a - bb);
        hi = s;
    }
    void add_prod(double a, double b)
    {
        const double p = a * b;
        add(p);
        lo += std::fma(a, b, -p);
    }
    // after heavy cancellation lo can rival hi; renormalize so lo^2 is
    // negligible before squaring
    void add_square(DD x)
    {
        const double s = x.hi + x.lo;
        const double bb = s - x.hi;
        x.lo = (x.hi - (s - bb)) + (x.lo - bb);
        x.hi = s;
        add_prod(x.hi, x.hi);
        lo += 2.0 * x.hi * x.lo;
    }
};

} // namespace detail

/// ||A x|| with every entry of A x and the sum of squares carried in
/// double-double, rounded once at the end.  In double the plain product
/// loses about u * sum |A||x|, which swamps sigma near an eigenvalue and
/// breaks the ordering of residuals that agree to many digits.
template <class R>
R residual_norm(const BandMatrix<R>& a, const CVector<R>& x)
{
    if constexpr (std::is_same_v<R, double>) {
        std::vector<detail::DD> re(a.rows());
        std::vector<detail::DD> im(a.rows());
        for (std::size_t c = 0; c < a.cols(); ++c) {
            const auto [lo, hi] = a.column_rows(c);
            const double xr = x[c].re;
            const double xi = x[c].im;
            for (std::size_t r = lo; r < hi; ++r) {
                const Complex<double>& v = a.at(r, c);
                re[r].add_prod(v.re, xr);
                re[r].add_prod(-v.im, xi);
                im[r].add_prod(v.re, xi);
                im[r].add_prod(v.im, xr);
            }
        }
        detail::DD sum;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            sum.add_square(re[r]);
            sum.add_square(im[r]);
        }
        const double s2 = sum.hi + sum.lo;
        if (!(s2 > 0.0) || !std::isfinite(s2)) {
            return std::sqrt(std::max(s2, 0.0));
        }
        const double s = std::sqrt(s2);
        // one Newton step against the unrounded sum
        return s + (std::fma(-s, s, sum.hi) + sum.lo) / (2.0 * s);
    } else {
        return norm2(a.multiply(x));
    }
}

// Upper triangular N x N band matrix with w superdiagonals.
template <class R>
class UpperBand {
public:
    UpperBand(std::size_t n, std::size_t w) : n_(n), w_(w), data_(n * (w + 1)) {}

    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return w_; }

    // (r, c) with c - w <= r <= c
    Complex<R>& at(std::size_t r, std::size_t c) { return data_[c * (w_ + 1) + (c - r)]; }
    const Complex<R>& at(std::size_t r, std::size_t c) const { return data_[c * (w_ + 1) + (c - r)]; }

    // R x = y
    CVector<R> solve(const CVector<R>& y) const
    {
        CVector<R> x(n_);
        for (std::size_t c = n_; c-- > 0;) {
            Complex<R> s = y[c];
            const std::size_t last = std::min(n_ - 1, c + w_);
            for (std::size_t k = c + 1; k <= last; ++k) {
                s -= at(c, k) * x[k];
            }
            x[c] = s / at(c, c);
        }
        return x;
    }

    // R^* x = y
    CVector<R> solve_adjoint(const CVector<R>& y) const
    {
        CVector<R> x(n_);
        for (std::size_t c = 0; c < n_; ++c) {
            Complex<R> s = y[c];
            const std::size_t first = c > w_ ? c - w_ : 0;
            for (std::size_t k = first; k < c; ++k) {
                s -= conj(at(k, c)) * x[k];
            }
            x[c] = s / conj(at(c, c));
        }
        return x;
    }

private:
    std::size_t n_;
    std::size_t w_;
    std::vector<Complex<R>> data_;
};

/// R factor of the QR decomposition of A - shift * E, where E has ones at
/// (c + diag_offset, c).  Only the leading cols x cols block of R is kept.
template <class R>
UpperBand<R> band_qr_r(const BandMatrix<R>& a, const Complex<R>& shift, long diag_offset)
{
    const std::size_t rows = a.rows();
    const std::size_t n = a.cols();
    const long p = std::max(0L, -a.dmin());
    const long q = std::max(0L, a.dmax());
    const std::size_t width = static_cast<std::size_t>(p + 2 * q + 1);

    // Row-oriented working copy; row r holds columns [r - q, r + p + q].
    std::vector<Complex<R>> work(rows * width);
    auto w = [&](std::size_t r, std::size_t c) -> Complex<R>& {
        return work[r * width + static_cast<std::size_t>(static_cast<long>(c) - static_cast<long>(r) + q)];
    };
    for (std::size_t c = 0; c < n; ++c) {
        const auto [lo, hi] = a.column_rows(c);
        for (std::size_t r = lo; r < hi; ++r) {
            w(r, c) = a.at(r, c);
        }
        const long dr = static_cast<long>(c) + diag_offset;
        if (dr >= 0 && dr < static_cast<long>(rows)) {
            w(static_cast<std::size_t>(dr), c) -= shift;
        }
    }

    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t last_row = std::min(rows - 1, c + static_cast<std::size_t>(q));
        const std::size_t last_col = std::min(n - 1, c + static_cast<std::size_t>(p + q));
        for (std::size_t r = c + 1; r <= last_row; ++r) {
            const Complex<R> b = w(r, c);
            if (b.re == R(0) && b.im == R(0)) {
                continue;
            }
            const Complex<R> x = w(c, c);
            const R ax = abs(x);
            const R nrm = hypot(ax, abs(b));
            R cs;
            Complex<R> sn;
            if (ax == R(0)) {
                cs = R(0);
                sn = conj(b) / abs(b);
            } else {
                cs = ax / nrm;
                sn = (x / ax) * conj(b) / nrm;
            }
            const Complex<R> msn = -conj(sn);
            for (std::size_t k = c; k <= last_col; ++k) {
                const Complex<R> u = w(c, k);
                const Complex<R> v = w(r, k);
                w(c, k) = cs * u + sn * v;
                w(r, k) = msn * u + cs * v;
            }
            w(r, c) = Complex<R>();
        }
    }

    UpperBand<R> out(n, static_cast<std::size_t>(p + q));
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t first = c > static_cast<std::size_t>(p + q) ? c - static_cast<std::size_t>(p + q) : 0;
        for (std::size_t r = first; r <= c; ++r) {
            out.at(r, c) = w(r, c);
        }
    }
    return out;
}

/// Deterministic start vector for iterations.
template <class R>
CVector<R> start_vector(std::size_t n)
{
    CVector<R> x(n);
    std::uint64_t s = 0x9E3779B97F4A7C15ULL;
    for (std::size_t k = 0; k < n; ++k) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double u = static_cast<double>(s >> 11) * 0x1p-53;
        x[k] = Complex<R>(R(1.0 + 0.5 * u), R(0.25 * u));
    }
    normalize(x);
    return x;
}

template <class R>
struct InverseIteration {
    CVector<R> vector; // unit norm
    R sigma_estimate;
    int iterations = 0;
    bool converged = false;
};

/// Inverse iteration on R^* R for its smallest eigenvalue.
template <class R>
InverseIteration<R> smallest_right_vector(UpperBand<R> rf, int max_iter = 200)
{
    const std::size_t n = rf.size();
    const R u = real_traits<R>::unit_roundoff();
    R scale(0);
    for (std::size_t c = 0; c < n; ++c) {
        scale = max(scale, abs(rf.at(c, c)));
    }
    if (scale == R(0)) {
        scale = R(1);
    }
    const R tiny = u * scale;
    for (std::size_t c = 0; c < n; ++c) {
        if (abs(rf.at(c, c)) < tiny) {
            rf.at(c, c) = Complex<R>(tiny);
        }
    }

    InverseIteration<R> out;
    CVector<R> x = start_vector<R>(n);
    R prev(0);
    R prev_step(0);
    const R tol = R(static_cast<double>(10 * n)) * u;
    for (int it = 1; it <= max_iter; ++it) {
        CVector<R> w = rf.solve_adjoint(x);
        const R wn = norm2(w);
        CVector<R> y = rf.solve(w);
        normalize(y);
        x = std::move(y);
        out.iterations = it;
        const R step = abs(wn - prev);
        if (out.converged && (step >= prev_step || step <= R(2) * u * wn)) {
            // polished: further steps only stir roundoff
            prev = wn;
            break;
        }
        if (!out.converged && it > 2 && step <= tol * wn) {
            // With clustered singular values the per-step change understates
            // the remaining error by 1/(1 - rate); estimate the rate from the
            // last two steps.
            const R remaining = step < prev_step ? step * step / (prev_step - step) : step;
            out.converged = remaining <= tol * wn || step <= u * wn;
        }
        prev_step = step;
        prev = wn;
    }
    out.vector = std::move(x);
    out.sigma_estimate = R(1) / prev;
    return out;
}

template <class R>
struct DenseSvdMin {
    R sigma;
    CVector<R> right;
};

/// Smallest singular value and right vector of a dense rows x cols matrix
/// (row-major) by one-sided Jacobi rotations.
template <class R>
DenseSvdMin<R> jacobi_svd_min(std::vector<Complex<R>> a, std::size_t rows, std::size_t cols, int max_sweeps = 60)
{
    std::vector<Complex<R>> v(cols * cols);
    for (std::size_t k = 0; k < cols; ++k) {
        v[k * cols + k] = Complex<R>(R(1));
    }
    const R tol = real_traits<R>::unit_roundoff() * R(static_cast<double>(rows));
    auto col_dot = [&](std::size_t i, std::size_t j) {
        Complex<R> s;
        for (std::size_t r = 0; r < rows; ++r) {
            const Complex<R>& x = a[r * cols + i];
            const Complex<R>& y = a[r * cols + j];
            s.re += x.re * y.re + x.im * y.im;
            s.im += x.re * y.im - x.im * y.re;
        }
        return s;
    };
    auto col_norm2 = [&](std::size_t i) {
        R s(0);
        for (std::size_t r = 0; r < rows; ++r) {
            s += norm(a[r * cols + i]);
        }
        return s;
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < cols; ++i) {
            for (std::size_t j = i + 1; j < cols; ++j) {
                const R alpha = col_norm2(i);
                const R beta = col_norm2(j);
                const Complex<R> g = col_dot(i, j);
                const R ag = abs(g);
                if (ag == R(0) || ag <= tol * sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const Complex<R> phase = conj(g) / ag; // multiplies column j
                const R zeta = (beta - alpha) / (R(2) * ag);
                const R t = (zeta >= R(0) ? R(1) : R(-1)) / (abs(zeta) + sqrt(R(1) + zeta * zeta));
                const R c = R(1) / sqrt(R(1) + t * t);
                const R s = c * t;
                for (std::size_t r = 0; r < rows; ++r) {
                    const Complex<R> x = a[r * cols + i];
                    const Complex<R> y = a[r * cols + j] * phase;
                    a[r * cols + i] = c * x - s * y;
                    a[r * cols + j] = s * x + c * y;
                }
                for (std::size_t r = 0; r < cols; ++r) {
                    const Complex<R> x = v[r * cols + i];
                    const Complex<R> y = v[r * cols + j] * phase;
                    v[r * cols + i] = c * x - s * y;
                    v[r * cols + j] = s * x + c * y;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }

    std::size_t best = 0;
    R best_n = col_norm2(0);
    for (std::size_t k = 1; k < cols; ++k) {
        R nk = col_norm2(k);
        if (nk < best_n) {
            best_n = std::move(nk);
            best = k;
        }
    }
    DenseSvdMin<R> out{sqrt(best_n), CVector<R>(cols)};
    for (std::size_t r = 0; r < cols; ++r) {
        out.right[r] = v[r * cols + best];
    }
    normalize(out.right);
    return out;
}

} // namespace specgate
