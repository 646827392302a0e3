#pragma once

// Injection modulus (smallest singular value) of rectangular truncations.
//
// Default path: Givens QR of the band matrix, then inverse iteration on
// R^* R.  The reported sigma is ||T x|| evaluated from T itself, so it is
// the residual of the returned vector.  If the iteration does not settle
// within its budget the dense one-sided Jacobi SVD takes over.

#include "specgate/linalg.hpp"
#include "specgate/truncation.hpp"

#include <optional>
#include <utility>

namespace specgate {

template <class R>
struct SigmaResult {
    R sigma;
    CVector<R> right_vector; // unit norm, length N
    CVector<R> left_vector;  // T x / sigma (length N + k), empty when sigma = 0
    R rel_err_est;
    bool used_fallback = false;
};

template <class R>
SigmaResult<R> smallest_singular(const RectTruncation<R>& t)
{
    const std::size_t n = t.matrix.cols();
    SigmaResult<R> out;
    CVector<R> x;
    R estimate(0);
    {
        UpperBand<R> rf = band_qr_r(t.matrix, t.shift, t.diag_offset());
        InverseIteration<R> it = smallest_right_vector(std::move(rf));
        if (it.converged) {
            x = std::move(it.vector);
            estimate = it.sigma_estimate;
        }
    }
    if (x.empty()) {
        const BandMatrix<R> a = t.shifted();
        DenseSvdMin<R> d = jacobi_svd_min(a.dense(), a.rows(), n);
        x = std::move(d.right);
        estimate = d.sigma;
        out.used_fallback = true;
    }

    const BandMatrix<R> a = t.shifted();
    CVector<R> tx = a.multiply(x);
    out.sigma = residual_norm(a, x);
    const R u = real_traits<R>::unit_roundoff();
    out.rel_err_est = R(static_cast<double>(10 * n)) * u;
    if (out.sigma > R(0)) {
        const R diff = abs(out.sigma - estimate) / out.sigma;
        if (diff > out.rel_err_est) {
            out.rel_err_est = diff;
        }
        // a backward-stable x is exact for T + E with ||E|| ~ u ||T||, so a
        // small sigma is only known to about u ||T|| absolutely
        R fro(0);
        for (std::size_t c = 0; c < n; ++c) {
            const auto [lo, hi] = a.column_rows(c);
            for (std::size_t r = lo; r < hi; ++r) {
                const Complex<R>& v = a.at(r, c);
                fro += v.re * v.re + v.im * v.im;
            }
        }
        const R backward = R(10) * u * sqrt(fro) / out.sigma;
        if (backward > out.rel_err_est) {
            out.rel_err_est = backward;
        }
        for (auto& v : tx) {
            v = v / out.sigma;
        }
        out.left_vector = std::move(tx);
    }
    out.right_vector = std::move(x);
    return out;
}

/// gamma_N(z): smallest singular value of the rectangular truncation plus
/// its tail defect, an upper bound for sigma_inf((H - z) P_N).
template <class R>
R gamma(const OperatorSpec& op, const Complex<R>& z, long N, const TruncationOptions& opts = {})
{
    const RectTruncation<R> t = rectangular<R>(op, z, N, opts);
    return smallest_singular(t).sigma + R(t.tail_defect);
}

/// Left near-null vector: the smallest right singular vector of the
/// truncation of (H^* - conj z).  Complex symmetric operators reuse the
/// right vector: psi = conj(phi).
template <class R>
CVector<R> left_null_vector(const OperatorSpec& op, const Complex<R>& z, long N, const TruncationOptions& opts = {})
{
    if (op.has(Symmetry::ComplexSymmetric)) {
        const SigmaResult<R> s = smallest_singular(rectangular<R>(op, z, N, opts));
        CVector<R> l = s.right_vector;
        for (auto& v : l) {
            v = conj(v);
        }
        return l;
    }
    const OperatorSpec adj = op.adjoint();
    return smallest_singular(rectangular<R>(adj, conj(z), N, opts)).right_vector;
}

} // namespace specgate
