#pragma once

// End-to-end pipelines: pseudospectrum grids, eigenvalue localization by
// minimizing gamma_N, bootstrap certification, condition numbers, subspace
// angles, eigenfunction evaluation and the square-truncation comparison.

#include "specgate/ltp_bounds.hpp"
#include "specgate/operator_model.hpp"
#include "specgate/sigma_kernel.hpp"
#include "specgate/truncation.hpp"
#include "specgate/verify.hpp"
#include "specgate/worker_pool.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace specgate {

class MultiMinimumError : public Error {
public:
    MultiMinimumError(const std::string& what, std::vector<double> dips) : Error(what), dips(std::move(dips)) {}
    std::vector<double> dips;
};

// ---------------------------------------------------------------------------
// gamma_N with the truncation built once

template <class R>
class GammaEvaluator {
public:
    GammaEvaluator(const OperatorSpec& op, long N, const TruncationOptions& opts = {})
        : base_(rectangular<R>(op, Complex<R>(), N, opts))
    {
    }

    const RectTruncation<R>& base() const { return base_; }

    SigmaResult<R> sigma(const Complex<R>& z) const { return smallest_singular(base_.with_shift(z)); }

    R operator()(const Complex<R>& z) const { return sigma(z).sigma + R(base_.tail_defect); }

    long pad() const { return base_.col_first - base_.row_first; }

private:
    RectTruncation<R> base_;
};

// ---------------------------------------------------------------------------
// Grids

struct Region {
    double re_lo = 0;
    double re_hi = 0;
    double im_lo = 0;
    double im_hi = 0;
};

struct GridResult {
    Region region;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values; // row-major: values[iy * nx + ix]
    long N = 0;
    std::string op_id;

    double re(std::size_t ix) const
    {
        return nx == 1 ? region.re_lo
                       : region.re_lo + (region.re_hi - region.re_lo) * static_cast<double>(ix) / static_cast<double>(nx - 1);
    }
    double im(std::size_t iy) const
    {
        return ny == 1 ? region.im_lo
                       : region.im_lo + (region.im_hi - region.im_lo) * static_cast<double>(iy) / static_cast<double>(ny - 1);
    }
    double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
};

inline GridResult pseudospectrum_grid(const OperatorSpec& op, const Region& region, std::size_t nx, std::size_t ny,
                                      long N, const PrecisionContext& ctx, const WorkerPool& pool = WorkerPool(1),
                                      const TruncationOptions& opts = {})
{
    if (nx < 2 || ny < 2) {
        throw Error("pseudospectrum grid needs a resolution of at least 2 x 2");
    }
    if (!(region.re_lo < region.re_hi) || !(region.im_lo < region.im_hi)) {
        throw Error("malformed region");
    }
    GridResult g;
    g.region = region;
    g.nx = nx;
    g.ny = ny;
    g.N = N;
    g.op_id = op.id;
    g.values.resize(nx * ny);
    with_precision(ctx, [&]<class R>() {
        const GammaEvaluator<R> ev(op, N, opts);
        pool.parallel_for(nx * ny, [&](std::size_t k) {
            std::optional<PrecisionGuard> guard;
            if (!ctx.is_double()) {
                guard.emplace(ctx.digits);
            }
            const Complex<R> z(R(g.re(k % nx)), R(g.im(k / nx)));
            const R v = ev(z);
            if constexpr (std::is_same_v<R, double>) {
                g.values[k] = v;
            } else {
                g.values[k] = v.to_double(MPFR_RNDU);
            }
        });
        return 0;
    });
    return g;
}

// ---------------------------------------------------------------------------
// Localization

template <class R>
struct EigenpairResult {
    Complex<R> z_N;
    CVector<R> f_N;
    R gamma_at_min;
    long N = 0;
    R bracket_lo;
    R bracket_hi;
    int iterations = 0;
    long col_first = 0;
    long pad = 0;
};

namespace detail {

template <class R>
EigenpairResult<R> finish(const GammaEvaluator<R>& ev, Complex<R> z, R lo, R hi, int iterations)
{
    EigenpairResult<R> out;
    SigmaResult<R> s = ev.sigma(z);
    out.gamma_at_min = s.sigma + R(ev.base().tail_defect);
    out.f_N = std::move(s.right_vector);
    out.z_N = std::move(z);
    out.N = ev.base().N;
    out.bracket_lo = std::move(lo);
    out.bracket_hi = std::move(hi);
    out.iterations = iterations;
    out.col_first = ev.base().col_first;
    out.pad = ev.pad();
    return out;
}

} // namespace detail

/// Golden-section search for the minimum of t -> gamma_N(t) on [a, b].
/// A 17-point scan first checks for a single dip: two or more local minima
/// below half the scan maximum mean the bracket holds several eigenvalues.
template <class R>
EigenpairResult<R> locate_minimum(const GammaEvaluator<R>& ev, const R& a, const R& b, const R& tol)
{
    if (!(a < b)) {
        throw Error("locate_minimum needs a < b");
    }
    constexpr int kScan = 17;
    std::vector<R> t(kScan);
    std::vector<R> g(kScan);
    for (int k = 0; k < kScan; ++k) {
        t[k] = a + (b - a) * R(k) / R(kScan - 1);
        g[k] = ev(Complex<R>(t[k]));
    }
    R gmax = g[0];
    for (const auto& v : g) {
        gmax = max(gmax, v);
    }
    // interior local minima; an endpoint minimum only means gamma keeps
    // falling outside the bracket
    std::vector<int> minima;
    for (int k = 1; k + 1 < kScan; ++k) {
        if (g[k] < g[k - 1] && g[k] <= g[k + 1]) {
            minima.push_back(k);
        }
    }
    std::vector<int> dips;
    for (int k : minima) {
        if (g[k] < gmax / R(2)) {
            dips.push_back(k);
        }
    }
    if (dips.size() > 1) {
        std::vector<double> where;
        for (int k : dips) {
            where.push_back(to_double(t[k]));
        }
        std::string list;
        for (double w : where) {
            list += (list.empty() ? "" : ", ") + std::to_string(w);
        }
        throw MultiMinimumError("bracket holds several minima (near " + list + "); split it", where);
    }
    int best = 0;
    if (dips.size() == 1) {
        best = dips[0];
    } else {
        for (int k = 1; k < kScan; ++k) {
            if (g[k] < g[best]) {
                best = k;
            }
        }
    }

    // golden section on the scan cell around the dip
    R lo = t[std::max(0, best - 1)];
    R hi = t[std::min(kScan - 1, best + 1)];
    const R invphi = (sqrt(R(5)) - R(1)) / R(2);
    R x1 = hi - invphi * (hi - lo);
    R x2 = lo + invphi * (hi - lo);
    R f1 = ev(Complex<R>(x1));
    R f2 = ev(Complex<R>(x2));
    R best_t = t[best];
    R best_g = g[best];
    auto track = [&](const R& x, const R& f) {
        if (f < best_g) {
            best_g = f;
            best_t = x;
        }
    };
    track(x1, f1);
    track(x2, f2);
    int it = 0;
    while (hi - lo > tol && it < 400) {
        ++it;
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = ev(Complex<R>(x1));
            track(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = ev(Complex<R>(x2));
            track(x2, f2);
        }
    }
    return detail::finish(ev, Complex<R>(best_t), a, b, it);
}

template <class R>
EigenpairResult<R> locate_minimum(const OperatorSpec& op, const R& a, const R& b, long N, const R& tol,
                                  const TruncationOptions& opts = {})
{
    const GammaEvaluator<R> ev(op, N, opts);
    return locate_minimum(ev, a, b, tol);
}

/// Minimum of gamma_N over the complex plane near z0: pattern search on a
/// shrinking 3 x 3 grid, then Rayleigh-quotient steps for complex symmetric
/// operators (accepted only while gamma decreases).
template <class R>
EigenpairResult<R> locate_minimum_2d(const GammaEvaluator<R>& ev, const Complex<R>& z0, const R& h0, const R& tol,
                                     bool complex_symmetric)
{
    Complex<R> z = z0;
    R g = ev(z);
    R h = h0;
    int it = 0;
    const R stop = max(tol, R(1e-7) * h0);
    while (h > stop && it < 4000) {
        ++it;
        Complex<R> best_z = z;
        R best_g = g;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) {
                    continue;
                }
                const Complex<R> w(z.re + R(dx) * h, z.im + R(dy) * h);
                const R gw = ev(w);
                if (gw < best_g) {
                    best_g = gw;
                    best_z = w;
                }
            }
        }
        if (best_g < g) {
            z = best_z;
            g = best_g;
        } else {
            h = h / R(2);
        }
    }
    if (complex_symmetric) {
        const RectTruncation<R>& base = ev.base();
        for (int k = 0; k < 12; ++k) {
            ++it;
            const SigmaResult<R> s = ev.sigma(z);
            const CVector<R> w = base.with_shift(z).shifted().multiply(s.right_vector);
            Complex<R> num;
            const long off = base.diag_offset();
            for (std::size_t c = 0; c < s.right_vector.size(); ++c) {
                num += s.right_vector[c] * w[static_cast<std::size_t>(static_cast<long>(c) + off)];
            }
            const Complex<R> den = bilinear(s.right_vector, s.right_vector);
            if (abs(den) == R(0)) {
                break;
            }
            const Complex<R> step = num / den;
            const Complex<R> zn = z + step;
            const R gn = ev(zn);
            if (!(gn < g)) {
                break;
            }
            z = zn;
            g = gn;
            if (abs(step) <= tol) {
                break;
            }
        }
    }
    return detail::finish(ev, z, R(0), R(0), it);
}

// ---------------------------------------------------------------------------
// Condition numbers, angles, eigenfunctions

struct ConditionResult {
    double kappa = 0;
    double kappa_check = 0; // same quantity at the check size
    double consistency = 0; // |kappa - kappa_check| / kappa
    long N = 0;
    long N_check = 0;
};

template <class R>
R condition_from_vectors(const OperatorSpec& op, const CVector<R>& phi, const CVector<R>& psi)
{
    const R nphi = norm2(phi);
    const R npsi = norm2(psi);
    const R pair = op.has(Symmetry::ComplexSymmetric) ? abs(bilinear(phi, phi)) : abs(dot(psi, phi));
    const R floor = R(10) * real_traits<R>::unit_roundoff() * nphi * npsi;
    if (!(pair > floor)) {
        throw Error("ill-conditioned beyond context: |<psi, phi>| is below roundoff");
    }
    return nphi * npsi / pair;
}

/// kappa_n = ||phi|| ||psi|| / |<psi, phi>| from near-null vectors at z.
template <class R>
R condition_at(const OperatorSpec& op, const Complex<R>& z, long N, const TruncationOptions& opts = {})
{
    const SigmaResult<R> s = smallest_singular(rectangular<R>(op, z, N, opts));
    CVector<R> psi;
    if (op.has(Symmetry::ComplexSymmetric)) {
        psi = s.right_vector;
        for (auto& x : psi) {
            x = conj(x);
        }
    } else {
        psi = left_null_vector<R>(op, z, N, opts);
    }
    return condition_from_vectors(op, s.right_vector, psi);
}

inline ConditionResult condition_number(const OperatorSpec& op, const Enclosure& enc, long N, const PrecisionContext& ctx,
                                        long N_check = 0)
{
    if (N_check <= 0) {
        N_check = N + std::max(20L, N / 4);
    }
    return with_precision(ctx, [&]<class R>() {
        const Complex<R> z(real_traits<R>::from_string(enc.center_re), real_traits<R>::from_string(enc.center_im));
        ConditionResult out;
        out.N = N;
        out.N_check = N_check;
        out.kappa = to_double(condition_at<R>(op, z, N));
        out.kappa_check = to_double(condition_at<R>(op, z, N_check));
        out.consistency = std::fabs(out.kappa - out.kappa_check) / out.kappa;
        return out;
    });
}

/// Angle between span{u} and span{w} in [0, pi/2]; shorter vectors are
/// padded with zeros.
template <class R>
R subspace_angle(const CVector<R>& u, const CVector<R>& w)
{
    const std::size_t n = std::max(u.size(), w.size());
    CVector<R> a = u;
    CVector<R> b = w;
    a.resize(n);
    b.resize(n);
    const R na = norm2(a);
    const R nb = norm2(b);
    if (na == R(0) || nb == R(0)) {
        throw Error("subspace_angle needs nonzero vectors");
    }
    // component of b orthogonal to a
    const Complex<R> p = dot(a, b) / (na * na);
    CVector<R> perp(n);
    for (std::size_t k = 0; k < n; ++k) {
        perp[k] = b[k] - p * a[k];
    }
    const R s = norm2(perp) / nb;
    const R c = abs(dot(a, b)) / (na * nb);
    return atan2(s, c);
}

template <class R>
struct EigenfunctionSamples {
    std::vector<double> x;
    CVector<R> values;
    std::vector<bool> underflow; // true where the value underflowed to 0
};

/// sum_m c_m u_m(x) with u_m the normalized Hermite functions, by the
/// three-term recurrence u_{m+1} = x sqrt(2/(m+1)) u_m - sqrt(m/(m+1)) u_{m-1}
/// run on a rescaled copy so that e^{-x^2/2} never underflows midway.
template <class R>
EigenfunctionSamples<R> evaluate_eigenfunction(const CVector<R>& coeffs, const std::vector<double>& xs)
{
    EigenfunctionSamples<R> out;
    out.x = xs;
    out.values.resize(xs.size());
    out.underflow.assign(xs.size(), false);
    const R quarter_pi = pow(real_traits<R>::pi(), R(-0.25));
    const R big(1e150);
    const R small(1e-150);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const R x(xs[j]);
        R log_scale = -x * x / R(2); // true u_m = scaled u_m * exp(log_scale)
        R um1(0);
        R um = quarter_pi;
        Complex<R> sum;
        for (std::size_t m = 0; m < coeffs.size(); ++m) {
            sum += coeffs[m] * um;
            const R mm(static_cast<double>(m));
            const R next = x * sqrt(R(2) / (mm + R(1))) * um - sqrt(mm / (mm + R(1))) * um1;
            um1 = um;
            um = next;
            if (abs(um) > big) {
                um = um * small;
                um1 = um1 * small;
                sum = sum * small;
                log_scale = log_scale + log(big);
            }
        }
        const R mag = abs(sum);
        if (mag == R(0)) {
            out.values[j] = Complex<R>();
            continue;
        }
        const R e = log_scale + log(mag);
        if (to_double(e) < -740.0) {
            out.values[j] = Complex<R>();
            out.underflow[j] = true;
            continue;
        }
        out.values[j] = sum * exp(log_scale);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Square truncations

struct SquareMode {
    Complex<double> z;
    double gamma = 0; // gamma_{N'} at z
    bool spurious = false;
};

/// Eigenvalues of the N x N square truncation, each annotated with gamma of
/// the rectangular truncation at N' = 2N.  Modes whose gamma stays above
/// `threshold` are flagged spurious.
inline std::vector<SquareMode> square_spectrum_demo(const OperatorSpec& op, long N, double threshold = 1e-2,
                                                    const WorkerPool& pool = WorkerPool(1))
{
    const std::vector<Complex<double>> a = square<double>(op, Complex<double>(), N);
    Eigen::MatrixXcd m(N, N);
    for (long r = 0; r < N; ++r) {
        for (long c = 0; c < N; ++c) {
            const auto& v = a[static_cast<std::size_t>(r * N + c)];
            m(r, c) = {v.re, v.im};
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
    if (es.info() != Eigen::Success) {
        throw Error("dense eigensolver failed on the square truncation");
    }
    std::vector<SquareMode> modes(static_cast<std::size_t>(N));
    for (long k = 0; k < N; ++k) {
        modes[static_cast<std::size_t>(k)].z = {es.eigenvalues()(k).real(), es.eigenvalues()(k).imag()};
    }
    std::sort(modes.begin(), modes.end(), [](const SquareMode& x, const SquareMode& y) {
        return x.z.re != y.z.re ? x.z.re < y.z.re : x.z.im < y.z.im;
    });
    const GammaEvaluator<double> ev(op, 2 * N);
    pool.parallel_for(modes.size(), [&](std::size_t k) {
        modes[k].gamma = ev(modes[k].z);
        modes[k].spurious = modes[k].gamma > threshold;
    });
    return modes;
}

// ---------------------------------------------------------------------------
// Bootstrap certification

/// Candidate pair as exact decimal strings, the input format of `certify`.
struct Candidate {
    std::string op_id;
    long index_n = 0;
    std::string z_re;
    std::string z_im = "0";
    long col_first = 0;
    long pad = 0;
    long gap_index_m = 0;
    double kappa_estimate = 1;
    double residual_floor = 0; // shared residual of a conjugate pair
    std::vector<std::string> hypotheses;
    std::vector<std::pair<std::string, std::string>> vector;

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["op_id"] = op_id;
        j["index_n"] = index_n;
        j["z"] = {{"re", z_re}, {"im", z_im}};
        j["col_first"] = col_first;
        j["pad"] = pad;
        j["gap_index_m"] = gap_index_m;
        j["kappa_estimate"] = kappa_estimate;
        j["residual_floor"] = residual_floor;
        j["hypotheses"] = hypotheses;
        nlohmann::json v = nlohmann::json::array();
        for (const auto& [re, im] : vector) {
            v.push_back({re, im});
        }
        j["vector"] = v;
        return j;
    }

    static Candidate from_json(const nlohmann::json& j)
    {
        Candidate c;
        c.op_id = j.at("op_id").get<std::string>();
        c.index_n = j.at("index_n").get<long>();
        c.z_re = j.at("z").at("re").get<std::string>();
        c.z_im = j.at("z").value("im", "0");
        c.col_first = j.value("col_first", 0L);
        c.pad = j.value("pad", 0L);
        c.gap_index_m = j.value("gap_index_m", 0L);
        c.kappa_estimate = j.value("kappa_estimate", 1.0);
        c.residual_floor = j.value("residual_floor", 0.0);
        c.hypotheses = j.value("hypotheses", std::vector<std::string>{});
        for (const auto& e : j.at("vector")) {
            c.vector.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        }
        if (c.vector.empty()) {
            throw Error("candidate vector is empty");
        }
        return c;
    }

    template <class R>
    CVector<R> vector_as() const
    {
        CVector<R> v;
        v.reserve(vector.size());
        for (const auto& [re, im] : vector) {
            v.emplace_back(real_traits<R>::from_string(re), real_traits<R>::from_string(im));
        }
        return v;
    }
};

namespace detail {

template <class R>
std::string exact_decimal(const R& x)
{
    if constexpr (std::is_same_v<R, double>) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    } else {
        // enough digits to round-trip the binary value
        const int digits = static_cast<int>(std::ceil(static_cast<double>(x.precision()) * 0.30103)) + 2;
        return x.to_string(digits);
    }
}

template <class R>
Candidate make_candidate(const std::string& op_id, long n, const Complex<R>& z, const CVector<R>& v, long col_first,
                         long pad, long m, double kappa, double floor, std::vector<std::string> hyps)
{
    Candidate c;
    c.op_id = op_id;
    c.index_n = n;
    c.z_re = exact_decimal(z.re);
    c.z_im = z.im == R(0) ? "0" : exact_decimal(z.im);
    c.col_first = col_first;
    c.pad = pad;
    c.gap_index_m = m;
    c.kappa_estimate = kappa;
    c.residual_floor = floor;
    c.hypotheses = std::move(hyps);
    c.vector.reserve(v.size());
    for (const auto& x : v) {
        c.vector.emplace_back(exact_decimal(x.re), exact_decimal(x.im));
    }
    return c;
}

} // namespace detail

/// Re-certifies a stored candidate from scratch.
inline Enclosure certify_candidate(const OperatorSpec& op, const LTPModel& model, const Candidate& cand,
                                   const PrecisionContext& ctx, const std::vector<Enclosure>& neighbors = {})
{
    if (cand.op_id != op.id) {
        throw CertificationError("candidate", "candidate is for operator '" + cand.op_id + "', not '" + op.id + "'");
    }
    return with_precision(ctx, [&]<class R>() {
        CertifyRequest<R> req;
        req.z = Complex<R>(real_traits<R>::from_string(cand.z_re), real_traits<R>::from_string(cand.z_im));
        req.v = cand.template vector_as<R>();
        req.col_first = cand.col_first;
        req.pad = cand.pad;
        req.index_n = cand.index_n;
        req.gap_index_m = cand.gap_index_m > 0 ? cand.gap_index_m : cand.index_n;
        req.kappa_estimate = cand.kappa_estimate;
        req.residual_floor = cand.residual_floor;
        req.neighbors = neighbors;
        req.extra_hypotheses = cand.hypotheses;
        req.precision = ctx.to_string();
        req.precision_digits = ctx.digits;
        return certify_eigenvalue(op, model, req);
    });
}

struct BootstrapOptions {
    std::optional<long> N;               // fixed starting N, otherwise the schedule
    std::optional<long> N_cap;           // default 5000 (double) / 3000 (BigFloat)
    std::optional<double> target_radius; // default 1e-8 (double) / 10^(-digits/2)
    int parallelism = 1;
    bool gap_scan = true;
    long lattice_half_width = 50; // integer-domain operators: block -w..w
};

struct BootstrapResult {
    std::vector<Enclosure> enclosures;
    std::vector<Candidate> candidates;
};

/// N(n) = max(200, 40 n) for operators on the naturals.
inline long default_N(long n) { return std::max(200L, 40 * n); }

inline double default_target_radius(const PrecisionContext& ctx)
{
    return ctx.is_double() ? 1e-8 : std::pow(10.0, -ctx.digits / 2.0);
}

namespace detail {

// Midpoint between consecutive asymptotic eigenvalues (0 below the first).
inline double asymptotic_split(const LTPModel& model, long k)
{
    if (k < 1) {
        return 0.0;
    }
    return 0.5 * (lambda_asymptotic<double>(k, model) + lambda_asymptotic<double>(k + 1, model));
}

// Missed-eigenvalue scan across [from, to]: at every mesh point the LTP
// distance bound for strip m must exceed the mesh step.  An eigenvalue in
// the gap would pull gamma_N below that threshold next to it.
inline void gap_scan(const OperatorSpec& op, const LTPModel& model, long m, double from, double to, long N,
                     const WorkerPool& pool)
{
    const double floor = gap_floor<double>(model);
    const long steps = std::max(1L, static_cast<long>(std::ceil((to - from) / (floor / 8))));
    const double h = (to - from) / static_cast<double>(steps);
    if (!(to > from)) {
        return;
    }
    const GammaEvaluator<double> ev(op, N);
    std::vector<double> bad(static_cast<std::size_t>(steps + 1), 0.0);
    pool.parallel_for(bad.size(), [&](std::size_t k) {
        const double t = from + h * static_cast<double>(k);
        const double g = ev(Complex<double>(t));
        const double d = dist_bound<double>(g, m, model);
        if (!(d > h)) {
            bad[k] = 1.0;
        }
    });
    for (std::size_t k = 0; k < bad.size(); ++k) {
        if (bad[k] != 0.0) {
            const double t = from + h * static_cast<double>(k);
            throw CertificationError("gap-scan", "possible missed eigenvalue near z = " + std::to_string(t) +
                                                     " in strip " + std::to_string(m));
        }
    }
}

template <class R>
double kappa_estimate(const OperatorSpec& op, const CVector<R>& v, const Complex<R>& z, long N,
                      const TruncationOptions& opts)
{
    if (op.has(Symmetry::ComplexSymmetric)) {
        CVector<R> psi = v;
        for (auto& x : psi) {
            x = conj(x);
        }
        return to_double(condition_from_vectors(op, v, psi));
    }
    return to_double(condition_at<R>(op, z, N, opts));
}

template <class R>
struct StripOutcome {
    Enclosure enclosure;
    Candidate candidate;
};

// Certification of lambda_n from a located minimum; tries the side-agnostic
// strip m = n + 1 first, then the left strip m = n at a candidate moved left
// of the estimated eigenvalue.
template <class R>
std::optional<StripOutcome<R>> certify_strip(const OperatorSpec& op, const LTPModel& model, long n,
                                             const GammaEvaluator<R>& ev, const EigenpairResult<R>& e,
                                             const std::vector<Enclosure>& done, const PrecisionContext& ctx,
                                             double target, std::string& why)
{
    std::vector<Enclosure> neighbors;
    if (!done.empty()) {
        neighbors.push_back(done.back());
    }
    auto attempt = [&](const Complex<R>& z, const CVector<R>& v, long m,
                       std::vector<std::string> hyps) -> std::optional<StripOutcome<R>> {
        CertifyRequest<R> req;
        req.z = z;
        req.v = v;
        req.col_first = e.col_first;
        req.pad = e.pad;
        req.index_n = n;
        req.gap_index_m = m;
        req.neighbors = neighbors;
        req.extra_hypotheses = hyps;
        req.precision = ctx.to_string();
        req.precision_digits = ctx.is_double() ? 16 : BigFloat::thread_digits();
        try {
            Enclosure enc = certify_eigenvalue(op, model, req);
            if (enc.radius_upper() <= target) {
                return StripOutcome<R>{enc, make_candidate(op.id, n, z, v, e.col_first, e.pad, m, 1.0, 0.0, hyps)};
            }
            why = "radius " + enc.radius + " above target";
        } catch (const CertificationError& err) {
            why = err.what();
        }
        return std::nullopt;
    };

    if (auto a = attempt(e.z_N, e.f_N, n + 1, {})) {
        return a;
    }
    const double kappa = kappa_estimate(op, e.f_N, e.z_N, e.N, {});
    const R u = real_traits<R>::unit_roundoff();
    const R shift = R(10 * kappa) * e.gamma_at_min + R(16) * u * abs(e.z_N.re);
    const Complex<R> zc(e.z_N.re - shift);
    const SigmaResult<R> s = ev.sigma(zc);
    return attempt(zc, s.right_vector, n, {"strip-side-estimate"});
}

inline BootstrapResult bootstrap_strip(const OperatorSpec& op, const LTPModel& model, long n_max,
                                       const PrecisionContext& ctx, const BootstrapOptions& opts)
{
    const WorkerPool pool(opts.parallelism);
    const double target = opts.target_radius.value_or(default_target_radius(ctx));
    const long cap = opts.N_cap.value_or(ctx.is_double() ? 5000L : 3000L);
    BootstrapResult out;
    for (long n = 1; n <= n_max; ++n) {
        const std::optional<Enclosure> prev =
            out.enclosures.empty() ? std::nullopt : std::optional<Enclosure>(out.enclosures.back());
        double lo = n == 1 ? 0.0 : asymptotic_split(model, n - 1);
        if (prev) {
            lo = std::max(lo, prev->real_range().hi + 1e-9 * std::max(1.0, std::fabs(prev->real_range().hi)));
        }
        const double hi = asymptotic_split(model, n);
        if (!(lo < hi)) {
            throw CertificationError("bracket", "empty bracket for lambda_" + std::to_string(n));
        }

        // precision: roundoff times kappa_bound(n) below the target, and
        // room for the residual to fall well under 1 / c_{n+1}
        PrecisionContext work = ctx;
        double z_tol = target * 1e-3;
        const double kb = kappa_bound<double>(n, model);
        if (ctx.is_double()) {
            if (!(real_traits<double>::unit_roundoff() * kb < target)) {
                throw CertificationError("precision", "double precision cannot reach radius " + std::to_string(target) +
                                                          " for lambda_" + std::to_string(n) +
                                                          "; use bigfloat precision");
            }
        } else {
            const int need = static_cast<int>(std::ceil(std::log10(kb / target))) + 5;
            const double log_c = log10(c_of_m<BigFloat>(n + 1, model)).to_double(MPFR_RNDU);
            const int need_c = std::isfinite(log_c) ? static_cast<int>(std::ceil(log_c)) + 8 : 0;
            work = PrecisionContext::bigfloat(std::max({ctx.digits, guard_digits(n), need, need_c}));
            // gamma <= |z - lambda| here, and dist_bound needs c_{n+1} gamma << 1
            z_tol = std::min(target * 1e-3, std::pow(10.0, -log_c - 3));
        }

        std::string why;
        bool certified = false;
        for (long N = opts.N.value_or(default_N(n)); N <= cap && !certified; N *= 2) {
            // float stage in double
            const GammaEvaluator<double> evd(op, N);
            const double tol_d = 2e-15 * std::max(1.0, hi);
            const EigenpairResult<double> ed = locate_minimum(evd, lo, hi, tol_d);

            if (opts.gap_scan) {
                const double floor = gap_floor<double>(model);
                const double from = prev ? prev->real_range().hi + floor / 8 : floor / 8;
                gap_scan(op, model, n, from, ed.z_N.re - floor / 8, N, pool);
            }

            std::optional<StripOutcome<double>> got_d;
            std::optional<Enclosure> enc;
            std::optional<Candidate> cand;
            if (ctx.is_double()) {
                if (auto r = certify_strip(op, model, n, evd, ed, out.enclosures, work, target, why)) {
                    enc = r->enclosure;
                    cand = r->candidate;
                }
            } else {
                PrecisionGuard g(work.digits);
                const GammaEvaluator<BigFloat> evb(op, N);
                const BigFloat z(ed.z_N.re);
                const BigFloat delta(1e-6 * std::max(1.0, std::fabs(ed.z_N.re)));
                const BigFloat tol_b = max(BigFloat(z_tol), ldexp(BigFloat(1), -static_cast<int>(BigFloat::thread_bits()) + 8) * abs(z));
                const EigenpairResult<BigFloat> eb = locate_minimum(evb, z - delta, z + delta, tol_b);
                if (auto r = certify_strip(op, model, n, evb, eb, out.enclosures, work, target, why)) {
                    enc = r->enclosure;
                    cand = r->candidate;
                }
            }
            if (enc) {
                out.enclosures.push_back(*enc);
                out.candidates.push_back(*cand);
                certified = true;
            }
        }
        if (!certified) {
            throw CertificationError("certify", "lambda_" + std::to_string(n) + " not certified up to N = " +
                                                    std::to_string(cap) + " (" + why + ")");
        }
    }
    return out;
}

inline Complex<double> mirror(const Complex<double>& z) { return conj(z); }

// PT mirror of a coefficient vector on the symmetric block -w..w.
template <class R>
CVector<R> pt_mirror(const CVector<R>& v)
{
    CVector<R> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[v.size() - 1 - k] = conj(v[k]);
    }
    return out;
}

struct ComplexSeed {
    Complex<double> z;
    double gamma;
};

// Candidate eigenvalues of an integer-domain operator: local minima of a
// coarse gamma grid at a small section, refined at the working size.
// The box grows until it holds `count` refined eigenvalues with room to
// spare, so that none of smaller modulus is missed by the grid.
inline std::vector<EigenpairResult<double>> complex_candidates(const OperatorSpec& op, long count, long N,
                                                              const TruncationOptions& opts, const WorkerPool& pool)
{
    const double h = 0.05;
    const long N_scan = std::min(N, 41L);
    const GammaEvaluator<double> scan(op, N_scan, TruncationOptions{1e-4});
    const GammaEvaluator<double> ev(op, N, opts);
    std::vector<EigenpairResult<double>> found;
    for (double radius = 2.0; radius <= 64.0; radius *= 1.5) {
        const long half = static_cast<long>(std::ceil(radius / h));
        const std::size_t side = static_cast<std::size_t>(2 * half + 1);
        std::vector<double> g(side * side);
        pool.parallel_for(g.size(), [&](std::size_t k) {
            const double re = -radius + h * static_cast<double>(k % side);
            const double im = -radius + h * static_cast<double>(k / side);
            g[k] = scan(Complex<double>(re, im));
        });
        std::vector<ComplexSeed> seeds;
        for (std::size_t iy = 1; iy + 1 < side; ++iy) {
            for (std::size_t ix = 1; ix + 1 < side; ++ix) {
                const double v = g[iy * side + ix];
                bool is_min = v < 0.25;
                for (int dy = -1; dy <= 1 && is_min; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx || dy) && g[(iy + dy) * side + ix + dx] <= v) {
                            is_min = false;
                            break;
                        }
                    }
                }
                if (is_min) {
                    seeds.push_back({{-radius + h * static_cast<double>(ix), -radius + h * static_cast<double>(iy)}, v});
                }
            }
        }
        std::vector<EigenpairResult<double>> refined(seeds.size());
        pool.parallel_for(seeds.size(), [&](std::size_t k) {
            refined[k] = locate_minimum_2d(ev, seeds[k].z, h / 2, 1e-15, op.has(Symmetry::ComplexSymmetric));
        });
        found.clear();
        for (auto& r : refined) {
            if (!(r.gamma_at_min < 1e-6)) {
                continue;
            }
            bool dup = false;
            for (const auto& f : found) {
                if (abs(f.z_N - r.z_N) < 1e-6) {
                    dup = true;
                    break;
                }
            }
            if (!dup) {
                found.push_back(std::move(r));
            }
        }
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
            const double ma = abs(a.z_N);
            const double mb = abs(b.z_N);
            if (std::fabs(ma - mb) > 1e-9 * std::max(1.0, ma)) {
                return ma < mb;
            }
            return a.z_N.im > b.z_N.im;
        });
        if (static_cast<long>(found.size()) >= count && abs(found[static_cast<std::size_t>(count - 1)].z_N) < radius - 4 * h) {
            found.resize(static_cast<std::size_t>(count));
            return found;
        }
    }
    throw CertificationError("search", "found only " + std::to_string(found.size()) + " of " + std::to_string(count) +
                                           " eigenvalues");
}

template <class R>
EigenpairResult<R> refine_in_context(const OperatorSpec& op, const EigenpairResult<double>& e, long N,
                                     const TruncationOptions& opts)
{
    if constexpr (std::is_same_v<R, double>) {
        (void)op;
        (void)N;
        (void)opts;
        return e;
    } else {
        const GammaEvaluator<R> ev(op, N, opts);
        const Complex<R> z(R(e.z_N.re), R(e.z_N.im));
        // Rayleigh steps only: the double minimum is already in the basin
        return locate_minimum_2d(ev, z, R(0), R(0), op.has(Symmetry::ComplexSymmetric));
    }
}

inline BootstrapResult bootstrap_generalized(const OperatorSpec& op, const LTPModel& model, long n_max,
                                             const PrecisionContext& ctx, const BootstrapOptions& opts)
{
    if (op.index_domain != IndexDomain::Integers && !op.banded()) {
        throw CertificationError("setup", "generalized bootstrap expects an integer-domain or banded operator");
    }
    const WorkerPool pool(opts.parallelism);
    const double target = opts.target_radius.value_or(std::max(default_target_radius(ctx), 1e-30));
    const long N = opts.N.value_or(2 * opts.lattice_half_width + 1);
    // residual budget: tail below a small fraction of the target residual
    const TruncationOptions topts{std::max(1e-300, target * 1e-4)};

    const std::vector<EigenpairResult<double>> cands = complex_candidates(op, n_max, N, topts, pool);

    return with_precision(ctx, [&]<class R>() {
        BootstrapResult out;
        const std::string prec = ctx.to_string();
        const int digits = ctx.is_double() ? 16 : ctx.digits;
        const bool pt = op.has(Symmetry::PTSymmetric) && op.index_domain == IndexDomain::Integers;
        std::vector<bool> done(cands.size(), false);
        for (std::size_t k = 0; k < cands.size(); ++k) {
            if (done[k]) {
                continue;
            }
            const EigenpairResult<R> e = refine_in_context<R>(op, cands[k], N, topts);
            const double kappa = kappa_estimate(op, e.f_N, e.z_N, N, topts);

            // conjugate partner further down the list, if any
            std::optional<std::size_t> partner;
            if (pt && cands[k].z_N.im > 1e-8) {
                for (std::size_t p = k + 1; p < cands.size(); ++p) {
                    if (!done[p] && abs(cands[p].z_N - conj(cands[k].z_N)) < 1e-6) {
                        partner = p;
                        break;
                    }
                }
            }

            auto request = [&](const Complex<R>& z, const CVector<R>& v, long index, const R& floor) {
                CertifyRequest<R> req;
                req.z = z;
                req.v = v;
                req.col_first = e.col_first;
                req.pad = e.pad;
                req.index_n = index;
                req.kappa_estimate = kappa;
                req.residual_floor = floor;
                req.neighbors = out.enclosures;
                req.precision = prec;
                req.precision_digits = digits;
                return req;
            };

            R floor(0);
            if (partner) {
                const R r1 = verified_residual(op, CIBox<R>(e.z_N), e.f_N, e.col_first, e.pad).hi();
                const R r2 = verified_residual(op, CIBox<R>(conj(e.z_N)), pt_mirror(e.f_N), e.col_first, e.pad).hi();
                floor = max(r1, r2);
            }
            CertifyRequest<R> req = request(e.z_N, e.f_N, static_cast<long>(k) + 1, floor);
            req.snap_real = pt && !partner;
            const Enclosure enc = certify_eigenvalue(op, model, req);
            if (enc.radius_upper() > target) {
                throw CertificationError("certify", "lambda_" + std::to_string(k + 1) + " radius " + enc.radius +
                                                        " above target");
            }
            out.enclosures.push_back(enc);
            out.candidates.push_back(make_candidate(op.id, static_cast<long>(k) + 1, e.z_N, e.f_N, e.col_first, e.pad,
                                                    0, kappa, to_double(floor), {}));
            done[k] = true;
            if (partner) {
                const Complex<R> zm = conj(e.z_N);
                const CVector<R> vm = pt_mirror(e.f_N);
                CertifyRequest<R> rm = request(zm, vm, static_cast<long>(*partner) + 1, floor);
                rm.neighbors = out.enclosures;
                out.enclosures.push_back(certify_eigenvalue(op, model, rm));
                out.candidates.push_back(make_candidate(op.id, static_cast<long>(*partner) + 1, zm, vm, e.col_first,
                                                        e.pad, 0, kappa, to_double(floor), {}));
                done[*partner] = true;
            }
        }
        std::vector<std::size_t> order(out.enclosures.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return out.enclosures[a].index_n < out.enclosures[b].index_n; });
        BootstrapResult sorted;
        for (std::size_t i : order) {
            sorted.enclosures.push_back(out.enclosures[i]);
            sorted.candidates.push_back(out.candidates[i]);
        }
        return sorted;
    });
}

} // namespace detail

/// Certifies the first n_max eigenvalues: in increasing order along the
/// real axis for strip models, by modulus for generalized models.
inline BootstrapResult bootstrap_certify(const OperatorSpec& op, const LTPModel& model, long n_max,
                                         const PrecisionContext& ctx, const BootstrapOptions& opts = {})
{
    if (n_max < 1) {
        throw Error("n_max must be >= 1");
    }
    if (model.kind == LTPModel::Kind::Strip) {
        if (op.index_domain != IndexDomain::NaturalNumbers || !op.banded()) {
            throw CertificationError("setup", "strip models need a banded operator on the naturals");
        }
        return detail::bootstrap_strip(op, model, n_max, ctx, opts);
    }
    return detail::bootstrap_generalized(op, model, n_max, ctx, opts);
}

} // namespace specgate
