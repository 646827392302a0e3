#include "specgate/sigma_kernel.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace specgate;

namespace {

RectTruncation<double> dense_truncation(const Eigen::MatrixXcd& m)
{
    RectTruncation<double> t;
    t.N = m.cols();
    t.k = m.rows() - m.cols();
    t.matrix = BandMatrix<double>(m.rows(), m.cols(), -m.cols() + 1, m.rows() - 1);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            t.matrix.at(r, c) = {m(r, c).real(), m(r, c).imag()};
        }
    }
    return t;
}

} // namespace

TEST(Sigma, RandomRectanglesMatchEigenSvd)
{
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXcd m(8, 5);
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 5; ++c) {
                m(r, c) = {n01(rng), n01(rng)};
            }
        }
        // eigenvalues of T^* T, independently of any SVD code of ours
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.adjoint() * m);
        const double ref = std::sqrt(std::max(0.0, es.eigenvalues()(0)));
        const SigmaResult<double> s = smallest_singular(dense_truncation(m));
        EXPECT_NEAR(s.sigma, ref, 1e-10 * std::max(1.0, ref)) << "trial " << trial;
        EXPECT_NEAR(norm2(s.right_vector), 1.0, 1e-12);

        const DenseSvdMin<double> j = jacobi_svd_min(dense_truncation(m).matrix.dense(), 8, 5);
        EXPECT_NEAR(j.sigma, ref, 1e-10 * std::max(1.0, ref));
    }
}

TEST(Sigma, HarmonicGammaIsDistanceToSpectrum)
{
    const OperatorSpec op = harmonic_oscillator_operator();
    for (double x : {0.0, 1.0, 2.0, 2.7, 6.2, 9.0}) {
        for (double y : {0.0, 0.5, -1.5}) {
            double d = HUGE_VAL;
            for (int m = 0; m < 30; ++m) {
                d = std::min(d, std::hypot(2 * m + 1 - x, y));
            }
            EXPECT_NEAR(gamma<double>(op, {x, y}, 30), d, 1e-12) << x << " " << y;
        }
    }
}

TEST(Sigma, CubicGammaIsNonincreasingInN)
{
    const OperatorSpec op = hermite_cubic_operator();
    for (const Complex<double> z : {Complex<double>(10, 0.5), Complex<double>(4, -2), Complex<double>(20, 3)}) {
        double prev = HUGE_VAL;
        for (long N = 20; N <= 200; N += 30) {
            const double g = gamma<double>(op, z, N);
            EXPECT_LE(g, prev * (1 + 1e-12) + 1e-15);
            prev = g;
        }
    }
}

TEST(Sigma, SmallAtTableEigenvalues)
{
    const OperatorSpec op = hermite_cubic_operator();
    EXPECT_LT(gamma<double>(op, {1.1562670719881133, 0}, 200), 1e-13);
    EXPECT_LT(gamma<double>(op, {4.1092287528096515, 0}, 200), 1e-13);
    EXPECT_GT(gamma<double>(op, {2.5, 0}, 200), 0.1);
}

TEST(Sigma, BigFloatAgreesWithDouble)
{
    PrecisionGuard g(40);
    const OperatorSpec op = hermite_cubic_operator();
    const Complex<double> z(7.0, 0.3);
    const double d = gamma<double>(op, z, 80);
    const BigFloat b = gamma<BigFloat>(op, Complex<BigFloat>(BigFloat(7.0), BigFloat(0.3)), 80);
    EXPECT_NEAR(b.to_double(), d, 1e-12 * d);
}

TEST(Sigma, LatticeIncludesTailDefect)
{
    const OperatorSpec op = lattice_longrange_operator();
    const RectTruncation<double> t = rectangular<double>(op, Complex<double>(0.3, 0.1), 21, {1e-6});
    const double s = smallest_singular(t).sigma;
    EXPECT_DOUBLE_EQ(gamma<double>(op, {0.3, 0.1}, 21, {1e-6}), s + t.tail_defect);
}

TEST(Sigma, LeftVectorOfNonSymmetricOperator)
{
    // upper bidiagonal plugin: entry(n, n) = n + 1, entry(n, n + 1) = 1/2
    const OperatorSpec op = operator_from_json(
        {{"id", "bidiag"}, {"bands", {{{"offset", 0}, {"coefficient", "n+1"}}, {{"offset", 1}, {"coefficient", "1/2"}}}}});
    const Complex<double> z(2.0, 0.0);
    const CVector<double> psi = left_null_vector<double>(op, z, 40);
    // psi^* (H - z) restricted to the block is small
    const double g = gamma<double>(op.adjoint(), conj(z), 40);
    EXPECT_LT(g, 1e-10);
    EXPECT_NEAR(norm2(psi), 1.0, 1e-12);

    const OperatorSpec cubic = hermite_cubic_operator();
    const Complex<double> w(1.1562670719881133, 0);
    const CVector<double> l = left_null_vector<double>(cubic, w, 100);
    const SigmaResult<double> r = smallest_singular(rectangular<double>(cubic, w, 100));
    for (std::size_t k = 0; k < l.size(); ++k) {
        EXPECT_EQ(l[k].re, r.right_vector[k].re);
        EXPECT_EQ(l[k].im, -r.right_vector[k].im);
    }
}

TEST(Sigma, ResidualNormMatchesHighPrecision)
{
    // near an eigenvalue T x suffers heavy cancellation; the double result
    // must still be within an ulp of the exact norm of the same data
    const OperatorSpec op = hermite_cubic_operator();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> jitter(-1e-9, 1e-9);
    for (double lam : {1.1562670719881133, 11.314421820195804, 23.76674043548582}) {
        const Complex<double> z(lam + jitter(rng), jitter(rng));
        const RectTruncation<double> t = rectangular<double>(op, z, 240);
        const SigmaResult<double> s = smallest_singular(t);
        const BandMatrix<double> a = t.shifted();

        PrecisionGuard g(50);
        BandMatrix<BigFloat> ab(a.rows(), a.cols(), a.dmin(), a.dmax());
        CVector<BigFloat> xb(a.cols());
        for (std::size_t c = 0; c < a.cols(); ++c) {
            xb[c] = {BigFloat(s.right_vector[c].re), BigFloat(s.right_vector[c].im)};
            const auto [lo, hi] = a.column_rows(c);
            for (std::size_t r = lo; r < hi; ++r) {
                ab.at(r, c) = {BigFloat(a.at(r, c).re), BigFloat(a.at(r, c).im)};
            }
        }
        const double exact = norm2(ab.multiply(xb)).to_double();
        EXPECT_LE(std::fabs(s.sigma - exact), std::nextafter(exact, HUGE_VAL) - exact) << lam;
        EXPECT_LT(s.sigma, 1e-6);
    }
}

TEST(Sigma, UpperBoundPropertyOnRandomPoints)
{
    // gamma_300 >= gamma_600 up to the kernel's own error estimate; exact
    // ties at convergence are decided at 40 digits in the acceptance run
    const OperatorSpec op = hermite_cubic_operator();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> re(0, 40);
    std::uniform_real_distribution<double> im(-10, 10);
    for (int k = 0; k < 50; ++k) {
        const Complex<double> z(re(rng), im(rng));
        const SigmaResult<double> a = smallest_singular(rectangular<double>(op, z, 300));
        const SigmaResult<double> b = smallest_singular(rectangular<double>(op, z, 600));
        EXPECT_LE(b.sigma, a.sigma + a.sigma * a.rel_err_est + b.sigma * b.rel_err_est) << z.re << " " << z.im;
    }
}

TEST(Sigma, ErrorEstimateCoversHighPrecisionValue)
{
    const OperatorSpec op = hermite_cubic_operator();
    for (const Complex<double> z : {Complex<double>(37.699986873004036, -3.228139473789664),
                                    Complex<double>(4.1092287528, 1e-9), Complex<double>(12, 5)}) {
        const SigmaResult<double> d = smallest_singular(rectangular<double>(op, z, 300));
        PrecisionGuard g(40);
        const BigFloat ref =
            smallest_singular(rectangular<BigFloat>(op, Complex<BigFloat>(BigFloat(z.re), BigFloat(z.im)), 300)).sigma;
        EXPECT_LE(std::fabs(d.sigma - ref.to_double()), d.sigma * d.rel_err_est) << z.re;
    }
}
