#include "specgate/operator_model.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace specgate;

namespace {

// Gauss-Hermite rule for the weight e^{-x^2}: nodes from the Jacobi matrix
// (Golub-Welsch) refined by Newton in BigFloat, Christoffel weights.
struct GaussHermite {
    std::vector<BigFloat> x;
    std::vector<BigFloat> w;
};

// orthonormal Hermite polynomials p_0..p_{K-1} at x (weight e^{-x^2})
std::vector<BigFloat> hermite_values(const BigFloat& x, int K)
{
    std::vector<BigFloat> p(static_cast<std::size_t>(K + 1));
    p[0] = pow(bigfloat_pi(), BigFloat(-0.25));
    p[1] = sqrt(BigFloat(2)) * x * p[0];
    for (int m = 1; m < K; ++m) {
        p[m + 1] = x * sqrt(BigFloat(2) / BigFloat(m + 1)) * p[m] - sqrt(BigFloat(m) / BigFloat(m + 1)) * p[m - 1];
    }
    return p;
}

GaussHermite gauss_hermite(int K)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K, K);
    for (int m = 1; m < K; ++m) {
        J(m, m - 1) = J(m - 1, m) = std::sqrt(m / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite g;
    for (int k = 0; k < K; ++k) {
        BigFloat x(es.eigenvalues()(k));
        for (int it = 0; it < 8; ++it) {
            const auto p = hermite_values(x, K);
            // p_K' = sqrt(2K) p_{K-1}
            x = x - p[K] / (sqrt(BigFloat(2 * K)) * p[K - 1]);
        }
        const auto p = hermite_values(x, K);
        BigFloat s(0);
        for (int m = 0; m < K; ++m) {
            s = s + p[m] * p[m];
        }
        g.x.push_back(x);
        g.w.push_back(BigFloat(1) / s);
    }
    return g;
}

// <u_i, (p^2 + i x^3) u_j> with -u_j'' = (2j + 1 - x^2) u_j
Complex<BigFloat> cubic_quadrature(const GaussHermite& g, int i, int j)
{
    Complex<BigFloat> s;
    for (std::size_t k = 0; k < g.x.size(); ++k) {
        const auto p = hermite_values(g.x[k], std::max(i, j) + 1);
        const BigFloat x = g.x[k];
        const BigFloat base = g.w[k] * p[i] * p[j];
        s.re = s.re + base * (BigFloat(2 * j + 1) - x * x);
        s.im = s.im + base * x * x * x;
    }
    return s;
}

} // namespace

TEST(OperatorModel, CubicEntriesMatchQuadratureOracle)
{
    PrecisionGuard pg(50);
    const GaussHermite g = gauss_hermite(64);
    const OperatorSpec op = hermite_cubic_operator();
    double worst = 0;
    for (int i = 0; i <= 40; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const Complex<BigFloat> q = cubic_quadrature(g, i, j);
            const Complex<double> e = op.entry<double>(i, j);
            const double scale = std::max(1.0, std::hypot(q.re.to_double(), q.im.to_double()));
            const double err = std::hypot(e.re - q.re.to_double(), e.im - q.im.to_double()) / scale;
            worst = std::max(worst, err);
            const Complex<BigFloat> eb = op.entry<BigFloat>(i, j);
            EXPECT_LT(abs(eb - q).to_double(), 1e-35 * scale) << "entry (" << i << ", " << j << ")";
            const CIBox<BigFloat> box = op.entry_box<BigFloat>(i, j);
            EXPECT_TRUE(box.contains(eb));
        }
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(OperatorModel, CubicIsComplexSymmetricAndBanded)
{
    const OperatorSpec op = hermite_cubic_operator();
    for (long i = 0; i <= 200; ++i) {
        for (long j = 0; j <= 200; ++j) {
            const auto a = op.entry<double>(i, j);
            const auto b = op.entry<double>(j, i);
            ASSERT_EQ(a.re, b.re);
            ASSERT_EQ(a.im, b.im);
            if (std::labs(i - j) > 3) {
                ASSERT_EQ(a.re, 0.0);
                ASSERT_EQ(a.im, 0.0);
            }
        }
    }
    EXPECT_TRUE(op.has(Symmetry::ComplexSymmetric));
    EXPECT_THROW(op.entry<double>(-1, 0), StructuralError);
}

TEST(OperatorModel, EntryBoxesContainFloatingEntries)
{
    const OperatorSpec op = hermite_cubic_operator();
    for (long i = 0; i <= 60; ++i) {
        for (long j = std::max(0L, i - 3); j <= i + 3; ++j) {
            EXPECT_TRUE(op.entry_box<double>(i, j).contains(op.entry<double>(i, j)));
        }
    }
}

TEST(OperatorModel, LatticeIsPTSymmetric)
{
    const OperatorSpec op = lattice_longrange_operator();
    for (long i = -200; i <= 200; i += 7) {
        for (long j = -200; j <= 200; j += 3) {
            const auto a = op.entry<double>(i, j);
            const auto b = op.entry<double>(-i, -j);
            ASSERT_EQ(a.re, b.re);
            ASSERT_EQ(a.im, -b.im);
        }
    }
    const auto d = op.entry<double>(3, 3);
    EXPECT_DOUBLE_EQ(d.re, 0.9);
    EXPECT_DOUBLE_EQ(d.im, 2 * std::sin(3.0));
    EXPECT_DOUBLE_EQ(op.entry<double>(0, 5).re, 1.0 / 16);
}

TEST(OperatorModel, LatticeTailBoundDominatesExactTail)
{
    const OperatorSpec op = lattice_longrange_operator();
    for (long k = 0; k <= 60; ++k) {
        // both sides of a column beyond distance k: 2 sum_{d>k} 4^{1-d}
        long double exact = 0;
        for (long d = k + 1; d < k + 200; ++d) {
            exact += 2 * std::pow(4.0L, static_cast<long double>(1 - d));
        }
        EXPECT_GE(static_cast<long double>(op.column_tail_sq(k)), exact) << "k = " << k;
        EXPECT_GE(op.tail_bound(10, k) * op.tail_bound(10, k), 10 * static_cast<double>(exact) * (1 - 1e-12));
    }
    EXPECT_GT(op.tail_bound(5, 3), op.tail_bound(5, 4));
}

TEST(OperatorModel, HarmonicDiagonal)
{
    const OperatorSpec op = harmonic_oscillator_operator();
    for (long m = 0; m < 50; ++m) {
        EXPECT_EQ(op.entry<double>(m, m).re, 2.0 * m + 1);
        EXPECT_EQ(op.entry<double>(m, m + 1).re, 0.0);
    }
}

TEST(OperatorModel, AdjointConjugatesTheTranspose)
{
    const OperatorSpec op = hermite_cubic_operator();
    const OperatorSpec adj = op.adjoint();
    for (long i = 0; i < 20; ++i) {
        for (long j = 0; j < 20; ++j) {
            const auto a = adj.entry<double>(i, j);
            const auto b = op.entry<double>(j, i);
            EXPECT_EQ(a.re, b.re);
            EXPECT_EQ(a.im, -b.im);
        }
    }
    EXPECT_FALSE(adj.has(Symmetry::ComplexSymmetric));
}

TEST(OperatorModel, EntriesAreDeterministic)
{
    PrecisionGuard pg(40);
    const OperatorSpec a = builtin_operator("cubic");
    const OperatorSpec b = builtin_operator("cubic");
    for (long i = 0; i < 30; ++i) {
        for (long j = 0; j < 30; ++j) {
            EXPECT_EQ(a.entry<BigFloat>(i, j).re, b.entry<BigFloat>(i, j).re);
            EXPECT_EQ(a.entry<BigFloat>(i, j).im, b.entry<BigFloat>(i, j).im);
        }
    }
}

TEST(OperatorModel, ApplyColumnListsBandEntries)
{
    const OperatorSpec op = hermite_cubic_operator();
    const auto col = apply_column<double>(op, 1);
    // rows 0..4 for column 1
    ASSERT_EQ(col.size(), 5u);
    EXPECT_EQ(col.front().first, 0);
    EXPECT_EQ(col.back().first, 4);
}

TEST(OperatorModel, PluginReproducesHarmonicOscillator)
{
    const nlohmann::json j = {
        {"id", "shifted-harmonic"},
        {"bands", {{{"offset", 0}, {"coefficient", "2*n+1"}}, {{"offset", -1}, {"coefficient", "i/(n+1)"}}}},
        {"symmetry", {"real_spectrum"}}};
    const OperatorSpec op = operator_from_json(j);
    EXPECT_EQ(op.entry<double>(4, 4).re, 9.0);
    // offset -1 means entry(n, n - 1): below the diagonal
    EXPECT_DOUBLE_EQ(op.entry<double>(3, 2).im, 0.25);
    EXPECT_EQ(op.entry<double>(2, 3).im, 0.0);
    EXPECT_EQ(*op.lower_bandwidth, 1);
    EXPECT_EQ(*op.upper_bandwidth, 0);
}

TEST(OperatorModel, PluginRejectsUnknownKeysAndBadInput)
{
    EXPECT_THROW(operator_from_json({{"id", "x"}, {"bands", {{{"offset", 0}, {"coefficient", "1"}}}}, {"colour", 1}}),
                 StructuralError);
    EXPECT_THROW(operator_from_json({{"id", "x"}, {"bands", nlohmann::json::array()}}), StructuralError);
    EXPECT_THROW(operator_from_json({{"id", "x"}, {"bands", {{{"offset", 0}, {"coefficient", "q+1"}}}}}),
                 StructuralError);
    EXPECT_THROW(operator_from_json({{"id", "x"}, {"bands", {{{"offset", 0}, {"coefficient", "1+"}}}}}),
                 StructuralError);
    EXPECT_THROW(load_plugin("/nonexistent/plugin.json"), StructuralError);
    EXPECT_THROW(builtin_operator("nope"), StructuralError);
}

TEST(OperatorModel, PluginLongRangeTail)
{
    const nlohmann::json j = {
        {"id", "geo"},
        {"domain", "integers"},
        {"bands", {{{"offset", 0}, {"coefficient", "n^2/10"}}}},
        {"tail", {{"coefficient", "2^(1-d)"}, {"from_offset", 1}, {"column_bound", {{"constant", 2.67}, {"ratio", 0.5}}}}}};
    const OperatorSpec op = operator_from_json(j);
    EXPECT_FALSE(op.banded());
    EXPECT_DOUBLE_EQ(op.entry<double>(-3, 2).re, 1.0 / 16);
    EXPECT_GT(op.tail_bound(10, 4), 0.0);
    EXPECT_LT(op.tail_bound(10, 40), 1e-5);
}
