// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Criteria 1 and 2 drive the command-line tool end to end; the others call
// the library directly.

#include "specgate/specgate.hpp"

#include "json.hpp"

#include <gmpxx.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace specgate;
using nlohmann::json;

namespace {

const std::array<const char*, 10> kTable = {
    "1.1562670719881132937992191779999",  "4.1092287528096515358436684785613",
    "7.5622738549788280413518091106314",  "11.3144218201958044022337839484269",
    "15.2915537503925323881816307917519", "19.4515291306917283146861117141044",
    "23.7667404354858191315580259687899", "28.2175249729811932975950538782689",
    "32.7890827818629574924473714850463", "37.4698253605160468664288735945305"};
const char* kLambda100 = "627.6947122484365113526737029011536";

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs the CLI, returns (exit code, stdout).
std::pair<int, std::string> run_cli(const std::string& args)
{
    const std::string cmd = std::string(SPECGATE_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        return {-1, ""};
    }
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) {
        out.append(buf.data(), n);
    }
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// First `digits` significant digits of a decimal string (sign and point dropped).
std::string significant(const std::string& s, int digits)
{
    std::string d;
    bool started = false;
    for (char c : s) {
        if (c < '0' || c > '9') {
            continue;
        }
        if (!started && c == '0') {
            continue;
        }
        started = true;
        d += c;
        if (static_cast<int>(d.size()) == digits) {
            break;
        }
    }
    return d;
}

Outcome criterion1()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto [code, out] = run_cli("eigs --op cubic --n 5 --precision double --parallelism 1");
    const double t = seconds_since(t0);
    if (code != 0) {
        return {false, "eigs exited with " + std::to_string(code)};
    }
    const json a = json::parse(out);
    if (a.size() != 5) {
        return {false, "expected 5 enclosures, got " + std::to_string(a.size())};
    }
    double worst = 0;
    for (std::size_t k = 0; k < 5; ++k) {
        const Enclosure e = Enclosure::from_json(a[k]);
        if (!e.contains(kTable[k])) {
            return {false, "lambda_" + std::to_string(k + 1) + " not contained"};
        }
        worst = std::max(worst, e.radius_upper());
    }
    std::ostringstream d;
    d << "5/5 contain the reference values, max radius " << worst << ", " << t << " s";
    return {worst <= 1e-8 && t <= 120, d.str()};
}

Outcome criterion2()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto [code, out] = run_cli("eigs --op cubic --n 10 --precision bigfloat:60 --parallelism 1");
    const double t = seconds_since(t0);
    if (code != 0) {
        return {false, "eigs exited with " + std::to_string(code)};
    }
    const json a = json::parse(out);
    if (a.size() != 10) {
        return {false, "expected 10 enclosures"};
    }
    double worst = 0;
    int digit_matches = 0;
    int contained = 0;
    for (std::size_t k = 0; k < 10; ++k) {
        const Enclosure e = Enclosure::from_json(a[k]);
        contained += e.contains(kTable[k]);
        digit_matches += significant(e.center_re, 30) == significant(kTable[k], 30);
        worst = std::max(worst, e.radius_upper());
    }
    const int guard = guard_digits(100);
    std::ostringstream d;
    // The table rounds to ~31 digits, so containment in a 1e-31 disk is
    // reported but not required; the contract is radius plus digit match.
    d << digit_matches << "/10 match 30 digits, max radius " << worst << ", guard_digits(100) = " << guard << ", "
      << t << " s (table value inside disk: " << contained << "/10)";
    return {digit_matches == 10 && worst <= 1e-30 && guard >= 16 + 79 && t <= 1800, d.str()};
}

Outcome criterion3()
{
    const auto t0 = std::chrono::steady_clock::now();
    const OperatorSpec op = hermite_cubic_operator();
    const PrecisionContext ctx = PrecisionContext::bigfloat(40);
    const BootstrapResult r = bootstrap_certify(op, cubic_ltp_model(), 12, ctx);
    std::ostringstream d;
    bool ok = true;
    d << "rescaled:";
    for (const auto& e : r.enclosures) {
        if (e.index_n < 6) {
            continue;
        }
        const ConditionResult c = condition_number(op, e, e.N, ctx);
        const double n = static_cast<double>(e.index_n);
        const double v = c.kappa * std::exp(-n * M_PI / std::sqrt(3.0)) * std::pow(n, 0.25);
        ok = ok && v >= 0.14 && v <= 0.21;
        d << " " << std::setprecision(4) << v;
    }
    const double t = seconds_since(t0);
    d << ", " << std::setprecision(3) << t << " s";
    return {ok && t <= 600, d.str()};
}

Outcome criterion4()
{
    const auto t0 = std::chrono::steady_clock::now();
    BootstrapOptions o;
    o.target_radius = 1e-10;
    const BootstrapResult r =
        bootstrap_certify(lattice_longrange_operator(), lattice_ltp_model(), 11, PrecisionContext::machine_double(), o);
    // reference values carry 11 decimals: allow half a unit in the last place
    const std::string slack = "5e-12";
    struct Ref {
        const char* re;
        const char* im;
    };
    const std::array<Ref, 5> refs = {{{"-0.04918293439", "0"},
                                      {"1.35013464198", "0"},
                                      {"2.67955625201", "0"},
                                      {"-0.03617194872", "0.61505608475"},
                                      {"-0.03617194872", "-0.61505608475"}}};
    int found = 0;
    double worst = 0;
    for (const auto& ref : refs) {
        for (const auto& e : r.enclosures) {
            if (e.contains(ref.re, ref.im, slack)) {
                ++found;
                worst = std::max(worst, e.radius_upper());
                break;
            }
        }
    }
    // conjugate pairs: identical real parts and radii, negated imaginary parts
    int pairs = 0;
    int exact_pairs = 0;
    for (const auto& e : r.enclosures) {
        if (e.is_real() || e.center_im[0] == '-') {
            continue;
        }
        ++pairs;
        for (const auto& f : r.enclosures) {
            if (f.center_im == "-" + e.center_im && f.center_re == e.center_re && f.radius == e.radius) {
                ++exact_pairs;
            }
        }
    }
    std::ostringstream d;
    d << found << "/5 reference values enclosed, max radius " << worst << ", " << exact_pairs << "/" << pairs
      << " conjugate pairs exact, " << seconds_since(t0) << " s";
    return {found == 5 && worst <= 1e-10 && pairs > 0 && exact_pairs == pairs, d.str()};
}

Outcome criterion5()
{
    // Where gamma_150 has converged the exact gap to gamma_300 falls to
    // ~1e-22 relative, below double resolution, so the decision runs at 40
    // digits (values rounded up to double).  The double count is reported.
    const OperatorSpec op = hermite_cubic_operator();
    const Region region{0, 30, -15, 15};
    auto count = [&](const PrecisionContext& ctx, double& worst) {
        const GridResult a = pseudospectrum_grid(op, region, 40, 40, 150, ctx);
        const GridResult b = pseudospectrum_grid(op, region, 40, 40, 300, ctx);
        long violations = 0;
        worst = 0;
        for (std::size_t k = 0; k < a.values.size(); ++k) {
            if (!(b.values[k] <= a.values[k])) {
                ++violations;
                worst = std::max(worst, (b.values[k] - a.values[k]) / a.values[k]);
            }
        }
        return violations;
    };
    double worst = 0;
    double worst_double = 0;
    const long violations = count(PrecisionContext::bigfloat(40), worst);
    const long double_violations = count(PrecisionContext::machine_double(), worst_double);
    std::ostringstream d;
    d << violations << " violations of gamma_300 <= gamma_150 on 1600 points at 40 digits";
    if (violations) {
        d << " (worst relative excess " << worst << ")";
    }
    d << "; double: " << double_violations << " ulp-level ties (worst " << worst_double << ")";
    return {violations == 0, d.str()};
}

Outcome criterion6()
{
    const OperatorSpec op = hermite_cubic_operator();
    const auto modes = square_spectrum_demo(op, 60);
    long spurious = 0;
    double max_gamma = 0;
    for (const auto& m : modes) {
        spurious += m.gamma > 1e-2;
        max_gamma = std::max(max_gamma, m.gamma);
    }
    const BootstrapResult r = bootstrap_certify(op, cubic_ltp_model(), 5, PrecisionContext::machine_double());
    double worst_res = 0;
    for (const auto& e : r.enclosures) {
        worst_res = std::max(worst_res, rounding::decimal<double>(e.residual_upper, true));
    }
    std::ostringstream d;
    d << spurious << " square-truncation modes with gamma_120 > 1e-2 (max " << max_gamma
      << "), certified residuals <= " << worst_res;
    return {spurious >= 1 && worst_res < 1e-8, d.str()};
}

Outcome criterion7()
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-30, 30);
    auto value = [&] { return std::ldexp(unit(rng), ex(rng)); };
    long violations = 0;
    const int cases = 100000;
    for (int c = 0; c < cases; ++c) {
        double a = value();
        double b = value();
        double x = value();
        double y = value();
        if (b < a) {
            std::swap(a, b);
        }
        if (y < x) {
            std::swap(x, y);
        }
        const Interval<double> u(a, b);
        const Interval<double> v(x, y);
        const mpq_class p = (mpq_class(a) + mpq_class(b)) / 2;
        const mpq_class q = mpq_class(y);
        mpq_class exact;
        Interval<double> r;
        switch (c % 4) {
        case 0:
            r = u + v;
            exact = p + q;
            break;
        case 1:
            r = u - v;
            exact = p - q;
            break;
        case 2:
            r = u * v;
            exact = p * q;
            break;
        default:
            if (v.contains_zero()) {
                r = u + v;
                exact = p + q;
            } else {
                r = u / v;
                exact = p / q;
            }
        }
        violations += !(mpq_class(r.lo()) <= exact && exact <= mpq_class(r.hi()));
    }

    int runs_ok = 0;
    const OperatorSpec h = harmonic_oscillator_operator();
    for (int run = 0; run < 100; ++run) {
        BootstrapOptions o;
        o.N = 10 + run;
        const long n = 1 + run % 5;
        const BootstrapResult res = bootstrap_certify(h, harmonic_ltp_model(), n, PrecisionContext::machine_double(), o);
        bool ok = static_cast<long>(res.enclosures.size()) == n;
        for (const auto& e : res.enclosures) {
            ok = ok && e.contains(std::to_string(2 * e.index_n - 1));
        }
        runs_ok += ok;
    }
    std::ostringstream d;
    d << violations << " containment violations in " << cases << " rational-oracle cases, harmonic " << runs_ok
      << "/100 runs contain the odd integers";
    return {violations == 0 && runs_ok == 100, d.str()};
}

Outcome criterion8()
{
    const OperatorSpec op = hermite_cubic_operator();
    std::vector<double> ns;
    std::vector<double> lg;
    for (long N = 40; N <= 200; N += 10) {
        const GammaEvaluator<double> ev(op, N);
        const EigenpairResult<double> r = locate_minimum(ev, 14.5, 16.0, 1e-13);
        ns.push_back(static_cast<double>(N));
        lg.push_back(std::log10(r.gamma_at_min));
    }
    // least-squares slope
    const double n = static_cast<double>(ns.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        sx += ns[k];
        sy += lg[k];
        sxx += ns[k] * ns[k];
        sxy += ns[k] * lg[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    const EigenpairResult<double> f120 = locate_minimum<double>(op, 14.5, 16.0, 120, 1e-13);
    const EigenpairResult<double> f480 = locate_minimum<double>(op, 14.5, 16.0, 480, 1e-13);
    const double angle = subspace_angle(f120.f_N, f480.f_N);
    std::ostringstream d;
    d << "slope " << slope << " per basis function, angle(f_120, f_480) = " << angle;
    return {slope <= -0.02 && angle < 1e-6, d.str()};
}

Outcome criterion9()
{
    const double l100 = lambda_asymptotic<double>(100);
    const double ref = std::strtod(kLambda100, nullptr);
    double prev = 0;
    bool increasing = true;
    for (long n = 1; n <= 1000; ++n) {
        const double v = lambda_asymptotic<double>(n);
        increasing = increasing && v > prev;
        prev = v;
    }
    std::ostringstream d;
    d << std::setprecision(10) << "lambda_asymptotic(100) = " << l100 << " (|diff| = " << std::fabs(l100 - ref)
      << "), strictly increasing to 1000: " << (increasing ? "yes" : "no");
    return {std::fabs(l100 - ref) <= 0.2 && increasing, d.str()};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 reference eigenvalues (double)", criterion1},
        {"2 reference eigenvalues (bigfloat:60)", criterion2},
        {"3 condition number asymptote", criterion3},
        {"4 lattice operator enclosures", criterion4},
        {"5 monotonicity in N", criterion5},
        {"6 spurious square-truncation modes", criterion6},
        {"7 interval soundness", criterion7},
        {"8 residual decay and subspace angle", criterion8},
        {"9 asymptotic eigenvalue formula", criterion9},
    };
    // optional filter: acceptance 3 5 runs criteria 3 and 5 only
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name.substr(0, 1)) == only.end()) {
            continue;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
