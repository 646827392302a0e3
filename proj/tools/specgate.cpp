// specgate: certified eigenvalues of non-self-adjoint operators.
//
//   specgate eigs --op cubic --n 5 --precision double
//   specgate pseudospectrum --op cubic --N 150 --re-min 0 --re-max 30 --im-min -15 --im-max 15
//   specgate certify --op cubic --candidate cand.json
//   specgate condition --op cubic --n 12 --from 6 --precision bigfloat:40
//   specgate eigenfunction --op harmonic --n 1 --x-min -4 --x-max 4 --samples 81
//   specgate operators
//
// Exit codes: 0 success, 1 usage or configuration error, 2 certification
// failure (the failing stage is named on stderr).

#include "specgate/specgate.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace specgate;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JobConfig {
    std::string subcommand;
    std::string op = "cubic";
    std::string plugin;
    std::string precision = "double";
    int parallelism = default_parallelism(); // hardware threads; results do not depend on it
    std::string output;
    std::string format;
    std::optional<long> N;
    long n = 1;
    long from = 1;
    std::optional<double> target_radius;
    Region region{0, 30, -15, 15};
    long nx = 40;
    long ny = 40;
    std::string candidate;
    std::string candidates_out;
    double x_min = -8;
    double x_max = 8;
    long samples = 161;

    json to_json() const
    {
        json j;
        j["subcommand"] = subcommand;
        j["op"] = op;
        j["plugin"] = plugin;
        j["precision"] = precision;
        j["parallelism"] = parallelism;
        j["output"] = output;
        j["format"] = format;
        j["N"] = N ? json(*N) : json(nullptr);
        j["n"] = n;
        j["from"] = from;
        j["target_radius"] = target_radius ? json(*target_radius) : json(nullptr);
        j["region"] = {{"re_min", region.re_lo}, {"re_max", region.re_hi}, {"im_min", region.im_lo}, {"im_max", region.im_hi}};
        j["nx"] = nx;
        j["ny"] = ny;
        j["candidate"] = candidate;
        j["candidates_out"] = candidates_out;
        j["x_min"] = x_min;
        j["x_max"] = x_max;
        j["samples"] = samples;
        return j;
    }

    static JobConfig from_json(const json& j)
    {
        static const std::vector<std::string> keys = {
            "subcommand", "op", "plugin", "precision", "parallelism", "output", "format", "N", "n", "from",
            "target_radius", "region", "nx", "ny", "candidate", "candidates_out", "x_min", "x_max", "samples"};
        if (!j.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        for (const auto& [k, v] : j.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                throw ConfigError("unknown config key '" + k + "'");
            }
        }
        JobConfig c;
        try {
            c.subcommand = j.value("subcommand", c.subcommand);
            c.op = j.value("op", c.op);
            c.plugin = j.value("plugin", c.plugin);
            c.precision = j.value("precision", c.precision);
            c.parallelism = j.value("parallelism", c.parallelism);
            c.output = j.value("output", c.output);
            c.format = j.value("format", c.format);
            if (j.contains("N") && !j["N"].is_null()) {
                c.N = j["N"].get<long>();
            }
            c.n = j.value("n", c.n);
            c.from = j.value("from", c.from);
            if (j.contains("target_radius") && !j["target_radius"].is_null()) {
                c.target_radius = j["target_radius"].get<double>();
            }
            if (j.contains("region")) {
                const json& r = j["region"];
                for (const auto& [k, v] : r.items()) {
                    if (k != "re_min" && k != "re_max" && k != "im_min" && k != "im_max") {
                        throw ConfigError("unknown region key '" + k + "'");
                    }
                }
                c.region = {r.value("re_min", c.region.re_lo), r.value("re_max", c.region.re_hi),
                            r.value("im_min", c.region.im_lo), r.value("im_max", c.region.im_hi)};
            }
            c.nx = j.value("nx", c.nx);
            c.ny = j.value("ny", c.ny);
            c.candidate = j.value("candidate", c.candidate);
            c.candidates_out = j.value("candidates_out", c.candidates_out);
            c.x_min = j.value("x_min", c.x_min);
            c.x_max = j.value("x_max", c.x_max);
            c.samples = j.value("samples", c.samples);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad config value: ") + e.what());
        }
        return c;
    }
};

struct Problem {
    OperatorSpec op;
    std::optional<LTPModel> model;
};

Problem load_problem(const JobConfig& cfg)
{
    Problem p;
    if (!cfg.plugin.empty()) {
        PluginSpec spec = load_plugin(cfg.plugin);
        p.op = std::move(spec.op);
        if (!spec.ltp.is_null()) {
            p.model = LTPModel::from_json(spec.ltp);
        }
        return p;
    }
    p.op = builtin_operator(cfg.op);
    p.model = builtin_ltp_model(cfg.op);
    return p;
}

const LTPModel& require_model(const Problem& p)
{
    if (!p.model) {
        throw ConfigError("operator '" + p.op.id + "' has no LTP model; certification is unavailable");
    }
    return *p.model;
}

void emit(const JobConfig& cfg, const std::string& text)
{
    if (cfg.output.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + cfg.output);
    }
    f << text;
}

std::string csv_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

BootstrapOptions bootstrap_options(const JobConfig& cfg)
{
    BootstrapOptions o;
    o.N = cfg.N;
    o.target_radius = cfg.target_radius;
    o.parallelism = cfg.parallelism;
    return o;
}

BootstrapResult run_bootstrap(const Problem& p, const JobConfig& cfg, long n_max, const PrecisionContext& ctx)
{
    return bootstrap_certify(p.op, require_model(p), n_max, ctx, bootstrap_options(cfg));
}

int cmd_eigs(const JobConfig& cfg, const PrecisionContext& ctx)
{
    const Problem p = load_problem(cfg);
    if (cfg.n < 1) {
        throw ConfigError("--n must be >= 1");
    }
    const BootstrapResult r = run_bootstrap(p, cfg, cfg.n, ctx);
    if (!cfg.candidates_out.empty()) {
        json c = json::array();
        for (const auto& cand : r.candidates) {
            c.push_back(cand.to_json());
        }
        std::ofstream f(cfg.candidates_out, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write " + cfg.candidates_out);
        }
        f << c.dump(2) << "\n";
    }
    if (cfg.format == "csv") {
        std::string out = "index,center_re,center_im,radius,residual_upper\n";
        for (const auto& e : r.enclosures) {
            out += std::to_string(e.index_n) + "," + e.center_re + "," + e.center_im + "," + e.radius + "," +
                   e.residual_upper + "\n";
        }
        emit(cfg, out);
        return 0;
    }
    json a = json::array();
    for (const auto& e : r.enclosures) {
        a.push_back(e.to_json());
    }
    emit(cfg, a.dump(2) + "\n");
    return 0;
}

int cmd_pseudospectrum(const JobConfig& cfg, const PrecisionContext& ctx)
{
    const Problem p = load_problem(cfg);
    if (cfg.nx < 2 || cfg.ny < 2) {
        throw ConfigError("grid needs --nx and --ny >= 2");
    }
    if (!(cfg.region.re_lo < cfg.region.re_hi) || !(cfg.region.im_lo < cfg.region.im_hi)) {
        throw ConfigError("malformed region: need re-min < re-max and im-min < im-max");
    }
    const long N = cfg.N.value_or(150);
    const WorkerPool pool(cfg.parallelism);
    const GridResult g = pseudospectrum_grid(p.op, cfg.region, static_cast<std::size_t>(cfg.nx),
                                             static_cast<std::size_t>(cfg.ny), N, ctx, pool);
    if (cfg.format == "json") {
        json j;
        j["op_id"] = g.op_id;
        j["N"] = g.N;
        j["nx"] = g.nx;
        j["ny"] = g.ny;
        j["region"] = {{"re_min", g.region.re_lo}, {"re_max", g.region.re_hi}, {"im_min", g.region.im_lo},
                       {"im_max", g.region.im_hi}};
        j["gamma"] = g.values;
        emit(cfg, j.dump() + "\n");
        return 0;
    }
    std::string out = "re,im,gamma\n";
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            out += csv_number(g.re(ix)) + "," + csv_number(g.im(iy)) + "," + csv_number(g.at(ix, iy)) + "\n";
        }
    }
    emit(cfg, out);
    return 0;
}

std::vector<Candidate> read_candidates(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read candidate file " + path);
    }
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("candidate file is not JSON: ") + e.what());
    }
    std::vector<Candidate> out;
    try {
        if (j.is_array()) {
            for (const auto& c : j) {
                out.push_back(Candidate::from_json(c));
            }
        } else {
            out.push_back(Candidate::from_json(j));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed candidate: ") + e.what());
    }
    if (out.empty()) {
        throw ConfigError("candidate file holds no candidates");
    }
    return out;
}

int cmd_certify(const JobConfig& cfg, const PrecisionContext& ctx)
{
    if (cfg.candidate.empty()) {
        throw ConfigError("certify needs --candidate <file>");
    }
    const Problem p = load_problem(cfg);
    const LTPModel& model = require_model(p);
    const std::vector<Candidate> cands = read_candidates(cfg.candidate);
    const double target = cfg.target_radius.value_or(default_target_radius(ctx));
    std::vector<Enclosure> done;
    json a = json::array();
    for (const auto& c : cands) {
        // earlier candidates of the same file act as neighbors for attribution
        const Enclosure e = certify_candidate(p.op, model, c, ctx, done);
        if (!(e.radius_upper() <= target)) {
            throw CertificationError("radius", "lambda_" + std::to_string(c.index_n) + " enclosure radius " +
                                                   e.radius + " exceeds the target " + csv_number(target));
        }
        done.push_back(e);
        a.push_back(e.to_json());
    }
    emit(cfg, (cands.size() == 1 ? a[0] : a).dump(2) + "\n");
    return 0;
}

int cmd_condition(const JobConfig& cfg, const PrecisionContext& ctx)
{
    const Problem p = load_problem(cfg);
    if (cfg.n < 1 || cfg.from < 1 || cfg.from > cfg.n) {
        throw ConfigError("need 1 <= --from <= --n");
    }
    const BootstrapResult r = run_bootstrap(p, cfg, cfg.n, ctx);
    json a = json::array();
    for (const auto& e : r.enclosures) {
        if (e.index_n < cfg.from) {
            continue;
        }
        const ConditionResult c = condition_number(p.op, e, e.N, ctx);
        const double n = static_cast<double>(e.index_n);
        const double rescaled = c.kappa * std::exp(-n * M_PI / std::sqrt(3.0)) * std::pow(n, 0.25);
        a.push_back({{"n", e.index_n},
                     {"kappa", c.kappa},
                     {"rescaled", rescaled},
                     {"kappa_check", c.kappa_check},
                     {"N", c.N},
                     {"N_check", c.N_check}});
    }
    if (cfg.format == "csv") {
        std::string out = "n,kappa,rescaled\n";
        for (const auto& row : a) {
            out += std::to_string(row["n"].get<long>()) + "," + csv_number(row["kappa"].get<double>()) + "," +
                   csv_number(row["rescaled"].get<double>()) + "\n";
        }
        emit(cfg, out);
        return 0;
    }
    emit(cfg, a.dump(2) + "\n");
    return 0;
}

int cmd_eigenfunction(const JobConfig& cfg, const PrecisionContext& ctx)
{
    const Problem p = load_problem(cfg);
    if (p.op.index_domain != IndexDomain::NaturalNumbers) {
        throw ConfigError("eigenfunctions are sampled in the Hermite basis; operator '" + p.op.id +
                          "' is not on the naturals");
    }
    if (cfg.samples < 1 || !(cfg.x_min <= cfg.x_max)) {
        throw ConfigError("need --samples >= 1 and --x-min <= --x-max");
    }
    const BootstrapResult r = run_bootstrap(p, cfg, cfg.n, ctx);
    const Candidate& cand = r.candidates.back();
    std::vector<double> xs(static_cast<std::size_t>(cfg.samples));
    for (long k = 0; k < cfg.samples; ++k) {
        xs[static_cast<std::size_t>(k)] =
            cfg.samples == 1 ? cfg.x_min
                             : cfg.x_min + (cfg.x_max - cfg.x_min) * static_cast<double>(k) /
                                               static_cast<double>(cfg.samples - 1);
    }
    std::string out = "x,re,im\n";
    with_precision(ctx, [&]<class R>() {
        CVector<R> v = cand.template vector_as<R>();
        // unit norm, largest coefficient real and positive
        std::size_t big = 0;
        for (std::size_t k = 1; k < v.size(); ++k) {
            if (abs(v[k]) > abs(v[big])) {
                big = k;
            }
        }
        const Complex<R> phase = conj(v[big]) / abs(v[big]);
        const R nv = norm2(v);
        for (auto& c : v) {
            c = c * phase / nv;
        }
        const EigenfunctionSamples<R> s = evaluate_eigenfunction(v, xs);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            out += csv_number(xs[k]) + "," + csv_number(to_double(s.values[k].re)) + "," +
                   csv_number(to_double(s.values[k].im)) + "\n";
        }
        return 0;
    });
    emit(cfg, out);
    return 0;
}

int cmd_operators(const JobConfig& cfg)
{
    auto describe = [](const OperatorSpec& op, const std::optional<LTPModel>& m, const std::string& source) {
        json sym = json::array();
        if (op.has(Symmetry::ComplexSymmetric)) {
            sym.push_back("complex_symmetric");
        }
        if (op.has(Symmetry::PTSymmetric)) {
            sym.push_back("pt_symmetric");
        }
        if (op.has(Symmetry::RealSpectrumExpected)) {
            sym.push_back("real_spectrum");
        }
        json j;
        j["id"] = op.id;
        j["source"] = source;
        j["domain"] = op.index_domain == IndexDomain::Integers ? "integers" : "naturals";
        j["banded"] = op.banded();
        j["symmetry"] = sym;
        j["ltp"] = m ? json(m->kind == LTPModel::Kind::Strip ? "strip" : "generalized") : json(nullptr);
        return j;
    };
    json a = json::array();
    for (const auto& id : builtin_operator_ids()) {
        a.push_back(describe(builtin_operator(id), builtin_ltp_model(id), "builtin"));
    }
    if (!cfg.plugin.empty()) {
        const Problem p = load_problem(cfg);
        a.push_back(describe(p.op, p.model, cfg.plugin));
    }
    if (cfg.format == "csv") {
        std::string out = "id,source,domain,banded,ltp\n";
        for (const auto& j : a) {
            out += j["id"].get<std::string>() + "," + j["source"].get<std::string>() + "," +
                   j["domain"].get<std::string>() + "," + (j["banded"].get<bool>() ? "true" : "false") + "," +
                   (j["ltp"].is_null() ? "" : j["ltp"].get<std::string>()) + "\n";
        }
        emit(cfg, out);
        return 0;
    }
    emit(cfg, a.dump(2) + "\n");
    return 0;
}

int run(int argc, char** argv)
{
    CLI::App app{"Certified eigenvalues of non-self-adjoint operators"};
    app.require_subcommand(1);

    std::string config_path;
    std::string op;
    std::string plugin;
    std::string precision;
    int parallelism = 0;
    std::string output;
    std::string format;
    long N = 0;
    long n = 0;
    long from = 0;
    double target = 0;
    double re_min = 0, re_max = 0, im_min = 0, im_max = 0;
    long nx = 0, ny = 0;
    std::string candidate;
    std::string candidates_out;
    double x_min = 0, x_max = 0;
    long samples = 0;
    bool print_config = false;

    std::vector<CLI::Option*> opts;
    auto common = [&](CLI::App* sub) {
        opts.push_back(sub->add_option("--config", config_path, "JSON job config; flags override it"));
        opts.push_back(sub->add_option("--op", op, "built-in operator id (see `operators`)"));
        opts.push_back(sub->add_option("--plugin", plugin, "operator plugin JSON file"));
        opts.push_back(sub->add_option("--precision", precision, "double | bigfloat:DIGITS"));
        opts.push_back(sub->add_option("--parallelism", parallelism, "worker threads (default: hardware threads; output is identical for any width)"));
        opts.push_back(sub->add_option("--output,-o", output, "write to file instead of stdout"));
        opts.push_back(sub->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"})));
        opts.push_back(sub->add_option("--N", N, "truncation size"));
        sub->add_flag("--print-config", print_config, "print the resolved job config and exit");
    };

    CLI::App* eigs = app.add_subcommand("eigs", "certify the first n eigenvalues");
    common(eigs);
    opts.push_back(eigs->add_option("--n", n, "number of eigenvalues"));
    opts.push_back(eigs->add_option("--target-radius", target, "largest acceptable enclosure radius"));
    opts.push_back(eigs->add_option("--candidates-out", candidates_out, "also write the certified candidates"));

    CLI::App* ps = app.add_subcommand("pseudospectrum", "gamma_N on a grid, CSV re,im,gamma");
    common(ps);
    opts.push_back(ps->add_option("--re-min", re_min));
    opts.push_back(ps->add_option("--re-max", re_max));
    opts.push_back(ps->add_option("--im-min", im_min));
    opts.push_back(ps->add_option("--im-max", im_max));
    opts.push_back(ps->add_option("--nx", nx, "grid points along Re"));
    opts.push_back(ps->add_option("--ny", ny, "grid points along Im"));

    CLI::App* cert = app.add_subcommand("certify", "re-certify candidate (z, v) pairs from a file");
    common(cert);
    opts.push_back(cert->add_option("--candidate", candidate, "candidate JSON (object or array)"));
    opts.push_back(cert->add_option("--target-radius", target, "largest acceptable enclosure radius"));

    CLI::App* cond = app.add_subcommand("condition", "eigenvalue condition numbers kappa_n");
    common(cond);
    opts.push_back(cond->add_option("--n", n, "largest index"));
    opts.push_back(cond->add_option("--from", from, "smallest index reported"));
    opts.push_back(cond->add_option("--target-radius", target, "largest acceptable enclosure radius"));

    CLI::App* ef = app.add_subcommand("eigenfunction", "sample the n-th eigenfunction, CSV x,re,im");
    common(ef);
    opts.push_back(ef->add_option("--n", n, "eigenvalue index"));
    opts.push_back(ef->add_option("--x-min", x_min));
    opts.push_back(ef->add_option("--x-max", x_max));
    opts.push_back(ef->add_option("--samples", samples, "number of sample points"));

    CLI::App* ops = app.add_subcommand("operators", "list built-in (and plugin) operators");
    common(ops);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const std::string& name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };

    JobConfig cfg;
    if (given("--config")) {
        std::ifstream f(config_path);
        if (!f) {
            throw ConfigError("cannot read config " + config_path);
        }
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not JSON: ") + e.what());
        }
        cfg = JobConfig::from_json(j);
        if (!cfg.subcommand.empty() && cfg.subcommand != sub->get_name()) {
            throw ConfigError("config is for '" + cfg.subcommand + "', not '" + sub->get_name() + "'");
        }
    } else if (const char* env = std::getenv("SPECGATE_PRECISION"); env != nullptr && *env != '\0') {
        cfg.precision = env;
    }
    cfg.subcommand = sub->get_name();
    if (given("--op")) cfg.op = op;
    if (given("--plugin")) cfg.plugin = plugin;
    if (given("--precision")) cfg.precision = precision;
    if (given("--parallelism")) cfg.parallelism = parallelism;
    if (given("--output")) cfg.output = output;
    if (given("--format")) cfg.format = format;
    if (given("--N")) cfg.N = N;
    if (given("--n")) cfg.n = n;
    if (given("--from")) cfg.from = from;
    if (given("--target-radius")) cfg.target_radius = target;
    if (given("--re-min")) cfg.region.re_lo = re_min;
    if (given("--re-max")) cfg.region.re_hi = re_max;
    if (given("--im-min")) cfg.region.im_lo = im_min;
    if (given("--im-max")) cfg.region.im_hi = im_max;
    if (given("--nx")) cfg.nx = nx;
    if (given("--ny")) cfg.ny = ny;
    if (given("--candidate")) cfg.candidate = candidate;
    if (given("--candidates-out")) cfg.candidates_out = candidates_out;
    if (given("--x-min")) cfg.x_min = x_min;
    if (given("--x-max")) cfg.x_max = x_max;
    if (given("--samples")) cfg.samples = samples;
    if (cfg.parallelism < 1) {
        throw ConfigError("--parallelism must be >= 1");
    }
    if (cfg.N && *cfg.N < 1) {
        throw ConfigError("--N must be >= 1");
    }

    if (print_config) {
        std::cout << cfg.to_json().dump(2) << "\n";
        return 0;
    }

    PrecisionContext ctx;
    try {
        ctx = PrecisionContext::parse(cfg.precision);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    const std::string& name = cfg.subcommand;
    if (name == "eigs") return cmd_eigs(cfg, ctx);
    if (name == "pseudospectrum") return cmd_pseudospectrum(cfg, ctx);
    if (name == "certify") return cmd_certify(cfg, ctx);
    if (name == "condition") return cmd_condition(cfg, ctx);
    if (name == "eigenfunction") return cmd_eigenfunction(cfg, ctx);
    return cmd_operators(cfg);
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const CertificationError& e) {
        std::cerr << "certification failed at stage '" << e.stage() << "': " << e.what() << "\n";
        return 2;
    } catch (const MultiMinimumError& e) {
        std::cerr << "certification failed at stage 'localization': " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
