#include "fracwave/cli.hpp"

#include "fracwave/error.hpp"
#include "fracwave/exponents.hpp"
#include "fracwave/frac_space.hpp"
#include "fracwave/frac_time.hpp"
#include "fracwave/nonexistence_probe.hpp"
#include "fracwave/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#ifndef FRACWAVE_VERSION
#define FRACWAVE_VERSION "dev"
#endif

namespace fracwave::cli {

namespace fs = std::filesystem;
using nlohmann::json;

bool VerifyReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

Check le(std::string name, double measured, double tol, std::string note = {}) {
    return {std::move(name), measured, tol, measured <= tol, std::move(note)};
}

Check ge(std::string name, double measured, double tol, std::string note = {}) {
    return {std::move(name), measured, tol, measured >= tol, std::move(note)};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- verify suites ----

void suite_frac_time(VerifyReport& r) {
    using namespace frac_time;
    const TimeMesh m(1.0, 4097), fine(1.0, 16385);
    const std::pair<const char*, double (*)(double)> fns[] = {
        {"sin", [](double t) { return std::sin(t); }},
        {"t^2", [](double t) { return t * t; }},
        {"exp(-t)", [](double t) { return std::exp(-t); }}};
    for (double a : {0.3, 0.5, 0.7})
        for (const auto& [name, f] : fns)
            r.checks.push_back(le(std::string("inversion ") + name + " alpha=" + fmt(a),
                                  verify_inversion(SampledFn::sample(m, f), FracOrder(a)), 1e-4));
    for (double a : {0.25, 0.5, 0.75})
        for (double beta : {3.0, 4.0, 6.0}) {
            const CutoffParams cp(1.0, beta, FracOrder(a));
            const auto w = SampledFn::sample(fine, [&](double t) { return cutoff(t, 1.0, beta); });
            const auto d = rl_derivative(w, FracOrder(a), Side::right);
            double worst = 0;
            for (std::size_t k = 1; k <= 100; ++k) {
                const std::size_t i = (fine.size() - 1) * k / 101;
                const double ref = closed_cutoff_derivative(cp, fine.node(i));
                worst = std::max(worst, std::abs(d.values[i] - ref) / std::abs(ref));
            }
            const double C = cutoff_constant(a, beta), Cp = printed_cutoff_constant(a, beta);
            r.checks.push_back(le("cutoff identity alpha=" + fmt(a) + " beta=" + fmt(beta), worst, 1e-4,
                                  "C=" + fmt(C) + " printed=" + fmt(Cp) + " C/printed=" + fmt(C / Cp)));
            r.checks.push_back(ge("printed constant misses alpha=" + fmt(a) + " beta=" + fmt(beta),
                                  std::abs(d.values[0] / (Cp * std::pow(cp.T, -a)) - 1), 0.1));
        }
    const std::array<std::tuple<const char*, double (*)(double), double (*)(double)>, 3> pairs{{
        {"cos,t^2", [](double t) { return std::cos(t); }, [](double t) { return t * t; }},
        {"exp,1", [](double t) { return std::exp(t); }, [](double) { return 1.0; }},
        {"1+t,sin(2t+1)", [](double t) { return 1 + t; }, [](double t) { return std::sin(2 * t + 1); }}}};
    for (double a : {0.3, 0.5, 0.7})
        for (const auto& [name, f, g] : pairs) {
            const auto pr = verify_parts(SampledFn::sample(m, f), SampledFn::sample(m, g), FracOrder(a));
            r.checks.push_back(le(std::string("parts ") + name + " alpha=" + fmt(a),
                                  std::abs(pr.lhs - pr.rhs) / std::abs(pr.lhs), 1e-6));
        }
}

void suite_frac_space(VerifyReport& r) {
    using namespace frac_space;
    for (int n : {1, 2, 3})
        for (double s : {0.25, 0.5, 0.75}) {
            const double oracle = std::pow(4.0, s) * std::tgamma(n / 2.0 + s) /
                                  (2 * std::pow(M_PI, n / 2.0) * std::abs(std::tgamma(-s)));
            r.checks.push_back(le("c_sigma n=" + std::to_string(n) + " sigma=" + fmt(s),
                                  std::abs(c_sigma(s, n) - oracle) / oracle, 1e-9));
        }
    const SpaceGrid g(1, 1024, 80.0);
    const Field f = Field::sample(g, [](const Point& x) { return Complex(bracket_fn(x, 4.0), 0.0); });
    const Field lap = frac_laplacian_spectral(f, 1.0);
    double worst = 0;
    for (std::size_t i = 0; i < g.volume(); ++i) {
        const Point x = g.point(i);
        if (std::abs(x[0]) > 10) continue;
        worst = std::max(worst, std::abs(lap.values[i].real() - bracket_laplacian_closed(x, 4.0)));
    }
    r.checks.push_back(le("spectral -Laplacian of <x>^-4", worst, 1e-6));
    const Field gs = Field::sample(g, [](const Point& x) { return Complex(std::exp(-x[0] * x[0]), 0.0); });
    for (double th : {0.2, 0.45}) {
        const Field half = frac_laplacian_spectral(gs, th / 2);
        const double lhs = inner(half, half).real();
        const double rhs = inner(frac_laplacian_spectral(gs, th), gs).real();
        r.checks.push_back(le("square-root consistency theta=" + fmt(th), std::abs(lhs - rhs) / rhs, 1e-12));
    }
    const std::vector<double> radii{2, 4, 8, 15, 30, 60};
    for (double sg : {0.3, 0.7}) {
        const double pred = -predicted_decay(sg, 4.0, 1);
        const double slope = decay_exponent_probe(sg, 4.0, 1, radii);
        r.checks.push_back(le("decay slope sigma=" + fmt(sg) + " q=4", slope, pred * 0.95, "predicted " + fmt(pred)));
    }
    const double pred1 = -predicted_decay(1.0, 4.0, 1);
    const double slope1 = decay_exponent_probe(1.0, 4.0, 1, radii);
    r.checks.push_back(le("decay slope sigma=1 q=4 (relative)", std::abs(slope1 / pred1 - 1), 0.03,
                          "slope " + fmt(slope1) + " predicted " + fmt(pred1)));
}

void suite_weakform(VerifyReport& r, const VerifyOptions& opt) {
    using namespace probe;
    if (opt.refine < 2) throw DomainError("refine: need at least 2 levels");
    std::vector<double> gaps;
    double mutated = 1e300;
    for (int lev = 0; lev < opt.refine; ++lev) {
        const SpaceGrid g(1, 32u << lev, 20.0);
        const TimeMesh m(2.0, (40u << lev) + 1);
        const auto s = manufactured_samples(g, m, opt.theta);
        const TestPair pair(CutoffParams(2.0, 4.0, frac_time::FracOrder(0.5)), 1, opt.theta, 3.0);
        const auto sp = spatial_test(pair, g);
        gaps.push_back(weak_residual(s, temporal_test(pair), sp).gap);
        mutated = std::min(mutated, weak_residual(s, temporal_test(pair), sp, {true}).gap);
        r.checks.push_back({"gap level " + std::to_string(lev), gaps.back(), 1.0, true, ""});
    }
    double order = kInfinity;
    for (std::size_t k = 1; k < gaps.size(); ++k) order = std::min(order, std::log2(gaps[k - 1] / gaps[k]));
    r.checks.push_back(ge("gap order", order, 1.0));
    r.checks.push_back(ge("mutated gap (boundary term dropped)", mutated, 1e-2));
}

void suite_scaling(VerifyReport& r, const VerifyOptions& opt) {
    using namespace probe;
    const FracParams prm{opt.n, opt.gamma, opt.theta, opt.p};
    prm.validate();
    const auto sf = scaling_fit_bounds(prm, opt.eta, {2, 5, 10, 20, 50, 100});
    for (const auto& t : sf.terms)
        r.checks.push_back(le("slope j=" + std::to_string(t.j) + " sigma=" + fmt(t.sigma),
                              std::abs(t.slope - t.predicted), 1e-10,
                              "slope=" + fmt(t.slope) + " predicted=" + fmt(t.predicted)));
    const auto g = g_branches(opt.eta, opt.gamma, opt.theta);
    r.checks.push_back(le("min g_j = g(eta)",
                          std::abs(*std::min_element(g.begin(), g.end()) - sf.g_of_eta), 1e-12));
    r.checks.push_back(le("master slope", std::abs(sf.master_slope - sf.master_predicted), 1e-10,
                          "exponent=" + fmt(sf.master_predicted)));
    if (opt.gamma > exponents::branch_boundary(opt.n)) {
        const double pc = exponents::p_c({opt.n, opt.gamma, opt.theta, {}});
        if (std::isfinite(pc)) {
            const double root = master_exponent_root(opt.n, opt.gamma, opt.theta, 2 * (1 - opt.theta));
            r.checks.push_back(le("master exponent root = p_c", std::abs(root - pc) / pc, 1e-10, "p_c=" + fmt(pc)));
        }
    }
}

// ---- config layering ----

struct SimKey {
    const char* name;
    const char* fallback;
    const char* help;
};

const SimKey kSimKeys[] = {
    {"n", "1", "space dimension (1..3)"},
    {"gamma", "0.5", "memory exponent in (0,1)"},
    {"theta", "0.1", "damping order in [0,1/2)"},
    {"p", "2", "nonlinearity power (> 1)"},
    {"p_list", "", "comma-separated powers; one run per entry"},
    {"modes", "64", "grid points per axis (power of two)"},
    {"length", "20", "box period L"},
    {"T", "1", "final time"},
    {"steps", "100", "number of time steps"},
    {"amplitude", "0.001", "amplitude of u1"},
    {"u0_amplitude", "0", "amplitude of u0"},
    {"profile", "gaussian", "initial profile: gaussian | bracket | zero"},
    {"width", "1", "profile width"},
    {"threshold", "1e6", "blow-up threshold on the sup-norm"},
    {"stride", "10", "snapshot stride"},
    {"safety", "0.5", "stability safety factor"},
    {"forcing", "memory", "memory | none"},
};

double to_double(const std::map<std::string, std::string>& m, const std::string& key) {
    const std::string& v = m.at(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DomainError(key + ": not a number '" + v + "'");
    }
}

long long to_int(const std::map<std::string, std::string>& m, const std::string& key) {
    const double d = to_double(m, key);
    if (d != std::floor(d)) throw DomainError(key + ": must be an integer");
    return static_cast<long long>(d);
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::map<std::string, std::string> one{{key, item}};
        out.push_back(to_double(one, key));
    }
    return out;
}

solver::SolverConfig make_config(const std::map<std::string, std::string>& m, double p) {
    solver::SolverConfig c;
    const long long n = to_int(m, "n");
    if (n < 1 || n > 3) throw DomainError("n: simulation supports 1..3");
    c.params = FracParams{static_cast<int>(n), to_double(m, "gamma"), to_double(m, "theta"), p};
    c.params.validate();
    const long long modes = to_int(m, "modes"), steps = to_int(m, "steps"), stride = to_int(m, "stride");
    if (modes < 8) throw DomainError("modes: must be a power of two >= 8");
    if (steps < 0) throw DomainError("steps: must be >= 0");
    if (stride < 1) throw DomainError("stride: must be >= 1");
    c.grid = frac_space::SpaceGrid(static_cast<int>(n), static_cast<std::size_t>(modes), to_double(m, "length"));
    c.mesh = steps == 0 ? frac_time::TimeMesh(0.0, 1) : frac_time::TimeMesh(to_double(m, "T"), static_cast<std::size_t>(steps) + 1);
    c.data_amplitude = to_double(m, "amplitude");
    c.u0_amplitude = to_double(m, "u0_amplitude");
    c.initial_profile = m.at("profile");
    c.profile_width = to_double(m, "width");
    c.blowup_threshold = to_double(m, "threshold");
    c.snapshot_stride = static_cast<std::size_t>(stride);
    c.safety = to_double(m, "safety");
    const std::string& f = m.at("forcing");
    if (f == "memory")
        c.forcing = solver::Forcing::memory;
    else if (f == "none")
        c.forcing = solver::Forcing::none;
    else
        throw DomainError("forcing: expected memory or none, got '" + f + "'");
    return c;
}

std::string verdict(const solver::Trajectory& tr) {
    double bnd = 0;
    for (const auto& d : tr.diagnostics) bnd = std::max(bnd, d.boundary_norm);
    char buf[256];
    if (tr.blowup.triggered)
        std::snprintf(buf, sizeof buf, "blow-up at t* = %.6g (%s); growth rate %.6g; max boundary norm %.6g",
                      tr.blowup.t_star, tr.blowup.reason.c_str(), tr.blowup.growth_rate, bnd);
    else
        std::snprintf(buf, sizeof buf, "no blow-up; E monotone: %s; max boundary norm %.6g",
                      solver::energy_monotone(tr) ? "true" : "false", bnd);
    return buf;
}

struct RunOutput {
    std::vector<std::string> files;
    std::string verdict;
    bool blowup = false;
    std::string error;
};

RunOutput simulate_one(const solver::SolverConfig& cfg, const fs::path& dir, const std::string& tag) {
    RunOutput out;
    try {
        const auto tr = solver::run(cfg);
        const fs::path csv = dir / ("diagnostics" + tag + ".csv");
        std::ofstream os(csv, std::ios::binary);
        solver::write_diagnostics_csv(tr, os);
        out.files.push_back(csv.string());
        frac_space::Transform t(cfg.grid);
        for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
            const fs::path bin = dir / ("u" + tag + "_s" + std::to_string(tr.snapshot_steps[k]) + ".bin");
            std::ofstream bs(bin, std::ios::binary);
            frac_space::write_field_binary(t.inverse(tr.snapshots[k].u_hat), bs);
            out.files.push_back(bin.string());
        }
        out.verdict = verdict(tr);
        out.blowup = tr.blowup.triggered;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

int cmd_simulate(const std::map<std::string, std::string>& resolved, const json& inputs, const std::string& out_dir,
                 bool dry_run,
                 unsigned jobs, bool as_json, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> powers = resolved.at("p_list").empty() ? std::vector<double>{to_double(resolved, "p")}
                                                                 : parse_list("p_list", resolved.at("p_list"));
    const bool sweep = !resolved.at("p_list").empty();
    std::vector<solver::SolverConfig> cfgs;
    for (double p : powers) {
        cfgs.push_back(make_config(resolved, p));
        cfgs.back().validate();
    }
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<RunOutput> results(cfgs.size());
    if (!dry_run) {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next++) < cfgs.size();)
                results[i] = simulate_one(cfgs[i], dir, sweep ? "_p" + std::to_string(i) : "");
        };
        const unsigned pool = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cfgs.size())));
        std::vector<std::thread> threads;
        for (unsigned k = 1; k < pool; ++k) threads.emplace_back(worker);
        worker();
        for (auto& t : threads) t.join();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json manifest;
    manifest["subcommand"] = "simulate";
    manifest["version"] = FRACWAVE_VERSION;
    manifest["config"] = resolved;
    manifest["dry_run"] = dry_run;
    manifest["inputs"] = inputs;
    manifest["output_dir"] = out_dir;
    manifest["outputs"] = json::array();
    for (const auto& r : results)
        for (const auto& f : r.files) manifest["outputs"].push_back(f);
    manifest["wall_time_s"] = wall;
    const fs::path mpath = dir / "manifest.json";
    std::ofstream(mpath, std::ios::binary) << manifest.dump(2) << "\n";

    int code = kOk;
    for (const auto& r : results)
        if (!r.error.empty()) {
            err << "error: " << r.error << "\n";
            code = kNumericalAbort;
        }
    if (as_json) {
        json j;
        j["manifest"] = mpath.string();
        j["runs"] = json::array();
        for (std::size_t i = 0; i < powers.size(); ++i)
            j["runs"].push_back({{"p", powers[i]}, {"verdict", dry_run ? "dry run" : results[i].verdict},
                                 {"blowup", results[i].blowup}});
        out << j.dump(2) << "\n";
        return code;
    }
    out << "manifest: " << mpath.string() << "\n";
    if (dry_run) {
        out << "dry run: no computation\n";
        return code;
    }
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (!results[i].error.empty()) continue;
        if (sweep)
            out << "p = " << fmt(powers[i]) << ": " << results[i].verdict << "\n";
        else
            out << results[i].verdict << "\n";
    }
    return code;
}

std::string usage_of(const CLI::App& app) { return app.help(); }

} // namespace

VerifyReport run_suite(const std::string& suite, const VerifyOptions& opt) {
    VerifyReport r{suite, {}};
    if (suite == "frac-time")
        suite_frac_time(r);
    else if (suite == "frac-space")
        suite_frac_space(r);
    else if (suite == "weakform")
        suite_weakform(r, opt);
    else if (suite == "scaling")
        suite_scaling(r, opt);
    else
        throw DomainError("suite: unknown name '" + suite + "' (frac-time, frac-space, weakform, scaling)");
    return r;
}

std::string verify_json(const VerifyReport& r) {
    json j;
    j["suite"] = r.suite;
    j["pass"] = r.pass();
    j["checks"] = json::array();
    for (const auto& c : r.checks)
        j["checks"].push_back({{"name", c.name},
                               {"measured", std::isfinite(c.measured) ? json(c.measured) : json(exponents::format_number(c.measured))},
                               {"tolerance", c.tolerance},
                               {"pass", c.pass},
                               {"note", c.note}});
    return j.dump(2);
}

void print_verify_table(const VerifyReport& r, std::ostream& os) {
    char buf[512];
    for (const auto& c : r.checks) {
        std::snprintf(buf, sizeof buf, "%-4s %-44s measured %-12.6g tol %-10.3g %s\n", c.pass ? "PASS" : "FAIL",
                      c.name.c_str(), c.measured, c.tolerance, c.note.c_str());
        os << buf;
    }
    os << r.suite << ": " << (r.pass() ? "all checks passed" : "some checks failed") << "\n";
}

std::map<std::string, std::string> parse_config(std::istream& is) {
    std::map<std::string, std::string> m;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw DomainError("config line " + std::to_string(lineno) + ": empty key");
        m[key] = trim(line.substr(eq + 1));
    }
    return m;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fracwave: fractional wave-plate toolkit", "fracwave"};
    app.name("fracwave");
    app.require_subcommand(1);
    app.set_version_flag("--version", FRACWAVE_VERSION);

    // exponents
    auto* ex = app.add_subcommand("exponents", "critical exponents and the gamma atlas");
    int ex_n = 0;
    double ex_gamma = 0, ex_theta = 0, ex_s = 0, ex_p = 0;
    bool ex_atlas = false, ex_json = false;
    std::string ex_out;
    ex->add_option("-n", ex_n, "space dimension")->required();
    auto* ex_gamma_opt = ex->add_option("--gamma", ex_gamma, "memory exponent in (0,1)");
    ex->add_option("--theta", ex_theta, "damping order in [0,1/2)")->required();
    auto* ex_s_opt = ex->add_option("--s", ex_s, "regularity index s");
    auto* ex_p_opt = ex->add_option("--p", ex_p, "power to classify");
    ex->add_flag("--atlas", ex_atlas, "emit the gamma atlas (512 rows) instead of one report");
    ex->add_option("-o,--output", ex_out, "atlas output file (stdout if omitted)");
    ex->add_flag("--json", ex_json, "JSON output (reports are always JSON)");

    // verify
    auto* ve = app.add_subcommand("verify", "property suites: frac-time, frac-space, weakform, scaling");
    std::string suite;
    VerifyOptions vo;
    bool ve_json = false;
    ve->add_option("suite", suite, "suite name")->required();
    ve->add_option("-n", vo.n, "space dimension (scaling)");
    ve->add_option("--gamma", vo.gamma, "memory exponent (scaling)");
    ve->add_option("--theta", vo.theta, "damping order (scaling, weakform)");
    ve->add_option("--p", vo.p, "power (scaling)");
    ve->add_option("--eta", vo.eta, "T = R^eta exponent (scaling)");
    ve->add_option("--refine", vo.refine, "refinement levels (weakform)");
    ve->add_flag("--json", ve_json, "JSON output");

    // simulate
    auto* si = app.add_subcommand("simulate", "run the pseudospectral solver");
    si->footer(
        "Precedence: flags override the config file (or manifest), which overrides defaults.\n"
        "Config format: one 'key = value' per line, '#' comments; keys as the long flags with '-' -> '_'.");
    std::string config_path, manifest_path, out_dir = "fracwave_out";
    bool dry_run = false, si_json = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_opts;
    for (const auto& k : kSimKeys) {
        std::string flag = std::string("--") + k.name;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (std::string(k.name) == "n") flag = "-n";
        flag_opts[k.name] = si->add_option(flag, flag_values[k.name], std::string(k.help) + " [" + k.fallback + "]");
    }
    auto* cfg_opt = si->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    si->add_option("--manifest", manifest_path, "re-run the configuration recorded in a manifest")
        ->check(CLI::ExistingFile)
        ->excludes(cfg_opt);
    si->add_option("--out", out_dir, "output directory");
    si->add_flag("--dry-run", dry_run, "write the manifest only");
    si->add_option("--jobs", jobs, "worker threads for p sweeps");
    si->add_flag("--json", si_json, "JSON summary on stdout");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << FRACWAVE_VERSION << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        err << usage_of(*target);
        return kUsage;
    }

    try {
        if (*ex) {
            if (ex_atlas) {
                exponents::ExponentInputs probe_in{ex_n, 0.5, ex_theta,
                                                   ex_s_opt->count() ? std::optional<double>(ex_s) : std::nullopt};
                probe_in.validate();
                const auto rows = exponents::region_atlas(ex_n, ex_theta, probe_in.s, exponents::default_gamma_grid());
                if (ex_json) {
                    out << exponents::atlas_json(rows) << "\n";
                } else if (!ex_out.empty()) {
                    std::ofstream os(ex_out, std::ios::binary);
                    if (!os) throw DomainError("output: cannot open '" + ex_out + "'");
                    exponents::write_atlas_csv(rows, os);
                    out << "wrote " << rows.size() << " rows to " << ex_out << "\n";
                } else {
                    exponents::write_atlas_csv(rows, out);
                }
                return kOk;
            }
            if (!ex_gamma_opt->count()) {
                err << "error: --gamma is required without --atlas\n" << ex->help();
                return kUsage;
            }
            const exponents::ExponentInputs in{ex_n, ex_gamma, ex_theta,
                                               ex_s_opt->count() ? std::optional<double>(ex_s) : std::nullopt};
            const auto rep = exponents::p_bar(in);
            out << exponents::report_json(rep, ex_p_opt->count() ? std::optional<double>(ex_p) : std::nullopt)
                << "\n";
            return kOk;
        }
        if (*ve) {
            const auto rep = run_suite(suite, vo);
            if (ve_json)
                out << verify_json(rep) << "\n";
            else
                print_verify_table(rep, out);
            return rep.pass() ? kOk : kCheckFailed;
        }
        if (*si) {
            std::map<std::string, std::string> resolved;
            for (const auto& k : kSimKeys) resolved[k.name] = k.fallback;
            std::map<std::string, std::string> layer;
            json inputs = json::object();
            if (!manifest_path.empty()) {
                std::ifstream is(manifest_path);
                const json mj = json::parse(is, nullptr, false);
                if (mj.is_discarded() || !mj.contains("config")) throw DomainError("manifest: no config object");
                for (const auto& [k, v] : mj["config"].items()) layer[k] = v.get<std::string>();
                if (!si->get_option("--out")->count() && mj.contains("output_dir"))
                    out_dir = mj["output_dir"].get<std::string>();
                inputs["manifest"] = manifest_path;
            } else if (!config_path.empty()) {
                std::ifstream is(config_path);
                layer = parse_config(is);
                inputs["config"] = config_path;
            }
            for (const auto& [k, v] : layer) {
                if (!resolved.count(k)) throw DomainError("config: unknown key '" + k + "'");
                resolved[k] = v;
            }
            for (const auto& [k, opt] : flag_opts)
                if (opt->count()) resolved[k] = flag_values[k];
            return cmd_simulate(resolved, inputs, out_dir, dry_run, jobs, si_json, out, err);
        }
    } catch (const solver::StabilityError& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalAbort;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalAbort;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalAbort;
    }
    return kUsage;
}

} // namespace fracwave::cli
