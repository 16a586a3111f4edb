#include "fracwave/nonexistence_probe.hpp"

#include "fracwave/exponents.hpp"

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace fracwave::probe {

namespace {

struct LineFit {
    double slope;
    double intercept;
    double r_squared;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double k = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = k * sxx - sx * sx;
    LineFit f{};
    f.slope = (k * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / k;
    const double my = sy / k;
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r_squared = ss_tot > 0 ? 1 - ss_res / ss_tot : 1.0;
    return f;
}

Point scaled(const Point& x, double R) {
    Point y(x);
    for (double& v : y) v /= R;
    return y;
}

std::vector<double> real_parts(const Field& f) {
    std::vector<double> r(f.values.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f.values[i].real();
    return r;
}

std::vector<double> trapezoid_weights(const TimeMesh& mesh) {
    std::vector<double> w(mesh.size(), mesh.step());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

double grid_dot(const std::vector<double>& u, const Field& f, double dv) {
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * f.values[i].real();
    return s * dv;
}

void check_radii(const std::vector<double>& R_list) {
    if (R_list.size() < 2) throw DomainError("R_list: need at least two radii");
    for (double r : R_list)
        if (!(r > 1)) throw DomainError("R_list: radii must exceed 1");
    const auto [lo, hi] = std::minmax_element(R_list.begin(), R_list.end());
    if (*hi < 10 * *lo * (1 - 1e-12)) throw DomainError("R_list: must span at least one decade");
}

} // namespace

TestPair::TestPair(CutoffParams cutoff, int n, double theta, double R)
    : cutoff_(cutoff),
      n_(n),
      theta_(theta),
      q_(n + 2 * theta),
      R_(R),
      norm_(frac_time::cutoff_constant(cutoff.alpha.value(), cutoff.beta) * std::pow(cutoff.T, -cutoff.alpha.value())),
      lap_(frac_space::BracketSeries(n, n + 2 * theta).neg_laplacian()),
      bilap_(frac_space::BracketSeries(n, n + 2 * theta).pow_neg_laplacian(2)) {
    if (n < 1 || n > 3) throw DomainError("n: test pair supports 1..3");
    if (!(theta >= 0 && theta < 1)) throw DomainError("theta: must lie in [0,1)");
    if (!(R > 0)) throw DomainError("R: must be > 0");
}

double TestPair::psi(double t) const {
    const double w = frac_time::cutoff(t, cutoff_.T, 1.0);
    return std::pow(w, cutoff_.beta - cutoff_.alpha.value());
}

double TestPair::dpsi(double t) const {
    const double e = cutoff_.beta - cutoff_.alpha.value();
    const double w = frac_time::cutoff(t, cutoff_.T, 1.0);
    return -e / cutoff_.T * std::pow(w, e - 1);
}

double TestPair::ddpsi(double t) const {
    const double e = cutoff_.beta - cutoff_.alpha.value();
    const double w = frac_time::cutoff(t, cutoff_.T, 1.0);
    return e * (e - 1) / (cutoff_.T * cutoff_.T) * std::pow(w, e - 2);
}

double TestPair::psi_T(int j, double t) const {
    switch (j) {
    case 0: return norm_ * psi(t);
    case 1: return norm_ * dpsi(t);
    case 2: return norm_ * ddpsi(t);
    default: throw DomainError("j: must be 0, 1 or 2");
    }
}

double TestPair::phi(const Point& x) const { return frac_space::bracket_fn(scaled(x, R_), q_); }
double TestPair::neg_lap_phi(const Point& x) const { return lap_(scaled(x, R_)) / (R_ * R_); }
double TestPair::bilap_phi(const Point& x) const { return bilap_(scaled(x, R_)) / std::pow(R_, 4); }

TemporalTest temporal_test(const TestPair& pair) {
    return {pair.cutoff().T, [pair](double t) { return pair.psi(t); }, [pair](double t) { return pair.dpsi(t); },
            [pair](double t) { return pair.ddpsi(t); }};
}

SpatialTest spatial_test(const TestPair& pair, const SpaceGrid& grid) {
    if (grid.dim() != pair.dim()) throw DomainError("grid.dim: differs from the test pair dimension");
    auto real = [](double v) { return frac_space::Complex(v, 0.0); };
    SpatialTest s{Field::sample(grid, [&](const Point& x) { return real(pair.phi(x)); }),
                  Field::sample(grid, [&](const Point& x) { return real(pair.neg_lap_phi(x)); }),
                  Field::sample(grid, [&](const Point& x) { return real(pair.bilap_phi(x)); }), Field(grid)};
    s.frac = pair.theta() == 0 ? s.phi : frac_space::frac_laplacian_spectral(s.phi, pair.theta());
    return s;
}

SpaceTimeSamples samples_from_trajectory(const solver::Trajectory& tr, const solver::SolverConfig& cfg) {
    if (cfg.snapshot_stride != 1) throw DomainError("snapshot_stride: samples need every step");
    if (tr.aborted || tr.snapshots.size() != cfg.mesh.size())
        throw DomainError("trajectory: must cover the whole mesh without abort");
    SpaceTimeSamples s{cfg.mesh, cfg.grid, {}, {}, {}, {}};
    frac_space::Transform t(cfg.grid);
    for (const auto& snap : tr.snapshots) s.u.push_back(real_parts(t.inverse(snap.u_hat)));
    s.u0 = s.u.front();
    s.u1 = real_parts(t.inverse(tr.snapshots.front().v_hat));

    const std::size_t N = cfg.mesh.size(), V = cfg.grid.volume();
    s.forcing.assign(N, std::vector<double>(V, 0.0));
    if (cfg.forcing == solver::Forcing::memory) {
        const double alpha = cfg.params.alpha();
        const auto w = frac_time::product_weights(N, cfg.mesh.step(), alpha);
        const double g = std::tgamma(alpha);
        std::vector<std::vector<double>> h(N, std::vector<double>(V));
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t i = 0; i < V; ++i) h[k][i] = std::pow(std::abs(s.u[k][i]), cfg.params.p);
        for (std::size_t k = 1; k < N; ++k)
            for (std::size_t j = 0; j <= k; ++j) {
                const double c = g * w->weight(k, j);
                for (std::size_t i = 0; i < V; ++i) s.forcing[k][i] += c * h[j][i];
            }
    }
    return s;
}

SpaceTimeSamples manufactured_samples(const SpaceGrid& grid, const TimeMesh& mesh, double theta) {
    const Field G = Field::sample(grid, [](const Point& x) {
        double r2 = 0;
        for (double v : x) r2 += v * v;
        return frac_space::Complex(std::exp(-r2 / 2), 0.0);
    });
    const auto g = real_parts(G);
    const auto mass = real_parts(frac_space::apply_multiplier(G, [](double k2) { return 1 + k2; }));
    const auto stiff = real_parts(frac_space::apply_multiplier(G, [](double k2) { return k2 * k2 + k2; }));
    const auto damp = theta == 0 ? g : real_parts(frac_space::frac_laplacian_spectral(G, theta));

    auto A = [](double t) { return std::cos(t) + 0.5 * std::sin(2 * t); };
    auto dA = [](double t) { return -std::sin(t) + std::cos(2 * t); };
    auto ddA = [](double t) { return -std::cos(t) - 2 * std::sin(2 * t); };

    SpaceTimeSamples s{mesh, grid, {}, {}, {}, {}};
    const std::size_t V = grid.volume();
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const double t = mesh.node(k);
        std::vector<double> u(V), f(V);
        for (std::size_t i = 0; i < V; ++i) {
            u[i] = A(t) * g[i];
            f[i] = ddA(t) * mass[i] + A(t) * stiff[i] + dA(t) * damp[i];
        }
        s.u.push_back(std::move(u));
        s.forcing.push_back(std::move(f));
    }
    s.u0.resize(V);
    s.u1.resize(V);
    for (std::size_t i = 0; i < V; ++i) {
        s.u0[i] = A(0) * g[i];
        s.u1[i] = dA(0) * g[i];
    }
    return s;
}

WeakResidual weak_residual(const SpaceTimeSamples& s, const TemporalTest& psi, const SpatialTest& phi,
                           const WeakOptions& opt) {
    if (std::abs(psi.psi(0.0) - 1.0) > 1e-10) throw DomainError("psi: normalization psi(0) = 1 violated");
    if (std::abs(psi.T - s.mesh.t_end()) > 1e-12 * psi.T) throw DomainError("psi.T: differs from the sample mesh");
    if (!(phi.phi.grid == s.grid)) throw DomainError("phi.grid: differs from the sample grid");
    const double dv = s.grid.cell_volume();
    const auto w = trapezoid_weights(s.mesh);

    WeakResidual r{};
    r.lhs = 0;
    r.bulk.fill(0.0);
    for (std::size_t k = 0; k < s.mesh.size(); ++k) {
        const double t = s.mesh.node(k);
        const double p0 = psi.psi(t), p1 = psi.dpsi(t), p2 = psi.ddpsi(t);
        const auto& u = s.u[k];
        const double u_phi = grid_dot(u, phi.phi, dv);
        const double u_lap = grid_dot(u, phi.neg_lap, dv);
        r.lhs += w[k] * p0 * grid_dot(s.forcing[k], phi.phi, dv);
        r.bulk[0] += w[k] * p0 * u_lap;
        r.bulk[1] += w[k] * p0 * grid_dot(u, phi.bilap, dv);
        r.bulk[2] -= w[k] * p1 * grid_dot(u, phi.frac, dv);
        r.bulk[3] += w[k] * p2 * u_phi;
        r.bulk[4] += w[k] * p2 * u_lap;
    }
    r.data = {-grid_dot(s.u0, phi.frac, dv), -grid_dot(s.u1, phi.phi, dv), -grid_dot(s.u1, phi.neg_lap, dv)};
    r.boundary = psi.dpsi(0.0) * (grid_dot(s.u0, phi.phi, dv) + grid_dot(s.u0, phi.neg_lap, dv));

    r.rhs = 0;
    double scale = std::abs(r.lhs);
    for (double b : r.bulk) {
        r.rhs += b;
        scale += std::abs(b);
    }
    for (double d : r.data) {
        r.rhs += d;
        scale += std::abs(d);
    }
    if (!opt.drop_boundary_term) r.rhs += r.boundary;
    scale += std::abs(r.boundary);
    r.gap = scale > 0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
    return r;
}

double young_constant(double epsilon, double p) {
    if (!(epsilon > 0)) throw DomainError("epsilon: must be > 0");
    const double pc = conjugate_exponent(p);
    return std::pow(epsilon * p, -pc / p) / pc;
}

double FiveIntegrals::master_lhs() const { return (gamma_alpha - 5 * epsilon) * I_u; }

double FiveIntegrals::master_rhs() const {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += time_factor[j] * space_factor[j];
    return C_eps * s;
}

std::array<std::pair<int, double>, 5> term_orders(double theta) {
    return {{{0, 1.0}, {0, 2.0}, {1, theta}, {2, 0.0}, {2, 1.0}}};
}

FiveIntegrals five_integrals(const SpaceTimeSamples& s, const FracParams& params, double beta, double R,
                             double epsilon) {
    params.validate();
    if (!(epsilon > 0)) throw DomainError("epsilon: must be > 0");
    const double alpha = params.alpha(), p = params.p, pc = params.p_conjugate();
    if (!(beta > (alpha + 2) * pc))
        throw DomainError("beta: hypothesis beta > (alpha + 2) p' violated");
    if (s.grid.dim() != params.n) throw DomainError("grid.dim: differs from n");
    const double T = s.mesh.t_end();
    const TestPair pair(CutoffParams(T, beta, frac_time::FracOrder(alpha)), params.n, params.theta, R);
    const SpatialTest sp = spatial_test(pair, s.grid);
    const Field* ops[5] = {&sp.neg_lap, &sp.bilap, &sp.frac, &sp.phi, &sp.neg_lap};
    const auto orders = term_orders(params.theta);
    const double dv = s.grid.cell_volume();
    const auto w = trapezoid_weights(s.mesh);
    const std::size_t V = s.grid.volume();

    FiveIntegrals fi{};
    fi.epsilon = epsilon;
    fi.p_conjugate = pc;
    fi.C_eps = young_constant(epsilon, p);
    fi.gamma_alpha = std::tgamma(alpha);
    fi.I.fill(0.0);
    fi.time_factor.fill(0.0);

    const double e = beta - alpha;
    const double cj[3] = {1.0, e, e * (e - 1)};
    for (std::size_t k = 0; k < s.mesh.size(); ++k) {
        const double t = s.mesh.node(k);
        const double om = frac_time::cutoff(t, T, 1.0);
        const auto& u = s.u[k];
        double up = 0;
        for (std::size_t i = 0; i < V; ++i) up += std::pow(std::abs(u[i]), p) * sp.phi.values[i].real();
        fi.I_u += w[k] * std::pow(om, beta) * up * dv;
        for (std::size_t j = 0; j < 5; ++j) {
            const int d = orders[j].first;
            fi.I[j] += w[k] * pair.psi_T(d, t) * grid_dot(u, *ops[j], dv);
            const double amp = pair.normalization() * cj[d] * std::pow(T, -d);
            fi.time_factor[j] += w[k] * std::pow(amp, pc) * std::pow(om, beta - (alpha + d) * pc);
        }
    }
    for (std::size_t j = 0; j < 5; ++j) {
        double q = 0;
        for (std::size_t i = 0; i < V; ++i) {
            const double a = std::abs(ops[j]->values[i].real());
            const double ph = sp.phi.values[i].real();
            if (a > 0) q += std::pow(a, pc) * std::pow(ph, 1 - pc);
        }
        fi.space_factor[j] = q * dv;
        fi.bounds[j] = epsilon * fi.I_u + fi.C_eps * fi.time_factor[j] * fi.space_factor[j];
    }
    fi.I_main = fi.gamma_alpha * fi.I_u;
    return fi;
}

std::array<double, 5> g_branches(double eta, double gamma, double theta) {
    const double a = 1 - gamma;
    return {a * eta + 2, a * eta + 4, (a + 1) * eta + 2 * theta, (a + 2) * eta, (a + 2) * eta + 2};
}

double master_exponent(const FracParams& params, double eta) {
    params.validate();
    if (!(eta >= 0)) throw DomainError("eta: must be >= 0");
    const auto g = g_branches(eta, params.gamma, params.theta);
    return params.n + eta - *std::min_element(g.begin(), g.end()) * params.p_conjugate();
}

double master_exponent_root(int n, double gamma, double theta, double eta) {
    auto f = [&](double p) { return master_exponent(FracParams{n, gamma, theta, p}, eta); };
    double lo = 1 + 1e-9, hi = 2.0;
    if (f(lo) >= 0) throw NumericalError("master exponent is non-negative near p = 1", 0.0);
    while (f(hi) < 0) {
        hi *= 2;
        if (hi > 1e12) return kInfinity;
    }
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (r.first + r.second);
}

ScalingFit scaling_fit_bounds(const FracParams& params, double eta, const std::vector<double>& R_list) {
    params.validate();
    check_radii(R_list);
    if (!(eta >= 0)) throw DomainError("eta: must be >= 0");
    const double alpha = params.alpha(), pc = params.p_conjugate();
    const auto orders = term_orders(params.theta);
    const auto g = g_branches(eta, params.gamma, params.theta);

    ScalingFit sf{};
    sf.eta = eta;
    sf.R_values = R_list;
    std::vector<double> lx;
    for (double R : R_list) lx.push_back(std::log(R));
    sf.master_slope = -kInfinity;
    for (std::size_t j = 0; j < 5; ++j) {
        const auto [d, sigma] = orders[j];
        std::vector<double> ly;
        for (double R : R_list) {
            const double logT = eta * std::log(R);
            ly.push_back((1 - (alpha + d) * pc) * logT + (params.n - 2 * sigma * pc) * std::log(R));
        }
        const LineFit f = fit_line(lx, ly);
        sf.terms[j] = {d, sigma, g[j], params.n + eta - g[j] * pc, f.slope, f.r_squared, f.r_squared >= 0.99};
        sf.master_slope = std::max(sf.master_slope, f.slope);
    }
    sf.g_of_eta = exponents::g_eta(eta, params.gamma, params.theta);
    sf.master_predicted = params.n + eta - sf.g_of_eta * pc;
    return sf;
}

ScalingFit scaling_fit_trajectory(const FracParams& params, double eta, const std::vector<double>& R_list,
                                  const std::function<double(double, const Point&)>& u,
                                  const TrajectoryFitOptions& opt) {
    ScalingFit sf = scaling_fit_bounds(params, eta, R_list);
    const double alpha = params.alpha(), pc = params.p_conjugate();
    const double beta = opt.beta > 0 ? opt.beta : (alpha + 2) * pc + 1;
    std::array<std::vector<double>, 5> ly;
    std::vector<double> lx;
    for (double R : R_list) {
        const double T = std::pow(R, eta);
        const SpaceGrid grid(params.n, opt.modes, opt.box_length > 0 ? opt.box_length : opt.box_factor * R);
        const TimeMesh mesh(T, opt.time_nodes);
        SpaceTimeSamples s{mesh, grid, {}, {}, std::vector<double>(grid.volume(), 0.0),
                           std::vector<double>(grid.volume(), 0.0)};
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            std::vector<double> row(grid.volume());
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = u(mesh.node(k), grid.point(i));
            s.u.push_back(std::move(row));
        }
        const FiveIntegrals fi = five_integrals(s, params, beta, R, 1.0);
        lx.push_back(std::log(R));
        for (std::size_t j = 0; j < 5; ++j) ly[j].push_back(std::log(std::abs(fi.I[j])));
    }
    sf.master_slope = -kInfinity;
    for (std::size_t j = 0; j < 5; ++j) {
        const LineFit f = fit_line(lx, ly[j]);
        sf.terms[j].slope = f.slope;
        sf.terms[j].r_squared = f.r_squared;
        sf.terms[j].accepted = std::isfinite(f.r_squared) && f.r_squared >= 0.99;
        sf.master_slope = std::max(sf.master_slope, f.slope);
    }
    return sf;
}

LogRegimeTable log_regime_check(const FracParams& params, const std::vector<double>& T_list) {
    params.validate();
    const int n = params.n;
    if (params.gamma > exponents::branch_boundary(n) + 1e-15)
        throw DomainError("gamma: the R = ln T regime needs gamma <= (n-2)/n");
    if (T_list.size() < 2) throw DomainError("T_list: need at least two times");
    const double pc = params.p_conjugate(), ap = params.alpha() * pc;
    LogRegimeTable tab{};
    tab.alpha_p_conjugate = ap;
    tab.in_regime = params.p < 1 / params.gamma && ap > 1;
    tab.delta = tab.in_regime ? (ap - 1) / 2 : 0.0;
    for (double T : T_list) {
        if (!(T > std::exp(1.0))) throw DomainError("T_list: times must exceed e so that ln T > 1");
        const double lt = std::log(T), ll = std::log(lt);
        const double e[5] = {(n - 2 * pc) * ll, (n - 4 * pc) * ll, -pc * lt + (n - 2 * params.theta * pc) * ll,
                             -2 * pc * lt + n * ll, -2 * pc * lt + (n - 2 * pc) * ll};
        const double m = *std::max_element(e, e + 5);
        double s = 0;
        for (double v : e) s += std::exp(v - m);
        const double log_bracket = m + std::log(s);
        tab.rows.push_back({T, lt, (1 - ap) * lt + log_bracket, log_bracket - tab.delta * lt, (1 - ap) * lt});
    }
    tab.bound_decays = true;
    tab.logs_dominated = true;
    for (std::size_t k = 1; k < tab.rows.size(); ++k) {
        if (!(tab.rows[k].log_bound < tab.rows[k - 1].log_bound)) tab.bound_decays = false;
        if (!(tab.rows[k].log_ratio_delta < tab.rows[k - 1].log_ratio_delta)) tab.logs_dominated = false;
    }
    return tab;
}

namespace {

double smooth_step(double s) {
    if (s <= 0) return 0;
    if (s >= 1) return 1;
    const double a = std::exp(-1 / s), b = std::exp(-1 / (1 - s));
    return a / (a + b);
}

double plateau_radial(double r, double q) {
    const double rho = r * smooth_step(2 * r - 1);
    return std::pow(1 + rho * rho, -q / 2);
}

// Radial Laplacian f'' + (n-1) f'/r by central differences (f''(0) n at the origin).
double radial_laplacian(const std::function<double(double)>& f, int n, double r, double h) {
    const double f0 = f(r), fp = f(r + h), fm = f(std::abs(r - h));
    const double d2 = (fp - 2 * f0 + fm) / (h * h);
    if (r < h / 2) return n * d2;
    return d2 + (n - 1) * (fp - fm) / (2 * h * r);
}

} // namespace

double plateau_fn(const Point& x, double q) {
    double r2 = 0;
    for (double v : x) r2 += v * v;
    return plateau_radial(std::sqrt(r2), q);
}

CriticalReport critical_case_probe(int n, double gamma, double theta, const std::vector<double>& R_list) {
    const exponents::ExponentInputs in{n, gamma, theta, {}};
    in.validate();
    if (!(gamma > exponents::branch_boundary(n))) throw DomainError("gamma: critical case needs gamma > (n-2)/n");
    if (R_list.empty()) throw DomainError("R_list: empty");
    CriticalReport rep{};
    rep.p_c = exponents::p_c(in);
    rep.p_c_conjugate = conjugate_exponent(rep.p_c);
    const double alpha = 1 - gamma;
    rep.exponent_b = n + 2 * (1 - theta) - 2 * (alpha + 2) * (1 - theta) * rep.p_c_conjugate;
    rep.K_exponent = -1 + (alpha + 2) * rep.p_c_conjugate;

    const double q = n + 2 * theta;
    const frac_space::BracketSeries lap = frac_space::BracketSeries(n, q).neg_laplacian();
    const frac_space::BracketSeries bil = frac_space::BracketSeries(n, q).pow_neg_laplacian(2);
    constexpr int samples = 2000;
    rep.plateau_flat = true;
    std::vector<double> lx, ly;
    for (double R : R_list) {
        if (!(R > 0)) throw DomainError("R_list: radii must be > 0");
        BallLaplacian b{R, 0, 0, 0}, pl{R, 0, 0, 0};
        const auto prof = [&](double r) { return plateau_radial(r / R, q); };
        const double h = 1e-3 * R;
        const auto prof_lap = [&](double r) { return radial_laplacian(prof, n, r, h); };
        for (int i = 0; i <= samples; ++i) {
            const double r = 8.0 * R * i / samples;  // [0, 8R]
            Point y(n, 0.0);
            y[0] = r / R;
            const double bl = std::abs(lap(y)) / (R * R);
            const double pl_l = std::abs(prof_lap(r));
            b.global_max = std::max(b.global_max, bl);
            pl.global_max = std::max(pl.global_max, pl_l);
            if (r <= R / 2) {
                b.ball_max = std::max(b.ball_max, bl);
                b.ball_max_bilap = std::max(b.ball_max_bilap, std::abs(bil(y)) / std::pow(R, 4));
                pl.ball_max = std::max(pl.ball_max, pl_l);
                pl.ball_max_bilap = std::max(pl.ball_max_bilap, std::abs(radial_laplacian(prof_lap, n, r, h)));
            }
        }
        if (!(pl.ball_max <= 1e-12 * pl.global_max)) rep.plateau_flat = false;
        rep.bracket.push_back(b);
        rep.plateau.push_back(pl);
        lx.push_back(std::log(R));
        ly.push_back(std::log(b.ball_max));
    }
    rep.bracket_slope = R_list.size() >= 2 ? fit_line(lx, ly).slope : std::nan("");
    return rep;
}

DataTermSeries data_term_limit(const Field& u0, const Field& u1, double theta, const std::vector<double>& R_list,
                               std::optional<double> q_opt) {
    if (!(u0.grid == u1.grid)) throw DomainError("u0.grid: differs from u1.grid");
    if (!(theta >= 0 && theta < 1)) throw DomainError("theta: must lie in [0,1)");
    if (R_list.empty()) throw DomainError("R_list: empty");
    const SpaceGrid& grid = u1.grid;
    const int n = grid.dim();
    const double q = q_opt.value_or(n + 2 * theta);
    const double edge = 0.45 * grid.period();
    for (const Field* f : {&u0, &u1}) {
        const double m = f->max_abs();
        for (std::size_t i = 0; i < grid.volume(); ++i) {
            const auto x = grid.point(i);
            double r = 0;
            for (double v : x) r = std::max(r, std::abs(v));
            if (r >= edge && std::abs(f->values[i]) > 1e-8 * m)
                throw DomainError("data: not integrable against the weight (no decay inside the box)");
        }
    }
    const double dv = grid.cell_volume();
    const frac_space::BracketSeries lap = frac_space::BracketSeries(n, q).neg_laplacian();
    const frac_space::Evaluable phi = frac_space::bracket_evaluable(n, q);
    std::map<long long, double> frac_cache;  // (-Delta)^theta <y>^{-q} at radius |y|
    auto frac_phi = [&](double r) {
        const long long key = std::llround(r * 1e10);
        auto it = frac_cache.find(key);
        if (it != frac_cache.end()) return it->second;
        Point y(n, 0.0);
        y[0] = r;
        const double v = frac_space::frac_laplacian_singular(phi, theta, y, 1e4).value;
        frac_cache.emplace(key, v);
        return v;
    };

    DataTermSeries out{};
    out.integral_u1 = 0;
    for (const auto& v : u1.values) out.integral_u1 += v.real() * dv;
    const double u0_max = u0.max_abs();
    for (double R : R_list) {
        if (!(R > 0)) throw DomainError("R_list: radii must be > 0");
        frac_cache.clear();
        std::array<double, 3> t{0, 0, 0};
        for (std::size_t i = 0; i < grid.volume(); ++i) {
            const auto x = grid.point(i);
            const Point y = scaled(x, R);
            const double a0 = u0.values[i].real(), a1 = u1.values[i].real();
            if (a0 != 0 && std::abs(a0) > 1e-16 * u0_max) {
                double r = 0;
                for (double v : y) r += v * v;
                t[0] += a0 * (theta == 0 ? frac_space::bracket_fn(y, q) : std::pow(R, -2 * theta) * frac_phi(std::sqrt(r)));
            }
            if (a1 != 0) {
                t[1] += a1 * frac_space::bracket_fn(y, q);
                t[2] += a1 * lap(y) / (R * R);
            }
        }
        for (double& v : t) v *= dv;
        out.R.push_back(R);
        out.terms.push_back(t);
        out.value.push_back(t[0] + t[1] + t[2]);
        out.deviation.push_back(out.value.back() - out.integral_u1);
    }
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < out.R.size(); ++k)
        if (out.deviation[k] != 0) {
            lx.push_back(std::log(out.R[k]));
            ly.push_back(std::log(std::abs(out.deviation[k])));
        }
    out.deviation_slope = lx.size() >= 2 ? fit_line(lx, ly).slope : std::nan("");
    for (std::size_t k = out.R.size(); k-- > 0;) {
        if (!(out.value[k] > 0)) break;
        out.crossing_R = out.R[k];
    }
    return out;
}

std::string probe_json(const FracParams& params, const FiveIntegrals& fi, const std::vector<ScalingFit>& fits) {
    using nlohmann::json;
    auto num = [](double v) -> json {
        if (std::isfinite(v)) return v;
        return exponents::format_number(v);
    };
    json j;
    j["params"] = {{"n", params.n}, {"gamma", params.gamma}, {"theta", params.theta}, {"p", params.p}};
    j["I_main"] = num(fi.I_main);
    j["I"] = json::array();
    j["bounds"] = json::array();
    bool all = true;
    for (std::size_t k = 0; k < 5; ++k) {
        j["I"].push_back(num(fi.I[k]));
        j["bounds"].push_back(num(fi.bounds[k]));
        if (!(std::abs(fi.I[k]) <= fi.bounds[k])) all = false;
    }
    j["C_eps"] = num(fi.C_eps);
    j["epsilon"] = fi.epsilon;
    j["fits"] = json::array();
    for (const auto& f : fits) {
        json jf;
        jf["eta"] = f.eta;
        jf["g_of_eta"] = num(f.g_of_eta);
        jf["master_predicted"] = num(f.master_predicted);
        jf["master_slope"] = num(f.master_slope);
        jf["terms"] = json::array();
        for (const auto& t : f.terms)
            jf["terms"].push_back({{"j", t.j},
                                   {"sigma", t.sigma},
                                   {"predicted", num(t.predicted)},
                                   {"slope", num(t.slope)},
                                   {"r_squared", num(t.r_squared)},
                                   {"accepted", t.accepted}});
        j["fits"].push_back(jf);
    }
    j["verdict"] = {{"bounds_dominate", all}, {"master_holds", fi.master_holds()}};
    return j.dump(2);
}

} // namespace fracwave::probe
