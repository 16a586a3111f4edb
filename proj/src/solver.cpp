#include "fracwave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace fracwave::solver {

double SolverConfig::admissible_dt() const { return 2.0 * safety / grid.xi_max(); }

void SolverConfig::validate() const {
    params.validate();
    if (!(data_amplitude >= 0) || !std::isfinite(data_amplitude)) throw DomainError("data_amplitude: must be >= 0");
    if (!std::isfinite(u0_amplitude)) throw DomainError("u0_amplitude: must be finite");
    if (!(profile_width > 0)) throw DomainError("profile_width: must be > 0");
    if (!(blowup_threshold > 0)) throw DomainError("blowup_threshold: must be > 0");
    if (snapshot_stride < 1) throw DomainError("snapshot_stride: must be >= 1");
    if (!(safety > 0 && safety <= 1)) throw DomainError("safety: must lie in (0,1]");
    if (initial_profile != "gaussian" && initial_profile != "bracket" && initial_profile != "zero")
        throw DomainError("initial_profile: unknown name '" + initial_profile + "'");
    const double adm = admissible_dt();
    if (dt() > adm * (1 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "dt = %.6g violates the stability budget; admissible dt <= %.6g", dt(), adm);
        throw StabilityError(buf, adm);
    }
}

Field profile_field(const SpaceGrid& grid, const std::string& name, double amplitude, double width) {
    const int n = grid.dim();
    if (name == "zero") return Field(grid);
    if (name == "gaussian")
        return Field::sample(grid, [&](const frac_space::Point& x) {
            double r2 = 0;
            for (double v : x) r2 += v * v;
            return Complex(amplitude * std::exp(-r2 / (2 * width * width)), 0.0);
        });
    if (name == "bracket")
        return Field::sample(grid, [&](const frac_space::Point& x) {
            frac_space::Point y(x);
            for (double& v : y) v /= width;
            return Complex(amplitude * frac_space::bracket_fn(y, n + 1.0), 0.0);
        });
    throw DomainError("initial_profile: unknown name '" + name + "'");
}

InitReport init(const SolverConfig& cfg, const Field& u0, const Field& u1) {
    if (!(u0.grid == cfg.grid)) throw DomainError("u0.grid: differs from the configured grid");
    if (!(u1.grid == cfg.grid)) throw DomainError("u1.grid: differs from the configured grid");
    frac_space::Transform tr(cfg.grid);
    InitReport r{{tr.forward(u0), tr.forward(u1), 0.0}, 0.0, false};
    r.integral_u1 = r.state.v_hat.values[0].real() * cfg.grid.box_volume();
    r.sign_condition = r.integral_u1 > 0;
    return r;
}

namespace {

struct Coefficients {
    std::vector<double> mass;   // 1 + |xi|^2
    std::vector<double> stiff;  // |xi|^4 + |xi|^2
    std::vector<double> damp;   // |xi|^{2 theta}, 1 everywhere for theta = 0
};

Coefficients coefficients(const SpaceGrid& g, double theta) {
    const auto xi2 = g.xi_squared();
    Coefficients c;
    c.mass.resize(xi2.size());
    c.stiff.resize(xi2.size());
    c.damp.resize(xi2.size());
    for (std::size_t i = 0; i < xi2.size(); ++i) {
        c.mass[i] = 1 + xi2[i];
        c.stiff[i] = xi2[i] * xi2[i] + xi2[i];
        c.damp[i] = theta == 0 ? 1.0 : (xi2[i] == 0 ? 0.0 : std::pow(xi2[i], theta));
    }
    return c;
}

} // namespace

double energy(const SpaceGrid& grid, const Field& u_hat, const Field& v_hat) {
    const auto xi2 = grid.xi_squared();
    double s = 0;
    for (std::size_t i = 0; i < xi2.size(); ++i)
        s += (1 + xi2[i]) * std::norm(v_hat.values[i]) + (xi2[i] * xi2[i] + xi2[i]) * std::norm(u_hat.values[i]);
    return s * grid.box_volume();
}

double dissipation(const SpaceGrid& grid, const Field& v_hat, double theta) {
    const auto c = coefficients(grid, theta);
    double s = 0;
    for (std::size_t i = 0; i < c.damp.size(); ++i) s += c.damp[i] * std::norm(v_hat.values[i]);
    return s * grid.box_volume();
}

struct Solver::Impl {
    SolverConfig cfg;
    frac_space::Transform tr;
    Coefficients co;
    std::size_t volume;
    double dt;
    std::vector<char> shell;

    std::vector<Complex> a_m2, a_m1, a_c, v0;
    std::size_t n = 0;  // index of a_c
    bool done = false;

    std::vector<std::vector<double>> history;  // |u_j|^p
    std::shared_ptr<const frac_time::ProductWeights> weights;
    double gamma_alpha = 1.0;
    std::vector<double> forcing;  // physical F at node n
    std::vector<Complex> work;

    Trajectory traj;

    Impl(SolverConfig c) : cfg(std::move(c)), tr(cfg.grid) {}

    void physical(const std::vector<Complex>& a, std::vector<double>& u) {
        tr.inverse(a.data(), work.data());
        u.resize(volume);
        for (std::size_t i = 0; i < volume; ++i) u[i] = work[i].real();
    }

    // Norms of u at node idx; appends a diagnostics row with energy left for later.
    void record_norms(std::size_t idx, const std::vector<double>& u) {
        Diagnostics d{};
        d.t = cfg.mesh.node(idx);
        double sup = 0, l2 = 0, bnd = 0;
        bool finite = true;
        for (std::size_t i = 0; i < volume; ++i) {
            const double a = std::abs(u[i]);
            if (!std::isfinite(u[i])) finite = false;
            sup = std::max(sup, a);
            l2 += u[i] * u[i];
            if (shell[i]) bnd = std::max(bnd, a);
        }
        d.sup_norm = finite ? sup : std::numeric_limits<double>::infinity();
        d.l2_norm = std::sqrt(l2 * cfg.grid.cell_volume());
        d.boundary_norm = bnd;
        d.energy = std::nan("");
        d.dissipation = std::nan("");
        traj.diagnostics.push_back(d);
    }

    void finalize_node(std::size_t idx, const std::vector<Complex>& a, const std::vector<Complex>& v) {
        double e = 0, dis = 0;
        for (std::size_t i = 0; i < volume; ++i) {
            const double nv = std::norm(v[i]);
            e += co.mass[i] * nv + co.stiff[i] * std::norm(a[i]);
            dis += co.damp[i] * nv;
        }
        auto& d = traj.diagnostics[idx];
        d.energy = e * cfg.grid.box_volume();
        d.dissipation = dis * cfg.grid.box_volume();
        if (idx % cfg.snapshot_stride == 0 || idx == cfg.steps() || done) {
            traj.snapshots.push_back({Field(cfg.grid, a), Field(cfg.grid, v), cfg.mesh.node(idx)});
            traj.snapshot_steps.push_back(idx);
        }
    }

    void push_history(const std::vector<double>& u) {
        if (cfg.forcing == Forcing::none) return;
        std::vector<double> h(volume);
        const double p = cfg.params.p;
        for (std::size_t i = 0; i < volume; ++i) h[i] = std::pow(std::abs(u[i]), p);
        history.push_back(std::move(h));
    }

    // F(t_k, .) = Gamma(alpha) sum_j w_{k,j} |u_j|^p
    void compute_forcing(std::size_t k) {
        forcing.assign(volume, 0.0);
        if (cfg.forcing == Forcing::none || k == 0) return;
        for (std::size_t j = 0; j <= k; ++j) {
            const double w = gamma_alpha * weights->weight(k, j);
            const double* h = history[j].data();
            for (std::size_t i = 0; i < volume; ++i) forcing[i] += w * h[i];
        }
    }

    bool check_blowup(std::size_t idx) {
        const auto& d = traj.diagnostics[idx];
        if (!std::isfinite(d.sup_norm) || d.sup_norm > cfg.blowup_threshold) {
            traj.blowup.triggered = true;
            traj.blowup.t_star = d.t;
            traj.blowup.reason = std::isfinite(d.sup_norm) ? "sup-norm above threshold" : "non-finite solution";
            return true;
        }
        return false;
    }
};

Solver::Solver(SolverConfig cfg, const Field& u0, const Field& u1) : impl_(std::make_unique<Impl>(std::move(cfg))) {
    auto& s = *impl_;
    s.cfg.validate();
    const InitReport ir = init(s.cfg, u0, u1);
    s.volume = s.cfg.grid.volume();
    s.dt = s.cfg.dt();
    s.co = coefficients(s.cfg.grid, s.cfg.params.theta);
    s.work.resize(s.volume);
    s.shell.resize(s.volume);
    const double edge = 0.45 * s.cfg.grid.period();
    for (std::size_t i = 0; i < s.volume; ++i) {
        const auto x = s.cfg.grid.point(i);
        double m = 0;
        for (double v : x) m = std::max(m, std::abs(v));
        s.shell[i] = m >= edge;
    }
    s.traj.integral_u1 = ir.integral_u1;
    s.traj.sign_condition = ir.sign_condition;
    s.a_c = ir.state.u_hat.values;
    s.v0 = ir.state.v_hat.values;
    if (s.cfg.forcing == Forcing::memory) {
        const double alpha = s.cfg.params.alpha();
        s.weights = frac_time::product_weights(s.cfg.mesh.size(), s.dt, alpha);
        s.gamma_alpha = std::tgamma(alpha);
        s.history.reserve(s.cfg.mesh.size());
    }
    std::vector<double> u;
    s.physical(s.a_c, u);
    s.record_norms(0, u);
    s.push_history(u);
    if (s.check_blowup(0) || s.cfg.steps() == 0) {
        s.done = true;
        s.finalize_node(0, s.a_c, s.v0);
    }
}

Solver::~Solver() = default;

bool Solver::step() {
    auto& s = *impl_;
    if (s.done) return false;
    const double dt = s.dt, dt2 = dt * dt;
    std::vector<Complex> a_next(s.volume);
    if (s.n == 0) {
        // Taylor start; the memory integral is empty at t = 0.
        for (std::size_t i = 0; i < s.volume; ++i) {
            const Complex acc = (-s.co.damp[i] * s.v0[i] - s.co.stiff[i] * s.a_c[i]) / s.co.mass[i];
            a_next[i] = s.a_c[i] + dt * s.v0[i] + 0.5 * dt2 * acc;
        }
    } else {
        s.compute_forcing(s.n);
        std::vector<Complex> fhat(s.volume);
        if (s.cfg.forcing == Forcing::memory) {
            for (std::size_t i = 0; i < s.volume; ++i) s.work[i] = Complex(s.forcing[i], 0.0);
            s.tr.forward(s.work.data(), fhat.data());
        }
        for (std::size_t i = 0; i < s.volume; ++i) {
            const double m = s.co.mass[i], c = s.co.damp[i], k = s.co.stiff[i];
            const Complex rhs = fhat[i] + m * (2.0 * s.a_c[i] - s.a_m1[i]) / dt2 + c * s.a_m1[i] / (2 * dt) -
                                k * s.a_c[i];
            a_next[i] = rhs / (m / dt2 + c / (2 * dt));
        }
    }
    // velocity at the current node is now available
    std::vector<Complex> v(s.volume);
    if (s.n == 0)
        v = s.v0;
    else
        for (std::size_t i = 0; i < s.volume; ++i) v[i] = (a_next[i] - s.a_m1[i]) / (2 * dt);
    s.finalize_node(s.n, s.a_c, v);

    s.a_m2 = std::move(s.a_m1);
    s.a_m1 = std::move(s.a_c);
    s.a_c = std::move(a_next);
    ++s.n;
    s.traj.steps_done = s.n;

    std::vector<double> u;
    s.physical(s.a_c, u);
    s.record_norms(s.n, u);
    s.push_history(u);
    const bool blown = s.check_blowup(s.n);
    if (blown || s.n == s.cfg.steps()) {
        s.done = true;
        std::vector<Complex> vl(s.volume);
        for (std::size_t i = 0; i < s.volume; ++i)
            vl[i] = s.n >= 2 ? (3.0 * s.a_c[i] - 4.0 * s.a_m1[i] + s.a_m2[i]) / (2 * dt) : (s.a_c[i] - s.a_m1[i]) / dt;
        s.finalize_node(s.n, s.a_c, vl);
        if (blown) s.traj.aborted = s.n < s.cfg.steps();
        return false;
    }
    return true;
}

FieldState Solver::state() const {
    const auto& s = *impl_;
    if (!s.traj.snapshots.empty() && s.traj.snapshot_steps.back() == s.n) return s.traj.snapshots.back();
    return {Field(s.cfg.grid, s.a_c), Field(s.cfg.grid), s.cfg.mesh.node(s.n)};
}

std::size_t Solver::step_index() const { return impl_->n; }

std::vector<double> Solver::forcing_physical() const {
    auto& s = *impl_;
    s.compute_forcing(s.n);
    return s.forcing;
}

Field Solver::forcing_spectral() const {
    auto& s = *impl_;
    s.compute_forcing(s.n);
    Field in(s.cfg.grid);
    for (std::size_t i = 0; i < s.volume; ++i) in.values[i] = s.forcing[i];
    return s.tr.forward(in);
}

const Trajectory& Solver::trajectory() const { return impl_->traj; }

Trajectory Solver::finish() {
    while (step()) {
    }
    auto& t = impl_->traj;
    t.residual = dissipation_residual(t);
    const BlowupReport b = blowup_monitor(t, impl_->cfg.blowup_threshold);
    t.blowup.growth_rate = b.growth_rate;
    return std::move(t);
}

std::vector<double> dissipation_residual(const Trajectory& tr) {
    std::vector<double> r;
    const auto& d = tr.diagnostics;
    for (std::size_t n = 2; n + 2 < d.size(); ++n) {
        const double dt2 = d[n + 1].t - d[n - 1].t;
        r.push_back((d[n + 1].energy - d[n - 1].energy) / dt2 + 2 * d[n].dissipation);
    }
    return r;
}

BlowupReport blowup_monitor(const Trajectory& tr, double threshold) {
    BlowupReport b;
    const auto& d = tr.diagnostics;
    for (const auto& row : d)
        if (!std::isfinite(row.sup_norm) || row.sup_norm > threshold) {
            b.triggered = true;
            b.t_star = row.t;
            b.reason = std::isfinite(row.sup_norm) ? "sup-norm above threshold" : "non-finite solution";
            break;
        }
    // last decade of growth: from the last node where sup <= final/10 to the end
    std::size_t end = d.size();
    while (end > 0 && !(std::isfinite(d[end - 1].sup_norm) && d[end - 1].sup_norm > 0)) --end;
    if (end < 2) return b;
    const double last = d[end - 1].sup_norm;
    std::size_t start = end - 1;
    while (start > 0 && d[start - 1].sup_norm > last / 10 && d[start - 1].sup_norm > 0) --start;
    if (end - start < 2) start = end >= 2 ? end - 2 : 0;
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double k = static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
        const double t = d[i].t, y = std::log(d[i].sup_norm);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double den = k * stt - st * st;
    b.growth_rate = den > 0 ? (k * sty - st * sy) / den : 0.0;
    return b;
}

Trajectory run(const SolverConfig& cfg, const Field& u0, const Field& u1) {
    Solver s(cfg, u0, u1);
    return s.finish();
}

Trajectory run(const SolverConfig& cfg) {
    cfg.validate();
    const Field u0 = profile_field(cfg.grid, cfg.u0_amplitude == 0 ? "zero" : cfg.initial_profile, cfg.u0_amplitude,
                                   cfg.profile_width);
    const Field u1 = profile_field(cfg.grid, cfg.initial_profile, cfg.data_amplitude, cfg.profile_width);
    return run(cfg, u0, u1);
}

void write_diagnostics_csv(const Trajectory& tr, std::ostream& os) {
    os << "t,E,dissipation,sup_norm,L2_norm,boundary_norm\n";
    char buf[256];
    for (const auto& d : tr.diagnostics) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", d.t, d.energy, d.dissipation, d.sup_norm,
                      d.l2_norm, d.boundary_norm);
        os << buf;
    }
}

bool energy_monotone(const Trajectory& tr, double rel_tol) {
    const auto& d = tr.diagnostics;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (!(d[k].energy <= d[k - 1].energy * (1 + rel_tol))) return false;
    return true;
}

} // namespace fracwave::solver
