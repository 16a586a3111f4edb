#include "doctest.h"

#include "fracwave/frac_time.hpp"
#include "fracwave/solver.hpp"

#include <cmath>
#include <complex>
#include <sstream>

using namespace fracwave;
using namespace fracwave::solver;

namespace {

SolverConfig linear_config(double theta, double T, std::size_t nodes, std::size_t modes = 64) {
    SolverConfig c;
    c.params = FracParams{1, 0.5, theta, 2.0};
    c.grid = SpaceGrid(1, modes, 20.0);
    c.mesh = TimeMesh(T, nodes);
    c.forcing = Forcing::none;
    return c;
}

Field cosine(const SpaceGrid& g, int k, double amp) {
    const double w = 2 * M_PI * k / g.period();
    return Field::sample(g, [&](const frac_space::Point& x) { return Complex(amp * std::cos(w * x[0]), 0.0); });
}

// (m a'' + a' + K a = 0, a(0) = 1, a'(0) = 0)
double oscillator(double m, double K, double t) {
    const double mu = 1 / (2 * m);
    const double om = std::sqrt(K / m - mu * mu);
    return std::exp(-mu * t) * (std::cos(om * t) + mu / om * std::sin(om * t));
}

double oscillator_error(std::size_t nodes) {
    auto cfg = linear_config(0.0, 2.0, nodes);
    const int k = 3;
    const Field u0 = cosine(cfg.grid, k, 1.0);
    const Trajectory tr = run(cfg, u0, Field(cfg.grid));
    const double xi = 2 * M_PI * k / cfg.grid.period();
    const double m = 1 + xi * xi, K = xi * xi * m;
    const Complex a0 = tr.snapshots[0].u_hat.values[k];
    double err = 0;
    for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
        const double t = tr.snapshots[s].t;
        const Complex a = tr.snapshots[s].u_hat.values[k];
        err = std::max(err, std::abs(a - a0 * oscillator(m, K, t)));
    }
    return err;
}

} // namespace

TEST_CASE("zero data gives the zero state and zero energy") {
    auto cfg = linear_config(0.25, 0.5, 51);
    const Field z(cfg.grid);
    const InitReport ir = init(cfg, z, z);
    CHECK_FALSE(ir.sign_condition);
    CHECK(ir.integral_u1 == 0.0);
    CHECK(energy(cfg.grid, ir.state.u_hat, ir.state.v_hat) == 0.0);
    cfg.forcing = Forcing::memory;
    const Trajectory tr = run(cfg, z, z);
    for (const auto& s : tr.snapshots) {
        CHECK(s.u_hat.max_abs() == 0.0);
        CHECK(s.v_hat.max_abs() == 0.0);
    }
    for (const auto& d : tr.diagnostics) CHECK(d.energy == 0.0);
}

TEST_CASE("init zero mode of a gaussian matches the direct sum") {
    auto cfg = linear_config(0.0, 1.0, 11);
    const Field u1 = profile_field(cfg.grid, "gaussian", 1e-3, 1.0);
    const InitReport ir = init(cfg, Field(cfg.grid), u1);
    double direct = 0;
    for (std::size_t i = 0; i < cfg.grid.volume(); ++i) {
        const double x = cfg.grid.coord(i);
        direct += 1e-3 * std::exp(-x * x / 2) * cfg.grid.cell_volume();
    }
    CHECK(std::abs(ir.integral_u1 - direct) < 1e-10 * direct);
    CHECK(std::abs(ir.integral_u1 - 1e-3 * std::sqrt(2 * M_PI)) < 1e-10 * direct);
    CHECK(ir.sign_condition);

    const Field b = profile_field(cfg.grid, "bracket", 1e-3, 1.0);
    CHECK(init(cfg, Field(cfg.grid), b).integral_u1 > 0);
    CHECK_THROWS_AS(init(cfg, Field(SpaceGrid(1, 32, 20.0)), u1), DomainError);
    CHECK_THROWS_AS(profile_field(cfg.grid, "square", 1.0, 1.0), DomainError);
}

TEST_CASE("single mode follows the damped oscillator at second order") {
    const double e1 = oscillator_error(201);
    const double e2 = oscillator_error(401);
    const double e3 = oscillator_error(801);
    CHECK(e3 < 1e-4);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::log2(e2 / e3) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("linear runs dissipate energy and the residual is small") {
    for (double theta : {0.0, 0.25}) {
        auto cfg = linear_config(theta, 1.0, 1001);
        const Trajectory tr = run(cfg, Field(cfg.grid), profile_field(cfg.grid, "gaussian", 1.0, 1.0));
        CHECK(energy_monotone(tr));
        double rmax = 0, emax = 0;
        for (double r : tr.residual) rmax = std::max(rmax, std::abs(r));
        for (const auto& d : tr.diagnostics) emax = std::max(emax, d.energy);
        CHECK(rmax / emax <= 1e-3);
        CHECK(tr.residual.size() == tr.diagnostics.size() - 4);
        CHECK_FALSE(blowup_monitor(tr, 1e6).triggered);
    }
}

TEST_CASE("energy and dissipation helpers agree with the trajectory") {
    auto cfg = linear_config(0.25, 0.2, 101);
    const Field u0 = cosine(cfg.grid, 2, 0.5);
    const Trajectory tr = run(cfg, u0, Field(cfg.grid));
    const auto& s = tr.snapshots[10];
    CHECK(energy(cfg.grid, s.u_hat, s.v_hat) == doctest::Approx(tr.diagnostics[10].energy).epsilon(1e-13));
    CHECK(dissipation(cfg.grid, s.v_hat, 0.25) == doctest::Approx(tr.diagnostics[10].dissipation).epsilon(1e-13));
}

TEST_CASE("theta = 0 matches the theta -> 0 limit on zero-mean data") {
    auto c0 = linear_config(0.0, 1.0, 201);
    auto c1 = linear_config(1e-14, 1.0, 201);
    const Field u0 = cosine(c0.grid, 4, 1.0);
    const Field u1 = cosine(c0.grid, 1, 0.3);
    const Trajectory a = run(c0, u0, u1);
    const Trajectory b = run(c1, u0, u1);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    double diff = 0;
    for (std::size_t s = 0; s < a.snapshots.size(); ++s)
        for (std::size_t i = 0; i < c0.grid.volume(); ++i)
            diff = std::max(diff, std::abs(a.snapshots[s].u_hat.values[i] - b.snapshots[s].u_hat.values[i]));
    CHECK(diff < 1e-12);
}

TEST_CASE("memory forcing of a uniform state matches memory_convolve") {
    SolverConfig cfg;
    cfg.params = FracParams{1, 0.4, 0.1, 1.5};
    cfg.grid = SpaceGrid(1, 16, 10.0);
    cfg.mesh = TimeMesh(1.0, 41);
    cfg.forcing = Forcing::memory;
    const Field u0 = Field::sample(cfg.grid, [](const frac_space::Point&) { return Complex(0.2, 0.0); });
    const Field u1 = Field::sample(cfg.grid, [](const frac_space::Point&) { return Complex(0.5, 0.0); });
    Solver s(cfg, u0, u1);
    for (int k = 0; k < 30; ++k) s.step();
    const std::size_t n = s.step_index();
    const auto& d = s.trajectory().diagnostics;
    std::vector<double> hist;
    for (std::size_t j = 0; j <= n; ++j) hist.push_back(d[j].sup_norm);
    const frac_time::TimeMesh sub(n * cfg.dt(), n + 1);
    const auto F = frac_time::memory_convolve(frac_time::SampledFn(sub, hist), 0.4, 1.5);
    const Field fh = s.forcing_spectral();
    CHECK(fh.values[0].real() == doctest::Approx(F.values[n]).epsilon(1e-12));
    CHECK(fh.values[0].real() * cfg.grid.box_volume() ==
          doctest::Approx(F.values[n] * cfg.grid.box_volume()).epsilon(1e-12));
    for (std::size_t i = 1; i < cfg.grid.volume(); ++i) CHECK(std::abs(fh.values[i]) < 1e-12 * F.values[n]);
    for (double v : s.forcing_physical()) CHECK(v == doctest::Approx(F.values[n]).epsilon(1e-12));
}

TEST_CASE("nonlinear runs keep conjugate symmetry") {
    SolverConfig cfg;
    cfg.params = FracParams{2, 0.5, 0.2, 2.0};
    cfg.grid = SpaceGrid(2, 16, 10.0);
    cfg.mesh = TimeMesh(0.5, 51);
    cfg.data_amplitude = 0.5;
    cfg.u0_amplitude = 0.3;
    const Trajectory tr = run(cfg);
    const std::size_t M = 16;
    double worst = 0;
    for (const auto& s : tr.snapshots)
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) {
                const Complex a = s.u_hat.values[i * M + j];
                const Complex b = s.u_hat.values[((M - i) % M) * M + (M - j) % M];
                worst = std::max(worst, std::abs(a - std::conj(b)));
            }
    CHECK(worst < 1e-12);
}

TEST_CASE("run bookkeeping") {
    auto cfg = linear_config(0.1, 0.0, 1);
    const Trajectory t0 = run(cfg);
    CHECK(t0.snapshots.size() == 1);
    CHECK(t0.diagnostics.size() == 1);
    CHECK(t0.residual.empty());

    for (std::size_t k : {1u, 3u, 7u, 10u}) {
        auto c = linear_config(0.1, 1.0, 101);
        c.snapshot_stride = k;
        const Trajectory tr = run(c);
        CHECK(tr.snapshots.size() == (100 + k - 1) / k + 1);
        CHECK(tr.snapshot_steps.back() == 100);
        for (std::size_t i = 1; i < tr.snapshots.size(); ++i) CHECK(tr.snapshots[i].t > tr.snapshots[i - 1].t);
    }

    auto c = linear_config(0.1, 1.0, 101);
    c.forcing = Forcing::memory;
    std::ostringstream a, b;
    write_diagnostics_csv(run(c), a);
    write_diagnostics_csv(run(c), b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("t,E,dissipation,sup_norm,L2_norm,boundary_norm\n", 0) == 0);
}

TEST_CASE("stability budget") {
    auto cfg = linear_config(0.0, 5.0, 11);
    CHECK(cfg.admissible_dt() == doctest::Approx(2 * 0.5 / cfg.grid.xi_max()));
    try {
        cfg.validate();
        FAIL("expected StabilityError");
    } catch (const StabilityError& e) {
        CHECK(e.admissible_dt() == doctest::Approx(cfg.admissible_dt()));
    }
    cfg.snapshot_stride = 0;
    cfg.mesh = TimeMesh(5.0, 10001);
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("blow-up monitor reports time and growth rate") {
    Trajectory tr;
    for (int i = 0; i <= 100; ++i) {
        const double t = 0.01 * i;
        tr.diagnostics.push_back({t, 0, 0, std::exp(3.0 * t), 0, 0});
    }
    const auto r = blowup_monitor(tr, 10.0);
    CHECK(r.triggered);
    CHECK(r.t_star == doctest::Approx(0.77));
    CHECK(r.growth_rate == doctest::Approx(3.0).epsilon(1e-9));
    tr.diagnostics.back().sup_norm = std::nan("");
    CHECK(blowup_monitor(tr, 1e9).triggered);

    SolverConfig cfg;
    cfg.params = FracParams{1, 0.5, 0.1, 1.2};
    cfg.mesh = TimeMesh(2.0, 201);
    cfg.data_amplitude = 50.0;
    cfg.blowup_threshold = 100.0;
    const Trajectory b = run(cfg);
    CHECK(b.blowup.triggered);
    CHECK(b.aborted);
    CHECK(b.blowup.t_star == doctest::Approx(b.diagnostics.back().t));
    CHECK(b.blowup.growth_rate > 0);
}

TEST_CASE("dissipation residual converges at second order") {
    for (double theta : {0.0, 0.25}) {
        std::vector<double> r;
        for (std::size_t nodes : {501u, 1001u, 2001u}) {
            auto cfg = linear_config(theta, 5.0, nodes);
            const Trajectory tr = run(cfg, Field(cfg.grid), profile_field(cfg.grid, "gaussian", 1.0, 1.0));
            double m = 0;
            for (double x : tr.residual) m = std::max(m, std::abs(x));
            r.push_back(m);
        }
        CHECK(std::log2(r[0] / r[1]) == doctest::Approx(2.0).epsilon(0.05));
        CHECK(std::log2(r[1] / r[2]) == doctest::Approx(2.0).epsilon(0.05));
    }
}
