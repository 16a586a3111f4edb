#include "doctest.h"

#include "fracwave/exponents.hpp"
#include "fracwave/nonexistence_probe.hpp"

#include <cmath>

using namespace fracwave;
using namespace fracwave::probe;

namespace {

TestPair pair_for(double T, double theta, double R, double beta = 4.0, double alpha = 0.5, int n = 1) {
    return TestPair(CutoffParams(T, beta, frac_time::FracOrder(alpha)), n, theta, R);
}

Field gaussian(const SpaceGrid& g, double mass) {
    return Field::sample(g, [&](const Point& x) {
        return frac_space::Complex(mass * std::exp(-x[0] * x[0] / 2) / std::sqrt(2 * M_PI), 0.0);
    });
}

} // namespace

TEST_CASE("test pair satisfies the endpoint conditions") {
    const TestPair p = pair_for(2.0, 0.25, 3.0);
    CHECK(p.psi(0.0) == 1.0);
    CHECK(p.psi(2.0) == 0.0);
    CHECK(p.dpsi(2.0) == 0.0);
    CHECK(p.normalization() == doctest::Approx(frac_time::cutoff_constant(0.5, 4.0) * std::pow(2.0, -0.5)));
    // psi_T matches the closed-form fractional derivative of the cutoff
    for (double t : {0.0, 0.3, 1.1, 1.9})
        CHECK(p.psi_T(0, t) == doctest::Approx(frac_time::closed_cutoff_derivative(p.cutoff(), t)).epsilon(1e-13));
    // derivatives against central differences
    const double h = 1e-5;
    for (double t : {0.4, 1.2}) {
        CHECK(p.dpsi(t) == doctest::Approx((p.psi(t + h) - p.psi(t - h)) / (2 * h)).epsilon(1e-8));
        CHECK(p.ddpsi(t) == doctest::Approx((p.dpsi(t + h) - p.dpsi(t - h)) / (2 * h)).epsilon(1e-8));
    }
    for (double x : {0.0, 1.0, 7.0, 100.0}) CHECK(p.phi({x}) > 0);
    CHECK(p.phi({0.0}) == 1.0);
    CHECK(p.q() == doctest::Approx(1.5));
    CHECK(p.neg_lap_phi({0.0}) == doctest::Approx(p.q() / 9.0));
}

TEST_CASE("weak residual of the zero state vanishes") {
    const SpaceGrid g(1, 32, 20.0);
    const TimeMesh m(1.0, 21);
    SpaceTimeSamples s{m, g, std::vector<std::vector<double>>(21, std::vector<double>(32, 0.0)),
                       std::vector<std::vector<double>>(21, std::vector<double>(32, 0.0)), std::vector<double>(32, 0.0),
                       std::vector<double>(32, 0.0)};
    const TestPair p = pair_for(1.0, 0.2, 2.0);
    const auto r = weak_residual(s, temporal_test(p), spatial_test(p, g));
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.gap == 0.0);
}

TEST_CASE("weak residual rejects an unnormalized psi") {
    const SpaceGrid g(1, 16, 20.0);
    const TimeMesh m(1.0, 11);
    const auto s = manufactured_samples(g, m, 0.0);
    const TestPair p = pair_for(1.0, 0.0, 2.0);
    TemporalTest bad = temporal_test(p);
    bad.psi = [&](double t) { return p.psi_T(0, t); };
    CHECK_THROWS_AS(weak_residual(s, bad, spatial_test(p, g)), DomainError);
    CHECK_THROWS_AS(weak_residual(s, temporal_test(pair_for(2.0, 0.0, 2.0)), spatial_test(p, g)), DomainError);
}

TEST_CASE("manufactured solution: gap converges and the mutation breaks it") {
    for (double theta : {0.0, 0.3}) {
        std::vector<double> gaps, mutated;
        for (int lev = 1; lev <= 4; ++lev) {
            const SpaceGrid g(1, 16u << lev, 20.0);
            const TimeMesh m(2.0, (20u << lev) + 1);
            const auto s = manufactured_samples(g, m, theta);
            const TestPair p = pair_for(2.0, theta, 3.0);
            const auto sp = spatial_test(p, g);
            gaps.push_back(weak_residual(s, temporal_test(p), sp).gap);
            mutated.push_back(weak_residual(s, temporal_test(p), sp, {true}).gap);
        }
        for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] < gaps[k - 1]);
        CHECK(std::log2(gaps[2] / gaps[3]) >= 1.0);
        for (double v : mutated) CHECK(v > 0.1);
    }
}

TEST_CASE("solver trajectory satisfies the weak identity approximately") {
    solver::SolverConfig c;
    c.params = FracParams{1, 0.5, 0.1, 1.5};
    c.grid = SpaceGrid(1, 64, 40.0);
    c.mesh = TimeMesh(2.0, 401);
    c.data_amplitude = 0.5;
    c.u0_amplitude = 0.2;
    const auto tr = solver::run(c);
    const auto s = samples_from_trajectory(tr, c);
    const TestPair p = pair_for(2.0, 0.1, 3.0);
    CHECK(weak_residual(s, temporal_test(p), spatial_test(p, c.grid)).gap < 1e-4);
    c.snapshot_stride = 2;
    CHECK_THROWS_AS(samples_from_trajectory(solver::run(c), c), DomainError);
}

TEST_CASE("young constant") {
    // a b <= eps a^p + C b^{p'} is tight at the optimum
    const double eps = 0.1, p = 3.0, pc = 1.5;
    const double C = young_constant(eps, p);
    CHECK(C == doctest::Approx(std::pow(eps * p, -pc / p) / pc));
    for (double b : {0.1, 1.0, 4.0}) {
        double worst = -1e300;
        for (int i = 1; i < 20000; ++i) {
            const double a = i * 1e-3;
            worst = std::max(worst, a * b - eps * std::pow(a, p) - C * std::pow(b, pc));
        }
        CHECK(worst <= 1e-12);
        CHECK(worst > -1e-5);
    }
    CHECK_THROWS_AS(young_constant(0.0, 2.0), DomainError);
}

TEST_CASE("five integrals of the zero state") {
    const SpaceGrid g(1, 32, 20.0);
    const TimeMesh m(1.0, 21);
    SpaceTimeSamples s{m, g, std::vector<std::vector<double>>(21, std::vector<double>(32, 0.0)), {}, {}, {}};
    const auto fi = five_integrals(s, FracParams{1, 0.5, 0.2, 2.0}, 6.0, 2.0, 0.1);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(fi.I[j] == 0.0);
        CHECK(fi.bounds[j] >= 0.0);
    }
    CHECK(fi.I_u == 0.0);
    CHECK_THROWS_AS(five_integrals(s, FracParams{1, 0.5, 0.2, 2.0}, 4.0, 2.0, 0.1), DomainError);
    CHECK_THROWS_AS(five_integrals(s, FracParams{1, 0.5, 0.2, 2.0}, 6.0, 2.0, 0.0), DomainError);
}

TEST_CASE("Young bounds dominate on a subcritical trajectory") {
    solver::SolverConfig c;
    c.params = FracParams{1, 0.5, 0.1, 1.5};
    c.grid = SpaceGrid(1, 64, 40.0);
    c.mesh = TimeMesh(3.0, 301);
    c.data_amplitude = 0.5;
    const auto tr = solver::run(c);
    const auto s = samples_from_trajectory(tr, c);
    const double beta = (c.params.alpha() + 2) * c.params.p_conjugate() + 1;
    for (double R : {2.0, 5.0, 10.0}) {
        const auto fi = five_integrals(s, c.params, beta, R, 0.1);
        for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(fi.I[j]) <= fi.bounds[j]);
        CHECK(fi.master_holds());
        CHECK(fi.I_main == doctest::Approx(std::tgamma(0.5) * fi.I_u));
    }
}

TEST_CASE("g from the five branches equals the reduced g") {
    for (double gamma : {0.1, 0.5, 0.9})
        for (double theta : {0.0, 0.2, 0.45})
            for (int i = 0; i <= 2000; ++i) {
                const double eta = 0.005 * i;
                const auto g = g_branches(eta, gamma, theta);
                CHECK(*std::min_element(g.begin(), g.end()) ==
                      doctest::Approx(exponents::g_eta(eta, gamma, theta)).epsilon(1e-12));
            }
}

TEST_CASE("bound-only slopes equal the predicted exponents") {
    const FracParams prm{2, 0.6, 0.2, 1.8};
    const double pc = prm.p_conjugate();
    for (double eta : {0.0, 2 * prm.theta, 2 * (1 - prm.theta), 5.0}) {
        const auto sf = scaling_fit_bounds(prm, eta, {2, 5, 10, 50, 100});
        const auto g = g_branches(eta, prm.gamma, prm.theta);
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(std::abs(sf.terms[j].slope - (prm.n + eta - g[j] * pc)) < 1e-10);
            CHECK(sf.terms[j].accepted);
        }
        CHECK(std::abs(sf.master_slope - sf.master_predicted) < 1e-10);
        if (eta == 0.0) {
            const auto orders = term_orders(prm.theta);
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(std::abs(sf.terms[j].slope - (prm.n - 2 * orders[j].second * pc)) < 1e-10);
        }
    }
    CHECK_THROWS_AS(scaling_fit_bounds(prm, 1.0, {2, 5}), DomainError);
}

TEST_CASE("master exponent changes sign at p_c") {
    for (int n : {1, 2, 3})
        for (double gamma : {0.5, 0.8})
            for (double theta : {0.0, 0.2, 0.4}) {
                const exponents::ExponentInputs in{n, gamma, theta, {}};
                if (!(gamma > exponents::branch_boundary(n))) continue;
                const double pc = exponents::p_c(in);
                const double eta = 2 * (1 - theta);
                if (!std::isfinite(pc)) {
                    CHECK(std::isinf(master_exponent_root(n, gamma, theta, eta)));
                    continue;
                }
                CHECK(std::abs(master_exponent_root(n, gamma, theta, eta) - pc) < 1e-10 * pc);
                CHECK(master_exponent(FracParams{n, gamma, theta, pc * (1 - 1e-6)}, eta) < 0);
                CHECK(master_exponent(FracParams{n, gamma, theta, pc * (1 + 1e-6)}, eta) > 0);
            }
}

TEST_CASE("trajectory-mode fit on a fixed profile") {
    TrajectoryFitOptions opt;
    opt.modes = 256;
    opt.box_length = 40;
    opt.time_nodes = 65;
    const FracParams prm{1, 0.5, 0.25, 2.0};
    const auto sf = scaling_fit_trajectory(prm, 0.0, {10, 20, 50, 100},
                                           [](double, const Point& x) { return std::exp(-x[0] * x[0] / 2); }, opt);
    CHECK(sf.terms[0].slope == doctest::Approx(-2.0).epsilon(0.03));
    CHECK(sf.terms[1].slope == doctest::Approx(-4.0).epsilon(0.03));
    CHECK(std::abs(sf.terms[3].slope) < 0.05);
    CHECK(sf.terms[4].slope == doctest::Approx(-2.0).epsilon(0.03));
    CHECK(sf.terms[0].accepted);
}

TEST_CASE("log regime table") {
    const auto t = log_regime_check(FracParams{6, 0.25, 0.0, 3.0}, {1e40, 1e80, 1e160, 1e300});
    CHECK(t.alpha_p_conjugate == doctest::Approx(1.125));
    CHECK(t.delta == doctest::Approx(0.0625));
    CHECK(t.in_regime);
    CHECK(t.bound_decays);
    CHECK(t.logs_dominated);

    const auto edge = log_regime_check(FracParams{6, 0.25, 0.0, 4.0}, {1e40, 1e80});
    CHECK(edge.alpha_p_conjugate == doctest::Approx(1.0));
    CHECK_FALSE(edge.in_regime);
    CHECK_FALSE(edge.bound_decays);

    CHECK_THROWS_AS(log_regime_check(FracParams{2, 0.5, 0.0, 1.5}, {1e10, 1e20}), DomainError);
    CHECK_THROWS_AS(log_regime_check(FracParams{6, 0.25, 0.0, 3.0}, {2.0, 1e20}), DomainError);
}

TEST_CASE("critical case probe") {
    const auto r = critical_case_probe(2, 0.5, 0.0, {10, 100, 1000});
    CHECK(r.p_c == doctest::Approx(4.0));
    CHECK(r.p_c_conjugate == doctest::Approx(4.0 / 3.0));
    CHECK(r.exponent_b == doctest::Approx(4.0 - 20.0 / 3.0));
    CHECK(r.exponent_b < 0);
    CHECK(r.K_exponent == doctest::Approx(-1 + 2.5 * 4.0 / 3.0));
    CHECK(r.K_exponent > 0);
    CHECK(r.bracket_slope == doctest::Approx(-2.0).epsilon(1e-9));
    // the bracket Laplacian is largest inside the ball: the profile is not flat there
    for (const auto& b : r.bracket) {
        CHECK(b.ball_max == doctest::Approx(b.global_max));
        CHECK(b.ball_max == doctest::Approx(4.0 / (b.R * b.R)));  // q n / R^2
    }
    CHECK(r.plateau_flat);
    for (const auto& b : r.plateau) {
        CHECK(b.ball_max == 0.0);
        CHECK(b.global_max > 0.0);
    }
    CHECK(plateau_fn({0.3, 0.1}, 2.0) == 1.0);
    CHECK(plateau_fn({3.0, 0.0}, 2.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(critical_case_probe(4, 0.3, 0.0, {10}), DomainError);
}

TEST_CASE("data term limit") {
    const SpaceGrid g(1, 256, 40.0);
    const std::vector<double> Rs{10, 20, 40, 80, 160};

    const auto a = data_term_limit(Field(g), gaussian(g, 1.0), 0.25, Rs);
    CHECK(a.integral_u1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.value.back() == doctest::Approx(1.0).epsilon(1e-4));
    // with u0 = 0 only the R^{-2} terms remain
    CHECK(a.deviation_slope == doctest::Approx(-2.0).epsilon(0.03));

    const auto b = data_term_limit(gaussian(g, 1.0), gaussian(g, 1.0), 0.25, Rs);
    CHECK(b.deviation_slope == doctest::Approx(-0.5).epsilon(0.05));

    const auto z = data_term_limit(gaussian(g, 1.0), Field(g), 0.25, Rs);
    CHECK(z.integral_u1 == 0.0);
    CHECK(std::abs(z.value.back()) < std::abs(z.value.front()));
    const auto zz = data_term_limit(Field(g), Field(g), 0.25, Rs);
    for (double v : zz.value) CHECK(v == 0.0);

    const auto c = data_term_limit(gaussian(g, -3.0), gaussian(g, 1.0), 0.25, {1.5, 3, 10, 30, 100});
    REQUIRE(c.crossing_R.has_value());
    CHECK(*c.crossing_R == 10.0);
    CHECK(c.value.front() < 0);

    const Field flat = Field::sample(g, [](const Point&) { return frac_space::Complex(1.0, 0.0); });
    CHECK_THROWS_AS(data_term_limit(Field(g), flat, 0.25, Rs), DomainError);
}

TEST_CASE("probe json carries the verdict") {
    const SpaceGrid g(1, 32, 20.0);
    const TimeMesh m(1.0, 21);
    SpaceTimeSamples s{m, g, std::vector<std::vector<double>>(21, std::vector<double>(32, 0.0)), {}, {}, {}};
    const FracParams prm{1, 0.5, 0.2, 2.0};
    const auto fi = five_integrals(s, prm, 6.0, 2.0, 0.1);
    const std::string js = probe_json(prm, fi, {scaling_fit_bounds(prm, 1.0, {2, 20})});
    CHECK(js.find("\"verdict\"") != std::string::npos);
    CHECK(js.find("\"bounds_dominate\": true") != std::string::npos);
}
