#include "doctest.h"

#include "fracwave/error.hpp"
#include "fracwave/frac_time.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace fracwave;
using namespace fracwave::frac_time;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t from, std::size_t to) {
    double m = 0;
    for (std::size_t i = from; i < to; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Independent oracle: adaptive Simpson on the substituted integral
// J^a f(t) = 1/Gamma(a+1) * int_0^{t^a} f(t - v^{1/a}) dv, which removes the singularity.
double simpson(const std::function<double(double)>& g, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = g(a) + g(b);
    for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

double oracle_left_integral(const std::function<double(double)>& f, double a, double t) {
    auto g = [&](double v) { return f(t - std::pow(v, 1.0 / a)); };
    return simpson(g, 0.0, std::pow(t, a)) / std::tgamma(a + 1);
}

} // namespace

TEST_CASE("time mesh and sampled functions validate their inputs") {
    CHECK_THROWS_AS(TimeMesh(0.0, 10), DomainError);
    CHECK_THROWS_AS(TimeMesh(1.0, 1), DomainError);
    CHECK(TimeMesh(0.0, 1).node(0) == 0.0);
    CHECK(TimeMesh(0.0, 1).step() == 0.0);
    TimeMesh m(2.0, 5);
    CHECK(m.node(0) == 0.0);
    CHECK(m.node(4) == 2.0);
    CHECK(m.step() == doctest::Approx(0.5));
    CHECK_THROWS_AS(SampledFn(m, {1, 2, 3}), DomainError);
    CHECK_THROWS_AS(SampledFn(m, {1, 2, NAN, 4, 5}), DomainError);
    CHECK_THROWS_AS(FracOrder(0.0), DomainError);
    CHECK_THROWS_AS(FracOrder(1.0), DomainError);
    CHECK_THROWS_AS(CutoffParams(1.0, 2.4, FracOrder(0.5)), DomainError);
}

TEST_CASE("rl_integral of zero and of a constant") {
    TimeMesh m(1.0, 257);
    auto zero = SampledFn::sample(m, [](double) { return 0.0; });
    for (double v : rl_integral(zero, FracOrder(0.37)).values) CHECK(v == 0.0);

    auto one = SampledFn::sample(m, [](double) { return 1.0; });
    auto j = rl_integral(one, FracOrder(0.5));
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(j.values[i] == doctest::Approx(std::sqrt(m.node(i)) / std::tgamma(1.5)).epsilon(1e-12));
}

TEST_CASE("rl_integral agrees with a substitution-quadrature oracle") {
    TimeMesh m(1.0, 1025);
    for (double a : {0.3, 0.5, 0.8}) {
        auto f = [](double t) { return std::cos(3 * t) + t; };
        auto j = rl_integral(SampledFn::sample(m, f), FracOrder(a));
        for (std::size_t i : {100u, 512u, 1024u})
            CHECK(j.values[i] == doctest::Approx(oracle_left_integral(f, a, m.node(i))).epsilon(1e-5));
    }
}

TEST_CASE("right integral of the cutoff matches the closed form") {
    const double T = 1.5, beta = 4.0, alpha = 0.4, ap = 1 - alpha;
    TimeMesh m(T, 4097);
    auto w = SampledFn::sample(m, [&](double t) { return cutoff(t, T, beta); });
    auto j = rl_integral(w, FracOrder(ap), Side::right);
    const double k = std::tgamma(1 + beta) / std::tgamma(beta + 2 - alpha) * std::pow(T, 1 - alpha);
    for (std::size_t i = 0; i < m.size(); i += 256)
        CHECK(j.values[i] ==
              doctest::Approx(k * std::pow(1 - m.node(i) / T, beta + 1 - alpha)).epsilon(1e-5));
}

TEST_CASE("rl_integral is linear and positive") {
    TimeMesh m(1.0, 513);
    auto f = SampledFn::sample(m, [](double t) { return std::exp(t); });
    auto g = SampledFn::sample(m, [](double t) { return t * t * t; });
    std::vector<double> comb(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) comb[i] = 2.5 * f.values[i] - 0.75 * g.values[i];
    FracOrder a(0.45);
    for (Side s : {Side::left, Side::right}) {
        auto jf = rl_integral(f, a, s), jg = rl_integral(g, a, s), jc = rl_integral(SampledFn(m, comb), a, s);
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(jc.values[i] == doctest::Approx(2.5 * jf.values[i] - 0.75 * jg.values[i]).epsilon(1e-13));
            CHECK(jg.values[i] >= 0.0);
        }
    }
}

TEST_CASE("semigroup on monomials") {
    TimeMesh m(1.0, 2049);
    auto f = SampledFn::sample(m, [](double t) { return t * t; });
    const double a = 0.3, b = 0.45;
    auto twice = rl_integral(rl_integral(f, FracOrder(a)), FracOrder(b));
    auto once = rl_integral(f, FracOrder(a + b));
    CHECK(max_abs_diff(twice.values, once.values, 0, m.size()) < 1e-6);
    // closed form Gamma(3)/Gamma(3+a+b) t^{2+a+b}
    const double k = 2.0 / std::tgamma(3 + a + b);
    CHECK(once.values.back() == doctest::Approx(k).epsilon(1e-6));
}

TEST_CASE("rl_derivative of a constant and of zero") {
    TimeMesh m(1.0, 2049);
    auto one = SampledFn::sample(m, [](double) { return 1.0; });
    auto d = rl_derivative(one, FracOrder(0.3));
    for (std::size_t i = 64; i + 1 < m.size(); i += 64)
        CHECK(d.values[i] == doctest::Approx(std::pow(m.node(i), -0.3) / std::tgamma(0.7)).epsilon(1e-6));
    auto zero = SampledFn::sample(m, [](double) { return 0.0; });
    for (double v : rl_derivative(zero, FracOrder(0.6)).values) CHECK(v == 0.0);
    CHECK_THROWS_AS(rl_derivative(SampledFn(TimeMesh(1.0, 4), {1, 1, 1, 1}), FracOrder(0.5)), DomainError);
}

TEST_CASE("closed cutoff derivative examples") {
    CutoffParams p(1.0, 4.0, FracOrder(0.5));
    CHECK(closed_cutoff_derivative(p, 1.0) == 0.0);
    CHECK(closed_cutoff_derivative(p, 0.0) == doctest::Approx(24.0 / std::tgamma(4.5)));
    CHECK(closed_cutoff_derivative(p, 0.0) == doctest::Approx(2.0634).epsilon(1e-4));
    CHECK_THROWS_AS(closed_cutoff_derivative(p, 1.5), DomainError);
    CHECK_THROWS_AS(closed_cutoff_derivative(p, -0.1), DomainError);
}

TEST_CASE("closed cutoff derivative matches quadrature; printed constant does not") {
    TimeMesh m(1.0, 4097);
    for (double a : {0.25, 0.5, 0.75})
        for (double beta : {3.0, 4.0, 6.0}) {
            CutoffParams p(1.0, beta, FracOrder(a));
            auto d = rl_derivative(SampledFn::sample(m, [&](double t) { return cutoff(t, 1.0, beta); }),
                                   FracOrder(a), Side::right);
            double worst = 0;
            for (std::size_t i = 0; i + 1 < m.size(); ++i)
                worst = std::max(worst, std::abs(d.values[i] - closed_cutoff_derivative(p, m.node(i))));
            CHECK(worst < 1e-4);
            const double ratio = cutoff_constant(a, beta) / printed_cutoff_constant(a, beta);
            CHECK(ratio == doctest::Approx((beta + 2 - a) / (beta - a)));
            CHECK(std::abs(d.values[0] / (printed_cutoff_constant(a, beta)) - 1) > 0.1);
        }
}

TEST_CASE("cutoff values") {
    CHECK(cutoff(0.0, 3.0, 2.5) == 1.0);
    CHECK(cutoff(3.0, 3.0, 2.5) == 0.0);
    CHECK(cutoff(7.0, 3.0, 2.5) == 0.0);
    CHECK(cutoff(0.5, 1.0, 2.0) == doctest::Approx(0.25));
}

TEST_CASE("cutoff derivative bounds dominate numeric derivatives") {
    CutoffParams p(1.0, 4.0, FracOrder(0.5));
    for (double t : {0.0, 0.3, 0.9})
        CHECK(cutoff_derivative_bound(p, 0, t) == doctest::Approx(std::abs(closed_cutoff_derivative(p, t))));
    CHECK(cutoff_derivative_bound(p, 1, 1.0) == 0.0);
    CHECK_THROWS_AS(cutoff_derivative_bound(p, 3, 0.5), DomainError);

    CutoffParams q(2.0, 6.0, FracOrder(0.5));
    const double h = 1e-4;
    for (int i = 1; i < 200; ++i) {
        const double t = 2.0 * i / 200;
        const double tp = std::min(t + h, 2.0), tm = t - h;
        const double d2 = (closed_cutoff_derivative(q, tp) - 2 * closed_cutoff_derivative(q, t) +
                           closed_cutoff_derivative(q, tm)) / (h * h);
        const double d1 = (closed_cutoff_derivative(q, tp) - closed_cutoff_derivative(q, tm)) / (tp - tm);
        CHECK(std::abs(d1) <= cutoff_derivative_bound(q, 1, t) * (1 + 1e-6) + 1e-9);
        CHECK(std::abs(d2) <= cutoff_derivative_bound(q, 2, t) * (1 + 1e-4) + 1e-6);
    }
}

TEST_CASE("inversion residual") {
    TimeMesh m(1.0, 4097);
    CHECK(verify_inversion(SampledFn::sample(m, [](double) { return 0.0; }), FracOrder(0.5)) == 0.0);
    CHECK(verify_inversion(SampledFn::sample(m, [](double t) { return std::sin(t); }), FracOrder(0.4)) < 1e-4);
    CHECK(verify_inversion(SampledFn::sample(m, [](double t) { return t * t; }), FracOrder(0.7)) < 1e-4);
}

TEST_CASE("inversion residual converges at order >= 1.5") {
    std::vector<double> r;
    for (std::size_t n : {513u, 1025u, 2049u}) {
        TimeMesh m(1.0, n);
        r.push_back(verify_inversion(SampledFn::sample(m, [](double t) { return std::exp(-t); }), FracOrder(0.5)));
    }
    CHECK(std::log2(r[0] / r[1]) >= 1.5);
    CHECK(std::log2(r[1] / r[2]) >= 1.5);
}

TEST_CASE("integration by parts") {
    TimeMesh m(1.0, 4097);
    auto one = SampledFn::sample(m, [](double) { return 1.0; });
    auto r = verify_parts(one, one, FracOrder(0.5));
    const double exact = (2.0 / 3.0) / std::tgamma(1.5);
    CHECK(r.lhs == doctest::Approx(exact).epsilon(1e-6));
    CHECK(r.rhs == doctest::Approx(exact).epsilon(1e-6));

    auto zero = SampledFn::sample(m, [](double) { return 0.0; });
    auto z = verify_parts(one, zero, FracOrder(0.5));
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);

    auto phi = SampledFn::sample(m, [](double t) { return t; });
    auto psi = SampledFn::sample(m, [](double t) { return 1 - t; });
    auto q = verify_parts(phi, psi, FracOrder(0.3));
    CHECK(std::abs(q.lhs - q.rhs) / std::max(std::abs(q.lhs), 1.0) < 1e-6);

    CHECK_THROWS_AS(verify_parts(one, SampledFn::sample(TimeMesh(1.0, 11), [](double) { return 1.0; }),
                                 FracOrder(0.5)),
                    DomainError);
}

TEST_CASE("integration-by-parts gap shrinks under refinement") {
    std::vector<double> gaps;
    for (std::size_t n : {257u, 513u, 1025u}) {
        TimeMesh m(1.0, n);
        auto phi = SampledFn::sample(m, [](double t) { return std::exp(t); });
        auto psi = SampledFn::sample(m, [](double t) { return std::cos(2 * t); });
        auto r = verify_parts(phi, psi, FracOrder(0.6));
        gaps.push_back(std::abs(r.lhs - r.rhs));
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
    CHECK(std::log2(gaps[1] / gaps[2]) > 1.0);
}

TEST_CASE("memory convolution") {
    TimeMesh m(2.0, 1025);
    auto zero = SampledFn::sample(m, [](double) { return 0.0; });
    for (double v : memory_convolve(zero, 0.5, 2.0).values) CHECK(v == 0.0);

    auto c = SampledFn::sample(m, [](double) { return -1.5; });
    auto f = memory_convolve(c, 0.3, 2.5);
    for (std::size_t i = 0; i < m.size(); i += 128)
        CHECK(f.values[i] == doctest::Approx(std::pow(1.5, 2.5) * std::pow(m.node(i), 0.7) / 0.7).epsilon(1e-12));

    auto s = SampledFn::sample(m, [](double t) { return t; });
    auto g = memory_convolve(s, 0.5, 1.0);
    for (std::size_t i = 0; i < m.size(); i += 128)
        CHECK(g.values[i] == doctest::Approx(4.0 / 3.0 * std::pow(m.node(i), 1.5)).epsilon(1e-12));

    CHECK_THROWS_AS(memory_convolve(c, 1.0, 2.0), DomainError);
    CHECK_THROWS_AS(memory_convolve(c, 0.0, 2.0), DomainError);
}

TEST_CASE("product weights reproduce rl_integral") {
    TimeMesh m(1.0, 33);
    auto f = SampledFn::sample(m, [](double t) { return std::sin(5 * t); });
    auto w = product_weights(m.size(), m.step(), 0.35);
    auto j = rl_integral(f, FracOrder(0.35));
    for (std::size_t k = 0; k < m.size(); ++k) {
        double s = 0;
        for (std::size_t i = 0; i <= k; ++i) s += w->weight(k, i) * f.values[i];
        CHECK(s == doctest::Approx(j.values[k]).epsilon(1e-13));
    }
}
