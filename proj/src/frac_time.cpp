#include "fracwave/frac_time.hpp"

#include "fracwave/error.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace fracwave::frac_time {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// sum_{i>=i0} binom(a, i) x^i, for |x| <= 1/8.
double binomial_tail(double a, double x, int i0) {
    double term = 1.0;
    for (int i = 1; i < i0; ++i) term *= (a - (i - 1)) / i * x;
    double sum = 0.0;
    for (int i = i0; i < 60; ++i) {
        term *= (a - (i - 1)) / i * x;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// (m+1)^{a+1} - 2 m^{a+1} + (m-1)^{a+1}, m >= 1
double second_difference(double a1, std::size_t m) {
    const double md = static_cast<double>(m);
    if (m < 16) return std::pow(md + 1, a1) - 2 * std::pow(md, a1) + std::pow(md - 1, a1);
    const double x = 1.0 / md;
    return std::pow(md, a1) * (binomial_tail(a1, x, 2) + binomial_tail(a1, -x, 2));
}

// (k-1)^{a+1} - (k-a-1) k^a, k >= 1
double start_weight(double a, std::size_t k) {
    const double kd = static_cast<double>(k);
    if (k < 16) return std::pow(kd - 1, a + 1) - (kd - a - 1) * std::pow(kd, a);
    return std::pow(kd, a + 1) * binomial_tail(a + 1, -1.0 / kd, 2);
}

struct Key {
    std::size_t n;
    double alpha;
    bool operator<(const Key& o) const { return n != o.n ? n < o.n : alpha < o.alpha; }
};

struct UnitWeights {
    std::vector<double> c;
    std::vector<double> c_rev;  // c_rev[i] = c[n-1-i]
    std::vector<double> d;
};

template <class V>
class Cache {
public:
    template <class Make>
    std::shared_ptr<const V> get(const Key& key, Make&& make) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto made = std::make_shared<const V>(make());
        std::lock_guard<std::mutex> lock(mu_);
        if (map_.size() > 64) map_.clear();
        return map_.emplace(key, std::move(made)).first->second;
    }

private:
    std::mutex mu_;
    std::map<Key, std::shared_ptr<const V>> map_;
};

std::shared_ptr<const UnitWeights> unit_weights(std::size_t n, double alpha) {
    static Cache<UnitWeights> cache;
    return cache.get({n, alpha}, [&] {
        UnitWeights w;
        w.c.resize(n);
        w.d.resize(n);
        const double a1 = alpha + 1;
        w.c[0] = 1.0;
        for (std::size_t m = 1; m < n; ++m) w.c[m] = second_difference(a1, m);
        w.d[0] = 0.0;
        for (std::size_t k = 1; k < n; ++k) w.d[k] = start_weight(alpha, k);
        w.c_rev.assign(w.c.rbegin(), w.c.rend());
        return w;
    });
}

// Product rule on unit spacing: out[k] = d[k] f0 + sum_{j=1..k} c[k-j] f_j (unscaled).
void apply_unit_rule(const UnitWeights& w, const double* f, double* out, std::size_t n) {
    out[0] = 0.0;
    const double* cr = w.c_rev.data();
    for (std::size_t k = 1; k < n; ++k) {
        out[k] = w.d[k] * f[0] + dot(cr + (n - 1 - k) + 1, f + 1, k);
    }
}

std::vector<double> left_integral(const std::vector<double>& f, double alpha, double h) {
    const std::size_t n = f.size();
    auto w = unit_weights(n, alpha);
    std::vector<double> out(n);
    apply_unit_rule(*w, f.data(), out.data(), n);
    const double scale = std::pow(h, alpha) / std::tgamma(alpha + 2);
    for (double& v : out) v *= scale;
    return out;
}

// Starting corrections for the unit-spacing rule of order a. Extra weights on nodes 0..3
// make the rule exact for t^0, t^1, t^nu1 and t^nu2 at every node.
struct StartCorrection {
    std::vector<std::array<double, 4>> s;
};

std::shared_ptr<const StartCorrection> start_correction(std::size_t n, double a, double nu1, double nu2) {
    static Cache<StartCorrection> cache;
    // nu1, nu2 are functions of a at every call site, so (n, a) is a sufficient key.
    return cache.get({n, a}, [&] {
        auto w = unit_weights(n, a);
        const std::array<double, 4> nu{0.0, 1.0, nu1, nu2};
        const double rule_scale = 1.0 / std::tgamma(a + 2);
        std::array<std::vector<double>, 4> res;
        std::vector<double> g(n);
        for (int i = 0; i < 4; ++i) {
            for (std::size_t k = 0; k < n; ++k) g[k] = std::pow(static_cast<double>(k), nu[i]);
            res[i].resize(n);
            apply_unit_rule(*w, g.data(), res[i].data(), n);
            const double exact_c = std::tgamma(nu[i] + 1) / std::tgamma(nu[i] + 1 + a);
            for (std::size_t k = 0; k < n; ++k)
                res[i][k] = exact_c * std::pow(static_cast<double>(k), nu[i] + a) - rule_scale * res[i][k];
        }
        // Invert A[i][j] = j^{nu_i} (0^0 = 1) by Gauss-Jordan with partial pivoting.
        std::array<std::array<double, 8>, 4> m{};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) m[i][j] = std::pow(static_cast<double>(j), nu[i]);
            m[i][4 + i] = 1.0;
        }
        for (int c = 0; c < 4; ++c) {
            int piv = c;
            for (int r = c + 1; r < 4; ++r)
                if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
            std::swap(m[c], m[piv]);
            const double inv = 1.0 / m[c][c];
            for (double& v : m[c]) v *= inv;
            for (int r = 0; r < 4; ++r) {
                if (r == c) continue;
                const double f = m[r][c];
                for (int j = 0; j < 8; ++j) m[r][j] -= f * m[c][j];
            }
        }
        StartCorrection sc;
        sc.s.assign(n, {0.0, 0.0, 0.0, 0.0});
        for (std::size_t k = 1; k < n; ++k)
            for (int j = 0; j < 4; ++j) {
                double v = 0;
                for (int i = 0; i < 4; ++i) v += m[j][4 + i] * res[i][k];
                sc.s[k][j] = v;
            }
        return sc;
    });
}

// Left J^a with starting corrections exact for 1, t, t^nu1, t^nu2.
std::vector<double> left_integral_corrected(const std::vector<double>& f, double a, double h, double nu1,
                                            double nu2) {
    const std::size_t n = f.size();
    auto w = unit_weights(n, a);
    std::vector<double> out(n);
    apply_unit_rule(*w, f.data(), out.data(), n);
    const double rule_scale = 1.0 / std::tgamma(a + 2);
    for (double& v : out) v *= rule_scale;
    auto sc = start_correction(n, a, nu1, nu2);
    for (std::size_t k = 1; k < n; ++k) {
        const auto& s = sc->s[k];
        out[k] += s[0] * f[0] + s[1] * f[1] + s[2] * f[2] + s[3] * f[3];
    }
    const double hs = std::pow(h, a);
    for (double& v : out) v *= hs;
    return out;
}

// Fourth-order first derivative; one-sided at the two nodes nearest each end.
std::vector<double> differentiate(const std::vector<double>& g, double h) {
    const std::size_t n = g.size();
    std::vector<double> d(n);
    const double s = 1.0 / (12.0 * h);
    d[0] = (-25 * g[0] + 48 * g[1] - 36 * g[2] + 16 * g[3] - 3 * g[4]) * s;
    d[1] = (-3 * g[0] - 10 * g[1] + 18 * g[2] - 6 * g[3] + g[4]) * s;
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (-g[i + 2] + 8 * g[i + 1] - 8 * g[i - 1] + g[i - 2]) * s;
    const std::size_t m = n - 1;
    d[m] = -(-25 * g[m] + 48 * g[m - 1] - 36 * g[m - 2] + 16 * g[m - 3] - 3 * g[m - 4]) * s;
    d[m - 1] = -(-3 * g[m] - 10 * g[m - 1] + 18 * g[m - 2] - 6 * g[m - 3] + g[m - 4]) * s;
    return d;
}

std::vector<double> reversed(std::vector<double> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

void check_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw DomainError("SampledFn.values: non-finite entry");
}

} // namespace

TimeMesh::TimeMesh(double t_end, std::size_t num_points) : t_end_(t_end), n_(num_points) {
    if (num_points == 1) {
        if (t_end != 0) throw DomainError("TimeMesh.t_end: a single-node mesh must end at 0");
        h_ = 0;
        return;
    }
    if (!(t_end > 0) || !std::isfinite(t_end)) throw DomainError("TimeMesh.t_end: must be finite and > 0");
    if (num_points < 2) throw DomainError("TimeMesh.num_points: need at least 1 node");
    h_ = t_end / static_cast<double>(num_points - 1);
}

double TimeMesh::node(std::size_t i) const {
    if (i + 1 == n_) return t_end_;
    return static_cast<double>(i) * h_;
}

std::vector<double> TimeMesh::nodes() const {
    std::vector<double> t(n_);
    for (std::size_t i = 0; i < n_; ++i) t[i] = node(i);
    return t;
}

SampledFn::SampledFn(TimeMesh m, std::vector<double> v) : mesh(m), values(std::move(v)) {
    if (values.size() != mesh.size())
        throw DomainError("SampledFn.values: length " + std::to_string(values.size()) + " != mesh size " +
                          std::to_string(mesh.size()));
    check_finite(values);
}

FracOrder::FracOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha: must lie in (0,1), got " + std::to_string(alpha));
}

CutoffParams::CutoffParams(double T_, double beta_, FracOrder alpha_) : T(T_), beta(beta_), alpha(alpha_) {
    if (!(T > 0)) throw DomainError("CutoffParams.T: must be > 0");
    if (!(beta > alpha.value() + 2)) throw DomainError("CutoffParams.beta: must exceed alpha + 2");
}

std::shared_ptr<const ProductWeights> product_weights(std::size_t num_points, double h, double alpha) {
    if (num_points < 2) throw DomainError("num_points: need at least 2 nodes");
    FracOrder a(alpha);
    auto w = unit_weights(num_points, a);
    auto pw = std::make_shared<ProductWeights>();
    pw->alpha = alpha;
    pw->h = h;
    pw->scale = std::pow(h, alpha) / std::tgamma(alpha + 2);
    pw->c = w->c;
    pw->d = w->d;
    return pw;
}

SampledFn rl_integral(const SampledFn& f, FracOrder alpha, Side side) {
    const double h = f.mesh.step();
    if (side == Side::left) return SampledFn(f.mesh, left_integral(f.values, alpha, h));
    return SampledFn(f.mesh, reversed(left_integral(reversed(f.values), alpha, h)));
}

SampledFn rl_derivative(const SampledFn& f, FracOrder alpha, Side side) {
    if (f.mesh.size() < 5) throw DomainError("mesh: fewer than 5 nodes, too coarse for the differencing stencil");
    const double h = f.mesh.step();
    const double a = 1.0 - alpha.value();
    auto left = [&](const std::vector<double>& v) {
        return differentiate(left_integral_corrected(v, a, h, alpha.value(), 1.0 + alpha.value()), h);
    };
    if (side == Side::left) return SampledFn(f.mesh, left(f.values));
    return SampledFn(f.mesh, reversed(left(reversed(f.values))));
}

double cutoff_constant(double alpha, double beta) {
    return std::exp(std::lgamma(beta + 1) - std::lgamma(beta + 1 - alpha));
}

double printed_cutoff_constant(double alpha, double beta) {
    return std::exp(std::lgamma(beta + 1) - std::lgamma(beta - alpha)) / (beta + 2 - alpha);
}

double cutoff(double t, double T, double beta) {
    if (t >= T) return 0.0;
    if (t <= 0) return 1.0;
    return std::pow(1.0 - t / T, beta);
}

namespace {
void check_time(const CutoffParams& p, double t) {
    if (!(t >= 0 && t <= p.T)) throw DomainError("t: outside [0, T]");
}
} // namespace

double closed_cutoff_derivative(const CutoffParams& p, double t) {
    check_time(p, t);
    const double a = p.alpha.value();
    return cutoff_constant(a, p.beta) * std::pow(p.T, -a) * std::pow(1.0 - t / p.T, p.beta - a);
}

double cutoff_derivative_bound(const CutoffParams& p, int j, double t) {
    const double a = p.alpha.value();
    if (j < 0 || j > 2) throw DomainError("j: must be 0, 1 or 2");
    if (!(p.beta > a + j)) throw DomainError("beta: must exceed alpha + j");
    check_time(p, t);
    double k = cutoff_constant(a, p.beta);
    for (int i = 0; i < j; ++i) k *= (p.beta - a - i);
    return k * std::pow(p.T, -a - j) * std::pow(1.0 - t / p.T, p.beta - a - j);
}

double verify_inversion(const SampledFn& f, FracOrder alpha) {
    const SampledFn g = rl_derivative(rl_integral(f, alpha), alpha);
    double r = 0.0;
    for (std::size_t i = 1; i + 1 < f.values.size(); ++i) r = std::max(r, std::abs(g.values[i] - f.values[i]));
    return r;
}

namespace {
double trapezoid(const std::vector<double>& a, const std::vector<double>& b, double h) {
    const std::size_t n = a.size();
    double s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s += a[i] * b[i];
    return s * h;
}
} // namespace

PartsResult verify_parts(const SampledFn& phi, const SampledFn& psi, FracOrder alpha) {
    if (!(phi.mesh == psi.mesh)) throw DomainError("psi.mesh: differs from phi.mesh");
    const double h = phi.mesh.step();
    const SampledFn jl = rl_integral(psi, alpha, Side::left);
    const SampledFn jr = rl_integral(phi, alpha, Side::right);
    // endpoint c t^a behaviour of the factors: trapezoid error zeta(-a) c h^{1+a}
    const double a = alpha.value();
    const double corr = boost::math::zeta(-a) * std::pow(h, 1 + a) / std::tgamma(1 + a);
    return {trapezoid(phi.values, jl.values, h) - corr * phi.values.front() * psi.values.front(),
            trapezoid(psi.values, jr.values, h) - corr * psi.values.back() * phi.values.back()};
}

SampledFn memory_convolve(const SampledFn& history, double gamma, double p) {
    if (!(gamma > 0 && gamma < 1)) throw DomainError("gamma: must lie in (0,1)");
    if (!(p > 0)) throw DomainError("p: must be > 0");
    const double a = 1.0 - gamma;
    std::vector<double> w(history.values.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(std::abs(history.values[i]), p);
    std::vector<double> out = left_integral(w, a, history.mesh.step());
    const double g = std::tgamma(a);
    for (double& v : out) v *= g;
    return SampledFn(history.mesh, std::move(out));
}

} // namespace fracwave::frac_time
