#include "fracwave/frac_space.hpp"

#include "fracwave/error.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <tuple>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>

namespace fracwave::frac_space {

namespace {
constexpr double kPi = 3.14159265358979323846;
std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}
} // namespace

// ---------------------------------------------------------------- grid

SpaceGrid::SpaceGrid(int dim, std::size_t points_per_axis, double period)
    : dim_(dim), m_(points_per_axis), period_(period) {
    if (dim < 1 || dim > 3) throw DomainError("SpaceGrid.dim: must be 1, 2 or 3");
    if (points_per_axis < 8 || !std::has_single_bit(points_per_axis))
        throw DomainError("SpaceGrid.points_per_axis: must be a power of two >= 8");
    if (!(period > 0) || !std::isfinite(period)) throw DomainError("SpaceGrid.period: must be > 0");
}

std::size_t SpaceGrid::volume() const {
    std::size_t v = 1;
    for (int d = 0; d < dim_; ++d) v *= m_;
    return v;
}

double SpaceGrid::cell_volume() const { return std::pow(spacing(), dim_); }
double SpaceGrid::box_volume() const { return std::pow(period_, dim_); }

double SpaceGrid::coord(std::size_t i) const { return -0.5 * period_ + static_cast<double>(i) * spacing(); }

long long SpaceGrid::wavenumber(std::size_t i) const {
    const auto m = static_cast<long long>(m_);
    const auto k = static_cast<long long>(i);
    return k < m / 2 ? k : k - m;
}

Point SpaceGrid::point(std::size_t flat) const {
    Point p(dim_);
    for (int d = dim_ - 1; d >= 0; --d) {
        p[d] = coord(flat % m_);
        flat /= m_;
    }
    return p;
}

std::vector<double> SpaceGrid::xi_squared() const {
    const double k0 = 2 * kPi / period_;
    std::vector<double> k2(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        const double k = static_cast<double>(wavenumber(i));
        k2[i] = k0 * k0 * k * k;
    }
    std::vector<double> out(volume());
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t r = flat;
        double s = 0;
        for (int d = 0; d < dim_; ++d) {
            s += k2[r % m_];
            r /= m_;
        }
        out[flat] = s;
    }
    return out;
}

double SpaceGrid::xi_max() const { return std::sqrt(static_cast<double>(dim_)) * kPi * static_cast<double>(m_) / period_; }

// ---------------------------------------------------------------- field

Field::Field(SpaceGrid g) : grid(g), values(g.volume()) {}

Field::Field(SpaceGrid g, std::vector<Complex> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.volume()) throw DomainError("Field.values: length does not match grid volume");
    for (const auto& z : values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("Field.values: non-finite entry");
}

bool Field::is_real(double tol) const {
    return std::all_of(values.begin(), values.end(), [&](const Complex& z) { return std::abs(z.imag()) <= tol; });
}

double Field::max_abs() const {
    double m = 0;
    for (const auto& z : values) m = std::max(m, std::abs(z));
    return m;
}

// ---------------------------------------------------------------- transforms

struct Transform::Impl {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::size_t volume = 0;
};

Transform::Transform(const SpaceGrid& g) : impl_(std::make_unique<Impl>()) {
    const int m = static_cast<int>(g.points_per_axis());
    std::vector<int> dims(g.dim(), m);
    impl_->volume = g.volume();
    std::vector<Complex> scratch_in(impl_->volume), scratch_out(impl_->volume);
    auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    impl_->fwd = fftw_plan_dft(g.dim(), dims.data(), in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    impl_->bwd = fftw_plan_dft(g.dim(), dims.data(), in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!impl_->fwd || !impl_->bwd) throw NumericalError("fftw: plan creation failed", 0.0);
}

Transform::~Transform() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void Transform::forward(const Complex* in, Complex* out) const {
    fftw_execute_dft(impl_->fwd, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / static_cast<double>(impl_->volume);
    for (std::size_t i = 0; i < impl_->volume; ++i) out[i] *= s;
}

void Transform::inverse(const Complex* in, Complex* out) const {
    fftw_execute_dft(impl_->bwd, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

Field Transform::forward(const Field& f) const {
    Field out(f.grid);
    forward(f.values.data(), out.values.data());
    return out;
}

Field Transform::inverse(const Field& f) const {
    Field out(f.grid);
    inverse(f.values.data(), out.values.data());
    return out;
}

Field apply_multiplier(const Field& f, const std::function<double(double)>& m) {
    Transform tr(f.grid);
    Field spec = tr.forward(f);
    const auto xi2 = f.grid.xi_squared();
    for (std::size_t i = 0; i < xi2.size(); ++i) spec.values[i] *= m(xi2[i]);
    Field out = tr.inverse(spec);
    if (f.is_real()) {
        const double cut = 1e-12 * out.max_abs();
        for (auto& z : out.values)
            if (std::abs(z.imag()) <= cut) z.imag(0.0);
    }
    return out;
}

Field frac_laplacian_spectral(const Field& f, double sigma) {
    if (!(sigma >= 0)) throw DomainError("sigma: must be >= 0");
    if (sigma == 0) return f;
    return apply_multiplier(f, [sigma](double xi2) { return xi2 == 0 ? 0.0 : std::pow(xi2, sigma); });
}

Complex inner(const Field& f, const Field& g) {
    if (!(f.grid == g.grid)) throw DomainError("g.grid: differs from f.grid");
    Complex s = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += std::conj(f.values[i]) * g.values[i];
    return s * f.grid.cell_volume();
}

// ---------------------------------------------------------------- C_sigma

namespace {

// Coefficients of (sin r / r)^{2k} as a series in r^2.
std::vector<double> sinc_power_series(int k, int terms) {
    std::vector<double> sinc(terms);
    double fact = 1.0;
    for (int i = 0; i < terms; ++i) {
        if (i > 0) fact *= (2.0 * i) * (2.0 * i + 1);
        sinc[i] = (i % 2 ? -1.0 : 1.0) / fact;
    }
    std::vector<double> acc(terms, 0.0);
    acc[0] = 1.0;
    for (int p = 0; p < 2 * k; ++p) {
        std::vector<double> next(terms, 0.0);
        for (int i = 0; i < terms; ++i)
            for (int j = 0; i + j < terms; ++j) next[i + j] += acc[i] * sinc[j];
        acc.swap(next);
    }
    return acc;
}

// int_0^inf sin^{2k}(r) r^{-1-2 sigma} dr
QuadResult radial_sine_moment(double sigma, int k, QuadScheme scheme) {
    using namespace boost::math::quadrature;
    const double r0 = 0.5;
    const int panels = 64;
    const double big = panels * kPi;
    const double e = -1.0 - 2.0 * sigma;

    double value = 0.0, error = 0.0;
    const auto series = sinc_power_series(k, 24);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double ex = 2.0 * k - 2.0 * sigma + 2.0 * static_cast<double>(i);
        value += series[i] * std::pow(r0, ex) / ex;
    }

    auto integrand = [&](double r) { return std::pow(std::sin(r), 2 * k) * std::pow(r, e); };
    tanh_sinh<double> ts;
    for (int p = 0; p < panels; ++p) {
        const double a = p == 0 ? r0 : p * kPi;
        const double b = (p + 1) * kPi;
        double err = 0.0;
        double v;
        if (scheme == QuadScheme::gauss_kronrod)
            v = gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, 1e-14, &err);
        else
            v = ts.integrate(integrand, a, b, 1e-14, &err);
        value += v;
        error += err;
    }

    const double mu = boost::math::binomial_coefficient<double>(2 * k, k) / std::pow(4.0, k);
    value += mu * std::pow(big, -2.0 * sigma) / (2.0 * sigma);
    ooura_fourier_cos<double> ooura(1e-13);
    exp_sinh<double> es;
    for (int j = 1; j <= k; ++j) {
        const double coef = 2.0 * (j % 2 ? -1.0 : 1.0) * boost::math::binomial_coefficient<double>(2 * k, k - j) /
                            std::pow(4.0, k);
        double tail, err;
        if (scheme == QuadScheme::gauss_kronrod) {
            auto r = ooura.integrate([&](double t) { return std::pow(t + big, e); }, 2.0 * j);
            tail = r.first;
            err = r.second * std::abs(r.first);
        } else {
            auto g = [&](double u) {
                return -std::exp(-2.0 * j * u) * std::pow(std::complex<double>(big, u), e).imag();
            };
            double l1 = 0;
            tail = es.integrate(g, 1e-14, &err, &l1);
                    }
        value += coef * tail;
        error += std::abs(coef) * err;
    }
    return {value, error};
}

double sphere_area(int d) {  // |S^d|
    return 2.0 * std::pow(kPi, (d + 1) / 2.0) / std::tgamma((d + 1) / 2.0);
}

// int_{S^{n-1}} |w_1|^{2 sigma} dw. The endpoint power is handled by tanh-sinh for both
// schemes; the schemes differ in the radial moment only.
QuadResult angular_moment(double sigma, int n) {
    using namespace boost::math::quadrature;
    if (n == 1) return {2.0, 0.0};
    double err = 0.0;
    auto g = [&](double t) { return std::pow(std::cos(t), 2 * sigma) * std::pow(std::sin(t), n - 2); };
    const double v = tanh_sinh<double>().integrate(g, 0.0, kPi / 2, 1e-15, &err);
    const double s = 2.0 * sphere_area(n - 2);
    return {s * v, s * err};
}

} // namespace

QuadResult c_sigma_detailed(double sigma, int n, QuadScheme scheme) {
    if (n < 1) throw DomainError("n: must be >= 1");
    if (!(sigma > 0)) throw DomainError("sigma: must be > 0");
    const double m = std::floor(sigma);
    if (sigma - m < 1e-12 || m + 1 - sigma < 1e-12) throw DomainError("sigma: integer orders have no singular form");
    const int k = static_cast<int>(m) + 1;
    const QuadResult a = radial_sine_moment(sigma, k, scheme);
    const QuadResult s = angular_moment(sigma, n);
    const double integral = a.value * s.value;
    const double rel = a.error / a.value + s.error / s.value;
    const double c = std::pow(2.0, 2 * sigma - 2 * m - 2) / integral;
    if (!(rel < 1e-9) || !std::isfinite(c))
        throw NumericalError("c_sigma: quadrature did not converge", rel * std::abs(c));
    return {c, rel * c};
}

double c_sigma(double sigma, int n, QuadScheme scheme) {
    static std::mutex mu;
    static std::map<std::tuple<double, int, int>, double> cache;
    const auto key = std::make_tuple(sigma, n, static_cast<int>(scheme));
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double v = c_sigma_detailed(sigma, n, scheme).value;
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, v);
    return v;
}

// ---------------------------------------------------------------- singular integral

namespace {

struct Direction {
    Point w;
    double weight;
};

std::vector<Direction> half_sphere(int n, int angular) {
    std::vector<Direction> dirs;
    if (n == 1) {
        dirs.push_back({{1.0}, 2.0});
    } else if (n == 2) {
        for (int l = 0; l < angular; ++l) {
            const double phi = kPi * l / angular;
            dirs.push_back({{std::cos(phi), std::sin(phi)}, 2.0 * kPi / angular});
        }
    } else {
        using GL = boost::math::quadrature::gauss<double, 30>;
        const auto& x = GL::abscissa();
        const auto& w = GL::weights();
        std::vector<std::pair<double, double>> mu;  // nodes on [0,1]
        for (std::size_t i = 0; i < x.size(); ++i) {
            mu.push_back({0.5 + 0.5 * x[i], 0.5 * w[i]});
            if (x[i] != 0) mu.push_back({0.5 - 0.5 * x[i], 0.5 * w[i]});
        }
        for (auto [c, wc] : mu) {
            const double s = std::sqrt(std::max(0.0, 1 - c * c));
            for (int l = 0; l < angular; ++l) {
                const double phi = 2 * kPi * l / angular;
                dirs.push_back({{s * std::cos(phi), s * std::sin(phi), c}, 2.0 * wc * 2 * kPi / angular});
            }
        }
    }
    return dirs;
}

std::vector<double> radial_breaks(double rs, double rc, double extra1, double extra2) {
    std::vector<double> b{rs};
    double r = 1.0;
    while (r < rc) {
        if (r > rs) b.push_back(r);
        r = r < 256 ? r + 1.0 : r * 1.25;
    }
    b.push_back(rc);
    for (double e : {extra1, extra2})
        if (e > rs && e < rc) b.push_back(e);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

} // namespace

QuadResult frac_laplacian_singular(const Evaluable& fn, double sigma, const Point& x, double cutoff_radius,
                                   const SingularOptions& opt) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(sigma > 0 && sigma < 1)) throw DomainError("sigma: must lie in (0,1)");
    if (static_cast<int>(x.size()) != fn.dim) throw DomainError("x: dimension differs from f");
    if (fn.dim < 1 || fn.dim > 3) throw DomainError("f.dim: must be 1, 2 or 3");
    if (!fn.f) throw DomainError("f: no evaluator");
    if (!(cutoff_radius > opt.inner_radius)) throw DomainError("cutoff_radius: must exceed the inner radius");
    const bool has_decay = fn.decay_A && fn.decay_q;
    if (!has_decay && !fn.sup_bound) throw DomainError("f: no decay model or sup bound, tail is not controlled");

    const int n = fn.dim;
    const double rs = opt.inner_radius, rc = cutoff_radius;
    const double fx = fn.f(x);
    const double xnorm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));

    const double tail_w = std::pow(rc, -2 * sigma) / (2 * sigma);
    double shifted_bound = std::numeric_limits<double>::infinity();
    if (fn.sup_bound) shifted_bound = 2.0 * (*fn.sup_bound + (fn.far_mean ? std::abs(*fn.far_mean) : 0.0));
    if (has_decay && rc > xnorm + 1.0)
        shifted_bound = std::min(shifted_bound, 2.0 * *fn.decay_A * std::pow(rc - xnorm, -*fn.decay_q));
    double tail_value = 0.0, tail_error = shifted_bound * tail_w;
    if (has_decay || fn.far_mean)
        tail_value = (2.0 * (has_decay ? 0.0 : *fn.far_mean) - 2.0 * fx) * tail_w;
    else
        tail_error += 2.0 * std::abs(fx) * tail_w;

    Point y(n);
    auto delta2 = [&](const Point& w, double r) {
        for (int d = 0; d < n; ++d) y[d] = x[d] + r * w[d];
        double s = fn.f(y);
        for (int d = 0; d < n; ++d) y[d] = x[d] - r * w[d];
        return s + fn.f(y) - 2.0 * fx;
    };

    double total = 0.0, err_total = 0.0;
    for (const auto& dir : half_sphere(n, opt.angular_points)) {
        const auto& w = dir.w;
        double xw = 0;
        for (int d = 0; d < n; ++d) xw += x[d] * w[d];
        const double fd = delta2(w, rs) / (rs * rs);
        const double d2 = fn.second_directional ? fn.second_directional(x, w) : fd;
        double v = d2 * std::pow(rs, 2 - 2 * sigma) / (2 - 2 * sigma);
        double e = std::abs(fd - d2) * std::pow(rs, 2 - 2 * sigma) / (2 - 2 * sigma);

        const auto breaks = radial_breaks(rs, rc, std::abs(xw), std::abs(xw));
        auto integrand = [&](double r) { return delta2(w, r) * std::pow(r, -1 - 2 * sigma); };
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            double pe = 0, l1 = 0;
            v += gauss_kronrod<double, 21>::integrate(integrand, breaks[i], breaks[i + 1], 12, opt.rel_tol, &pe,
                                                      &l1);
            e += pe;
        }
        v += tail_value;
        e += tail_error;
        total += dir.weight * v;
        err_total += dir.weight * e;
    }
    const double c = c_sigma(sigma, n);
    return {-c * total, c * err_total};
}

} // namespace fracwave::frac_space

namespace fracwave::frac_space {

// ---------------------------------------------------------------- brackets

double bracket(const Point& x) {
    double s = 1.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double bracket_fn(const Point& x, double q) {
    double s = 1.0;
    for (double v : x) s += v * v;
    return std::pow(s, -0.5 * q);
}

double bracket_laplacian_closed(const Point& x, double q) {
    const double n = static_cast<double>(x.size());
    const double b = bracket(x);
    return q * (n - q - 2) * std::pow(b, -q - 2) + q * (q + 2) * std::pow(b, -q - 4);
}

BracketSeries::BracketSeries(int dim, double q) : dim_(dim), terms_{{1.0, q}} {
    if (dim < 1) throw DomainError("dim: must be >= 1");
    if (!(q > 0)) throw DomainError("q: must be > 0");
}

double BracketSeries::operator()(const Point& x) const {
    double s = 1.0;
    for (double v : x) s += v * v;
    const double lb = 0.5 * std::log(s);
    double out = 0;
    for (auto [c, a] : terms_) out += c * std::exp(-a * lb);
    return out;
}

BracketSeries BracketSeries::neg_laplacian() const {
    const double n = dim_;
    std::vector<std::pair<double, double>> next;
    auto add = [&](double c, double a) {
        for (auto& t : next)
            if (std::abs(t.second - a) < 1e-12) {
                t.first += c;
                return;
            }
        next.push_back({c, a});
    };
    for (auto [c, a] : terms_) {
        add(c * a * (n - a - 2), a + 2);
        add(c * a * (a + 2), a + 4);
    }
    std::sort(next.begin(), next.end(), [](auto& l, auto& r) { return l.second < r.second; });
    return BracketSeries(dim_, std::move(next));
}

BracketSeries BracketSeries::pow_neg_laplacian(int m) const {
    if (m < 0) throw DomainError("m: must be >= 0");
    BracketSeries s = *this;
    for (int i = 0; i < m; ++i) s = s.neg_laplacian();
    return s;
}

double BracketSeries::decay_A() const {
    double a = 0;
    for (auto [c, e] : terms_) a += std::abs(c);
    return a;
}

double BracketSeries::decay_q() const {
    double q = terms_.front().second;
    for (auto [c, e] : terms_) q = std::min(q, e);
    return q;
}

Evaluable BracketSeries::evaluable() const {
    Evaluable ev;
    ev.dim = dim_;
    auto self = *this;
    ev.f = [self](const Point& x) { return self(x); };
    ev.second_directional = [self](const Point& x, const Point& w) {
        double b2 = 1.0, xw = 0.0, ww = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            b2 += x[d] * x[d];
            xw += x[d] * w[d];
            ww += w[d] * w[d];
        }
        const double d1 = 2 * xw, d2 = 2 * ww;
        double out = 0;
        for (auto [c, a] : self.terms_) {
            const double h = 0.5 * a;
            out += c * (h * (h + 1) * std::pow(b2, -h - 2) * d1 * d1 - h * std::pow(b2, -h - 1) * d2);
        }
        return out;
    };
    ev.decay_A = decay_A();
    ev.decay_q = decay_q();
    double sup = 0;
    for (auto [c, e] : terms_) sup += std::abs(c);
    ev.sup_bound = sup;
    return ev;
}

Evaluable bracket_evaluable(int n, double q) { return BracketSeries(n, q).evaluable(); }

double predicted_decay(double sigma, double q, int n) {
    const double m = std::floor(sigma + 1e-12);
    const double s = sigma - m;
    if (s < 1e-12) return q + 2 * sigma;
    return n + 2 * s;
}

double bracket_frac_laplacian_abs(double sigma, double q, int n, double r) {
    if (!(sigma >= 0)) throw DomainError("sigma: must be >= 0");
    const double m = std::floor(sigma + 1e-12);
    const double s = sigma - m;
    const BracketSeries series = BracketSeries(n, q).pow_neg_laplacian(static_cast<int>(m));
    Point x(n, 0.0);
    x[0] = r;
    if (s < 1e-12) return std::abs(series(x));
    const double rc = std::max(1e4, 200.0 * r);
    return std::abs(frac_laplacian_singular(series.evaluable(), s, x, rc).value);
}

DecayFit decay_exponent_fit(double sigma, double q, int n, const std::vector<double>& radii) {
    if (radii.size() < 3) throw DomainError("radii: need at least 3 values");
    std::vector<double> r = radii;
    std::sort(r.begin(), r.end());
    if (!(r.front() > 1)) throw DomainError("radii: all must exceed 1");
    if (r.back() / r.front() < 30.0) throw DomainError("radii: must span a factor of at least 30");
    if (!(q > 0)) throw DomainError("q: must be > 0");
    DecayFit fit{};
    std::vector<double> lx, ly;
    for (double ri : r) {
        const double v = bracket_frac_laplacian_abs(sigma, q, n, ri);
        fit.values.push_back(v);
        if (!(v > 0) || !std::isfinite(v)) throw NumericalError("decay fit: zero or non-finite value", 0.0);
        lx.push_back(std::log(bracket(Point{ri})));
        ly.push_back(std::log(v));
    }
    for (std::size_t i = 1; i < fit.values.size(); ++i)
        if (!(fit.values[i] < fit.values[i - 1]))
            throw NumericalError("decay fit: |value| is not monotone along the radii", 0.0);
    const double k = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

double decay_exponent_probe(double sigma, double q, int n, const std::vector<double>& radii) {
    return decay_exponent_fit(sigma, q, n, radii).slope;
}

Evaluable rescale_test_fn(const Evaluable& phi, double R) {
    if (!(R >= 1)) throw DomainError("R: must be >= 1");
    if (R == 1) return phi;
    Evaluable out = phi;
    out.f = [f = phi.f, R](const Point& x) {
        Point y(x);
        for (double& v : y) v /= R;
        return f(y);
    };
    if (phi.second_directional)
        out.second_directional = [g = phi.second_directional, R](const Point& x, const Point& w) {
            Point y(x);
            for (double& v : y) v /= R;
            return g(y, w) / (R * R);
        };
    // |phi(x/R)| <= A <x/R>^{-q} <= A R^q <x>^{-q}
    if (phi.decay_A && phi.decay_q) out.decay_A = *phi.decay_A * std::pow(R, *phi.decay_q);
    return out;
}

double rescale_identity_residual(const std::function<double(const Point&)>& phi, const SpaceGrid& grid, double sigma,
                                 double R) {
    if (!(R >= 1)) throw DomainError("R: must be >= 1");
    const SpaceGrid small(grid.dim(), grid.points_per_axis(), grid.period() / R);
    const Field big_r = Field::sample(grid, [&](const Point& x) {
        Point y(x);
        for (double& v : y) v /= R;
        return Complex(phi(y), 0.0);
    });
    const Field base = Field::sample(small, [&](const Point& x) { return Complex(phi(x), 0.0); });
    const Field a = frac_laplacian_spectral(big_r, sigma);
    const Field b = frac_laplacian_spectral(base, sigma);
    const double scale = std::pow(R, -2 * sigma);
    double dev = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dev = std::max(dev, std::abs(a.values[i] - scale * b.values[i]));
    const double norm = a.max_abs();
    return norm > 0 ? dev / norm : dev;
}

// ---------------------------------------------------------------- I/O

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw DomainError("field stream: truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace

void write_field_binary(const Field& f, std::ostream& os) {
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.grid.dim()));
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.grid.points_per_axis()));
    put_le<double>(os, f.grid.period());
    for (const auto& z : f.values) {
        put_le<double>(os, z.real());
        put_le<double>(os, z.imag());
    }
}

Field read_field_binary(std::istream& is) {
    const auto dim = get_le<std::uint64_t>(is);
    const auto m = get_le<std::uint64_t>(is);
    const double period = get_le<double>(is);
    if (dim < 1 || dim > 3) throw DomainError("field stream: bad dim");
    SpaceGrid g(static_cast<int>(dim), static_cast<std::size_t>(m), period);
    std::vector<Complex> v(g.volume());
    for (auto& z : v) {
        const double re = get_le<double>(is);
        const double im = get_le<double>(is);
        z = {re, im};
    }
    return Field(g, std::move(v));
}

void write_field_csv_slice(const Field& f, std::ostream& os) {
    const std::size_t m = f.grid.points_per_axis();
    std::size_t stride = 1, offset = 0;
    for (int d = 1; d < f.grid.dim(); ++d) {
        offset = offset * m + m / 2;
        stride *= m;
    }
    // axis 0 is the slowest index in row-major order
    os << "x,re,im\n";
    char buf[96];
    for (std::size_t i = 0; i < m; ++i) {
        const auto& z = f.values[i * stride + offset];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.grid.coord(i), z.real(), z.imag());
        os << buf;
    }
}

} // namespace fracwave::frac_space
