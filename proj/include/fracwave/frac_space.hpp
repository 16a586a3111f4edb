#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace fracwave::frac_space {

using Complex = std::complex<double>;
using Point = std::vector<double>;

/// Periodic box [-L/2, L/2)^n sampled with M points per axis; frequencies 2*pi*k/L.
class SpaceGrid {
public:
    SpaceGrid(int dim, std::size_t points_per_axis, double period);

    int dim() const { return dim_; }
    std::size_t points_per_axis() const { return m_; }
    double period() const { return period_; }
    double spacing() const { return period_ / static_cast<double>(m_); }
    std::size_t volume() const;
    double cell_volume() const;
    double box_volume() const;

    /// Coordinate of index i along one axis.
    double coord(std::size_t i) const;
    /// Signed integer frequency of index i along one axis.
    long long wavenumber(std::size_t i) const;
    /// Point of the flat (row-major) index.
    Point point(std::size_t flat) const;
    /// |xi|^2 for every flat index.
    std::vector<double> xi_squared() const;
    /// Largest |xi| on the grid, sqrt(n) * pi * M / L.
    double xi_max() const;

    bool operator==(const SpaceGrid& o) const {
        return dim_ == o.dim_ && m_ == o.m_ && period_ == o.period_;
    }

private:
    int dim_;
    std::size_t m_;
    double period_;
};

/// Complex samples on a SpaceGrid, row-major.
struct Field {
    explicit Field(SpaceGrid g);
    Field(SpaceGrid g, std::vector<Complex> v);

    template <class F>
    static Field sample(const SpaceGrid& g, F&& f) {
        Field out(g);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(g.point(i));
        return out;
    }

    bool is_real(double tol = 0.0) const;
    double max_abs() const;

    SpaceGrid grid;
    std::vector<Complex> values;
};

/// Owning FFTW plans for one grid. Not shared between threads.
class Transform {
public:
    explicit Transform(const SpaceGrid& g);
    ~Transform();
    Transform(const Transform&) = delete;
    Transform& operator=(const Transform&) = delete;

    /// Mean-normalized forward transform (divides by M^n).
    void forward(const Complex* in, Complex* out) const;
    /// Inverse transform (no scaling).
    void inverse(const Complex* in, Complex* out) const;

    Field forward(const Field& f) const;
    Field inverse(const Field& f) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Multiply the spectrum by m(|xi|^2) and transform back.
Field apply_multiplier(const Field& f, const std::function<double(double)>& m);

/// F^{-1}(|xi|^{2 sigma} F f); zero mode -> 0 for sigma > 0.
Field frac_laplacian_spectral(const Field& f, double sigma);

/// <f, g> = sum conj(f) g * cell volume.
Complex inner(const Field& f, const Field& g);

enum class QuadScheme { gauss_kronrod, tanh_sinh };

struct QuadResult {
    double value;
    double error;
};

/// Normalizing constant of the singular-integral representation.
double c_sigma(double sigma, int n, QuadScheme scheme = QuadScheme::gauss_kronrod);
QuadResult c_sigma_detailed(double sigma, int n, QuadScheme scheme = QuadScheme::gauss_kronrod);

/// A pointwise-evaluable function with the side information the singular integral needs.
struct Evaluable {
    int dim = 1;
    std::function<double(const Point&)> f;
    /// Optional second directional derivative d^2/ds^2 f(x + s w) at s = 0.
    std::function<double(const Point&, const Point&)> second_directional;
    /// Optional decay model |f(z)| <= decay_A * <z>^{-decay_q}.
    std::optional<double> decay_A;
    std::optional<double> decay_q;
    /// Optional bound sup |f|.
    std::optional<double> sup_bound;
    /// Optional mean of f far from the origin (e.g. the average of a periodic f).
    std::optional<double> far_mean;
};

struct SingularOptions {
    double inner_radius = 1e-2;
    double rel_tol = 1e-10;
    int angular_points = 64;  // phi samples on [0, pi) for n = 2, on [0, 2 pi) for n = 3
};

/// (-Delta)^sigma f(x) for sigma in (0,1) through the centered-difference singular integral.
/// Beyond cutoff_radius only the -2f(x) part and the declared far mean enter the value;
/// the remaining shifted-sample tail is bounded analytically and reported in the error.
/// Without a decay model or far mean the whole tail goes to the error.
QuadResult frac_laplacian_singular(const Evaluable& f, double sigma, const Point& x, double cutoff_radius,
                                   const SingularOptions& opt = {});

double bracket(const Point& x);
/// <x>^{-q}
double bracket_fn(const Point& x, double q);
/// -Delta <x>^{-q} in closed form, n = x.size().
double bracket_laplacian_closed(const Point& x, double q);

/// Finite combination sum_j c_j <x>^{-a_j}; closed under -Delta.
class BracketSeries {
public:
    BracketSeries(int dim, double q);

    int dim() const { return dim_; }
    double operator()(const Point& x) const;
    BracketSeries neg_laplacian() const;
    BracketSeries pow_neg_laplacian(int m) const;
    /// |value| <= A <x>^{-q_min}
    double decay_A() const;
    double decay_q() const;
    Evaluable evaluable() const;

    const std::vector<std::pair<double, double>>& terms() const { return terms_; }

private:
    BracketSeries(int dim, std::vector<std::pair<double, double>> t) : dim_(dim), terms_(std::move(t)) {}
    int dim_;
    std::vector<std::pair<double, double>> terms_;  // (coefficient, exponent)
};

/// Evaluable <x>^{-q} in n dimensions.
Evaluable bracket_evaluable(int n, double q);

/// |(-Delta)^sigma <x>^{-q}| at r * e_1.
double bracket_frac_laplacian_abs(double sigma, double q, int n, double r);

struct DecayFit {
    double slope;
    double intercept;
    double r_squared;
    std::vector<double> values;
};

/// Fit log|(-Delta)^sigma <x>^{-q}| against log<x> along the first axis.
DecayFit decay_exponent_fit(double sigma, double q, int n, const std::vector<double>& radii);
double decay_exponent_probe(double sigma, double q, int n, const std::vector<double>& radii);
/// q + 2 sigma for integer sigma, n + 2 s for fractional part s > 0.
double predicted_decay(double sigma, double q, int n);

/// x -> phi(x / R).
Evaluable rescale_test_fn(const Evaluable& phi, double R);

/// Max deviation of (-Delta)^sigma phi_R from R^{-2 sigma} ((-Delta)^sigma phi)(x/R) on grids related by L -> L/R.
double rescale_identity_residual(const std::function<double(const Point&)>& phi, const SpaceGrid& grid, double sigma,
                                 double R);

void write_field_binary(const Field& f, std::ostream& os);
Field read_field_binary(std::istream& is);
/// CSV "x,re,im" of the first-axis line through the box center.
void write_field_csv_slice(const Field& f, std::ostream& os);

} // namespace fracwave::frac_space
