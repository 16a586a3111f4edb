#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

namespace fracwave::frac_time {

/// Uniform mesh t_i = i*T/(N-1) on [0, T].
class TimeMesh {
public:
    TimeMesh(double t_end, std::size_t num_points);

    double t_end() const { return t_end_; }
    std::size_t size() const { return n_; }
    double step() const { return h_; }
    double node(std::size_t i) const;
    std::vector<double> nodes() const;

    bool operator==(const TimeMesh& o) const { return n_ == o.n_ && t_end_ == o.t_end_; }

private:
    double t_end_;
    std::size_t n_;
    double h_;
};

/// Values of a real function at the nodes of a TimeMesh.
struct SampledFn {
    SampledFn(TimeMesh mesh, std::vector<double> values);

    template <class F>
    static SampledFn sample(const TimeMesh& mesh, F&& f) {
        std::vector<double> v(mesh.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mesh.node(i));
        return SampledFn(mesh, std::move(v));
    }

    TimeMesh mesh;
    std::vector<double> values;
};

/// Fractional order alpha in (0,1).
class FracOrder {
public:
    explicit FracOrder(double alpha);
    double value() const { return alpha_; }
    operator double() const { return alpha_; }

private:
    double alpha_;
};

enum class Side { left, right };

/// Parameters of the cutoff omega_T^beta used as a temporal test function.
struct CutoffParams {
    CutoffParams(double T, double beta, FracOrder alpha);
    double T;
    double beta;
    FracOrder alpha;
};

/// Product-integration weights for the left integral J^alpha on a uniform mesh.
/// J^alpha f(t_k) = scale * (d[k] f_0 + sum_{j=1..k} c[k-j] f_j).
struct ProductWeights {
    double alpha;
    double h;
    double scale;           // h^alpha / Gamma(alpha+2)
    std::vector<double> c;  // c[0..N-1]
    std::vector<double> d;  // d[0..N-1], d[0] = 0

    /// Weight of node j in the value at node k (j <= k).
    double weight(std::size_t k, std::size_t j) const {
        if (k == 0) return 0.0;
        return scale * (j == 0 ? d[k] : c[k - j]);
    }
};

/// Cached, immutable weights keyed on (num_points, step, alpha).
std::shared_ptr<const ProductWeights> product_weights(std::size_t num_points, double h, double alpha);

SampledFn rl_integral(const SampledFn& f, FracOrder alpha, Side side = Side::left);
SampledFn rl_derivative(const SampledFn& f, FracOrder alpha, Side side = Side::left);

/// Gamma(beta+1)/Gamma(beta+1-alpha).
double cutoff_constant(double alpha, double beta);
/// Competing closed-form constant: Gamma(beta+1)/((beta+2-alpha)Gamma(beta-alpha)).
double printed_cutoff_constant(double alpha, double beta);

/// omega_T(t)^beta = (1-t/T)^beta on [0,T], 0 beyond T (and 1 before 0).
double cutoff(double t, double T, double beta);

/// D^alpha_{t|T} omega_T^beta (t) in closed form.
double closed_cutoff_derivative(const CutoffParams& p, double t);

/// Bound on |d^j/dt^j D^alpha_{t|T} omega_T^beta| for j = 0,1,2.
double cutoff_derivative_bound(const CutoffParams& p, int j, double t);

/// sup over interior nodes of |D^alpha J^alpha f - f|.
double verify_inversion(const SampledFn& f, FracOrder alpha);

struct PartsResult {
    double lhs;
    double rhs;
};
/// lhs = int phi * J^a_{0|t} psi, rhs = int psi * J^a_{t|T} phi (composite trapezoid).
PartsResult verify_parts(const SampledFn& phi, const SampledFn& psi, FracOrder alpha);

/// F(t) = int_0^t (t-s)^{-gamma} |u(s)|^p ds = Gamma(1-gamma) J^{1-gamma} |u|^p.
SampledFn memory_convolve(const SampledFn& history, double gamma, double p);

} // namespace fracwave::frac_time
