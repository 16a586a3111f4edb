#pragma once

#include "fracwave/error.hpp"
#include "fracwave/frac_space.hpp"
#include "fracwave/frac_time.hpp"
#include "fracwave/params.hpp"
#include "fracwave/solver.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fracwave::probe {

using frac_space::Field;
using frac_space::Point;
using frac_space::SpaceGrid;
using frac_time::CutoffParams;
using frac_time::TimeMesh;

/// psi_T = D^alpha_{t|T} omega_T^beta and phi_R = <x/R>^{-q}, q = n + 2 theta.
/// psi(t) is the normalized test function psi_T / psi_T(0) = omega^{beta - alpha}.
class TestPair {
public:
    TestPair(CutoffParams cutoff, int n, double theta, double R);

    const CutoffParams& cutoff() const { return cutoff_; }
    int dim() const { return n_; }
    double theta() const { return theta_; }
    double q() const { return q_; }
    double R() const { return R_; }

    /// psi_T(0) = C T^{-alpha}.
    double normalization() const { return norm_; }

    double psi(double t) const;
    double dpsi(double t) const;
    double ddpsi(double t) const;
    /// d^j/dt^j psi_T, the unnormalized proof function.
    double psi_T(int j, double t) const;

    double phi(const Point& x) const;
    double neg_lap_phi(const Point& x) const;
    double bilap_phi(const Point& x) const;

private:
    CutoffParams cutoff_;
    int n_;
    double theta_, q_, R_, norm_;
    frac_space::BracketSeries lap_, bilap_;
};

/// Temporal test function with psi(0) = 1 and psi(T) = psi'(T) = 0.
struct TemporalTest {
    double T;
    std::function<double(double)> psi, dpsi, ddpsi;
};

TemporalTest temporal_test(const TestPair& pair);

/// phi and the operators appearing in the weak form, sampled on a grid.
struct SpatialTest {
    Field phi;
    Field neg_lap;   // -Delta phi
    Field bilap;     // Delta^2 phi
    Field frac;      // (-Delta)^theta phi
};

/// Integer powers from closed forms, (-Delta)^theta spectrally from the sampled phi.
SpatialTest spatial_test(const TestPair& pair, const SpaceGrid& grid);

/// Real samples u(t_k, x_i) and forcing F(t_k, x_i) on a tensor grid.
struct SpaceTimeSamples {
    TimeMesh mesh;
    SpaceGrid grid;
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> forcing;
    std::vector<double> u0, u1;
};

/// Requires snapshot_stride 1 and a run that reached the end of its mesh.
SpaceTimeSamples samples_from_trajectory(const solver::Trajectory& tr, const solver::SolverConfig& cfg);

/// u = A(t) G(x) with A(t) = cos t + sin(2t)/2 and G Gaussian; forcing is the full operator applied to u.
SpaceTimeSamples manufactured_samples(const SpaceGrid& grid, const TimeMesh& mesh, double theta);

struct WeakOptions {
    bool drop_boundary_term = false;
};

struct WeakResidual {
    double lhs;
    double rhs;
    double gap;                    // |lhs - rhs| / (sum of the absolute values of all terms)
    std::array<double, 5> bulk;    // signed as they enter the right-hand side
    std::array<double, 3> data;    // -u0 (-Delta)^theta phi, -u1 phi, -u1 (-Delta phi)
    double boundary;               // psi'(0) (u0 phi + u0 (-Delta phi))
};

/// Every term of the weak identity by trapezoid in time and grid sums in space.
WeakResidual weak_residual(const SpaceTimeSamples& s, const TemporalTest& psi, const SpatialTest& phi,
                           const WeakOptions& opt = {});

/// Young constant for a b <= eps a^p + C_eps b^{p'}.
double young_constant(double epsilon, double p);

struct FiveIntegrals {
    double I_u;      // int int omega^beta |u|^p phi
    double I_main;   // Gamma(alpha) I_u
    double gamma_alpha;
    std::array<double, 5> I;
    std::array<double, 5> bounds;       // eps I_u + C_eps Q_j
    std::array<double, 5> time_factor;  // int |d^j psi_T|^{p'} omega^{-beta (p'-1)} dt
    std::array<double, 5> space_factor; // sum |(-Delta)^{sigma_j} phi|^{p'} phi^{1-p'} dx
    double C_eps;
    double epsilon;
    double p_conjugate;

    /// (Gamma(alpha) - 5 eps) I_u and C_eps sum Q_j.
    double master_lhs() const;
    double master_rhs() const;
    bool master_holds() const { return master_lhs() <= master_rhs(); }
};

/// (j, sigma_j) in {(0,1), (0,2), (1,theta), (2,0), (2,1)}.
std::array<std::pair<int, double>, 5> term_orders(double theta);

/// Requires beta > (alpha + 2) p'. T is the end of the sample mesh.
FiveIntegrals five_integrals(const SpaceTimeSamples& s, const FracParams& params, double beta, double R,
                             double epsilon);

/// The five affine rates g_j(eta) = (alpha + j) eta + 2 sigma_j.
std::array<double, 5> g_branches(double eta, double gamma, double theta);

/// R-exponent n + eta - g(eta) p' of the master bound with T = R^eta.
double master_exponent(const FracParams& params, double eta);
/// Root in p of master_exponent for fixed (n, gamma, theta, eta).
double master_exponent_root(int n, double gamma, double theta, double eta);

struct TermFit {
    int j;
    double sigma;
    double g;
    double predicted;
    double slope;
    double r_squared;
    bool accepted;  // r_squared >= 0.99
};

struct ScalingFit {
    double eta;
    std::vector<double> R_values;
    std::array<TermFit, 5> terms;
    double g_of_eta;
    double master_predicted;
    double master_slope;
};

/// Fits the five Young bounds with T = R^eta; R_list must span at least one decade.
ScalingFit scaling_fit_bounds(const FracParams& params, double eta, const std::vector<double>& R_list);

struct TrajectoryFitOptions {
    double beta = 0;          // 0 picks (alpha + 2) p' + 1
    std::size_t time_nodes = 257;
    std::size_t modes = 64;
    double box_factor = 16;   // box length = box_factor * R
    double box_length = 0;    // > 0 fixes the box instead
};

/// Fits |I_j| of u(t, x) on boxes scaled with R, T = R^eta.
ScalingFit scaling_fit_trajectory(const FracParams& params, double eta, const std::vector<double>& R_list,
                                  const std::function<double(double, const Point&)>& u,
                                  const TrajectoryFitOptions& opt = {});

struct LogRegimeRow {
    double T;
    double R;               // ln T
    double log_bound;       // log of T^{1 - alpha p'} times the five-term bracket
    double log_ratio_delta; // log(bracket / T^{delta}), delta = (alpha p' - 1) / 2
    double log_bound_delta0;
};

struct LogRegimeTable {
    double alpha_p_conjugate;
    double delta;           // (alpha p' - 1) / 2
    bool in_regime;         // p < 1/gamma
    bool bound_decays;      // bound decreasing along the list
    bool logs_dominated;    // ratio decreasing along the list
    std::vector<LogRegimeRow> rows;
};

/// Requires gamma <= (n - 2)/n and T > e.
LogRegimeTable log_regime_check(const FracParams& params, const std::vector<double>& T_list);

struct BallLaplacian {
    double R;
    double ball_max;    // max over |x| <= R/2 of |Delta phi_R|
    double global_max;
    double ball_max_bilap;
};

struct CriticalReport {
    double p_c;
    double p_c_conjugate;
    double exponent_b;   // n + 2(1 - theta) - 2(alpha + 2)(1 - theta) p_c'
    double K_exponent;   // -1 + (alpha + 2) p_c'
    std::vector<BallLaplacian> bracket;
    std::vector<BallLaplacian> plateau;
    double bracket_slope;  // fitted slope of log ball_max against log R
    bool plateau_flat;     // plateau ball_max below 1e-12 of its global max for every R
};

/// Smooth radial profile equal to 1 on |x| <= 1/2 and <rho(|x|)>^{-q} outside.
double plateau_fn(const Point& x, double q);

/// Requires gamma > (n - 2)/n; p is taken as p_c.
CriticalReport critical_case_probe(int n, double gamma, double theta, const std::vector<double>& R_list);

struct DataTermSeries {
    std::vector<double> R;
    std::vector<double> value;
    std::vector<std::array<double, 3>> terms;  // u0 (-Delta)^theta phi_R, u1 phi_R, u1 (-Delta phi_R)
    double integral_u1;
    std::vector<double> deviation;             // value - integral_u1
    double deviation_slope;                    // fit of log|deviation| against log R
    std::optional<double> crossing_R;          // first R from which the series stays positive
};

/// Data are real samples on a grid; q defaults to n + 2 theta.
DataTermSeries data_term_limit(const Field& u0, const Field& u1, double theta, const std::vector<double>& R_list,
                               std::optional<double> q = std::nullopt);

/// {params, I_main, I[5], bounds[5], fits, verdict}.
std::string probe_json(const FracParams& params, const FiveIntegrals& fi, const std::vector<ScalingFit>& fits);

} // namespace fracwave::probe
