#pragma once

#include "fracwave/error.hpp"
#include "fracwave/frac_space.hpp"
#include "fracwave/frac_time.hpp"
#include "fracwave/params.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fracwave::solver {

using frac_space::Complex;
using frac_space::Field;
using frac_space::SpaceGrid;
using frac_time::TimeMesh;

/// Raised when the time step violates the stability budget.
class StabilityError : public NumericalError {
public:
    StabilityError(const std::string& what, double admissible_dt) : NumericalError(what, 0.0), dt_(admissible_dt) {}
    double admissible_dt() const noexcept { return dt_; }

private:
    double dt_;
};

enum class Scheme { semi_implicit_central };
enum class Forcing { memory, none };

struct SolverConfig {
    FracParams params;
    SpaceGrid grid{1, 64, 20.0};
    TimeMesh mesh{1.0, 101};
    Scheme scheme = Scheme::semi_implicit_central;
    Forcing forcing = Forcing::memory;
    double data_amplitude = 1e-3;  // amplitude of u1
    double u0_amplitude = 0.0;     // amplitude of u0
    std::string initial_profile = "gaussian";
    double profile_width = 1.0;
    double blowup_threshold = 1e6;
    std::size_t snapshot_stride = 1;
    double safety = 0.5;

    std::size_t steps() const { return mesh.size() - 1; }
    double dt() const { return mesh.step(); }
    /// Largest step with dt * |xi|_max <= 2 * safety.
    double admissible_dt() const;
    /// Throws DomainError on bad fields and StabilityError on a too-large step.
    void validate() const;
};

/// Named profile on the grid: "gaussian" exp(-|x|^2/(2w^2)), "bracket" <x/w>^{-(n+1)}, "zero".
Field profile_field(const SpaceGrid& grid, const std::string& name, double amplitude, double width);

struct FieldState {
    Field u_hat;
    Field v_hat;
    double t = 0.0;
};

struct InitReport {
    FieldState state;
    double integral_u1;  // zero mode times box volume
    bool sign_condition;
};

InitReport init(const SolverConfig& cfg, const Field& u0, const Field& u1);

struct Diagnostics {
    double t;
    double energy;
    double dissipation;  // ||(-Delta)^{theta/2} u_t||^2
    double sup_norm;
    double l2_norm;
    double boundary_norm;  // max |u| on the outer shell max_i |x_i| >= 0.45 L
};

struct BlowupReport {
    bool triggered = false;
    double t_star = 0.0;
    double growth_rate = 0.0;  // slope of log sup-norm in t over the last decade of growth
    std::string reason;
};

struct Trajectory {
    std::vector<FieldState> snapshots;
    std::vector<std::size_t> snapshot_steps;
    std::vector<Diagnostics> diagnostics;  // one per completed step, starting at t = 0
    std::vector<double> residual;          // dissipation residual r, see dissipation_residual
    BlowupReport blowup;
    double integral_u1 = 0.0;
    bool sign_condition = false;
    bool aborted = false;
    std::size_t steps_done = 0;
};

/// Energy ||u_t||^2 + ||grad u_t||^2 + ||Delta u||^2 + ||grad u||^2 via Parseval.
double energy(const SpaceGrid& grid, const Field& u_hat, const Field& v_hat);
double dissipation(const SpaceGrid& grid, const Field& v_hat, double theta);
/// r^n = (E^{n+1} - E^{n-1})/(2 dt) + 2 D^n for 2 <= n <= N-2 (both neighbours carry centred velocities).
std::vector<double> dissipation_residual(const Trajectory& tr);

BlowupReport blowup_monitor(const Trajectory& tr, double threshold);

/// Time stepper for one configuration; owns its transforms and history.
class Solver {
public:
    Solver(SolverConfig cfg, const Field& u0, const Field& u1);
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    /// Advance one step; returns false once blow-up or the end of the mesh is reached.
    bool step();
    /// Current spectral state (u_hat at the newest node, v_hat as available).
    FieldState state() const;
    std::size_t step_index() const;
    /// Physical-space memory forcing at the newest node.
    std::vector<double> forcing_physical() const;
    /// Spectral memory forcing at the newest node.
    Field forcing_spectral() const;
    const Trajectory& trajectory() const;
    Trajectory finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Trajectory run(const SolverConfig& cfg, const Field& u0, const Field& u1);
/// Builds the data from the configured profile.
Trajectory run(const SolverConfig& cfg);

void write_diagnostics_csv(const Trajectory& tr, std::ostream& os);
/// Monotone within the relative tolerance 1e-10.
bool energy_monotone(const Trajectory& tr, double rel_tol = 1e-10);

} // namespace fracwave::solver
