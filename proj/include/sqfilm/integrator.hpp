#ifndef SQFILM_INTEGRATOR_HPP
#define SQFILM_INTEGRATOR_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sqfilm/rom.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

struct IntegratorSettings {
  double dt = 0;             // time step (s); 0 selects 1/200 of the first
                             // mechanical period
  double newton_tol = 1e-10; // relative residual tolerance
  int newton_max_iter = 25;
  double kappa = 0.9;        // pull-in threshold as a fraction of G0
  int max_halvings = 4;      // automatic dt halving attempts on step failure
};

IntegratorSettings default_settings(const RomSystem& rom);

enum class Termination { time_end, pullin, step_failure };

const char* termination_name(Termination t);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> u_mid;   // midpoint displacement (m)
  std::optional<double> pullin_time;
  Termination reason = Termination::time_end;
  std::string failure_message;
};

// Central-difference Jacobian of f at z; perturbation per coordinate is
// max(1e-8 * max(|z_i|, scale_i), 1e-14).
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                   const Vector& z, const Vector& scale);

// Damped Newton with diagonal row/column scaling.  Converged when the
// row-scaled residual norm drops below tol * (1 + ref_norm).  Throws
// NumericsError with the iteration trace on failure.
Vector newton_solve(const std::function<Vector(const Vector&)>& residual,
                    const Vector& z0, const Vector& r_scale,
                    const Vector& z_scale, double tol, int max_iter,
                    double ref_norm);

// One implicit-Euler step of the full nonlinear model:
// ode_lhs(z_next) - ode_lhs(z) = dt * ode_rhs(z_next, V).
Vector step_full(const RomSystem& rom, const Vector& z, double V, double dt,
                 const IntegratorSettings& settings);

// Generic state stepper; implementations throw ContactError to signal
// contact and NumericsError on solver breakdown.
using Stepper = std::function<Vector(const Vector&, double, double)>;

// Shared integration harness: fixed outer steps, automatic halving on step
// failure, pull-in detection at kappa * G0 with linear interpolation of the
// crossing time.  Starts from rest (z = 0).  stop_fraction < 0 ends the run
// at the kappa crossing; otherwise the crossing is only recorded and the run
// continues until the midpoint displacement reaches stop_fraction * G0 (used
// by the linear baseline, which is integrated through to gap closure).
Trajectory run_simulation(const RomSystem& rom, const Stepper& step,
                          const std::function<double(double)>& voltage,
                          double t_end, const IntegratorSettings& settings,
                          double stop_fraction = -1.0);

Trajectory simulate(const RomSystem& rom,
                    const std::function<double(double)>& voltage, double t_end,
                    const IntegratorSettings& settings);
Trajectory simulate(const RomSystem& rom, double voltage, double t_end,
                    const IntegratorSettings& settings);

// Static equilibrium at voltage V (v = 0, s = 0): solves the elastic /
// electrostatic force balance by Newton.  Fails above the static pull-in
// voltage.
Vector static_equilibrium(const RomSystem& rom, double V);

// Fully linear time-invariant baseline: single linearization at z = 0 with
// the drive reduced to its value at rest, so the response is exactly linear
// in V^2.
struct LinearModel {
  Matrix lhs_jac;    // Jacobian of ode_lhs at 0
  Matrix rhs_jac;    // Jacobian of ode_rhs minus drive at 0
  Vector drive_gain; // drive at rest per unit V^2
};

LinearModel make_linear_model(const RomSystem& rom);
Vector step_linear(const RomSystem& rom, const LinearModel& model,
                   const Vector& z, double V, double dt);
Trajectory simulate_linear(const RomSystem& rom, const LinearModel& model,
                           const std::function<double(double)>& voltage,
                           double t_end, const IntegratorSettings& settings);

// Independent pull-in runs per voltage; failures are recorded per row and
// the sweep continues.
struct SweepRow {
  double voltage = 0;
  std::optional<double> pullin_time;
  std::string status;  // "pullin", "no-pullin" or "failed: ..."
};

std::vector<SweepRow> pullin_sweep(
    const std::vector<double>& voltages,
    const std::function<Trajectory(double)>& runner);

}  // namespace sqfilm

#endif  // SQFILM_INTEGRATOR_HPP
