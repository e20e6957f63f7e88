#ifndef SQFILM_TPWL_HPP
#define SQFILM_TPWL_HPP

#include <string>
#include <vector>

#include "sqfilm/integrator.hpp"
#include "sqfilm/rom.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

// One affine model of the coupled dynamics, linearized at a state collected
// from a training trajectory.  The drive (electrostatic) term is excluded
// from rhs/rhs_jac; it re-enters each step as a separate nonlinear term.
struct LinearizationPoint {
  Vector z;        // linearization state
  Vector lhs;      // ode_lhs at z
  Vector rhs;      // ode_rhs at z with the drive removed
  Matrix lhs_jac;  // d(ode_lhs)/dz at z
  Matrix rhs_jac;  // d(ode_rhs - drive)/dz at z
};

// Weighted collection of linearization points with the normalization scales
// of the training trajectory.  Immutable after training.
struct TpwlModel {
  std::vector<LinearizationPoint> points;
  Vector scales;          // per-coordinate distance normalization, > 0
  double delta = 0;       // admission threshold used during training
  double beta = 25.0;     // weighting sharpness
  double train_voltage = 0;
  double train_dt = 0;

  int size() const { return static_cast<int>(points.size()); }
};

// Select linearization points along an existing trajectory: scales are the
// per-coordinate maxima over the trajectory, floored at a small fraction of
// the ROM's characteristic coordinate scales so that coordinates the drive
// never excites cannot dominate the normalized metric; the initial state is
// always kept and a sample is added when its minimum normalized distance to
// the points collected so far exceeds delta.
TpwlModel train_tpwl_from_trajectory(const RomSystem& rom,
                                     const Trajectory& training, double delta,
                                     double beta = 25.0);

// Simulate the full model at the training voltage (to pull-in or t_end),
// then collect points from that trajectory.
TpwlModel train_tpwl(const RomSystem& rom, double training_voltage,
                     double t_end, const IntegratorSettings& settings,
                     double delta, double beta = 25.0);

// Smallest-interval bisection on delta so that training on `training`
// yields exactly `target` points.  Throws NumericsError if no threshold
// reaches the target count.
double delta_for_point_count(const RomSystem& rom, const Trajectory& training,
                             int target);

// Normalized distances from z to every linearization point.
Vector tpwl_distances(const TpwlModel& model, const Vector& z);

// Shared blending kernel of all piecewise-linear models: weights
// exp(-beta * d_i / min_d) over non-negative distances, normalized to unit
// sum; exact indicator of the (first) closest point when min_d == 0.
Vector exponential_weights(const Vector& distances, double beta);

// exponential_weights over tpwl_distances.
Vector tpwl_weights(const TpwlModel& model, const Vector& z);

// Semi-implicit step: weights and the electrostatic drive are evaluated at
// the current state and frozen; the weighted affine model is then stepped
// by implicit Euler, which reduces to one linear solve.
Vector step_tpwl(const RomSystem& rom, const TpwlModel& model, const Vector& z,
                 double V, double dt);

Trajectory simulate_tpwl(const RomSystem& rom, const TpwlModel& model,
                         const std::function<double(double)>& voltage,
                         double t_end, const IntegratorSettings& settings);
Trajectory simulate_tpwl(const RomSystem& rom, const TpwlModel& model,
                         double voltage, double t_end,
                         const IntegratorSettings& settings);

// JSON persistence (matrices stored row-major).
void save_tpwl(const TpwlModel& model, const std::string& path);
TpwlModel load_tpwl(const std::string& path);

}  // namespace sqfilm

#endif  // SQFILM_TPWL_HPP
