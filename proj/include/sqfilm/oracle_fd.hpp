#ifndef SQFILM_ORACLE_FD_HPP
#define SQFILM_ORACLE_FD_HPP

#include <functional>
#include <string>

#include "sqfilm/device_config.hpp"
#include "sqfilm/integrator.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

// Brute-force reference solver: a cell-centered finite-volume film on an
// nx-by-ny grid coupled to a finite-difference clamped-clamped beam.  It
// deliberately shares no assembly code with the reduced model, so agreement
// between the two is evidence rather than bookkeeping.
struct FdConfig {
  DeviceConfig device;
  int nx = 64;         // film cells along the beam
  int ny = 32;         // film cells across the width
  int n_beam = 81;     // beam nodes including both clamped ends (odd, so a
                       // node sits exactly at the midpoint)
  double dt = 0;       // time step (s); must be set before a coupled run
  double kappa = 0.9;  // pull-in detection threshold, fraction of the gap

  void validate() const;  // ConfigError on violation (dt only needs to be
                          // positive for coupled runs)
};

// One implicit Euler step of the isothermal film equation linearized in the
// gauge pressure p = P - P0,
//
//   div( G^3/(12 mu) grad p ) = d/dt [ G (1 + p/P0) ],
//
// on the cell-centered grid: zero flux across the clamped beam ends, ambient
// pressure (p = 0) at the vented sides.  All fields are nx-by-ny with row i
// running along the beam; G is the end-of-step gap and dGdt its rate, so the
// system is linear in the unknown pressure and is solved by a direct sparse
// factorization of the five-point conservative stencil.  closed_y_edges
// walls off the vented sides (zero flux all around) — the sealed-cavity
// variant used by the mass-conservation tests.
Matrix fd_reynolds_step(const FdConfig& cfg, const Matrix& p, const Matrix& G,
                        const Matrix& dGdt, double dt,
                        bool closed_y_edges = false);

// Width-integrated gauge pressure, interpolated to the beam nodes: the film
// load per unit beam length (N/m, negative when the film pushes the beam
// away from the substrate).  Exposed for cross-model force comparisons.
Vector film_line_load(const FdConfig& cfg, const Matrix& p);

// Per-step observer for the coupled run: sample time, beam deflection at the
// nodes, and the pressure field.
using FdObserver =
    std::function<void(double t, const Vector& u_nodes, const Matrix& p)>;

// Staggered coupled run from rest.  Per step: one implicit beam update
// (finite-difference Euler-Bernoulli with midplane stretching, electrostatic
// load at the new state, film load frozen from the last pressure field),
// then one film step on the updated gap — a single fixed-point sweep.  The
// output mirrors the reduced-model trajectories: sampled times and midpoint
// displacement plus the interpolated kappa-crossing time; the states vector
// stays empty (the field state has no reduced-coordinate meaning).  Errors:
// NumericsError when the beam solve fails or the film system is singular.
Trajectory fd_coupled_simulate(const FdConfig& cfg,
                               const std::function<double(double)>& voltage,
                               double t_end, const FdObserver& observe = {});
Trajectory fd_coupled_simulate(const FdConfig& cfg, double voltage,
                               double t_end, const FdObserver& observe = {});

// Pressure snapshots: a 16-byte header (8-byte magic "SQFLMPRS", uint32 nx,
// uint32 ny) followed by nx*ny row-major 64-bit floats.
void save_pressure_snapshot(const Matrix& p, const std::string& path);
Matrix load_pressure_snapshot(const std::string& path);

}  // namespace sqfilm

#endif  // SQFILM_ORACLE_FD_HPP
