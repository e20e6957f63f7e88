#ifndef SQFILM_PWL_MECH_HPP
#define SQFILM_PWL_MECH_HPP

#include <string>
#include <vector>

#include "sqfilm/integrator.hpp"
#include "sqfilm/rom.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

// The coupled model rewritten with explicit coefficient operators,
//
//   d/dt ( AG(x) z - FP(x) ) = BB(x) z + V^2 * PE(x),
//
// where every operator depends only on the mechanical coordinates x.  This
// factorization is exact: AG = blockdiag(I, M, Af(x)), FP = (0, 0, ff(x)),
// BB collects the stiffness, coupling and flow blocks, and PE is the
// electrostatic force per unit squared voltage.
struct MechCoeffs {
  Matrix AG;  // state-map matrix, dim x dim
  Vector FP;  // state-map offset
  Matrix BB;  // right-side coefficient matrix, dim x dim
  Vector PE;  // electrostatic force per unit V^2
};

// Exact coefficient operators assembled from the full model at x.
MechCoeffs assemble_mech_coeffs(const RomSystem& rom, const Vector& x);

// One grid node: the coefficient operators at x = (x1, 0, ..., 0) together
// with their derivatives with respect to every mechanical coordinate
// (central differences), so the blended maps are first-order accurate in
// all of x, not just in the gridded coordinate.
struct MechGridPoint {
  double x1 = 0;  // gridded dominant-mode coordinate (m)
  MechCoeffs c;
  std::vector<MechCoeffs> dc;  // derivative per mechanical coordinate
};

// Piecewise-affine coefficient model on a uniform 1-D grid over the
// dominant mechanical coordinate.  Unlike the trajectory-sampled model, it
// needs no training simulation: the grid covers the reachable deflection
// range by construction.  Immutable after build.
struct MechGridModel {
  std::vector<MechGridPoint> points;
  double beta = 25.0;  // weighting sharpness
  double x_scale = 0;  // distance normalization over the gridded coordinate

  int size() const { return static_cast<int>(points.size()); }
};

// Largest midpoint deflection representable without contact, as a mode-1
// coordinate: G0 / psi_1(L/2).
double mech_grid_contact_limit(const RomSystem& rom);

// Uniform grid of n_points over [x1_min, x1_max].  The range must stay
// strictly below the contact limit (with margin for the derivative probes).
MechGridModel build_grid_model(const RomSystem& rom, int n_points,
                               double x1_min, double x1_max,
                               double beta = 25.0);

// Default range [0, 0.9 * contact limit]: rest up to the pull-in detection
// threshold of the integration harness.
MechGridModel build_grid_model(const RomSystem& rom, int n_points,
                               double beta = 25.0);

// Blending weights as a function of the gridded coordinate alone:
// exponential_weights over |x1 - x1_i| / x_scale.  Unit sum, non-negative,
// indicator at the grid nodes for any values of the remaining coordinates.
Vector mech_grid_weights(const MechGridModel& model, double x1);

// Weighted-tangent blend of the cached operators at mechanical coordinates
// x: sum_i w_i(x1) * (c_i + sum_k dc_i[k] * (x - x_i)_k).  Reproduces the
// cached values bit-for-bit at the grid nodes.
MechCoeffs mech_grid_coeffs(const MechGridModel& model, const Vector& x);

// Fully implicit Euler step: weights, coefficient blends and the
// electrostatic term are all evaluated at the unknown end state, and the
// resulting nonlinear system is solved by Newton with a finite-difference
// Jacobian.  Throws NumericsError on Newton failure (the integration
// harness then retries with halved steps, exactly as for the full model).
Vector step_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                     const Vector& z, double V, double dt,
                     const IntegratorSettings& settings);

Trajectory simulate_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                             const std::function<double(double)>& voltage,
                             double t_end, const IntegratorSettings& settings);
Trajectory simulate_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                             double voltage, double t_end,
                             const IntegratorSettings& settings);

// Step-voltage comparison against the full model: displacement error is the
// maximum of |u_mid difference| / G0 (in percent) on the shared time grid up
// to the earlier pull-in; pull-in error is the relative shift of the
// pull-in time (in percent).  Comparable only when both runs pull in.
struct MechGridReport {
  int n_points = 0;
  bool comparable = false;
  double disp_err_pct = 0;
  double pullin_err_pct = 0;
};

MechGridReport mech_grid_error_report(const RomSystem& rom,
                                      const MechGridModel& model, double V,
                                      const IntegratorSettings& settings,
                                      double t_end = 1e-3);

// Same comparison against an already computed full-model trajectory (which
// must use the same settings and voltage).
MechGridReport mech_grid_error_report(const RomSystem& rom,
                                      const Trajectory& full,
                                      const MechGridModel& model, double V,
                                      const IntegratorSettings& settings,
                                      double t_end = 1e-3);

// CSV forms of the refinement study: "n_points,disp_err_pct,pullin_err_pct".
std::string mech_grid_report_header();
std::string mech_grid_report_row(const MechGridReport& report);

// JSON persistence (matrices stored row-major).
void save_mech_grid(const MechGridModel& model, const std::string& path);
MechGridModel load_mech_grid(const std::string& path);

}  // namespace sqfilm

#endif  // SQFILM_PWL_MECH_HPP
