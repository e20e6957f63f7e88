#ifndef SQFILM_MODAL_BASIS_HPP
#define SQFILM_MODAL_BASIS_HPP

#include <vector>

#include "sqfilm/device_config.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

// One clamped-clamped Euler-Bernoulli mode.  Shapes are dimensionless and
// normalized so that (1/L) * integral of psi^2 over the beam equals 1;
// modal coordinates then carry units of meters.
struct BeamMode {
  double beta = 0;        // wavenumber (1/m), beta*L is a root of cos*cosh = 1
  double sigma = 0;       // (cosh - cos)/(sinh - sin) at beta*L
  double one_minus_sigma = 0;  // kept separately: sigma -> 1 for high modes
  double amp = 0;         // normalization factor applied to the raw shape
  double omega = 0;       // modal frequency (rad/s), incl. residual stress
  double L = 0;

  double shape(double x) const;   // psi(x)
  double dshape(double x) const;  // psi'(x)
  double d2shape(double x) const; // psi''(x)
};

// One pressure (squeeze) eigenmode phi(x, y) = c * cos(k_x pi x / L) *
// sin(k_y pi (y + w/2) / w), orthonormal over the film domain.  Zero normal
// flux at the clamped beam ends, ambient pressure at the vented sides.
struct SqueezeMode {
  int kx = 0;
  int ky = 0;
  double c = 0;        // normalization constant (1/m)
  double lambda2 = 0;  // Laplacian eigenvalue (1/m^2)
  double L = 0;
  double w = 0;

  double shape(double x, double y) const;
  double laplacian(double x, double y) const;  // equals -lambda2 * shape
};

struct ModalBasis {
  std::vector<BeamMode> beam;
  std::vector<SqueezeMode> squeeze;

  int n_beam() const { return static_cast<int>(beam.size()); }
  int n_squeeze() const { return static_cast<int>(squeeze.size()); }
};

// Roots of cos(t)cosh(t) = 1 by bracketed bisection to 1e-12 relative.
double clamped_clamped_root(int j);

std::vector<BeamMode> build_beam_modes(const DeviceConfig& cfg);
std::vector<SqueezeMode> build_squeeze_modes(const DeviceConfig& cfg);
ModalBasis build_modal_basis(const DeviceConfig& cfg);

// --- gap field -------------------------------------------------------------
// G(x) = G0 - sum_j x_j psi_j(x); deflection positive toward the substrate.
// The gap varies only along the beam axis.

double gap(const ModalBasis& basis, const DeviceConfig& cfg, const Vector& x,
           double xi);
double gap_dx(const ModalBasis& basis, const Vector& x, double xi);
double gap_dxx(const ModalBasis& basis, const Vector& x, double xi);

// Laplacian of G^(3/2), expanded analytically through the modal shapes.
// Throws ContactError if G <= 0 at the point.
double laplacian_g32(const ModalBasis& basis, const DeviceConfig& cfg,
                     const Vector& x, double xi);

}  // namespace sqfilm

#endif  // SQFILM_MODAL_BASIS_HPP
