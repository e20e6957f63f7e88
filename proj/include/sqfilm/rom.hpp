#ifndef SQFILM_ROM_HPP
#define SQFILM_ROM_HPP

#include <utility>

#include "sqfilm/device_config.hpp"
#include "sqfilm/modal_basis.hpp"
#include "sqfilm/quadrature.hpp"
#include "sqfilm/types.hpp"

namespace sqfilm {

// Assembled modal model of the film coupled to the beam.  The state vector is
// z = (x, v, s): mechanical modal coordinates (m), modal velocities (m/s) and
// modified squeeze coordinates.  The governing system is
//
//   d/dt ode_lhs(z) = ode_rhs(z, V)
//
// with  ode_lhs = (x, M v, Af(x) s - ff(x))  and
//       ode_rhs = (v, -K(x) x + Bc(x) s + Fe(x, V), Hf(x) s),
//
// where Af, Hf, ff, Bc are the film coefficient operators assembled below.
// They depend on x only, never on v or s.
//
// Everything is immutable after construction; all operations are pure.
struct RomSystem {
  DeviceConfig cfg;
  ModalBasis basis;
  QuadratureGrid grid;

  int Nm = 0;   // mechanical modes
  int Ms = 0;   // squeeze modes
  int dim = 0;  // 2*Nm + Ms

  double mass = 0;  // diagonal modal mass rho*h*w*L (kg)

  // Film-node tables (separable tensor rule: G varies only along the beam).
  Matrix cosx;      // Ms x n_x, axial factor of each squeeze mode
  Matrix psi_film;  // Nm x n_x, beam shapes at film nodes
  Matrix dpsi_film;   // Nm x n_x
  Matrix d2psi_film;  // Nm x n_x
  Matrix ymat;      // Ms x Ms, cross-width factor incl. normalization
  Vector yint;      // Ms, integral of the width factor incl. normalization
  Vector lambda2;   // Ms

  // Beam-axis rule for stiffness and electrostatic integrals.
  Vector beam_nodes, beam_weights;
  Matrix psi_beam;  // Nm x n_b

  Matrix stiff_lin;     // linear modal stiffness incl. residual stress (N/m)
  Matrix stretch_mat;   // S_ij = int psi_i' psi_j' dx (1/m)
  Vector psi_mid;       // psi_j(L/2)
  Vector omega;         // modal frequencies (rad/s)

  // Characteristic magnitudes used for Newton scaling and FD perturbations.
  Vector z_scale;  // per state coordinate
  Vector r_scale;  // per ode_lhs coordinate

  Vector mech(const Vector& z) const { return z.head(Nm); }
  Vector vel(const Vector& z) const { return z.segment(Nm, Nm); }
  Vector squeeze(const Vector& z) const { return z.tail(Ms); }
  double midpoint_displacement(const Vector& z) const {
    return psi_mid.dot(z.head(Nm));
  }
};

RomSystem make_rom(const DeviceConfig& cfg, bool quad_refine = false);

// Gap values at the film x-nodes; throws ContactError if any is <= 0.
Vector film_gap(const RomSystem& rom, const Vector& x);

// Af_kl(x) = integral of G^-2 phi_k phi_l over the film.  Symmetric positive
// definite whenever the gap stays open.
Matrix film_mass_matrix(const RomSystem& rom, const Vector& x);

// Hf_kl(x) = -(P0/12mu) (lambda_k^2 delta_kl
//                        + integral of (Delta G^{3/2}/G^{3/2}) phi_k phi_l).
Matrix film_flow_matrix(const RomSystem& rom, const Vector& x);

// ff_l(x) = 2 P0 * integral of phi_l G^{-1/2}.
Vector film_source_vector(const RomSystem& rom, const Vector& x);

// Bc_jk(x) = -integral of psi_j phi_k G^{-3/2}: film pressure above ambient
// pushes the beam away from the substrate.
Matrix film_coupling_matrix(const RomSystem& rom, const Vector& x);

// Secant stiffness K(x) = K_lin + E h w T(x) S with the midplane-stretching
// strain T(x) = x' S x / (2 L); elastic_force returns K(x) x.
Matrix stiffness_matrix(const RomSystem& rom, const Vector& x);
Vector elastic_force(const RomSystem& rom, const Vector& x);

// Parallel-plate electrostatic modal force, attractive (gap-reducing):
// Fe_j = (eps0 V^2 w / 2) * int psi_j / G^2 dx over the beam.
Vector electrostatic_force(const RomSystem& rom, const Vector& x, double V);

// Full state-space forms of the coupled model.
Vector ode_lhs(const RomSystem& rom, const Vector& z);
Vector ode_rhs(const RomSystem& rom, const Vector& z, double V);
std::pair<Vector, Vector> ode_parts(const RomSystem& rom, const Vector& z,
                                    double V);

// Electrostatic drive padded to state dimension (the only input channel).
Vector drive_force(const RomSystem& rom, const Vector& z, double V);

}  // namespace sqfilm

#endif  // SQFILM_ROM_HPP
