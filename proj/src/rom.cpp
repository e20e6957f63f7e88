#include "sqfilm/rom.hpp"

#include <cmath>

#include "sqfilm/errors.hpp"

namespace sqfilm {

RomSystem make_rom(const DeviceConfig& cfg, bool quad_refine) {
  cfg.validate();
  RomSystem rom;
  rom.cfg = cfg;
  rom.basis = build_modal_basis(cfg);
  const int n = quad_refine ? 64 : 32;
  rom.grid = make_quadrature_grid(n, n, cfg.L, cfg.w);
  rom.Nm = rom.basis.n_beam();
  rom.Ms = rom.basis.n_squeeze();
  rom.dim = 2 * rom.Nm + rom.Ms;
  rom.mass = cfg.rho * cfg.h * cfg.w * cfg.L;

  const Index nx = rom.grid.nx();
  rom.cosx.resize(rom.Ms, nx);
  rom.psi_film.resize(rom.Nm, nx);
  rom.dpsi_film.resize(rom.Nm, nx);
  rom.d2psi_film.resize(rom.Nm, nx);
  for (Index i = 0; i < nx; ++i) {
    const double xi = rom.grid.x[i];
    for (int k = 0; k < rom.Ms; ++k)
      rom.cosx(k, i) = std::cos(rom.basis.squeeze[k].kx * M_PI * xi / cfg.L);
    for (int j = 0; j < rom.Nm; ++j) {
      rom.psi_film(j, i) = rom.basis.beam[j].shape(xi);
      rom.dpsi_film(j, i) = rom.basis.beam[j].dshape(xi);
      rom.d2psi_film(j, i) = rom.basis.beam[j].d2shape(xi);
    }
  }

  // Cross-width factors: the squeeze modes separate as cos(x part) * sin(y
  // part); the y integrals are resolved once on the y rule.
  rom.ymat.resize(rom.Ms, rom.Ms);
  rom.yint.resize(rom.Ms);
  rom.lambda2.resize(rom.Ms);
  const Index ny = rom.grid.ny();
  for (int k = 0; k < rom.Ms; ++k) {
    const auto& mk = rom.basis.squeeze[k];
    rom.lambda2[k] = mk.lambda2;
    double si = 0;
    for (Index j = 0; j < ny; ++j)
      si += rom.grid.wy[j] *
            std::sin(mk.ky * M_PI * (rom.grid.y[j] + 0.5 * cfg.w) / cfg.w);
    rom.yint[k] = mk.c * si;
    for (int l = 0; l <= k; ++l) {
      const auto& ml = rom.basis.squeeze[l];
      double ss = 0;
      for (Index j = 0; j < ny; ++j) {
        const double yj = rom.grid.y[j] + 0.5 * cfg.w;
        ss += rom.grid.wy[j] * std::sin(mk.ky * M_PI * yj / cfg.w) *
              std::sin(ml.ky * M_PI * yj / cfg.w);
      }
      rom.ymat(k, l) = rom.ymat(l, k) = mk.c * ml.c * ss;
    }
  }

  gauss_legendre(128, 0.0, cfg.L, rom.beam_nodes, rom.beam_weights);
  const Index nb = rom.beam_nodes.size();
  rom.psi_beam.resize(rom.Nm, nb);
  Matrix dpsi_b(rom.Nm, nb), d2psi_b(rom.Nm, nb);
  for (Index q = 0; q < nb; ++q) {
    for (int j = 0; j < rom.Nm; ++j) {
      rom.psi_beam(j, q) = rom.basis.beam[j].shape(rom.beam_nodes[q]);
      dpsi_b(j, q) = rom.basis.beam[j].dshape(rom.beam_nodes[q]);
      d2psi_b(j, q) = rom.basis.beam[j].d2shape(rom.beam_nodes[q]);
    }
  }

  const double I = cfg.w * cfg.h * cfg.h * cfg.h / 12.0;
  rom.stiff_lin.setZero(rom.Nm, rom.Nm);
  rom.stretch_mat.setZero(rom.Nm, rom.Nm);
  for (int i = 0; i < rom.Nm; ++i) {
    for (int j = 0; j <= i; ++j) {
      double bend = 0, stretch = 0;
      for (Index q = 0; q < nb; ++q) {
        bend += rom.beam_weights[q] * d2psi_b(i, q) * d2psi_b(j, q);
        stretch += rom.beam_weights[q] * dpsi_b(i, q) * dpsi_b(j, q);
      }
      rom.stretch_mat(i, j) = rom.stretch_mat(j, i) = stretch;
      const double k = cfg.E * I * bend + cfg.sigma_res * cfg.h * cfg.w * stretch;
      rom.stiff_lin(i, j) = rom.stiff_lin(j, i) = k;
    }
  }

  rom.psi_mid.resize(rom.Nm);
  rom.omega.resize(rom.Nm);
  for (int j = 0; j < rom.Nm; ++j) {
    rom.psi_mid[j] = rom.basis.beam[j].shape(0.5 * cfg.L);
    rom.omega[j] = rom.basis.beam[j].omega;
  }

  // Characteristic scales: x ~ G0, v ~ G0*omega_1, s ~ G0^2 * |ff(0)|.
  const Vector f0 = film_source_vector(rom, Vector::Zero(rom.Nm));
  double fs = f0.cwiseAbs().maxCoeff();
  const double ffloor =
      0.2 * cfg.P0 / std::sqrt(cfg.G0) * std::sqrt(cfg.L * cfg.w);
  if (fs < ffloor) fs = ffloor;

  rom.z_scale.resize(rom.dim);
  rom.r_scale.resize(rom.dim);
  const double om1 = rom.omega[0];
  for (int j = 0; j < rom.Nm; ++j) {
    rom.z_scale[j] = cfg.G0;
    rom.z_scale[rom.Nm + j] = cfg.G0 * om1;
    rom.r_scale[j] = cfg.G0;
    rom.r_scale[rom.Nm + j] = rom.mass * cfg.G0 * om1;
  }
  for (int k = 0; k < rom.Ms; ++k) {
    rom.z_scale[2 * rom.Nm + k] = cfg.G0 * cfg.G0 * fs;
    rom.r_scale[2 * rom.Nm + k] = fs;
  }
  return rom;
}

Vector film_gap(const RomSystem& rom, const Vector& x) {
  Vector g = Vector::Constant(rom.grid.nx(), rom.cfg.G0);
  g.noalias() -= rom.psi_film.transpose() * x;
  for (Index i = 0; i < g.size(); ++i)
    if (g[i] <= 0)
      throw ContactError(rom.grid.x[i], 0.0, g[i], "film assembly");
  return g;
}

namespace {

// Symmetric weighted product  M_kl = ymat_kl * sum_i c_i cosx_k(i) cosx_l(i);
// the upper triangle is mirrored so the result is exactly symmetric.
Matrix axial_weighted_product(const RomSystem& rom, const Vector& coeff) {
  Matrix out(rom.Ms, rom.Ms);
  for (int k = 0; k < rom.Ms; ++k) {
    for (int l = 0; l <= k; ++l) {
      double acc = 0;
      for (Index i = 0; i < coeff.size(); ++i)
        acc += coeff[i] * rom.cosx(k, i) * rom.cosx(l, i);
      out(k, l) = out(l, k) = acc * rom.ymat(k, l);
    }
  }
  return out;
}

}  // namespace

Matrix film_mass_matrix(const RomSystem& rom, const Vector& x) {
  const Vector g = film_gap(rom, x);
  const Vector coeff =
      rom.grid.wx.array() * g.array().square().inverse();
  return axial_weighted_product(rom, coeff);
}

Matrix film_flow_matrix(const RomSystem& rom, const Vector& x) {
  const Vector g = film_gap(rom, x);
  const Vector gx = -(rom.dpsi_film.transpose() * x);
  const Vector gxx = -(rom.d2psi_film.transpose() * x);
  Vector coeff(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double sq = std::sqrt(g[i]);
    const double lap32 = 1.5 * sq * gxx[i] + 0.75 * gx[i] * gx[i] / sq;
    coeff[i] = rom.grid.wx[i] * lap32 / (g[i] * sq);  // / G^{3/2}
  }
  Matrix h = axial_weighted_product(rom, coeff);
  const double pref = -rom.cfg.P0 / (12.0 * rom.cfg.mu);
  h.diagonal() += rom.lambda2;
  return pref * h.eval();
}

Vector film_source_vector(const RomSystem& rom, const Vector& x) {
  const Vector g = film_gap(rom, x);
  const Vector coeff =
      rom.grid.wx.array() * g.array().rsqrt();
  Vector f(rom.Ms);
  for (int l = 0; l < rom.Ms; ++l) {
    double acc = 0;
    for (Index i = 0; i < coeff.size(); ++i) acc += coeff[i] * rom.cosx(l, i);
    f[l] = 2.0 * rom.cfg.P0 * rom.yint[l] * acc;
  }
  return f;
}

Matrix film_coupling_matrix(const RomSystem& rom, const Vector& x) {
  const Vector g = film_gap(rom, x);
  const Vector coeff =
      rom.grid.wx.array() * g.array().pow(-1.5);
  Matrix b(rom.Nm, rom.Ms);
  for (int j = 0; j < rom.Nm; ++j) {
    for (int k = 0; k < rom.Ms; ++k) {
      double acc = 0;
      for (Index i = 0; i < coeff.size(); ++i)
        acc += coeff[i] * rom.psi_film(j, i) * rom.cosx(k, i);
      b(j, k) = -rom.yint[k] * acc;
    }
  }
  return b;
}

Matrix stiffness_matrix(const RomSystem& rom, const Vector& x) {
  const double strain =
      x.dot(rom.stretch_mat * x) / (2.0 * rom.cfg.L);
  const double tension = rom.cfg.E * rom.cfg.h * rom.cfg.w * strain;
  return rom.stiff_lin + tension * rom.stretch_mat;
}

Vector elastic_force(const RomSystem& rom, const Vector& x) {
  return stiffness_matrix(rom, x) * x;
}

Vector electrostatic_force(const RomSystem& rom, const Vector& x, double V) {
  Vector g = Vector::Constant(rom.beam_nodes.size(), rom.cfg.G0);
  g.noalias() -= rom.psi_beam.transpose() * x;
  for (Index q = 0; q < g.size(); ++q)
    if (g[q] <= 0)
      throw ContactError(rom.beam_nodes[q], 0.0, g[q], "electrostatic_force");
  const Vector coeff = rom.beam_weights.array() * g.array().square().inverse();
  const double pref = 0.5 * rom.cfg.eps0 * V * V * rom.cfg.w;
  return pref * (rom.psi_beam * coeff);
}

Vector ode_lhs(const RomSystem& rom, const Vector& z) {
  const Vector x = rom.mech(z);
  Vector out(rom.dim);
  out.head(rom.Nm) = x;
  out.segment(rom.Nm, rom.Nm) = rom.mass * rom.vel(z);
  out.tail(rom.Ms) = film_mass_matrix(rom, x) * rom.squeeze(z) -
                     film_source_vector(rom, x);
  return out;
}

Vector ode_rhs(const RomSystem& rom, const Vector& z, double V) {
  const Vector x = rom.mech(z);
  const Vector s = rom.squeeze(z);
  Vector out(rom.dim);
  out.head(rom.Nm) = rom.vel(z);
  out.segment(rom.Nm, rom.Nm) = -elastic_force(rom, x) +
                                film_coupling_matrix(rom, x) * s +
                                electrostatic_force(rom, x, V);
  out.tail(rom.Ms) = film_flow_matrix(rom, x) * s;
  return out;
}

std::pair<Vector, Vector> ode_parts(const RomSystem& rom, const Vector& z,
                                    double V) {
  return {ode_lhs(rom, z), ode_rhs(rom, z, V)};
}

Vector drive_force(const RomSystem& rom, const Vector& z, double V) {
  Vector out = Vector::Zero(rom.dim);
  out.segment(rom.Nm, rom.Nm) = electrostatic_force(rom, rom.mech(z), V);
  return out;
}

}  // namespace sqfilm
