#include "sqfilm/modal_basis.hpp"

#include <cmath>
#include <string>

#include "sqfilm/errors.hpp"
#include "sqfilm/quadrature.hpp"

namespace sqfilm {

namespace {

// cos(t)cosh(t) - 1 changes sign across each root; cos(t) - sech(t) has the
// same roots but stays bounded, so the bisection never overflows.
double characteristic(double t) { return std::cos(t) - 1.0 / std::cosh(t); }

}  // namespace

double clamped_clamped_root(int j) {
  // Roots sit close to (2j+1)pi/2.
  const double center = (2.0 * j + 1.0) * M_PI / 2.0;
  double lo = center - 0.5;
  double hi = center + 0.5;
  if (j == 1) { lo = 3.0; hi = 5.0; }
  double flo = characteristic(lo);
  if (flo * characteristic(hi) > 0)
    throw NumericsError("clamped_clamped_root: bracket failed for mode " +
                        std::to_string(j));
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = characteristic(mid);
    if (fmid == 0.0) return mid;
    if (flo * fmid < 0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fmid;
    }
    if ((hi - lo) < 1e-12 * lo) return 0.5 * (lo + hi);
  }
  throw NumericsError("clamped_clamped_root: no convergence for mode " +
                      std::to_string(j));
}

// Shape evaluation is rearranged as e^{-t} + (1-sigma) sinh(t) - cos(t) +
// sigma sin(t) with (1-sigma) computed from its own closed form; the naive
// cosh - sigma*sinh difference loses all digits for high modes.
double BeamMode::shape(double x) const {
  const double t = beta * x;
  return amp * (std::exp(-t) + one_minus_sigma * std::sinh(t) - std::cos(t) +
                sigma * std::sin(t));
}

double BeamMode::dshape(double x) const {
  const double t = beta * x;
  return amp * beta *
         (-std::exp(-t) + one_minus_sigma * std::cosh(t) + std::sin(t) +
          sigma * std::cos(t));
}

double BeamMode::d2shape(double x) const {
  const double t = beta * x;
  return amp * beta * beta *
         (std::exp(-t) + one_minus_sigma * std::sinh(t) + std::cos(t) -
          sigma * std::sin(t));
}

std::vector<BeamMode> build_beam_modes(const DeviceConfig& cfg) {
  cfg.validate();
  std::vector<BeamMode> modes;
  modes.reserve(cfg.Nm);

  Vector nodes, weights;
  gauss_legendre(128, 0.0, cfg.L, nodes, weights);

  const double I = cfg.w * cfg.h * cfg.h * cfg.h / 12.0;
  const double A = cfg.w * cfg.h;

  for (int j = 1; j <= cfg.Nm; ++j) {
    BeamMode m;
    m.L = cfg.L;
    const double t = clamped_clamped_root(j);
    m.beta = t / cfg.L;
    const double sh = std::sinh(t), ch = std::cosh(t);
    const double s = std::sin(t), c = std::cos(t);
    m.sigma = (ch - c) / (sh - s);
    // 1 - sigma = (cos - sin - e^{-t}) / (sinh - sin), cancellation-free.
    m.one_minus_sigma = (c - s - std::exp(-t)) / (sh - s);
    m.amp = 1.0;

    // Rescale to (1/L) int psi^2 dx = 1 (analytically already ~1).
    double norm = 0;
    for (Index q = 0; q < nodes.size(); ++q) {
      const double v = m.shape(nodes[q]);
      norm += weights[q] * v * v;
    }
    m.amp = 1.0 / std::sqrt(norm / cfg.L);

    // EI beta^4 = rho A omega^2, plus the residual-stress correction
    // omega^2 += sigma_res * (1/L) int psi'^2 dx / rho.
    double dnorm = 0;
    for (Index q = 0; q < nodes.size(); ++q) {
      const double v = m.dshape(nodes[q]);
      dnorm += weights[q] * v * v;
    }
    const double beta4 = m.beta * m.beta * m.beta * m.beta;
    double omega2 = cfg.E * I * beta4 / (cfg.rho * A) +
                    cfg.sigma_res * (dnorm / cfg.L) / cfg.rho;
    if (omega2 <= 0)
      throw ConfigError("build_beam_modes: mode " + std::to_string(j) +
                        " has non-positive stiffness (residual stress "
                        "beyond buckling)");
    m.omega = std::sqrt(omega2);
    modes.push_back(m);
  }
  return modes;
}

double SqueezeMode::shape(double x, double y) const {
  return c * std::cos(kx * M_PI * x / L) * std::sin(ky * M_PI * (y + 0.5 * w) / w);
}

double SqueezeMode::laplacian(double x, double y) const {
  return -lambda2 * shape(x, y);
}

std::vector<SqueezeMode> build_squeeze_modes(const DeviceConfig& cfg) {
  cfg.validate();
  std::vector<SqueezeMode> modes;
  modes.reserve(cfg.squeeze_mode_indices.size());
  for (const auto& [kx, ky] : cfg.squeeze_mode_indices) {
    SqueezeMode m;
    m.kx = kx;
    m.ky = ky;
    m.L = cfg.L;
    m.w = cfg.w;
    const double ix = (kx == 0) ? cfg.L : 0.5 * cfg.L;  // int cos^2 over [0,L]
    const double iy = 0.5 * cfg.w;                      // int sin^2 over the width
    m.c = 1.0 / std::sqrt(ix * iy);
    const double ax = kx * M_PI / cfg.L;
    const double ay = ky * M_PI / cfg.w;
    m.lambda2 = ax * ax + ay * ay;
    modes.push_back(m);
  }
  return modes;
}

ModalBasis build_modal_basis(const DeviceConfig& cfg) {
  return ModalBasis{build_beam_modes(cfg), build_squeeze_modes(cfg)};
}

double gap(const ModalBasis& basis, const DeviceConfig& cfg, const Vector& x,
           double xi) {
  double g = cfg.G0;
  for (Index j = 0; j < x.size(); ++j) g -= x[j] * basis.beam[j].shape(xi);
  return g;
}

double gap_dx(const ModalBasis& basis, const Vector& x, double xi) {
  double d = 0;
  for (Index j = 0; j < x.size(); ++j) d -= x[j] * basis.beam[j].dshape(xi);
  return d;
}

double gap_dxx(const ModalBasis& basis, const Vector& x, double xi) {
  double d = 0;
  for (Index j = 0; j < x.size(); ++j) d -= x[j] * basis.beam[j].d2shape(xi);
  return d;
}

double laplacian_g32(const ModalBasis& basis, const DeviceConfig& cfg,
                     const Vector& x, double xi) {
  const double g = gap(basis, cfg, x, xi);
  if (g <= 0) throw ContactError(xi, 0.0, g, "laplacian_g32");
  const double gx = gap_dx(basis, x, xi);
  const double gxx = gap_dxx(basis, x, xi);
  // G varies only along the beam axis:
  // Delta G^{3/2} = (3/2) G^{1/2} G_xx + (3/4) G^{-1/2} G_x^2.
  return 1.5 * std::sqrt(g) * gxx + 0.75 * gx * gx / std::sqrt(g);
}

}  // namespace sqfilm
