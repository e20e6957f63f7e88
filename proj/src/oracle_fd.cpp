#include "sqfilm/oracle_fd.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "sqfilm/errors.hpp"

namespace sqfilm {

namespace {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Deflection at the film cell centers, linearly interpolated from the beam
// nodes (the two grids are independent and generally not nested).
Vector beam_to_film(const FdConfig& cfg, const Vector& u_nodes) {
  const double dx = cfg.device.L / cfg.nx;
  const double db = cfg.device.L / (cfg.n_beam - 1);
  Vector u(cfg.nx);
  for (int i = 0; i < cfg.nx; ++i) {
    const double x = (i + 0.5) * dx;
    int k = static_cast<int>(x / db);
    k = std::min(k, cfg.n_beam - 2);
    const double theta = x / db - k;
    u[i] = (1.0 - theta) * u_nodes[k] + theta * u_nodes[k + 1];
  }
  return u;
}

// ----------------------------------------------------------------------------
// Beam: clamped-clamped Euler-Bernoulli with midplane stretching on n_beam
// equispaced nodes.  The interior deflections are the unknowns; the clamped
// conditions enter through fixed end values and mirror ghost nodes.

struct BeamOperators {
  Matrix d4;      // fourth difference on the interior nodes (ghosts folded in)
  Matrix d2;      // second difference on the interior nodes
  double step;    // node spacing
  int interior;   // number of interior nodes
};

BeamOperators build_beam_operators(const FdConfig& cfg) {
  BeamOperators ops;
  const int m = cfg.n_beam - 2;
  ops.interior = m;
  ops.step = cfg.device.L / (cfg.n_beam - 1);
  ops.d4 = Matrix::Zero(m, m);
  ops.d2 = Matrix::Zero(m, m);
  for (int r = 0; r < m; ++r) {
    // Stencil over global nodes r-1 .. r+3 (interior node r is global r+1).
    auto add4 = [&](int g, double coeff) {
      if (g <= 0 || g >= cfg.n_beam - 1) return;  // clamped ends: u = 0
      ops.d4(r, g - 1) += coeff;
    };
    add4(r - 1, 1.0);
    add4(r, -4.0);
    add4(r + 1, 6.0);
    add4(r + 2, -4.0);
    add4(r + 3, 1.0);
    // Mirror ghosts enforce u' = 0: u(-1) = u(1), u(n) = u(n-2).
    if (r == 0) ops.d4(0, 0) += 1.0;
    if (r == m - 1) ops.d4(m - 1, m - 1) += 1.0;

    ops.d2(r, r) = -2.0;
    if (r > 0) ops.d2(r, r - 1) = 1.0;
    if (r + 1 < m) ops.d2(r, r + 1) = 1.0;
  }
  return ops;
}

// Axial tension: residual stress plus the midplane-stretching term
// E h w / (2 L) * integral of (u')^2, with u' taken on the node segments.
double beam_tension(const FdConfig& cfg, const BeamOperators& ops,
                    const Vector& ui) {
  const DeviceConfig& d = cfg.device;
  double acc = 0;
  double prev = 0;  // clamped left end
  for (int k = 0; k < ops.interior; ++k) {
    const double diff = ui[k] - prev;
    acc += diff * diff;
    prev = ui[k];
  }
  acc += prev * prev;  // last segment to the clamped right end
  acc /= ops.step;
  return d.sigma_res * d.h * d.w + d.E * d.h * d.w / (2.0 * d.L) * acc;
}

Vector beam_tension_gradient(const FdConfig& cfg, const BeamOperators& ops,
                             const Vector& ui) {
  const DeviceConfig& d = cfg.device;
  const int m = ops.interior;
  Vector grad(m);
  for (int k = 0; k < m; ++k) {
    const double left = k > 0 ? ui[k - 1] : 0.0;
    const double right = k + 1 < m ? ui[k + 1] : 0.0;
    grad[k] = 2.0 * (2.0 * ui[k] - left - right) / ops.step;
  }
  return grad * (d.E * d.h * d.w / (2.0 * d.L));
}

// One implicit Euler step of the beam under the frozen film line load:
// solves for the interior deflections with an analytic-Jacobian Newton.
Vector beam_step(const FdConfig& cfg, const BeamOperators& ops,
                 const Vector& ui, const Vector& vi, double V,
                 const Vector& q_film, double dt) {
  const DeviceConfig& d = cfg.device;
  const int m = ops.interior;
  const double EI = d.E * d.w * d.h * d.h * d.h / 12.0;
  const double rhoA = d.rho * d.h * d.w;
  const double pref = 0.5 * d.eps0 * d.w * V * V;
  const double h2 = ops.step * ops.step;
  const double h4 = h2 * h2;

  auto residual = [&](const Vector& u) {
    const double T = beam_tension(cfg, ops, u);
    Vector r = rhoA / dt * ((u - ui) / dt - vi);
    r += (EI / h4) * (ops.d4 * u);
    r -= (T / h2) * (ops.d2 * u);
    for (int k = 0; k < m; ++k) {
      const double g = d.G0 - u[k];
      if (g <= 0)
        throw ContactError((k + 1) * ops.step, 0.0, g, "oracle beam step");
      r[k] -= pref / (g * g);
      r[k] -= q_film[k];
    }
    return r;
  };

  Vector u = ui;
  Vector r = residual(u);
  const double f_scale = rhoA * d.G0 / (dt * dt) + EI * d.G0 / h4;
  for (int iter = 0; iter < 50; ++iter) {
    if (r.norm() <= 1e-12 * f_scale * std::sqrt(double(m))) return u;

    const double T = beam_tension(cfg, ops, u);
    Matrix jac = (EI / h4) * ops.d4 - (T / h2) * ops.d2;
    jac.diagonal().array() += rhoA / (dt * dt);
    jac.noalias() -=
        (ops.d2 * u / h2) * beam_tension_gradient(cfg, ops, u).transpose();
    for (int k = 0; k < m; ++k) {
      const double g = d.G0 - u[k];
      jac(k, k) -= 2.0 * pref / (g * g * g);
    }

    const Vector du = Eigen::PartialPivLU<Matrix>(jac).solve(-r);
    if (!du.allFinite())
      throw NumericsError("oracle beam step: singular Newton system");

    // Backtrack on gap closure or residual growth.
    double alpha = 1.0;
    bool accepted = false;
    for (int back = 0; back < 25; ++back) {
      const Vector trial = u + alpha * du;
      if ((trial.array() < d.G0).all()) {
        Vector rt;
        try {
          rt = residual(trial);
        } catch (const ContactError&) {
          alpha *= 0.5;
          continue;
        }
        if (rt.norm() <= r.norm() || alpha * du.cwiseAbs().maxCoeff() <
                                         1e-14 * d.G0) {
          u = trial;
          r = std::move(rt);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw NumericsError("oracle beam step: line search stalled");
    if ((alpha * du).cwiseAbs().maxCoeff() < 1e-13 * d.G0) return u;
  }
  throw NumericsError("oracle beam step: no convergence in 50 iterations");
}

}  // namespace

void FdConfig::validate() const {
  device.validate();
  if (nx < 8 || ny < 8)
    throw ConfigError("oracle: film grid must be at least 8x8");
  if (n_beam < 9 || n_beam % 2 == 0)
    throw ConfigError("oracle: n_beam must be odd and at least 9");
  if (!(kappa > 0 && kappa < 1))
    throw ConfigError("oracle: kappa must be in (0, 1)");
}

Matrix fd_reynolds_step(const FdConfig& cfg, const Matrix& p, const Matrix& G,
                        const Matrix& dGdt, double dt, bool closed_y_edges) {
  cfg.validate();
  if (!(dt > 0)) throw ConfigError("oracle: dt must be > 0");
  if (p.rows() != cfg.nx || p.cols() != cfg.ny || G.rows() != cfg.nx ||
      G.cols() != cfg.ny || dGdt.rows() != cfg.nx || dGdt.cols() != cfg.ny)
    throw ConfigError("oracle: field shapes must match the configured grid");
  if (!(G.minCoeff() > 0))
    throw ConfigError("oracle: gap must be positive on the whole grid");

  const double P0 = cfg.device.P0;
  const double mu12 = 12.0 * cfg.device.mu;
  const double dx = cfg.device.L / cfg.nx;
  const double dy = cfg.device.w / cfg.ny;
  const int n = cfg.nx * cfg.ny;
  auto id = [&](int i, int j) { return i * cfg.ny + j; };

  std::vector<Triplet> trip;
  trip.reserve(5 * n);
  Vector rhs(n);

  for (int i = 0; i < cfg.nx; ++i) {
    for (int j = 0; j < cfg.ny; ++j) {
      const int self = id(i, j);
      double diag = G(i, j) / (P0 * dt) + dGdt(i, j) / P0;
      rhs[self] = G(i, j) / (P0 * dt) * p(i, j) - dGdt(i, j);

      // Interior fluxes: conservative two-point transmissibilities with the
      // face mobility averaged between the adjacent cells.
      auto couple = [&](int ni, int nj, double delta2) {
        const double gf = 0.5 * (G(i, j) + G(ni, nj));
        const double t = gf * gf * gf / (mu12 * delta2);
        diag += t;
        trip.emplace_back(self, id(ni, nj), -t);
      };
      if (i > 0) couple(i - 1, j, dx * dx);
      if (i + 1 < cfg.nx) couple(i + 1, j, dx * dx);
      if (j > 0) couple(i, j - 1, dy * dy);
      if (j + 1 < cfg.ny) couple(i, j + 1, dy * dy);

      // Vented sides: ambient pressure on the boundary face, a half-cell
      // away.  The clamped ends (and, in the sealed variant, the sides too)
      // are zero-flux and contribute nothing.
      if (!closed_y_edges && (j == 0 || j + 1 == cfg.ny)) {
        const double g = G(i, j);
        diag += g * g * g / (mu12 * 0.5 * dy * dy);
      }

      trip.emplace_back(self, self, diag);
    }
  }

  SparseMat sys(n, n);
  sys.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success)
    throw NumericsError("oracle film step: singular pressure system");
  const Vector sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite())
    throw NumericsError("oracle film step: pressure solve failed");

  Matrix out(cfg.nx, cfg.ny);
  for (int i = 0; i < cfg.nx; ++i)
    for (int j = 0; j < cfg.ny; ++j) out(i, j) = sol[id(i, j)];
  return out;
}

Vector film_line_load(const FdConfig& cfg, const Matrix& p) {
  if (p.rows() != cfg.nx || p.cols() != cfg.ny)
    throw ConfigError("oracle: field shape must match the configured grid");
  const double dx = cfg.device.L / cfg.nx;
  const double dy = cfg.device.w / cfg.ny;
  const double db = cfg.device.L / (cfg.n_beam - 1);

  // Width-integrated pressure per film column, then interpolated along the
  // beam.  Positive gauge pressure pushes the beam away from the substrate,
  // hence the sign.
  Vector col(cfg.nx);
  for (int i = 0; i < cfg.nx; ++i) col[i] = -dy * p.row(i).sum();

  Vector q(cfg.n_beam);
  for (int k = 0; k < cfg.n_beam; ++k) {
    const double x = k * db;
    const double s = x / dx - 0.5;  // cell-center coordinate
    if (s <= 0) {
      q[k] = col[0];
    } else if (s >= cfg.nx - 1) {
      q[k] = col[cfg.nx - 1];
    } else {
      const int i = static_cast<int>(s);
      const double theta = s - i;
      q[k] = (1.0 - theta) * col[i] + theta * col[i + 1];
    }
  }
  return q;
}

Trajectory fd_coupled_simulate(const FdConfig& cfg,
                               const std::function<double(double)>& voltage,
                               double t_end, const FdObserver& observe) {
  cfg.validate();
  if (!(cfg.dt > 0)) throw ConfigError("oracle: dt must be > 0");
  if (!(t_end > 0)) throw ConfigError("oracle: t_end must be > 0");

  const DeviceConfig& d = cfg.device;
  const BeamOperators ops = build_beam_operators(cfg);
  const int m = ops.interior;
  const int mid = (cfg.n_beam - 1) / 2 - 1;  // interior index of the midpoint

  Vector ui = Vector::Zero(m);
  Vector vi = Vector::Zero(m);
  Matrix p = Matrix::Zero(cfg.nx, cfg.ny);
  Vector nodes = Vector::Zero(cfg.n_beam);

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.u_mid.push_back(0.0);
  if (observe) observe(0.0, nodes, p);

  const double threshold = cfg.kappa * d.G0;
  double t = 0.0;
  while (t < t_end - 1e-15 * t_end) {
    const double dt = std::min(cfg.dt, t_end - t);
    const double V = voltage(t + dt);

    Vector u_next;
    try {
      const Vector q = film_line_load(cfg, p).segment(1, m);
      u_next = beam_step(cfg, ops, ui, vi, V, q, dt);
    } catch (const ContactError&) {
      traj.reason = Termination::pullin;
      traj.pullin_time = t;
      return traj;
    } catch (const NumericsError& e) {
      traj.reason = Termination::step_failure;
      traj.failure_message = e.what();
      return traj;
    }

    const Vector v_next = (u_next - ui) / dt;
    nodes.segment(1, m) = u_next;
    const Vector u_film = beam_to_film(cfg, nodes);
    const Vector u_film_old = beam_to_film(
        cfg, (Vector(cfg.n_beam) << 0, ui, 0).finished());
    Matrix G(cfg.nx, cfg.ny), dGdt(cfg.nx, cfg.ny);
    for (int i = 0; i < cfg.nx; ++i) {
      G.row(i).setConstant(d.G0 - u_film[i]);
      dGdt.row(i).setConstant(-(u_film[i] - u_film_old[i]) / dt);
    }
    if (!(G.minCoeff() > 0)) {
      traj.reason = Termination::pullin;
      traj.pullin_time = t;
      return traj;
    }

    try {
      p = fd_reynolds_step(cfg, p, G, dGdt, dt);
    } catch (const NumericsError& e) {
      traj.reason = Termination::step_failure;
      traj.failure_message = e.what();
      return traj;
    }

    ui = std::move(u_next);
    vi = v_next;
    t += dt;
    const double u_prev = traj.u_mid.back();
    traj.times.push_back(t);
    traj.u_mid.push_back(ui[mid]);
    if (observe) observe(t, nodes, p);

    if (!traj.pullin_time && ui[mid] >= threshold) {
      const double frac = (threshold - u_prev) / (ui[mid] - u_prev);
      traj.pullin_time = (t - dt) + frac * dt;
      traj.reason = Termination::pullin;
      return traj;
    }
  }
  traj.reason = Termination::time_end;
  return traj;
}

Trajectory fd_coupled_simulate(const FdConfig& cfg, double voltage,
                               double t_end, const FdObserver& observe) {
  return fd_coupled_simulate(
      cfg, [voltage](double) { return voltage; }, t_end, observe);
}

namespace {
constexpr char kSnapshotMagic[8] = {'S', 'Q', 'F', 'L', 'M', 'P', 'R', 'S'};
}

void save_pressure_snapshot(const Matrix& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_pressure_snapshot: cannot open " + path);
  const std::uint32_t nx = static_cast<std::uint32_t>(p.rows());
  const std::uint32_t ny = static_cast<std::uint32_t>(p.cols());
  out.write(kSnapshotMagic, 8);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(&ny), 4);
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!out) throw ConfigError("save_pressure_snapshot: write failed: " + path);
}

Matrix load_pressure_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_pressure_snapshot: cannot open " + path);
  char magic[8];
  std::uint32_t nx = 0, ny = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&nx), 4);
  in.read(reinterpret_cast<char*>(&ny), 4);
  if (!in || std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw ConfigError("load_pressure_snapshot: bad header in " + path);
  if (nx == 0 || ny == 0 || nx > (1u << 20) || ny > (1u << 20))
    throw ConfigError("load_pressure_snapshot: implausible grid in " + path);
  Matrix p(nx, ny);
  for (std::uint32_t i = 0; i < nx; ++i)
    for (std::uint32_t j = 0; j < ny; ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), 8);
      p(i, j) = v;
    }
  if (!in) throw ConfigError("load_pressure_snapshot: truncated file " + path);
  return p;
}

}  // namespace sqfilm
