#include "sqfilm/integrator.hpp"

#include <cmath>
#include <sstream>

#include "sqfilm/errors.hpp"

namespace sqfilm {

IntegratorSettings default_settings(const RomSystem& rom) {
  IntegratorSettings s;
  s.dt = (2.0 * M_PI / rom.omega[0]) / 200.0;
  return s;
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::time_end: return "time_end";
    case Termination::pullin: return "pullin";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                   const Vector& z, const Vector& scale) {
  const Index n = z.size();
  Vector zp = z;
  Matrix jac;
  for (Index i = 0; i < n; ++i) {
    const double h =
        std::max(1e-8 * std::max(std::abs(z[i]), scale[i]), 1e-14);
    zp[i] = z[i] + h;
    const Vector fp = f(zp);
    zp[i] = z[i] - h;
    const Vector fm = f(zp);
    zp[i] = z[i];
    if (jac.size() == 0) jac.resize(fp.size(), n);
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Vector newton_solve(const std::function<Vector(const Vector&)>& residual,
                    const Vector& z0, const Vector& r_scale,
                    const Vector& z_scale, double tol, int max_iter,
                    double ref_norm) {
  Vector z = z0;
  const Vector r_inv = r_scale.cwiseInverse();
  auto scaled_norm = [&](const Vector& r) {
    return (r.cwiseProduct(r_inv)).norm();
  };

  Vector r = residual(z);
  double rnorm = scaled_norm(r);
  const double target = tol * (1.0 + ref_norm);
  std::ostringstream trace;
  trace << rnorm;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (rnorm <= target) return z;

    Matrix jac = fd_jacobian(residual, z, z_scale);
    // Row/column equilibration keeps the mixed-unit blocks comparable.
    for (Index i = 0; i < jac.rows(); ++i) jac.row(i) *= r_inv[i];
    for (Index j = 0; j < jac.cols(); ++j) jac.col(j) *= z_scale[j];
    Eigen::PartialPivLU<Matrix> lu(jac);
    const Vector step =
        -(lu.solve(r.cwiseProduct(r_inv)).cwiseProduct(z_scale));
    if (!step.allFinite())
      throw NumericsError("newton: non-finite step (trace: " + trace.str() +
                          ")");

    // Backtracking on the scaled residual norm.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 9; ++bt) {
      const Vector zc = z + alpha * step;
      Vector rc = residual(zc);
      const double rn = scaled_norm(rc);
      if (rn < (1.0 - 1e-4 * alpha) * rnorm || rn <= target) {
        z = zc;
        r = std::move(rc);
        rnorm = rn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    trace << " -> " << rnorm;
    if (!accepted)
      throw NumericsError("newton: line search stalled (trace: " +
                          trace.str() + ")");
  }
  if (rnorm <= target) return z;
  throw NumericsError("newton: no convergence in " +
                      std::to_string(max_iter) + " iterations (trace: " +
                      trace.str() + ")");
}

Vector step_full(const RomSystem& rom, const Vector& z, double V, double dt,
                 const IntegratorSettings& settings) {
  const Vector lhs_prev = ode_lhs(rom, z);
  const double ref = lhs_prev.cwiseQuotient(rom.r_scale).norm();
  auto residual = [&](const Vector& zn) {
    return (ode_lhs(rom, zn) - lhs_prev - dt * ode_rhs(rom, zn, V)).eval();
  };
  return newton_solve(residual, z, rom.r_scale, rom.z_scale,
                      settings.newton_tol, settings.newton_max_iter, ref);
}

namespace {

// One outer step with the automatic halving policy: on solver failure the
// step is split in two, recursively, up to settings.max_halvings levels.
Vector advance(const RomSystem& rom, const Stepper& step, const Vector& z,
               const std::function<double(double)>& voltage, double t0,
               double dt, int depth, const IntegratorSettings& settings) {
  try {
    return step(z, voltage(t0 + dt), dt);
  } catch (const NumericsError& e) {
    if (depth >= settings.max_halvings) throw;
    const Vector mid = advance(rom, step, z, voltage, t0, 0.5 * dt, depth + 1,
                               settings);
    return advance(rom, step, mid, voltage, t0 + 0.5 * dt, 0.5 * dt,
                   depth + 1, settings);
  }
}

}  // namespace

Trajectory run_simulation(const RomSystem& rom, const Stepper& step,
                          const std::function<double(double)>& voltage,
                          double t_end, const IntegratorSettings& settings,
                          double stop_fraction) {
  if (!(settings.dt > 0)) throw ConfigError("integrator: dt must be > 0");
  if (!(settings.kappa > 0 && settings.kappa < 1))
    throw ConfigError("integrator: kappa must be in (0, 1)");

  Trajectory traj;
  Vector z = Vector::Zero(rom.dim);
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(z);
  traj.u_mid.push_back(0.0);

  const double threshold = settings.kappa * rom.cfg.G0;
  const double stop =
      stop_fraction < 0 ? threshold : stop_fraction * rom.cfg.G0;
  while (t < t_end - 1e-15 * t_end) {
    const double dt = std::min(settings.dt, t_end - t);
    Vector znext;
    try {
      znext = advance(rom, step, z, voltage, t, dt, 0, settings);
    } catch (const ContactError&) {
      // Contact inside a step evaluation: the film closed before the
      // displacement threshold was sampled.
      traj.reason = Termination::pullin;
      traj.pullin_time = t;
      return traj;
    } catch (const NumericsError& e) {
      traj.reason = Termination::step_failure;
      traj.failure_message = e.what();
      return traj;
    }
    t += dt;
    z = std::move(znext);
    const double u = rom.midpoint_displacement(z);
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.u_mid.push_back(u);
    const double u_prev = traj.u_mid[traj.u_mid.size() - 2];
    if (!traj.pullin_time && u >= threshold) {
      const double frac = (threshold - u_prev) / (u - u_prev);
      traj.pullin_time = (t - dt) + frac * dt;
    }
    if (u >= stop) {
      traj.reason = Termination::pullin;
      return traj;
    }
  }
  traj.reason = Termination::time_end;
  return traj;
}

Trajectory simulate(const RomSystem& rom,
                    const std::function<double(double)>& voltage, double t_end,
                    const IntegratorSettings& settings) {
  Stepper step = [&rom, &settings](const Vector& z, double V, double dt) {
    return step_full(rom, z, V, dt, settings);
  };
  return run_simulation(rom, step, voltage, t_end, settings);
}

Trajectory simulate(const RomSystem& rom, double voltage, double t_end,
                    const IntegratorSettings& settings) {
  return simulate(rom, [voltage](double) { return voltage; }, t_end, settings);
}

Vector static_equilibrium(const RomSystem& rom, double V) {
  // At rest the film is at ambient pressure (s = 0) and the force balance
  // reduces to the mechanical block.
  auto residual = [&](const Vector& x) {
    return (elastic_force(rom, x) - electrostatic_force(rom, x, V)).eval();
  };
  const Vector x_scale = Vector::Constant(rom.Nm, rom.cfg.G0);
  const Vector f_scale =
      Vector::Constant(rom.Nm, rom.stiff_lin(0, 0) * rom.cfg.G0);
  try {
    const Vector x = newton_solve(residual, Vector::Zero(rom.Nm), f_scale,
                                  x_scale, 1e-12, 50, 0.0);
    Vector z = Vector::Zero(rom.dim);
    z.head(rom.Nm) = x;
    return z;
  } catch (const ContactError&) {
    // A Newton iterate closed the gap: no open-gap equilibrium, i.e. the
    // voltage exceeds the static pull-in value.
    throw NumericsError(
        "static_equilibrium: iterate reached contact; no open-gap "
        "equilibrium (voltage above static pull-in?)");
  }
}

LinearModel make_linear_model(const RomSystem& rom) {
  LinearModel m;
  const Vector z0 = Vector::Zero(rom.dim);
  m.lhs_jac = fd_jacobian(
      [&](const Vector& z) { return ode_lhs(rom, z); }, z0, rom.z_scale);
  m.rhs_jac = fd_jacobian(
      [&](const Vector& z) {
        return (ode_rhs(rom, z, 1.0) - drive_force(rom, z, 1.0)).eval();
      },
      z0, rom.z_scale);
  m.drive_gain = drive_force(rom, z0, 1.0);
  return m;
}

Vector step_linear(const RomSystem& rom, const LinearModel& model,
                   const Vector& z, double V, double dt) {
  Matrix sys = model.lhs_jac - dt * model.rhs_jac;
  Vector rhs = model.lhs_jac * z + dt * V * V * model.drive_gain;
  for (Index i = 0; i < sys.rows(); ++i) {
    sys.row(i) /= rom.r_scale[i];
    rhs[i] /= rom.r_scale[i];
  }
  for (Index j = 0; j < sys.cols(); ++j) sys.col(j) *= rom.z_scale[j];
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible())
    throw NumericsError("step_linear: singular system matrix");
  return lu.solve(rhs).cwiseProduct(rom.z_scale);
}

Trajectory simulate_linear(const RomSystem& rom, const LinearModel& model,
                           const std::function<double(double)>& voltage,
                           double t_end, const IntegratorSettings& settings) {
  Stepper step = [&rom, &model](const Vector& z, double V, double dt) {
    return step_linear(rom, model, z, V, dt);
  };
  // The linear baseline has no film stiffening to arrest it, so it is
  // integrated through the detection threshold until the gap actually
  // closes; the kappa crossing is still recorded for reporting.
  return run_simulation(rom, step, voltage, t_end, settings, 1.0);
}

std::vector<SweepRow> pullin_sweep(
    const std::vector<double>& voltages,
    const std::function<Trajectory(double)>& runner) {
  std::vector<SweepRow> rows;
  rows.reserve(voltages.size());
  for (double V : voltages) {
    SweepRow row;
    row.voltage = V;
    try {
      const Trajectory traj = runner(V);
      if (traj.reason == Termination::pullin) {
        row.pullin_time = traj.pullin_time;
        row.status = "pullin";
      } else if (traj.reason == Termination::time_end) {
        row.status = "no-pullin";
      } else {
        row.status = "failed: " + traj.failure_message;
      }
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sqfilm
