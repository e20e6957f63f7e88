#include "sqfilm/pwl_mech.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sqfilm/errors.hpp"
#include "sqfilm/tpwl.hpp"

namespace sqfilm {

MechCoeffs assemble_mech_coeffs(const RomSystem& rom, const Vector& x) {
  const int Nm = rom.Nm, Ms = rom.Ms;
  MechCoeffs c;
  c.AG = Matrix::Zero(rom.dim, rom.dim);
  c.AG.topLeftCorner(Nm, Nm).setIdentity();
  c.AG.block(Nm, Nm, Nm, Nm) = rom.mass * Matrix::Identity(Nm, Nm);
  c.AG.bottomRightCorner(Ms, Ms) = film_mass_matrix(rom, x);

  c.FP = Vector::Zero(rom.dim);
  c.FP.tail(Ms) = film_source_vector(rom, x);

  c.BB = Matrix::Zero(rom.dim, rom.dim);
  c.BB.block(0, Nm, Nm, Nm).setIdentity();
  c.BB.block(Nm, 0, Nm, Nm) = -stiffness_matrix(rom, x);
  c.BB.block(Nm, 2 * Nm, Nm, Ms) = film_coupling_matrix(rom, x);
  c.BB.bottomRightCorner(Ms, Ms) = film_flow_matrix(rom, x);

  c.PE = Vector::Zero(rom.dim);
  c.PE.segment(Nm, Nm) = electrostatic_force(rom, x, 1.0);
  return c;
}

double mech_grid_contact_limit(const RomSystem& rom) {
  if (!(rom.psi_mid[0] > 0))
    throw ConfigError(
        "mech_grid_contact_limit: dominant mode has non-positive midpoint "
        "value");
  return rom.cfg.G0 / rom.psi_mid[0];
}

namespace {

MechCoeffs coeffs_scaled(const MechCoeffs& a, double f) {
  return {f * a.AG, f * a.FP, f * a.BB, f * a.PE};
}

void coeffs_add_scaled(MechCoeffs& out, const MechCoeffs& a, double f) {
  out.AG += f * a.AG;
  out.FP += f * a.FP;
  out.BB += f * a.BB;
  out.PE += f * a.PE;
}

}  // namespace

MechGridModel build_grid_model(const RomSystem& rom, int n_points,
                               double x1_min, double x1_max, double beta) {
  if (n_points < 2)
    throw ConfigError("build_grid_model: n_points must be >= 2");
  if (!(beta > 0)) throw ConfigError("build_grid_model: beta must be > 0");
  if (!(x1_max > x1_min))
    throw ConfigError("build_grid_model: empty x1 range");

  const double xc = mech_grid_contact_limit(rom);
  const double h = 1e-5 * xc;  // derivative probe step
  if (!(x1_max + 2.0 * h < xc))
    throw ConfigError(
        "build_grid_model: x1 range reaches the contact gap (the grid must "
        "stay strictly below G0 / psi_1(L/2))");

  MechGridModel model;
  model.beta = beta;
  model.x_scale =
      std::max(std::max(std::abs(x1_min), std::abs(x1_max)), 1e-30);
  model.points.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    MechGridPoint p;
    p.x1 = x1_min + (x1_max - x1_min) * i / (n_points - 1.0);
    Vector x = Vector::Zero(rom.Nm);
    x[0] = p.x1;
    p.c = assemble_mech_coeffs(rom, x);
    p.dc.reserve(rom.Nm);
    for (int k = 0; k < rom.Nm; ++k) {
      Vector xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      MechCoeffs d = assemble_mech_coeffs(rom, xp);
      coeffs_add_scaled(d, assemble_mech_coeffs(rom, xm), -1.0);
      p.dc.push_back(coeffs_scaled(d, 1.0 / (2.0 * h)));
    }
    model.points.push_back(std::move(p));
  }
  return model;
}

MechGridModel build_grid_model(const RomSystem& rom, int n_points,
                               double beta) {
  return build_grid_model(rom, n_points, 0.0,
                          0.9 * mech_grid_contact_limit(rom), beta);
}

Vector mech_grid_weights(const MechGridModel& model, double x1) {
  if (model.points.empty())
    throw ConfigError("mech_grid_weights: empty model");
  Vector d(model.size());
  for (int i = 0; i < model.size(); ++i)
    d[i] = std::abs(x1 - model.points[i].x1) / model.x_scale;
  return exponential_weights(d, model.beta);
}

MechCoeffs mech_grid_coeffs(const MechGridModel& model, const Vector& x) {
  const Vector w = mech_grid_weights(model, x[0]);
  for (int i = 0; i < model.size(); ++i) {
    // Exact node hit with no off-grid components: return the cache as is.
    if (w[i] == 1.0 && x[0] == model.points[i].x1 &&
        (x.size() == 1 || x.tail(x.size() - 1).isZero(0.0)))
      return model.points[i].c;
  }

  const Index dim = model.points[0].c.AG.rows();
  MechCoeffs out;
  out.AG = Matrix::Zero(dim, dim);
  out.FP = Vector::Zero(dim);
  out.BB = Matrix::Zero(dim, dim);
  out.PE = Vector::Zero(dim);
  for (int i = 0; i < model.size(); ++i) {
    if (w[i] == 0.0) continue;
    const MechGridPoint& p = model.points[i];
    coeffs_add_scaled(out, p.c, w[i]);
    for (size_t k = 0; k < p.dc.size(); ++k) {
      const double dxk =
          (k == 0 ? x[0] - p.x1 : x[static_cast<Index>(k)]);
      if (dxk != 0.0) coeffs_add_scaled(out, p.dc[k], w[i] * dxk);
    }
  }
  return out;
}

namespace {

// Frozen-coefficient implicit Euler solve: one linear system with the
// blended operators held at the step start.  Used as a predictor when the
// fully implicit Newton cannot reach the root from the previous state.
Vector frozen_coeff_step(const RomSystem& rom, const MechCoeffs& c,
                         const Vector& z, double V2, double dt) {
  Matrix sys = c.AG - dt * c.BB;
  Vector rhs = c.AG * z + dt * V2 * c.PE;
  for (Index i = 0; i < sys.rows(); ++i) {
    sys.row(i) /= rom.r_scale[i];
    rhs[i] /= rom.r_scale[i];
  }
  for (Index j = 0; j < sys.cols(); ++j) sys.col(j) *= rom.z_scale[j];
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible())
    throw NumericsError("step_pwl_mech: singular predictor system");
  return lu.solve(rhs).cwiseProduct(rom.z_scale);
}

}  // namespace

Vector step_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                     const Vector& z, double V, double dt,
                     const IntegratorSettings& settings) {
  const MechCoeffs c0 = mech_grid_coeffs(model, rom.mech(z));
  const Vector g_prev = c0.AG * z - c0.FP;
  const double ref = g_prev.cwiseQuotient(rom.r_scale).norm();
  const double V2 = V * V;
  auto residual = [&](const Vector& zn) {
    const MechCoeffs c = mech_grid_coeffs(model, zn.head(rom.Nm));
    return (c.AG * zn - c.FP - g_prev - dt * (c.BB * zn + V2 * c.PE)).eval();
  };
  try {
    return newton_solve(residual, z, rom.r_scale, rom.z_scale,
                        settings.newton_tol, settings.newton_max_iter, ref);
  } catch (const NumericsError&) {
    // Large steps can put the implicit root several grid cells away, out of
    // reach of Newton started at the previous state.  Retry from the
    // frozen-coefficient solution, which lands near the root's cell.
    const Vector guess = frozen_coeff_step(rom, c0, z, V2, dt);
    if (!guess.allFinite()) throw;
    return newton_solve(residual, guess, rom.r_scale, rom.z_scale,
                        settings.newton_tol, settings.newton_max_iter, ref);
  }
}

Trajectory simulate_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                             const std::function<double(double)>& voltage,
                             double t_end,
                             const IntegratorSettings& settings) {
  Stepper step = [&rom, &model, &settings](const Vector& z, double V,
                                           double dt) {
    return step_pwl_mech(rom, model, z, V, dt, settings);
  };
  return run_simulation(rom, step, voltage, t_end, settings);
}

Trajectory simulate_pwl_mech(const RomSystem& rom, const MechGridModel& model,
                             double voltage, double t_end,
                             const IntegratorSettings& settings) {
  return simulate_pwl_mech(rom, model, [voltage](double) { return voltage; },
                           t_end, settings);
}

MechGridReport mech_grid_error_report(const RomSystem& rom,
                                      const Trajectory& full,
                                      const MechGridModel& model, double V,
                                      const IntegratorSettings& settings,
                                      double t_end) {
  MechGridReport rep;
  rep.n_points = model.size();
  const Trajectory pwl = simulate_pwl_mech(rom, model, V, t_end, settings);
  if (!(full.pullin_time && pwl.pullin_time)) {
    rep.comparable = false;
    rep.disp_err_pct = std::numeric_limits<double>::quiet_NaN();
    rep.pullin_err_pct = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.comparable = true;
  const size_t n = std::min(full.u_mid.size(), pwl.u_mid.size());
  double emax = 0.0;
  for (size_t i = 0; i < n; ++i)
    emax = std::max(emax, std::abs(pwl.u_mid[i] - full.u_mid[i]));
  rep.disp_err_pct = 100.0 * emax / rom.cfg.G0;
  rep.pullin_err_pct =
      100.0 * std::abs(*pwl.pullin_time - *full.pullin_time) /
      *full.pullin_time;
  return rep;
}

MechGridReport mech_grid_error_report(const RomSystem& rom,
                                      const MechGridModel& model, double V,
                                      const IntegratorSettings& settings,
                                      double t_end) {
  const Trajectory full = simulate(rom, V, t_end, settings);
  return mech_grid_error_report(rom, full, model, V, settings, t_end);
}

std::string mech_grid_report_header() {
  return "n_points,disp_err_pct,pullin_err_pct";
}

std::string mech_grid_report_row(const MechGridReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g", report.n_points,
                report.disp_err_pct, report.pullin_err_pct);
  return buf;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vector_to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

Vector vector_from_json(const ordered_json& a, Index n, const char* what) {
  if (!a.is_array() || static_cast<Index>(a.size()) != n)
    throw ConfigError(std::string("mech grid model file: bad size for ") +
                      what);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = a[i].get<double>();
  return v;
}

Matrix matrix_from_json(const ordered_json& a, Index n, const char* what) {
  if (!a.is_array() || static_cast<Index>(a.size()) != n * n)
    throw ConfigError(std::string("mech grid model file: bad size for ") +
                      what);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = a[i * n + j].get<double>();
  return m;
}

ordered_json coeffs_to_json(const MechCoeffs& c) {
  ordered_json j;
  j["AG"] = matrix_to_json(c.AG);
  j["FP"] = vector_to_json(c.FP);
  j["BB"] = matrix_to_json(c.BB);
  j["PE"] = vector_to_json(c.PE);
  return j;
}

MechCoeffs coeffs_from_json(const ordered_json& j, Index dim) {
  MechCoeffs c;
  c.AG = matrix_from_json(j.at("AG"), dim, "AG");
  c.FP = vector_from_json(j.at("FP"), dim, "FP");
  c.BB = matrix_from_json(j.at("BB"), dim, "BB");
  c.PE = vector_from_json(j.at("PE"), dim, "PE");
  return c;
}

}  // namespace

void save_mech_grid(const MechGridModel& model, const std::string& path) {
  ordered_json j;
  j["format"] = "mech-grid-model";
  j["version"] = 1;
  j["dim"] = model.points.empty() ? 0 : model.points[0].c.AG.rows();
  j["n_mech"] = model.points.empty()
                    ? 0
                    : static_cast<int>(model.points[0].dc.size());
  j["beta"] = model.beta;
  j["x_scale"] = model.x_scale;
  ordered_json pts = ordered_json::array();
  for (const MechGridPoint& p : model.points) {
    ordered_json jp;
    jp["x1"] = p.x1;
    jp["c"] = coeffs_to_json(p.c);
    ordered_json dc = ordered_json::array();
    for (const MechCoeffs& d : p.dc) dc.push_back(coeffs_to_json(d));
    jp["dc"] = std::move(dc);
    pts.push_back(std::move(jp));
  }
  j["points"] = std::move(pts);

  std::ofstream out(path);
  if (!out) throw ConfigError("save_mech_grid: cannot open " + path);
  out << j.dump(2) << "\n";
}

MechGridModel load_mech_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_mech_grid: cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("load_mech_grid: parse error in " + path + ": " +
                      e.what());
  }
  if (j.value("format", "") != std::string("mech-grid-model"))
    throw ConfigError("load_mech_grid: " + path +
                      " is not a mech grid model file");

  MechGridModel model;
  const Index dim = j.at("dim").get<Index>();
  const int n_mech = j.at("n_mech").get<int>();
  model.beta = j.at("beta").get<double>();
  model.x_scale = j.at("x_scale").get<double>();
  if (!(model.x_scale > 0))
    throw ConfigError("load_mech_grid: x_scale must be strictly positive");
  for (const auto& jp : j.at("points")) {
    MechGridPoint p;
    p.x1 = jp.at("x1").get<double>();
    p.c = coeffs_from_json(jp.at("c"), dim);
    const auto& dc = jp.at("dc");
    if (!dc.is_array() || static_cast<int>(dc.size()) != n_mech)
      throw ConfigError("load_mech_grid: bad derivative list length");
    for (const auto& jd : dc) p.dc.push_back(coeffs_from_json(jd, dim));
    model.points.push_back(std::move(p));
  }
  if (model.size() < 2)
    throw ConfigError("load_mech_grid: model needs at least two grid points");
  for (int i = 0; i < model.size(); ++i)
    for (int k = i + 1; k < model.size(); ++k)
      if (model.points[i].x1 == model.points[k].x1)
        throw ConfigError("load_mech_grid: duplicate grid coordinates");
  return model;
}

}  // namespace sqfilm
