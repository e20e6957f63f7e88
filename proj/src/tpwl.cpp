#include "sqfilm/tpwl.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sqfilm/errors.hpp"

namespace sqfilm {

namespace {

// Per-coordinate distance normalization: the trajectory's amplitude
// envelope, floored at a small fraction of the coordinate's characteristic
// magnitude.  The fractional floor matters: a coordinate the drive never
// excites (e.g. an antisymmetric mode under a symmetric load) has a
// roundoff-level envelope, and normalizing by that would turn physically
// meaningless replay noise into huge distances that flatten the weights.
Vector trajectory_scales(const RomSystem& rom, const Trajectory& training) {
  Vector scales = (1e-6 * rom.z_scale).cwiseMax(1e-30);
  for (const Vector& z : training.states)
    scales = scales.cwiseMax(z.cwiseAbs());
  return scales;
}

// Indices of the trajectory samples kept as linearization points: the
// initial state plus every sample farther than delta (normalized) from all
// previously kept samples.
std::vector<size_t> select_points(const std::vector<Vector>& states,
                                  const Vector& scales, double delta) {
  std::vector<size_t> kept;
  kept.push_back(0);
  for (size_t n = 1; n < states.size(); ++n) {
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t i : kept) {
      const double d =
          ((states[n] - states[i]).cwiseQuotient(scales)).norm();
      dmin = std::min(dmin, d);
    }
    if (dmin > delta) kept.push_back(n);
  }
  return kept;
}

LinearizationPoint make_point(const RomSystem& rom, const Vector& z) {
  LinearizationPoint p;
  p.z = z;
  p.lhs = ode_lhs(rom, z);
  p.rhs = ode_rhs(rom, z, 0.0);  // drive-free part: the drive vanishes at V=0
  p.lhs_jac = fd_jacobian(
      [&](const Vector& zz) { return ode_lhs(rom, zz); }, z, rom.z_scale);
  p.rhs_jac = fd_jacobian(
      [&](const Vector& zz) { return ode_rhs(rom, zz, 0.0); }, z,
      rom.z_scale);
  return p;
}

}  // namespace

TpwlModel train_tpwl_from_trajectory(const RomSystem& rom,
                                     const Trajectory& training, double delta,
                                     double beta) {
  if (training.states.empty())
    throw ConfigError("train_tpwl: empty training trajectory");
  if (!(delta > 0)) throw ConfigError("train_tpwl: delta must be > 0");
  if (!(beta > 0)) throw ConfigError("train_tpwl: beta must be > 0");

  TpwlModel model;
  model.scales = trajectory_scales(rom, training);
  model.delta = delta;
  model.beta = beta;
  for (size_t n : select_points(training.states, model.scales, delta))
    model.points.push_back(make_point(rom, training.states[n]));
  return model;
}

TpwlModel train_tpwl(const RomSystem& rom, double training_voltage,
                     double t_end, const IntegratorSettings& settings,
                     double delta, double beta) {
  const Trajectory training = simulate(rom, training_voltage, t_end, settings);
  if (training.reason == Termination::step_failure)
    throw NumericsError("train_tpwl: training simulation failed: " +
                        training.failure_message);
  TpwlModel model = train_tpwl_from_trajectory(rom, training, delta, beta);
  model.train_voltage = training_voltage;
  model.train_dt = settings.dt;
  return model;
}

double delta_for_point_count(const RomSystem& rom, const Trajectory& training,
                             int target) {
  if (target < 1) throw ConfigError("delta_for_point_count: target < 1");
  const Vector scales = trajectory_scales(rom, training);
  auto count = [&](double d) {
    return static_cast<int>(
        select_points(training.states, scales, d).size());
  };
  double lo = 1e-6, hi = 1e3;
  if (count(lo) < target)
    throw NumericsError(
        "delta_for_point_count: trajectory has too few distinct samples for "
        "the requested point count");
  if (target == 1) return hi;
  // Geometric bisection: the kept-point count decreases as delta grows.
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const int c = count(mid);
    if (c == target) return mid;
    if (c > target)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericsError(
      "delta_for_point_count: no threshold reaches the requested count "
      "(plateau in the admission rule)");
}

Vector tpwl_distances(const TpwlModel& model, const Vector& z) {
  Vector d(model.size());
  for (int i = 0; i < model.size(); ++i)
    d[i] = ((z - model.points[i].z).cwiseQuotient(model.scales)).norm();
  return d;
}

Vector exponential_weights(const Vector& d, double beta) {
  const Index n = d.size();
  const Index closest = std::min_element(d.begin(), d.end()) - d.begin();
  Vector w = Vector::Zero(n);
  const double m = d[closest];
  if (m == 0.0) {
    w[closest] = 1.0;
    return w;
  }
  // Shift the exponent so the closest point maps to exp(0): identical after
  // normalization but immune to underflow of the common factor exp(-beta).
  for (Index i = 0; i < n; ++i) w[i] = std::exp(-beta * (d[i] - m) / m);
  return w / w.sum();
}

Vector tpwl_weights(const TpwlModel& model, const Vector& z) {
  if (model.points.empty()) throw ConfigError("tpwl_weights: empty model");
  return exponential_weights(tpwl_distances(model, z), model.beta);
}

Vector step_tpwl(const RomSystem& rom, const TpwlModel& model, const Vector& z,
                 double V, double dt) {
  const Vector w = tpwl_weights(model, z);
  Matrix lhs_bar = Matrix::Zero(rom.dim, rom.dim);
  Matrix rhs_bar = Matrix::Zero(rom.dim, rom.dim);
  Vector affine = Vector::Zero(rom.dim);
  for (int i = 0; i < model.size(); ++i) {
    if (w[i] == 0.0) continue;
    const LinearizationPoint& p = model.points[i];
    lhs_bar += w[i] * p.lhs_jac;
    rhs_bar += w[i] * p.rhs_jac;
    affine += w[i] * (p.rhs - p.rhs_jac * p.z);
  }

  // Implicit Euler on the frozen-weight affine model; the electrostatic
  // drive is the one nonlinear term and is evaluated at the step start.
  Matrix sys = lhs_bar - dt * rhs_bar;
  Vector rhs = lhs_bar * z + dt * (affine + drive_force(rom, z, V));
  for (Index i = 0; i < sys.rows(); ++i) {
    sys.row(i) /= rom.r_scale[i];
    rhs[i] /= rom.r_scale[i];
  }
  for (Index j = 0; j < sys.cols(); ++j) sys.col(j) *= rom.z_scale[j];
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible())
    throw NumericsError("step_tpwl: singular frozen-weight system matrix");
  return lu.solve(rhs).cwiseProduct(rom.z_scale);
}

Trajectory simulate_tpwl(const RomSystem& rom, const TpwlModel& model,
                         const std::function<double(double)>& voltage,
                         double t_end, const IntegratorSettings& settings) {
  Stepper step = [&rom, &model](const Vector& z, double V, double dt) {
    return step_tpwl(rom, model, z, V, dt);
  };
  return run_simulation(rom, step, voltage, t_end, settings);
}

Trajectory simulate_tpwl(const RomSystem& rom, const TpwlModel& model,
                         double voltage, double t_end,
                         const IntegratorSettings& settings) {
  return simulate_tpwl(rom, model, [voltage](double) { return voltage; },
                       t_end, settings);
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
    throw ConfigError(std::string("tpwl model file: bad size for ") + what);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = a[i].get<double>();
  return v;
}

Matrix matrix_from_json(const ordered_json& a, Index n, const char* what) {
  if (!a.is_array() || static_cast<Index>(a.size()) != n * n)
    throw ConfigError(std::string("tpwl model file: bad size for ") + what);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = a[i * n + j].get<double>();
  return m;
}

}  // namespace

void save_tpwl(const TpwlModel& model, const std::string& path) {
  ordered_json j;
  j["format"] = "tpwl-model";
  j["version"] = 1;
  j["dim"] = model.scales.size();
  j["delta"] = model.delta;
  j["beta"] = model.beta;
  j["train_voltage"] = model.train_voltage;
  j["train_dt"] = model.train_dt;
  j["scales"] = vector_to_json(model.scales);
  ordered_json pts = ordered_json::array();
  for (const LinearizationPoint& p : model.points) {
    ordered_json jp;
    jp["z"] = vector_to_json(p.z);
    jp["lhs"] = vector_to_json(p.lhs);
    jp["rhs"] = vector_to_json(p.rhs);
    jp["lhs_jac"] = matrix_to_json(p.lhs_jac);
    jp["rhs_jac"] = matrix_to_json(p.rhs_jac);
    pts.push_back(std::move(jp));
  }
  j["points"] = std::move(pts);

  std::ofstream out(path);
  if (!out) throw ConfigError("save_tpwl: cannot open " + path);
  out << j.dump(2) << "\n";
}

TpwlModel load_tpwl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_tpwl: cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("load_tpwl: parse error in " + path + ": " + e.what());
  }
  if (j.value("format", "") != std::string("tpwl-model"))
    throw ConfigError("load_tpwl: " + path + " is not a tpwl model file");

  TpwlModel model;
  const Index dim = j.at("dim").get<Index>();
  model.delta = j.at("delta").get<double>();
  model.beta = j.at("beta").get<double>();
  model.train_voltage = j.value("train_voltage", 0.0);
  model.train_dt = j.value("train_dt", 0.0);
  model.scales = vector_from_json(j.at("scales"), dim, "scales");
  if (model.scales.minCoeff() <= 0)
    throw ConfigError("load_tpwl: scales must be strictly positive");
  for (const auto& jp : j.at("points")) {
    LinearizationPoint p;
    p.z = vector_from_json(jp.at("z"), dim, "z");
    p.lhs = vector_from_json(jp.at("lhs"), dim, "lhs");
    p.rhs = vector_from_json(jp.at("rhs"), dim, "rhs");
    p.lhs_jac = matrix_from_json(jp.at("lhs_jac"), dim, "lhs_jac");
    p.rhs_jac = matrix_from_json(jp.at("rhs_jac"), dim, "rhs_jac");
    model.points.push_back(std::move(p));
  }
  if (model.points.empty())
    throw ConfigError("load_tpwl: model has no linearization points");
  return model;
}

}  // namespace sqfilm
