#include "sqfilm/device_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sqfilm/errors.hpp"

namespace sqfilm {

void DeviceConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("device config: " + msg);
  };
  require(L > 0, "L must be > 0");
  require(w > 0, "w must be > 0");
  require(h > 0, "h must be > 0");
  require(G0 > 0, "G0 must be > 0");
  require(E > 0, "E must be > 0");
  require(rho > 0, "rho must be > 0");
  require(mu > 0, "mu must be > 0");
  require(P0 > 0, "P0 must be > 0");
  require(eps0 > 0, "eps0 must be > 0");
  // Thin-film regime: the Reynolds equation assumes lateral dimensions
  // large compared to the gap.
  require(G0 < 0.1 * L && G0 < 0.1 * w, "thin-film regime requires G0 << L and G0 << w");
  require(Nm >= 1, "Nm must be >= 1");
  require(!squeeze_mode_indices.empty(), "squeeze_mode_indices must be non-empty");
  std::set<std::pair<int, int>> seen;
  for (const auto& [kx, ky] : squeeze_mode_indices) {
    require(kx >= 0, "squeeze mode k_x must be >= 0");
    require(ky >= 1, "squeeze mode k_y must be >= 1");
    require(seen.insert({kx, ky}).second, "duplicate squeeze mode index");
  }
}

DeviceConfig default_device() {
  DeviceConfig cfg;
  cfg.L = 610e-6;
  cfg.w = 58e-6;
  cfg.h = 2.2e-6;
  cfg.G0 = 1.31e-6;
  cfg.E = 149e9;
  cfg.rho = 2330.0;
  cfg.sigma_res = -3.7e6;
  cfg.mu = 1.82e-5;
  cfg.P0 = 1.013e5;
  cfg.eps0 = 8.854187817e-12;
  cfg.Nm = 3;
  cfg.squeeze_mode_indices = {{0, 1}, {0, 3}, {2, 1}, {2, 3}};
  cfg.validate();
  return cfg;
}

DeviceConfig load_device_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }

  DeviceConfig cfg;
  auto get = [&](const char* key) -> double {
    if (!j.contains(key)) throw ConfigError("config missing key: " + std::string(key));
    if (!j[key].is_number()) throw ConfigError("config key is not a number: " + std::string(key));
    return j[key].get<double>();
  };
  cfg.L = get("L");
  cfg.w = get("w");
  cfg.h = get("h");
  cfg.G0 = get("G0");
  cfg.E = get("E");
  cfg.rho = get("rho");
  cfg.mu = get("mu");
  cfg.P0 = get("P0");
  cfg.sigma_res = j.contains("sigma_res") ? get("sigma_res") : 0.0;
  if (j.contains("eps0")) cfg.eps0 = get("eps0");
  if (!j.contains("Nm") || !j["Nm"].is_number_integer())
    throw ConfigError("config missing integer key: Nm");
  cfg.Nm = j["Nm"].get<int>();
  if (!j.contains("squeeze_mode_indices") || !j["squeeze_mode_indices"].is_array())
    throw ConfigError("config missing array key: squeeze_mode_indices");
  for (const auto& pair : j["squeeze_mode_indices"]) {
    if (!pair.is_array() || pair.size() != 2)
      throw ConfigError("squeeze_mode_indices entries must be [k_x, k_y] pairs");
    cfg.squeeze_mode_indices.emplace_back(pair[0].get<int>(), pair[1].get<int>());
  }
  cfg.validate();
  return cfg;
}

std::string device_config_to_json(const DeviceConfig& cfg) {
  nlohmann::ordered_json j;
  j["L"] = cfg.L;
  j["w"] = cfg.w;
  j["h"] = cfg.h;
  j["G0"] = cfg.G0;
  j["E"] = cfg.E;
  j["rho"] = cfg.rho;
  j["sigma_res"] = cfg.sigma_res;
  j["mu"] = cfg.mu;
  j["P0"] = cfg.P0;
  j["eps0"] = cfg.eps0;
  j["Nm"] = cfg.Nm;
  auto modes = nlohmann::ordered_json::array();
  for (const auto& [kx, ky] : cfg.squeeze_mode_indices)
    modes.push_back({kx, ky});
  j["squeeze_mode_indices"] = modes;
  return j.dump(2);
}

}  // namespace sqfilm
