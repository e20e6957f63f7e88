#ifndef SQFILM_DEVICE_CONFIG_HPP
#define SQFILM_DEVICE_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

namespace sqfilm {

// Geometry, material, fluid and ambient parameters of the microswitch.
// SI units throughout.
struct DeviceConfig {
  double L = 0;          // beam length (m)
  double w = 0;          // beam width (m)
  double h = 0;          // beam thickness (m)
  double G0 = 0;         // nominal gap (m)
  double E = 0;          // Young's modulus (Pa)
  double rho = 0;        // density (kg/m^3)
  double sigma_res = 0;  // residual axial stress (Pa), may be 0 or negative
  double mu = 0;         // effective fluid viscosity (Pa s)
  double P0 = 0;         // ambient pressure (Pa)
  double eps0 = 8.854187817e-12;  // vacuum permittivity (F/m)
  int Nm = 0;            // number of mechanical modes
  std::vector<std::pair<int, int>> squeeze_mode_indices;  // (k_x, k_y) pairs

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// Clamped-clamped polysilicon microswitch, the default experiment device.
DeviceConfig default_device();

// Reads a DeviceConfig from a JSON file; keys match the field names.
// sigma_res and eps0 are optional, everything else is required.
DeviceConfig load_device_config(const std::string& path);

// Serializes to the same JSON schema load_device_config reads.
std::string device_config_to_json(const DeviceConfig& cfg);

}  // namespace sqfilm

#endif  // SQFILM_DEVICE_CONFIG_HPP
