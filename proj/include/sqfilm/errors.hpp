#ifndef SQFILM_ERRORS_HPP
#define SQFILM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sqfilm {

// Invalid or inconsistent user input (config files, CLI arguments).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Gap closed (G <= 0) at a concrete film location.  Callers decide whether
// this terminates a simulation (pull-in contact) or aborts an assembly.
class ContactError : public std::runtime_error {
 public:
  ContactError(double x, double y, double gap, const std::string& where)
      : std::runtime_error("contact: G = " + std::to_string(gap) + " m at (" +
                           std::to_string(x) + ", " + std::to_string(y) +
                           ") in " + where),
        x(x), y(y), gap(gap) {}
  double x;
  double y;
  double gap;
};

// Solver breakdown: Newton divergence, singular linear system, non-finite
// values.  Distinct from ConfigError so the CLI can map exit codes.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sqfilm

#endif  // SQFILM_ERRORS_HPP
