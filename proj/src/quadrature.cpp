#include "sqfilm/quadrature.hpp"

#include <cmath>
#include <string>

#include "sqfilm/errors.hpp"

namespace sqfilm {

// Newton iteration on the Legendre polynomial P_n, seeded with the Chebyshev
// approximation of the k-th root.  Nodes come out symmetric to round-off.
void gauss_legendre(int n, double a, double b, Vector& nodes, Vector& weights) {
  if (n < 1) throw NumericsError("gauss_legendre: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int k = 0; k < m; ++k) {
    double t = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(t) and P_n'(t) by the three-term recurrence.
      double p0 = 1.0, p1 = t;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    nodes[k] = mid - half * t;
    nodes[n - 1 - k] = mid + half * t;
    double wgt = 2.0 * half / ((1.0 - t * t) * pp * pp);
    weights[k] = wgt;
    weights[n - 1 - k] = wgt;
  }
  if (n % 2 == 1) nodes[n / 2] = mid;  // center node exactly at the midpoint
}

QuadratureGrid make_quadrature_grid(int n_x, int n_y, double L, double w) {
  QuadratureGrid grid;
  gauss_legendre(n_x, 0.0, L, grid.x, grid.wx);
  gauss_legendre(n_y, -0.5 * w, 0.5 * w, grid.y, grid.wy);
  return grid;
}

double integrate(const QuadratureGrid& grid,
                 const std::function<double(double, double)>& f) {
  double total = 0.0;
  for (Index i = 0; i < grid.nx(); ++i) {
    double row = 0.0;
    for (Index j = 0; j < grid.ny(); ++j) {
      const double v = f(grid.x[i], grid.y[j]);
      if (!std::isfinite(v))
        throw NumericsError("integrate: non-finite integrand at node (" +
                            std::to_string(grid.x[i]) + ", " +
                            std::to_string(grid.y[j]) + ")");
      row += grid.wy[j] * v;
    }
    total += grid.wx[i] * row;
  }
  return total;
}

}  // namespace sqfilm
