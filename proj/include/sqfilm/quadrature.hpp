#ifndef SQFILM_QUADRATURE_HPP
#define SQFILM_QUADRATURE_HPP

#include <functional>

#include "sqfilm/types.hpp"

namespace sqfilm {

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, Vector& nodes, Vector& weights);

// Tensor Gauss-Legendre rule over the film domain [0, L] x [-w/2, w/2].
struct QuadratureGrid {
  Vector x;   // n_x nodes along the beam
  Vector y;   // n_y nodes across the width
  Vector wx;  // n_x weights
  Vector wy;  // n_y weights

  Index nx() const { return x.size(); }
  Index ny() const { return y.size(); }
};

QuadratureGrid make_quadrature_grid(int n_x, int n_y, double L, double w);

// Tensor sum of f(x, y) over the grid.  Throws NumericsError naming the
// node if the integrand is non-finite there.
double integrate(const QuadratureGrid& grid,
                 const std::function<double(double, double)>& f);

}  // namespace sqfilm

#endif  // SQFILM_QUADRATURE_HPP
