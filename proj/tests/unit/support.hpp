#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include "nsflab/grid.hpp"

namespace nsflab::testing {

using Profile = std::function<double(double, double)>;

inline Primitives make_primitives(const Grid& g, const Profile& rho, const Profile& theta,
                                  const Profile& ux, const Profile& uy = [](double, double) { return 0.0; }) {
  Primitives p = Primitives::zeros(g);
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double x = g.center(0, i);
      const double y = g.dim == 2 ? g.center(1, j) : 0.0;
      p.rho.at(i, j) = rho(x, y);
      p.theta.at(i, j) = theta(x, y);
      p.u[0].at(i, j) = ux(x, y);
      p.u[1].at(i, j) = g.dim == 2 ? uy(x, y) : 0.0;
    }
  }
  p.fill_ghosts();
  return p;
}

/// Reference with the same fields and vanishing time derivatives.
inline ReferenceFields as_reference(const Primitives& p, double t = 0.0) {
  ReferenceFields r;
  r.grid = p.grid;
  r.rho = p.rho;
  r.theta = p.theta;
  r.u = p.u;
  r.rho_t = Field(p.grid);
  r.theta_t = Field(p.grid);
  r.u_t = {Field(p.grid), Field(p.grid)};
  r.time = t;
  r.fill_ghosts();
  return r;
}

inline double l2_error(const Field& f, const Profile& exact) {
  const Grid& g = f.grid();
  double s = 0.0;
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double y = g.dim == 2 ? g.center(1, j) : 0.0;
      const double d = f(i, j) - exact(g.center(0, i), y);
      s += d * d * g.cell_volume();
    }
  }
  return std::sqrt(s);
}

}  // namespace nsflab::testing
