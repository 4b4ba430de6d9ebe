#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qfluid/errors.hpp"

namespace qfluid {

enum class Bc { periodic, wall };

inline const char* to_string(Bc bc) { return bc == Bc::periodic ? "periodic" : "wall"; }

// Uniform tensor-product grid on a box. Periodic axes carry N nodes x_j = j*h
// (node at L identified with 0); wall axes carry N+1 nodes including both
// boundary points. Wall fields are differentiated on the even/odd extension
// onto the doubled periodic grid, so the transform length along a wall axis
// is 2N.
struct Domain {
  int dim = 1;
  std::array<double, 2> lengths{0.0, 0.0};
  std::array<int, 2> resolution{0, 0};
  Bc bc = Bc::periodic;

  int points(int axis) const {
    return bc == Bc::periodic ? resolution[axis] : resolution[axis] + 1;
  }
  std::size_t npoints() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points(a));
    return n;
  }
  double h(int axis) const { return lengths[axis] / resolution[axis]; }
  double coord(int axis, int j) const { return j * h(axis); }
  int transform_size(int axis) const {
    return bc == Bc::periodic ? resolution[axis] : 2 * resolution[axis];
  }
  double transform_length(int axis) const {
    return bc == Bc::periodic ? lengths[axis] : 2.0 * lengths[axis];
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= lengths[a];
    return v;
  }
  double min_h() const {
    double m = h(0);
    for (int a = 1; a < dim; ++a) m = std::min(m, h(a));
    return m;
  }

  // Row-major linear index, axis 0 slowest.
  std::size_t index(int i0, int i1 = 0) const {
    return dim == 1 ? static_cast<std::size_t>(i0)
                    : static_cast<std::size_t>(i0) * points(1) + i1;
  }

  bool operator==(const Domain&) const = default;
};

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline Domain make_domain(int dim, const std::vector<double>& lengths,
                          const std::vector<int>& resolution, Bc bc) {
  require(dim == 1 || dim == 2, Err::bad_resolution,
          "dim must be 1 or 2, got " + std::to_string(dim));
  require(static_cast<int>(lengths.size()) == dim &&
              static_cast<int>(resolution.size()) == dim,
          Err::bad_resolution, "lengths/resolution size must equal dim");
  Domain d;
  d.dim = dim;
  d.bc = bc;
  for (int a = 0; a < dim; ++a) {
    require(lengths[a] > 0.0, Err::bad_resolution,
            "axis length must be positive");
    require(is_pow2(resolution[a]) && resolution[a] >= 8, Err::bad_resolution,
            "resolution must be a power of two >= 8, got " +
                std::to_string(resolution[a]));
    d.lengths[a] = lengths[a];
    d.resolution[a] = resolution[a];
  }
  return d;
}

inline void require_same_domain(const Domain& a, const Domain& b,
                                const char* where) {
  require(a == b, Err::domain_mismatch,
          std::string(where) + ": fields live on different domains");
}

}  // namespace qfluid
