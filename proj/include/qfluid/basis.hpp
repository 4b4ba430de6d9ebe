#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qfluid/domain.hpp"
#include "qfluid/errors.hpp"
#include "qfluid/field.hpp"
#include "qfluid/operators.hpp"

namespace qfluid {

// One trigonometric basis mode: a scalar profile riding a single vector
// component. Periodic profiles include the mean mode so constant drifts stay
// representable (Galilean invariance); the span is nested under truncation.
struct BasisMode {
  int comp = 0;
  ScalarField profile;      // phi
  VectorField dprofile;     // grad phi
  ScalarField lap_profile;  // laplacian phi
};

namespace detail {

struct Generator {
  int k0 = 0, k1 = 0;  // integer frequencies (periodic: half-lattice; wall: >= 1)
  double kappa2 = 0.0;
};

inline std::vector<Generator> enumerate_generators(const Domain& d, int count) {
  const double twopi = 6.283185307179586476925286766559;
  std::vector<Generator> gens;
  const int K0 = d.resolution[0] / 2;
  const int K1 = d.dim == 2 ? d.resolution[1] / 2 : 0;
  if (d.bc == Bc::periodic) {
    for (int k0 = 0; k0 <= K0; ++k0)
      for (int k1 = (d.dim == 2 ? -K1 : 0); k1 <= K1; ++k1) {
        const bool in_half = k0 > 0 || (k0 == 0 && k1 >= 0);
        if (!in_half) continue;
        Generator g{k0, k1, 0.0};
        const double a0 = twopi * k0 / d.lengths[0];
        const double a1 = d.dim == 2 ? twopi * k1 / d.lengths[1] : 0.0;
        g.kappa2 = a0 * a0 + a1 * a1;
        gens.push_back(g);
      }
  } else {
    const double pi = 3.1415926535897932384626433832795;
    for (int k0 = 1; k0 <= K0; ++k0)
      for (int k1 = (d.dim == 2 ? 1 : 0); k1 <= (d.dim == 2 ? K1 : 0); ++k1) {
        Generator g{k0, k1, 0.0};
        const double a0 = pi * k0 / d.lengths[0];
        const double a1 = d.dim == 2 ? pi * k1 / d.lengths[1] : 0.0;
        g.kappa2 = a0 * a0 + a1 * a1;
        gens.push_back(g);
      }
  }
  std::sort(gens.begin(), gens.end(), [](const Generator& a, const Generator& b) {
    if (a.kappa2 != b.kappa2) return a.kappa2 < b.kappa2;
    if (a.k0 != b.k0) return a.k0 < b.k0;
    return a.k1 < b.k1;
  });
  require(static_cast<int>(gens.size()) >= count, Err::too_many_modes,
          "requested more modes than the grid supports");
  gens.resize(count);
  return gens;
}

}  // namespace detail

class GalerkinBasis {
 public:
  GalerkinBasis(const Domain& d, int n) : dom_(d), n_(n) {
    require(n >= 1, Err::too_many_modes, "basis needs at least one mode");
    // Mode-count cap n <= resolution/2 per axis; together with 2/3-rule
    // dealiasing this keeps density-weighted Gram quadratures alias-free.
    for (int a = 0; a < d.dim; ++a)
      require(n <= d.resolution[a] / 2, Err::too_many_modes,
              "mode count exceeds resolution/2 on axis " + std::to_string(a));
    const int trigs = d.bc == Bc::periodic ? 2 : 1;
    // Every generator yields at least one mode, so n generators always cover.
    auto gens = detail::enumerate_generators(d, n);
    modes_.reserve(n);
    const double twopi = 6.283185307179586476925286766559;
    const double pi = 3.1415926535897932384626433832795;
    for (const auto& g : gens) {
      for (int trig = 0; trig < trigs; ++trig) {
        // The zero generator's sine branch vanishes identically.
        if (d.bc == Bc::periodic && g.kappa2 == 0.0 && trig == 0) continue;
        for (int c = 0; c < d.dim; ++c) {
          if (static_cast<int>(modes_.size()) == n) break;
          BasisMode m;
          m.comp = c;
          m.profile = ScalarField(d);
          if (d.bc == Bc::periodic) {
            const double a0 = twopi * g.k0 / d.lengths[0];
            const double a1 = d.dim == 2 ? twopi * g.k1 / d.lengths[1] : 0.0;
            const double norm = g.kappa2 == 0.0
                                    ? std::sqrt(1.0 / d.volume())
                                    : std::sqrt(2.0 / d.volume());
            ScalarField::fill_nodal(
                d,
                [&](double x, double y) {
                  const double ph = a0 * x + a1 * y;
                  return norm * (trig == 0 ? std::sin(ph) : std::cos(ph));
                },
                m.profile.comp(0).data());
            m.profile.set_parity(0, parity_even_all);
          } else {
            const double a0 = pi * g.k0 / d.lengths[0];
            const double a1 = d.dim == 2 ? pi * g.k1 / d.lengths[1] : 0.0;
            const double norm =
                std::sqrt(std::pow(2.0, d.dim) / d.volume());
            ScalarField::fill_nodal(
                d,
                [&](double x, double y) {
                  double v = norm * std::sin(a0 * x);
                  if (d.dim == 2) v *= std::sin(a1 * y);
                  return v;
                },
                m.profile.comp(0).data());
            // Boundary nodes vanish analytically; pin them to exact zeros.
            zero_boundary(d, m.profile);
            m.profile.set_parity(0, parity_odd_all(d.dim));
          }
          m.dprofile = gradient(m.profile);
          m.lap_profile = laplacian(m.profile);
          modes_.push_back(std::move(m));
        }
      }
    }
    require(static_cast<int>(modes_.size()) == n, Err::too_many_modes,
            "could not build requested number of modes");
  }

  const Domain& domain() const { return dom_; }
  int size() const { return n_; }
  const BasisMode& mode(int i) const { return modes_[i]; }

 private:
  static void zero_boundary(const Domain& d, ScalarField& f) {
    if (d.bc != Bc::wall) return;
    if (d.dim == 1) {
      f[0] = 0.0;
      f[d.points(0) - 1] = 0.0;
      return;
    }
    for (int i = 0; i < d.points(0); ++i)
      for (int j = 0; j < d.points(1); ++j)
        if (i == 0 || j == 0 || i == d.points(0) - 1 || j == d.points(1) - 1)
          f[d.index(i, j)] = 0.0;
  }

  Domain dom_;
  int n_ = 0;
  std::vector<BasisMode> modes_;
};

inline GalerkinBasis galerkin_basis(const Domain& d, int n) {
  return GalerkinBasis(d, n);
}

inline std::vector<double> project(const VectorField& v,
                                   const GalerkinBasis& basis) {
  require_same_domain(v.domain(), basis.domain(), "project");
  std::vector<double> c(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    const auto& m = basis.mode(i);
    auto vc = v.comp(m.comp);
    auto ph = m.profile.comp(0);
    c[i] = quadrature(v.domain(),
                      [&](std::size_t k) { return vc[k] * ph[k]; });
  }
  return c;
}

inline VectorField reconstruct(const std::vector<double>& c,
                               const GalerkinBasis& basis) {
  require(static_cast<int>(c.size()) == basis.size(), Err::dimension_mismatch,
          "coefficient count disagrees with basis size");
  VectorField u(basis.domain());
  for (int i = 0; i < basis.size(); ++i) {
    const auto& m = basis.mode(i);
    auto dst = u.comp(m.comp);
    auto ph = m.profile.comp(0);
    const double ci = c[i];
    for (std::size_t k = 0; k < u.npoints(); ++k) dst[k] += ci * ph[k];
  }
  return u;
}

}  // namespace qfluid
