#pragma once

#include <cmath>
#include <string>

#include "qfluid/errors.hpp"
#include "qfluid/field.hpp"
#include "qfluid/operators.hpp"

namespace qfluid {

enum class SystemKind { navier_stokes, euler };

inline const char* to_string(SystemKind k) {
  return k == SystemKind::navier_stokes ? "navier_stokes" : "euler";
}

struct FluidParams {
  int dim = 1;
  double a = 1.0;            // pressure coefficient, > 0
  double gamma = 2.0;        // adiabatic exponent, > 1
  double mu = 0.0;           // shear viscosity, >= 0
  double lambda_bulk = 0.0;  // bulk viscosity, >= 0
  double hbar = 1.0;         // quantum scale, > 0
};

inline void validate_params(const FluidParams& p) {
  require(p.dim >= 1 && p.dim <= 3, Err::validation_error, "dim must be 1..3");
  require(p.a > 0.0, Err::validation_error, "pressure coefficient a must be > 0");
  require(p.gamma > 1.0, Err::validation_error, "gamma must exceed 1");
  require(p.mu >= 0.0 && p.lambda_bulk >= 0.0, Err::validation_error,
          "viscosities must be nonnegative");
  require(p.hbar > 0.0, Err::validation_error, "hbar must be > 0");
}

inline void require_positive(const ScalarField& rho, const char* where) {
  require(rho.min() > 0.0, Err::non_positive_density,
          std::string(where) + ": density min " + std::to_string(rho.min()));
}

// Pointwise constitutive values. P solves rho*P' - P = p with p = a*rho^gamma.
inline double pressure_value(double r, const FluidParams& p) {
  return p.a * std::pow(r, p.gamma);
}
inline double pressure_potential_value(double r, const FluidParams& p) {
  return p.a / (p.gamma - 1.0) * std::pow(r, p.gamma);
}
inline double pressure_potential_prime(double r, const FluidParams& p) {
  return p.a * p.gamma / (p.gamma - 1.0) * std::pow(r, p.gamma - 1.0);
}
inline double pressure_potential_dd(double r, const FluidParams& p) {
  return p.a * p.gamma * std::pow(r, p.gamma - 2.0);
}

inline ScalarField pressure(const ScalarField& rho, const FluidParams& p) {
  require_positive(rho, "pressure");
  ScalarField out(rho.domain());
  for (std::size_t i = 0; i < rho.npoints(); ++i)
    out[i] = pressure_value(rho[i], p);
  out.set_parity(0, rho.parity(0));
  return out;
}

inline ScalarField pressure_potential(const ScalarField& rho,
                                      const FluidParams& p) {
  require(std::abs(p.gamma - 1.0) >= 1e-12, Err::gamma_one,
          "pressure potential undefined at gamma = 1");
  require_positive(rho, "pressure_potential");
  ScalarField out(rho.domain());
  for (std::size_t i = 0; i < rho.npoints(); ++i)
    out[i] = pressure_potential_value(rho[i], p);
  out.set_parity(0, rho.parity(0));
  return out;
}

// Newtonian stress from a velocity Jacobian. For d >= 2 this is the traceless
// shear part plus bulk dilation:
//   S = mu*(G + G^T - (2/d) tr(G) I) + lambda_bulk * tr(G) I.
// In d = 1 that shear part vanishes identically, so the one-dimensional
// surrogate uses the longitudinal form S = (2*mu + lambda_bulk) * u_x, which
// keeps mu meaningful in 1-D runs.
inline TensorField viscous_stress(const TensorField& gradu,
                                  const FluidParams& p) {
  const Domain& d = gradu.domain();
  require(d.dim == p.dim, Err::dimension_mismatch,
          "viscous_stress: params dim disagrees with field dim");
  TensorField s(d);
  const int dim = d.dim;
  if (dim == 1) {
    auto g = gradu.entry(0, 0);
    auto dst = s.entry(0, 0);
    const double coef = 2.0 * p.mu + p.lambda_bulk;
    for (std::size_t i = 0; i < d.npoints(); ++i) dst[i] = coef * g[i];
    s.set_parity(0, gradu.parity(0));
    return s;
  }
  const double devc = 2.0 / dim;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      auto gab = gradu.entry(a, b);
      auto gba = gradu.entry(b, a);
      auto dst = s.entry(a, b);
      if (a == b) {
        auto g00 = gradu.entry(0, 0);
        auto g11 = gradu.entry(1, 1);
        for (std::size_t i = 0; i < d.npoints(); ++i) {
          const double div = g00[i] + g11[i];
          dst[i] = p.mu * (2.0 * gab[i] - devc * div) + p.lambda_bulk * div;
        }
      } else {
        for (std::size_t i = 0; i < d.npoints(); ++i)
          dst[i] = p.mu * (gab[i] + gba[i]);
      }
      std::vector<ParityMask> masks{gradu.parity(a * dim + b),
                                    gradu.parity(b * dim + a)};
      s.set_parity(a * dim + b, detail::merge_parity(masks, parity_even_all));
    }
  return s;
}

// (hbar/2) * laplacian(sqrt(rho)) / sqrt(rho). Rejects unresolved densities:
// the division amplifies spectral tails, so the tail must be negligible first.
inline ScalarField bohm_potential(const ScalarField& rho, const FluidParams& p,
                                  double tail_tol = 1e-8) {
  require_positive(rho, "bohm_potential");
  require_resolved(rho, tail_tol, "bohm_potential");
  ScalarField s(rho.domain());
  for (std::size_t i = 0; i < rho.npoints(); ++i) s[i] = std::sqrt(rho[i]);
  s.set_parity(0, rho.parity(0));
  ScalarField lap = laplacian(s);
  ScalarField out(rho.domain());
  for (std::size_t i = 0; i < rho.npoints(); ++i)
    out[i] = 0.5 * p.hbar * lap[i] / s[i];
  out.set_parity(0, rho.parity(0));
  return out;
}

// K = (hbar/4) * (hessian(rho) - 4 grad(sqrt rho) (x) grad(sqrt rho)).
inline TensorField korteweg_tensor(const ScalarField& rho,
                                   const FluidParams& p) {
  require_positive(rho, "korteweg_tensor");
  const Domain& d = rho.domain();
  ScalarField s(d);
  for (std::size_t i = 0; i < rho.npoints(); ++i) s[i] = std::sqrt(rho[i]);
  s.set_parity(0, rho.parity(0));
  TensorField hess = hessian(rho);
  VectorField gs = gradient(s);
  TensorField out(d);
  const double c = 0.25 * p.hbar;
  for (int a = 0; a < d.dim; ++a)
    for (int b = 0; b < d.dim; ++b) {
      auto dst = out.entry(a, b);
      auto hab = hess.entry(a, b);
      auto ga = gs.comp(a);
      auto gb = gs.comp(b);
      for (std::size_t i = 0; i < d.npoints(); ++i)
        dst[i] = c * (hab[i] - 4.0 * ga[i] * gb[i]);
      out.set_parity(a * d.dim + b, hess.parity(a * d.dim + b));
    }
  return out;
}

// v = grad(sqrt rho)/sqrt(rho); cross-checked each call against the
// equivalent (1/2) grad(log rho), which degrades first when rho is
// under-resolved.
inline VectorField drift_velocity(const ScalarField& rho) {
  require_positive(rho, "drift_velocity");
  const Domain& d = rho.domain();
  ScalarField s(d), lg(d);
  for (std::size_t i = 0; i < rho.npoints(); ++i) {
    s[i] = std::sqrt(rho[i]);
    lg[i] = std::log(rho[i]);
  }
  s.set_parity(0, rho.parity(0));
  lg.set_parity(0, rho.parity(0));
  VectorField gs = gradient(s);
  VectorField gl = gradient(lg);
  VectorField out(d);
  double maxdiff = 0.0, maxv = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    auto dst = out.comp(a);
    auto num = gs.comp(a);
    auto gla = gl.comp(a);
    for (std::size_t i = 0; i < rho.npoints(); ++i) {
      const double v1 = num[i] / s[i];
      const double v2 = 0.5 * gla[i];
      dst[i] = v1;
      maxdiff = std::max(maxdiff, std::abs(v1 - v2));
      maxv = std::max(maxv, std::abs(v1));
    }
    out.set_parity(a, gs.parity(a));
  }
  require(maxdiff <= 1e-10 * std::max(1.0, maxv), Err::unresolved_field,
          "drift_velocity: sqrt and log forms disagree by " +
              std::to_string(maxdiff));
  return out;
}

// Equivalent form (hbar/2) * rho * grad(drift velocity); kept alongside the
// Hessian form so the two can audit each other.
inline TensorField korteweg_tensor_drift_form(const ScalarField& rho,
                                              const FluidParams& p) {
  TensorField gv = grad_vec(drift_velocity(rho));
  TensorField out(rho.domain());
  const Domain& d = rho.domain();
  for (int c = 0; c < gv.components(); ++c) {
    auto dst = out.comp(c);
    auto src = gv.comp(c);
    for (std::size_t i = 0; i < d.npoints(); ++i)
      dst[i] = 0.5 * p.hbar * rho[i] * src[i];
    out.set_parity(c, gv.parity(c));
  }
  return out;
}

}  // namespace qfluid
