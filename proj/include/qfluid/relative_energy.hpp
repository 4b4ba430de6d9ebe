#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "qfluid/operators.hpp"
#include "qfluid/physics.hpp"
#include "qfluid/state.hpp"

namespace qfluid {

struct RelativeEnergyValue {
  double kinetic_gap = 0.0;   // 1/2 int rho |u - ref_u|^2
  double pressure_gap = 0.0;  // Bregman divergence of the pressure potential
  double quantum_gap = 0.0;   // (hbar/2) int rho |v - ref_v|^2, drift velocity
  double total() const { return kinetic_gap + pressure_gap + quantum_gap; }
};

// Distance-like functional between a state and a smooth reference. Each part
// is a nonnegative form; the whole vanishes exactly at equality.
inline RelativeEnergyValue relative_energy(const ScalarField& rho,
                                           const VectorField& u,
                                           const ScalarField& ref_rho,
                                           const VectorField& ref_u,
                                           const FluidParams& p) {
  require_positive(rho, "relative_energy");
  require_positive(ref_rho, "relative_energy reference");
  require_same_domain(rho.domain(), ref_rho.domain(), "relative_energy");
  require_same_domain(u.domain(), ref_u.domain(), "relative_energy");
  const Domain& d = rho.domain();

  RelativeEnergyValue out;
  out.kinetic_gap = 0.5 * quadrature(d, [&](std::size_t i) {
    double k = 0.0;
    for (int c = 0; c < d.dim; ++c) {
      double w = u.comp(c)[i] - ref_u.comp(c)[i];
      k += w * w;
    }
    return rho[i] * k;
  });
  out.pressure_gap = quadrature(d, [&](std::size_t i) {
    return pressure_potential_value(rho[i], p) -
           pressure_potential_prime(ref_rho[i], p) * (rho[i] - ref_rho[i]) -
           pressure_potential_value(ref_rho[i], p);
  });
  VectorField v = drift_velocity(rho);
  VectorField rv = drift_velocity(ref_rho);
  out.quantum_gap = 0.5 * p.hbar * quadrature(d, [&](std::size_t i) {
    double q = 0.0;
    for (int c = 0; c < d.dim; ++c) {
      double w = v.comp(c)[i] - rv.comp(c)[i];
      q += w * w;
    }
    return rho[i] * q;
  });
  return out;
}

inline RelativeEnergyValue relative_energy(const FluidState& state,
                                           const ScalarField& ref_rho,
                                           const VectorField& ref_u,
                                           const FluidParams& p) {
  const Domain& d = state.rho.domain();
  VectorField u(d);
  for (int c = 0; c < d.dim; ++c) {
    auto uc = u.comp(c);
    auto jc = state.momentum.comp(c);
    for (std::size_t i = 0; i < state.rho.size(); ++i)
      uc[i] = jc[i] / state.rho[i];
  }
  return relative_energy(state.rho, u, ref_rho, ref_u, p);
}

enum class ManufacturedKind { constant, isothermal_drift };

inline const char* to_string(ManufacturedKind k) {
  switch (k) {
    case ManufacturedKind::constant: return "constant";
    case ManufacturedKind::isothermal_drift: return "isothermal-drift";
  }
  return "unknown";
}

// Time-parameterized exact solutions used as comparison references. Both
// families are stationary fields; the drift family solves the periodic
// problem by Galilean invariance and is rejected on wall domains.
struct ManufacturedSolution {
  ManufacturedKind kind = ManufacturedKind::constant;
  Domain domain;
  double rho_bar = 1.0;
  std::array<double, 2> drift{0.0, 0.0};

  ScalarField density(double) const {
    ScalarField r(domain);
    double v = rho_bar;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = v;
    return r;
  }
  VectorField velocity(double) const {
    VectorField u(domain);
    if (kind == ManufacturedKind::isothermal_drift) {
      for (int c = 0; c < domain.dim; ++c) {
        auto uc = u.comp(c);
        for (std::size_t i = 0; i < u.npoints(); ++i) uc[i] = drift[c];
      }
    }
    return u;
  }
};

inline ManufacturedSolution manufactured_strong_solution(
    ManufacturedKind kind, const Domain& domain, double rho_bar = 1.0,
    std::array<double, 2> drift = {0.0, 0.0}) {
  require(rho_bar > 0.0, Err::non_positive_density,
          "manufactured reference needs a positive density");
  if (kind == ManufacturedKind::isothermal_drift)
    require(domain.bc == Bc::periodic, Err::unsupported_kind,
            "isothermal-drift reference needs a periodic domain");
  ManufacturedSolution s;
  s.kind = kind;
  s.domain = domain;
  s.rho_bar = rho_bar;
  if (kind == ManufacturedKind::isothermal_drift) s.drift = drift;
  return s;
}

struct WeakStrongConfig {
  double atol = 1e-10;  // floor below which rel_energy counts as zero
  double l_max = 10.0;  // growth-rate ceiling for same-initial-data runs
  double t_begin = -std::numeric_limits<double>::infinity();
  double t_end = std::numeric_limits<double>::infinity();
};

struct RelativeEnergyReport {
  std::vector<double> times;
  std::vector<double> rel_energy;
  std::vector<double> kinetic_gap;
  std::vector<double> pressure_gap;
  std::vector<double> quantum_gap;
  double gronwall_C = 0.0;
  double gronwall_L = 0.0;
  bool passed = true;
};

// Gronwall-envelope comparison against a manufactured reference: fits the
// smallest L >= 0 with rel_energy(t) <= (rel_energy(t0)+atol) e^{L (t-t0)}
// over the window. Samples at or below 10*atol are treated as exact zeros and
// impose no constraint. Runs started on the reference must additionally stay
// under atol*e^{l_max (t-t0)}.
inline RelativeEnergyReport weak_strong_compare(
    const Trajectory& traj, const ManufacturedSolution& ref,
    const FluidParams& params, const WeakStrongConfig& cfg = {}) {
  RelativeEnergyReport rep;
  for (const TrajectorySample& s : traj.samples) {
    double t = s.state.time;
    if (t < cfg.t_begin - Trajectory::time_slop ||
        t > cfg.t_end + Trajectory::time_slop)
      continue;
    RelativeEnergyValue v =
        relative_energy(s.state, ref.density(t), ref.velocity(t), params);
    rep.times.push_back(t);
    rep.rel_energy.push_back(v.total());
    rep.kinetic_gap.push_back(v.kinetic_gap);
    rep.pressure_gap.push_back(v.pressure_gap);
    rep.quantum_gap.push_back(v.quantum_gap);
  }
  require(!rep.times.empty(), Err::window_empty,
          "weak_strong_compare: no samples in the fit window");

  const double t0 = rep.times.front();
  const double re0 = rep.rel_energy.front();
  rep.gronwall_C = re0 + cfg.atol;
  double l = 0.0;
  for (std::size_t i = 1; i < rep.times.size(); ++i) {
    double dt = rep.times[i] - t0;
    if (dt <= 0.0 || rep.rel_energy[i] <= 10.0 * cfg.atol) continue;
    l = std::max(l, std::log(rep.rel_energy[i] / rep.gronwall_C) / dt);
  }
  rep.gronwall_L = l;

  rep.passed = std::isfinite(rep.gronwall_L);
  if (re0 <= cfg.atol) {
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      double bound = cfg.atol * std::exp(cfg.l_max * (rep.times[i] - t0));
      if (rep.rel_energy[i] > bound) {
        rep.passed = false;
        break;
      }
    }
  }
  return rep;
}

}  // namespace qfluid
