#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qfluid/operators.hpp"
#include "qfluid/physics.hpp"
#include "qfluid/state.hpp"

namespace qfluid {

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double quantum = 0.0;
  double total() const { return kinetic + potential + quantum; }
};

namespace detail {

inline ScalarField sqrt_field(const ScalarField& rho) {
  ScalarField s(rho.domain());
  for (std::size_t i = 0; i < rho.size(); ++i) s[i] = std::sqrt(rho[i]);
  return s;
}

inline double quantum_part(const ScalarField& rho, const FluidParams& p) {
  ScalarField s = sqrt_field(rho);
  VectorField gs = gradient(s);
  const Domain& d = rho.domain();
  double acc = quadrature(d, [&](std::size_t i) {
    double q = 0.0;
    for (int c = 0; c < d.dim; ++c) q += gs.comp(c)[i] * gs.comp(c)[i];
    return q;
  });
  return 0.5 * p.hbar * acc;
}

inline double potential_part(const ScalarField& rho, const FluidParams& p) {
  return quadrature(rho.domain(), [&](std::size_t i) {
    return pressure_potential_value(rho[i], p);
  });
}

}  // namespace detail

inline EnergyBreakdown energy_breakdown(const ScalarField& rho,
                                        const VectorField& u,
                                        const FluidParams& p) {
  require_positive(rho, "energy_breakdown");
  require_same_domain(rho.domain(), u.domain(), "energy_breakdown");
  const Domain& d = rho.domain();
  EnergyBreakdown b;
  b.kinetic = 0.5 * quadrature(d, [&](std::size_t i) {
    double k = 0.0;
    for (int c = 0; c < d.dim; ++c) k += u.comp(c)[i] * u.comp(c)[i];
    return rho[i] * k;
  });
  b.potential = detail::potential_part(rho, p);
  b.quantum = detail::quantum_part(rho, p);
  return b;
}

// Momentum-based form 1/2 |J|^2 / rho; the natural one for Euler states and
// for audits of trajectories that carry no velocity coefficients.
inline EnergyBreakdown energy_breakdown_momentum(const ScalarField& rho,
                                                 const VectorField& J,
                                                 const FluidParams& p) {
  require_positive(rho, "energy_breakdown_momentum");
  require_same_domain(rho.domain(), J.domain(), "energy_breakdown_momentum");
  const Domain& d = rho.domain();
  EnergyBreakdown b;
  b.kinetic = 0.5 * quadrature(d, [&](std::size_t i) {
    double k = 0.0;
    for (int c = 0; c < d.dim; ++c) k += J.comp(c)[i] * J.comp(c)[i];
    return k / rho[i];
  });
  b.potential = detail::potential_part(rho, p);
  b.quantum = detail::quantum_part(rho, p);
  return b;
}

inline double total_energy(const ScalarField& rho, const VectorField& u,
                           const FluidParams& p) {
  return energy_breakdown(rho, u, p).total();
}

// Viscous dissipation rate int S(grad u) : grad u. Nonnegative for
// mu, lambda_bulk >= 0 in the d-adjusted form.
inline double dissipation_rate(const VectorField& u, const FluidParams& p) {
  if (p.mu == 0.0 && p.lambda_bulk == 0.0) return 0.0;
  TensorField g = grad_vec(u);
  TensorField s = viscous_stress(g, p);
  const Domain& d = u.domain();
  const int n = d.dim * d.dim;
  return quadrature(d, [&](std::size_t i) {
    double acc = 0.0;
    for (int c = 0; c < n; ++c) acc += s.comp(c)[i] * g.comp(c)[i];
    return acc;
  });
}

struct EpsilonDissipationParts {
  double pressure = 0.0;  // eps * int P''(rho) |grad rho|^2
  double quantum = 0.0;   // (hbar/4) eps * int rho |hess log rho|^2
  double total() const { return pressure + quantum; }
};

inline EpsilonDissipationParts epsilon_dissipation_parts(
    const ScalarField& rho, const FluidParams& p, double epsilon) {
  EpsilonDissipationParts out;
  if (epsilon == 0.0) return out;
  require_positive(rho, "epsilon_dissipation_parts");
  const Domain& d = rho.domain();
  VectorField gr = gradient(rho);
  out.pressure = epsilon * quadrature(d, [&](std::size_t i) {
    double g2 = 0.0;
    for (int c = 0; c < d.dim; ++c) g2 += gr.comp(c)[i] * gr.comp(c)[i];
    return pressure_potential_dd(rho[i], p) * g2;
  });
  ScalarField lr(d);
  for (std::size_t i = 0; i < rho.size(); ++i) lr[i] = std::log(rho[i]);
  lr.set_parity(0, rho.parity(0));
  TensorField h = hessian(lr);
  const int n = d.dim * d.dim;
  out.quantum = 0.25 * p.hbar * epsilon * quadrature(d, [&](std::size_t i) {
    double f = 0.0;
    for (int c = 0; c < n; ++c) f += h.comp(c)[i] * h.comp(c)[i];
    return rho[i] * f;
  });
  return out;
}

inline double epsilon_dissipation_rate(const ScalarField& rho,
                                       const FluidParams& p, double epsilon) {
  return epsilon_dissipation_parts(rho, p, epsilon).total();
}

// Relative residual of the integration-by-parts identity
//   int (lap rho / rho - |grad rho|^2 / (2 rho^2)) lap rho
//     = int rho |hess log rho|^2
// on a periodic domain. Vanishes analytically; the numerical residual decays
// spectrally with resolution for smooth positive densities.
inline double log_hessian_identity_residual(const ScalarField& rho) {
  require(rho.domain().bc == Bc::periodic, Err::validation_error,
          "log-Hessian identity check requires a periodic domain");
  require_positive(rho, "log_hessian_identity_residual");
  const Domain& d = rho.domain();
  ScalarField lap = laplacian(rho);
  VectorField gr = gradient(rho);
  double lhs = quadrature(d, [&](std::size_t i) {
    double g2 = 0.0;
    for (int c = 0; c < d.dim; ++c) g2 += gr.comp(c)[i] * gr.comp(c)[i];
    double r = rho[i];
    return (lap[i] / r - g2 / (2.0 * r * r)) * lap[i];
  });
  ScalarField lr(d);
  for (std::size_t i = 0; i < rho.size(); ++i) lr[i] = std::log(rho[i]);
  lr.set_parity(0, rho.parity(0));
  TensorField h = hessian(lr);
  const int n = d.dim * d.dim;
  double rhs = quadrature(d, [&](std::size_t i) {
    double f = 0.0;
    for (int c = 0; c < n; ++c) f += h.comp(c)[i] * h.comp(c)[i];
    return rho[i] * f;
  });
  double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return std::abs(lhs - rhs) / scale;
}

inline double defect_lambda(const FluidParams& p) {
  return std::max(p.dim * (p.gamma - 1.0), 2.0);
}

struct EnergyAuditConfig {
  double dt = 0.0;     // scheme step; 0 means take it from trajectory meta
  double c_tol = -1.0; // budget constant; negative means default 10 * E(0-)
};

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> kinetic;
  std::vector<double> potential;
  std::vector<double> quantum;
  std::vector<double> diss_cum;
  std::vector<double> eps_diss_cum;
  std::vector<double> eps_diss_pressure_cum;
  std::vector<double> eps_diss_quantum_cum;
  std::vector<double> slack;
  std::vector<double> defect_proxy;
  std::vector<double> tol_budget;
  double e0 = 0.0;
  double lambda_defect = 0.0;
  double c_tol = 0.0;
  double dt = 0.0;
  bool passed = true;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
};

// Energy ledger for a sampled trajectory:
//   slack(t) = E(0-) - E(t) - D(t) - D_eps(t),
// which must stay above -tol_budget(t) with tol_budget = c_tol * dt^2 * t.
// The surplus max(0, slack) is reported as the measure-defect proxy.
inline EnergyReport energy_report(const Trajectory& traj,
                                  const FluidParams& params,
                                  const EnergyAuditConfig& cfg = {}) {
  require(!traj.samples.empty(), Err::window_empty, "energy_report: no samples");
  const std::size_t n = traj.samples.size();
  EnergyReport rep;
  rep.e0 = traj.e0;
  rep.lambda_defect = defect_lambda(params);
  rep.dt = cfg.dt > 0.0 ? cfg.dt : traj.meta.dt;
  rep.c_tol = cfg.c_tol >= 0.0 ? cfg.c_tol : 10.0 * std::abs(traj.e0);

  if (traj.meta.dt > 0.0) {
    for (std::size_t i = 1; i < n; ++i) {
      double gap = traj.samples[i].state.time - traj.samples[i - 1].state.time;
      require(gap <= 10.0 * traj.meta.dt * (1.0 + 1e-9), Err::validation_error,
              "energy_report: sampling coarser than 10 steps");
    }
  }

  rep.times.reserve(n);
  const double t0 = traj.samples.front().state.time;
  bool have_cums = traj.meta.has_dissipation_cums;
  double int_diss = 0.0, int_eps_p = 0.0, int_eps_q = 0.0;
  double prev_rate_d = 0.0, prev_rate_p = 0.0, prev_rate_q = 0.0, prev_t = t0;

  for (std::size_t i = 0; i < n; ++i) {
    const TrajectorySample& s = traj.samples[i];
    const ScalarField& rho = s.state.rho;
    VectorField u(rho.domain());
    for (int c = 0; c < rho.domain().dim; ++c) {
      auto uc = u.comp(c);
      auto jc = s.state.momentum.comp(c);
      for (std::size_t k = 0; k < rho.size(); ++k) uc[k] = jc[k] / rho[k];
    }
    EnergyBreakdown b = energy_breakdown(rho, u, params);
    rep.times.push_back(s.state.time);
    rep.energy.push_back(s.state.energy);
    rep.kinetic.push_back(b.kinetic);
    rep.potential.push_back(b.potential);
    rep.quantum.push_back(b.quantum);

    if (have_cums) {
      rep.diss_cum.push_back(s.diss_cum);
      rep.eps_diss_pressure_cum.push_back(s.eps_diss_pressure_cum);
      rep.eps_diss_quantum_cum.push_back(s.eps_diss_quantum_cum);
      rep.eps_diss_cum.push_back(s.eps_diss_cum());
    } else {
      // Synthetic trajectory: trapezoid re-integration of the rates.
      double rate_d = dissipation_rate(u, params);
      EpsilonDissipationParts ep =
          epsilon_dissipation_parts(rho, params, traj.meta.epsilon);
      if (i > 0) {
        double h = s.state.time - prev_t;
        int_diss += 0.5 * h * (rate_d + prev_rate_d);
        int_eps_p += 0.5 * h * (ep.pressure + prev_rate_p);
        int_eps_q += 0.5 * h * (ep.quantum + prev_rate_q);
      }
      prev_rate_d = rate_d;
      prev_rate_p = ep.pressure;
      prev_rate_q = ep.quantum;
      prev_t = s.state.time;
      rep.diss_cum.push_back(int_diss);
      rep.eps_diss_pressure_cum.push_back(int_eps_p);
      rep.eps_diss_quantum_cum.push_back(int_eps_q);
      rep.eps_diss_cum.push_back(int_eps_p + int_eps_q);
    }

    double tau = s.state.time - t0;
    double budget = rep.c_tol * rep.dt * rep.dt * tau;
    double slack = traj.e0 - s.state.energy - rep.diss_cum.back() -
                   rep.eps_diss_cum.back();
    rep.tol_budget.push_back(budget);
    rep.slack.push_back(slack);
    rep.defect_proxy.push_back(std::max(0.0, slack));
    if (slack < -budget && rep.passed) {
      rep.passed = false;
      rep.first_violation_time = s.state.time;
    }
  }
  return rep;
}

inline void require_energy_audit(const EnergyReport& rep) {
  if (!rep.passed)
    fail(Err::audit_failed,
         "energy audit failed at t = " + std::to_string(rep.first_violation_time));
}

struct DefectCheckResult {
  bool passed = true;
  double lambda = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;     // per shared sample
  std::vector<double> defects;  // defect_proxy / lambda
};

// For a coarse/fine report pair sharing sample times: the trace of the defect
// measure is controlled by lambda times the energy gap, so the proxy must obey
// defect_proxy / lambda <= gap + atol where
// gap = |E_c - E_f| + |D_c - D_f| at each shared time.
inline DefectCheckResult defect_trace_bound_check(const EnergyReport& coarse,
                                                  const EnergyReport& fine,
                                                  const FluidParams& params,
                                                  double atol = 1e-10) {
  DefectCheckResult out;
  out.lambda = defect_lambda(params);
  std::size_t j = 0;
  for (std::size_t i = 0; i < coarse.times.size(); ++i) {
    while (j + 1 < fine.times.size() &&
           fine.times[j] < coarse.times[i] - 1e-12)
      ++j;
    if (std::abs(fine.times[j] - coarse.times[i]) > 1e-9) continue;
    double gap = std::abs(coarse.energy[i] - fine.energy[j]) +
                 std::abs((coarse.diss_cum[i] + coarse.eps_diss_cum[i]) -
                          (fine.diss_cum[j] + fine.eps_diss_cum[j]));
    double defect = coarse.defect_proxy[i] / out.lambda;
    out.gaps.push_back(gap);
    out.defects.push_back(defect);
    double margin = gap + atol - defect;
    out.worst_margin = std::min(out.worst_margin, margin);
    if (margin < 0.0) out.passed = false;
  }
  require(!out.gaps.empty(), Err::window_empty,
          "defect_trace_bound_check: no shared sample times");
  return out;
}

}  // namespace qfluid
