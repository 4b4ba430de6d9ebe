#pragma once

#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "qfluid/energy.hpp"
#include "qfluid/solver.hpp"

namespace qfluid {

// Smallest integer order admissible for the trajectory metric (k > d/2 + 1).
inline int default_sobolev_order(int dim) { return dim / 2 + 2; }

// Pointwise building block of the trajectory metric: negative Sobolev norms
// of the density and momentum gaps plus the energy gap.
inline double state_distance(const FluidState& a, const FluidState& b,
                             int k = 0) {
  const Domain& dom = a.rho.domain();
  require_same_domain(dom, b.rho.domain(), "state_distance");
  if (k <= 0) k = default_sobolev_order(dom.dim);
  ScalarField dr(dom);
  for (std::size_t i = 0; i < dr.size(); ++i) dr[i] = a.rho[i] - b.rho[i];
  dr.set_parity(0, a.rho.parity(0));
  VectorField dj(dom);
  for (int c = 0; c < dom.dim; ++c) {
    auto d = dj.comp(c);
    auto ja = a.momentum.comp(c);
    auto jb = b.momentum.comp(c);
    for (std::size_t i = 0; i < dj.npoints(); ++i) d[i] = ja[i] - jb[i];
    dj.set_parity(c, a.momentum.parity(c));
  }
  return negative_sobolev_norm(dr, k) + negative_sobolev_norm(dj, k) +
         std::abs(a.energy - b.energy);
}

// Sup over the grid of the state distance in the weak trajectory topology:
// negative Sobolev norms of the density and momentum gaps plus the energy gap.
// Both trajectories are evaluated hold-left, so the grid must lie inside each
// sampled horizon.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b,
                                  const std::vector<double>& grid,
                                  int k = 0) {
  require(!a.empty() && !b.empty(), Err::grid_uncovered,
          "trajectory_distance: empty trajectory");
  require(!grid.empty(), Err::grid_uncovered,
          "trajectory_distance: empty time grid");
  const Domain& dom = a.samples.front().state.rho.domain();
  require_same_domain(dom, b.samples.front().state.rho.domain(),
                      "trajectory_distance");
  if (k <= 0) k = default_sobolev_order(dom.dim);

  double worst = 0.0;
  for (double t : grid) {
    for (const Trajectory* tr : {&a, &b})
      require(t <= tr->end_time() + Trajectory::time_slop, Err::grid_uncovered,
              "trajectory_distance: grid time " + std::to_string(t) +
                  " beyond sampled horizon");
    worst = std::max(worst,
                     state_distance(a.at_time(t).state, b.at_time(t).state, k));
  }
  return worst;
}

struct SweepEntry {
  double value = 0.0;
  Trajectory trajectory;
  bool failed = false;
  std::string detail;
  double viscous_work = 0.0;        // cumulative int S(grad u):grad u
  double eps_diss_pressure = 0.0;   // cumulative eps int P''|grad rho|^2
  double eps_diss_quantum = 0.0;    // cumulative (hbar/4) eps int rho|hess log rho|^2
  bool audit_passed = false;
};

struct SweepResult {
  std::string parameter;
  std::vector<double> ladder;
  std::vector<SweepEntry> entries;
  // Full symmetric distance matrix over successful entries (NaN where a
  // failed run leaves no trajectory to compare).
  std::vector<std::vector<double>> pairwise_distances;
  std::vector<double> cauchy_ratio;  // consecutive-distance ratios
  bool monotone_quantity = true;     // sweep-specific decreasing diagnostic
  std::optional<FluidState> limit_extrapolation;

  double consecutive_distance(std::size_t i) const {
    return pairwise_distances[i][i + 1];
  }
};

struct SweepConfig {
  SolverConfig solver;
  double t_final = 0.1;
  SystemKind kind = SystemKind::navier_stokes;
  int jobs = 1;
  int sobolev_order = 0;    // 0 picks the dimension default
  bool richardson = false;  // diagnostic terminal-state extrapolation
};

namespace detail {

inline void run_sweep_entries(
    SweepResult& out, const FluidState& init, const SweepConfig& cfg,
    const std::function<Trajectory(double)>& run_one) {
  const std::size_t n = out.ladder.size();
  out.entries.resize(n);
  const int jobs = std::max(1, cfg.jobs);
  for (std::size_t base = 0; base < n; base += jobs) {
    std::vector<std::future<Trajectory>> batch;
    const std::size_t hi = std::min(n, base + jobs);
    for (std::size_t i = base; i < hi; ++i)
      batch.push_back(std::async(std::launch::async, run_one, out.ladder[i]));
    for (std::size_t i = base; i < hi; ++i) {
      SweepEntry& e = out.entries[i];
      e.value = out.ladder[i];
      try {
        e.trajectory = batch[i - base].get();
        if (e.trajectory.status != RunStatus::ok) {
          e.failed = true;
          e.detail = e.trajectory.status_detail;
        }
      } catch (const Exception& ex) {
        e.failed = true;
        e.detail = ex.what();
      }
    }
  }
  (void)init;
}

inline void finish_sweep(SweepResult& out, const FluidParams& params,
                         const SweepConfig& cfg,
                         const std::function<FluidParams(double)>& params_of) {
  const std::size_t n = out.entries.size();
  for (std::size_t i = 0; i < n; ++i) {
    SweepEntry& e = out.entries[i];
    if (e.failed || e.trajectory.empty()) continue;
    const TrajectorySample& last = e.trajectory.samples.back();
    e.viscous_work = last.diss_cum;
    e.eps_diss_pressure = last.eps_diss_pressure_cum;
    e.eps_diss_quantum = last.eps_diss_quantum_cum;
    try {
      e.audit_passed = energy_report(e.trajectory, params_of(e.value)).passed;
    } catch (const Exception& ex) {
      e.audit_passed = false;
      if (e.detail.empty()) e.detail = ex.what();
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.pairwise_distances.assign(n, std::vector<double>(n, 0.0));
  std::vector<double> grid;
  for (std::size_t i = 0; i < n; ++i)
    if (!out.entries[i].failed) {
      for (const auto& s : out.entries[i].trajectory.samples)
        grid.push_back(s.state.time);
      break;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist = nan;
      if (!out.entries[i].failed && !out.entries[j].failed && !grid.empty()) {
        try {
          dist = trajectory_distance(out.entries[i].trajectory,
                                     out.entries[j].trajectory, grid,
                                     cfg.sobolev_order);
        } catch (const Exception&) {
          dist = nan;
        }
      }
      out.pairwise_distances[i][j] = dist;
      out.pairwise_distances[j][i] = dist;
    }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    double d0 = out.pairwise_distances[i][i + 1];
    double d1 = out.pairwise_distances[i + 1][i + 2];
    out.cauchy_ratio.push_back(d0 > 0.0 ? d1 / d0 : 0.0);
  }
  (void)params;

  if (cfg.richardson && n >= 2 && !out.entries[n - 1].failed &&
      !out.entries[n - 2].failed) {
    // Linear-in-parameter extrapolation of the terminal state, diagnostic only.
    const FluidState& f1 = out.entries[n - 2].trajectory.samples.back().state;
    const FluidState& f2 = out.entries[n - 1].trajectory.samples.back().state;
    double v1 = out.ladder[n - 2], v2 = out.ladder[n - 1];
    if (v1 != v2) {
      FluidState ext = f2;
      double w1 = -v2 / (v1 - v2), w2 = v1 / (v1 - v2);
      for (std::size_t i = 0; i < ext.rho.size(); ++i)
        ext.rho[i] = w1 * f1.rho[i] + w2 * f2.rho[i];
      for (int c = 0; c < ext.rho.domain().dim; ++c)
        for (std::size_t i = 0; i < ext.rho.size(); ++i)
          ext.momentum.comp(c)[i] =
              w1 * f1.momentum.comp(c)[i] + w2 * f2.momentum.comp(c)[i];
      ext.energy = w1 * f1.energy + w2 * f2.energy;
      ext.velocity_coeffs.reset();
      out.limit_extrapolation = std::move(ext);
    }
  }
}

inline void require_descending(const std::vector<double>& ladder,
                               const char* who) {
  require(!ladder.empty(), Err::validation_error,
          std::string(who) + ": empty ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    require(ladder[i] >= 0.0, Err::validation_error,
            std::string(who) + ": ladder values must be nonnegative");
    if (i > 0)
      require(ladder[i] < ladder[i - 1], Err::validation_error,
              std::string(who) + ": ladder must be strictly decreasing");
  }
}

}  // namespace detail

// Vanishing-viscosity family: each entry runs with (mu, lambda_bulk) scaled
// by delta. Records the delta-scaled viscous work, which must shrink with
// delta for the family to approach the inviscid limit.
inline SweepResult viscosity_sweep(const FluidState& init,
                                   const FluidParams& params,
                                   const std::vector<double>& ladder,
                                   const SweepConfig& cfg) {
  detail::require_descending(ladder, "viscosity_sweep");
  SweepResult out;
  out.parameter = "delta";
  out.ladder = ladder;
  auto params_of = [&](double delta) {
    FluidParams p = params;
    p.mu = delta * params.mu;
    p.lambda_bulk = delta * params.lambda_bulk;
    return p;
  };
  detail::run_sweep_entries(out, init, cfg, [&](double delta) {
    return run_simulation(init, params_of(delta), cfg.solver, cfg.t_final,
                          cfg.kind);
  });
  detail::finish_sweep(out, params, cfg, params_of);
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    if (out.entries[i].failed || out.entries[i - 1].failed) continue;
    if (out.entries[i].viscous_work >= out.entries[i - 1].viscous_work)
      out.monotone_quantity = false;
  }
  return out;
}

// Vanishing artificial-viscosity family at fixed physical viscosity; the
// epsilon dissipation channels must drain along the ladder.
inline SweepResult epsilon_sweep(const FluidState& init,
                                 const FluidParams& params,
                                 const std::vector<double>& ladder,
                                 const SweepConfig& cfg) {
  detail::require_descending(ladder, "epsilon_sweep");
  SweepResult out;
  out.parameter = "epsilon";
  out.ladder = ladder;
  auto params_of = [&](double) { return params; };
  detail::run_sweep_entries(out, init, cfg, [&](double eps) {
    SolverConfig sc = cfg.solver;
    sc.epsilon = eps;
    return run_simulation(init, params, sc, cfg.t_final, cfg.kind);
  });
  detail::finish_sweep(out, params, cfg, params_of);
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    if (out.entries[i].failed || out.entries[i - 1].failed) continue;
    double prev = out.entries[i - 1].eps_diss_pressure +
                  out.entries[i - 1].eps_diss_quantum;
    double cur =
        out.entries[i].eps_diss_pressure + out.entries[i].eps_diss_quantum;
    if (cur > prev) out.monotone_quantity = false;
  }
  return out;
}

// Galerkin refinement family over an ascending mode-count ladder.
inline SweepResult mode_sweep(const FluidState& init,
                              const FluidParams& params,
                              const std::vector<int>& ladder,
                              const SweepConfig& cfg) {
  require(!ladder.empty(), Err::validation_error, "mode_sweep: empty ladder");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    require(ladder[i] > ladder[i - 1], Err::validation_error,
            "mode_sweep: ladder must be strictly increasing");
  SweepResult out;
  out.parameter = "n";
  out.ladder.assign(ladder.begin(), ladder.end());
  auto params_of = [&](double) { return params; };
  detail::run_sweep_entries(out, init, cfg, [&](double n) {
    SolverConfig sc = cfg.solver;
    sc.n_modes = static_cast<int>(n);
    // The initial coefficients must be re-derived in the entry's own basis.
    FluidState start = init;
    start.velocity_coeffs.reset();
    return run_simulation(start, params, sc, cfg.t_final, cfg.kind);
  });
  detail::finish_sweep(out, params, cfg, params_of);
  for (std::size_t i = 0; i + 1 < out.cauchy_ratio.size(); ++i)
    if (out.cauchy_ratio[i] > 1.0) out.monotone_quantity = false;
  return out;
}

}  // namespace qfluid
