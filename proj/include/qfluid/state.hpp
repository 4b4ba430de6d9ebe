#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qfluid/errors.hpp"
#include "qfluid/field.hpp"

namespace qfluid {

struct FluidState {
  double time = 0.0;
  ScalarField rho;
  VectorField momentum;  // J = rho * u
  std::optional<std::vector<double>> velocity_coeffs;
  double energy = 0.0;  // cached total energy
};

enum class RunStatus { ok, positivity_lost, fixed_point_diverged, cfl_violation };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::positivity_lost: return "positivity_lost";
    case RunStatus::fixed_point_diverged: return "fixed_point_diverged";
    case RunStatus::cfl_violation: return "cfl_violation";
  }
  return "unknown";
}

struct TrajectorySample {
  FluidState state;
  // Cumulative dissipation integrals accumulated by the producing solver with
  // its own time quadrature; audits prefer these over re-integrating sparse
  // snapshots, which would add sampling error the dt^2 budget cannot absorb.
  double diss_cum = 0.0;
  double eps_diss_pressure_cum = 0.0;
  double eps_diss_quantum_cum = 0.0;
  double eps_diss_cum() const {
    return eps_diss_pressure_cum + eps_diss_quantum_cum;
  }
};

struct TrajectoryMeta {
  std::string config_hash;  // empty for synthetic trajectories
  std::string system = "navier_stokes";
  double dt = 0.0;
  double epsilon = 0.0;
  int n_modes = 0;
  double mu = 0.0;
  double lambda_bulk = 0.0;
  bool has_dissipation_cums = false;
};

// Sampled trajectory with the left-continuous (hold-left) evaluation
// convention: the value at t is the latest sample at or before t.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  double e0 = 0.0;  // initial right-limit energy datum E(0-)
  TrajectoryMeta meta;
  RunStatus status = RunStatus::ok;
  std::string status_detail;

  static constexpr double time_slop = 1e-9;

  bool empty() const { return samples.empty(); }
  double start_time() const { return samples.front().state.time; }
  double end_time() const { return samples.back().state.time; }

  std::size_t index_at(double t) const {
    require(!samples.empty(), Err::grid_uncovered, "empty trajectory");
    require(t >= start_time() - time_slop, Err::grid_uncovered,
            "time " + std::to_string(t) + " precedes first sample");
    std::size_t lo = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].state.time <= t + time_slop) lo = i;
      else break;
    }
    return lo;
  }
  const TrajectorySample& at_time(double t) const { return samples[index_at(t)]; }
};

}  // namespace qfluid
