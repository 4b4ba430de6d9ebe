#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qfluid/limits.hpp"

namespace qfluid {

// Time shift of a sampled trajectory: sample times move to t - T, the
// hold-left state at the cut becomes the new time-zero sample, and the
// initial energy budget becomes the left limit E(T-). Stored samples are
// taken as the left piece at their own time, so the left limit at a sample
// time is the sample itself. Dissipation cumulants are rebased to zero at
// the cut so energy audits of the tail remain self-consistent.
inline Trajectory shift(const Trajectory& traj, double T) {
  require(!traj.empty(), Err::horizon_exceeded, "shift: empty trajectory");
  require(T >= -Trajectory::time_slop, Err::horizon_exceeded,
          "shift: negative offset " + std::to_string(T));
  require(T <= traj.end_time() - traj.start_time() + Trajectory::time_slop,
          Err::horizon_exceeded,
          "shift: offset " + std::to_string(T) + " beyond sampled horizon");
  if (T == 0.0) return traj;

  const double t_cut = traj.start_time() + T;
  const std::size_t cut = traj.index_at(t_cut);
  const TrajectorySample& base = traj.samples[cut];

  Trajectory out;
  out.meta = traj.meta;
  out.status = traj.status;
  out.status_detail = traj.status_detail;
  out.e0 = base.state.energy;

  TrajectorySample seed = base;
  seed.state.time = 0.0;
  seed.diss_cum = 0.0;
  seed.eps_diss_pressure_cum = 0.0;
  seed.eps_diss_quantum_cum = 0.0;
  out.samples.push_back(std::move(seed));

  for (std::size_t i = cut + 1; i < traj.samples.size(); ++i) {
    TrajectorySample m = traj.samples[i];
    m.state.time -= t_cut;
    m.diss_cum -= base.diss_cum;
    m.eps_diss_pressure_cum -= base.eps_diss_pressure_cum;
    m.eps_diss_quantum_cum -= base.eps_diss_quantum_cum;
    out.samples.push_back(std::move(m));
  }
  return out;
}

// Glue `right` onto `left` at time T. The seam sample belongs to the left
// piece; the right piece must start from the left piece's hold-left state
// there. The density and momentum fields must match within glue_tol in the
// state-distance sense, while the energy is allowed to jump downward: the
// right budget may not exceed the left limit E(T-) by more than glue_tol.
inline Trajectory concatenate(const Trajectory& left, const Trajectory& right,
                              double T, double glue_tol = 1e-9) {
  require(!left.empty() && !right.empty(), Err::seam_mismatch,
          "concatenate: empty piece");
  if (T == 0.0) return right;
  require(T >= -Trajectory::time_slop, Err::horizon_exceeded,
          "concatenate: negative seam time");
  require(T <= left.end_time() - left.start_time() + Trajectory::time_slop,
          Err::horizon_exceeded,
          "concatenate: seam time " + std::to_string(T) +
              " beyond the left horizon");

  const double t_cut = left.start_time() + T;
  const std::size_t cut = left.index_at(t_cut);
  const TrajectorySample& seam_l = left.samples[cut];
  const TrajectorySample& seam_r = right.samples.front();

  FluidState probe = seam_r.state;
  probe.energy = seam_l.state.energy;  // energy jumps are legal at the seam
  const double gap = state_distance(seam_l.state, probe);
  require(gap <= glue_tol, Err::seam_mismatch,
          "concatenate: seam field gap " + std::to_string(gap) +
              " exceeds tolerance " + std::to_string(glue_tol));
  require(right.e0 <= seam_l.state.energy + glue_tol, Err::seam_mismatch,
          "concatenate: right budget " + std::to_string(right.e0) +
              " exceeds the left limit " +
              std::to_string(seam_l.state.energy));

  Trajectory out;
  out.e0 = left.e0;
  out.meta = left.meta;
  out.status = right.status;
  out.status_detail = right.status_detail;
  out.samples.assign(left.samples.begin(), left.samples.begin() + cut + 1);

  const double r0 = right.start_time();
  for (std::size_t i = 1; i < right.samples.size(); ++i) {
    TrajectorySample m = right.samples[i];
    m.state.time = t_cut + (m.state.time - r0);
    m.diss_cum = seam_l.diss_cum + (m.diss_cum - seam_r.diss_cum);
    m.eps_diss_pressure_cum =
        seam_l.eps_diss_pressure_cum +
        (m.eps_diss_pressure_cum - seam_r.eps_diss_pressure_cum);
    m.eps_diss_quantum_cum =
        seam_l.eps_diss_quantum_cum +
        (m.eps_diss_quantum_cum - seam_r.eps_diss_quantum_cum);
    out.samples.push_back(std::move(m));
  }
  return out;
}

// Scalar observables a selection functional can discount.
enum class Observable { energy, mass_weighted_energy, momentum_norm };

inline const char* to_string(Observable o) {
  switch (o) {
    case Observable::energy: return "energy";
    case Observable::mass_weighted_energy: return "mass-weighted-energy";
    case Observable::momentum_norm: return "momentum-norm";
  }
  return "?";
}

inline Observable parse_observable(const std::string& name) {
  if (name == "energy") return Observable::energy;
  if (name == "mass-weighted-energy") return Observable::mass_weighted_energy;
  if (name == "momentum-norm") return Observable::momentum_norm;
  throw Exception(Err::validation_error,
                  "unknown selection observable \"" + name + "\"");
}

struct SelectionFunctional {
  double rate = 1.0;  // exponential discount rate, must be positive
  Observable observable = Observable::energy;
};

inline double observe(const TrajectorySample& s, Observable o) {
  switch (o) {
    case Observable::energy:
      return s.state.energy;
    case Observable::mass_weighted_energy:
      return s.state.energy / integrate(s.state.rho);
    case Observable::momentum_norm:
      return l2_norm(s.state.momentum);
  }
  return 0.0;
}

// Discounted time average int_0^horizon exp(-rate t) F(t) dt, trapezoidal on
// the sample grid. Time is measured from the first sample; the horizon must
// lie inside the sampled range.
inline double evaluate_functional(const Trajectory& traj,
                                  const SelectionFunctional& f,
                                  double horizon) {
  require(!traj.empty(), Err::horizon_exceeded,
          "evaluate_functional: empty trajectory");
  require(f.rate > 0.0, Err::validation_error,
          "evaluate_functional: discount rate must be positive");
  require(horizon >= 0.0, Err::horizon_exceeded,
          "evaluate_functional: negative horizon");
  require(horizon <= traj.end_time() - traj.start_time() +
                         Trajectory::time_slop,
          Err::horizon_exceeded,
          "evaluate_functional: horizon " + std::to_string(horizon) +
              " beyond sampled range");

  const double t0 = traj.start_time();
  double acc = 0.0;
  double prev_s = 0.0;
  double prev_w = 0.0;
  bool first = true;
  for (const TrajectorySample& smp : traj.samples) {
    const double s = smp.state.time - t0;
    if (s > horizon + Trajectory::time_slop) break;
    const double w = std::exp(-f.rate * s) * observe(smp, f.observable);
    if (!first) acc += 0.5 * (s - prev_s) * (prev_w + w);
    prev_s = s;
    prev_w = w;
    first = false;
  }
  return acc;
}

struct SelectionOutcome {
  std::size_t winner = 0;
  std::vector<std::vector<std::size_t>> survivors;  // after each round
  std::vector<double> round_minima;
};

// Lexicographic argmin over the functional list. Every candidate must start
// from the same initial data; ties within a relative tolerance survive to the
// next round, and any final tie is broken by the config hash (then by the
// lowest index), so the result is deterministic and unchanged by duplicating
// candidates.
inline Trajectory select(const std::vector<Trajectory>& candidates,
                         const std::vector<SelectionFunctional>& functionals,
                         double horizon, SelectionOutcome* outcome = nullptr) {
  require(!candidates.empty(), Err::empty_candidates, "select: no candidates");
  for (const Trajectory& c : candidates)
    require(!c.empty(), Err::empty_candidates,
            "select: candidate without samples");

  const FluidState& head = candidates.front().samples.front().state;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double gap =
        state_distance(head, candidates[i].samples.front().state);
    require(gap <= 1e-9, Err::mixed_initial_data,
            "select: candidate " + std::to_string(i) +
                " starts a distance " + std::to_string(gap) +
                " from the first candidate");
  }

  std::vector<std::size_t> live(candidates.size());
  std::iota(live.begin(), live.end(), std::size_t{0});

  SelectionOutcome res;
  for (const SelectionFunctional& f : functionals) {
    double vmin = std::numeric_limits<double>::infinity();
    std::vector<double> vals(live.size());
    for (std::size_t j = 0; j < live.size(); ++j) {
      vals[j] = evaluate_functional(candidates[live[j]], f, horizon);
      vmin = std::min(vmin, vals[j]);
    }
    const double tie = 1e-10 * std::max(1.0, std::abs(vmin));
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < live.size(); ++j)
      if (vals[j] <= vmin + tie) keep.push_back(live[j]);
    live.swap(keep);
    res.survivors.push_back(live);
    res.round_minima.push_back(vmin);
  }

  std::size_t win = live.front();
  for (std::size_t idx : live)
    if (candidates[idx].meta.config_hash < candidates[win].meta.config_hash)
      win = idx;
  res.winner = win;
  if (outcome) *outcome = std::move(res);
  return candidates[win];
}

struct SemigroupReport {
  double t1 = 0.0;
  double t2 = 0.0;
  double distance = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Flow property of a selection rule: selecting from the initial data, then
// reading the state at t1 + t2, must agree with restarting the selection from
// the time-t1 state and reading it at t2. The generator maps an initial state
// to the candidate set grown from it.
template <typename Generator>
SemigroupReport check_semigroup(
    const FluidState& initial, double t1, double t2, Generator&& generate,
    const std::vector<SelectionFunctional>& functionals, double horizon,
    double tol = 1e-8) {
  require(t1 >= 0.0 && t2 >= 0.0, Err::horizon_exceeded,
          "check_semigroup: negative restart or probe time");

  const Trajectory whole = select(generate(initial), functionals, horizon);
  require(t1 + t2 <= whole.end_time() - whole.start_time() +
                         Trajectory::time_slop,
          Err::horizon_exceeded,
          "check_semigroup: t1 + t2 beyond the selected horizon");
  const Trajectory tail = shift(whole, t1);

  FluidState restart = whole.at_time(whole.start_time() + t1).state;
  restart.time = 0.0;
  const Trajectory rerun = select(generate(restart), functionals, horizon);
  require(t2 <= rerun.end_time() - rerun.start_time() + Trajectory::time_slop,
          Err::horizon_exceeded,
          "check_semigroup: t2 beyond the restarted horizon");

  SemigroupReport rep;
  rep.t1 = t1;
  rep.t2 = t2;
  rep.tolerance = tol;
  rep.distance =
      state_distance(tail.at_time(t2).state,
                     rerun.at_time(rerun.start_time() + t2).state);
  rep.passed = rep.distance <= tol;
  return rep;
}

}  // namespace qfluid
