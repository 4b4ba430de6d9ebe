#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qfluid/basis.hpp"
#include "qfluid/energy.hpp"
#include "qfluid/operators.hpp"
#include "qfluid/physics.hpp"
#include "qfluid/state.hpp"

namespace qfluid {

enum class ContinuityScheme { semi_implicit, implicit };
enum class TimeQuadrature { right_endpoint, trapezoid };

inline const char* to_string(ContinuityScheme s) {
  return s == ContinuityScheme::implicit ? "implicit" : "semi-implicit";
}
inline const char* to_string(TimeQuadrature q) {
  return q == TimeQuadrature::trapezoid ? "trapezoid" : "right-endpoint";
}

struct SolverConfig {
  double dt = 1e-3;
  double epsilon = 0.0;
  int n_modes = 8;
  double fixed_point_tol = 1e-12;
  int fixed_point_max_iter = 60;
  ContinuityScheme continuity_scheme = ContinuityScheme::semi_implicit;
  // Right-endpoint closes the budget one-sidedly; trapezoid trades that for
  // second-order energy drift.
  TimeQuadrature time_quadrature = TimeQuadrature::right_endpoint;
  double rho_floor = 1e-9;
  double courant = 0.5;
  int snapshot_every = 1;
};

inline double theta_of(TimeQuadrature q) {
  return q == TimeQuadrature::trapezoid ? 0.5 : 1.0;
}

inline void validate_solver_config(const SolverConfig& c) {
  require(c.dt > 0.0, Err::validation_error, "dt must be positive");
  require(c.epsilon >= 0.0, Err::validation_error, "epsilon must be >= 0");
  require(c.n_modes >= 1, Err::validation_error, "n_modes must be >= 1");
  require(c.fixed_point_tol > 0.0, Err::validation_error,
          "fixed_point_tol must be positive");
  require(c.fixed_point_max_iter >= 1, Err::validation_error,
          "fixed_point_max_iter must be >= 1");
  require(c.rho_floor >= 0.0, Err::validation_error, "rho_floor must be >= 0");
  require(c.courant > 0.0, Err::validation_error, "courant must be positive");
  require(c.snapshot_every >= 1, Err::validation_error,
          "snapshot_every must be >= 1");
}

namespace detail {

inline VectorField mass_flux(const ScalarField& rho, const VectorField& u) {
  const Domain& d = rho.domain();
  VectorField m(d);
  for (int c = 0; c < d.dim; ++c) {
    auto mc = m.comp(c);
    auto uc = u.comp(c);
    for (std::size_t i = 0; i < rho.size(); ++i) mc[i] = rho[i] * uc[i];
    m.set_parity(c, u.parity(c));
  }
  return dealias(m);
}

inline std::vector<std::complex<double>> div_spectrum(const VectorField& m) {
  const Domain& d = m.domain();
  std::vector<std::complex<double>> acc;
  for (int c = 0; c < d.dim; ++c) {
    auto buf = to_spectrum(d, m.comp(c), m.parity(c));
    for_each_mode(d, buf, [c](std::complex<double>& z, const ModeInfo& mi) {
      const double k = c == 0 ? mi.k0 : mi.k1;
      const bool ny = c == 0 ? mi.nyq0 : mi.nyq1;
      z = ny ? 0.0 : std::complex<double>(0.0, k) * z;
    });
    if (acc.empty()) {
      acc = std::move(buf);
    } else {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += buf[i];
    }
  }
  return acc;
}

// Theta-weighted mass update, diffusion handled implicitly per mode. For
// theta = 1 each retained mode is scaled by exactly 1 / (1 + eps|kappa|^2 dt);
// the zero mode is untouched by both transport and diffusion, so total mass
// is conserved to rounding.
inline ScalarField continuity_core(
    const ScalarField& rho0, const std::vector<std::complex<double>>& div_new,
    const std::vector<std::complex<double>>* div_old, double epsilon, double dt,
    double theta) {
  const Domain& d = rho0.domain();
  auto buf = to_spectrum(d, rho0.comp(0), rho0.parity(0));
  for_each_mode_indexed(d, [&](std::size_t idx, const ModeInfo& mi) {
    const double k2 = mi.k0 * mi.k0 + mi.k1 * mi.k1;
    std::complex<double> num = buf[idx] - dt * theta * div_new[idx];
    if (theta < 1.0) {
      num -= dt * (1.0 - theta) * (*div_old)[idx];
      num -= (1.0 - theta) * epsilon * dt * k2 * buf[idx];
    }
    buf[idx] = num / (1.0 + theta * epsilon * dt * k2);
  });
  ScalarField out(d);
  from_spectrum(d, buf, out.comp(0));
  out.set_parity(0, rho0.parity(0));
  return out;
}

inline std::vector<double> nodal_weights(const Domain& d) {
  std::vector<double> w(d.npoints());
  if (d.dim == 1) {
    for (int i = 0; i < d.points(0); ++i) w[i] = quad_weight(d, 0, i);
  } else {
    const int P1 = d.points(1);
    for (int i = 0; i < d.points(0); ++i) {
      const double w0 = quad_weight(d, 0, i);
      for (int j = 0; j < P1; ++j)
        w[static_cast<std::size_t>(i) * P1 + j] = w0 * quad_weight(d, 1, j);
    }
  }
  return w;
}

inline void check_cfl(const VectorField& u, double dt, double courant,
                      double t) {
  const double umax = u.max_abs();
  const double h = u.domain().min_h();
  const double c = dt * umax / h;
  require(c <= courant, Err::cfl_violation,
          "dt*|u|/h = " + std::to_string(c) + " exceeds " +
              std::to_string(courant) + " at t = " + std::to_string(t));
}

inline void check_floor(const ScalarField& rho, double floor, double t) {
  const double mn = rho.min();
  if (mn <= floor)
    fail(Err::positivity_lost, "density reached " + std::to_string(mn) +
                                   " at t = " + std::to_string(t));
}

}  // namespace detail

// One mass-equation update with the transport flux rho*u frozen (the inner
// fixed point of advance supplies iteration when the implicit scheme is
// selected; standalone implicit here iterates on rho alone).
inline ScalarField continuity_step(
    const ScalarField& rho, const VectorField& u, double epsilon, double dt,
    ContinuityScheme scheme = ContinuityScheme::semi_implicit,
    double courant = 0.5, double t0 = 0.0) {
  require_positive(rho, "continuity_step");
  require_same_domain(rho.domain(), u.domain(), "continuity_step");
  require(dt > 0.0, Err::validation_error, "continuity_step: dt must be > 0");
  require(epsilon >= 0.0, Err::validation_error,
          "continuity_step: epsilon must be >= 0");
  detail::check_cfl(u, dt, courant, t0);

  auto div_new = detail::div_spectrum(detail::mass_flux(rho, u));
  ScalarField out = detail::continuity_core(rho, div_new, nullptr, epsilon, dt, 1.0);
  if (scheme == ContinuityScheme::implicit) {
    const double scale = std::max(1.0, rho.max_abs());
    for (int pass = 0; pass < 100; ++pass) {
      auto div_k = detail::div_spectrum(detail::mass_flux(out, u));
      ScalarField next =
          detail::continuity_core(rho, div_k, nullptr, epsilon, dt, 1.0);
      double delta = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i)
        delta = std::max(delta, std::abs(next[i] - out[i]));
      out = std::move(next);
      if (delta <= 1e-13 * scale) break;
    }
  }
  detail::check_floor(out, 0.0, t0 + dt);
  return out;
}

// Density-weighted Gram matrix of the velocity basis, int rho w_i . w_j,
// assembled with the dealiased density so nodal quadrature stays alias-free.
inline Eigen::MatrixXd mass_operator(const ScalarField& rho,
                                     const GalerkinBasis& basis) {
  require_positive(rho, "mass_operator");
  require_same_domain(rho.domain(), basis.domain(), "mass_operator");
  const Domain& d = rho.domain();
  ScalarField rd = dealias(rho);
  std::vector<double> w = detail::nodal_weights(d);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= rd[i];

  const int n = basis.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const std::size_t npts = d.npoints();
  for (int i = 0; i < n; ++i) {
    const BasisMode& mi = basis.mode(i);
    auto pi = mi.profile.comp(0);
    for (int j = i; j < n; ++j) {
      const BasisMode& mj = basis.mode(j);
      if (mj.comp != mi.comp) continue;
      auto pj = mj.profile.comp(0);
      double acc = 0.0;
      for (std::size_t k = 0; k < npts; ++k) acc += w[k] * pi[k] * pj[k];
      M(i, j) = acc;
      M(j, i) = acc;
    }
  }
  return M;
}

// Weak momentum forcing tested against every basis mode:
//   N_i = int [ rho u x u : grad w_i + p div w_i
//               + (hbar/4)(grad rho . lap w_i + 4 (grad s x grad s) : grad w_i)
//               - S(grad u) : grad w_i - eps (grad rho . grad u) . w_i ]
// with s = sqrt(rho) and every nonlinear product dealiased.
inline Eigen::VectorXd momentum_rhs(const ScalarField& rho,
                                    const VectorField& u,
                                    const FluidParams& params,
                                    const GalerkinBasis& basis,
                                    double epsilon) {
  require_positive(rho, "momentum_rhs");
  require_same_domain(rho.domain(), u.domain(), "momentum_rhs");
  require_same_domain(rho.domain(), basis.domain(), "momentum_rhs");
  const Domain& d = rho.domain();
  require(params.dim == d.dim, Err::dimension_mismatch,
          "momentum_rhs: params.dim != domain dim");
  const int dim = d.dim;
  const std::size_t npts = d.npoints();

  ScalarField rd = dealias(rho);
  VectorField gr = gradient(rd);
  ScalarField ptil = dealias(pressure(rho, params));

  ScalarField s(d);
  for (std::size_t i = 0; i < npts; ++i) s[i] = std::sqrt(rho[i]);
  s.set_parity(0, rho.parity(0));
  VectorField gs = gradient(s);

  TensorField G = grad_vec(u);
  bool viscous = params.mu != 0.0 || params.lambda_bulk != 0.0;
  TensorField S(d);
  if (viscous) S = dealias(viscous_stress(G, params));

  // The convective and quantum tensors carry different wall parities, so each
  // is dealiased on its own before the purely nodal combination below.
  TensorField T(d);
  TensorField B(d);
  for (int a = 0; a < dim; ++a) {
    for (int c = 0; c < dim; ++c) {
      auto tdst = T.entry(a, c);
      auto bdst = B.entry(a, c);
      auto ua = u.comp(a);
      auto uc = u.comp(c);
      auto ga = gs.comp(a);
      auto gc = gs.comp(c);
      for (std::size_t i = 0; i < npts; ++i) {
        tdst[i] = rho[i] * ua[i] * uc[i];
        bdst[i] = ga[i] * gc[i];
      }
      T.set_parity(a * dim + c,
                   static_cast<ParityMask>(u.parity(a) ^ u.parity(c)));
      B.set_parity(a * dim + c,
                   static_cast<ParityMask>(gs.parity(a) ^ gs.parity(c)));
    }
  }
  T = dealias(T);
  B = dealias(B);

  // A(a,c) multiplies d_a w_c; the pressure sits on the diagonal. Nodal only
  // from here on, so the mixed parity of the sum is immaterial.
  TensorField A(d);
  for (int a = 0; a < dim; ++a)
    for (int c = 0; c < dim; ++c) {
      auto dst = A.entry(a, c);
      auto tt = T.entry(a, c);
      auto bb = B.entry(a, c);
      for (std::size_t i = 0; i < npts; ++i)
        dst[i] = tt[i] + params.hbar * bb[i];
      if (viscous) {
        auto sv = S.entry(a, c);
        for (std::size_t i = 0; i < npts; ++i) dst[i] -= sv[i];
      }
      if (a == c)
        for (std::size_t i = 0; i < npts; ++i) dst[i] += ptil[i];
    }

  VectorField W(d);
  if (epsilon != 0.0) {
    for (int b = 0; b < dim; ++b) {
      auto wb = W.comp(b);
      for (int a = 0; a < dim; ++a) {
        auto gra = gr.comp(a);
        auto gab = G.entry(a, b);
        for (std::size_t i = 0; i < npts; ++i) wb[i] += gra[i] * gab[i];
      }
      W.set_parity(b, u.parity(b));
    }
    W = dealias(W);
  }

  const double hq = 0.25 * params.hbar;
  Eigen::VectorXd N(basis.size());
  std::array<std::span<const double>, 2> acol;
  std::array<std::span<const double>, 2> dphi;
  for (int i = 0; i < basis.size(); ++i) {
    const BasisMode& m = basis.mode(i);
    const int c = m.comp;
    auto lap = m.lap_profile.comp(0);
    auto phi = m.profile.comp(0);
    auto grc = gr.comp(c);
    auto wc = W.comp(c);
    for (int a = 0; a < dim; ++a) {
      acol[a] = A.entry(a, c);
      dphi[a] = m.dprofile.comp(a);
    }
    N(i) = quadrature(d, [&](std::size_t k) {
      double v = hq * grc[k] * lap[k];
      for (int a = 0; a < dim; ++a) v += acol[a][k] * dphi[a][k];
      if (epsilon != 0.0) v -= epsilon * wc[k] * phi[k];
      return v;
    });
  }
  return N;
}

namespace detail {

inline Eigen::VectorXd refined_solve(const Eigen::LLT<Eigen::MatrixXd>& llt,
                                     const Eigen::MatrixXd& M,
                                     const Eigen::VectorXd& b) {
  Eigen::VectorXd x = llt.solve(b);
  x += llt.solve(b - M * x);
  return x;
}

}  // namespace detail

// rho-weighted L2 projection of a velocity field onto the basis.
inline std::vector<double> velocity_coeffs(const ScalarField& rho,
                                           const VectorField& u,
                                           const GalerkinBasis& basis) {
  Eigen::MatrixXd M = mass_operator(rho, basis);
  std::vector<double> p = project(dealias(detail::mass_flux(rho, u)), basis);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  require(llt.info() == Eigen::Success, Err::validation_error,
          "velocity_coeffs: mass matrix not positive definite");
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
  Eigen::VectorXd c = detail::refined_solve(llt, M, b);
  return std::vector<double>(c.data(), c.data() + c.size());
}

inline FluidState make_initial_state(const ScalarField& rho,
                                     const VectorField& u,
                                     const FluidParams& params,
                                     const GalerkinBasis& basis,
                                     double t0 = 0.0) {
  require_positive(rho, "make_initial_state");
  FluidState st;
  st.time = t0;
  st.rho = rho;
  st.velocity_coeffs = velocity_coeffs(rho, u, basis);
  VectorField ug = reconstruct(*st.velocity_coeffs, basis);
  st.momentum = VectorField(rho.domain());
  for (int c = 0; c < rho.domain().dim; ++c) {
    auto jc = st.momentum.comp(c);
    auto uc = ug.comp(c);
    for (std::size_t i = 0; i < rho.size(); ++i) jc[i] = rho[i] * uc[i];
    st.momentum.set_parity(c, ug.parity(c));
  }
  st.energy = total_energy(rho, ug, params);
  return st;
}

struct StepInfo {
  int iterations = 0;
  std::vector<double> residuals;
  double diss_increment = 0.0;
  double eps_pressure_increment = 0.0;
  double eps_quantum_increment = 0.0;
};

inline FluidState advance(const FluidState& state, const FluidParams& params,
                          const GalerkinBasis& basis, const SolverConfig& cfg,
                          StepInfo* info = nullptr) {
  validate_params(params);
  validate_solver_config(cfg);
  require_positive(state.rho, "advance");
  require_same_domain(state.rho.domain(), basis.domain(), "advance");

  const Domain& d = state.rho.domain();
  const double dt = cfg.dt;
  const double theta = theta_of(cfg.time_quadrature);
  const ScalarField& rho0 = state.rho;

  std::vector<double> c0 = state.velocity_coeffs
                               ? *state.velocity_coeffs
                               : [&] {
                                   VectorField u(d);
                                   for (int c = 0; c < d.dim; ++c) {
                                     auto uc = u.comp(c);
                                     auto jc = state.momentum.comp(c);
                                     for (std::size_t i = 0; i < rho0.size(); ++i)
                                       uc[i] = jc[i] / rho0[i];
                                     u.set_parity(c, state.momentum.parity(c));
                                   }
                                   return velocity_coeffs(rho0, u, basis);
                                 }();
  require(static_cast<int>(c0.size()) == basis.size(), Err::dimension_mismatch,
          "advance: coefficient vector does not match basis");
  VectorField u0 = reconstruct(c0, basis);
  detail::check_cfl(u0, dt, cfg.courant, state.time);

  Eigen::MatrixXd M0 = mass_operator(rho0, basis);
  Eigen::VectorXd b =
      M0 * Eigen::Map<const Eigen::VectorXd>(c0.data(), c0.size());

  std::vector<std::complex<double>> div_old;
  Eigen::VectorXd N0;
  if (theta < 1.0) {
    div_old = detail::div_spectrum(detail::mass_flux(rho0, u0));
    N0 = momentum_rhs(rho0, u0, params, basis, cfg.epsilon);
  }

  // Trapezoid weighting needs the new-time flux to track the iterate; a
  // frozen explicit flux would collapse the blend back to forward Euler.
  const bool rho_frozen =
      cfg.continuity_scheme == ContinuityScheme::semi_implicit && theta == 1.0;
  Eigen::VectorXd c_prev = Eigen::Map<const Eigen::VectorXd>(c0.data(), c0.size());
  VectorField u_prev = u0;
  ScalarField rho_prev = rho0;

  ScalarField rho_new;
  Eigen::MatrixXd Mk;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd ck;
  bool converged = false;
  std::vector<double> residuals;

  for (int k = 1; k <= cfg.fixed_point_max_iter; ++k) {
    if (k == 1 || !rho_frozen) {
      const ScalarField& rtrans = rho_frozen ? rho0 : rho_prev;
      const VectorField& utrans = rho_frozen ? u0 : u_prev;
      auto div_new = detail::div_spectrum(detail::mass_flux(rtrans, utrans));
      rho_new = detail::continuity_core(rho0, div_new,
                                        theta < 1.0 ? &div_old : nullptr,
                                        cfg.epsilon, dt, theta);
      detail::check_floor(rho_new, cfg.rho_floor, state.time + dt);
      Mk = mass_operator(rho_new, basis);
      llt.compute(Mk);
      require(llt.info() == Eigen::Success, Err::positivity_lost,
              "advance: mass matrix lost positive definiteness at t = " +
                  std::to_string(state.time + dt));
    }
    Eigen::VectorXd Nk = momentum_rhs(rho_new, u_prev, params, basis, cfg.epsilon);
    Eigen::VectorXd rhs = b + dt * (theta < 1.0
                                        ? (theta * Nk + (1.0 - theta) * N0).eval()
                                        : Nk);
    ck = detail::refined_solve(llt, Mk, rhs);

    const double res = (ck - c_prev).norm();
    residuals.push_back(res);
    c_prev = ck;
    u_prev = reconstruct(std::vector<double>(ck.data(), ck.data() + ck.size()),
                         basis);
    rho_prev = rho_new;
    if (res <= cfg.fixed_point_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    const std::size_t m = residuals.size();
    const bool growing = m >= 2 && residuals[m - 1] > residuals[m - 2];
    fail(Err::fixed_point_diverged,
         std::string("fixed point hit the iteration cap with ") +
             (growing ? "growing" : "stalled") + " residual " +
             std::to_string(residuals.back()) + " at t = " +
             std::to_string(state.time + dt));
  }

  FluidState out;
  out.time = state.time + dt;
  out.rho = rho_new;
  out.velocity_coeffs =
      std::vector<double>(ck.data(), ck.data() + ck.size());
  out.momentum = VectorField(d);
  for (int c = 0; c < d.dim; ++c) {
    auto jc = out.momentum.comp(c);
    auto uc = u_prev.comp(c);
    for (std::size_t i = 0; i < rho_new.size(); ++i)
      jc[i] = rho_new[i] * uc[i];
    out.momentum.set_parity(c, u_prev.parity(c));
  }
  out.energy = total_energy(rho_new, u_prev, params);

  if (info) {
    info->iterations = static_cast<int>(residuals.size());
    info->residuals = std::move(residuals);
    double rate_new = dissipation_rate(u_prev, params);
    double rate_old = theta < 1.0 ? dissipation_rate(u0, params) : 0.0;
    info->diss_increment = dt * (theta * rate_new + (1.0 - theta) * rate_old);
    EpsilonDissipationParts pn =
        epsilon_dissipation_parts(rho_new, params, cfg.epsilon);
    EpsilonDissipationParts po =
        theta < 1.0 ? epsilon_dissipation_parts(rho0, params, cfg.epsilon)
                    : EpsilonDissipationParts{};
    info->eps_pressure_increment =
        dt * (theta * pn.pressure + (1.0 - theta) * po.pressure);
    info->eps_quantum_increment =
        dt * (theta * pn.quantum + (1.0 - theta) * po.quantum);
  }
  return out;
}

inline Trajectory run_simulation(const FluidState& init,
                                 const FluidParams& params,
                                 const SolverConfig& cfg, double t_final,
                                 SystemKind kind = SystemKind::navier_stokes) {
  validate_params(params);
  validate_solver_config(cfg);
  require_positive(init.rho, "run_simulation");
  require(t_final >= init.time - 1e-15, Err::validation_error,
          "run_simulation: t_final precedes initial time");
  if (kind == SystemKind::euler)
    require(params.mu == 0.0 && params.lambda_bulk == 0.0,
            Err::validation_error, "euler system admits no viscosity");

  GalerkinBasis basis(init.rho.domain(), cfg.n_modes);

  FluidState st = init;
  if (!st.velocity_coeffs) {
    const Domain& d = st.rho.domain();
    VectorField u(d);
    for (int c = 0; c < d.dim; ++c) {
      auto uc = u.comp(c);
      auto jc = st.momentum.comp(c);
      for (std::size_t i = 0; i < st.rho.size(); ++i)
        uc[i] = jc[i] / st.rho[i];
      u.set_parity(c, st.momentum.parity(c));
    }
    st = make_initial_state(st.rho, u, params, basis, st.time);
  } else {
    VectorField ug = reconstruct(*st.velocity_coeffs, basis);
    st.energy = total_energy(st.rho, ug, params);
  }

  Trajectory traj;
  traj.e0 = st.energy;
  traj.meta.system = to_string(kind);
  traj.meta.dt = cfg.dt;
  traj.meta.epsilon = cfg.epsilon;
  traj.meta.n_modes = cfg.n_modes;
  traj.meta.mu = params.mu;
  traj.meta.lambda_bulk = params.lambda_bulk;
  traj.meta.has_dissipation_cums = true;

  TrajectorySample s0;
  s0.state = st;
  traj.samples.push_back(s0);

  double diss = 0.0, eps_p = 0.0, eps_q = 0.0;
  long step = 0;
  const double horizon_slop = 1e-12 * std::max(1.0, std::abs(t_final));
  try {
    while (st.time < t_final - horizon_slop) {
      SolverConfig step_cfg = cfg;
      step_cfg.dt = std::min(cfg.dt, t_final - st.time);
      StepInfo info;
      st = advance(st, params, basis, step_cfg, &info);
      diss += info.diss_increment;
      eps_p += info.eps_pressure_increment;
      eps_q += info.eps_quantum_increment;
      ++step;
      const bool last = st.time >= t_final - horizon_slop;
      if (last || step % cfg.snapshot_every == 0) {
        TrajectorySample s;
        s.state = st;
        s.diss_cum = diss;
        s.eps_diss_pressure_cum = eps_p;
        s.eps_diss_quantum_cum = eps_q;
        traj.samples.push_back(std::move(s));
      }
    }
  } catch (const Exception& e) {
    switch (e.code()) {
      case Err::positivity_lost:
        traj.status = RunStatus::positivity_lost;
        break;
      case Err::fixed_point_diverged:
        traj.status = RunStatus::fixed_point_diverged;
        break;
      case Err::cfl_violation:
        traj.status = RunStatus::cfl_violation;
        break;
      default:
        throw;
    }
    traj.status_detail = e.what();
  }
  return traj;
}

struct DensityBoundsReport {
  double div_sup = 0.0;     // measured sup over samples of ||div u||_inf
  double bound_used = 0.0;  // supplied a-priori bound, or div_sup if none
  double slack = 1.05;
  std::vector<double> min_rho;
  std::vector<double> max_rho;
  std::vector<double> lower_envelope;
  std::vector<double> upper_envelope;
};

// Parabolic two-sided density control: with D bounding ||div u||_inf, the
// regularized system keeps min/max rho inside exp(-/+ D t) envelopes of the
// initial bounds; `slack` absorbs discretization error.
inline DensityBoundsReport check_density_bounds(const Trajectory& traj,
                                                double u_inf_bound = 0.0) {
  require(!traj.samples.empty(), Err::window_empty,
          "check_density_bounds: empty trajectory");
  require(traj.meta.epsilon > 0.0, Err::validation_error,
          "check_density_bounds needs an epsilon-regularized run");
  DensityBoundsReport rep;
  const Domain& d = traj.samples.front().state.rho.domain();

  for (const auto& s : traj.samples) {
    const ScalarField& rho = s.state.rho;
    VectorField u(d);
    for (int c = 0; c < d.dim; ++c) {
      auto uc = u.comp(c);
      auto jc = s.state.momentum.comp(c);
      for (std::size_t i = 0; i < rho.size(); ++i) uc[i] = jc[i] / rho[i];
      u.set_parity(c, s.state.momentum.parity(c));
    }
    rep.div_sup = std::max(rep.div_sup, divergence(u).max_abs());
    rep.min_rho.push_back(rho.min());
    rep.max_rho.push_back(rho.max());
  }

  if (u_inf_bound > 0.0)
    require(rep.div_sup <= u_inf_bound * (1.0 + 1e-12), Err::bound_violated,
            "measured sup ||div u||_inf " + std::to_string(rep.div_sup) +
                " exceeds the supplied bound " + std::to_string(u_inf_bound));
  rep.bound_used = u_inf_bound > 0.0 ? u_inf_bound : rep.div_sup;

  const double t0 = traj.samples.front().state.time;
  const double m0 = rep.min_rho.front();
  const double M0 = rep.max_rho.front();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double tau = traj.samples[i].state.time - t0;
    const double lo = m0 * std::exp(-rep.bound_used * tau) / rep.slack;
    const double hi = M0 * std::exp(rep.bound_used * tau) * rep.slack;
    rep.lower_envelope.push_back(lo);
    rep.upper_envelope.push_back(hi);
    if (rep.min_rho[i] < lo || rep.max_rho[i] > hi)
      fail(Err::bound_violated,
           "density left the parabolic envelope at t = " +
               std::to_string(traj.samples[i].state.time));
  }
  return rep;
}

}  // namespace qfluid
