#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "qfluid/domain.hpp"
#include "qfluid/errors.hpp"
#include "qfluid/fft.hpp"
#include "qfluid/field.hpp"

namespace qfluid {

namespace detail {

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

struct ModeInfo {
  double k0 = 0.0, k1 = 0.0;  // angular wavenumbers on the transform box
  int f0 = 0, f1 = 0;         // integer frequencies
  bool nyq0 = false, nyq1 = false;
};

inline int freq_of(int k, int M) { return k <= M / 2 ? k : k - M; }

// Even/odd extension of one component onto the transform grid (identity on
// periodic axes), then a normalized forward DFT. Coefficient convention:
// f(x) = sum_k coef_k exp(i kappa_k x).
inline std::vector<std::complex<double>> to_spectrum(const Domain& d,
                                                     std::span<const double> in,
                                                     ParityMask odd) {
  const int M0 = d.transform_size(0);
  const int M1 = d.dim == 2 ? d.transform_size(1) : 1;
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(M0) * M1);

  auto ext = [&](int e, int axis, int* src, double* sign) {
    if (d.bc == Bc::periodic || e <= d.resolution[axis]) {
      *src = e;
      *sign = 1.0;
    } else {
      *src = 2 * d.resolution[axis] - e;
      *sign = (odd & (1u << axis)) ? -1.0 : 1.0;
    }
  };

  if (d.dim == 1) {
    for (int e = 0; e < M0; ++e) {
      int s;
      double sg;
      ext(e, 0, &s, &sg);
      buf[e] = sg * in[s];
    }
    fft_inplace(buf.data(), M0, FFTW_FORWARD);
  } else {
    const int P1 = d.points(1);
    for (int e0 = 0; e0 < M0; ++e0) {
      int s0;
      double g0;
      ext(e0, 0, &s0, &g0);
      for (int e1 = 0; e1 < M1; ++e1) {
        int s1;
        double g1;
        ext(e1, 1, &s1, &g1);
        buf[static_cast<std::size_t>(e0) * M1 + e1] =
            g0 * g1 * in[static_cast<std::size_t>(s0) * P1 + s1];
      }
    }
    for (int e0 = 0; e0 < M0; ++e0)
      fft_inplace(buf.data() + static_cast<std::size_t>(e0) * M1, M1,
                  FFTW_FORWARD);
    std::vector<std::complex<double>> col(M0);
    for (int e1 = 0; e1 < M1; ++e1) {
      for (int e0 = 0; e0 < M0; ++e0)
        col[e0] = buf[static_cast<std::size_t>(e0) * M1 + e1];
      fft_inplace(col.data(), M0, FFTW_FORWARD);
      for (int e0 = 0; e0 < M0; ++e0)
        buf[static_cast<std::size_t>(e0) * M1 + e1] = col[e0];
    }
  }
  const double scale = 1.0 / (static_cast<double>(M0) * M1);
  for (auto& z : buf) z *= scale;
  return buf;
}

// Inverse of to_spectrum restricted to the physical nodes. Consumes buf.
inline void from_spectrum(const Domain& d, std::vector<std::complex<double>>& buf,
                          std::span<double> out) {
  const int M0 = d.transform_size(0);
  const int M1 = d.dim == 2 ? d.transform_size(1) : 1;
  if (d.dim == 1) {
    fft_inplace(buf.data(), M0, FFTW_BACKWARD);
    for (int i = 0; i < d.points(0); ++i) out[i] = buf[i].real();
    return;
  }
  std::vector<std::complex<double>> col(M0);
  for (int e1 = 0; e1 < M1; ++e1) {
    for (int e0 = 0; e0 < M0; ++e0)
      col[e0] = buf[static_cast<std::size_t>(e0) * M1 + e1];
    fft_inplace(col.data(), M0, FFTW_BACKWARD);
    for (int e0 = 0; e0 < M0; ++e0)
      buf[static_cast<std::size_t>(e0) * M1 + e1] = col[e0];
  }
  for (int e0 = 0; e0 < M0; ++e0)
    fft_inplace(buf.data() + static_cast<std::size_t>(e0) * M1, M1,
                FFTW_BACKWARD);
  const int P1 = d.points(1);
  for (int i0 = 0; i0 < d.points(0); ++i0)
    for (int i1 = 0; i1 < d.points(1); ++i1)
      out[static_cast<std::size_t>(i0) * P1 + i1] =
          buf[static_cast<std::size_t>(i0) * M1 + i1].real();
}

template <class Fn>
inline void for_each_mode_indexed(const Domain& d, Fn&& fn) {
  const int M0 = d.transform_size(0);
  const int M1 = d.dim == 2 ? d.transform_size(1) : 1;
  const double twopi = 6.283185307179586476925286766559;
  ModeInfo m;
  for (int k0 = 0; k0 < M0; ++k0) {
    m.f0 = freq_of(k0, M0);
    m.k0 = twopi * m.f0 / d.transform_length(0);
    m.nyq0 = (2 * k0 == M0);
    if (d.dim == 1) {
      fn(static_cast<std::size_t>(k0), m);
      continue;
    }
    for (int k1 = 0; k1 < M1; ++k1) {
      m.f1 = freq_of(k1, M1);
      m.k1 = twopi * m.f1 / d.transform_length(1);
      m.nyq1 = (2 * k1 == M1);
      fn(static_cast<std::size_t>(k0) * M1 + k1, m);
    }
  }
}

template <class Mult>
inline void for_each_mode(const Domain& d, std::vector<std::complex<double>>& buf,
                          Mult&& mult) {
  for_each_mode_indexed(d, [&](std::size_t idx, const ModeInfo& m) {
    mult(buf[idx], m);
  });
}

template <class Mult>
inline void spectral_apply(const Domain& d, std::span<const double> in,
                           ParityMask odd, std::span<double> out, Mult&& mult) {
  auto buf = to_spectrum(d, in, odd);
  for_each_mode(d, buf, mult);
  from_spectrum(d, buf, out);
}

// order 1: multiply by i*kappa_axis (Nyquist zeroed, keeps real fields real);
// order 2: multiply by -kappa_axis^2.
inline void deriv_comp(const Domain& d, std::span<const double> in,
                       ParityMask pin, int axis, int order,
                       std::span<double> out) {
  spectral_apply(d, in, pin, out,
                 [axis, order](std::complex<double>& z, const ModeInfo& m) {
                   const double k = axis == 0 ? m.k0 : m.k1;
                   if (order == 1) {
                     const bool nyq = axis == 0 ? m.nyq0 : m.nyq1;
                     z = nyq ? 0.0 : z * std::complex<double>(0.0, k);
                   } else {
                     z *= -k * k;
                   }
                 });
}

inline int dealias_cutoff(int transform_size) { return transform_size / 3; }

}  // namespace detail

// ---- differential operators ------------------------------------------------

inline VectorField gradient(const ScalarField& f) {
  const Domain& d = f.domain();
  VectorField g(d);
  for (int a = 0; a < d.dim; ++a) {
    detail::deriv_comp(d, f.comp(0), f.parity(0), a, 1, g.comp(a));
    g.set_parity(a, f.parity(0) ^ static_cast<ParityMask>(1u << a));
  }
  return g;
}

// Jacobian with the derivative axis first: entry(a,b) = d u_b / d x_a.
inline TensorField grad_vec(const VectorField& u) {
  const Domain& d = u.domain();
  TensorField t(d);
  for (int a = 0; a < d.dim; ++a)
    for (int b = 0; b < d.dim; ++b) {
      detail::deriv_comp(d, u.comp(b), u.parity(b), a, 1, t.entry(a, b));
      t.set_parity(a * d.dim + b,
                   u.parity(b) ^ static_cast<ParityMask>(1u << a));
    }
  return t;
}

namespace detail {
// Sums per-term parities; if they disagree (possible for d=2 wall data) the
// result is retagged with `fallback`, a parity-Galerkin projection that costs
// spectral accuracy at the walls but keeps the scheme well defined.
inline ParityMask merge_parity(const std::vector<ParityMask>& masks,
                               ParityMask fallback) {
  for (std::size_t i = 1; i < masks.size(); ++i)
    if (masks[i] != masks[0]) return fallback;
  return masks.empty() ? fallback : masks[0];
}
}  // namespace detail

inline ScalarField divergence(const VectorField& u) {
  const Domain& d = u.domain();
  ScalarField out(d);
  std::vector<double> tmp(d.npoints());
  std::vector<ParityMask> masks;
  for (int a = 0; a < d.dim; ++a) {
    detail::deriv_comp(d, u.comp(a), u.parity(a), a, 1, tmp);
    masks.push_back(u.parity(a) ^ static_cast<ParityMask>(1u << a));
    for (std::size_t i = 0; i < out.npoints(); ++i) out[i] += tmp[i];
  }
  out.set_parity(0, detail::merge_parity(masks, parity_even_all));
  return out;
}

// Contracts the derivative axis (the first index): out_b = sum_a d_a T(a,b).
inline VectorField divergence(const TensorField& t) {
  const Domain& d = t.domain();
  VectorField out(d);
  std::vector<double> tmp(d.npoints());
  for (int b = 0; b < d.dim; ++b) {
    auto dst = out.comp(b);
    std::vector<ParityMask> masks;
    for (int a = 0; a < d.dim; ++a) {
      detail::deriv_comp(d, t.entry(a, b), t.parity(a * d.dim + b), a, 1, tmp);
      masks.push_back(t.parity(a * d.dim + b) ^
                      static_cast<ParityMask>(1u << a));
      for (std::size_t i = 0; i < d.npoints(); ++i) dst[i] += tmp[i];
    }
    out.set_parity(b, detail::merge_parity(masks, parity_odd_all(d.dim)));
  }
  return out;
}

inline ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.domain());
  detail::spectral_apply(f.domain(), f.comp(0), f.parity(0), out.comp(0),
                         [](std::complex<double>& z, const detail::ModeInfo& m) {
                           z *= -(m.k0 * m.k0 + m.k1 * m.k1);
                         });
  out.set_parity(0, f.parity(0));
  return out;
}

inline VectorField laplacian(const VectorField& u) {
  VectorField out(u.domain());
  for (int c = 0; c < u.components(); ++c) {
    detail::spectral_apply(u.domain(), u.comp(c), u.parity(c), out.comp(c),
                           [](std::complex<double>& z, const detail::ModeInfo& m) {
                             z *= -(m.k0 * m.k0 + m.k1 * m.k1);
                           });
    out.set_parity(c, u.parity(c));
  }
  return out;
}

inline TensorField hessian(const ScalarField& f) {
  const Domain& d = f.domain();
  TensorField t(d);
  for (int a = 0; a < d.dim; ++a)
    for (int b = a; b < d.dim; ++b) {
      auto dst = t.entry(a, b);
      if (a == b) {
        detail::deriv_comp(d, f.comp(0), f.parity(0), a, 2, dst);
      } else {
        detail::spectral_apply(
            d, f.comp(0), f.parity(0), dst,
            [](std::complex<double>& z, const detail::ModeInfo& m) {
              if (m.nyq0 || m.nyq1) {
                z = 0.0;
                return;
              }
              z *= -m.k0 * m.k1;
            });
      }
      ParityMask pm = f.parity(0) ^ static_cast<ParityMask>(1u << a) ^
                      static_cast<ParityMask>(1u << b);
      if (a == b) pm = f.parity(0);
      t.set_parity(a * d.dim + b, pm);
      if (a != b) {
        auto src = t.entry(a, b);
        auto mirror = t.entry(b, a);
        std::copy(src.begin(), src.end(), mirror.begin());
        t.set_parity(b * d.dim + a, pm);
      }
    }
  return t;
}

// ---- quadrature ------------------------------------------------------------

inline double quad_weight(const Domain& d, int axis, int j) {
  const double hh = d.h(axis);
  if (d.bc == Bc::wall && (j == 0 || j == d.resolution[axis])) return 0.5 * hh;
  return hh;
}

// Trapezoid quadrature (spectrally exact on periodic data; exact on wall data
// of definite parity). `term(idx)` supplies the integrand at node idx.
template <class F>
inline double quadrature(const Domain& d, F&& term) {
  detail::KahanSum acc;
  if (d.dim == 1) {
    for (int i = 0; i < d.points(0); ++i)
      acc.add(quad_weight(d, 0, i) * term(static_cast<std::size_t>(i)));
  } else {
    const int P1 = d.points(1);
    for (int i = 0; i < d.points(0); ++i) {
      const double w0 = quad_weight(d, 0, i);
      for (int j = 0; j < P1; ++j)
        acc.add(w0 * quad_weight(d, 1, j) *
                term(static_cast<std::size_t>(i) * P1 + j));
    }
  }
  return acc.value();
}

inline double integrate(const ScalarField& f) {
  return quadrature(f.domain(), [&](std::size_t i) { return f[i]; });
}

// ---- dealiasing and resolution checks ---------------------------------------

namespace detail {
inline void dealias_comp(const Domain& d, std::span<const double> in,
                         ParityMask odd, std::span<double> out) {
  const int c0 = dealias_cutoff(d.transform_size(0));
  const int c1 = d.dim == 2 ? dealias_cutoff(d.transform_size(1)) : 0;
  spectral_apply(d, in, odd, out,
                 [c0, c1](std::complex<double>& z, const ModeInfo& m) {
                   if (std::abs(m.f0) > c0 || std::abs(m.f1) > c1) z = 0.0;
                 });
}
}  // namespace detail

template <class FieldT>
inline FieldT dealias(const FieldT& f) {
  FieldT out = f;
  for (int c = 0; c < f.components(); ++c)
    detail::dealias_comp(f.domain(), f.comp(c), f.parity(c), out.comp(c));
  return out;
}

// Fraction of absolute coefficient mass sitting beyond the dealias cutoff.
// "Resolved" fields keep this at or below the tail tolerance, which is exactly
// the regime where the 2/3-rule products are trustworthy.
inline double spectral_tail_fraction(const ScalarField& f) {
  auto buf = detail::to_spectrum(f.domain(), f.comp(0), f.parity(0));
  const Domain& d = f.domain();
  const int c0 = detail::dealias_cutoff(d.transform_size(0));
  const int c1 = d.dim == 2 ? detail::dealias_cutoff(d.transform_size(1)) : 0;
  detail::KahanSum total, tail;
  detail::for_each_mode(d, buf,
                        [&](std::complex<double>& z, const detail::ModeInfo& m) {
                          const double a = std::abs(z);
                          total.add(a);
                          if (std::abs(m.f0) > c0 || std::abs(m.f1) > c1)
                            tail.add(a);
                        });
  return total.value() > 0.0 ? tail.value() / total.value() : 0.0;
}

inline void require_resolved(const ScalarField& f, double tail_tol,
                             const char* where) {
  const double frac = spectral_tail_fraction(f);
  require(frac <= tail_tol, Err::unresolved_field,
          std::string(where) + ": spectral tail fraction " +
              std::to_string(frac) + " exceeds " + std::to_string(tail_tol));
}

// ---- negative Sobolev norm ---------------------------------------------------

namespace detail {
inline void ns_norm_accumulate(const Domain& d, std::span<const double> comp,
                               ParityMask odd, int k, KahanSum& acc) {
  auto buf = to_spectrum(d, comp, odd);
  for_each_mode(d, buf, [&](std::complex<double>& z, const ModeInfo& m) {
    const double w = std::pow(1.0 + m.k0 * m.k0 + m.k1 * m.k1, -k);
    acc.add(w * std::norm(z));
  });
}
}  // namespace detail

// || f ||_{W^{-k,2}} on the box, computed through the extension coefficients;
// dominated by the L2 norm for every k >= 1.
inline double negative_sobolev_norm(const ScalarField& f, int k) {
  require(k >= 1, Err::validation_error, "negative Sobolev index must be >= 1");
  detail::KahanSum acc;
  detail::ns_norm_accumulate(f.domain(), f.comp(0), f.parity(0), k, acc);
  return std::sqrt(f.domain().volume() * acc.value());
}

inline double negative_sobolev_norm(const VectorField& f, int k) {
  require(k >= 1, Err::validation_error, "negative Sobolev index must be >= 1");
  detail::KahanSum acc;
  for (int c = 0; c < f.components(); ++c)
    detail::ns_norm_accumulate(f.domain(), f.comp(c), f.parity(c), k, acc);
  return std::sqrt(f.domain().volume() * acc.value());
}

inline double l2_norm(const ScalarField& f) {
  return std::sqrt(quadrature(f.domain(), [&](std::size_t i) { return f[i] * f[i]; }));
}

inline double l2_norm(const VectorField& f) {
  detail::KahanSum acc;
  for (int c = 0; c < f.components(); ++c) {
    auto v = f.comp(c);
    acc.add(quadrature(f.domain(), [&](std::size_t i) { return v[i] * v[i]; }));
  }
  return std::sqrt(acc.value());
}

}  // namespace qfluid
