#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qfluid/domain.hpp"
#include "qfluid/errors.hpp"

namespace qfluid {

// Parity tags drive the even/odd extension on wall domains and are ignored on
// periodic ones. Bit a of a component's mask set means "odd across the walls
// of axis a" (vanishes at those walls); clear means even (Neumann).
using ParityMask = std::uint8_t;

inline constexpr ParityMask parity_even_all = 0;
inline ParityMask parity_odd_all(int dim) {
  return static_cast<ParityMask>((1u << dim) - 1u);
}

namespace detail {

class FieldBase {
 public:
  const Domain& domain() const { return dom_; }
  int components() const { return ncomp_; }
  std::size_t npoints() const { return npts_; }
  std::size_t size() const { return npts_; }  // points per component

  std::span<double> comp(int c) {
    return {v_.data() + static_cast<std::size_t>(c) * npts_, npts_};
  }
  std::span<const double> comp(int c) const {
    return {v_.data() + static_cast<std::size_t>(c) * npts_, npts_};
  }
  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  ParityMask parity(int c) const { return odd_[c]; }
  void set_parity(int c, ParityMask m) { odd_[c] = m; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  bool operator==(const FieldBase&) const = default;

 protected:
  FieldBase() = default;
  FieldBase(const Domain& d, int ncomp, ParityMask default_parity)
      : dom_(d), ncomp_(ncomp), npts_(d.npoints()),
        v_(static_cast<std::size_t>(ncomp) * d.npoints(), 0.0),
        odd_(ncomp, default_parity) {}

  Domain dom_;
  int ncomp_ = 0;
  std::size_t npts_ = 0;
  std::vector<double> v_;
  std::vector<ParityMask> odd_;
};

}  // namespace detail

class ScalarField : public detail::FieldBase {
 public:
  ScalarField() = default;
  explicit ScalarField(const Domain& d) : FieldBase(d, 1, parity_even_all) {}

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

  template <class F>
  static ScalarField from_function(const Domain& d, F&& f) {
    ScalarField out(d);
    fill_nodal(d, [&](double x, double y) { return f(x, y); }, out.v_.data());
    return out;
  }

  template <class F>
  static void fill_nodal(const Domain& d, F&& f, double* dst) {
    if (d.dim == 1) {
      for (int i = 0; i < d.points(0); ++i) dst[i] = f(d.coord(0, i), 0.0);
    } else {
      for (int i = 0; i < d.points(0); ++i)
        for (int j = 0; j < d.points(1); ++j)
          dst[d.index(i, j)] = f(d.coord(0, i), d.coord(1, j));
    }
  }
};

class VectorField : public detail::FieldBase {
 public:
  VectorField() = default;
  // Velocity-like by default: odd across every wall (no-slip).
  explicit VectorField(const Domain& d)
      : FieldBase(d, d.dim, parity_odd_all(d.dim)) {}

  template <class F>
  static VectorField from_function(const Domain& d, F&& f) {
    VectorField out(d);
    for (int c = 0; c < d.dim; ++c) {
      auto span = out.comp(c);
      ScalarField::fill_nodal(
          d, [&](double x, double y) { return f(c, x, y); }, span.data());
    }
    return out;
  }
};

// Rank-2 field, components stored row-major: entry (i,j) = comp(i*dim + j).
// Index convention: first index is the derivative axis in gradients of
// vectors, i.e. grad_vec(u)(a,b) = d u_b / d x_a.
class TensorField : public detail::FieldBase {
 public:
  TensorField() = default;
  explicit TensorField(const Domain& d)
      : FieldBase(d, d.dim * d.dim, parity_even_all) {}

  std::span<double> entry(int i, int j) { return comp(i * dom_.dim + j); }
  std::span<const double> entry(int i, int j) const {
    return comp(i * dom_.dim + j);
  }
};

}  // namespace qfluid
