#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>

#include "fft.hpp"
#include "grid.hpp"

namespace sge {

using GridPtr = std::shared_ptr<const PeriodicGrid>;

inline GridPtr make_grid(PeriodicGrid g) { return std::make_shared<const PeriodicGrid>(std::move(g)); }

class DomainMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Complex field on a PeriodicGrid held as node values, Fourier coefficients,
 * or both. The representation that is not current is rebuilt on first access;
 * const accessors may therefore transform, so a field that is not yet
 * synchronized must not be read from two threads at once. Once both
 * representations are valid, concurrent reads are safe.
 */
class SpectralField {
 public:
  SpectralField() = default;

  explicit SpectralField(GridPtr grid)
      : grid_(std::move(grid)),
        values_(grid_->size(), cplx{}),
        coeffs_(grid_->size(), cplx{}),
        values_valid_(true),
        coeffs_valid_(true) {}

  static SpectralField from_values(GridPtr grid, std::span<const cplx> values) {
    SpectralField f(std::move(grid));
    if (values.size() != f.size()) throw std::invalid_argument("SpectralField: value count != grid size");
    std::copy(values.begin(), values.end(), f.values_.begin());
    f.coeffs_valid_ = false;
    return f;
  }

  static SpectralField from_coefficients(GridPtr grid, std::span<const cplx> coeffs) {
    SpectralField f(std::move(grid));
    if (coeffs.size() != f.size()) throw std::invalid_argument("SpectralField: coefficient count != grid size");
    std::copy(coeffs.begin(), coeffs.end(), f.coeffs_.begin());
    f.values_valid_ = false;
    return f;
  }

  /// Samples fn at every node; fn receives the node coordinates (1 or 2 entries).
  static SpectralField sample(GridPtr grid, const std::function<cplx(std::span<const double>)>& fn) {
    SpectralField f(std::move(grid));
    for (std::size_t j = 0; j < f.size(); ++j) {
      const auto x = f.grid_->node(j);
      f.values_[j] = fn(x);
    }
    f.coeffs_valid_ = false;
    return f;
  }

  const PeriodicGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return grid_ ? grid_->size() : 0; }

  bool values_valid() const { return values_valid_; }
  bool coefficients_valid() const { return coeffs_valid_; }

  const ComplexBuffer& values() const {
    if (!values_valid_) {
      fft::plans_for(*grid_)->inverse(coeffs_, values_);
      values_valid_ = true;
    }
    return values_;
  }

  const ComplexBuffer& coefficients() const {
    if (!coeffs_valid_) {
      fft::plans_for(*grid_)->forward(values_, coeffs_);
      coeffs_valid_ = true;
    }
    return coeffs_;
  }

  /// Write access; the other representation becomes stale.
  ComplexBuffer& mutable_values() {
    values();
    coeffs_valid_ = false;
    return values_;
  }
  ComplexBuffer& mutable_coefficients() {
    coefficients();
    values_valid_ = false;
    return coeffs_;
  }

  /// Drops one representation without touching the other (used by steppers
  /// that overwrite a buffer wholesale).
  ComplexBuffer& overwrite_values() {
    values_valid_ = true;
    coeffs_valid_ = false;
    return values_;
  }
  ComplexBuffer& overwrite_coefficients() {
    coeffs_valid_ = true;
    values_valid_ = false;
    return coeffs_;
  }

  cplx coefficient(std::initializer_list<int> l) const { return coefficients()[grid_->slot(l)]; }

 private:
  GridPtr grid_;
  mutable ComplexBuffer values_;
  mutable ComplexBuffer coeffs_;
  mutable bool values_valid_ = false;
  mutable bool coeffs_valid_ = false;
};

/// Returns a copy with coefficients computed from node values.
inline SpectralField forward_transform(const SpectralField& field) {
  if (!field.values_valid()) throw std::invalid_argument("forward_transform: values not valid");
  SpectralField out = SpectralField::from_values(field.grid_ptr(), field.values());
  out.coefficients();
  return out;
}

/// Returns a copy with node values computed from coefficients.
inline SpectralField inverse_transform(const SpectralField& field) {
  if (!field.coefficients_valid()) throw std::invalid_argument("inverse_transform: coefficients not valid");
  SpectralField out = SpectralField::from_coefficients(field.grid_ptr(), field.coefficients());
  out.values();
  return out;
}

/// <nabla>^power with power in {-1, +1}: multiplies coefficient l by delta_l^power.
inline SpectralField apply_nabla_bracket(const SpectralField& field, int power) {
  if (power != 1 && power != -1) throw std::invalid_argument("apply_nabla_bracket: power must be +1 or -1");
  SpectralField out = SpectralField::from_coefficients(field.grid_ptr(), field.coefficients());
  auto& c = out.overwrite_coefficients();
  const auto& delta = field.grid().delta();
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = power > 0 ? c[s] * delta[s] : c[s] / delta[s];
  return out;
}

/// Coefficient-space H^m norm: (sum_l (1+|mu_l|^2)^m |c_l|^2)^(1/2), no domain-measure factor.
inline double sobolev_norm(std::span<const cplx> coeffs, const PeriodicGrid& grid, double m) {
  if (m < 0.0) throw std::invalid_argument("sobolev_norm: m must be nonnegative");
  const auto& mu2 = grid.mu_squared();
  double sum = 0.0;
  for (std::size_t s = 0; s < coeffs.size(); ++s) {
    const double weight = m == 0.0 ? 1.0 : (m == 1.0 ? 1.0 + mu2[s] : std::pow(1.0 + mu2[s], m));
    sum += weight * std::norm(coeffs[s]);
  }
  return std::sqrt(sum);
}

inline double sobolev_norm(const SpectralField& field, double m) {
  return sobolev_norm(field.coefficients(), field.grid(), m);
}

/// Projects (coarser target) or zero-pads (finer target) onto another grid of
/// the same domain. Every mode of T_M shared by both grids is copied verbatim,
/// including a Nyquist coefficient at -M/2.
inline SpectralField resample(const SpectralField& field, GridPtr target) {
  const PeriodicGrid& src = field.grid();
  if (!src.same_domain(*target)) {
    throw DomainMismatchError("resample: source and target grids have different domains");
  }
  if (src == *target) return SpectralField::from_coefficients(target, field.coefficients());
  const auto& in = field.coefficients();
  SpectralField out(target);
  auto& c = out.overwrite_coefficients();
  auto shared = [](const Axis& from, const Axis& to, int k_to) -> int {
    const int l = to.mode_of_slot(k_to);
    if (l < -from.modes / 2 || l >= from.modes / 2) return -1;
    return from.slot_of_mode(l);
  };
  if (src.dim() == 1) {
    for (int k = 0; k < target->axis(0).modes; ++k) {
      const int ks = shared(src.axis(0), target->axis(0), k);
      c[static_cast<std::size_t>(k)] = ks < 0 ? cplx{} : in[static_cast<std::size_t>(ks)];
    }
  } else {
    const int tm1 = target->axis(0).modes, tm2 = target->axis(1).modes;
    const int sm2 = src.axis(1).modes;
    for (int k1 = 0; k1 < tm1; ++k1) {
      const int s1 = shared(src.axis(0), target->axis(0), k1);
      for (int k2 = 0; k2 < tm2; ++k2) {
        const int s2 = shared(src.axis(1), target->axis(1), k2);
        const auto t = static_cast<std::size_t>(k1 * tm2 + k2);
        c[t] = (s1 < 0 || s2 < 0) ? cplx{} : in[static_cast<std::size_t>(s1 * sm2 + s2)];
      }
    }
  }
  return out;
}

/// alpha*u + beta*v in coefficient space.
inline SpectralField combine(cplx alpha, const SpectralField& u, cplx beta, const SpectralField& v) {
  if (!(u.grid() == v.grid())) throw DomainMismatchError("combine: grids differ");
  const auto& cu = u.coefficients();
  const auto& cv = v.coefficients();
  SpectralField out(u.grid_ptr());
  auto& c = out.overwrite_coefficients();
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = alpha * cu[s] + beta * cv[s];
  return out;
}

inline SpectralField operator-(const SpectralField& u, const SpectralField& v) { return combine(1.0, u, -1.0, v); }
inline SpectralField operator+(const SpectralField& u, const SpectralField& v) { return combine(1.0, u, 1.0, v); }

/// Largest |Im| over node values.
inline double max_imag(const SpectralField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v.imag()));
  return m;
}

}  // namespace sge
