#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sge {

/// One periodic axis (a, b) resolved by M nodes x_j = a + j*h.
struct Axis {
  double a = 0.0;
  double b = 2.0 * std::numbers::pi;
  int modes = 16;

  double length() const { return b - a; }
  double mesh() const { return (b - a) / modes; }
  double node(int j) const { return a + j * mesh(); }

  /// Storage slot k in [0, M) holds mode l in {0..M/2-1, -M/2..-1}.
  int mode_of_slot(int k) const { return k < modes / 2 ? k : k - modes; }
  int slot_of_mode(int l) const { return l >= 0 ? l : l + modes; }

  /// Slot of the mode -l (the Nyquist mode maps onto itself).
  int mirror_slot(int k) const { return k == 0 ? 0 : modes - k; }

  double wavenumber(int l) const { return 2.0 * std::numbers::pi * l / length(); }

  bool same_interval(const Axis& o) const { return a == o.a && b == o.b; }
  bool operator==(const Axis&) const = default;
};

/**
 * Tensor-product periodic grid in one or two dimensions.
 *
 * Node values and Fourier coefficients share one row-major layout: the flat
 * index of (k1, k2) is k1 * M2 + k2. Along each axis the coefficient slot k
 * holds mode l = mode_of_slot(k), i.e. the ordering {0, ..., M/2-1, -M/2, ..., -1}
 * produced by the transform backend. All conversions between multi-index l and
 * storage go through Axis::mode_of_slot / slot_of_mode.
 */
class PeriodicGrid {
 public:
  PeriodicGrid() : PeriodicGrid(std::vector<Axis>{Axis{}}) {}

  explicit PeriodicGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) {
      throw std::invalid_argument("PeriodicGrid: dimension must be 1 or 2");
    }
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      const Axis& ax = axes_[i];
      if (ax.modes < 4 || ax.modes % 2 != 0) {
        throw std::invalid_argument("PeriodicGrid: axis " + std::to_string(i) +
                                    " needs an even mode count >= 4, got " +
                                    std::to_string(ax.modes));
      }
      if (!(ax.b > ax.a)) {
        throw std::invalid_argument("PeriodicGrid: axis " + std::to_string(i) +
                                    " needs b > a");
      }
    }
    build_symbols();
  }

  static PeriodicGrid line(double a, double b, int modes) {
    return PeriodicGrid({Axis{a, b, modes}});
  }
  static PeriodicGrid rectangle(Axis x, Axis y) { return PeriodicGrid({x, y}); }

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::vector<Axis>& axes() const { return axes_; }

  std::size_t size() const { return mu2_.size(); }

  /// Row-major extent of the trailing axis (1 in 1D).
  int stride0() const { return dim() == 2 ? axes_[1].modes : 1; }

  /// |mu_l|^2 and delta_l = sqrt(1 + |mu_l|^2) per storage slot.
  const std::vector<double>& mu_squared() const { return mu2_; }
  const std::vector<double>& delta() const { return delta_; }

  /// Flat slot of the mode -l for the mode stored at `slot`.
  std::size_t mirror(std::size_t slot) const { return mirror_[slot]; }

  /// Multi-index l of a storage slot.
  std::vector<int> mode_index(std::size_t slot) const {
    if (dim() == 1) return {axes_[0].mode_of_slot(static_cast<int>(slot))};
    const int m2 = axes_[1].modes;
    const int k1 = static_cast<int>(slot) / m2;
    const int k2 = static_cast<int>(slot) % m2;
    return {axes_[0].mode_of_slot(k1), axes_[1].mode_of_slot(k2)};
  }

  /// Storage slot of multi-index l; modes outside T_M are an error.
  std::size_t slot(std::initializer_list<int> l) const {
    if (static_cast<int>(l.size()) != dim()) {
      throw std::invalid_argument("PeriodicGrid::slot: index rank mismatch");
    }
    std::size_t flat = 0;
    int i = 0;
    for (int li : l) {
      const Axis& ax = axes_[static_cast<std::size_t>(i)];
      if (li < -ax.modes / 2 || li >= ax.modes / 2) {
        throw std::out_of_range("PeriodicGrid::slot: mode outside index set");
      }
      flat = flat * static_cast<std::size_t>(ax.modes) +
             static_cast<std::size_t>(ax.slot_of_mode(li));
      ++i;
    }
    return flat;
  }

  /// Node coordinates of flat node index j.
  std::vector<double> node(std::size_t j) const {
    if (dim() == 1) return {axes_[0].node(static_cast<int>(j))};
    const int m2 = axes_[1].modes;
    return {axes_[0].node(static_cast<int>(j) / m2), axes_[1].node(static_cast<int>(j) % m2)};
  }

  /// Product of mesh sizes: the quadrature weight of one node.
  double cell_volume() const {
    double v = 1.0;
    for (const auto& ax : axes_) v *= ax.mesh();
    return v;
  }

  bool same_domain(const PeriodicGrid& o) const {
    if (o.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
      if (!axis(i).same_interval(o.axis(i))) return false;
    }
    return true;
  }

  bool operator==(const PeriodicGrid& o) const { return axes_ == o.axes_; }

 private:
  void build_symbols() {
    std::size_t n = 1;
    for (const auto& ax : axes_) n *= static_cast<std::size_t>(ax.modes);
    mu2_.assign(n, 0.0);
    delta_.assign(n, 1.0);
    mirror_.assign(n, 0);
    if (dim() == 1) {
      const Axis& ax = axes_[0];
      for (int k = 0; k < ax.modes; ++k) {
        const double mu = ax.wavenumber(ax.mode_of_slot(k));
        mu2_[k] = mu * mu;
        mirror_[k] = static_cast<std::size_t>(ax.mirror_slot(k));
      }
    } else {
      const Axis& ax = axes_[0];
      const Axis& ay = axes_[1];
      for (int k1 = 0; k1 < ax.modes; ++k1) {
        const double m1 = ax.wavenumber(ax.mode_of_slot(k1));
        for (int k2 = 0; k2 < ay.modes; ++k2) {
          const double m2 = ay.wavenumber(ay.mode_of_slot(k2));
          const std::size_t s = static_cast<std::size_t>(k1 * ay.modes + k2);
          mu2_[s] = m1 * m1 + m2 * m2;
          mirror_[s] = static_cast<std::size_t>(ax.mirror_slot(k1) * ay.modes + ay.mirror_slot(k2));
        }
      }
    }
    for (std::size_t s = 0; s < n; ++s) delta_[s] = std::sqrt(1.0 + mu2_[s]);
  }

  std::vector<Axis> axes_;
  std::vector<double> mu2_;
  std::vector<double> delta_;
  std::vector<std::size_t> mirror_;
};

}  // namespace sge
