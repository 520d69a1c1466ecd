#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace sge {

using cplx = std::complex<double>;

/// Allocator handing out 64-byte aligned storage so every buffer matches the
/// alignment the FFTW plans were created with.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = ((n * sizeof(T) + alignment - 1) / alignment) * alignment;
    void* p = std::aligned_alloc(alignment, bytes == 0 ? alignment : bytes);
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using ComplexBuffer = std::vector<cplx, AlignedAllocator<cplx>>;

namespace fft {

namespace detail {
inline thread_local std::uint64_t transform_count = 0;
}  // namespace detail

/// Number of transforms executed by the calling thread since the last reset.
inline std::uint64_t transform_count() { return detail::transform_count; }
inline void reset_transform_count() { detail::transform_count = 0; }

/// Forward and backward out-of-place c2c plans for one grid shape.
class PlanPair {
 public:
  explicit PlanPair(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    ComplexBuffer in(n), out(n);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    const int rank = static_cast<int>(dims.size());
    forward_ = fftw_plan_dft(rank, dims.data(), pin, pout, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(rank, dims.data(), pin, pout, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw std::runtime_error("fftw: plan creation failed");
    }
    size_ = n;
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
  ~PlanPair() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return size_; }

  /// out_l = (1/N) sum_j in_j exp(-i mu_l (x_j - a))
  void forward(std::span<const cplx> in, std::span<cplx> out) const {
    check(in, out);
    fftw_execute_dft(forward_, const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& c : out) c *= scale;
    ++detail::transform_count;
  }

  /// out_j = sum_l in_l exp(i mu_l (x_j - a))
  void inverse(std::span<const cplx> in, std::span<cplx> out) const {
    check(in, out);
    fftw_execute_dft(backward_, const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    ++detail::transform_count;
  }

 private:
  void check(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != size_ || out.size() != size_) {
      throw std::invalid_argument("fftw: buffer size does not match plan");
    }
    if (reinterpret_cast<std::uintptr_t>(in.data()) % AlignedAllocator<cplx>::alignment != 0 ||
        reinterpret_cast<std::uintptr_t>(out.data()) % AlignedAllocator<cplx>::alignment != 0) {
      throw std::invalid_argument("fftw: buffers must be 64-byte aligned");
    }
    if (static_cast<const void*>(in.data()) == static_cast<const void*>(out.data())) {
      throw std::invalid_argument("fftw: plans are out-of-place");
    }
  }

  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::size_t size_ = 0;
};

/// Shared plans per grid shape. FFTW planning is not thread-safe, execution is.
inline std::shared_ptr<const PlanPair> plans_for(const PeriodicGrid& grid) {
  static std::mutex mutex;
  static std::map<std::vector<int>, std::shared_ptr<const PlanPair>> cache;
  std::vector<int> dims;
  for (const auto& ax : grid.axes()) dims.push_back(ax.modes);
  std::lock_guard lock(mutex);
  auto it = cache.find(dims);
  if (it != cache.end()) return it->second;
  auto plans = std::make_shared<const PlanPair>(dims);
  cache.emplace(dims, plans);
  return plans;
}

}  // namespace fft
}  // namespace sge
