#pragma once

// Thin FFTW3 wrapper with a per-size plan cache, in double and in x87
// extended precision (the latter only for the split-step inner loop).
//
// Plans are created with FFTW_ESTIMATE so that the chosen algorithm (and
// hence round-off) is reproducible run to run. Planning is serialized by a
// mutex; execution uses the new-array interface, which FFTW guarantees to be
// thread safe.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <type_traits>

#include <fftw3.h>

namespace displab::detail {

template <class Real>
struct FftwApi;

template <>
struct FftwApi<double> {
  using complex_t = fftw_complex;
  using plan_t = fftw_plan;
  static complex_t* alloc(std::size_t n) { return fftw_alloc_complex(n); }
  static void free(void* p) { fftw_free(p); }
  static plan_t plan(int n, complex_t* a, complex_t* b, int sign, unsigned flags) {
    return fftw_plan_dft_1d(n, a, b, sign, flags);
  }
  static void destroy(plan_t p) { fftw_destroy_plan(p); }
  static void execute(plan_t p, complex_t* a, complex_t* b) { fftw_execute_dft(p, a, b); }
};

template <>
struct FftwApi<long double> {
  using complex_t = fftwl_complex;
  using plan_t = fftwl_plan;
  static complex_t* alloc(std::size_t n) { return fftwl_alloc_complex(n); }
  static void free(void* p) { fftwl_free(p); }
  static plan_t plan(int n, complex_t* a, complex_t* b, int sign, unsigned flags) {
    return fftwl_plan_dft_1d(n, a, b, sign, flags);
  }
  static void destroy(plan_t p) { fftwl_destroy_plan(p); }
  static void execute(plan_t p, complex_t* a, complex_t* b) { fftwl_execute_dft(p, a, b); }
};

template <class Real>
class BasicFftPlanCache {
  using Api = FftwApi<Real>;
  using Cplx = std::complex<Real>;

public:
  static BasicFftPlanCache& instance() {
    static BasicFftPlanCache cache;
    return cache;
  }

  BasicFftPlanCache(const BasicFftPlanCache&) = delete;
  BasicFftPlanCache& operator=(const BasicFftPlanCache&) = delete;

  // Unnormalized forward DFT: out_k = sum_j in_j exp(-2 pi i j k / n).
  void forward(std::span<const Cplx> in, std::span<Cplx> out) { execute(in, out, FFTW_FORWARD); }

  // Unnormalized backward DFT: out_j = sum_k in_k exp(+2 pi i j k / n).
  void backward(std::span<const Cplx> in, std::span<Cplx> out) { execute(in, out, FFTW_BACKWARD); }

private:
  using RawPlan = std::remove_pointer_t<typename Api::plan_t>;
  struct PlanDeleter {
    void operator()(RawPlan* p) const { Api::destroy(p); }
  };
  using Plan = std::unique_ptr<RawPlan, PlanDeleter>;

  BasicFftPlanCache() = default;

  typename Api::plan_t plan_for(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second.get();

    auto* a = Api::alloc(n);
    auto* b = Api::alloc(n);
    if (a == nullptr || b == nullptr) {
      Api::free(a);
      Api::free(b);
      throw std::bad_alloc();
    }
    auto p = Api::plan(static_cast<int>(n), a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    Api::free(a);
    Api::free(b);
    if (p == nullptr) throw std::runtime_error("fftw: plan creation failed");
    auto [it, ok] = plans_.emplace(key, Plan(p));
    return it->second.get();
  }

  void execute(std::span<const Cplx> in, std::span<Cplx> out, int sign) {
    if (in.size() != out.size()) throw std::invalid_argument("fft: size mismatch");
    if (in.empty()) return;
    auto p = plan_for(in.size(), sign);
    // FFTW does not modify the input of an out-of-place c2c transform.
    using C = typename Api::complex_t;
    auto* src = const_cast<C*>(reinterpret_cast<const C*>(in.data()));
    Api::execute(p, src, reinterpret_cast<C*>(out.data()));
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, Plan> plans_;
};

using FftPlanCache = BasicFftPlanCache<double>;
using FftPlanCacheLong = BasicFftPlanCache<long double>;

}  // namespace displab::detail
