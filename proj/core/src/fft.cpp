#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace qtd::detail {
namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  // FFTW_ESTIMATE keeps plans deterministic, FFTW_UNALIGNED lets us execute on
  // std::vector storage.
  fftw_plan get(int d, int n, int howmany, int sign) {
    std::lock_guard lock(mu);
    auto key = std::make_tuple(d, n, howmany, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    std::vector<int> dims(d, n);
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
    auto* buf = fftw_alloc_complex(total * howmany);
    fftw_plan plan = fftw_plan_many_dft(d, dims.data(), howmany, buf, nullptr, 1,
                                        static_cast<int>(total), buf, nullptr, 1,
                                        static_cast<int>(total),
                                        sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> data, int d, int n, int howmany, int sign) {
  fftw_plan plan = cache().get(d, n, howmany, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace qtd::detail
