#include "forged/fft.hpp"

#include <fftw3.h>
#include <mutex>
#include <new>
#include <utility>

namespace forged {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

ComplexFft::ComplexFft(std::size_t n, Direction dir) : n_(n) {
  data_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * (n == 0 ? 1 : n)));
  if (!data_) throw std::bad_alloc();
  std::lock_guard lock(planner_mutex());
  auto* buf = reinterpret_cast<fftw_complex*>(data_);
  plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                           FFTW_ESTIMATE);
  if (!plan_) {
    fftw_free(data_);
    throw std::bad_alloc();
  }
}

ComplexFft::~ComplexFft() { release(); }

ComplexFft::ComplexFft(ComplexFft&& o) noexcept
    : n_(std::exchange(o.n_, 0)), data_(std::exchange(o.data_, nullptr)), plan_(std::exchange(o.plan_, nullptr)) {}

ComplexFft& ComplexFft::operator=(ComplexFft&& o) noexcept {
  if (this != &o) {
    release();
    n_ = std::exchange(o.n_, 0);
    data_ = std::exchange(o.data_, nullptr);
    plan_ = std::exchange(o.plan_, nullptr);
  }
  return *this;
}

void ComplexFft::release() {
  if (plan_) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    plan_ = nullptr;
  }
  if (data_) {
    fftw_free(data_);
    data_ = nullptr;
  }
}

void ComplexFft::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

std::vector<cplx> fft(std::span<const cplx> x) {
  ComplexFft f(x.size(), ComplexFft::Direction::Forward);
  std::copy(x.begin(), x.end(), f.buffer().begin());
  f.execute();
  return {f.buffer().begin(), f.buffer().end()};
}

std::vector<cplx> ifft(std::span<const cplx> x) {
  ComplexFft f(x.size(), ComplexFft::Direction::Inverse);
  std::copy(x.begin(), x.end(), f.buffer().begin());
  f.execute();
  std::vector<cplx> out(f.buffer().begin(), f.buffer().end());
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace forged
