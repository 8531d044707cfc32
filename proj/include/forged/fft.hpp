#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace forged {

using cplx = std::complex<double>;

// In-place complex FFT of a fixed size that owns its aligned buffer. Instances
// are not shareable across threads; create one per worker. Planning is
// serialized internally so instances may be constructed concurrently.
class ComplexFft {
 public:
  enum class Direction { Forward, Inverse };

  ComplexFft(std::size_t n, Direction dir);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;
  ComplexFft(ComplexFft&&) noexcept;
  ComplexFft& operator=(ComplexFft&&) noexcept;

  std::size_t size() const { return n_; }
  std::span<cplx> buffer() { return {data_, n_}; }
  // Unnormalized transform of buffer() in place.
  void execute();

 private:
  void release();

  std::size_t n_ = 0;
  cplx* data_ = nullptr;
  void* plan_ = nullptr;
};

// Unnormalized forward DFT.
std::vector<cplx> fft(std::span<const cplx> x);
// Inverse DFT scaled by 1/n.
std::vector<cplx> ifft(std::span<const cplx> x);

std::size_t next_pow2(std::size_t n);

}  // namespace forged
