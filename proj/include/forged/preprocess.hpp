#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "forged/core.hpp"

namespace forged {

struct FirKernel {
  std::vector<double> taps;  // odd length, symmetric
  double low_hz = 0.0;
  double high_hz = 0.0;
  double sample_rate_hz = 0.0;

  std::size_t n_taps() const { return taps.size(); }
  std::size_t group_delay() const { return (taps.size() - 1) / 2; }
};

// Hamming-windowed sinc band-pass, built as the difference of two unit-DC
// low-pass kernels. Tap count is the smallest odd integer >= 3.3 fs / tw with
// tw = min(low, (fs/2 - high) / 4).
FirKernel design_bandpass(double sample_rate_hz, double low_hz = 0.5, double high_hz = 50.0);

// Linear-phase filtering with the group delay removed and reflection padding
// of (n_taps - 1) / 2 samples at both ends. Throws TooShort unless every
// channel is longer than the kernel.
Recording apply_zero_phase(const Recording& r, const FirKernel& k);

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix identity(std::size_t n);
double max_abs_diff(const Matrix& a, const Matrix& b);

// sources = unmixing * (data - channel_means), unmixing = rotation * whitening,
// mixing = unmixing^-1.
struct IcaDecomposition {
  Matrix whitening;       // K x K
  Matrix rotation;        // K x K, orthonormal rows (whitened-space unmixing)
  Matrix unmixing;        // K x K
  Matrix mixing;          // K x K
  Matrix sources;         // K x n_samples
  std::vector<double> channel_means;
  int iterations = 0;
  bool converged = false;
};

struct IcaOptions {
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

// Symmetric FastICA with the tanh contrast. Throws RankDeficient when the
// covariance is singular and TooShort when n_samples < 10 * n_channels. An
// exhausted iteration budget is reported via `converged == false`.
IcaDecomposition fastica(const Recording& r, const IcaOptions& options = {});

namespace rejection {
struct KeepAll {};
struct KurtosisThreshold {
  double threshold = 5.0;  // components with excess kurtosis above this are dropped
};
struct ExplicitList {
  std::vector<std::size_t> indices;
};
}  // namespace rejection

using RejectionPolicy = std::variant<rejection::KeepAll, rejection::KurtosisThreshold, rejection::ExplicitList>;

double excess_kurtosis(std::span<const double> x);

// Indices of the components the policy removes, ascending.
std::vector<std::size_t> rejected_components(const IcaDecomposition& d, const RejectionPolicy& policy);

// Remixes the kept sources; metadata (identity, rate, names) comes from `like`.
Recording reject_and_rebuild(const IcaDecomposition& d, const RejectionPolicy& policy, const Recording& like);

}  // namespace forged
