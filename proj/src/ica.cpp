#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <random>

#include "forged/preprocess.hpp"

namespace forged {

namespace {

using Mat = Eigen::MatrixXd;

Matrix to_matrix(const Mat& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

Mat to_eigen(const Matrix& m) {
  Mat out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c);
  return out;
}

// W <- (W W^T)^{-1/2} W
Mat symmetric_decorrelation(const Mat& w) {
  Eigen::SelfAdjointEigenSolver<Mat> es(w * w.transpose());
  const Mat inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return inv_sqrt * w;
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols));
  }
  return to_matrix(to_eigen(a) * to_eigen(b));
}

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw Error(ErrorCode::ShapeMismatch, "matrix shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

IcaDecomposition fastica(const Recording& r, const IcaOptions& options) {
  const auto k = static_cast<Eigen::Index>(r.n_channels());
  const auto n = static_cast<Eigen::Index>(r.n_samples());
  if (n < 10 * k) {
    throw Error(ErrorCode::TooShort, fmt::format("FastICA needs >= {} samples for {} channels, got {}", 10 * k, k, n));
  }

  Mat x(k, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    auto row = r.data.row(static_cast<std::size_t>(c));
    for (Eigen::Index t = 0; t < n; ++t) x(c, t) = row[static_cast<std::size_t>(t)];
  }
  const Eigen::VectorXd means = x.rowwise().mean();
  x.colwise() -= means;

  const Mat cov = x * x.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const auto& evals = es.eigenvalues();
  if (evals.minCoeff() <= 1e-12 * std::max(evals.maxCoeff(), 1e-300)) {
    throw Error(ErrorCode::RankDeficient,
                fmt::format("covariance eigenvalues span [{}, {}]", evals.minCoeff(), evals.maxCoeff()));
  }
  const Mat whitening = evals.cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Mat z = whitening * x;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat w(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = gauss(rng);
  w = symmetric_decorrelation(w);

  IcaDecomposition d;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (d.iterations = 1; d.iterations <= options.max_iter; ++d.iterations) {
    const Mat wx = w * z;
    const Mat g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Mat w_new = g * z.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_decorrelation(w_new);
    // Rows are unit vectors; convergence when each row's direction is stable
    // up to sign.
    const double change = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = w_new;
    if (change < options.tol) {
      d.converged = true;
      break;
    }
  }
  if (!d.converged) d.iterations = options.max_iter;

  const Mat unmixing = w * whitening;
  const Mat mixing = es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * w.transpose();
  d.whitening = to_matrix(whitening);
  d.rotation = to_matrix(w);
  d.unmixing = to_matrix(unmixing);
  d.mixing = to_matrix(mixing);
  d.sources = to_matrix(w * z);
  d.channel_means.assign(means.data(), means.data() + k);
  return d;
}

double excess_kurtosis(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::Empty, "kurtosis of an empty sequence");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  if (m2 == 0.0) return 0.0;
  return m4 / (m2 * m2) - 3.0;
}

std::vector<std::size_t> rejected_components(const IcaDecomposition& d, const RejectionPolicy& policy) {
  const std::size_t k = d.sources.rows;
  std::vector<std::size_t> out;
  if (const auto* kt = std::get_if<rejection::KurtosisThreshold>(&policy)) {
    for (std::size_t c = 0; c < k; ++c) {
      std::span<const double> row(d.sources.values.data() + c * d.sources.cols, d.sources.cols);
      if (excess_kurtosis(row) > kt->threshold) out.push_back(c);
    }
  } else if (const auto* list = std::get_if<rejection::ExplicitList>(&policy)) {
    for (std::size_t c : list->indices) {
      if (c >= k) throw Error(ErrorCode::BadIndex, fmt::format("component {} of {}", c, k));
      out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

Recording reject_and_rebuild(const IcaDecomposition& d, const RejectionPolicy& policy, const Recording& like) {
  const std::size_t k = d.sources.rows;
  const std::size_t n = d.sources.cols;
  if (like.n_channels() != k || like.n_samples() != n || d.mixing.rows != k || d.mixing.cols != k) {
    throw Error(ErrorCode::ShapeMismatch, "decomposition does not match the template recording");
  }
  std::vector<bool> keep(k, true);
  for (std::size_t c : rejected_components(d, policy)) keep[c] = false;

  Recording out = like;
  std::vector<double> acc(n);
  for (std::size_t ch = 0; ch < k; ++ch) {
    std::fill(acc.begin(), acc.end(), d.channel_means[ch]);
    for (std::size_t c = 0; c < k; ++c) {
      if (!keep[c]) continue;
      const double a = d.mixing(ch, c);
      const double* src = d.sources.values.data() + c * n;
      for (std::size_t t = 0; t < n; ++t) acc[t] += a * src[t];
    }
    auto dst = out.data.row(ch);
    for (std::size_t t = 0; t < n; ++t) dst[t] = static_cast<float>(acc[t]);
  }
  return out;
}

}  // namespace forged
