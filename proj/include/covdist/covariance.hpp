#pragma once

// Sample moments and block-Toeplitz lag-correlation descriptors.
//
// A descriptor for a 3 x N window is the 3N x 3N matrix made of nine N x N
// Toeplitz blocks. Block (a, b) carries r_k^{ab} on its k-th superdiagonal and
// r_k^{ba} on its k-th subdiagonal, with
//
//   r_k^{ab} = (1/N) * sum_{l=0}^{N-k-1} x_l^a x_{l+k}^b ,  0 <= k <= N-1.
//
// The lag table (9N reals) fully determines the matrix, so descriptors are
// always built from a table and the dense matrix is derived from it.

#include <covdist/core.hpp>
#include <covdist/timeseries.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace covdist {

// ---------------------------------------------------------------------------
// first and second sample moments
// ---------------------------------------------------------------------------

inline Eigen::VectorXd sample_mean(std::span<const Eigen::VectorXd> vectors) {
  if (vectors.empty()) throw ValidationError("sample_mean: empty input");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(vectors.front().size());
  for (const auto& v : vectors) {
    if (v.size() != mu.size()) throw ValidationError("sample_mean: inconsistent dimensions");
    mu += v;
  }
  return mu / static_cast<double>(vectors.size());
}

/// Maximum-likelihood (1/N) sample covariance.
inline Eigen::MatrixXd sample_covariance(std::span<const Eigen::VectorXd> vectors) {
  if (vectors.empty()) throw ValidationError("sample_covariance: empty input");
  const Eigen::VectorXd mu = sample_mean(vectors);
  const Eigen::Index d = mu.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& v : vectors) {
    const Eigen::VectorXd c = v - mu;
    // upper triangle, mirrored below so the result is exactly symmetric
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i <= j; ++i) cov(i, j) += c(i) * c(j);
  }
  cov /= static_cast<double>(vectors.size());
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = j + 1; i < d; ++i) cov(i, j) = cov(j, i);
  return cov;
}

// ---------------------------------------------------------------------------
// lag correlations
// ---------------------------------------------------------------------------

enum class LagNormalization {
  biased,    // 1/N for every lag (default)
  unbiased,  // 1/(N-k)
};

namespace detail {
inline double lag_sum(const Eigen::Matrix<double, 3, Eigen::Dynamic>& x, int a, int b,
                      Eigen::Index k) {
  const Eigen::Index n = x.cols();
  double s = 0.0;
  for (Eigen::Index l = 0; l + k < n; ++l) s += x(a, l) * x(b, l + k);
  return s;
}
inline double lag_divisor(Eigen::Index n, Eigen::Index k, LagNormalization norm) {
  return static_cast<double>(norm == LagNormalization::biased ? n : n - k);
}
}  // namespace detail

inline double lag_correlation(const SegmentMatrix& segment, Axis a, Axis b, Eigen::Index k,
                              LagNormalization norm = LagNormalization::biased) {
  const Eigen::Index n = segment.length();
  if (k < 0 || k >= n) {
    throw ValidationError("lag " + std::to_string(k) + " out of range [0, " + std::to_string(n - 1) +
                          "]");
  }
  return detail::lag_sum(segment.values, index(a), index(b), k) / detail::lag_divisor(n, k, norm);
}

/// r[a][b][k] for a, b in {x, y, z} and k in [0, N).
class LagTable {
 public:
  LagTable() = default;
  explicit LagTable(Eigen::Index n) : n_(n), r_(Eigen::VectorXd::Zero(9 * n)) {
    if (n < 1) throw ValidationError("block size must be >= 1");
  }

  Eigen::Index block_size() const { return n_; }

  double operator()(int a, int b, Eigen::Index k) const { return r_((a * 3 + b) * n_ + k); }
  double& operator()(int a, int b, Eigen::Index k) { return r_((a * 3 + b) * n_ + k); }
  double operator()(Axis a, Axis b, Eigen::Index k) const { return (*this)(index(a), index(b), k); }

  const Eigen::VectorXd& values() const { return r_; }
  Eigen::VectorXd& values() { return r_; }

  friend bool operator==(const LagTable& l, const LagTable& r) {
    return l.n_ == r.n_ && l.r_ == r.r_;
  }

 private:
  Eigen::Index n_{0};
  Eigen::VectorXd r_;
};

inline LagTable lag_table(const SegmentMatrix& segment,
                          LagNormalization norm = LagNormalization::biased) {
  const Eigen::Index n = segment.length();
  if (n < 1) throw ValidationError("segment has no columns");
  LagTable t(n);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (Eigen::Index k = 0; k < n; ++k)
        t(a, b, k) = detail::lag_sum(segment.values, a, b, k) / detail::lag_divisor(n, k, norm);
  return t;
}

// ---------------------------------------------------------------------------
// block-Toeplitz descriptor
// ---------------------------------------------------------------------------

class BlockToeplitzCov {
 public:
  explicit BlockToeplitzCov(LagTable lags) : lags_(std::move(lags)) {
    const Eigen::Index n = lags_.block_size();
    if (n < 1) throw ValidationError("descriptor block size must be >= 1");
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (lags_(a, b, 0) != lags_(b, a, 0)) {
          throw ValidationError("lag table violates r_0^{ab} == r_0^{ba}");
        }
    assemble();
  }

  /// scale * identity, expressed as a lag table.
  static BlockToeplitzCov identity(Eigen::Index n, double scale = 1.0) {
    LagTable t(n);
    for (int a = 0; a < 3; ++a) t(a, a, 0) = scale;
    return BlockToeplitzCov(std::move(t));
  }

  Eigen::Index block_size() const { return lags_.block_size(); }
  Eigen::Index dim() const { return 3 * lags_.block_size(); }
  const Eigen::MatrixXd& matrix() const { return dense_; }
  const LagTable& lags() const { return lags_; }

  Eigen::MatrixXd block(Axis a, Axis b) const {
    const Eigen::Index n = block_size();
    return dense_.block(index(a) * n, index(b) * n, n, n);
  }

  BlockToeplitzCov scaled(double c) const {
    LagTable t = lags_;
    t.values() *= c;
    return BlockToeplitzCov(std::move(t));
  }

 private:
  void assemble() {
    const Eigen::Index n = lags_.block_size();
    dense_.resize(3 * n, 3 * n);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j)
            dense_(a * n + i, b * n + j) = j >= i ? lags_(a, b, j - i) : lags_(b, a, i - j);
  }

  LagTable lags_;
  Eigen::MatrixXd dense_;
};

/// O(9 N^2) per segment.
inline BlockToeplitzCov build_block_toeplitz(const SegmentMatrix& segment,
                                             LagNormalization norm = LagNormalization::biased) {
  return BlockToeplitzCov(lag_table(segment, norm));
}

/// Entrywise arithmetic mean; block-Toeplitz structure is closed under it.
inline BlockToeplitzCov euclidean_mean(std::span<const BlockToeplitzCov> descriptors) {
  if (descriptors.empty()) throw ValidationError("euclidean_mean: empty input");
  const Eigen::Index n = descriptors.front().block_size();
  LagTable sum(n);
  for (const auto& d : descriptors) {
    if (d.block_size() != n) {
      throw ValidationError("euclidean_mean: mismatched block sizes (" + std::to_string(n) + " vs " +
                            std::to_string(d.block_size()) + ")");
    }
    sum.values() += d.lags().values();
  }
  sum.values() /= static_cast<double>(descriptors.size());
  return BlockToeplitzCov(std::move(sum));
}

/// Running sum of lag tables over windows; mean() divides once at the end so
/// the result matches euclidean_mean over the same descriptors exactly.
class DescriptorAccumulator {
 public:
  DescriptorAccumulator() = default;
  explicit DescriptorAccumulator(Eigen::Index n) : sum_(n) {}

  void add(const LagTable& t) {
    if (t.block_size() != sum_.block_size()) throw ValidationError("accumulator block size mismatch");
    sum_.values() += t.values();
    ++count_;
  }
  void add(const BlockToeplitzCov& d) { add(d.lags()); }

  std::size_t count() const { return count_; }
  Eigen::Index block_size() const { return sum_.block_size(); }

  BlockToeplitzCov mean() const {
    if (count_ == 0) throw ValidationError("accumulator holds no windows");
    LagTable t = sum_;
    t.values() /= static_cast<double>(count_);
    return BlockToeplitzCov(std::move(t));
  }

 private:
  LagTable sum_;
  std::size_t count_{0};
};

// ---------------------------------------------------------------------------
// SPD diagnostics
// ---------------------------------------------------------------------------

struct SpdDiagnostics {
  double min_eigenvalue{0.0};
  bool is_positive_definite{false};
  double symmetry_residual{0.0};
  double threshold{0.0};
};

inline constexpr double kDefaultPdTolerance = 1e-10;

/// The tolerance is relative to the largest diagonal entry.
inline SpdDiagnostics spd_check(const Eigen::MatrixXd& m, double tolerance = kDefaultPdTolerance) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ValidationError("spd_check: matrix must be square");
  SpdDiagnostics out;
  out.symmetry_residual = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (out.symmetry_residual > 1e-9) {
    throw ValidationError("spd_check: matrix is not symmetric (residual " +
                          std::to_string(out.symmetry_residual) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  const double scale = std::max(0.0, m.diagonal().maxCoeff());
  out.threshold = tolerance * scale;
  out.is_positive_definite = out.min_eigenvalue > out.threshold;
  return out;
}

inline SpdDiagnostics spd_check(const BlockToeplitzCov& d, double tolerance = kDefaultPdTolerance) {
  return spd_check(d.matrix(), tolerance);
}

}  // namespace covdist
