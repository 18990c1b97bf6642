#pragma once

// Seeded generators for property tests.

#include <covdist/covariance.hpp>
#include <covdist/timeseries.hpp>

#include <random>
#include <vector>

namespace testing_support {

using covdist::BlockToeplitzCov;
using covdist::SegmentMatrix;
using covdist::Vec3;

inline SegmentMatrix random_segment(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  SegmentMatrix s{Eigen::Matrix<double, 3, Eigen::Dynamic>(3, n), 1};
  for (Eigen::Index j = 0; j < n; ++j)
    for (int a = 0; a < 3; ++a) s.values(a, j) = g(rng);
  return s;
}

inline BlockToeplitzCov random_descriptor(std::mt19937_64& rng, Eigen::Index n = 8) {
  return covdist::build_block_toeplitz(random_segment(rng, n));
}

inline std::vector<Vec3> random_vectors(std::mt19937_64& rng, std::size_t count, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vec3> v(count);
  for (auto& x : v) x = {g(rng), g(rng), g(rng)};
  return v;
}

/// Entry-by-entry oracle: entry (a*N+i, b*N+j) from the raw segment.
inline Eigen::MatrixXd brute_force_toeplitz(const SegmentMatrix& s) {
  const Eigen::Index n = s.length();
  auto r = [&](int a, int b, Eigen::Index k) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l + k < n; ++l) acc += s.values(a, l) * s.values(b, l + k);
    return acc / static_cast<double>(n);
  };
  Eigen::MatrixXd m(3 * n, 3 * n);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(a * n + i, b * n + j) = j >= i ? r(a, b, j - i) : r(b, a, i - j);
  return m;
}

inline double elementwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return std::sqrt(s);
}

}  // namespace testing_support
