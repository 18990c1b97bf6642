#pragma once

// Frobenius distances between descriptors, distance matrices, seeded
// random-pair sampling and fixed-bin histograms.

#include <covdist/core.hpp>
#include <covdist/covariance.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace covdist {

struct StateDescriptor {
  std::string label;
  std::optional<double> scalar_tag;  // e.g. temperature
  BlockToeplitzCov matrix;
};

/// Symmetric, zero diagonal, nonnegative.
class DistanceMatrix {
 public:
  DistanceMatrix(std::vector<std::string> labels, Eigen::MatrixXd values)
      : labels_(std::move(labels)), values_(std::move(values)) {
    const auto s = static_cast<Eigen::Index>(labels_.size());
    if (values_.rows() != s || values_.cols() != s) {
      throw ValidationError("distance matrix shape does not match label count");
    }
    for (Eigen::Index i = 0; i < s; ++i) {
      if (values_(i, i) != 0.0) throw ValidationError("distance matrix diagonal must be zero");
      for (Eigen::Index j = 0; j < s; ++j) {
        if (!(values_(i, j) >= 0.0)) throw ValidationError("distance matrix entries must be >= 0");
        if (values_(i, j) != values_(j, i)) throw ValidationError("distance matrix must be symmetric");
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd values_;
};

enum class DistancePath {
  dense,      // elementwise over the 3N x 3N matrices (reference)
  lag_table,  // weighted sum over lag differences
};

inline void require_same_block_size(const BlockToeplitzCov& a, const BlockToeplitzCov& b) {
  if (a.block_size() != b.block_size()) {
    throw ValidationError("dimension mismatch: block sizes " + std::to_string(a.block_size()) +
                          " and " + std::to_string(b.block_size()));
  }
}

/// ||A - B||_F over the dense matrices.
inline double frobenius_distance(const BlockToeplitzCov& a, const BlockToeplitzCov& b) {
  require_same_block_size(a, b);
  return std::sqrt((a.matrix() - b.matrix()).squaredNorm());
}

/// Same quantity from the lag tables. Lag 0 of block (a,b) occurs N times on
/// its diagonal; lag k > 0 of r^{ab} occurs N-k times above the diagonal of
/// block (a,b) and N-k times below the diagonal of block (b,a).
inline double frobenius_distance_lagged(const BlockToeplitzCov& a, const BlockToeplitzCov& b) {
  require_same_block_size(a, b);
  const Eigen::Index n = a.block_size();
  const LagTable& ra = a.lags();
  const LagTable& rb = b.lags();
  double sum = 0.0;
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      const double d0 = ra(p, q, 0) - rb(p, q, 0);
      sum += static_cast<double>(n) * d0 * d0;
      for (Eigen::Index k = 1; k < n; ++k) {
        const double dk = ra(p, q, k) - rb(p, q, k);
        sum += 2.0 * static_cast<double>(n - k) * dk * dk;
      }
    }
  }
  return std::sqrt(sum);
}

inline double frobenius_distance(const BlockToeplitzCov& a, const BlockToeplitzCov& b,
                                 DistancePath path) {
  return path == DistancePath::dense ? frobenius_distance(a, b) : frobenius_distance_lagged(a, b);
}

inline DistanceMatrix distance_matrix(std::span<const StateDescriptor> states,
                                      DistancePath path = DistancePath::dense) {
  if (states.empty()) throw ValidationError("distance_matrix: no descriptors");
  std::set<std::string> seen;
  std::vector<std::string> labels;
  for (const auto& s : states) {
    if (!seen.insert(s.label).second) throw ValidationError("duplicate state label '" + s.label + "'");
    if (s.matrix.block_size() != states.front().matrix.block_size()) {
      throw ValidationError("distance_matrix: state '" + s.label + "' has a different block size");
    }
    labels.push_back(s.label);
  }
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = frobenius_distance(states[i].matrix, states[j].matrix, path);
      d(j, i) = d(i, j);
    }
  return DistanceMatrix(std::move(labels), std::move(d));
}

/// Draws n_pairs (a_i, b_j) uniformly with replacement. When both spans view
/// the same collection the two particles of a pair are distinct.
inline std::vector<double> sample_pair_distances(std::span<const BlockToeplitzCov> a,
                                                 std::span<const BlockToeplitzCov> b,
                                                 std::size_t n_pairs, std::uint64_t seed,
                                                 DistancePath path = DistancePath::dense) {
  if (a.empty() || b.empty()) throw ValidationError("sample_pair_distances: empty collection");
  if (n_pairs == 0) throw ValidationError("sample_pair_distances: n_pairs must be >= 1");
  const bool same = a.data() == b.data() && a.size() == b.size();
  if (same && a.size() < 2) {
    throw ValidationError("sample_pair_distances: same-collection sampling needs >= 2 particles");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - (same ? 2 : 1));
  std::vector<double> out;
  out.reserve(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const std::size_t i = pick_a(rng);
    std::size_t j = pick_b(rng);
    if (same && j >= i) ++j;
    out.push_back(frobenius_distance(a[i], b[j], path));
  }
  return out;
}

struct DistanceHistogram {
  std::vector<double> bin_edges;  // n_bins + 1, ascending
  std::vector<std::uint64_t> counts;
  std::uint64_t sample_count{0};
  std::uint64_t out_of_range{0};
  std::pair<std::string, std::string> label_pair;
  std::uint64_t rng_seed{0};
  bool degenerate{false};
};

/// Uniform bins over [lo, hi]. A value on an interior edge goes to the lower
/// bin; lo goes to the first bin. Samples outside an explicit range are
/// counted in out_of_range and excluded from sample_count.
inline DistanceHistogram histogram(std::span<const double> samples, std::size_t n_bins,
                                   std::optional<std::pair<double, double>> range = std::nullopt) {
  if (samples.empty()) throw ValidationError("histogram: no samples");
  if (n_bins == 0) throw ValidationError("histogram: n_bins must be >= 1");
  DistanceHistogram h;
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(hi > lo)) throw ValidationError("histogram: range must satisfy lo < hi");
  } else {
    auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
  }
  if (!range && hi == lo) {
    // all samples equal: one bin around the common value
    const double half = std::max(std::abs(lo), 1.0) * 1e-9;
    h.bin_edges = {lo - half, lo + half};
    h.counts = {samples.size()};
    h.sample_count = samples.size();
    h.degenerate = true;
    return h;
  }
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(n_bins, 0);
  for (double x : samples) {
    if (x < lo || x > hi) {
      ++h.out_of_range;
      continue;
    }
    auto it = std::lower_bound(h.bin_edges.begin() + 1, h.bin_edges.end(), x);
    auto bin = static_cast<std::size_t>(it - (h.bin_edges.begin() + 1));
    ++h.counts[std::min(bin, n_bins - 1)];
    ++h.sample_count;
  }
  return h;
}

}  // namespace covdist
