#pragma once

// Low-dimensional embedding of a distance matrix and simple correlation
// statistics for relating embedding coordinates to physical properties.

#include <covdist/core.hpp>
#include <covdist/distance.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace covdist {

enum class EmbeddingMethod {
  pca_rows,       // rows of the distance matrix as feature vectors (default)
  classical_mds,  // double-centred squared distances
};

inline EmbeddingMethod parse_embedding_method(const std::string& s) {
  if (s == "pca") return EmbeddingMethod::pca_rows;
  if (s == "mds") return EmbeddingMethod::classical_mds;
  throw ValidationError("unknown embedding method '" + s + "' (expected pca or mds)");
}

struct Embedding {
  std::vector<std::string> labels;
  Eigen::MatrixXd coordinates;             // S x D
  Eigen::VectorXd explained_variance_ratio;  // D, nonincreasing
  Eigen::MatrixXd component_axes;          // S x D, orthonormal columns
  EmbeddingMethod method{EmbeddingMethod::pca_rows};
};

namespace detail {

/// Flips v so that its entry of largest magnitude (first one on ties) is positive.
inline void orient(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v(best) < 0.0) v = -v;
}

struct SortedEigen {
  Eigen::VectorXd values;   // descending, clamped at 0
  Eigen::MatrixXd vectors;  // matching columns
};

inline SortedEigen sorted_eigen(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw RuntimeError("symmetric eigensolver did not converge");
  const Eigen::Index n = sym.rows();
  SortedEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = std::max(0.0, es.eigenvalues()(n - 1 - i));
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

inline Embedding zero_embedding(const DistanceMatrix& dm, Eigen::Index dims, EmbeddingMethod m) {
  const auto s = static_cast<Eigen::Index>(dm.size());
  return Embedding{dm.labels(), Eigen::MatrixXd::Zero(s, dims), Eigen::VectorXd::Zero(dims),
                   Eigen::MatrixXd::Identity(s, dims), m};
}

}  // namespace detail

/// Rows of the distance matrix centred by column means, then projected onto
/// the leading eigenvectors of their covariance.
inline Embedding pca_embed(const DistanceMatrix& dm, Eigen::Index dims) {
  const auto s = static_cast<Eigen::Index>(dm.size());
  if (s < 1) throw ValidationError("pca_embed: empty distance matrix");
  if (dims < 1 || dims > s) {
    throw ValidationError("pca_embed: dims must be in [1, " + std::to_string(s) + "], got " +
                          std::to_string(dims));
  }
  const Eigen::MatrixXd centred = dm.values().rowwise() - dm.values().colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(s);
  auto eig = detail::sorted_eigen(cov);
  const double total = eig.values.sum();
  if (!(total > 0.0)) return detail::zero_embedding(dm, dims, EmbeddingMethod::pca_rows);

  Embedding e;
  e.labels = dm.labels();
  e.method = EmbeddingMethod::pca_rows;
  e.component_axes = eig.vectors.leftCols(dims);
  for (Eigen::Index c = 0; c < dims; ++c) detail::orient(e.component_axes.col(c));
  e.coordinates = centred * e.component_axes;
  e.explained_variance_ratio = eig.values.head(dims) / total;
  return e;
}

/// Torgerson scaling: B = -1/2 J D^2 J, coordinates V sqrt(lambda).
inline Embedding classical_mds(const DistanceMatrix& dm, Eigen::Index dims) {
  const auto s = static_cast<Eigen::Index>(dm.size());
  if (s < 1) throw ValidationError("classical_mds: empty distance matrix");
  if (dims < 1 || dims > s) {
    throw ValidationError("classical_mds: dims must be in [1, " + std::to_string(s) + "]");
  }
  const Eigen::MatrixXd sq = dm.values().cwiseProduct(dm.values());
  const Eigen::MatrixXd j =
      Eigen::MatrixXd::Identity(s, s) - Eigen::MatrixXd::Constant(s, s, 1.0 / static_cast<double>(s));
  Eigen::MatrixXd b = -0.5 * j * sq * j;
  b = 0.5 * (b + b.transpose());
  auto eig = detail::sorted_eigen(b);
  const double total = eig.values.sum();
  if (!(total > 0.0)) return detail::zero_embedding(dm, dims, EmbeddingMethod::classical_mds);

  Embedding e;
  e.labels = dm.labels();
  e.method = EmbeddingMethod::classical_mds;
  e.component_axes = eig.vectors.leftCols(dims);
  e.coordinates.resize(s, dims);
  for (Eigen::Index c = 0; c < dims; ++c) {
    detail::orient(e.component_axes.col(c));
    e.coordinates.col(c) = e.component_axes.col(c) * std::sqrt(eig.values(c));
  }
  e.explained_variance_ratio = eig.values.head(dims) / total;
  return e;
}

inline Embedding embed(const DistanceMatrix& dm, Eigen::Index dims, EmbeddingMethod method) {
  return method == EmbeddingMethod::pca_rows ? pca_embed(dm, dims) : classical_mds(dm, dims);
}

// ---------------------------------------------------------------------------
// correlation
// ---------------------------------------------------------------------------

struct LinearFit {
  double slope{0.0};
  double intercept{0.0};
  double pearson_r{0.0};
  std::size_t n_points{0};
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("linear_fit: x and y differ in length");
  if (x.size() < 2) throw ValidationError("linear_fit: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("linear_fit: x values are all equal");
  LinearFit f;
  f.n_points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.pearson_r = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  return f;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  return linear_fit(x, y).pearson_r;
}

/// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman's rho as the Pearson correlation of average ranks. Returns 0 when
/// either input is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman: need equal lengths >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  if (std::adjacent_find(rx.begin(), rx.end(), std::not_equal_to<>()) == rx.end()) return 0.0;
  return pearson(rx, ry);
}

}  // namespace covdist
