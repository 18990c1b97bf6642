#pragma once

// Plain-text tables. Every table may start with "# key=value" metadata lines;
// numbers are printed with 17 significant digits so a parse reproduces the
// in-memory double exactly.

#include <covdist/core.hpp>
#include <covdist/covariance.hpp>
#include <covdist/distance.hpp>
#include <covdist/embedding.hpp>
#include <covdist/timeseries.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covdist::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ValidationError("line " + std::to_string(line) + ": non-finite value");
  return v;
}

inline std::int64_t parse_int(std::string_view s, std::size_t line) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": cannot parse integer '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Table {
  Metadata meta;
  std::vector<std::string> lines;       // non-comment, non-empty lines
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to lines

  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return std::nullopt;
  }
};

inline Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (auto eq = body.find('='); eq != std::string_view::npos) {
        t.meta.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
      }
      continue;
    }
    t.lines.push_back(line);
    t.line_numbers.push_back(n);
  }
  return t;
}

inline void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "'");
  return in;
}

// ---------------------------------------------------------------------------
// external series: particle_id,step,cx,cy,cz
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSeriesHeader = "particle_id,step,cx,cy,cz";

/// Rows may interleave particles; within a particle steps must increase.
/// dt is the spacing between consecutive rows of one particle.
inline std::vector<ParticleSeries> read_series_csv(std::istream& in, double dt, Channel channel) {
  Table t = read_table(in);
  if (t.lines.empty()) throw ValidationError("series csv: no records");
  if (t.lines.front() != kSeriesHeader) {
    throw ValidationError("series csv: line " + std::to_string(t.line_numbers.front()) +
                          ": malformed header, expected '" + std::string(kSeriesHeader) + "'");
  }
  if (t.lines.size() == 1) throw ValidationError("series csv: no records");
  std::map<std::int64_t, std::pair<std::int64_t, std::vector<Vec3>>> rows;  // id -> (last step, data)
  for (std::size_t i = 1; i < t.lines.size(); ++i) {
    const std::size_t ln = t.line_numbers[i];
    auto f = split(t.lines[i]);
    if (f.size() != 5) {
      throw ValidationError("series csv: line " + std::to_string(ln) + ": expected 5 fields, found " +
                            std::to_string(f.size()));
    }
    const auto id = parse_int(f[0], ln);
    const auto step = parse_int(f[1], ln);
    Vec3 v{parse_double(f[2], ln), parse_double(f[3], ln), parse_double(f[4], ln)};
    auto [it, fresh] = rows.try_emplace(id, step, std::vector<Vec3>{});
    if (!fresh && step <= it->second.first) {
      throw ValidationError("series csv: line " + std::to_string(ln) + ": step " + std::to_string(step) +
                            " does not increase for particle " + std::to_string(id));
    }
    it->second.first = step;
    it->second.second.push_back(v);
  }
  std::vector<ParticleSeries> out;
  for (auto& [id, entry] : rows) out.emplace_back(id, dt, channel, std::move(entry.second));
  return out;
}

inline void write_series_csv(std::ostream& out, std::span<const ParticleSeries> series) {
  out << kSeriesHeader << '\n';
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.size(); ++k) {
      out << s.particle_id() << ',' << k << ',' << format_double(s[k].x) << ',' << format_double(s[k].y) << ','
          << format_double(s[k].z) << '\n';
    }
}

/// Frame-major view of CSV input; requires equal lengths across particles.
inline FrameTrajectory series_to_frames(std::span<const ParticleSeries> series) {
  if (series.empty()) throw ValidationError("no particle series");
  FrameTrajectory t;
  t.channel = series.front().channel();
  t.dt = series.front().dt();
  t.stride = 1;
  t.n_particles = series.size();
  const std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) {
      throw ValidationError("particle " + std::to_string(s.particle_id()) + " has " + std::to_string(s.size()) +
                            " samples, expected " + std::to_string(len));
    }
  t.samples.resize(len * series.size());
  for (std::size_t p = 0; p < series.size(); ++p)
    for (std::size_t f = 0; f < len; ++f) t.samples[f * series.size() + p] = series[p][f];
  return t;
}

// ---------------------------------------------------------------------------
// dense matrices and descriptors
// ---------------------------------------------------------------------------

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline Eigen::MatrixXd parse_matrix(const Table& t, std::size_t first_line = 0, std::size_t skip_cols = 0) {
  const std::size_t rows = t.lines.size() - first_line;
  if (rows == 0) throw ValidationError("matrix: no rows");
  Eigen::MatrixXd m;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t ln = t.line_numbers[first_line + i];
    auto f = split(t.lines[first_line + i]);
    if (f.size() <= skip_cols) throw ValidationError("line " + std::to_string(ln) + ": too few fields");
    const auto cols = static_cast<Eigen::Index>(f.size() - skip_cols);
    if (i == 0) m.resize(static_cast<Eigen::Index>(rows), cols);
    if (cols != m.cols()) {
      throw ValidationError("line " + std::to_string(ln) + ": expected " + std::to_string(m.cols()) +
                            " values, found " + std::to_string(cols));
    }
    for (Eigen::Index j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), j) = parse_double(f[skip_cols + static_cast<std::size_t>(j)], ln);
  }
  return m;
}

/// Recovers the lag table from a dense 3N x 3N matrix, rejecting matrices
/// that are not exactly block-Toeplitz.
inline BlockToeplitzCov descriptor_from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() % 3 != 0 || m.rows() == 0) {
    throw ValidationError("descriptor: matrix must be 3N x 3N");
  }
  const Eigen::Index n = m.rows() / 3;
  LagTable t(n);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (Eigen::Index k = 0; k < n; ++k) t(a, b, k) = m(a * n, b * n + k);
  BlockToeplitzCov d(std::move(t));
  if (d.matrix() != m) throw ValidationError("descriptor: matrix is not block-Toeplitz");
  return d;
}

inline void write_descriptor(std::ostream& out, const BlockToeplitzCov& d, Metadata meta = {}) {
  meta.insert(meta.begin(), {"kind", "block_toeplitz_descriptor"});
  meta.emplace_back("block_size", std::to_string(d.block_size()));
  write_metadata(out, meta);
  write_matrix(out, d.matrix());
}

inline BlockToeplitzCov read_descriptor(std::istream& in) {
  return descriptor_from_dense(parse_matrix(read_table(in)));
}

// ---------------------------------------------------------------------------
// distance matrix: header row "label,<l1>,...", then "<li>,d_i1,..."
// ---------------------------------------------------------------------------

inline void write_distance_matrix(std::ostream& out, const DistanceMatrix& dm, const Metadata& meta = {}) {
  write_metadata(out, meta);
  out << "label";
  for (const auto& l : dm.labels()) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < dm.size(); ++i) {
    out << dm.labels()[i];
    for (std::size_t j = 0; j < dm.size(); ++j) out << ',' << format_double(dm(i, j));
    out << '\n';
  }
}

inline DistanceMatrix read_distance_matrix(std::istream& in) {
  Table t = read_table(in);
  if (t.lines.size() < 2) throw ValidationError("distance matrix csv: no records");
  auto head = split(t.lines.front());
  if (head.empty() || head.front() != "label") {
    throw ValidationError("distance matrix csv: line " + std::to_string(t.line_numbers.front()) +
                          ": malformed header");
  }
  std::vector<std::string> labels(head.begin() + 1, head.end());
  Eigen::MatrixXd v = parse_matrix(t, 1, 1);
  for (std::size_t i = 1; i < t.lines.size(); ++i) {
    auto f = split(t.lines[i]);
    if (f.front() != labels[i - 1]) {
      throw ValidationError("distance matrix csv: line " + std::to_string(t.line_numbers[i]) +
                            ": row label does not match column order");
    }
  }
  return DistanceMatrix(std::move(labels), std::move(v));
}

// ---------------------------------------------------------------------------
// embedding: "label,pc1,...,pcD"
// ---------------------------------------------------------------------------

inline void write_embedding(std::ostream& out, const Embedding& e, Metadata meta = {}) {
  std::string ratios;
  for (Eigen::Index c = 0; c < e.explained_variance_ratio.size(); ++c)
    ratios += (c ? ";" : "") + format_double(e.explained_variance_ratio(c));
  meta.emplace_back("method", e.method == EmbeddingMethod::pca_rows ? "pca" : "mds");
  meta.emplace_back("explained_variance_ratio", ratios);
  write_metadata(out, meta);
  out << "label";
  for (Eigen::Index c = 0; c < e.coordinates.cols(); ++c) out << ",pc" << (c + 1);
  out << '\n';
  for (std::size_t i = 0; i < e.labels.size(); ++i) {
    out << e.labels[i];
    for (Eigen::Index c = 0; c < e.coordinates.cols(); ++c)
      out << ',' << format_double(e.coordinates(static_cast<Eigen::Index>(i), c));
    out << '\n';
  }
}

/// Labels and coordinates only.
inline Embedding read_embedding(std::istream& in) {
  Table t = read_table(in);
  if (t.lines.size() < 2) throw ValidationError("embedding csv: no records");
  Embedding e;
  e.coordinates = parse_matrix(t, 1, 1);
  for (std::size_t i = 1; i < t.lines.size(); ++i) e.labels.emplace_back(split(t.lines[i]).front());
  if (auto r = t.get("explained_variance_ratio")) {
    auto parts = split(*r, ';');
    e.explained_variance_ratio.resize(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) e.explained_variance_ratio(static_cast<Eigen::Index>(i)) = parse_double(parts[i], 0);
  }
  return e;
}

// ---------------------------------------------------------------------------
// histogram: "bin_lo,bin_hi,count"
// ---------------------------------------------------------------------------

inline void write_histogram(std::ostream& out, const DistanceHistogram& h, Metadata meta = {}) {
  meta.insert(meta.begin(), {{"reference", h.label_pair.first},
                             {"other", h.label_pair.second},
                             {"seed", std::to_string(h.rng_seed)},
                             {"sample_count", std::to_string(h.sample_count)},
                             {"degenerate", h.degenerate ? "true" : "false"}});
  write_metadata(out, meta);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << format_double(h.bin_edges[b]) << ',' << format_double(h.bin_edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
}

inline DistanceHistogram read_histogram(std::istream& in) {
  Table t = read_table(in);
  if (t.lines.empty() || t.lines.front() != "bin_lo,bin_hi,count") {
    throw ValidationError("histogram csv: malformed header");
  }
  DistanceHistogram h;
  h.label_pair = {t.get("reference").value_or(""), t.get("other").value_or("")};
  if (auto s = t.get("seed")) h.rng_seed = static_cast<std::uint64_t>(parse_int(*s, 0));
  h.degenerate = t.get("degenerate").value_or("false") == "true";
  for (std::size_t i = 1; i < t.lines.size(); ++i) {
    const std::size_t ln = t.line_numbers[i];
    auto f = split(t.lines[i]);
    if (f.size() != 3) throw ValidationError("histogram csv: line " + std::to_string(ln) + ": expected 3 fields");
    if (h.bin_edges.empty()) h.bin_edges.push_back(parse_double(f[0], ln));
    h.bin_edges.push_back(parse_double(f[1], ln));
    h.counts.push_back(static_cast<std::uint64_t>(parse_int(f[2], ln)));
    h.sample_count += h.counts.back();
  }
  return h;
}

}  // namespace covdist::io
