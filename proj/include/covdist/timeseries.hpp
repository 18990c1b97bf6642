#pragma once

// Per-particle 3-component time series: data model, normalization and
// disjoint sub-window segmentation.

#include <covdist/core.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covdist {

enum class Channel : std::uint32_t { velocity = 0, position = 1, dipole = 2 };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::velocity: return "velocity";
    case Channel::position: return "position";
    case Channel::dipole: return "dipole";
  }
  return "unknown";
}

inline Channel parse_channel(const std::string& s) {
  if (s == "velocity") return Channel::velocity;
  if (s == "position") return Channel::position;
  if (s == "dipole") return Channel::dipole;
  throw ValidationError("unknown channel '" + s + "'");
}

/// One particle's sampled 3-vector series. Immutable once constructed.
class ParticleSeries {
 public:
  ParticleSeries(std::int64_t particle_id, double dt, Channel channel, std::vector<Vec3> data)
      : id_(particle_id), dt_(dt), channel_(channel), data_(std::move(data)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
      throw ValidationError("particle " + std::to_string(id_) + ": dt must be positive");
    }
    if (data_.empty()) {
      throw ValidationError("particle " + std::to_string(id_) + ": series is empty");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!is_finite(data_[i])) {
        throw ValidationError("particle " + std::to_string(id_) + ": non-finite sample at index " +
                              std::to_string(i));
      }
    }
  }

  std::int64_t particle_id() const { return id_; }
  double dt() const { return dt_; }
  Channel channel() const { return channel_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<Vec3>& data() const { return data_; }
  const Vec3& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::int64_t id_;
  double dt_;
  Channel channel_;
  std::vector<Vec3> data_;
};

/// A 3 x N sub-window. Column j holds sample (m-1)N + j of the parent series
/// (both 1-based), i.e. 0-based sample (m-1)N + j - 1.
struct SegmentMatrix {
  Eigen::Matrix<double, 3, Eigen::Dynamic> values;
  std::size_t segment_index{1};  // 1-based

  Eigen::Index length() const { return values.cols(); }
  double operator()(Axis a, Eigen::Index j) const { return values(index(a), j); }
};

enum class NormalizationPolicy { zscore_per_component, none };

inline NormalizationPolicy parse_normalization(const std::string& s) {
  if (s == "zscore" || s == "zscore-per-component") return NormalizationPolicy::zscore_per_component;
  if (s == "none") return NormalizationPolicy::none;
  throw ValidationError("unknown normalization policy '" + s + "' (expected zscore or none)");
}

inline const char* normalization_name(NormalizationPolicy p) {
  return p == NormalizationPolicy::none ? "none" : "zscore";
}

struct NormalizationRecord {
  Vec3 shift{};
  Vec3 scale{1.0, 1.0, 1.0};
  NormalizationPolicy policy{NormalizationPolicy::none};

  Vec3 apply(const Vec3& v) const {
    return {(v.x - shift.x) / scale.x, (v.y - shift.y) / scale.y, (v.z - shift.z) / scale.z};
  }
  Vec3 invert(const Vec3& v) const {
    return {v.x * scale.x + shift.x, v.y * scale.y + shift.y, v.z * scale.z + shift.z};
  }
};

/// Builds a record from full-series moments (1/L variance convention).
inline NormalizationRecord make_zscore_record(const Vec3& mean, const Vec3& variance,
                                              std::int64_t particle_id = -1) {
  NormalizationRecord rec;
  rec.policy = NormalizationPolicy::zscore_per_component;
  rec.shift = mean;
  for (Axis a : kAxes) {
    if (!(variance[a] > 0.0)) {
      std::string who = particle_id >= 0 ? "particle " + std::to_string(particle_id) + ": " : "";
      throw ValidationError(who + "component " + axis_name(a) +
                            " has zero variance; zscore normalization is undefined");
    }
    rec.scale[a] = std::sqrt(variance[a]);
  }
  return rec;
}

/// Two-pass mean and 1/L variance per component.
inline std::pair<Vec3, Vec3> component_moments(const std::vector<Vec3>& data) {
  const double n = static_cast<double>(data.size());
  Vec3 mean{};
  for (const auto& v : data) mean += v;
  mean *= 1.0 / n;
  Vec3 var{};
  for (const auto& v : data) {
    Vec3 d = v - mean;
    var.x += d.x * d.x;
    var.y += d.y * d.y;
    var.z += d.z * d.z;
  }
  var *= 1.0 / n;
  return {mean, var};
}

inline std::pair<ParticleSeries, NormalizationRecord> normalize(const ParticleSeries& series,
                                                                NormalizationPolicy policy) {
  if (policy == NormalizationPolicy::none) {
    return {series, NormalizationRecord{}};
  }
  auto [mean, var] = component_moments(series.data());
  NormalizationRecord rec = make_zscore_record(mean, var, series.particle_id());
  std::vector<Vec3> out;
  out.reserve(series.size());
  for (const auto& v : series.data()) out.push_back(rec.apply(v));
  return {ParticleSeries(series.particle_id(), series.dt(), series.channel(), std::move(out)), rec};
}

inline ParticleSeries denormalize(const ParticleSeries& series, const NormalizationRecord& rec) {
  std::vector<Vec3> out;
  out.reserve(series.size());
  for (const auto& v : series.data()) out.push_back(rec.invert(v));
  return ParticleSeries(series.particle_id(), series.dt(), series.channel(), std::move(out));
}

/// Number of full windows of length n in a series of length len.
inline std::size_t segment_count(std::size_t len, std::size_t n) { return n == 0 ? 0 : len / n; }

/// Splits into floor(L/N) disjoint windows; a trailing remainder is dropped.
inline std::vector<SegmentMatrix> segment(const ParticleSeries& series, std::size_t n) {
  if (n == 0) throw ValidationError("segment length must be >= 1");
  if (n > series.size()) {
    throw ValidationError("series shorter than one segment (L=" + std::to_string(series.size()) +
                          ", N=" + std::to_string(n) + ")");
  }
  const std::size_t k = segment_count(series.size(), n);
  std::vector<SegmentMatrix> out;
  out.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    SegmentMatrix seg;
    seg.segment_index = m + 1;
    seg.values.resize(3, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3& v = series[m * n + j];
      seg.values(0, static_cast<Eigen::Index>(j)) = v.x;
      seg.values(1, static_cast<Eigen::Index>(j)) = v.y;
      seg.values(2, static_cast<Eigen::Index>(j)) = v.z;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

/// Frame-major samples for a set of particles, the in-memory counterpart of
/// the binary trajectory file. dt is the integrator step; frames are spaced
/// dt * stride apart.
struct FrameTrajectory {
  Channel channel{Channel::velocity};
  double dt{1.0};
  std::size_t stride{1};
  std::size_t n_particles{0};
  std::vector<Vec3> samples;  // n_frames * n_particles

  std::size_t n_frames() const { return n_particles == 0 ? 0 : samples.size() / n_particles; }
  double frame_spacing() const { return dt * static_cast<double>(stride); }

  std::span<const Vec3> frame(std::size_t f) const {
    return {samples.data() + f * n_particles, n_particles};
  }
  const Vec3& at(std::size_t f, std::size_t p) const { return samples[f * n_particles + p]; }

  void append_frame(std::span<const Vec3> frame) {
    if (n_particles == 0) n_particles = frame.size();
    if (frame.size() != n_particles) throw ValidationError("frame has wrong particle count");
    samples.insert(samples.end(), frame.begin(), frame.end());
  }

  ParticleSeries particle(std::size_t p) const {
    std::vector<Vec3> data(n_frames());
    for (std::size_t f = 0; f < data.size(); ++f) data[f] = at(f, p);
    return ParticleSeries(static_cast<std::int64_t>(p), frame_spacing(), channel, std::move(data));
  }

  std::vector<ParticleSeries> to_particle_series() const {
    std::vector<ParticleSeries> out;
    out.reserve(n_particles);
    for (std::size_t p = 0; p < n_particles; ++p) out.push_back(particle(p));
    return out;
  }
};

/// Welford accumulator for per-component moments of a streamed series.
class ComponentStats {
 public:
  void push(const Vec3& v) {
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (int c = 0; c < 3; ++c) {
      const double d = v[c] - mean_[c];
      mean_[c] += d * inv;
      m2_[c] += d * (v[c] - mean_[c]);
    }
  }
  std::size_t count() const { return n_; }
  Vec3 mean() const { return mean_; }
  Vec3 variance() const {
    return n_ == 0 ? Vec3{} : m2_ * (1.0 / static_cast<double>(n_));
  }

 private:
  std::size_t n_{0};
  Vec3 mean_{};
  Vec3 m2_{};
};

}  // namespace covdist
