#pragma once

// Binary trajectory format.
//
//   offset  size  field
//        0     4  magic "CVTJ"
//        4     4  format version (u32, currently 1)
//        8     4  channel tag (u32: 0 velocity, 1 position, 2 dipole)
//       12     8  particle count (u64)
//       20     8  frame count (u64)
//       28     8  dt (f64, integrator step)
//       36     8  sample stride (u64, steps between frames)
//       44    20  reserved, zero
//       64     -  frames: frame-major, particle-major, component-major f64
//
// All fields little-endian.

#include <covdist/core.hpp>
#include <covdist/timeseries.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace covdist::io {

inline constexpr std::array<char, 4> kTrajectoryMagic{'C', 'V', 'T', 'J'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;
inline constexpr std::size_t kTrajectoryHeaderSize = 64;

struct TrajectoryHeader {
  Channel channel{Channel::velocity};
  std::uint64_t n_particles{0};
  std::uint64_t n_frames{0};
  double dt{1.0};
  std::uint64_t stride{1};
};

namespace detail {

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void put(unsigned char* dst, T v) {
  v = byteswap_if_big(v);
  std::memcpy(dst, &v, sizeof(T));
}

template <class T>
T get(const unsigned char* src) {
  T v;
  std::memcpy(&v, src, sizeof(T));
  return byteswap_if_big(v);
}

inline std::array<unsigned char, kTrajectoryHeaderSize> encode_header(const TrajectoryHeader& h) {
  std::array<unsigned char, kTrajectoryHeaderSize> b{};
  std::memcpy(b.data(), kTrajectoryMagic.data(), 4);
  put<std::uint32_t>(b.data() + 4, kTrajectoryVersion);
  put<std::uint32_t>(b.data() + 8, static_cast<std::uint32_t>(h.channel));
  put<std::uint64_t>(b.data() + 12, h.n_particles);
  put<std::uint64_t>(b.data() + 20, h.n_frames);
  put<double>(b.data() + 28, h.dt);
  put<std::uint64_t>(b.data() + 36, h.stride);
  return b;
}

}  // namespace detail

inline TrajectoryHeader read_trajectory_header(std::istream& in) {
  std::array<unsigned char, kTrajectoryHeaderSize> b{};
  in.read(reinterpret_cast<char*>(b.data()), b.size());
  if (in.gcount() == 0) throw ValidationError("trajectory: no records (empty input)");
  if (static_cast<std::size_t>(in.gcount()) != b.size()) {
    throw ValidationError("trajectory: truncated header at byte " + std::to_string(in.gcount()));
  }
  if (std::memcmp(b.data(), kTrajectoryMagic.data(), 4) != 0) {
    throw ValidationError("trajectory: bad magic at byte 0 (expected CVTJ)");
  }
  if (auto v = detail::get<std::uint32_t>(b.data() + 4); v != kTrajectoryVersion) {
    throw ValidationError("trajectory: unsupported format version " + std::to_string(v) + " at byte 4");
  }
  TrajectoryHeader h;
  const auto tag = detail::get<std::uint32_t>(b.data() + 8);
  if (tag > 2) throw ValidationError("trajectory: unknown channel tag " + std::to_string(tag) + " at byte 8");
  h.channel = static_cast<Channel>(tag);
  h.n_particles = detail::get<std::uint64_t>(b.data() + 12);
  h.n_frames = detail::get<std::uint64_t>(b.data() + 20);
  h.dt = detail::get<double>(b.data() + 28);
  h.stride = detail::get<std::uint64_t>(b.data() + 36);
  if (h.n_particles == 0) throw ValidationError("trajectory: particle count is zero (byte 12)");
  if (!(h.dt > 0.0) || !std::isfinite(h.dt)) throw ValidationError("trajectory: dt must be positive (byte 28)");
  if (h.stride == 0) throw ValidationError("trajectory: sample stride is zero (byte 36)");
  return h;
}

/// Streams frames to a file; the frame count in the header is patched on
/// finish() (or destruction).
class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::string& path, TrajectoryHeader header) : path_(path), header_(header) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw RuntimeError("cannot open '" + path + "' for writing");
    header_.n_frames = 0;
    write_header();
  }
  TrajectoryWriter(const TrajectoryWriter&) = delete;
  TrajectoryWriter& operator=(const TrajectoryWriter&) = delete;

  ~TrajectoryWriter() {
    try {
      finish();
    } catch (...) {
    }
  }

  void write_frame(std::span<const Vec3> frame) {
    if (frame.size() != header_.n_particles) throw ValidationError("trajectory: frame has wrong particle count");
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(frame.data()),
                 static_cast<std::streamsize>(frame.size() * sizeof(Vec3)));
    } else {
      std::vector<unsigned char> buf(frame.size() * 24);
      for (std::size_t p = 0; p < frame.size(); ++p)
        for (int c = 0; c < 3; ++c) detail::put<double>(buf.data() + 24 * p + 8 * c, frame[p][c]);
      out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out_) throw RuntimeError("write failed on '" + path_ + "'");
    ++header_.n_frames;
  }

  std::uint64_t frames_written() const { return header_.n_frames; }

  void finish() {
    if (!out_.is_open()) return;
    out_.seekp(0);
    write_header();
    out_.close();
    if (out_.fail()) throw RuntimeError("write failed on '" + path_ + "'");
  }

 private:
  void write_header() {
    const auto b = detail::encode_header(header_);
    out_.write(reinterpret_cast<const char*>(b.data()), b.size());
    if (!out_) throw RuntimeError("write failed on '" + path_ + "'");
  }

  std::string path_;
  TrajectoryHeader header_;
  std::ofstream out_;
};

/// Sequential frame reader over any seekable stream.
class TrajectoryReader {
 public:
  explicit TrajectoryReader(std::istream& in) : in_(&in) { init(); }
  explicit TrajectoryReader(const std::string& path) : file_(path, std::ios::binary), in_(&file_) {
    if (!file_) throw RuntimeError("cannot open trajectory '" + path + "'");
    init();
  }
  TrajectoryReader(const TrajectoryReader&) = delete;
  TrajectoryReader& operator=(const TrajectoryReader&) = delete;

  const TrajectoryHeader& header() const { return header_; }

  /// Reads the next frame into out; false after the last frame.
  bool next(std::vector<Vec3>& out) {
    if (frame_ >= header_.n_frames) return false;
    out.resize(header_.n_particles);
    const auto bytes = static_cast<std::streamsize>(header_.n_particles * 24);
    if constexpr (std::endian::native == std::endian::little) {
      in_->read(reinterpret_cast<char*>(out.data()), bytes);
    } else {
      std::vector<unsigned char> buf(static_cast<std::size_t>(bytes));
      in_->read(reinterpret_cast<char*>(buf.data()), bytes);
      for (std::size_t p = 0; p < out.size(); ++p)
        for (int c = 0; c < 3; ++c) out[p][c] = detail::get<double>(buf.data() + 24 * p + 8 * c);
    }
    if (in_->gcount() != bytes) {
      throw ValidationError("trajectory: truncated frame " + std::to_string(frame_) + " at byte " +
                            std::to_string(kTrajectoryHeaderSize + frame_ * header_.n_particles * 24));
    }
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (!is_finite(out[p])) {
        throw ValidationError("trajectory: non-finite value in frame " + std::to_string(frame_) + ", particle " +
                              std::to_string(p));
      }
    }
    ++frame_;
    return true;
  }

  /// Rewinds to the first frame.
  void rewind() {
    in_->clear();
    in_->seekg(static_cast<std::streamoff>(kTrajectoryHeaderSize));
    frame_ = 0;
  }

  FrameTrajectory read_all() {
    rewind();
    FrameTrajectory t;
    t.channel = header_.channel;
    t.dt = header_.dt;
    t.stride = header_.stride;
    t.n_particles = header_.n_particles;
    t.samples.reserve(header_.n_frames * header_.n_particles);
    std::vector<Vec3> frame;
    while (next(frame)) t.samples.insert(t.samples.end(), frame.begin(), frame.end());
    return t;
  }

 private:
  void init() {
    header_ = read_trajectory_header(*in_);
    const auto start = in_->tellg();
    in_->seekg(0, std::ios::end);
    const auto end = in_->tellg();
    in_->seekg(start);
    if (start >= 0 && end >= 0) {
      const auto expected = header_.n_frames * header_.n_particles * 24;
      const auto have = static_cast<std::uint64_t>(end - start);
      if (have != expected) {
        throw ValidationError("trajectory: payload is " + std::to_string(have) + " bytes, header declares " +
                              std::to_string(expected) + " (byte 20)");
      }
    }
  }

  std::ifstream file_;
  std::istream* in_;
  TrajectoryHeader header_;
  std::uint64_t frame_{0};
};

inline FrameTrajectory read_trajectory(const std::string& path) {
  TrajectoryReader r(path);
  return r.read_all();
}

inline void write_trajectory(const std::string& path, const FrameTrajectory& t) {
  TrajectoryWriter w(path, {t.channel, t.n_particles, 0, t.dt, t.stride});
  for (std::size_t f = 0; f < t.n_frames(); ++f) w.write_frame(t.frame(f));
  w.finish();
}

/// Writes to an in-memory stream (tests, piping).
inline void write_trajectory(std::ostream& out, const FrameTrajectory& t) {
  const auto h = detail::encode_header({t.channel, t.n_particles, t.n_frames(), t.dt, t.stride});
  out.write(reinterpret_cast<const char*>(h.data()), h.size());
  for (const auto& v : t.samples)
    for (int c = 0; c < 3; ++c) {
      unsigned char b[8];
      detail::put<double>(b, v[c]);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
}

/// One ParticleSeries per particle; each series' dt is the frame spacing.
inline std::vector<ParticleSeries> ingest_binary(std::istream& in) {
  TrajectoryReader r(in);
  return r.read_all().to_particle_series();
}

}  // namespace covdist::io
