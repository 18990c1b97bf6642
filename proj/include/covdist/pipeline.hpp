#pragma once

// End-to-end analysis: trajectories -> per-particle window descriptors ->
// state descriptors -> distance matrix -> embedding -> correlation with
// diffusion coefficients. Frames are streamed, so a trajectory never has to
// be resident in memory as per-particle series.

#include <covdist/core.hpp>
#include <covdist/covariance.hpp>
#include <covdist/distance.hpp>
#include <covdist/embedding.hpp>
#include <covdist/io/csv.hpp>
#include <covdist/io/trajectory.hpp>
#include <covdist/md/diffusion.hpp>
#include <covdist/md/simulation.hpp>
#include <covdist/timeseries.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace covdist {

// ---------------------------------------------------------------------------
// streaming window descriptors
// ---------------------------------------------------------------------------

/// Feeds a frame callback with every frame of some source, in order. Must be
/// replayable: zscore normalization makes two passes.
using FrameReplay = std::function<void(const std::function<void(std::span<const Vec3>)>&)>;

/// Cuts each particle's stream into disjoint windows of length N and
/// accumulates one lag table per window.
class WindowedDescriptorBuilder {
 public:
  WindowedDescriptorBuilder(std::size_t n_particles, std::size_t window,
                            std::vector<NormalizationRecord> norms = {},
                            LagNormalization lag_norm = LagNormalization::biased)
      : window_(window), lag_norm_(lag_norm), norms_(std::move(norms)) {
    if (window == 0) throw ValidationError("segment length must be >= 1");
    if (!norms_.empty() && norms_.size() != n_particles) throw ValidationError("normalization record count mismatch");
    const auto n = static_cast<Eigen::Index>(window);
    buffers_.assign(n_particles, SegmentMatrix{Eigen::Matrix<double, 3, Eigen::Dynamic>(3, n), 1});
    acc_.assign(n_particles, DescriptorAccumulator(n));
  }

  void push(std::span<const Vec3> frame) {
    if (frame.size() != buffers_.size()) throw ValidationError("frame has wrong particle count");
    const auto col = static_cast<Eigen::Index>(fill_);
    for (std::size_t p = 0; p < frame.size(); ++p) {
      const Vec3 v = norms_.empty() ? frame[p] : norms_[p].apply(frame[p]);
      buffers_[p].values(0, col) = v.x;
      buffers_[p].values(1, col) = v.y;
      buffers_[p].values(2, col) = v.z;
    }
    if (++fill_ == window_) {
      for (std::size_t p = 0; p < frame.size(); ++p) acc_[p].add(lag_table(buffers_[p], lag_norm_));
      fill_ = 0;
      ++windows_;
    }
    ++frames_;
  }

  std::size_t windows() const { return windows_; }
  std::size_t frames() const { return frames_; }

  std::vector<BlockToeplitzCov> particle_means() const {
    if (windows_ == 0) {
      throw ValidationError("series shorter than one segment (L=" + std::to_string(frames_) +
                            ", N=" + std::to_string(window_) + ")");
    }
    std::vector<BlockToeplitzCov> out;
    out.reserve(acc_.size());
    for (const auto& a : acc_) out.push_back(a.mean());
    return out;
  }

 private:
  std::size_t window_;
  LagNormalization lag_norm_;
  std::vector<NormalizationRecord> norms_;
  std::vector<SegmentMatrix> buffers_;
  std::vector<DescriptorAccumulator> acc_;
  std::size_t fill_{0};
  std::size_t windows_{0};
  std::size_t frames_{0};
};

struct ParticleDescriptors {
  std::vector<BlockToeplitzCov> particles;  // mean over each particle's windows
  std::size_t windows{0};                   // K
  std::size_t frames{0};                    // L
};

inline ParticleDescriptors particle_descriptors(const FrameReplay& replay, std::size_t n_particles,
                                                std::size_t window, NormalizationPolicy policy,
                                                LagNormalization lag_norm = LagNormalization::biased) {
  std::vector<NormalizationRecord> norms;
  if (policy == NormalizationPolicy::zscore_per_component) {
    std::vector<ComponentStats> stats(n_particles);
    replay([&](std::span<const Vec3> f) {
      for (std::size_t p = 0; p < n_particles; ++p) stats[p].push(f[p]);
    });
    for (std::size_t p = 0; p < n_particles; ++p) {
      norms.push_back(make_zscore_record(stats[p].mean(), stats[p].variance(), static_cast<std::int64_t>(p)));
    }
  }
  WindowedDescriptorBuilder builder(n_particles, window, std::move(norms), lag_norm);
  replay([&](std::span<const Vec3> f) { builder.push(f); });
  return {builder.particle_means(), builder.windows(), builder.frames()};
}

inline FrameReplay replay_of(const FrameTrajectory& t) {
  return [&t](const std::function<void(std::span<const Vec3>)>& fn) {
    for (std::size_t f = 0; f < t.n_frames(); ++f) fn(t.frame(f));
  };
}

inline FrameReplay replay_file(const std::string& path) {
  return [path](const std::function<void(std::span<const Vec3>)>& fn) {
    io::TrajectoryReader r(path);
    std::vector<Vec3> frame;
    while (r.next(frame)) fn(frame);
  };
}

/// Reference path: normalize -> segment -> build -> mean per particle series.
inline std::vector<BlockToeplitzCov> particle_descriptors_batch(std::span<const ParticleSeries> series,
                                                                std::size_t window, NormalizationPolicy policy,
                                                                LagNormalization lag_norm = LagNormalization::biased) {
  std::vector<BlockToeplitzCov> out;
  for (const auto& s : series) {
    auto [normalized, rec] = normalize(s, policy);
    std::vector<BlockToeplitzCov> windows;
    for (const auto& seg : segment(normalized, window)) windows.push_back(build_block_toeplitz(seg, lag_norm));
    out.push_back(euclidean_mean(windows));
  }
  return out;
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

enum class DescriptorMode { state_mean, per_particle, single_particle };

inline DescriptorMode parse_descriptor_mode(const std::string& s) {
  if (s == "state-mean") return DescriptorMode::state_mean;
  if (s == "per-particle") return DescriptorMode::per_particle;
  if (s == "single-particle") return DescriptorMode::single_particle;
  throw ValidationError("unknown descriptor mode '" + s + "' (expected state-mean, per-particle or single-particle)");
}

inline const char* descriptor_mode_name(DescriptorMode m) {
  switch (m) {
    case DescriptorMode::state_mean: return "state-mean";
    case DescriptorMode::per_particle: return "per-particle";
    case DescriptorMode::single_particle: return "single-particle";
  }
  return "?";
}

enum class DiffusionEstimator { msd, vacf };

struct StateSource {
  std::string label;
  std::optional<double> temperature;
  std::string velocities;  // binary trajectory of the analysed channel
  std::string positions;   // unwrapped positions, optional (MSD)
  std::string csv;         // external series instead of a binary trajectory
  double csv_dt{0.0};
  Channel csv_channel{Channel::dipole};
  std::size_t particle{0};  // single-particle mode
};

struct SimulateBlock {
  md::SimConfig base;
  std::vector<double> temperatures;
};

struct PipelineConfig {
  std::vector<StateSource> states;
  std::optional<SimulateBlock> simulate;
  std::size_t segment_length{8};
  NormalizationPolicy normalization{NormalizationPolicy::zscore_per_component};
  LagNormalization lag_normalization{LagNormalization::biased};
  DescriptorMode descriptor_mode{DescriptorMode::state_mean};
  DistancePath distance_path{DistancePath::dense};
  std::size_t n_pairs{4000};
  std::uint64_t seed{12345};
  std::size_t n_bins{50};
  Eigen::Index embedding_dims{2};
  EmbeddingMethod embedding_method{EmbeddingMethod::pca_rows};
  DiffusionEstimator diffusion_estimator{DiffusionEstimator::msd};
  md::VacfOptions vacf{5.0, 10, 0.01};
  std::string reference;
  std::string distance_matrix_path;  // embed: reuse a written matrix
  std::string out{"out"};
};

inline void validate(const PipelineConfig& c) {
  if (c.segment_length < 1) throw ValidationError("invalid config field 'segment_length': must be >= 1");
  if (c.embedding_dims < 1) throw ValidationError("invalid config field 'embedding_dims': must be >= 1");
  if (c.n_pairs < 1) throw ValidationError("invalid config field 'n_pairs': must be >= 1");
  if (c.n_bins < 1) throw ValidationError("invalid config field 'n_bins': must be >= 1");
  if (c.states.empty() && !c.simulate) throw ValidationError("invalid config field 'states': at least one state required");
}

/// "T=0.80" style label; two decimals when that is exact, otherwise the
/// shortest round-trip form.
inline std::string temperature_label(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  if (std::stod(buf) == t) return std::string("T=") + buf;
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, t);
  return std::string("T=") + std::string(buf, p);
}

/// Filesystem-safe stem for a label.
inline std::string file_stem(const std::string& label) {
  std::string s = label;
  for (char& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_')) ch = '_';
  return s;
}

inline io::Metadata provenance() { return {{"software", std::string("covdist ") + kVersion}}; }

// ---------------------------------------------------------------------------
// simulation to files
// ---------------------------------------------------------------------------

struct SimulationFiles {
  std::string velocities, positions, energy_log;
  md::SimulationSummary summary;
};

inline void write_energy_header(std::ostream& out, const md::SimConfig& c) {
  out << "# software=covdist " << kVersion << '\n'
      << "# temperature=" << io::format_double(c.temperature) << '\n'
      << "# seed=" << c.seed << '\n'
      << "# dt=" << io::format_double(c.dt) << '\n'
      << "# sample_stride=" << c.sample_stride << '\n'
      << "step kinetic potential total temperature\n";
}

inline SimulationFiles simulate_to_files(const md::SimConfig& config, const std::string& dir, const std::string& stem) {
  md::validate(config);
  std::filesystem::create_directories(dir);
  SimulationFiles files;
  const auto base = (std::filesystem::path(dir) / stem).string();
  files.velocities = base + ".vel.cvtj";
  files.positions = base + ".pos.cvtj";
  files.energy_log = base + ".energy.log";

  io::TrajectoryWriter vel(files.velocities, {Channel::velocity, config.n_particles, 0, config.dt, config.sample_stride});
  io::TrajectoryWriter pos(files.positions, {Channel::position, config.n_particles, 0, config.dt, config.position_stride});
  auto log = io::open_output(files.energy_log);
  write_energy_header(log, config);

  md::SimulationObserver obs;
  obs.on_velocity_frame = [&](std::size_t, std::span<const Vec3> v) { vel.write_frame(v); };
  obs.on_position_frame = [&](std::size_t, std::span<const Vec3> p) { pos.write_frame(p); };
  obs.on_energy = [&](const md::EnergyRecord& r) {
    log << r.step << ' ' << io::format_double(r.kinetic) << ' ' << io::format_double(r.potential) << ' '
        << io::format_double(r.total) << ' ' << io::format_double(r.temperature) << '\n';
  };
  files.summary = md::run_simulation(config, obs);
  vel.finish();
  pos.finish();
  log.close();
  if (log.fail()) throw RuntimeError("write failed on '" + files.energy_log + "'");
  return files;
}

/// Runs one simulation per temperature and returns matching state sources.
inline std::vector<StateSource> simulate_states(const SimulateBlock& block, const std::string& dir,
                                                std::vector<md::SimulationSummary>* summaries = nullptr) {
  std::vector<StateSource> states;
  for (double t : block.temperatures) {
    md::SimConfig c = block.base;
    c.temperature = t;
    StateSource s;
    s.label = temperature_label(t);
    s.temperature = t;
    auto files = simulate_to_files(c, dir, file_stem(s.label));
    s.velocities = files.velocities;
    s.positions = files.positions;
    if (summaries) summaries->push_back(files.summary);
    states.push_back(std::move(s));
  }
  return states;
}

// ---------------------------------------------------------------------------
// per-state analysis
// ---------------------------------------------------------------------------

struct StateData {
  StateSource source;
  ParticleDescriptors descriptors;
  double dt{0.0};
  Channel channel{Channel::velocity};
};

inline StateData load_state(const StateSource& s, const PipelineConfig& c) {
  StateData d;
  d.source = s;
  if (!s.csv.empty()) {
    if (!(s.csv_dt > 0.0)) throw ValidationError("state '" + s.label + "': csv input needs a positive dt");
    auto in = io::open_input(s.csv);
    auto series = io::read_series_csv(in, s.csv_dt, s.csv_channel);
    auto frames = io::series_to_frames(series);
    d.dt = frames.frame_spacing();
    d.channel = frames.channel;
    d.descriptors = particle_descriptors(replay_of(frames), frames.n_particles, c.segment_length, c.normalization,
                                         c.lag_normalization);
  } else if (!s.velocities.empty()) {
    io::TrajectoryReader r(s.velocities);
    d.dt = r.header().dt * static_cast<double>(r.header().stride);
    d.channel = r.header().channel;
    d.descriptors = particle_descriptors(replay_file(s.velocities), r.header().n_particles, c.segment_length,
                                         c.normalization, c.lag_normalization);
  } else {
    throw ValidationError("state '" + s.label + "': no input (set 'velocities' or 'csv')");
  }
  return d;
}

inline std::vector<StateData> load_states(const std::vector<StateSource>& sources, const PipelineConfig& c) {
  std::vector<StateData> out;
  for (const auto& s : sources) {
    out.push_back(load_state(s, c));
    const auto& first = out.front();
    const auto& last = out.back();
    if (last.channel != first.channel) {
      throw ValidationError("state '" + last.source.label + "' has channel " + channel_name(last.channel) +
                            ", expected " + channel_name(first.channel));
    }
    if (last.dt != first.dt) {
      throw ValidationError("state '" + last.source.label + "' has sample spacing " + io::format_double(last.dt) +
                            ", expected " + io::format_double(first.dt));
    }
  }
  return out;
}

inline StateDescriptor state_descriptor(const StateData& s, DescriptorMode mode) {
  const auto& parts = s.descriptors.particles;
  if (mode == DescriptorMode::single_particle) {
    if (s.source.particle >= parts.size()) {
      throw ValidationError("state '" + s.source.label + "': particle index " + std::to_string(s.source.particle) +
                            " out of range (" + std::to_string(parts.size()) + " particles)");
    }
    return {s.source.label, s.source.temperature, parts[s.source.particle]};
  }
  return {s.source.label, s.source.temperature, euclidean_mean(parts)};
}

inline std::vector<StateDescriptor> state_descriptors(const std::vector<StateData>& states, DescriptorMode mode) {
  std::vector<StateDescriptor> out;
  for (const auto& s : states) out.push_back(state_descriptor(s, mode));
  return out;
}

struct DiffusionEstimate {
  std::string label;
  std::optional<double> temperature;
  std::optional<md::MsdResult> msd;
  std::optional<md::VacfResult> vacf;

  std::optional<double> value(DiffusionEstimator e) const {
    if (e == DiffusionEstimator::msd && msd) return msd->diffusion;
    if (vacf) return vacf->diffusion;
    if (msd) return msd->diffusion;
    return std::nullopt;
  }
};

inline DiffusionEstimate estimate_diffusion(const StateSource& s, const PipelineConfig& c) {
  DiffusionEstimate d{s.label, s.temperature, std::nullopt, std::nullopt};
  if (!s.positions.empty()) d.msd = md::diffusion_msd(io::read_trajectory(s.positions));
  if (!s.velocities.empty()) {
    io::TrajectoryReader r(s.velocities);
    if (r.header().channel == Channel::velocity) {
      const std::size_t frames = r.header().n_frames;
      if (frames < 2) throw ValidationError("state '" + s.label + "': too few frames for the VACF");
      const double spacing = r.header().dt * static_cast<double>(r.header().stride);
      md::VacfAccumulator acc(r.header().n_particles, md::vacf_max_lag(frames, spacing, c.vacf.max_lag_time),
                              md::vacf_origin_stride(frames, c.vacf.origin_stride));
      std::vector<Vec3> frame;
      while (r.next(frame)) acc.push(frame);
      d.vacf = md::integrate_vacf(acc.vacf(), spacing, c.vacf.decay_fraction);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// outputs
// ---------------------------------------------------------------------------

inline io::Metadata analysis_metadata(const PipelineConfig& c, const std::vector<StateData>& states) {
  io::Metadata m = provenance();
  m.emplace_back("segment_length", std::to_string(c.segment_length));
  std::string ks;
  for (const auto& s : states) ks += (ks.empty() ? "" : ";") + s.source.label + ":" + std::to_string(s.descriptors.windows);
  m.emplace_back("windows", ks);
  m.emplace_back("normalization", normalization_name(c.normalization));
  m.emplace_back("lag_normalization", c.lag_normalization == LagNormalization::biased ? "biased" : "unbiased");
  m.emplace_back("descriptor_mode", descriptor_mode_name(c.descriptor_mode));
  m.emplace_back("seed", std::to_string(c.seed));
  return m;
}

inline std::string output_path(const PipelineConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return (std::filesystem::path(c.out) / name).string();
}

inline void write_descriptors(const PipelineConfig& c, const std::vector<StateDescriptor>& ds, const io::Metadata& meta) {
  std::filesystem::create_directories(std::filesystem::path(c.out) / "descriptors");
  for (const auto& d : ds) {
    auto out = io::open_output(output_path(c, "descriptors/" + file_stem(d.label) + ".csv"));
    io::Metadata m = meta;
    m.emplace_back("label", d.label);
    io::write_descriptor(out, d.matrix, m);
  }
}

inline void write_diffusion(const PipelineConfig& c, const std::vector<DiffusionEstimate>& ds) {
  auto out = io::open_output(output_path(c, "diffusion.csv"));
  io::Metadata m = provenance();
  m.emplace_back("msd_window", "[t_max/4,t_max/2]");
  m.emplace_back("vacf_max_lag_time", io::format_double(c.vacf.max_lag_time));
  m.emplace_back("vacf_origin_stride", std::to_string(c.vacf.origin_stride));
  m.emplace_back("vacf_decay_fraction", io::format_double(c.vacf.decay_fraction));
  io::write_metadata(out, m);
  out << "label,temperature,d_msd,msd_r_squared,msd_exponent,msd_diffusive,d_vacf,vacf_t_cut,vacf_divergent,"
         "vacf_temperature\n";
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  for (const auto& d : ds) {
    out << d.label << ',' << opt(d.temperature) << ',';
    if (d.msd) {
      out << io::format_double(d.msd->diffusion) << ',' << io::format_double(d.msd->r_squared) << ','
          << io::format_double(d.msd->loglog_exponent) << ',' << (d.msd->diffusive ? "true" : "false") << ',';
    } else {
      out << ",,,,";
    }
    if (d.vacf) {
      out << io::format_double(d.vacf->diffusion) << ',' << io::format_double(d.vacf->t_cut) << ','
          << (d.vacf->divergent ? "true" : "false") << ',' << io::format_double(d.vacf->temperature);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

struct AnalysisResult {
  std::vector<StateDescriptor> descriptors;
  std::optional<DistanceMatrix> distances;
  std::optional<Embedding> embedding;
  std::vector<DiffusionEstimate> diffusion;
  std::optional<LinearFit> fit;
  std::string fit_note;
};

inline std::vector<StateSource> resolve_states(const PipelineConfig& c) {
  if (!c.simulate) return c.states;
  return simulate_states(*c.simulate, (std::filesystem::path(c.out) / "trajectories").string());
}

inline DistanceMatrix compute_distances(const PipelineConfig& c, const std::vector<StateData>& states,
                                        std::vector<StateDescriptor>* descriptors_out = nullptr) {
  auto ds = state_descriptors(states, c.descriptor_mode);
  auto meta = analysis_metadata(c, states);
  write_descriptors(c, ds, meta);
  auto dm = distance_matrix(ds, c.distance_path);
  auto out = io::open_output(output_path(c, "distance_matrix.csv"));
  io::write_distance_matrix(out, dm, meta);
  if (descriptors_out) *descriptors_out = std::move(ds);
  return dm;
}

inline Embedding compute_embedding(const PipelineConfig& c, const DistanceMatrix& dm, io::Metadata meta) {
  const auto dims = std::min<Eigen::Index>(c.embedding_dims, static_cast<Eigen::Index>(dm.size()));
  auto e = embed(dm, dims, c.embedding_method);
  meta.emplace_back("dims_requested", std::to_string(c.embedding_dims));
  meta.emplace_back("dims", std::to_string(dims));
  auto out = io::open_output(output_path(c, "embedding.csv"));
  io::write_embedding(out, e, meta);
  return e;
}

/// normalize -> segment -> descriptors -> distances -> embedding -> fit.
inline AnalysisResult run_analysis(const PipelineConfig& c) {
  validate(c);
  AnalysisResult r;
  const auto sources = resolve_states(c);
  const auto states = load_states(sources, c);
  r.distances = compute_distances(c, states, &r.descriptors);
  const auto meta = analysis_metadata(c, states);
  r.embedding = compute_embedding(c, *r.distances, meta);

  for (const auto& s : sources) r.diffusion.push_back(estimate_diffusion(s, c));
  write_diffusion(c, r.diffusion);

  std::vector<double> pc1, dval;
  for (std::size_t i = 0; i < r.diffusion.size(); ++i) {
    if (auto v = r.diffusion[i].value(c.diffusion_estimator)) {
      pc1.push_back(r.embedding->coordinates(static_cast<Eigen::Index>(i), 0));
      dval.push_back(*v);
    }
  }
  if (states.size() < 2) {
    r.fit_note = "insufficient states";
  } else if (pc1.size() != states.size()) {
    r.fit_note = "diffusion coefficient unavailable for some states";
  } else {
    try {
      r.fit = linear_fit(pc1, dval);
    } catch (const ValidationError&) {
      r.fit_note = "degenerate PC1 coordinates";
    }
  }
  auto out = io::open_output(output_path(c, "fit.txt"));
  io::write_metadata(out, meta);
  out << "x=pc1\n" << "y=" << (c.diffusion_estimator == DiffusionEstimator::msd ? "d_msd" : "d_vacf") << '\n';
  if (r.fit) {
    out << "status=ok\n"
        << "n_points=" << r.fit->n_points << '\n'
        << "slope=" << io::format_double(r.fit->slope) << '\n'
        << "intercept=" << io::format_double(r.fit->intercept) << '\n'
        << "pearson_r=" << io::format_double(r.fit->pearson_r) << '\n';
  } else {
    out << "status=skipped\nnote=" << r.fit_note << '\n';
  }
  return r;
}

struct HistogramSet {
  std::vector<std::vector<double>> samples;
  std::vector<DistanceHistogram> histograms;
  std::vector<std::string> files;
};

/// Reference-vs-each-state pair distances over per-particle descriptors, all
/// binned on one shared range. Pair list i uses seed + i.
inline HistogramSet run_histograms(const PipelineConfig& c) {
  validate(c);
  const auto sources = resolve_states(c);
  const auto states = load_states(sources, c);
  std::string ref = c.reference.empty() ? states.front().source.label : c.reference;
  std::size_t ref_idx = states.size();
  std::string available;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].source.label == ref) ref_idx = i;
    available += (available.empty() ? "" : ", ") + states[i].source.label;
  }
  if (ref_idx == states.size()) {
    throw ValidationError("reference state '" + ref + "' not found; available: " + available);
  }
  HistogramSet set;
  const auto& a = states[ref_idx].descriptors.particles;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& b = states[i].descriptors.particles;
    std::span<const BlockToeplitzCov> sb = i == ref_idx ? std::span<const BlockToeplitzCov>(a) : std::span(b);
    set.samples.push_back(sample_pair_distances(a, sb, c.n_pairs, c.seed + i, c.distance_path));
  }
  double lo = set.samples.front().front(), hi = lo;
  for (const auto& s : set.samples)
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  io::Metadata meta = analysis_metadata(c, states);
  meta.emplace_back("n_pairs", std::to_string(c.n_pairs));
  meta.emplace_back("n_bins", std::to_string(c.n_bins));
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto h = hi > lo ? histogram(set.samples[i], c.n_bins, std::pair{lo, hi}) : histogram(set.samples[i], c.n_bins);
    h.label_pair = {ref, states[i].source.label};
    h.rng_seed = c.seed + i;
    auto path = output_path(c, "hist_" + file_stem(ref) + "__" + file_stem(states[i].source.label) + ".csv");
    auto out = io::open_output(path);
    io::write_histogram(out, h, meta);
    set.histograms.push_back(std::move(h));
    set.files.push_back(path);
  }
  return set;
}

}  // namespace covdist
