#pragma once

// JSON config files. Both schemas are flat objects; unknown keys are
// rejected so typos surface as validation errors. Relative paths resolve
// against the directory holding the config file.
//
// Simulation:
//   n_particles, box_length | density, temperature | temperatures, dt,
//   n_steps_equil, n_steps_prod, cutoff_radius, langevin_gamma, seed,
//   sample_stride, position_stride, out, label
//
// Pipeline:
//   states: [{label, temperature, velocities, positions, csv, dt, channel,
//             particle}]
//   simulate: {simulation keys}   (alternative to states)
//   segment_length, normalization, lag_normalization, descriptor_mode,
//   distance_path, n_pairs, seed, n_bins, embedding_dims, embedding_method,
//   diffusion_estimator, vacf_max_lag_time, vacf_origin_stride,
//   vacf_decay_fraction, reference, distance_matrix, out

#include <covdist/core.hpp>
#include <covdist/md/system.hpp>
#include <covdist/pipeline.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

namespace covdist::io {

using nlohmann::json;

namespace detail {

inline ValidationError field_error(const std::string& field, const std::string& what) {
  return ValidationError("invalid config field '" + field + "': " + what);
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw field_error(where.empty() ? "<root>" : where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw field_error(where.empty() ? k : where + "." + k, "unknown key");
  }
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw field_error(field, "expected a number");
  return j.get<double>();
}

inline std::uint64_t count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw field_error(field, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) throw field_error(field, "expected a string");
  return j.get<std::string>();
}

inline bool flag(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw field_error(field, "expected true or false");
  return j.get<bool>();
}

template <class F>
auto with_field(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind("invalid config field", 0) == 0) throw;
    throw field_error(field, msg);
  }
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Simulation block: a single SimConfig plus an optional temperature sweep.
inline SimulateBlock parse_sim_config(const json& j, const std::filesystem::path& base, std::string* out = nullptr,
                                      std::string* label = nullptr, const std::string& where = "") {
  using namespace detail;
  check_keys(j, where,
             {"n_particles", "box_length", "density", "temperature", "temperatures", "dt", "n_steps_equil",
              "n_steps_prod", "cutoff_radius", "langevin_gamma", "seed", "sample_stride", "position_stride", "out",
              "label"});
  auto name = [&](const char* k) { return where.empty() ? std::string(k) : where + "." + k; };
  SimulateBlock b;
  md::SimConfig& c = b.base;
  if (j.contains("n_particles")) c.n_particles = count(j["n_particles"], name("n_particles"));
  if (j.contains("box_length") && j.contains("density")) {
    throw field_error(name("density"), "give either box_length or density, not both");
  }
  if (j.contains("box_length")) c.box_length = number(j["box_length"], name("box_length"));
  if (j.contains("density")) {
    const double rho = number(j["density"], name("density"));
    if (!(rho > 0.0)) throw field_error(name("density"), "must be > 0");
    c.box_length = md::box_for_density(c.n_particles, rho);
  } else if (!j.contains("box_length")) {
    c.box_length = md::box_for_density(c.n_particles, 0.8);
  }
  if (j.contains("temperature") && j.contains("temperatures")) {
    throw field_error(name("temperatures"), "give either temperature or temperatures, not both");
  }
  if (j.contains("temperature")) c.temperature = number(j["temperature"], name("temperature"));
  if (j.contains("temperatures")) {
    const auto& t = j["temperatures"];
    if (!t.is_array() || t.empty()) throw field_error(name("temperatures"), "expected a non-empty array of numbers");
    for (std::size_t i = 0; i < t.size(); ++i) {
      b.temperatures.push_back(number(t[i], name("temperatures") + "[" + std::to_string(i) + "]"));
    }
  } else {
    b.temperatures.push_back(c.temperature);
  }
  if (j.contains("dt")) c.dt = number(j["dt"], name("dt"));
  if (j.contains("n_steps_equil")) c.n_steps_equil = count(j["n_steps_equil"], name("n_steps_equil"));
  if (j.contains("n_steps_prod")) c.n_steps_prod = count(j["n_steps_prod"], name("n_steps_prod"));
  if (j.contains("cutoff_radius")) c.cutoff_radius = number(j["cutoff_radius"], name("cutoff_radius"));
  if (j.contains("langevin_gamma")) c.langevin_gamma = number(j["langevin_gamma"], name("langevin_gamma"));
  if (j.contains("seed")) c.seed = count(j["seed"], name("seed"));
  if (j.contains("sample_stride")) c.sample_stride = count(j["sample_stride"], name("sample_stride"));
  if (j.contains("position_stride")) c.position_stride = count(j["position_stride"], name("position_stride"));
  if (out && j.contains("out")) *out = resolve(base, text(j["out"], name("out")));
  if (label && j.contains("label")) *label = text(j["label"], name("label"));

  for (double t : b.temperatures) {
    md::SimConfig probe = c;
    probe.temperature = t;
    try {
      md::validate(probe);
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      const std::string tag = "invalid config field '";
      if (!where.empty() && msg.rfind(tag, 0) == 0) msg.insert(tag.size(), where + ".");
      throw ValidationError(msg);
    }
  }
  return b;
}

inline StateSource parse_state(const json& j, const std::filesystem::path& base, std::size_t i) {
  using namespace detail;
  const std::string where = "states[" + std::to_string(i) + "]";
  check_keys(j, where, {"label", "temperature", "velocities", "positions", "csv", "dt", "channel", "particle"});
  StateSource s;
  if (!j.contains("label")) throw field_error(where + ".label", "required");
  s.label = text(j["label"], where + ".label");
  if (s.label.empty()) throw field_error(where + ".label", "must not be empty");
  if (j.contains("temperature")) s.temperature = number(j["temperature"], where + ".temperature");
  if (j.contains("velocities")) s.velocities = resolve(base, text(j["velocities"], where + ".velocities"));
  if (j.contains("positions")) s.positions = resolve(base, text(j["positions"], where + ".positions"));
  if (j.contains("csv")) s.csv = resolve(base, text(j["csv"], where + ".csv"));
  if (s.csv.empty() == s.velocities.empty()) {
    throw field_error(where, "exactly one of 'velocities' or 'csv' is required");
  }
  if (j.contains("dt")) s.csv_dt = number(j["dt"], where + ".dt");
  if (!s.csv.empty() && !(s.csv_dt > 0.0)) throw field_error(where + ".dt", "csv input needs dt > 0");
  if (j.contains("channel")) {
    const auto ch = text(j["channel"], where + ".channel");
    s.csv_channel = with_field(where + ".channel", [&] { return parse_channel(ch); });
  }
  if (j.contains("particle")) s.particle = count(j["particle"], where + ".particle");
  return s;
}

inline PipelineConfig parse_pipeline_config(const json& j, const std::filesystem::path& base) {
  using namespace detail;
  check_keys(j, "",
             {"states", "simulate", "segment_length", "normalization", "lag_normalization", "descriptor_mode",
              "distance_path", "n_pairs", "seed", "n_bins", "embedding_dims", "embedding_method",
              "diffusion_estimator", "vacf_max_lag_time", "vacf_origin_stride", "vacf_decay_fraction", "reference",
              "distance_matrix", "out"});
  PipelineConfig c;
  if (j.contains("states") && j.contains("simulate")) {
    throw field_error("states", "give either states or simulate, not both");
  }
  if (j.contains("states")) {
    const auto& s = j["states"];
    if (!s.is_array()) throw field_error("states", "expected an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto st = parse_state(s[i], base, i);
      if (!seen.insert(st.label).second) {
        throw field_error("states[" + std::to_string(i) + "].label", "duplicate label '" + st.label + "'");
      }
      c.states.push_back(std::move(st));
    }
  }
  if (j.contains("simulate")) c.simulate = parse_sim_config(j["simulate"], base, nullptr, nullptr, "simulate");
  if (j.contains("segment_length")) c.segment_length = count(j["segment_length"], "segment_length");
  if (j.contains("normalization")) {
    const auto v = text(j["normalization"], "normalization");
    c.normalization = with_field("normalization", [&] { return parse_normalization(v); });
  }
  if (j.contains("lag_normalization")) {
    const auto v = text(j["lag_normalization"], "lag_normalization");
    if (v == "biased") c.lag_normalization = LagNormalization::biased;
    else if (v == "unbiased") c.lag_normalization = LagNormalization::unbiased;
    else throw field_error("lag_normalization", "expected 'biased' or 'unbiased'");
  }
  if (j.contains("descriptor_mode")) {
    const auto v = text(j["descriptor_mode"], "descriptor_mode");
    c.descriptor_mode = with_field("descriptor_mode", [&] { return parse_descriptor_mode(v); });
  }
  if (j.contains("distance_path")) {
    const auto v = text(j["distance_path"], "distance_path");
    if (v == "dense") c.distance_path = DistancePath::dense;
    else if (v == "lag-table") c.distance_path = DistancePath::lag_table;
    else throw field_error("distance_path", "expected 'dense' or 'lag-table'");
  }
  if (j.contains("n_pairs")) c.n_pairs = count(j["n_pairs"], "n_pairs");
  if (j.contains("seed")) c.seed = count(j["seed"], "seed");
  if (j.contains("n_bins")) c.n_bins = count(j["n_bins"], "n_bins");
  if (j.contains("embedding_dims")) c.embedding_dims = static_cast<Eigen::Index>(count(j["embedding_dims"], "embedding_dims"));
  if (j.contains("embedding_method")) {
    const auto v = text(j["embedding_method"], "embedding_method");
    c.embedding_method = with_field("embedding_method", [&] { return parse_embedding_method(v); });
  }
  if (j.contains("diffusion_estimator")) {
    const auto v = text(j["diffusion_estimator"], "diffusion_estimator");
    if (v == "msd") c.diffusion_estimator = DiffusionEstimator::msd;
    else if (v == "vacf") c.diffusion_estimator = DiffusionEstimator::vacf;
    else throw field_error("diffusion_estimator", "expected 'msd' or 'vacf'");
  }
  if (j.contains("vacf_max_lag_time")) c.vacf.max_lag_time = number(j["vacf_max_lag_time"], "vacf_max_lag_time");
  if (j.contains("vacf_origin_stride")) c.vacf.origin_stride = count(j["vacf_origin_stride"], "vacf_origin_stride");
  if (j.contains("vacf_decay_fraction")) {
    c.vacf.decay_fraction = number(j["vacf_decay_fraction"], "vacf_decay_fraction");
    if (!(c.vacf.decay_fraction > 0.0 && c.vacf.decay_fraction < 1.0)) {
      throw field_error("vacf_decay_fraction", "must lie in (0, 1)");
    }
  }
  if (c.vacf.max_lag_time < 0.0) throw field_error("vacf_max_lag_time", "must be >= 0");
  if (j.contains("reference")) c.reference = text(j["reference"], "reference");
  if (j.contains("distance_matrix")) c.distance_matrix_path = resolve(base, text(j["distance_matrix"], "distance_matrix"));
  if (j.contains("out")) c.out = resolve(base, text(j["out"], "out"));
  else c.out = resolve(base, c.out);
  validate(c);
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(load_json(path), std::filesystem::path(path).parent_path());
}

}  // namespace covdist::io
