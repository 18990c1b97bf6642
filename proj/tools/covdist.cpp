// covdist command-line driver.
//
//   covdist simulate  --config sim.json      trajectories + energy logs
//   covdist analyze   --config pipeline.json distances, embedding, fit
//   covdist hist      --config pipeline.json pair-distance histograms
//   covdist distmat   --config pipeline.json distance matrix only
//   covdist embed     --config pipeline.json embedding (reuses a matrix if given)
//   covdist diffusion --config pipeline.json MSD and VACF estimates
//
// Exit status: 0 success, 2 validation error, 1 runtime error.

#include <covdist/io/config.hpp>
#include <covdist/pipeline.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace covdist;

struct Overrides {
  std::string config;
  std::optional<std::size_t> segment_len;
  std::optional<std::size_t> pairs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> reference;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file")->required();
  cmd->add_option("--segment-len", o.segment_len, "segment length N");
  cmd->add_option("--pairs", o.pairs, "particle pairs per histogram");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
}

PipelineConfig pipeline_config(const Overrides& o) {
  auto c = io::load_pipeline_config(o.config);
  if (o.segment_len) c.segment_length = *o.segment_len;
  if (o.pairs) c.n_pairs = *o.pairs;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.reference) c.reference = *o.reference;
  validate(c);
  return c;
}

int cmd_simulate(const Overrides& o) {
  std::string out = "out", label;
  const auto base = std::filesystem::path(o.config).parent_path();
  auto block = io::parse_sim_config(io::load_json(o.config), base, &out, &label);
  if (o.seed) block.base.seed = *o.seed;
  if (o.out) out = *o.out;
  if (!label.empty() && block.temperatures.size() > 1) {
    throw ValidationError("invalid config field 'label': only valid with a single temperature");
  }

  nlohmann::json summary = nlohmann::json::array();
  for (double t : block.temperatures) {
    md::SimConfig c = block.base;
    c.temperature = t;
    const std::string name = label.empty() ? temperature_label(t) : label;
    auto files = simulate_to_files(c, out, file_stem(name));
    const auto& s = files.summary;
    summary.push_back({{"label", name},
                       {"temperature", t},
                       {"velocities", files.velocities},
                       {"positions", files.positions},
                       {"energy_log", files.energy_log},
                       {"velocity_frames", s.velocity_frames},
                       {"position_frames", s.position_frames},
                       {"mean_temperature", s.mean_temperature},
                       {"energy_drift", s.energy_drift}});
    std::cerr << name << ": mean T " << s.mean_temperature << ", energy drift " << s.energy_drift << '\n';
  }
  std::cout << "# summary\n" << nlohmann::json{{"software", std::string("covdist ") + kVersion}, {"states", summary}}.dump()
            << '\n';
  return 0;
}

int cmd_analyze(const Overrides& o) {
  const auto c = pipeline_config(o);
  auto r = run_analysis(c);
  std::cout << "distance_matrix=" << output_path(c, "distance_matrix.csv") << '\n'
            << "embedding=" << output_path(c, "embedding.csv") << '\n'
            << "diffusion=" << output_path(c, "diffusion.csv") << '\n'
            << "fit=" << output_path(c, "fit.txt") << '\n';
  if (r.fit) std::cout << "pearson_r=" << io::format_double(r.fit->pearson_r) << '\n';
  else std::cout << "fit_note=" << r.fit_note << '\n';
  return 0;
}

int cmd_hist(const Overrides& o) {
  const auto c = pipeline_config(o);
  auto set = run_histograms(c);
  for (std::size_t i = 0; i < set.files.size(); ++i) {
    double mean = 0.0;
    for (double v : set.samples[i]) mean += v;
    mean /= static_cast<double>(set.samples[i].size());
    std::cout << set.files[i] << " mean=" << io::format_double(mean) << '\n';
  }
  return 0;
}

int cmd_distmat(const Overrides& o) {
  const auto c = pipeline_config(o);
  validate(c);
  const auto states = load_states(resolve_states(c), c);
  compute_distances(c, states);
  std::cout << output_path(c, "distance_matrix.csv") << '\n';
  return 0;
}

int cmd_embed(const Overrides& o) {
  const auto c = pipeline_config(o);
  if (!c.distance_matrix_path.empty()) {
    auto in = io::open_input(c.distance_matrix_path);
    const auto dm = io::read_distance_matrix(in);
    io::Metadata meta = provenance();
    meta.emplace_back("distance_matrix", c.distance_matrix_path);
    compute_embedding(c, dm, meta);
  } else {
    const auto states = load_states(resolve_states(c), c);
    const auto dm = compute_distances(c, states);
    compute_embedding(c, dm, analysis_metadata(c, states));
  }
  std::cout << output_path(c, "embedding.csv") << '\n';
  return 0;
}

int cmd_diffusion(const Overrides& o) {
  const auto c = pipeline_config(o);
  std::vector<DiffusionEstimate> est;
  for (const auto& s : resolve_states(c)) est.push_back(estimate_diffusion(s, c));
  write_diffusion(c, est);
  std::cout << output_path(c, "diffusion.csv") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance-descriptor analysis of particle trajectories"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides o;
  auto* sim = app.add_subcommand("simulate", "run Lennard-Jones simulations");
  auto* analyze = app.add_subcommand("analyze", "full analysis pipeline");
  auto* hist = app.add_subcommand("hist", "pair-distance histograms against a reference state");
  auto* distmat = app.add_subcommand("distmat", "state distance matrix");
  auto* embed = app.add_subcommand("embed", "low-dimensional embedding of the distance matrix");
  auto* diffusion = app.add_subcommand("diffusion", "diffusion coefficients per state");
  for (auto* cmd : {sim, analyze, hist, distmat, embed, diffusion}) add_common(cmd, o);
  hist->add_option("--reference", o.reference, "reference state label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*analyze) return cmd_analyze(o);
    if (*hist) return cmd_hist(o);
    if (*distmat) return cmd_distmat(o);
    if (*embed) return cmd_embed(o);
    if (*diffusion) return cmd_diffusion(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
