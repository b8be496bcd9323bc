// lidarup command-line tool: run, eval, synth.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lidarup/commands.hpp"

namespace {

int fatal(const std::string& msg) {
  std::cerr << "lidarup: " << msg << '\n';
  return lidarup::kExitFatal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal LIDAR upsampling from a mono camera"};
  app.require_subcommand(1);

  std::string config_path, out_dir, protocol_text;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto* run = app.add_subcommand("run", "upsample the camera-only frames of a manifest");
  std::string manifest;
  bool no_ply = false;
  run->add_option("manifest", manifest, "sequence manifest")->required();
  run->add_option("--config", config_path, "key = value pipeline config");
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "overrides the config seed");
  run->add_option("--threads", threads, "per-object worker threads");
  run->add_option("--protocol", protocol_text, "stored evaluation protocol");
  run->add_flag("--no-ply", no_ply, "skip PLY export");

  auto* eval = app.add_subcommand("eval", "compare virtual clouds with ground truth");
  std::string virtual_dir, gt_dir, report, eval_manifest;
  double emd_eps = 1e-4;
  std::size_t emd_points = 2048;
  bool per_object = false;
  eval->add_option("virtual_dir", virtual_dir)->required();
  eval->add_option("ground_truth_dir", gt_dir)->required();
  eval->add_option("--out", report, "JSON report path")->required();
  eval->add_option("--protocol", protocol_text, "none|full|vehicle|key=value;...");
  eval->add_option("--seed", seed, "downsampling seed");
  eval->add_option("--emd-eps", emd_eps, "final auction epsilon, m^2");
  eval->add_option("--emd-points", emd_points, "EMD subsample size");
  eval->add_option("--manifest", eval_manifest, "restrict to the camera view");
  eval->add_flag("--per-object", per_object, "one row per tracked object");

  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  std::string scenario;
  synth->add_option("scenario", scenario, "scenario file")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "overrides the scenario seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      lidarup::PipelineConfig cfg;
      try {
        cfg = config_path.empty() ? lidarup::PipelineConfig{}
                                  : lidarup::read_pipeline_config(config_path);
        if (seed) cfg.seed = *seed;
        if (threads > 0) cfg.threads = threads;
        if (!protocol_text.empty()) cfg.protocol = lidarup::parse_protocol(protocol_text);
        cfg.validate();
      } catch (const lidarup::Error& e) {
        return fatal(e.what());
      }
      lidarup::RunOptions opt;
      opt.manifest_path = manifest;
      opt.config = cfg;
      opt.out_dir = out_dir;
      opt.write_ply = !no_ply;
      opt.log = &std::cerr;
      const auto s = lidarup::run_sequence(opt);
      std::cout << s.lidar_frames << " lidar frames, " << s.virtual_frames
                << " virtual frames, " << s.failed_frames << " failed\n";
      return s.exit_code;
    }
    if (eval->parsed()) {
      lidarup::EvalOptions opt;
      opt.virtual_dir = virtual_dir;
      opt.ground_truth_dir = gt_dir;
      opt.protocol = lidarup::parse_protocol(protocol_text);
      if (seed) opt.protocol.seed = *seed;
      opt.report_path = report;
      opt.emd_epsilon = emd_eps;
      opt.emd_max_points = emd_points;
      opt.per_object = per_object;
      if (!eval_manifest.empty()) opt.manifest_path = eval_manifest;
      opt.log = &std::cerr;
      const auto s = lidarup::evaluate_directories(opt);
      std::cout << s.rows.size() << " rows, mean cd " << s.mean_cd << " m^2, mean emd "
                << s.mean_emd << " m^2";
      if (!s.unpaired.empty()) std::cout << ", " << s.unpaired.size() << " unpaired";
      std::cout << '\n';
      return s.exit_code;
    }
    const auto s = lidarup::synth_sequence(scenario, out_dir, seed);
    std::cout << s.frames << " frames, " << s.lidar_frames << " with LIDAR, "
              << s.virtual_frames << " virtual ground truths\n";
    return lidarup::kExitOk;
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}
