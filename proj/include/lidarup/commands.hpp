// lidarup - temporal LIDAR upsampling from a mono camera
//
// The three batch commands behind the command-line tool: run the upsampler
// over a manifest, evaluate virtual clouds against ground truth, and
// generate a synthetic sequence. Each returns a process exit status:
// 0 success, 1 some frames failed, 2 fatal.

#ifndef LIDARUP_COMMANDS_HPP
#define LIDARUP_COMMANDS_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidarup/association.hpp"
#include "lidarup/config.hpp"
#include "lidarup/dataset_io.hpp"
#include "lidarup/metrics.hpp"
#include "lidarup/pipeline.hpp"
#include "lidarup/synthesis.hpp"
#include "lidarup/synthetic.hpp"

namespace lidarup {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitFatal = 2;

namespace detail {

inline void log_line(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << '\n';
}

inline std::string fmt_ms(double ms) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << ms;
  return os.str();
}

inline std::vector<std::string> list_bins(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bin")
      out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<int> out;
  int v = 0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw Error(ErrorCode::kParse, path + ": integers expected");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string manifest_path;
  PipelineConfig config;
  std::string out_dir;
  bool write_ply = true;
  std::ostream* log = nullptr;  // timings and per-frame errors
};

struct RunSummary {
  int exit_code = kExitOk;
  int lidar_frames = 0;
  int virtual_frames = 0;
  int failed_frames = 0;
  std::vector<StageTimings> camera_frame_timings;
  std::vector<StageTimings> lidar_frame_timings;  // association only
};

/// Upsamples every camera-only frame of a manifest. Writes
/// virtual/NNNNNN.{bin,ply,labels} and motions.json into out_dir.
inline RunSummary run_sequence(const RunOptions& opt) {
  namespace fs = std::filesystem;
  RunSummary summary;
  const SequenceManifest m = read_manifest(opt.manifest_path);
  UpsamplingPipeline pipe(m.cam, m.t_lidar_to_cam, opt.config);
  const fs::path out(opt.out_dir);
  fs::create_directories(out / "virtual");

  nlohmann::json frames_json = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  auto fail = [&](int frame, const std::string& why) {
    ++summary.failed_frames;
    failures.push_back({{"frame", frame}, {"error", why}});
    detail::log_line(opt.log, "frame " + std::to_string(frame) + ": " + why);
  };

  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const ManifestFrame& f = m.frames[i];
    const int frame = static_cast<int>(i);
    try {
      const GrayImage image = read_pnm(f.image_path);
      if (f.cloud_path) {
        const PointCloud cloud = read_cloud_bin(*f.cloud_path);
        const StageTimings t =
            pipe.process_lidar_frame(frame, cloud, image, m.lidar_pose(f), f.detections);
        ++summary.lidar_frames;
        summary.lidar_frame_timings.push_back(t);
        detail::log_line(opt.log, "frame " + std::to_string(frame) + " lidar: " +
                                      std::to_string(cloud.size()) + " points, " +
                                      detail::fmt_ms(t.association) + " ms");
        continue;
      }
      if (!pipe.has_anchor()) {
        detail::log_line(opt.log, "frame " + std::to_string(frame) +
                                      ": no LIDAR frame yet, nothing to upsample");
        continue;
      }
      const VirtualFrame vf =
          pipe.process_camera_frame(frame, image, m.lidar_pose(f), f.detections);
      const std::string stem = detail::frame_name(frame, "");
      write_cloud_bin(vf.synthesized.cloud, (out / "virtual" / (stem + ".bin")).string());
      if (opt.write_ply)
        write_cloud_ply(vf.synthesized.cloud, &vf.synthesized.labels,
                        (out / "virtual" / (stem + ".ply")).string());
      {
        auto lab = detail::open_out((out / "virtual" / (stem + ".labels")).string(), false);
        for (int l : vf.synthesized.labels) lab << l << '\n';
      }
      nlohmann::json objects = nlohmann::json::array();
      for (const auto& o : vf.objects)
        objects.push_back(
            {{"track_id", o.track_id},
             {"status", to_string(o.status)},
             {"cluster_points", o.cluster_points},
             {"correspondences", o.correspondences},
             {"inliers", o.inliers},
             {"mean_reprojection_error_px", o.mean_reprojection_error},
             {"anchor_centroid",
              {o.anchor_centroid.x(), o.anchor_centroid.y(), o.anchor_centroid.z()}},
             {"t_mov", detail::transform_json(o.t_motion)},
             {"t_dynamic", detail::transform_json(o.t_dynamic)},
             {"translation", o.t_motion.translation.norm()},
             {"rotation_deg", rad2deg(rotation_angle(o.t_motion.rotation))},
             {"label", o.label == MotionLabel::kDynamic ? "dynamic" : "static"},
             {"detail", o.detail}});
      frames_json.push_back({{"frame", frame},
                             {"anchor_frame", vf.anchor_frame},
                             {"t_static", detail::transform_json(vf.t_static)},
                             {"objects", objects}});
      ++summary.virtual_frames;
      summary.camera_frame_timings.push_back(vf.timings);
      const auto& t = vf.timings;
      detail::log_line(opt.log, "frame " + std::to_string(frame) + " virtual: klt " +
                                    detail::fmt_ms(t.klt) + " ms, pose " +
                                    detail::fmt_ms(t.pose) + " ms, synthesis " +
                                    detail::fmt_ms(t.synthesis) + " ms, total " +
                                    detail::fmt_ms(t.total()) + " ms");
    } catch (const Error& e) {
      if (f.cloud_path) pipe.drop_anchor();
      fail(frame, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
      fail(frame, e.what());
    }
  }
  const nlohmann::json report{{"frames", frames_json}, {"failures", failures}};
  std::ofstream(out / "motions.json") << report.dump(1) << '\n';
  summary.exit_code = summary.failed_frames ? kExitPartial : kExitOk;
  return summary;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string virtual_dir;
  std::string ground_truth_dir;
  EvalProtocol protocol;
  std::string report_path;            // JSON; a .txt twin is written beside it
  double emd_epsilon = 1e-4;          // m^2, final auction epsilon
  std::size_t emd_max_points = 2048;  // EMD runs on a seeded subsample
  bool per_object = false;            // needs virtual NNNNNN.labels files
  std::optional<std::string> manifest_path;  // restricts both clouds to the camera view
  std::ostream* log = nullptr;
};

struct EvalRow {
  std::string frame;
  int track_id = kStaticLabel;  // kStaticLabel for whole-frame rows
  double cd = 0.0;
  double emd = 0.0;
  std::size_t n_virtual = 0;
  std::size_t n_ground_truth = 0;
  bool outlier = false;
};

struct EvalSummary {
  int exit_code = kExitOk;
  std::vector<EvalRow> rows;
  std::vector<std::string> unpaired;
  double mean_cd = 0.0, mean_emd = 0.0;
  double mean_cd_inliers = 0.0, mean_emd_inliers = 0.0;
};

namespace detail {

inline EvalRow compare_clouds(const PointCloud& v, const PointCloud& g,
                              const EvalOptions& opt) {
  EvalRow r;
  r.n_virtual = v.size();
  r.n_ground_truth = g.size();
  const std::uint64_t seed = opt.protocol.seed;
  r.cd = chamfer(v, g, seed);
  const std::size_t n = std::min({v.size(), g.size(), opt.emd_max_points});
  // Same seed on both sides, as for the Chamfer distance.
  r.emd = emd_auction(random_downsample(v, n, seed), random_downsample(g, n, seed),
                      opt.emd_epsilon);
  return r;
}

inline PointCloud in_box(const PointCloud& c, const Vec3& lo, const Vec3& hi) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < c.size(); ++i)
    if ((c.points[i].array() >= lo.array()).all() &&
        (c.points[i].array() <= hi.array()).all())
      keep.push_back(i);
  return c.select(keep);
}

}  // namespace detail

/// Pairs NNNNNN.bin files of the two directories and reports CD and EMD.
/// Per-object rows compare a track's virtual points with the non-ground
/// ground-truth points inside their bounding box grown by 0.5 m.
inline EvalSummary evaluate_directories(const EvalOptions& opt) {
  namespace fs = std::filesystem;
  opt.protocol.validate();
  if (!(opt.emd_epsilon > 0))
    throw Error(ErrorCode::kInvalidArgument, "EMD epsilon must be positive");
  EvalSummary s;
  const auto vnames = detail::list_bins(opt.virtual_dir);
  const auto gnames = detail::list_bins(opt.ground_truth_dir);
  const std::set<std::string> vset(vnames.begin(), vnames.end());
  const std::set<std::string> gset(gnames.begin(), gnames.end());
  std::vector<std::string> paired;
  for (const auto& n : vnames) (gset.count(n) ? paired : s.unpaired).push_back(n);
  for (const auto& n : gnames)
    if (!vset.count(n)) s.unpaired.push_back(n);
  std::sort(s.unpaired.begin(), s.unpaired.end());
  if (paired.empty()) {
    std::string list;
    for (const auto& n : s.unpaired) list += " " + n;
    throw Error(ErrorCode::kInvalidArgument, "no paired frames; unpaired:" + list);
  }
  std::optional<SequenceManifest> manifest;
  if (opt.manifest_path) manifest = read_manifest(*opt.manifest_path);

  int failures = 0;
  for (const auto& name : paired) {
    const std::string stem = fs::path(name).stem().string();
    try {
      PointCloud v = read_cloud_bin((fs::path(opt.virtual_dir) / name).string());
      PointCloud g = read_cloud_bin((fs::path(opt.ground_truth_dir) / name).string());
      std::vector<int> labels;
      if (opt.per_object) {
        labels = detail::read_labels(
            (fs::path(opt.virtual_dir) / (stem + ".labels")).string());
        if (labels.size() != v.size())
          throw Error(ErrorCode::kSizeMismatch, stem + ".labels does not match cloud");
      }
      if (manifest) {
        const auto keep = camera_fov_indices(v, manifest->t_lidar_to_cam, manifest->cam);
        v = v.select(keep);
        if (!labels.empty()) {
          std::vector<int> kept;
          for (auto i : keep) kept.push_back(labels[i]);
          labels = std::move(kept);
        }
        g = restrict_to_camera_fov(g, manifest->t_lidar_to_cam, manifest->cam);
      }
      std::optional<Plane> ground;
      if ((opt.protocol.remove_ground || opt.per_object) && g.size() >= 3)
        ground = fit_ground_msac(g, opt.protocol.ground_threshold, 200, opt.protocol.seed)
                     .plane;

      if (!opt.per_object) {
        EvalRow r = detail::compare_clouds(apply_protocol(v, opt.protocol, ground),
                                           apply_protocol(g, opt.protocol, ground), opt);
        r.frame = stem;
        s.rows.push_back(r);
        continue;
      }
      std::set<int> tracks(labels.begin(), labels.end());
      tracks.erase(kStaticLabel);
      for (int id : tracks) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == id) idx.push_back(i);
        const PointCloud obj = v.select(idx);
        Vec3 lo = obj.points[0], hi = lo;
        for (const auto& p : obj.points) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
        const PointCloud gobj =
            detail::in_box(g, lo - Vec3::Constant(0.5), hi + Vec3::Constant(0.5));
        EvalProtocol p = opt.protocol;
        p.crop.reset();
        p.remove_ground = true;
        const PointCloud pv = apply_protocol(obj, p, ground);
        const PointCloud pg = apply_protocol(gobj, p, ground);
        if (pv.empty() || pg.empty()) continue;
        EvalRow r = detail::compare_clouds(pv, pg, opt);
        r.frame = stem;
        r.track_id = id;
        s.rows.push_back(r);
      }
    } catch (const Error& e) {
      ++failures;
      detail::log_line(opt.log, name + ": " + e.what());
    }
  }

  if (!s.rows.empty()) {
    std::vector<double> emds;
    for (const auto& r : s.rows) emds.push_back(r.emd);
    const auto mask = outlier_mask(emds);
    double n_in = 0;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      s.rows[i].outlier = mask[i];
      s.mean_cd += s.rows[i].cd;
      s.mean_emd += s.rows[i].emd;
      if (!mask[i]) {
        s.mean_cd_inliers += s.rows[i].cd;
        s.mean_emd_inliers += s.rows[i].emd;
        ++n_in;
      }
    }
    s.mean_cd /= static_cast<double>(s.rows.size());
    s.mean_emd /= static_cast<double>(s.rows.size());
    if (n_in > 0) {
      s.mean_cd_inliers /= n_in;
      s.mean_emd_inliers /= n_in;
    }
  }
  s.exit_code = failures || !s.unpaired.empty() ? kExitPartial : kExitOk;

  if (!opt.report_path.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
      nlohmann::json j{{"frame", r.frame},
                       {"cd_m2", r.cd},
                       {"emd_m2", r.emd},
                       {"n_points_virtual", r.n_virtual},
                       {"n_points_ground_truth", r.n_ground_truth},
                       {"outlier", r.outlier}};
      if (opt.per_object) j["track_id"] = r.track_id;
      rows.push_back(j);
    }
    const nlohmann::json report{
        {"protocol", opt.protocol.describe()},
        {"seed", opt.protocol.seed},
        {"emd_epsilon_m2", opt.emd_epsilon},
        {"emd_max_points", opt.emd_max_points},
        {"per_object", opt.per_object},
        {"outlier_rule", "emd > Q3 + 1.5 IQR over rows"},
        {"rows", rows},
        {"mean", {{"cd_m2", s.mean_cd}, {"emd_m2", s.mean_emd}}},
        {"mean_without_outliers",
         {{"cd_m2", s.mean_cd_inliers}, {"emd_m2", s.mean_emd_inliers}}},
        {"unpaired", s.unpaired}};
    const fs::path rp(opt.report_path);
    if (rp.has_parent_path()) fs::create_directories(rp.parent_path());
    std::ofstream(rp) << report.dump(1) << '\n';

    fs::path tp = rp;
    tp.replace_extension(".txt");
    auto txt = detail::open_out(tp.string(), false);
    txt << "protocol " << opt.protocol.describe() << "\n";
    txt << std::left << std::setw(10) << "frame" << std::setw(8) << "track"
        << std::setw(14) << "cd_m2" << std::setw(14) << "emd_m2" << std::setw(10)
        << "n_virt" << std::setw(10) << "n_gt" << "outlier\n";
    for (const auto& r : s.rows)
      txt << std::setw(10) << r.frame << std::setw(8)
          << (opt.per_object ? std::to_string(r.track_id) : std::string("-"))
          << std::setw(14) << r.cd << std::setw(14) << r.emd << std::setw(10)
          << r.n_virtual << std::setw(10) << r.n_ground_truth
          << (r.outlier ? "yes" : "no") << '\n';
    txt << "mean cd " << s.mean_cd << " emd " << s.mean_emd << "\n";
    txt << "mean without outliers cd " << s.mean_cd_inliers << " emd "
        << s.mean_emd_inliers << "\n";
    for (const auto& n : s.unpaired) txt << "unpaired " << n << '\n';
  }
  return s;
}

// ---------------------------------------------------------------- synth

inline SynthSummary synth_sequence(const std::string& scenario_path,
                                   const std::string& out_dir,
                                   std::optional<std::uint64_t> seed = std::nullopt) {
  SceneConfig s = read_scene(scenario_path);
  if (seed) s.seed = *seed;
  return write_synthetic_sequence(s, out_dir);
}

}  // namespace lidarup

#endif  // LIDARUP_COMMANDS_HPP
