// lidarup - temporal LIDAR upsampling from a mono camera
//
// Pipeline configuration and the `key = value` text format it is read from.

#ifndef LIDARUP_CONFIG_HPP
#define LIDARUP_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lidarup/association.hpp"
#include "lidarup/error.hpp"
#include "lidarup/imaging.hpp"
#include "lidarup/metrics.hpp"
#include "lidarup/pose.hpp"
#include "lidarup/tracking2d.hpp"

namespace lidarup {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; `#` starts a comment; keys may repeat.
[[nodiscard]] inline std::vector<KeyValue> parse_key_values(std::istream& in,
                                                            const std::string& name) {
  std::vector<KeyValue> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kConfig,
                  name + ":" + std::to_string(lineno) + ": expected key = value");
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }
  return out;
}

[[nodiscard]] inline std::vector<KeyValue> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse_key_values(in, path);
}

/// Every tunable of the pipeline with its default.
struct PipelineConfig {
  KltParams klt;
  int klt_max_points = 150;  // per object, 0 = no cap
  int klt_min_points = 20;   // fewer interior seeds: take the most interior
  AssociationParams association;
  MlesacParams mlesac;
  TrackerParams tracker;
  double motion_translation_threshold = 0.05;  // m
  double motion_rotation_threshold_deg = 0.5;
  std::uint64_t seed = 0;
  int threads = 1;
  EvalProtocol protocol;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::kConfig, std::string("out of range: ") + what);
    };
    require(klt.window >= 5 && klt.window % 2 == 1 && klt.window <= 101, "klt.window");
    require(klt.levels >= 1 && klt.levels <= 8, "klt.levels");
    require(klt.max_iters >= 1 && klt.max_iters <= 1000, "klt.iters");
    require(klt.eps > 0 && klt.eps < 1, "klt.eps");
    require(klt.min_eigen >= 0, "klt.min_eigen");
    require(klt.max_residual > 0 && klt.max_residual <= 1, "klt.max_residual");
    require(klt_max_points >= 0, "klt.max_points");
    require(klt_min_points >= 0, "klt.min_points");
    require(association.ground_threshold > 0, "msac.threshold");
    require(association.ground_iters >= 1, "msac.iters");
    require(association.ground_confidence > 0 && association.ground_confidence <= 1,
            "msac.confidence");
    require(association.cluster_tolerance > 0, "cluster.tolerance");
    require(association.cluster_min_size >= 1, "cluster.min_size");
    require(mlesac.sigma > 0, "mlesac.sigma");
    require(mlesac.max_iters >= 1, "mlesac.iters");
    require(mlesac.min_iters >= 0, "mlesac.min_iters");
    require(mlesac.confidence > 0 && mlesac.confidence < 1, "mlesac.confidence");
    require(mlesac.em_steps >= 1 && mlesac.em_steps <= 100, "mlesac.em_steps");
    require(mlesac.trim_floor_px > 0, "mlesac.trim_floor");
    require(tracker.iou_gate >= 0 && tracker.iou_gate <= 1, "tracker.iou_gate");
    require(tracker.max_missed >= 0, "tracker.max_missed");
    require(motion_translation_threshold >= 0, "motion.translation_threshold");
    require(motion_rotation_threshold_deg >= 0, "motion.rotation_threshold_deg");
    require(threads >= 1 && threads <= 256, "threads");
    protocol.validate();
  }
};

namespace detail {

inline double to_number(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used == kv.value.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfig, "line " + std::to_string(kv.line) + ": '" +
                                      kv.key + "' needs a number, got '" +
                                      kv.value + "'");
}

inline int to_int(const KeyValue& kv) {
  const double v = to_number(kv);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw Error(ErrorCode::kConfig, "line " + std::to_string(kv.line) + ": '" +
                                        kv.key + "' needs an integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Applies `key = value` pairs onto the defaults; unknown keys are errors.
[[nodiscard]] inline PipelineConfig parse_pipeline_config(
    const std::vector<KeyValue>& kvs) {
  using detail::to_int;
  using detail::to_number;
  PipelineConfig c;
  const std::map<std::string, std::function<void(const KeyValue&)>> setters{
      {"klt.window", [&](const KeyValue& kv) { c.klt.window = to_int(kv); }},
      {"klt.levels", [&](const KeyValue& kv) { c.klt.levels = to_int(kv); }},
      {"klt.iters", [&](const KeyValue& kv) { c.klt.max_iters = to_int(kv); }},
      {"klt.eps", [&](const KeyValue& kv) { c.klt.eps = to_number(kv); }},
      {"klt.min_eigen", [&](const KeyValue& kv) { c.klt.min_eigen = to_number(kv); }},
      {"klt.max_residual", [&](const KeyValue& kv) { c.klt.max_residual = to_number(kv); }},
      {"klt.max_points", [&](const KeyValue& kv) { c.klt_max_points = to_int(kv); }},
      {"klt.min_points", [&](const KeyValue& kv) { c.klt_min_points = to_int(kv); }},
      {"klt.affine", [&](const KeyValue& kv) { c.klt.affine_refine = to_int(kv) != 0; }},
      {"msac.threshold",
       [&](const KeyValue& kv) { c.association.ground_threshold = to_number(kv); }},
      {"msac.iters", [&](const KeyValue& kv) { c.association.ground_iters = to_int(kv); }},
      {"msac.confidence",
       [&](const KeyValue& kv) { c.association.ground_confidence = to_number(kv); }},
      {"cluster.tolerance",
       [&](const KeyValue& kv) { c.association.cluster_tolerance = to_number(kv); }},
      {"cluster.min_size",
       [&](const KeyValue& kv) { c.association.cluster_min_size = to_int(kv); }},
      {"cluster.election",
       [&](const KeyValue& kv) {
         if (kv.value == "largest")
           c.association.election = ElectionPolicy::kLargest;
         else if (kv.value == "nearest")
           c.association.election = ElectionPolicy::kNearest;
         else
           throw Error(ErrorCode::kConfig, "cluster.election: largest|nearest");
       }},
      {"mlesac.sigma", [&](const KeyValue& kv) { c.mlesac.sigma = to_number(kv); }},
      {"mlesac.iters", [&](const KeyValue& kv) { c.mlesac.max_iters = to_int(kv); }},
      {"mlesac.min_iters", [&](const KeyValue& kv) { c.mlesac.min_iters = to_int(kv); }},
      {"mlesac.confidence", [&](const KeyValue& kv) { c.mlesac.confidence = to_number(kv); }},
      {"mlesac.em_steps", [&](const KeyValue& kv) { c.mlesac.em_steps = to_int(kv); }},
      {"mlesac.adaptive_trim",
       [&](const KeyValue& kv) { c.mlesac.adaptive_trim = to_int(kv) != 0; }},
      {"mlesac.local_opt",
       [&](const KeyValue& kv) { c.mlesac.local_optimization = to_int(kv) != 0; }},
      {"mlesac.trim_floor", [&](const KeyValue& kv) { c.mlesac.trim_floor_px = to_number(kv); }},
      {"tracker.iou_gate", [&](const KeyValue& kv) { c.tracker.iou_gate = to_number(kv); }},
      {"tracker.max_missed", [&](const KeyValue& kv) { c.tracker.max_missed = to_int(kv); }},
      {"motion.translation_threshold",
       [&](const KeyValue& kv) { c.motion_translation_threshold = to_number(kv); }},
      {"motion.rotation_threshold_deg",
       [&](const KeyValue& kv) { c.motion_rotation_threshold_deg = to_number(kv); }},
      {"seed",
       [&](const KeyValue& kv) {
         const int v = to_int(kv);
         if (v < 0) throw Error(ErrorCode::kConfig, "seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(v);
       }},
      {"threads", [&](const KeyValue& kv) { c.threads = to_int(kv); }},
      {"protocol", [&](const KeyValue& kv) { c.protocol = parse_protocol(kv.value); }},
  };
  for (const auto& kv : kvs) {
    const auto it = setters.find(kv.key);
    if (it == setters.end())
      throw Error(ErrorCode::kConfig, "line " + std::to_string(kv.line) +
                                          ": unknown key '" + kv.key + "'");
    it->second(kv);
  }
  c.validate();
  return c;
}

[[nodiscard]] inline PipelineConfig read_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_key_value_file(path));
}

}  // namespace lidarup

#endif  // LIDARUP_CONFIG_HPP
