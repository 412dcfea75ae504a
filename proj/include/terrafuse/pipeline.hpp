#ifndef TERRAFUSE_PIPELINE_HPP
#define TERRAFUSE_PIPELINE_HPP

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "terrafuse/config.hpp"
#include "terrafuse/evaluation.hpp"
#include "terrafuse/fusion.hpp"
#include "terrafuse/synth.hpp"
#include "terrafuse/terrain.hpp"
#include "terrafuse/traversability.hpp"

namespace terrafuse {

/// Wall-clock stopwatch in milliseconds. Building with TERRAFUSE_NO_TIMING
/// turns it into a no-op that always reports zero.
class StageTimer {
 public:
#ifdef TERRAFUSE_NO_TIMING
  void start() {}
  double stop() { return 0.0; }
#else
  void start() { begin_ = std::chrono::steady_clock::now(); }
  double stop() {
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - begin_).count();
  }

 private:
  std::chrono::steady_clock::time_point begin_{};
#endif
};

struct StageTimes {
  double rectify_ms = 0.0;
  double integrate_ms = 0.0;
  double bgk_ms = 0.0;
  double traversability_ms = 0.0;
  double total_ms = 0.0;

  double stage_sum() const { return rectify_ms + integrate_ms + bgk_ms + traversability_ms; }
};

struct FrameResult {
  int frame_id = 0;
  Pose6 pose;
  TerrainModel terrain;
  CostMap costmap;
  StageTimes times;
};

/// Stateful per-sequence processor. Frames must be fed in order.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  /// `next_pose` is the pose at the end of the sweep, used to deskew scans
  /// that carry per-point fractions.
  FrameResult process(const ScanFrame& scan, const std::optional<Pose6>& next_pose = std::nullopt);

  const RollingGridMap& map() const { return map_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  FusionConfig fusion_;
  BgkConfig bgk_;
  KinematicLimits limits_;
  RollingGridMap map_;
};

/// Runs every frame in order and hands each result to `sink`. A frame with
/// non-finite points or pose is skipped with a warning.
void run_pipeline(const PipelineConfig& cfg, const std::vector<ScanFrame>& sequence,
                  const std::function<void(FrameResult&&)>& sink);
std::vector<FrameResult> run_pipeline(const PipelineConfig& cfg, const std::vector<ScanFrame>& sequence);

struct MetricReport {
  int frame_id = 0;
  std::optional<TraversabilityScores> traversability;
  std::optional<ElevationScores> elevation;
  double time_ms = 0.0;
};

MetricReport evaluate_frame(const FrameResult& result, const GroundTruthMap& gt, bool count_invalid);
/// One JSON object on one line. Timing is optional so that metric files stay
/// byte-identical across reruns.
std::string to_json_line(const MetricReport& report, bool with_rmse = true, bool with_time = false);

/// Simulated sweeps along the scene trajectory, one per pose.
std::vector<ScanFrame> simulate_sequence(const SyntheticScene& scene, std::uint64_t seed, bool deskew = false);

struct AblationRow {
  FusionMode fusion = FusionMode::Ndt;
  bool bilateral = false;
  bool estimated_variance = false;
  double cell_size = 0.2;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_abs_error = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double time_ms = 0.0;  // mean per-frame pipeline time
  int evaluated_frames = 0;
};

/// {ndt, kf} x BF x EV x omega in {0.1, 0.2, 0.4} on the same simulated
/// sequence, metrics averaged over frames that had defined metrics.
std::vector<AblationRow> run_ablation(const PipelineConfig& cfg, const SceneSpec& scene);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace terrafuse

#endif  // TERRAFUSE_PIPELINE_HPP
