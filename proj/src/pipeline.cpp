#include "terrafuse/pipeline.hpp"

#include <map>
#include <sstream>

#include "terrafuse/bgk.hpp"
#include "terrafuse/io.hpp"
#include "terrafuse/log.hpp"
#include "terrafuse/preprocess.hpp"

namespace terrafuse {
namespace {

bool frame_is_sane(const ScanFrame& scan) {
  if (!scan.frame_pose.translation().allFinite() || !scan.frame_pose.rotation().coeffs().allFinite()) return false;
  for (const auto& p : scan.points) {
    if (!p.allFinite()) return false;
  }
  return true;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)),
      fusion_(cfg_.fusion_config()),
      bgk_(cfg_.bgk_config()),
      limits_(cfg_.limits()),
      map_(cfg_.cell_size, cfg_.side_cells()) {}

FrameResult Pipeline::process(const ScanFrame& scan, const std::optional<Pose6>& next_pose) {
  FrameResult out;
  out.frame_id = scan.frame_id;
  out.pose = scan.frame_pose;
  StageTimer total;
  StageTimer stage;
  total.start();

  stage.start();
  const ScanFrame rectified = rectify_scan(scan, scan.frame_pose, next_pose.value_or(scan.frame_pose));
  out.times.rectify_ms = stage.stop();

  stage.start();
  integrate_frame(map_, rectified, fusion_);
  out.times.integrate_ms = stage.stop();

  stage.start();
  out.terrain = infer_dense_terrain(map_.snapshot(), bgk_);
  out.times.bgk_ms = stage.stop();

  stage.start();
  out.costmap = analyze_traversability(out.terrain, limits_, out.terrain.anchor.lidar_index(), cfg_.threads);
  out.times.traversability_ms = stage.stop();

  out.times.total_ms = total.stop();
  return out;
}

void run_pipeline(const PipelineConfig& cfg, const std::vector<ScanFrame>& sequence,
                  const std::function<void(FrameResult&&)>& sink) {
  if (sequence.empty()) return;
  Pipeline pipeline(cfg);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const ScanFrame& scan = sequence[i];
    if (!frame_is_sane(scan)) {
      std::ostringstream msg;
      msg << "run_pipeline: frame " << scan.frame_id << " has non-finite data, skipped";
      warn(msg.str());
      continue;
    }
    std::optional<Pose6> next;
    if (scan.has_fractions() && i + 1 < sequence.size()) next = sequence[i + 1].frame_pose;
    sink(pipeline.process(scan, next));
  }
}

std::vector<FrameResult> run_pipeline(const PipelineConfig& cfg, const std::vector<ScanFrame>& sequence) {
  std::vector<FrameResult> results;
  run_pipeline(cfg, sequence, [&](FrameResult&& r) { results.push_back(std::move(r)); });
  return results;
}

MetricReport evaluate_frame(const FrameResult& result, const GroundTruthMap& gt, bool count_invalid) {
  MetricReport r;
  r.frame_id = result.frame_id;
  r.traversability = metrics_traversability(result.costmap, gt);
  r.elevation = metrics_elevation(result.terrain, gt, count_invalid);
  r.time_ms = result.times.total_ms;
  return r;
}

std::string to_json_line(const MetricReport& report, bool with_rmse, bool with_time) {
  std::ostringstream out;
  auto num = [](double v) { return io::format_double(v); };
  out << "{\"frame\":" << report.frame_id;
  if (report.traversability) {
    out << ",\"P\":" << num(report.traversability->precision) << ",\"R\":" << num(report.traversability->recall)
        << ",\"F1\":" << num(report.traversability->f1);
  } else {
    out << ",\"P\":null,\"R\":null,\"F1\":null";
  }
  if (report.elevation) {
    out << ",\"E\":" << num(report.elevation->mean_abs_error);
    if (with_rmse) out << ",\"RMSE\":" << num(report.elevation->rmse);
    out << ",\"Rc\":" << num(report.elevation->coverage);
  } else {
    out << ",\"E\":null";
    if (with_rmse) out << ",\"RMSE\":null";
    out << ",\"Rc\":null";
  }
  if (with_time) out << ",\"time_ms\":" << num(report.time_ms);
  out << "}";
  return out.str();
}

std::vector<ScanFrame> simulate_sequence(const SyntheticScene& scene, std::uint64_t seed, bool deskew) {
  const auto& traj = scene.spec().trajectory;
  std::vector<ScanFrame> frames;
  frames.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::uint64_t frame_seed = seed * 1000003ull + i;
    ScanFrame f = (deskew && i + 1 < traj.size())
                      ? simulate_lidar_sweep(scene, traj[i], traj[i + 1], scene.spec().sensor, frame_seed)
                      : simulate_lidar(scene, traj[i], scene.spec().sensor, frame_seed);
    f.frame_id = static_cast<int>(i);
    f.frame_pose = traj[i];
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<AblationRow> run_ablation(const PipelineConfig& cfg, const SceneSpec& spec) {
  const SyntheticScene scene(spec);
  const std::vector<ScanFrame> sequence = simulate_sequence(scene, cfg.seed);
  std::vector<AblationRow> rows;
  for (double omega : {0.1, 0.2, 0.4}) {
    std::map<int, GroundTruthMap> gts;
    for (FusionMode mode : {FusionMode::Ndt, FusionMode::Kalman}) {
      for (bool bf : {false, true}) {
        for (bool ev : {false, true}) {
          PipelineConfig c = cfg;
          c.cell_size = omega;
          c.fusion = mode;
          c.bilateral = bf;
          c.estimated_variance = ev;
          AblationRow row;
          row.fusion = mode;
          row.bilateral = bf;
          row.estimated_variance = ev;
          row.cell_size = omega;
          int timed = 0;
          run_pipeline(c, sequence, [&](FrameResult&& r) {
            row.time_ms += r.times.total_ms;
            ++timed;
            auto it = gts.find(r.frame_id);
            if (it == gts.end()) {
              it = gts.emplace(r.frame_id, scene.ground_truth(r.terrain.anchor, r.pose.translation(), c.limits(),
                                                              c.gt_radius))
                       .first;
            }
            const MetricReport m = evaluate_frame(r, it->second, c.count_invalid);
            if (!m.traversability || !m.elevation) return;
            row.precision += m.traversability->precision;
            row.recall += m.traversability->recall;
            row.f1 += m.traversability->f1;
            row.mean_abs_error += m.elevation->mean_abs_error;
            row.rmse += m.elevation->rmse;
            row.coverage += m.elevation->coverage;
            ++row.evaluated_frames;
          });
          if (timed > 0) row.time_ms /= timed;
          if (row.evaluated_frames > 0) {
            const double inv = 1.0 / row.evaluated_frames;
            row.precision *= inv;
            row.recall *= inv;
            row.f1 *= inv;
            row.mean_abs_error *= inv;
            row.rmse *= inv;
            row.coverage *= inv;
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  auto num = [](double v) { return io::format_double(v); };
  out << "fusion,bf,ev,cell_size,P,R,F1,E,RMSE,Rc,time_ms,frames\n";
  for (const auto& r : rows) {
    out << (r.fusion == FusionMode::Ndt ? "ndt" : "kf") << ',' << r.bilateral << ',' << r.estimated_variance << ','
        << num(r.cell_size) << ',' << num(r.precision) << ',' << num(r.recall) << ',' << num(r.f1) << ','
        << num(r.mean_abs_error) << ',' << num(r.rmse) << ',' << num(r.coverage) << ',' << num(r.time_ms) << ','
        << r.evaluated_frames << '\n';
  }
  return out.str();
}

}  // namespace terrafuse
