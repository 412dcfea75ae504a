#include "terrafuse/preprocess.hpp"

#include <algorithm>

namespace terrafuse {

ScanFrame rectify_scan(const ScanFrame& scan, const Pose6& pose_before, const Pose6& pose_after) {
  ScanFrame out;
  out.frame_id = scan.frame_id;
  out.frame_pose = Pose6::from_translation(scan.frame_pose.translation(), scan.frame_pose.timestamp());
  out.points.reserve(scan.points.size());

  if (!scan.has_fractions()) {
    const Eigen::Matrix3d r = scan.frame_pose.rotation_matrix();
    for (const auto& p : scan.points) out.points.push_back(r * p);
    return out;
  }

  const Vec3& origin = scan.frame_pose.translation();
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const double f = std::clamp(scan.fractions[i], 0.0, 1.0);
    const Pose6 at = interpolate_pose(pose_before, pose_after, f);
    out.points.push_back(at.apply(scan.points[i]) - origin);
  }
  return out;
}

std::optional<CellObservation> cell_stats(std::span<const double> heights) {
  if (heights.empty()) return std::nullopt;
  // Shifted sums: algebraically the same mean-of-squares formula, without the
  // cancellation that raw squares suffer at large elevations.
  const double shift = heights.front();
  double sum = 0.0;
  double sum_sq = 0.0;
  double lo = heights.front();
  double hi = heights.front();
  for (double h : heights) {
    const double d = h - shift;
    sum += d;
    sum_sq += d * d;
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  const double n = static_cast<double>(heights.size());
  const double mean_d = sum / n;
  CellObservation obs;
  obs.n = heights.size();
  obs.mean = shift + mean_d;
  obs.variance = std::max(0.0, sum_sq / n - mean_d * mean_d);
  obs.min_h = lo;
  obs.max_h = hi;
  obs.mean = std::clamp(obs.mean, lo, hi);
  return obs;
}

CellClass coarse_segment(const CellObservation& obs, double height_threshold) {
  return (obs.max_h - obs.min_h) > height_threshold ? CellClass::Obstacle : CellClass::PotentialTerrain;
}

std::vector<double> remove_overhang(std::span<const double> heights, double overhang_threshold) {
  if (heights.empty()) return {};
  const double ceiling = *std::min_element(heights.begin(), heights.end()) + overhang_threshold;
  std::vector<double> kept;
  kept.reserve(heights.size());
  std::copy_if(heights.begin(), heights.end(), std::back_inserter(kept),
               [ceiling](double h) { return h <= ceiling; });
  return kept;
}

}  // namespace terrafuse
