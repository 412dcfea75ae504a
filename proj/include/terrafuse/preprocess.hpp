#ifndef TERRAFUSE_PREPROCESS_HPP
#define TERRAFUSE_PREPROCESS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "terrafuse/geometry.hpp"

namespace terrafuse {

/// One LiDAR sweep. `fractions`, when non-empty, holds each point's
/// acquisition time as a fraction of the sweep in [0, 1].
struct ScanFrame {
  std::vector<Point3> points;
  std::vector<double> fractions;
  Pose6 frame_pose;
  int frame_id = 0;

  bool has_fractions() const { return !fractions.empty() && fractions.size() == points.size(); }
};

/// Height statistics of the points falling into one cell during one frame.
struct CellObservation {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double min_h = 0.0;
  double max_h = 0.0;
};

enum class CellClass : std::uint8_t { Unobserved = 0, PotentialTerrain = 1, Obstacle = 2 };

/// Deskews the sweep with interpolated poses (when per-point fractions are
/// present) and rotates it into a gravity-aligned frame with world axes whose
/// origin is the frame pose's translation. The returned frame carries an
/// identity rotation and no fractions.
ScanFrame rectify_scan(const ScanFrame& scan, const Pose6& pose_before, const Pose6& pose_after);

/// Mean and population variance; nullopt for an empty cell.
std::optional<CellObservation> cell_stats(std::span<const double> heights);

CellClass coarse_segment(const CellObservation& obs, double height_threshold);

/// Drops heights above min(heights) + overhang_threshold.
std::vector<double> remove_overhang(std::span<const double> heights, double overhang_threshold);

}  // namespace terrafuse

#endif  // TERRAFUSE_PREPROCESS_HPP
