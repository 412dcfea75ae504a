#ifndef TERRAFUSE_EVALUATION_HPP
#define TERRAFUSE_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "terrafuse/geometry.hpp"
#include "terrafuse/terrain.hpp"
#include "terrafuse/traversability.hpp"

namespace terrafuse {

struct LabeledScan {
  std::vector<Point3> points;
  std::vector<std::uint32_t> labels;  // semantic id per point
  std::optional<Pose6> pose;
};

struct LabeledCloud {
  std::vector<Point3> points;
  std::vector<std::uint32_t> labels;
};

/// Concatenates every frame whose position lies within `radius` of the
/// center frame, expressed in the center frame. With `upright` the target
/// frame keeps the center translation but world axes, matching rectified
/// scans. Frames without a pose are skipped with a warning.
LabeledCloud assemble_map(std::span<const LabeledScan> frames, std::size_t center, double radius,
                          bool upright = false);

enum class GtLabel : std::uint8_t { Empty = 0, Traversable = 1, NonTraversable = 2 };

struct GroundTruthMap {
  MapAnchor anchor;
  std::vector<GtLabel> label;
  std::vector<double> elevation;
  std::vector<std::uint8_t> elevation_valid;

  static GroundTruthMap empty(const MapAnchor& anchor);
  std::size_t linear(int row, int col) const { return static_cast<std::size_t>(row) * anchor.side_cells + col; }
  std::size_t traversable_count() const;
};

struct LabelConfig {
  std::set<std::uint32_t> traversable;
  /// Labels that may be hanging structure (vegetation, trees).
  std::set<std::uint32_t> hanging;
  double overhang_threshold = 2.3;  // T_o = vehicle height + 0.5
};

/// SemanticKITTI: road, parking, sidewalk, other-ground, terrain; vegetation hangs.
LabelConfig semantic_kitti_labels();
/// RELLIS-3D: grass, asphalt, log, bush, concrete, puddle, mud, rubble; tree hangs.
LabelConfig rellis_labels();

/// Per-cell semantic judgement. Points are in the grid's upright sensor
/// frame; `z_offset` converts their heights to map elevations.
GroundTruthMap label_traversability(const LabeledCloud& cloud, const MapAnchor& anchor,
                                    const LabelConfig& cfg, double z_offset = 0.0);

/// Growth from the grid center (or the nearest traversable cell) removes
/// unreachable traversable cells.
GroundTruthMap finalize_gt(GroundTruthMap map);

struct TraversabilityScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// nullopt when either the estimate or the ground truth has no traversable cell.
std::optional<TraversabilityScores> metrics_traversability(const CostMap& est, const GroundTruthMap& gt);

struct ElevationScores {
  double mean_abs_error = 0.0;  // E
  double rmse = 0.0;
  double coverage = 0.0;  // Rc
  std::size_t covered = 0;
};

/// nullopt when the ground truth has no traversable cell. Uncovered cells
/// count against coverage; they enter the error only with count_invalid,
/// in which case the -999 marker is used as their elevation.
std::optional<ElevationScores> metrics_elevation(const TerrainModel& est, const GroundTruthMap& gt,
                                                 bool count_invalid = false);

}  // namespace terrafuse

#endif  // TERRAFUSE_EVALUATION_HPP
