#include "terrafuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "terrafuse/log.hpp"

namespace terrafuse {

LabeledCloud assemble_map(std::span<const LabeledScan> frames, std::size_t center, double radius,
                          bool upright) {
  LabeledCloud out;
  if (center >= frames.size() || !frames[center].pose) {
    warn("assemble_map: center frame has no pose");
    return out;
  }
  const Pose6& center_pose = *frames[center].pose;
  const Pose6 target = upright ? Pose6::from_translation(center_pose.translation()) : center_pose;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const LabeledScan& f = frames[i];
    if (!f.pose) {
      std::ostringstream msg;
      msg << "assemble_map: frame " << i << " has no pose, skipped";
      warn(msg.str());
      continue;
    }
    if ((f.pose->translation() - center_pose.translation()).norm() > radius) continue;
    const bool has_labels = f.labels.size() == f.points.size();
    for (std::size_t k = 0; k < f.points.size(); ++k) {
      out.points.push_back(transform_point(f.points[k], *f.pose, target));
      out.labels.push_back(has_labels ? f.labels[k] : 0u);
    }
  }
  return out;
}

GroundTruthMap GroundTruthMap::empty(const MapAnchor& anchor) {
  GroundTruthMap m;
  m.anchor = anchor;
  const std::size_t total = static_cast<std::size_t>(anchor.side_cells) * anchor.side_cells;
  m.label.assign(total, GtLabel::Empty);
  m.elevation.assign(total, kInvalidElevation);
  m.elevation_valid.assign(total, 0);
  return m;
}

std::size_t GroundTruthMap::traversable_count() const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), GtLabel::Traversable));
}

LabelConfig semantic_kitti_labels() {
  LabelConfig cfg;
  cfg.traversable = {40, 44, 48, 49, 72};  // road, parking, sidewalk, other-ground, terrain
  cfg.hanging = {70};                      // vegetation
  return cfg;
}

LabelConfig rellis_labels() {
  LabelConfig cfg;
  // grass, asphalt, log, bush, concrete, mud, puddle, rubble
  cfg.traversable = {3, 10, 15, 19, 23, 31, 33, 34};
  cfg.hanging = {4};  // tree
  return cfg;
}

GroundTruthMap label_traversability(const LabeledCloud& cloud, const MapAnchor& anchor,
                                    const LabelConfig& cfg, double z_offset) {
  GroundTruthMap gt = GroundTruthMap::empty(anchor);
  const std::size_t total = gt.label.size();
  std::vector<std::vector<std::uint32_t>> per_cell(total);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (const auto idx = world_to_grid(cloud.points[i], anchor)) {
      per_cell[gt.linear(idx->row, idx->col)].push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (std::size_t k = 0; k < total; ++k) {
    const auto& members = per_cell[k];
    if (members.empty()) continue;
    double ground_max = -std::numeric_limits<double>::infinity();
    for (auto i : members) {
      if (cfg.traversable.contains(cloud.labels[i])) ground_max = std::max(ground_max, cloud.points[i].z());
    }
    bool traversable = true;
    double sum = 0.0;
    std::size_t used = 0;
    for (auto i : members) {
      const std::uint32_t lbl = cloud.labels[i];
      const double z = cloud.points[i].z();
      if (cfg.hanging.contains(lbl) && std::isfinite(ground_max) && z - ground_max > cfg.overhang_threshold) {
        continue;
      }
      ++used;
      sum += z;
      if (!cfg.traversable.contains(lbl)) traversable = false;
    }
    if (used == 0) continue;
    gt.label[k] = traversable ? GtLabel::Traversable : GtLabel::NonTraversable;
    if (traversable) {
      gt.elevation[k] = sum / static_cast<double>(used) + z_offset;
      gt.elevation_valid[k] = 1;
    }
  }
  return gt;
}

GroundTruthMap finalize_gt(GroundTruthMap map) {
  const int n = map.anchor.side_cells;
  GridIndex seed = map.anchor.lidar_index();
  if (map.label[map.linear(seed.row, seed.col)] != GtLabel::Traversable) {
    std::optional<GridIndex> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (map.label[map.linear(r, c)] != GtLabel::Traversable) continue;
        const double d = std::hypot(r - seed.row, c - seed.col);
        if (d < best_d) {  // row-major scan keeps the lexicographically first on ties
          best_d = d;
          best = GridIndex{r, c};
        }
      }
    }
    if (!best) {
      warn("finalize_gt: ground truth has no traversable cell");
      return map;
    }
    std::ostringstream msg;
    msg << "finalize_gt: center cell not traversable, seeding from (" << best->row << ", " << best->col << ")";
    warn(msg.str());
    seed = *best;
  }
  const GridIndex seeds[1] = {seed};
  const auto reached = flood_fill(
      n, seeds, [&](const GridIndex& g) { return map.label[map.linear(g.row, g.col)] == GtLabel::Traversable; },
      [](const GridIndex&, EdgeDir) { return true; });
  for (std::size_t k = 0; k < map.label.size(); ++k) {
    if (map.label[k] == GtLabel::Traversable && !reached[k]) {
      map.label[k] = GtLabel::NonTraversable;
      map.elevation[k] = kInvalidElevation;
      map.elevation_valid[k] = 0;
    }
  }
  return map;
}

std::optional<TraversabilityScores> metrics_traversability(const CostMap& est, const GroundTruthMap& gt) {
  std::size_t n_est = 0;
  std::size_t n_gt = 0;
  std::size_t both = 0;
  const std::size_t total = std::min(est.label.size(), gt.label.size());
  for (std::size_t k = 0; k < total; ++k) {
    const bool e = est.label[k] == TravLabel::Traversable;
    const bool g = gt.label[k] == GtLabel::Traversable;
    n_est += e;
    n_gt += g;
    both += e && g;
  }
  if (n_est == 0 || n_gt == 0) return std::nullopt;
  TraversabilityScores s;
  s.precision = static_cast<double>(both) / static_cast<double>(n_est);
  s.recall = static_cast<double>(both) / static_cast<double>(n_gt);
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::optional<ElevationScores> metrics_elevation(const TerrainModel& est, const GroundTruthMap& gt,
                                                 bool count_invalid) {
  std::size_t n_gt = 0;
  std::size_t covered = 0;
  std::size_t counted = 0;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  const std::size_t total = std::min(est.valid.size(), gt.label.size());
  for (std::size_t k = 0; k < total; ++k) {
    if (gt.label[k] != GtLabel::Traversable) continue;
    ++n_gt;
    const bool est_valid = est.valid[k] != 0;
    const bool gt_valid = gt.elevation_valid[k] != 0;
    if (est_valid && gt_valid) ++covered;
    if (!gt_valid) continue;
    if (!est_valid && !count_invalid) continue;
    const double h = est_valid ? est.elevation[k] : kInvalidElevation;
    const double diff = h - gt.elevation[k];
    abs_sum += std::sqrt(diff * diff);
    sq_sum += diff * diff;
    ++counted;
  }
  if (n_gt == 0) return std::nullopt;
  ElevationScores s;
  s.coverage = static_cast<double>(covered) / static_cast<double>(n_gt);
  s.covered = covered;
  if (counted > 0) {
    s.mean_abs_error = abs_sum / static_cast<double>(counted);
    s.rmse = std::sqrt(sq_sum / static_cast<double>(counted));
  }
  return s;
}

}  // namespace terrafuse
