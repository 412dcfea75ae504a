#ifndef TERRAFUSE_FUSION_HPP
#define TERRAFUSE_FUSION_HPP

#include <cstdint>
#include <vector>

#include "terrafuse/geometry.hpp"
#include "terrafuse/preprocess.hpp"

namespace terrafuse {

/// Joint elevation distribution of one world-anchored cell.
struct GridCell {
  std::uint64_t count = 0;  // S, cumulative point count
  double mean = 0.0;
  double variance = 0.0;
  CellClass cls = CellClass::Unobserved;
  int last_update = -1;
  std::uint32_t frames = 0;  // number of frames that touched the cell

  bool operator==(const GridCell&) const = default;
};

struct KfParams {
  double a = 1.0;
  double c = 1.0;
  double epsilon = 0.01;  // process noise variance
  double xi = 0.01;       // measurement noise variance when xi_per_meter == 0
  double xi_per_meter = 0.01;  // xi = xi_per_meter * range when > 0
  double xi_min = 1e-4;

  double measurement_noise(double range) const;
};

enum class FusionMode { Ndt, Kalman };

struct FusionConfig {
  FusionMode mode = FusionMode::Ndt;
  double height_threshold = 0.4;    // T_h
  double overhang_threshold = 2.3;  // T_o
  double variance_threshold = 0.1;  // T_Sigma
  std::uint32_t min_obs = 3;
  KfParams kf;
};

/// Dense row-major copy of the map in grid (row, col) order, for readers.
struct MapSnapshot {
  MapAnchor anchor;
  double lidar_z = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<std::uint64_t> count;
  std::vector<CellClass> cls;

  int side() const { return anchor.side_cells; }
  std::size_t linear(int row, int col) const {
    return static_cast<std::size_t>(row) * anchor.side_cells + col;
  }
};

/// N x N world-anchored grid with toroidal storage: a world cell (gx, gy)
/// lives in slot (gx mod N, gy mod N), so moving the window only touches the
/// evicted rows and columns.
class RollingGridMap {
 public:
  RollingGridMap(double cell_size, int side_cells, const Vec2& lidar_xy = Vec2::Zero());

  const MapAnchor& anchor() const { return anchor_; }
  int side() const { return anchor_.side_cells; }
  double cell_size() const { return anchor_.cell_size; }

  const GridCell& at(const GridIndex& idx) const { return cells_[slot(idx)]; }
  GridCell& at(const GridIndex& idx) { return cells_[slot(idx)]; }

  /// Recenter on a new LiDAR position. Cells leaving the window are reset.
  void roll_to(const Vec2& lidar_xy);

  double lidar_z() const { return lidar_z_; }
  void set_lidar_z(double z) { lidar_z_ = z; }

  MapSnapshot snapshot() const;

  std::size_t slot(const GridIndex& idx) const;

 private:
  static std::int64_t wrap(std::int64_t v, std::int64_t n) {
    const std::int64_t m = v % n;
    return m < 0 ? m + n : m;
  }
  void reset_world_column(std::int64_t gx);
  void reset_world_row(std::int64_t gy);

  MapAnchor anchor_;
  double lidar_z_ = 0.0;
  std::vector<GridCell> cells_;
};

/// Moment fusion of a cell with a new frame's observation (pooled statistics).
GridCell ndt_update(const GridCell& prior, const CellObservation& obs);

/// Scalar Kalman recursion on the cell mean. A prior with count 0 is treated
/// as having infinite variance. `xi` overrides params' measurement noise.
GridCell kf_update(const GridCell& prior, double obs_mean, const KfParams& params, double xi);
GridCell kf_update(const GridCell& prior, double obs_mean, const KfParams& params);

/// Potential terrain observed in at least min_obs frames with variance above
/// the threshold becomes an obstacle. Obstacles are never demoted.
CellClass refine_by_variance(const GridCell& cell, double variance_threshold, std::uint32_t min_obs);

/// Roll to the scan position, bin points, segment and fuse every touched cell.
/// The scan must already be rectified (world axes, origin at the LiDAR).
void integrate_frame(RollingGridMap& map, const ScanFrame& scan, const FusionConfig& cfg);

}  // namespace terrafuse

#endif  // TERRAFUSE_FUSION_HPP
