#ifndef TERRAFUSE_TERRAIN_HPP
#define TERRAFUSE_TERRAIN_HPP

#include <cstdint>
#include <vector>

#include "terrafuse/geometry.hpp"

namespace terrafuse {

/// Marker for cells without a valid elevation in emitted files.
inline constexpr double kInvalidElevation = -999.0;

/// Dense elevation field in grid (row, col) order.
struct TerrainModel {
  MapAnchor anchor;
  double lidar_z = 0.0;
  std::vector<double> elevation;
  std::vector<double> variance;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> obstacle;

  static TerrainModel empty(const MapAnchor& anchor);

  int side() const { return anchor.side_cells; }
  double cell_size() const { return anchor.cell_size; }
  std::size_t linear(int row, int col) const {
    return static_cast<std::size_t>(row) * anchor.side_cells + col;
  }
  bool in_bounds(int row, int col) const { return anchor.contains({row, col}); }
  bool is_valid(int row, int col) const { return in_bounds(row, col) && valid[linear(row, col)] != 0; }
  double height(int row, int col) const { return elevation[linear(row, col)]; }
  void set(int row, int col, double h, double var) {
    const std::size_t k = linear(row, col);
    elevation[k] = h;
    variance[k] = var;
    valid[k] = 1;
  }
  /// 3D position (sensor-frame xy, elevation) of a cell center.
  Vec3 position(int row, int col) const {
    const Vec2 xy = anchor.cell_center({row, col});
    return {xy.x(), xy.y(), height(row, col)};
  }
};

inline TerrainModel TerrainModel::empty(const MapAnchor& anchor) {
  TerrainModel m;
  m.anchor = anchor;
  const std::size_t total = static_cast<std::size_t>(anchor.side_cells) * anchor.side_cells;
  m.elevation.assign(total, kInvalidElevation);
  m.variance.assign(total, 0.0);
  m.valid.assign(total, 0);
  m.obstacle.assign(total, 0);
  return m;
}

}  // namespace terrafuse

#endif  // TERRAFUSE_TERRAIN_HPP
