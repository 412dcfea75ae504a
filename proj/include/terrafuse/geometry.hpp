#ifndef TERRAFUSE_GEOMETRY_HPP
#define TERRAFUSE_GEOMETRY_HPP

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace terrafuse {

using Point3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Rigid body pose with timestamp. The rotation is kept as a unit quaternion.
class Pose6 {
 public:
  Pose6() = default;
  Pose6(const Vec3& translation, const Eigen::Quaterniond& rotation,
        double timestamp = 0.0);
  /// Accepts a (nearly) orthonormal matrix; it is re-orthonormalized.
  Pose6(const Vec3& translation, const Eigen::Matrix3d& rotation,
        double timestamp = 0.0);

  static Pose6 identity(double timestamp = 0.0) { return Pose6({0, 0, 0}, Eigen::Quaterniond::Identity(), timestamp); }
  static Pose6 from_translation(const Vec3& t, double timestamp = 0.0) {
    return Pose6(t, Eigen::Quaterniond::Identity(), timestamp);
  }
  /// Z-Y-X (yaw, pitch, roll) Euler angles in radians.
  static Pose6 from_euler(const Vec3& t, double roll, double pitch, double yaw,
                          double timestamp = 0.0);

  const Vec3& translation() const { return translation_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }
  double timestamp() const { return timestamp_; }
  void set_timestamp(double t) { timestamp_ = t; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Pose6 inverse() const;
  /// this ∘ other (apply other first).
  Pose6 compose(const Pose6& other) const;

  /// Row-major 3x4 [R|t].
  Eigen::Matrix<double, 3, 4> matrix3x4() const;

 private:
  Vec3 translation_ = Vec3::Zero();
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  double timestamp_ = 0.0;
};

struct GridIndex {
  int row = 0;
  int col = 0;
  auto operator<=>(const GridIndex&) const = default;
};

/// Placement of an N x N grid around the LiDAR. The grid center is the
/// lower-left corner of the world-quantized cell containing the LiDAR, and
/// `residual` is the LiDAR's offset from that corner.
struct MapAnchor {
  Vec2 lidar_xy = Vec2::Zero();
  Vec2 residual = Vec2::Zero();
  /// floor(lidar_xy / cell_size), the world cell holding the LiDAR.
  Eigen::Matrix<std::int64_t, 2, 1> lidar_cell = Eigen::Matrix<std::int64_t, 2, 1>::Zero();
  double cell_size = 0.2;
  int side_cells = 400;

  /// Throws std::invalid_argument for a non-positive cell size, odd or
  /// non-positive side, or non-finite position.
  static MapAnchor create(const Vec2& lidar_xy, double cell_size, int side_cells);

  /// Side length W in meters.
  double side_meters() const { return cell_size * side_cells; }

  /// Sensor-frame xy of a cell center (frame origin at the LiDAR).
  Vec2 cell_center(const GridIndex& idx) const;

  /// World-quantized integer cell coordinates of a grid index.
  Eigen::Matrix<std::int64_t, 2, 1> world_cell(const GridIndex& idx) const;

  /// Inverse of world_cell; nullopt when the world cell is outside the window.
  std::optional<GridIndex> index_of_world_cell(std::int64_t gx, std::int64_t gy) const;

  bool contains(const GridIndex& idx) const {
    return idx.row >= 0 && idx.col >= 0 && idx.row < side_cells && idx.col < side_cells;
  }

  /// The cell holding the LiDAR itself.
  GridIndex lidar_index() const { return {side_cells / 2 - 1, side_cells / 2}; }
};

/// r = L - floor(L / omega) * omega per axis, clamped into [0, omega).
Vec2 compute_residual(const Vec2& lidar_xy, double cell_size);

/// Project a sensor-frame point into the grid; nullopt when outside.
std::optional<GridIndex> world_to_grid(const Point3& p, const MapAnchor& anchor);

/// T_dst^-1 * T_src * p.
Point3 transform_point(const Point3& p, const Pose6& src, const Pose6& dst);

/// Linear interpolation of translation and slerp of rotation. alpha in [0, 1].
Pose6 interpolate_pose(const Pose6& a, const Pose6& b, double alpha);

/// floor(a) as an integer; mathematical floor toward -inf.
inline std::int64_t floor_to_int(double a) {
  return static_cast<std::int64_t>(std::floor(a));
}

}  // namespace terrafuse

#endif  // TERRAFUSE_GEOMETRY_HPP
