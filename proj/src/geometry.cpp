#include "terrafuse/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace terrafuse {

Pose6::Pose6(const Vec3& translation, const Eigen::Quaterniond& rotation, double timestamp)
    : translation_(translation), rotation_(rotation.normalized()), timestamp_(timestamp) {}

Pose6::Pose6(const Vec3& translation, const Eigen::Matrix3d& rotation, double timestamp)
    : translation_(translation), timestamp_(timestamp) {
  // Nearest rotation in the Frobenius sense.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  rotation_ = Eigen::Quaterniond(r).normalized();
}

Pose6 Pose6::from_euler(const Vec3& t, double roll, double pitch, double yaw, double timestamp) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                               Eigen::AngleAxisd(roll, Vec3::UnitX());
  return Pose6(t, q, timestamp);
}

Pose6 Pose6::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return Pose6(-(inv * translation_), inv, timestamp_);
}

Pose6 Pose6::compose(const Pose6& other) const {
  return Pose6(rotation_ * other.translation_ + translation_, rotation_ * other.rotation_,
               other.timestamp_);
}

Eigen::Matrix<double, 3, 4> Pose6::matrix3x4() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation_matrix();
  m.col(3) = translation_;
  return m;
}

MapAnchor MapAnchor::create(const Vec2& lidar_xy, double cell_size, int side_cells) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw std::invalid_argument("cell size must be positive and finite");
  }
  if (side_cells <= 0 || side_cells % 2 != 0) {
    throw std::invalid_argument("grid side must be a positive even cell count");
  }
  MapAnchor a;
  a.cell_size = cell_size;
  a.side_cells = side_cells;
  a.lidar_xy = lidar_xy;
  a.residual = compute_residual(lidar_xy, cell_size);
  a.lidar_cell = {floor_to_int(lidar_xy.x() / cell_size), floor_to_int(lidar_xy.y() / cell_size)};
  return a;
}

Vec2 MapAnchor::cell_center(const GridIndex& idx) const {
  const int half = side_cells / 2;
  return {(idx.col - half + 0.5) * cell_size - residual.x(),
          (half - 1 - idx.row + 0.5) * cell_size - residual.y()};
}

Eigen::Matrix<std::int64_t, 2, 1> MapAnchor::world_cell(const GridIndex& idx) const {
  const int half = side_cells / 2;
  return {lidar_cell.x() + (idx.col - half), lidar_cell.y() + (half - 1 - idx.row)};
}

std::optional<GridIndex> MapAnchor::index_of_world_cell(std::int64_t gx, std::int64_t gy) const {
  const int half = side_cells / 2;
  const std::int64_t col = gx - lidar_cell.x() + half;
  const std::int64_t row = half - 1 - (gy - lidar_cell.y());
  if (col < 0 || row < 0 || col >= side_cells || row >= side_cells) return std::nullopt;
  return GridIndex{static_cast<int>(row), static_cast<int>(col)};
}

Vec2 compute_residual(const Vec2& lidar_xy, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw std::invalid_argument("cell size must be positive and finite");
  }
  if (!lidar_xy.allFinite()) throw std::invalid_argument("LiDAR position must be finite");
  Vec2 r;
  for (int k = 0; k < 2; ++k) {
    double v = lidar_xy[k] - std::floor(lidar_xy[k] / cell_size) * cell_size;
    if (v < 0.0) v += cell_size;
    if (v >= cell_size) v -= cell_size;
    r[k] = v < 0.0 ? 0.0 : v;
  }
  return r;
}

std::optional<GridIndex> world_to_grid(const Point3& p, const MapAnchor& anchor) {
  const double fx = std::floor((p.x() + anchor.residual.x()) / anchor.cell_size);
  const double fy = std::floor((p.y() + anchor.residual.y()) / anchor.cell_size);
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  const int half = anchor.side_cells / 2;
  if (fx < -half || fx >= half || fy < -half || fy >= half) return std::nullopt;
  return GridIndex{half - 1 - static_cast<int>(fy), half + static_cast<int>(fx)};
}

Point3 transform_point(const Point3& p, const Pose6& src, const Pose6& dst) {
  return dst.rotation().conjugate() * (src.apply(p) - dst.translation());
}

Pose6 interpolate_pose(const Pose6& a, const Pose6& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("interpolation fraction must lie in [0, 1]");
  }
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  const Vec3 t = (1.0 - alpha) * a.translation() + alpha * b.translation();
  const Eigen::Quaterniond q = a.rotation().slerp(alpha, b.rotation());
  const double ts = (1.0 - alpha) * a.timestamp() + alpha * b.timestamp();
  return Pose6(t, q, ts);
}

}  // namespace terrafuse
