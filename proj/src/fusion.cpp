#include "terrafuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace terrafuse {

double KfParams::measurement_noise(double range) const {
  const double v = xi_per_meter > 0.0 ? xi_per_meter * range : xi;
  return std::max(v, xi_min);
}

RollingGridMap::RollingGridMap(double cell_size, int side_cells, const Vec2& lidar_xy)
    : anchor_(MapAnchor::create(lidar_xy, cell_size, side_cells)),
      cells_(static_cast<std::size_t>(side_cells) * side_cells) {}

std::size_t RollingGridMap::slot(const GridIndex& idx) const {
  const std::int64_t n = anchor_.side_cells;
  const auto w = anchor_.world_cell(idx);
  return static_cast<std::size_t>(wrap(w.y(), n) * n + wrap(w.x(), n));
}

void RollingGridMap::reset_world_column(std::int64_t gx) {
  const std::int64_t n = anchor_.side_cells;
  const std::int64_t sx = wrap(gx, n);
  for (std::int64_t sy = 0; sy < n; ++sy) cells_[static_cast<std::size_t>(sy * n + sx)] = GridCell{};
}

void RollingGridMap::reset_world_row(std::int64_t gy) {
  const std::int64_t n = anchor_.side_cells;
  const std::int64_t sy = wrap(gy, n);
  std::fill_n(cells_.begin() + sy * n, n, GridCell{});
}

void RollingGridMap::roll_to(const Vec2& lidar_xy) {
  const MapAnchor next = MapAnchor::create(lidar_xy, anchor_.cell_size, anchor_.side_cells);
  const std::int64_t n = anchor_.side_cells;
  const std::int64_t half = n / 2;
  const std::int64_t dx = next.lidar_cell.x() - anchor_.lidar_cell.x();
  const std::int64_t dy = next.lidar_cell.y() - anchor_.lidar_cell.y();

  if (std::llabs(dx) >= n || std::llabs(dy) >= n) {
    std::fill(cells_.begin(), cells_.end(), GridCell{});
  } else {
    const std::int64_t ox = anchor_.lidar_cell.x();
    const std::int64_t oy = anchor_.lidar_cell.y();
    // Old window spans [o - half, o + half - 1] on each axis.
    if (dx > 0) {
      for (std::int64_t gx = ox - half; gx < ox - half + dx; ++gx) reset_world_column(gx);
    } else if (dx < 0) {
      for (std::int64_t gx = ox + half - 1; gx > ox + half - 1 + dx; --gx) reset_world_column(gx);
    }
    if (dy > 0) {
      for (std::int64_t gy = oy - half; gy < oy - half + dy; ++gy) reset_world_row(gy);
    } else if (dy < 0) {
      for (std::int64_t gy = oy + half - 1; gy > oy + half - 1 + dy; --gy) reset_world_row(gy);
    }
  }
  anchor_ = next;
}

MapSnapshot RollingGridMap::snapshot() const {
  MapSnapshot s;
  s.anchor = anchor_;
  s.lidar_z = lidar_z_;
  const int n = anchor_.side_cells;
  const std::size_t total = static_cast<std::size_t>(n) * n;
  s.mean.resize(total);
  s.variance.resize(total);
  s.count.resize(total);
  s.cls.resize(total);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const GridCell& g = at({r, c});
      const std::size_t k = s.linear(r, c);
      s.mean[k] = g.mean;
      s.variance[k] = g.variance;
      s.count[k] = g.count;
      s.cls[k] = g.cls;
    }
  }
  return s;
}

GridCell ndt_update(const GridCell& prior, const CellObservation& obs) {
  GridCell out = prior;
  out.frames = prior.frames + 1;
  if (obs.n == 0) return prior;
  if (prior.count == 0) {
    out.count = obs.n;
    out.mean = obs.mean;
    out.variance = obs.variance;
  } else {
    const double s_prev = static_cast<double>(prior.count);
    const double n = static_cast<double>(obs.n);
    const double s = s_prev + n;
    const double diff = obs.mean - prior.mean;
    out.count = prior.count + obs.n;
    out.mean = (n * obs.mean + s_prev * prior.mean) / s;
    out.variance = (n * obs.variance + s_prev * prior.variance + n * s_prev / s * diff * diff) / s;
    out.variance = std::max(0.0, out.variance);
  }
  if (out.cls == CellClass::Unobserved) out.cls = CellClass::PotentialTerrain;
  return out;
}

GridCell kf_update(const GridCell& prior, double obs_mean, const KfParams& params, double xi) {
  GridCell out = prior;
  out.frames = prior.frames + 1;
  if (out.cls == CellClass::Unobserved) out.cls = CellClass::PotentialTerrain;
  const double a = params.a;
  const double c = params.c;
  if (prior.count == 0) {
    // Infinite prior variance: the gain tends to 1/c.
    out.mean = obs_mean / c;
    out.variance = xi / (c * c);
    out.count = std::max<std::uint64_t>(prior.count, 1);
    return out;
  }
  const double mean_bar = a * prior.mean;
  const double var_bar = a * a * prior.variance + params.epsilon;
  const double gain = var_bar * c / (c * c * var_bar + xi);
  out.mean = mean_bar + gain * (obs_mean - c * mean_bar);
  out.variance = std::max(0.0, (1.0 - gain * c) * var_bar);
  return out;
}

GridCell kf_update(const GridCell& prior, double obs_mean, const KfParams& params) {
  return kf_update(prior, obs_mean, params, params.measurement_noise(0.0));
}

CellClass refine_by_variance(const GridCell& cell, double variance_threshold, std::uint32_t min_obs) {
  if (cell.cls == CellClass::PotentialTerrain && cell.frames >= min_obs &&
      cell.variance > variance_threshold) {
    return CellClass::Obstacle;
  }
  return cell.cls;
}

void integrate_frame(RollingGridMap& map, const ScanFrame& scan, const FusionConfig& cfg) {
  const Vec3& origin = scan.frame_pose.translation();
  map.roll_to(origin.head<2>());
  map.set_lidar_z(origin.z());
  if (scan.points.empty()) return;

  const MapAnchor& anchor = map.anchor();
  const int n = anchor.side_cells;
  const std::size_t total = static_cast<std::size_t>(n) * n;

  // Counting sort of points by cell.
  std::vector<std::uint32_t> cell_of(scan.points.size());
  std::vector<std::uint32_t> offsets(total + 1, 0);
  constexpr std::uint32_t kOutside = ~0u;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto idx = world_to_grid(scan.points[i], anchor);
    if (!idx || !scan.points[i].allFinite()) {
      cell_of[i] = kOutside;
      continue;
    }
    const auto k = static_cast<std::uint32_t>(idx->row * n + idx->col);
    cell_of[i] = k;
    ++offsets[k + 1];
  }
  for (std::size_t k = 0; k < total; ++k) offsets[k + 1] += offsets[k];
  std::vector<double> heights(offsets[total]);
  {
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      if (cell_of[i] == kOutside) continue;
      heights[cursor[cell_of[i]]++] = scan.points[i].z() + origin.z();
    }
  }

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * n + c;
      const std::uint32_t begin = offsets[k];
      const std::uint32_t end = offsets[k + 1];
      if (begin == end) continue;
      GridCell& cell = map.at({r, c});
      if (cell.cls == CellClass::Obstacle) continue;

      const std::span<const double> raw(heights.data() + begin, end - begin);
      const std::vector<double> kept = remove_overhang(raw, cfg.overhang_threshold);
      const auto obs = cell_stats(kept);
      if (!obs) continue;

      if (coarse_segment(*obs, cfg.height_threshold) == CellClass::Obstacle) {
        cell = ndt_update(cell, *obs);
        cell.cls = CellClass::Obstacle;
      } else if (cfg.mode == FusionMode::Ndt) {
        cell = ndt_update(cell, *obs);
      } else {
        const Vec2 center = anchor.cell_center({r, c});
        const std::uint64_t prior_count = cell.count;
        cell = kf_update(cell, obs->mean, cfg.kf, cfg.kf.measurement_noise(center.norm()));
        cell.count = prior_count + obs->n;
      }
      cell.last_update = scan.frame_id;
      cell.cls = refine_by_variance(cell, cfg.variance_threshold, cfg.min_obs);
    }
  }
}

}  // namespace terrafuse
