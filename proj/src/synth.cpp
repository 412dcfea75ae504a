#include "terrafuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace terrafuse {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinStep = 0.02;
constexpr double kMaxStep = 0.25;
constexpr double kBisectTol = 1e-3;

struct RayCaster {
  const SyntheticScene& scene;
  const SensorSpec& sensor;
  double ceiling;

  // Distance along the unit ray to the surface, or a negative value on a miss.
  double cast(const Vec3& origin, const Vec3& dir) const {
    auto gap = [&](double t) {
      const Vec3 p = origin + t * dir;
      return p.z() - scene.height(p.x(), p.y());
    };
    double t = sensor.min_range;
    double g = gap(t);
    if (g <= 0.0) return -1.0;
    while (t < sensor.max_range) {
      const double step = std::clamp(0.5 * g, kMinStep, kMaxStep);
      const double next = std::min(t + step, sensor.max_range);
      const double g_next = gap(next);
      if (g_next <= 0.0) {
        double lo = t;
        double hi = next;
        while (hi - lo > kBisectTol) {
          const double mid = 0.5 * (lo + hi);
          (gap(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
      t = next;
      g = g_next;
      if (dir.z() >= 0.0 && origin.z() + t * dir.z() > ceiling) return -1.0;
    }
    return -1.0;
  }
};

ScanFrame simulate(const SyntheticScene& scene, const Pose6& before, const Pose6* after, const SensorSpec& sensor,
                   std::uint64_t seed, std::vector<std::uint32_t>* labels) {
  if (!(sensor.azimuth_step_deg > 0.0)) throw std::invalid_argument("simulate_lidar: azimuth step must be positive");
  ScanFrame out;
  out.frame_pose = before;
  if (labels) labels->clear();
  const RayCaster caster{scene, sensor, scene.height_bound() + 1e-6};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int columns = static_cast<int>(std::floor(360.0 / sensor.azimuth_step_deg + 1e-9));
  out.points.reserve(static_cast<std::size_t>(columns) * sensor.elevation_deg.size());
  for (int a = 0; a < columns; ++a) {
    const double fraction = columns > 1 ? static_cast<double>(a) / columns : 0.0;
    const Pose6 pose = after ? interpolate_pose(before, *after, fraction) : before;
    const Eigen::Matrix3d rot = pose.rotation_matrix();
    const double az = a * sensor.azimuth_step_deg * kDeg;
    for (double el_deg : sensor.elevation_deg) {
      const double el = el_deg * kDeg;
      const Vec3 local(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Vec3 dir = rot * local;
      const double t = caster.cast(pose.translation(), dir);
      // Draw even on a miss so the noise stream does not depend on scene content.
      const double n = sensor.range_noise > 0.0 ? sensor.range_noise * noise(rng) : 0.0;
      if (t < 0.0) continue;
      const double range = t + n;
      if (range <= 0.0 || range > sensor.max_range) continue;
      out.points.push_back(range * local);
      if (after) out.fractions.push_back(fraction);
      if (labels) {
        const Vec3 hit = pose.translation() + (t + kBisectTol) * dir;
        labels->push_back(scene.semantic_label(hit.x(), hit.y()));
      }
    }
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = count > 1 ? lo + (hi - lo) * i / (count - 1) : lo;
  return v;
}

}  // namespace

SensorSpec SensorSpec::hdl64() {
  SensorSpec s;
  s.elevation_deg = linspace(-24.8, 2.0, 64);
  return s;
}

SensorSpec SensorSpec::sparse(int beams, double azimuth_step_deg) {
  if (beams < 1) throw std::invalid_argument("SensorSpec::sparse: need at least one beam");
  SensorSpec s;
  s.elevation_deg = linspace(-24.8, 2.0, beams);
  s.azimuth_step_deg = azimuth_step_deg;
  return s;
}

SyntheticScene::SyntheticScene(SceneSpec spec) : spec_(std::move(spec)) {
  for (const auto& p : spec_.primitives) {
    if (const auto* r = std::get_if<RampPrim>(&p)) {
      if (!(r->length > 0.0) || r->direction.norm() == 0.0) throw std::invalid_argument("ramp: bad length or direction");
    } else if (const auto* s = std::get_if<StepPrim>(&p)) {
      if (s->normal.norm() == 0.0) throw std::invalid_argument("step: zero normal");
    } else if (const auto* h = std::get_if<HillPrim>(&p)) {
      if (!(h->sigma > 0.0)) throw std::invalid_argument("hill: sigma must be positive");
    }
  }
  index_primitives();
}

namespace {

constexpr double kHillCutoff = 8.0;  // sigmas
constexpr int kMaxBucketSpan = 16;

std::int64_t bucket_key(std::int64_t bx, std::int64_t by) { return (bx << 32) ^ (by & 0xffffffff); }

}  // namespace

void SyntheticScene::index_primitives() {
  double surface = 0.0;
  double wide = 0.0;
  double wall = 0.0;
  std::unordered_map<std::int64_t, double> bucket_peak;
  for (std::uint32_t i = 0; i < spec_.primitives.size(); ++i) {
    const auto& p = spec_.primitives[i];
    if (const auto* w = std::get_if<WallPrim>(&p)) {
      walls_.push_back(i);
      wall = std::max(wall, w->height);
      continue;
    }
    const auto* h = std::get_if<HillPrim>(&p);
    if (!h) {
      surface_prims_.push_back(i);
      std::visit(Overloaded{
                     [&](const PlanePrim& q) { surface += q.height; },
                     [&](const RampPrim& q) { surface += std::max(0.0, q.rise); },
                     [&](const StepPrim& q) { surface += std::max(0.0, q.height); },
                     [](const auto&) {},
                 },
                 p);
      continue;
    }
    const double reach = kHillCutoff * h->sigma;
    const auto lo_x = static_cast<std::int64_t>(std::floor((h->center.x() - reach) / bucket_size_));
    const auto hi_x = static_cast<std::int64_t>(std::floor((h->center.x() + reach) / bucket_size_));
    const auto lo_y = static_cast<std::int64_t>(std::floor((h->center.y() - reach) / bucket_size_));
    const auto hi_y = static_cast<std::int64_t>(std::floor((h->center.y() + reach) / bucket_size_));
    if (hi_x - lo_x > kMaxBucketSpan || hi_y - lo_y > kMaxBucketSpan) {
      wide_hills_.push_back(i);
      wide += std::max(0.0, h->amplitude);
      continue;
    }
    for (std::int64_t bx = lo_x; bx <= hi_x; ++bx) {
      for (std::int64_t by = lo_y; by <= hi_y; ++by) {
        hill_buckets_[bucket_key(bx, by)].push_back(i);
        bucket_peak[bucket_key(bx, by)] += std::max(0.0, h->amplitude);
      }
    }
  }
  double peak = 0.0;
  for (const auto& [key, v] : bucket_peak) peak = std::max(peak, v);
  height_bound_ = surface + wide + peak + wall;
}

double SyntheticScene::base_height(double x, double y) const {
  const Vec2 q(x, y);
  double h = 0.0;
  for (std::uint32_t i : surface_prims_) {
    std::visit(Overloaded{
                   [&](const PlanePrim& s) { h += s.height; },
                   [&](const RampPrim& s) {
                     const double along = (q - s.origin).dot(s.direction.normalized());
                     h += s.rise * std::clamp((along - s.start) / s.length, 0.0, 1.0);
                   },
                   [&](const StepPrim& s) {
                     if ((q - s.point).dot(s.normal) >= 0.0) h += s.height;
                   },
                   [](const auto&) {},
               },
               spec_.primitives[i]);
  }
  const auto add_hill = [&](std::uint32_t i) {
    const auto& s = std::get<HillPrim>(spec_.primitives[i]);
    const double d2 = (q - s.center).squaredNorm();
    const double reach = kHillCutoff * s.sigma;
    if (d2 <= reach * reach) h += s.amplitude * std::exp(-d2 / (2.0 * s.sigma * s.sigma));
  };
  for (std::uint32_t i : wide_hills_) add_hill(i);
  if (!hill_buckets_.empty()) {
    const auto bx = static_cast<std::int64_t>(std::floor(x / bucket_size_));
    const auto by = static_cast<std::int64_t>(std::floor(y / bucket_size_));
    if (const auto it = hill_buckets_.find(bucket_key(bx, by)); it != hill_buckets_.end()) {
      for (std::uint32_t i : it->second) add_hill(i);
    }
  }
  return h;
}

const WallPrim* SyntheticScene::wall_at(double x, double y) const {
  const WallPrim* top = nullptr;
  for (std::uint32_t i : walls_) {
    const auto& w = std::get<WallPrim>(spec_.primitives[i]);
    if (x >= w.min.x() && x <= w.max.x() && y >= w.min.y() && y <= w.max.y()) top = &w;
  }
  return top;
}

bool SyntheticScene::is_wall(double x, double y) const { return wall_at(x, y) != nullptr; }

double SyntheticScene::height(double x, double y) const {
  const double base = base_height(x, y);
  const WallPrim* top = wall_at(x, y);
  return top ? base + top->height : base;
}

TerrainModel SyntheticScene::true_terrain(const MapAnchor& anchor, const Vec3& lidar) const {
  TerrainModel m = TerrainModel::empty(anchor);
  m.lidar_z = lidar.z();
  const int n = anchor.side_cells;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Vec2 xy = lidar.head<2>() + anchor.cell_center({r, c});
      if (is_wall(xy.x(), xy.y())) {
        m.obstacle[m.linear(r, c)] = 1;
      } else {
        m.set(r, c, height(xy.x(), xy.y()), 0.0);
      }
    }
  }
  return m;
}

GroundTruthMap SyntheticScene::ground_truth(const MapAnchor& anchor, const Vec3& lidar,
                                            const KinematicLimits& limits, double radius) const {
  const TerrainModel truth = true_terrain(anchor, lidar);
  const CostMap cm = analyze_traversability(truth, limits, anchor.lidar_index());
  GroundTruthMap gt = GroundTruthMap::empty(anchor);
  const int n = anchor.side_cells;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t k = gt.linear(r, c);
      if (anchor.cell_center({r, c}).norm() > radius) continue;
      if (cm.label[k] == TravLabel::Traversable) {
        gt.label[k] = GtLabel::Traversable;
        gt.elevation[k] = truth.elevation[k];
        gt.elevation_valid[k] = 1;
      } else {
        gt.label[k] = GtLabel::NonTraversable;
      }
    }
  }
  return gt;
}

ScanFrame simulate_lidar(const SyntheticScene& scene, const Pose6& pose, const SensorSpec& sensor,
                         std::uint64_t seed, std::vector<std::uint32_t>* labels) {
  return simulate(scene, pose, nullptr, sensor, seed, labels);
}

ScanFrame simulate_lidar_sweep(const SyntheticScene& scene, const Pose6& pose_before, const Pose6& pose_after,
                               const SensorSpec& sensor, std::uint64_t seed, std::vector<std::uint32_t>* labels) {
  return simulate(scene, pose_before, &pose_after, sensor, seed, labels);
}

std::vector<std::string> builtin_scene_names() {
  return {"flat", "curb", "ramp", "hills", "walls", "two_region", "corridor"};
}

SceneSpec builtin_scene(const std::string& name, int frames, double lidar_height) {
  if (frames < 0) throw std::invalid_argument("builtin_scene: negative frame count");
  SceneSpec spec;
  spec.name = name;
  auto& prims = spec.primitives;
  prims.push_back(PlanePrim{0.0});
  double speed = 0.5;  // meters per frame along +x
  if (name == "flat") {
  } else if (name == "curb") {
    prims.push_back(StepPrim{Vec2(0.0, 3.05), Vec2::UnitY(), 0.15});
  } else if (name == "ramp") {
    prims.push_back(RampPrim{Vec2::Zero(), Vec2::UnitX(), 8.0, 10.0, 1.5});
  } else if (name == "hills") {
    prims.push_back(HillPrim{Vec2(12.0, 8.0), 1.5, 4.0});
    prims.push_back(HillPrim{Vec2(-6.0, -10.0), 2.0, 5.0});
    prims.push_back(HillPrim{Vec2(20.0, -6.0), 1.0, 3.0});
  } else if (name == "walls") {
    prims.push_back(WallPrim{Vec2(-10.0, 6.0), Vec2(30.0, 6.6), 2.5});
    prims.push_back(WallPrim{Vec2(-10.0, -7.0), Vec2(30.0, -6.4), 2.5});
    prims.push_back(WallPrim{Vec2(12.0, -3.0), Vec2(13.0, -1.0), 1.2});
  } else if (name == "two_region") {
    prims.push_back(WallPrim{Vec2(15.0, -40.0), Vec2(15.6, 40.0), 3.0});
    speed = 0.3;
  } else if (name == "corridor") {
    // Smooth road along y = 0, |y| < 2.5, flanked by dense bumps.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-30.0, 40.0);
    std::uniform_real_distribution<double> uy(4.0, 30.0);
    std::uniform_real_distribution<double> ua(0.25, 0.6);
    for (int i = 0; i < 400; ++i) {
      const double side = (i % 2 == 0) ? 1.0 : -1.0;
      prims.push_back(HillPrim{Vec2(ux(rng), side * uy(rng)), ua(rng), 0.45});
    }
  } else {
    throw std::invalid_argument("builtin_scene: unknown scene '" + name + "'");
  }
  const SyntheticScene probe(spec);
  spec.trajectory.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    const double x = i * speed;
    spec.trajectory.push_back(Pose6::from_translation(Vec3(x, 0.0, probe.height(x, 0.0) + lidar_height), 0.1 * i));
  }
  return spec;
}

}  // namespace terrafuse
