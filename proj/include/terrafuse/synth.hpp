#ifndef TERRAFUSE_SYNTH_HPP
#define TERRAFUSE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "terrafuse/evaluation.hpp"
#include "terrafuse/geometry.hpp"
#include "terrafuse/preprocess.hpp"
#include "terrafuse/traversability.hpp"

namespace terrafuse {

// Height primitives. Plane, ramp, step and hill add to the height below
// them in declaration order; a wall replaces everything inside its footprint
// (later walls win where they overlap).
struct PlanePrim {
  double height = 0.0;
};
/// Rises by `rise` over [start, start + length] along `direction`, flat after.
struct RampPrim {
  Vec2 origin = Vec2::Zero();
  Vec2 direction = Vec2::UnitX();
  double start = 0.0;
  double length = 5.0;
  double rise = 1.0;
};
/// Adds `height` on the side of the line where (p - point) . normal >= 0.
struct StepPrim {
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitX();
  double height = 0.15;
};
struct HillPrim {
  Vec2 center = Vec2::Zero();
  double amplitude = 1.0;
  double sigma = 3.0;
};
/// Axis-aligned box standing `height` above the local terrain base.
struct WallPrim {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Ones();
  double height = 2.0;
};
using Primitive = std::variant<PlanePrim, RampPrim, StepPrim, HillPrim, WallPrim>;

struct SensorSpec {
  std::vector<double> elevation_deg;
  double azimuth_step_deg = 0.18;
  double range_noise = 0.02;
  double min_range = 1.0;
  double max_range = 60.0;

  /// 64 beams from -24.8 to +2 degrees.
  static SensorSpec hdl64();
  /// Same vertical layout with `beams` beams and a coarser azimuth step.
  static SensorSpec sparse(int beams, double azimuth_step_deg);
};

struct SceneSpec {
  std::string name = "scene";
  std::vector<Primitive> primitives;
  std::uint64_t seed = 1;
  SensorSpec sensor = SensorSpec::hdl64();
  std::vector<Pose6> trajectory;
};

/// SemanticKITTI ids used for synthetic points.
inline constexpr std::uint32_t kLabelRoad = 40;
inline constexpr std::uint32_t kLabelBuilding = 50;

class SyntheticScene {
 public:
  explicit SyntheticScene(SceneSpec spec);

  const SceneSpec& spec() const { return spec_; }
  double height(double x, double y) const;
  /// No point of the surface, walls included, lies above this.
  double height_bound() const { return height_bound_; }
  bool is_wall(double x, double y) const;
  std::uint32_t semantic_label(double x, double y) const {
    return is_wall(x, y) ? kLabelBuilding : kLabelRoad;
  }

  /// True terrain sampled at cell centers of the grid anchored at `lidar`
  /// (world position). Walls are obstacles.
  TerrainModel true_terrain(const MapAnchor& anchor, const Vec3& lidar) const;

  /// Traversable cells are those the convexity test reaches from the vehicle
  /// on the true terrain, restricted to `radius` meters around the LiDAR.
  GroundTruthMap ground_truth(const MapAnchor& anchor, const Vec3& lidar, const KinematicLimits& limits,
                              double radius) const;

 private:
  double base_height(double x, double y) const;
  const WallPrim* wall_at(double x, double y) const;
  void index_primitives();
  SceneSpec spec_;
  std::vector<std::uint32_t> surface_prims_;
  std::vector<std::uint32_t> walls_;
  double height_bound_ = 0.0;
  // Hills are looked up through a coarse bucket grid; each one is ignored
  // beyond 8 sigma from its center.
  double bucket_size_ = 2.0;
  std::vector<std::uint32_t> wide_hills_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> hill_buckets_;
};

/// Casts every beam from `pose` and returns hits in the sensor frame.
/// `labels`, when given, receives a semantic id per returned point.
ScanFrame simulate_lidar(const SyntheticScene& scene, const Pose6& pose, const SensorSpec& sensor,
                         std::uint64_t seed, std::vector<std::uint32_t>* labels = nullptr);

/// Like simulate_lidar while the platform moves from `pose_before` to
/// `pose_after` over the sweep; each point records its sweep fraction and is
/// expressed in the sensor frame at its own acquisition instant. The frame
/// pose is `pose_before`.
ScanFrame simulate_lidar_sweep(const SyntheticScene& scene, const Pose6& pose_before, const Pose6& pose_after,
                               const SensorSpec& sensor, std::uint64_t seed,
                               std::vector<std::uint32_t>* labels = nullptr);

/// Built-in scenes: flat, curb, ramp, hills, walls, two_region, corridor.
/// `frames` poses are generated along a straight drive at `lidar_height`.
SceneSpec builtin_scene(const std::string& name, int frames = 10, double lidar_height = 1.8);
std::vector<std::string> builtin_scene_names();

}  // namespace terrafuse

#endif  // TERRAFUSE_SYNTH_HPP
