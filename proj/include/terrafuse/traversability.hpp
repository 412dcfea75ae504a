#ifndef TERRAFUSE_TRAVERSABILITY_HPP
#define TERRAFUSE_TRAVERSABILITY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "terrafuse/geometry.hpp"
#include "terrafuse/terrain.hpp"

namespace terrafuse {

enum class TravLabel : std::uint8_t { Unknown = 0, Traversable = 1, NonTraversable = 2, Unreachable = 3 };

struct KinematicLimits {
  double max_similarity_deg = 10.0;  // T_alpha
  double min_concavity_deg = 80.0;   // T_theta
  double lidar_height = 1.8;         // sensor height above the ground it stands on
  double seed_tolerance = 0.4;       // seeds must lie within this of lidar_z - lidar_height
  double seed_search_radius = 6.0;   // meters; bound on widening the seed window

  double cos_similarity() const;
  double cos_concavity() const;
};

struct NormalField {
  int side = 0;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;

  bool is_valid(int row, int col) const {
    return row >= 0 && col >= 0 && row < side && col < side &&
           valid[static_cast<std::size_t>(row) * side + col] != 0;
  }
  const Vec3& at(int row, int col) const { return normals[static_cast<std::size_t>(row) * side + col]; }
};

/// 4-neighbour directions used for edge bits.
enum EdgeDir : std::uint8_t { kEast = 1u << 0, kWest = 1u << 1, kNorth = 1u << 2, kSouth = 1u << 3 };

struct CostMap {
  MapAnchor anchor;
  std::vector<TravLabel> label;
  std::vector<double> cost;
  /// Bit set of EdgeDir: which 4-neighbour edges satisfy the convexity test.
  std::vector<std::uint8_t> edges;

  static CostMap empty(const MapAnchor& anchor);

  int side() const { return anchor.side_cells; }
  std::size_t linear(int row, int col) const { return static_cast<std::size_t>(row) * anchor.side_cells + col; }
  bool in_bounds(const GridIndex& g) const { return anchor.contains(g); }
  TravLabel label_at(const GridIndex& g) const { return label[linear(g.row, g.col)]; }
  double cost_at(const GridIndex& g) const { return cost[linear(g.row, g.col)]; }
  bool edge_open(const GridIndex& g, EdgeDir dir) const { return (edges[linear(g.row, g.col)] & dir) != 0; }
  /// Marks the edge in both directions.
  void open_edge(const GridIndex& g, EdgeDir dir);
};

/// Normalized cross product of the row and column central differences,
/// oriented upward. nullopt unless the cell and its 4-neighbourhood are valid.
std::optional<Vec3> compute_normal(const TerrainModel& model, const GridIndex& cell);
NormalField compute_normals(const TerrainModel& model, int threads = 1);

/// Local convexity test between two adjacent cells.
bool edge_traversable(const Vec3& pos_i, const Vec3& normal_i, const Vec3& pos_j, const Vec3& normal_j,
                      const KinematicLimits& limits);

struct NeighborSample {
  Vec3 position;
  Vec3 normal;
};

/// Mean of the three convexity ratios over the traversable neighbours.
/// nullopt when the list is empty.
std::optional<double> travel_cost(const Vec3& pos_i, const Vec3& normal_i,
                                  std::span<const NeighborSample> traversable_neighbors,
                                  const KinematicLimits& limits);

/// Evaluates every 4-neighbour edge and labels cells: Traversable with a cost
/// when at least one edge passes, NonTraversable for obstacles or cells whose
/// edges all fail, Unknown where no normal exists.
CostMap label_costs(const TerrainModel& model, const NormalField& normals, const KinematicLimits& limits);

/// Breadth-first growth from seeds across cells accepted by `passable` and
/// edges accepted by `edge_ok`. Returns a reached mask.
std::vector<std::uint8_t> flood_fill(int side, std::span<const GridIndex> seeds,
                                     const std::function<bool(const GridIndex&)>& passable,
                                     const std::function<bool(const GridIndex&, EdgeDir)>& edge_ok);

/// Seeds are Traversable cells in the 3x3 window around the vehicle whose
/// elevation matches the ground below the LiDAR. An empty window is widened
/// one ring at a time up to seed_search_radius. Unreached Traversable cells
/// become Unreachable.
CostMap region_grow(CostMap costmap, const TerrainModel& model, const KinematicLimits& limits,
                    const GridIndex& vehicle_cell);

/// Normals, labelling and region growing in one call.
CostMap analyze_traversability(const TerrainModel& model, const KinematicLimits& limits,
                               const GridIndex& vehicle_cell, int threads = 1);

struct PlannedPath {
  std::vector<GridIndex> cells;
  double cost = 0.0;
};

/// 8-connected A* over Traversable cells. Moves cost step length (cells) plus
/// lambda times the destination cost; diagonal moves need both rectilinear
/// detours open. nullopt when the goal cannot be reached.
std::optional<PlannedPath> plan_path(const CostMap& costmap, const GridIndex& start, const GridIndex& goal,
                                     double lambda = 5.0);

}  // namespace terrafuse

#endif  // TERRAFUSE_TRAVERSABILITY_HPP
