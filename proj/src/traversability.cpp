#include "terrafuse/traversability.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "terrafuse/log.hpp"
#include "terrafuse/parallel.hpp"

namespace terrafuse {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Step {
  int dr;
  int dc;
  EdgeDir dir;
};
constexpr Step kFourSteps[4] = {{0, 1, kEast}, {0, -1, kWest}, {-1, 0, kNorth}, {1, 0, kSouth}};

EdgeDir opposite(EdgeDir d) {
  switch (d) {
    case kEast: return kWest;
    case kWest: return kEast;
    case kNorth: return kSouth;
    default: return kNorth;
  }
}

GridIndex neighbor(const GridIndex& g, EdgeDir d) {
  switch (d) {
    case kEast: return {g.row, g.col + 1};
    case kWest: return {g.row, g.col - 1};
    case kNorth: return {g.row - 1, g.col};
    default: return {g.row + 1, g.col};
  }
}

}  // namespace

double KinematicLimits::cos_similarity() const { return std::cos(max_similarity_deg * kDegToRad); }
double KinematicLimits::cos_concavity() const { return std::cos(min_concavity_deg * kDegToRad); }

CostMap CostMap::empty(const MapAnchor& anchor) {
  CostMap m;
  m.anchor = anchor;
  const std::size_t total = static_cast<std::size_t>(anchor.side_cells) * anchor.side_cells;
  m.label.assign(total, TravLabel::Unknown);
  m.cost.assign(total, 0.0);
  m.edges.assign(total, 0);
  return m;
}

void CostMap::open_edge(const GridIndex& g, EdgeDir dir) {
  const GridIndex o = neighbor(g, dir);
  if (!in_bounds(g) || !in_bounds(o)) return;
  edges[linear(g.row, g.col)] |= dir;
  edges[linear(o.row, o.col)] |= opposite(dir);
}

std::optional<Vec3> compute_normal(const TerrainModel& model, const GridIndex& cell) {
  const int r = cell.row;
  const int c = cell.col;
  if (!model.is_valid(r, c) || !model.is_valid(r, c + 1) || !model.is_valid(r, c - 1) ||
      !model.is_valid(r - 1, c) || !model.is_valid(r + 1, c)) {
    return std::nullopt;
  }
  const Vec3 along_x = model.position(r, c + 1) - model.position(r, c - 1);
  const Vec3 along_y = model.position(r - 1, c) - model.position(r + 1, c);
  Vec3 n = along_x.cross(along_y);
  const double len = n.norm();
  if (!(len > 0.0)) return std::nullopt;
  n /= len;
  if (n.z() < 0.0) n = -n;
  return n;
}

NormalField compute_normals(const TerrainModel& model, int threads) {
  NormalField field;
  const int n = model.side();
  field.side = n;
  field.normals.assign(static_cast<std::size_t>(n) * n, Vec3::Zero());
  field.valid.assign(static_cast<std::size_t>(n) * n, 0);
  parallel_chunks(n, threads, [&](int r0, int r1) {
    for (int r = r0; r < r1; ++r) {
      for (int c = 0; c < n; ++c) {
        if (const auto nv = compute_normal(model, {r, c})) {
          const std::size_t k = model.linear(r, c);
          field.normals[k] = *nv;
          field.valid[k] = 1;
        }
      }
    }
  });
  return field;
}

bool edge_traversable(const Vec3& pos_i, const Vec3& normal_i, const Vec3& pos_j, const Vec3& normal_j,
                      const KinematicLimits& limits) {
  const Vec3 v_ij = pos_j - pos_i;
  const double len = v_ij.norm();
  if (!(len > 0.0)) return false;
  const double cos_theta = limits.cos_concavity();
  return normal_i.dot(v_ij) / len <= cos_theta && normal_j.dot(-v_ij) / len <= cos_theta &&
         normal_i.dot(normal_j) >= limits.cos_similarity();
}

std::optional<double> travel_cost(const Vec3& pos_i, const Vec3& normal_i,
                                  std::span<const NeighborSample> traversable_neighbors,
                                  const KinematicLimits& limits) {
  if (traversable_neighbors.empty()) return std::nullopt;
  const double cos_theta = limits.cos_concavity();
  const double cos_alpha = limits.cos_similarity();
  double sum = 0.0;
  for (const auto& nb : traversable_neighbors) {
    const Vec3 v_ij = nb.position - pos_i;
    const double len = v_ij.norm();
    sum += normal_i.dot(v_ij) / (len * cos_theta) + nb.normal.dot(-v_ij) / (len * cos_theta) +
           cos_alpha / normal_i.dot(nb.normal);
  }
  return sum / (3.0 * static_cast<double>(traversable_neighbors.size()));
}

CostMap label_costs(const TerrainModel& model, const NormalField& normals, const KinematicLimits& limits) {
  CostMap map = CostMap::empty(model.anchor);
  const int n = model.side();

  // East and south edges per cell cover every 4-adjacency once.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!normals.is_valid(r, c)) continue;
      const Vec3 pi = model.position(r, c);
      const Vec3& ni = normals.at(r, c);
      if (normals.is_valid(r, c + 1) &&
          edge_traversable(pi, ni, model.position(r, c + 1), normals.at(r, c + 1), limits)) {
        map.open_edge({r, c}, kEast);
      }
      if (normals.is_valid(r + 1, c) &&
          edge_traversable(pi, ni, model.position(r + 1, c), normals.at(r + 1, c), limits)) {
        map.open_edge({r, c}, kSouth);
      }
    }
  }

  std::vector<NeighborSample> nbrs;
  nbrs.reserve(4);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t k = map.linear(r, c);
      if (model.obstacle[k]) {
        map.label[k] = TravLabel::NonTraversable;
        continue;
      }
      if (!normals.is_valid(r, c)) continue;
      nbrs.clear();
      for (const auto& s : kFourSteps) {
        if (map.edges[k] & s.dir) {
          nbrs.push_back({model.position(r + s.dr, c + s.dc), normals.at(r + s.dr, c + s.dc)});
        }
      }
      const auto cost = travel_cost(model.position(r, c), normals.at(r, c), nbrs, limits);
      if (cost) {
        map.label[k] = TravLabel::Traversable;
        map.cost[k] = *cost;
      } else {
        map.label[k] = TravLabel::NonTraversable;
      }
    }
  }
  return map;
}

std::vector<std::uint8_t> flood_fill(int side, std::span<const GridIndex> seeds,
                                     const std::function<bool(const GridIndex&)>& passable,
                                     const std::function<bool(const GridIndex&, EdgeDir)>& edge_ok) {
  std::vector<std::uint8_t> reached(static_cast<std::size_t>(side) * side, 0);
  const auto in_bounds = [side](const GridIndex& g) {
    return g.row >= 0 && g.col >= 0 && g.row < side && g.col < side;
  };
  const auto lin = [side](const GridIndex& g) { return static_cast<std::size_t>(g.row) * side + g.col; };
  std::deque<GridIndex> frontier;
  for (const auto& s : seeds) {
    if (!in_bounds(s) || !passable(s) || reached[lin(s)]) continue;
    reached[lin(s)] = 1;
    frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const GridIndex g = frontier.front();
    frontier.pop_front();
    for (const auto& s : kFourSteps) {
      const GridIndex o{g.row + s.dr, g.col + s.dc};
      if (!in_bounds(o) || reached[lin(o)] || !passable(o) || !edge_ok(g, s.dir)) continue;
      reached[lin(o)] = 1;
      frontier.push_back(o);
    }
  }
  return reached;
}

CostMap region_grow(CostMap costmap, const TerrainModel& model, const KinematicLimits& limits,
                    const GridIndex& vehicle_cell) {
  const double ground = model.lidar_z - limits.lidar_height;
  std::vector<GridIndex> seeds;
  auto consider = [&](const GridIndex& g) {
    if (!costmap.in_bounds(g) || costmap.label_at(g) != TravLabel::Traversable) return;
    if (!model.is_valid(g.row, g.col)) return;
    if (std::abs(model.height(g.row, g.col) - ground) <= limits.seed_tolerance) seeds.push_back(g);
  };
  // The 3x3 window first; when the sensor's blind zone leaves it empty, widen
  // it ring by ring up to the search radius.
  const int max_ring =
      std::max(1, static_cast<int>(std::ceil(limits.seed_search_radius / model.cell_size() - 1e-9)));
  consider(vehicle_cell);
  for (int ring = 1; ring <= max_ring && (ring == 1 || seeds.empty()); ++ring) {
    for (int dr = -ring; dr <= ring; ++dr) {
      for (int dc = -ring; dc <= ring; ++dc) {
        if (std::max(std::abs(dr), std::abs(dc)) != ring) continue;
        consider({vehicle_cell.row + dr, vehicle_cell.col + dc});
      }
    }
  }
  if (seeds.empty()) {
    std::ostringstream msg;
    msg << "region growing found no seed near cell (" << vehicle_cell.row << ", " << vehicle_cell.col
        << "); all traversable cells marked unreachable";
    warn(msg.str());
  }
  const auto reached = flood_fill(
      costmap.side(), seeds,
      [&](const GridIndex& g) { return costmap.label_at(g) == TravLabel::Traversable; },
      [&](const GridIndex& g, EdgeDir d) { return costmap.edge_open(g, d); });
  for (std::size_t k = 0; k < costmap.label.size(); ++k) {
    if (costmap.label[k] == TravLabel::Traversable && !reached[k]) costmap.label[k] = TravLabel::Unreachable;
  }
  return costmap;
}

CostMap analyze_traversability(const TerrainModel& model, const KinematicLimits& limits,
                               const GridIndex& vehicle_cell, int threads) {
  const NormalField normals = compute_normals(model, threads);
  return region_grow(label_costs(model, normals, limits), model, limits, vehicle_cell);
}

std::optional<PlannedPath> plan_path(const CostMap& costmap, const GridIndex& start, const GridIndex& goal,
                                     double lambda) {
  const auto usable = [&](const GridIndex& g) {
    return costmap.in_bounds(g) && costmap.label_at(g) == TravLabel::Traversable;
  };
  if (!usable(start) || !usable(goal)) return std::nullopt;
  if (start == goal) return PlannedPath{{start}, 0.0};

  const int n = costmap.side();
  const std::size_t total = static_cast<std::size_t>(n) * n;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g_cost(total, kInf);
  std::vector<std::int32_t> parent(total, -1);
  std::vector<std::uint8_t> closed(total, 0);
  const auto lin = [n](const GridIndex& g) { return static_cast<std::size_t>(g.row) * n + g.col; };
  const auto heuristic = [&](const GridIndex& g) { return std::hypot(g.row - goal.row, g.col - goal.col); };

  using Entry = std::pair<double, std::int32_t>;  // (f, linear index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g_cost[lin(start)] = 0.0;
  open.push({heuristic(start), static_cast<std::int32_t>(lin(start))});

  const auto relax = [&](const GridIndex& from, const GridIndex& to, double step) {
    const double cand = g_cost[lin(from)] + step + lambda * costmap.cost_at(to);
    if (cand < g_cost[lin(to)]) {
      g_cost[lin(to)] = cand;
      parent[lin(to)] = static_cast<std::int32_t>(lin(from));
      open.push({cand + heuristic(to), static_cast<std::int32_t>(lin(to))});
    }
  };

  while (!open.empty()) {
    const auto [f, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    const GridIndex cur{idx / n, idx % n};
    if (cur == goal) break;
    for (const auto& s : kFourSteps) {
      const GridIndex o{cur.row + s.dr, cur.col + s.dc};
      if (usable(o) && !closed[lin(o)] && costmap.edge_open(cur, s.dir)) relax(cur, o, 1.0);
    }
    for (const EdgeDir vert : {kNorth, kSouth}) {
      for (const EdgeDir horiz : {kEast, kWest}) {
        const GridIndex via_v = neighbor(cur, vert);
        const GridIndex via_h = neighbor(cur, horiz);
        const GridIndex diag = neighbor(via_v, horiz);
        if (!usable(diag) || closed[lin(diag)] || !usable(via_v) || !usable(via_h)) continue;
        if (!costmap.edge_open(cur, vert) || !costmap.edge_open(via_v, horiz) ||
            !costmap.edge_open(cur, horiz) || !costmap.edge_open(via_h, vert)) {
          continue;
        }
        relax(cur, diag, std::numbers::sqrt2);
      }
    }
  }

  if (!std::isfinite(g_cost[lin(goal)])) return std::nullopt;
  PlannedPath path;
  path.cost = g_cost[lin(goal)];
  for (std::int32_t k = static_cast<std::int32_t>(lin(goal)); k >= 0; k = parent[k]) {
    path.cells.push_back({k / n, k % n});
    if (k == static_cast<std::int32_t>(lin(start))) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

}  // namespace terrafuse
