#include <doctest.h>

#include <random>

#include "terrafuse/evaluation.hpp"
#include "terrafuse/log.hpp"

using namespace terrafuse;

namespace {

struct QuietWarnings {
  QuietWarnings() { previous = set_warning_sink([](const std::string&) {}); }
  ~QuietWarnings() { set_warning_sink(previous); }
  LogSink previous;
};

MapAnchor small_anchor() { return MapAnchor::create({0.1, 0.1}, 0.2, 20); }

CostMap estimate(const MapAnchor& a, const std::vector<int>& traversable) {
  CostMap m = CostMap::empty(a);
  for (int k : traversable) m.label[k] = TravLabel::Traversable;
  return m;
}

GroundTruthMap truth(const MapAnchor& a, const std::vector<int>& traversable, double h = 0.0) {
  GroundTruthMap g = GroundTruthMap::empty(a);
  for (int k : traversable) {
    g.label[k] = GtLabel::Traversable;
    g.elevation[k] = h;
    g.elevation_valid[k] = 1;
  }
  return g;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("assemble_map examples") {
    std::vector<LabeledScan> frames(3);
    frames[0] = {{{1, 0, 0}}, {40}, Pose6::identity()};
    frames[1] = {{{0, 0, 0}}, {50}, Pose6::from_translation({2, 0, 0})};
    frames[2] = {{{0, 0, 0}}, {40}, Pose6::from_translation({100, 0, 0})};
    const LabeledCloud near = assemble_map(frames, 0, 10.0);
    REQUIRE(near.points.size() == 2);
    CHECK((near.points[0] - Point3(1, 0, 0)).norm() < 1e-12);
    CHECK((near.points[1] - Point3(2, 0, 0)).norm() < 1e-12);
    CHECK(near.labels == std::vector<std::uint32_t>{40, 50});

    const LabeledCloud from_second = assemble_map(frames, 1, 10.0);
    REQUIRE(from_second.points.size() == 2);
    CHECK((from_second.points[0] - Point3(-1, 0, 0)).norm() < 1e-12);

    QuietWarnings quiet;
    frames[1].pose.reset();
    CHECK(assemble_map(frames, 0, 10.0).points.size() == 1);
    CHECK(assemble_map(frames, 1, 10.0).points.empty());
  }

  TEST_CASE("assemble_map round trip through a rotated center") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const Pose6 center = Pose6::from_euler({3, 4, 1}, 0.1, -0.05, 0.8);
    const Pose6 other = Pose6::from_euler({5, 2, 1}, 0.0, 0.02, -0.4);
    std::vector<LabeledScan> frames(2);
    frames[0].pose = center;
    frames[1].pose = other;
    for (int i = 0; i < 100; ++i) {
      frames[1].points.push_back({u(rng), u(rng), u(rng)});
      frames[1].labels.push_back(40);
    }
    const LabeledCloud cloud = assemble_map(frames, 0, 50.0);
    const LabeledCloud upright = assemble_map(frames, 0, 50.0, true);
    for (int i = 0; i < 100; ++i) {
      CHECK((transform_point(cloud.points[i], center, other) - frames[1].points[i]).norm() < 1e-9);
      const Point3 world = other.rotation_matrix() * frames[1].points[i] + other.translation();
      CHECK((upright.points[i] - (world - center.translation())).norm() < 1e-9);
    }
  }

  TEST_CASE("semantic labelling") {
    const MapAnchor a = small_anchor();
    const LabelConfig kitti = semantic_kitti_labels();
    LabeledCloud cloud;
    // Cell A: road only. Cell B: road and car. Cell C: terrain with a tree crown above.
    cloud.points = {{0.05, 0.05, -1.7}, {0.05, 0.05, -1.75},
                    {0.45, 0.05, -1.8}, {0.45, 0.05, -1.0},
                    {-0.35, 0.05, -1.8}, {-0.35, 0.05, 1.5}};
    cloud.labels = {40, 40, 40, 10, 72, 70};
    const GroundTruthMap g = label_traversability(cloud, a, kitti, 1.8);
    const auto at = [&](double x) { return g.linear(world_to_grid({x, 0.05, 0}, a)->row, world_to_grid({x, 0.05, 0}, a)->col); };
    CHECK(g.label[at(0.05)] == GtLabel::Traversable);
    CHECK(g.elevation[at(0.05)] == doctest::Approx(0.075));
    CHECK(g.label[at(0.45)] == GtLabel::NonTraversable);
    CHECK(g.elevation_valid[at(0.45)] == 0);
    CHECK(g.label[at(-0.35)] == GtLabel::Traversable);
    CHECK(g.elevation[at(-0.35)] == doctest::Approx(0.0));
    CHECK(g.label[at(1.05)] == GtLabel::Empty);

    // Low vegetation is not overhanging and blocks the cell.
    cloud.points[5].z() = -1.0;
    const GroundTruthMap low = label_traversability(cloud, a, kitti, 1.8);
    CHECK(low.label[at(-0.35)] == GtLabel::NonTraversable);

    CHECK(rellis_labels().traversable.contains(3));
    CHECK(rellis_labels().hanging.contains(4));
  }

  TEST_CASE("finalize removes islands") {
    const MapAnchor a = small_anchor();
    const GridIndex v = a.lidar_index();
    GroundTruthMap g = GroundTruthMap::empty(a);
    for (int c = v.col - 3; c <= v.col + 3; ++c) {
      const std::size_t k = g.linear(v.row, c);
      g.label[k] = GtLabel::Traversable;
      g.elevation_valid[k] = 1;
      g.elevation[k] = 0.0;
    }
    const std::size_t island = g.linear(2, 2);
    g.label[island] = GtLabel::Traversable;
    g.elevation_valid[island] = 1;
    const GroundTruthMap f = finalize_gt(g);
    CHECK(f.label[island] == GtLabel::NonTraversable);
    CHECK(f.elevation_valid[island] == 0);
    CHECK(f.traversable_count() == 7);

    // Center not traversable: the growth starts at the nearest traversable cell.
    QuietWarnings quiet;
    GroundTruthMap off = g;
    off.label[g.linear(v.row, v.col)] = GtLabel::NonTraversable;
    const GroundTruthMap f2 = finalize_gt(off);
    CHECK(f2.traversable_count() == 3);
  }

  TEST_CASE("finalize is a fixed point") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
      GroundTruthMap g = GroundTruthMap::empty(small_anchor());
      for (std::size_t k = 0; k < g.label.size(); ++k) {
        if (u(rng) < 0.6) {
          g.label[k] = GtLabel::Traversable;
          g.elevation_valid[k] = 1;
          g.elevation[k] = u(rng);
        }
      }
      QuietWarnings quiet;
      const GroundTruthMap once = finalize_gt(g);
      const GroundTruthMap twice = finalize_gt(once);
      CHECK(once.label == twice.label);
      CHECK(once.elevation == twice.elevation);
    }
  }

  TEST_CASE("traversability metric examples") {
    const MapAnchor a = small_anchor();
    const auto p = metrics_traversability(estimate(a, {1, 2}), truth(a, {1, 2, 3, 4}));
    REQUIRE(p);
    CHECK(p->precision == 1.0);
    CHECK(p->recall == 0.5);
    CHECK(p->f1 == doctest::Approx(2.0 / 3.0));
    const auto d = metrics_traversability(estimate(a, {1, 2}), truth(a, {5, 6}));
    REQUIRE(d);
    CHECK(d->precision == 0.0);
    CHECK(d->recall == 0.0);
    CHECK(d->f1 == 0.0);
    CHECK_FALSE(metrics_traversability(estimate(a, {}), truth(a, {5, 6})));
    CHECK_FALSE(metrics_traversability(estimate(a, {1}), truth(a, {})));
  }

  TEST_CASE("elevation metric examples") {
    const MapAnchor a = small_anchor();
    TerrainModel est = TerrainModel::empty(a);
    for (int k : {1, 2, 3, 4}) {
      est.elevation[k] = 1.05;
      est.valid[k] = 1;
    }
    const auto e = metrics_elevation(est, truth(a, {1, 2, 3, 4}, 1.0));
    REQUIRE(e);
    CHECK(e->mean_abs_error == doctest::Approx(0.05));
    CHECK(e->rmse == doctest::Approx(0.05));
    CHECK(e->coverage == 1.0);

    est.valid[3] = 0;
    est.valid[4] = 0;
    const auto half = metrics_elevation(est, truth(a, {1, 2, 3, 4}, 1.0));
    REQUIRE(half);
    CHECK(half->coverage == 0.5);
    CHECK(half->mean_abs_error == doctest::Approx(0.05));
    const auto strict = metrics_elevation(est, truth(a, {1, 2, 3, 4}, 1.0), true);
    REQUIRE(strict);
    CHECK(strict->mean_abs_error == doctest::Approx((0.05 + 0.05 + 1000.0 + 1000.0) / 4.0));
    CHECK_FALSE(metrics_elevation(est, truth(a, {})));
  }

  TEST_CASE("precision does not increase when extra cells are claimed outside the truth") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> cell(0, 399);
    const MapAnchor a = small_anchor();
    for (int t = 0; t < 200; ++t) {
      std::vector<int> gt_cells;
      std::vector<int> est_cells;
      for (int k = 0; k < 60; ++k) gt_cells.push_back(cell(rng));
      for (int k = 0; k < 40; ++k) est_cells.push_back(cell(rng));
      const GroundTruthMap g = truth(a, gt_cells);
      const auto before = metrics_traversability(estimate(a, est_cells), g);
      std::vector<int> more = est_cells;
      for (int k = 0; k < 400; ++k) {
        if (g.label[k] != GtLabel::Traversable) more.push_back(k);
        if (more.size() > est_cells.size() + 10) break;
      }
      const auto after = metrics_traversability(estimate(a, more), g);
      REQUIRE(before);
      REQUIRE(after);
      CHECK(after->precision <= before->precision + 1e-15);
      CHECK(after->recall == before->recall);
    }
  }
}
