#include <doctest.h>

#include <algorithm>
#include <random>

#include "terrafuse/preprocess.hpp"
#include "terrafuse/synth.hpp"

using namespace terrafuse;

namespace {

// Two-pass reference for mean and population variance.
std::pair<double, double> two_pass(const std::vector<double>& h) {
  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= static_cast<double>(h.size());
  double var = 0.0;
  for (double v : h) var += (v - mean) * (v - mean);
  return {mean, var / static_cast<double>(h.size())};
}

double z_spread(const std::vector<Point3>& pts) {
  auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.z() < b.z(); });
  return hi->z() - lo->z();
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("cell_stats examples") {
    const std::vector<double> one{1.0};
    const auto a = cell_stats(one);
    REQUIRE(a);
    CHECK(a->n == 1);
    CHECK(a->mean == 1.0);
    CHECK(a->variance == 0.0);
    const std::vector<double> two{1.0, 3.0};
    const auto b = cell_stats(two);
    REQUIRE(b);
    CHECK(b->n == 2);
    CHECK(b->mean == doctest::Approx(2.0));
    CHECK(b->variance == doctest::Approx(1.0));
    for (double c : {-7.25, 0.0, 123.456}) {
      const std::vector<double> same{c, c, c};
      CHECK(cell_stats(same)->variance == 0.0);
    }
    CHECK_FALSE(cell_stats(std::vector<double>{}));
  }

  TEST_CASE("cell_stats matches two-pass reference") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_int_distribution<int> len(1, 200);
    for (int t = 0; t < 500; ++t) {
      const double offset = u(rng) * 20.0;
      std::vector<double> h(len(rng));
      for (auto& v : h) v = offset + u(rng);
      const auto s = cell_stats(h);
      const auto [mean, var] = two_pass(h);
      REQUIRE(s);
      CHECK(std::abs(s->mean - mean) < 1e-12 * std::max(1.0, std::abs(mean)));
      CHECK(std::abs(s->variance - var) < 1e-12 * std::max(1.0, var) * 100);
      CHECK(s->min_h <= s->mean);
      CHECK(s->mean <= s->max_h);
      CHECK(s->variance >= 0.0);
    }
  }

  TEST_CASE("coarse_segment examples") {
    auto seg = [](std::vector<double> h) { return coarse_segment(*cell_stats(h), 0.4); };
    CHECK(seg({0.0, 0.5}) == CellClass::Obstacle);
    CHECK(seg({0.0, 0.4}) == CellClass::PotentialTerrain);
    CHECK(seg({2.0}) == CellClass::PotentialTerrain);
  }

  TEST_CASE("coarse_segment ignores a common offset") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 0.6);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> h(5);
      for (auto& v : h) v = u(rng);
      std::vector<double> shifted = h;
      for (auto& v : shifted) v += 17.5;
      CHECK(coarse_segment(*cell_stats(h), 0.4) == coarse_segment(*cell_stats(shifted), 0.4));
    }
  }

  TEST_CASE("remove_overhang examples") {
    CHECK(remove_overhang(std::vector<double>{0.0, 3.0}, 2.0) == std::vector<double>{0.0});
    CHECK(remove_overhang(std::vector<double>{0.0, 1.0}, 2.0) == std::vector<double>{0.0, 1.0});
    CHECK(remove_overhang(std::vector<double>{}, 2.0).empty());
    CHECK(remove_overhang(std::vector<double>{1.0, 3.0}, 2.0).size() == 2);
  }

  TEST_CASE("rectify without motion applies only the upright rotation") {
    const Pose6 pose = Pose6::from_euler({4, 5, 6}, 0.1, -0.2, 1.3);
    ScanFrame scan;
    scan.points = {{1, 0, 0}, {0, 2, -1}, {3, 3, 3}};
    scan.frame_pose = pose;
    const ScanFrame out = rectify_scan(scan, pose, pose);
    REQUIRE(out.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK((out.points[i] - pose.rotation_matrix() * scan.points[i]).norm() < 1e-12);
    }
    CHECK(out.frame_pose.rotation().angularDistance(Eigen::Quaterniond::Identity()) < 1e-15);
    CHECK((out.frame_pose.translation() - pose.translation()).norm() == 0.0);
  }

  TEST_CASE("rectify is the identity without attitude or motion") {
    ScanFrame scan;
    scan.points = {{1, 2, 3}, {-4, 5, -6}};
    scan.fractions = {0.0, 0.7};
    const ScanFrame out = rectify_scan(scan, Pose6::identity(), Pose6::identity());
    for (std::size_t i = 0; i < 2; ++i) CHECK((out.points[i] - scan.points[i]).norm() < 1e-15);
    CHECK_FALSE(out.has_fractions());
  }

  TEST_CASE("linear deskew") {
    ScanFrame scan;
    scan.points = {{0, 0, 0}, {1, 0, 0}};
    scan.fractions = {0.5, 0.0};
    const Pose6 before = Pose6::identity();
    const Pose6 after = Pose6::from_translation({1, 0, 0});
    scan.frame_pose = before;
    const ScanFrame out = rectify_scan(scan, before, after);
    CHECK((out.points[0] - Point3(0.5, 0, 0)).norm() < 1e-15);
    CHECK((out.points[1] - Point3(1, 0, 0)).norm() < 1e-15);
  }

  TEST_CASE("rotating platform over a plane rectifies to a flat cloud") {
    SceneSpec spec;
    spec.primitives = {PlanePrim{0.0}};
    const SyntheticScene scene(spec);
    SensorSpec sensor = SensorSpec::sparse(16, 2.0);
    sensor.range_noise = 0.0;
    sensor.max_range = 30.0;
    const Pose6 before = Pose6::from_euler({0, 0, 1.8}, 0.05, -0.04, 0.0);
    const Pose6 after = Pose6::from_euler({1.0, 0.2, 1.8}, -0.03, 0.06, 0.4);
    const ScanFrame sweep = simulate_lidar_sweep(scene, before, after, sensor, 9);
    REQUIRE(sweep.has_fractions());
    REQUIRE(sweep.points.size() > 1000);
    const ScanFrame fixed = rectify_scan(sweep, before, after);
    CHECK(z_spread(fixed.points) < 1e-3);
    ScanFrame no_fractions = sweep;
    no_fractions.fractions.clear();
    CHECK(z_spread(rectify_scan(no_fractions, before, after).points) > 0.1);
  }
}
