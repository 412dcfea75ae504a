#include <doctest.h>

#include <cmath>
#include <random>

#include "terrafuse/geometry.hpp"

using namespace terrafuse;

namespace {

Pose6 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> ang(-3.1, 3.1);
  return Pose6::from_euler(Vec3(u(rng), u(rng), u(rng)), ang(rng), ang(rng) / 2, ang(rng));
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("residual examples") {
    const Vec2 r = compute_residual({3.5, -1.3}, 0.2);
    CHECK(r.x() == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(r.y() == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(compute_residual({0.0, 0.0}, 0.2).norm() == 0.0);
    const Vec2 b = compute_residual({0.2, 0.4}, 0.2);
    CHECK(b.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.y() == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("residual rejects bad input") {
    CHECK_THROWS_AS(compute_residual({1.0, 1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_residual({1.0, 1.0}, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(compute_residual({NAN, 1.0}, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(compute_residual({INFINITY, 1.0}, 0.2), std::invalid_argument);
  }

  TEST_CASE("residual is always in [0, omega)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    for (double omega : {0.1, 0.2, 0.4, 0.37}) {
      for (int i = 0; i < 20000; ++i) {
        const Vec2 r = compute_residual({u(rng), u(rng)}, omega);
        REQUIRE(r.x() >= 0.0);
        REQUIRE(r.x() < omega);
        REQUIRE(r.y() >= 0.0);
        REQUIRE(r.y() < omega);
      }
    }
  }

  TEST_CASE("anchor validation") {
    CHECK_THROWS_AS(MapAnchor::create({0, 0}, 0.2, 401), std::invalid_argument);
    CHECK_THROWS_AS(MapAnchor::create({0, 0}, 0.2, 0), std::invalid_argument);
    CHECK_THROWS_AS(MapAnchor::create({0, 0}, 0.0, 400), std::invalid_argument);
    CHECK_THROWS_AS(MapAnchor::create({NAN, 0}, 0.2, 400), std::invalid_argument);
    const MapAnchor a = MapAnchor::create({0, 0}, 0.2, 400);
    CHECK(a.side_meters() == doctest::Approx(80.0));
  }

  TEST_CASE("world_to_grid examples") {
    const MapAnchor a = MapAnchor::create({0, 0}, 0.2, 400);
    const auto g1 = world_to_grid({0.05, 0.05, 0.0}, a);
    REQUIRE(g1);
    CHECK(g1->row == 199);
    CHECK(g1->col == 200);
    const auto g2 = world_to_grid({-0.05, -0.05, 0.0}, a);
    REQUIRE(g2);
    CHECK(g2->row == 200);
    CHECK(g2->col == 199);
    CHECK_FALSE(world_to_grid({40.0, 0.0, 0.0}, a));
    CHECK_FALSE(world_to_grid({0.0, 40.0, 0.0}, a));
    CHECK(world_to_grid({39.99, 0.0, 0.0}, a));
    CHECK(world_to_grid({-40.0, 0.0, 0.0}, a));
    CHECK_FALSE(world_to_grid({-40.01, 0.0, 0.0}, a));
  }

  TEST_CASE("lidar cell and cell centers") {
    const MapAnchor a = MapAnchor::create({1.37, -2.91}, 0.2, 400);
    const auto g = world_to_grid({0.0, 0.0, 0.0}, a);
    REQUIRE(g);
    CHECK(*g == a.lidar_index());
    for (const GridIndex idx : {GridIndex{0, 0}, GridIndex{17, 333}, GridIndex{399, 399}}) {
      const Vec2 c = a.cell_center(idx);
      const auto back = world_to_grid({c.x(), c.y(), 0.0}, a);
      REQUIRE(back);
      CHECK(*back == idx);
      const auto w = a.world_cell(idx);
      const Vec2 world = c + a.lidar_xy;
      CHECK(w.x() == floor_to_int(world.x() / 0.2));
      CHECK(w.y() == floor_to_int(world.y() / 0.2));
      CHECK(a.index_of_world_cell(w.x(), w.y()) == idx);
    }
  }

  TEST_CASE("alignment identity over random pairs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lidar(-500.0, 500.0);
    std::uniform_real_distribution<double> offset(-39.9, 39.9);
    const double omega = 0.2;
    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec2 l(lidar(rng), lidar(rng));
      const Vec2 p = l + Vec2(offset(rng), offset(rng));
      const Vec2 r = compute_residual(l, omega);
      for (int k = 0; k < 2; ++k) {
        const auto lhs = floor_to_int((p[k] - l[k] + r[k]) / omega);
        const auto rhs = floor_to_int(p[k] / omega) - floor_to_int(l[k] / omega);
        failures += lhs != rhs;
      }
    }
    CHECK(failures == 0);
  }

  TEST_CASE("transform examples") {
    const Point3 p(1.0, -2.0, 3.0);
    const Pose6 a = Pose6::from_euler({1, 2, 3}, 0.1, 0.2, 0.3);
    const Point3 same = transform_point(p, a, a);
    CHECK((same - p).norm() < 1e-12);
    const Point3 t = transform_point({0, 0, 0}, Pose6::from_translation({1, 0, 0}), Pose6::identity());
    CHECK((t - Point3(1, 0, 0)).norm() < 1e-15);
  }

  TEST_CASE("transform round trip and composition") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
      const Pose6 a = random_pose(rng);
      const Pose6 b = random_pose(rng);
      const Pose6 c = random_pose(rng);
      const Point3 p(u(rng), u(rng), u(rng));
      const Point3 q = transform_point(p, a, b);
      CHECK((transform_point(q, b, a) - p).norm() < 1e-9);
      CHECK((transform_point(q, b, c) - transform_point(p, a, c)).norm() < 1e-9);
    }
  }

  TEST_CASE("pose construction keeps a proper rotation") {
    Eigen::Matrix3d noisy = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    noisy(0, 1) += 1e-4;
    const Pose6 p(Vec3::Zero(), noisy);
    const Eigen::Matrix3d r = p.rotation_matrix();
    CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    const Pose6 inv = p.inverse();
    CHECK((inv.compose(p).matrix3x4().leftCols<3>() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }

  TEST_CASE("interpolate_pose") {
    const Pose6 a = Pose6::from_euler({0, 0, 0}, 0.0, 0.0, 0.0, 1.0);
    const Pose6 b = Pose6::from_euler({2, 0, 0}, 0.0, 0.0, 1.0, 2.0);
    CHECK((interpolate_pose(a, b, 0.0).translation() - a.translation()).norm() == 0.0);
    CHECK((interpolate_pose(a, b, 1.0).translation() - b.translation()).norm() == 0.0);
    const Pose6 mid = interpolate_pose(Pose6::identity(), Pose6::from_translation({2, 0, 0}), 0.5);
    CHECK((mid.translation() - Vec3(1, 0, 0)).norm() < 1e-15);
    const Pose6 half = interpolate_pose(a, b, 0.5);
    CHECK(half.rotation().angularDistance(Eigen::Quaterniond(Eigen::AngleAxisd(0.5, Vec3::UnitZ()))) < 1e-12);
    CHECK_THROWS_AS(interpolate_pose(a, b, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_pose(a, b, 1.5), std::invalid_argument);
  }
}
