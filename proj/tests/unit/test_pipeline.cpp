#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "terrafuse/config.hpp"
#include "terrafuse/io.hpp"
#include "terrafuse/log.hpp"
#include "terrafuse/pipeline.hpp"

using namespace terrafuse;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.map_size = 40.0;
  cfg.gt_radius = 20.0;
  return cfg;
}

SceneSpec light_scene(const std::string& name, int frames) {
  SceneSpec spec = builtin_scene(name, frames);
  spec.sensor = SensorSpec::sparse(32, 0.4);
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("empty sequence produces nothing") {
    CHECK(run_pipeline(small_config(), {}).empty());
  }

  TEST_CASE("flat scene is traversable around the vehicle") {
    const SyntheticScene scene(light_scene("flat", 3));
    const auto results = run_pipeline(small_config(), simulate_sequence(scene, 1));
    REQUIRE(results.size() == 3);
    const FrameResult& last = results.back();
    const GridIndex v = last.terrain.anchor.lidar_index();
    int traversable = 0;
    for (int dr = -25; dr <= 25; ++dr) {
      for (int dc = -25; dc <= 25; ++dc) {
        const GridIndex g{v.row + dr, v.col + dc};
        if (std::hypot(dr, dc) < 20.0) continue;  // blind zone
        traversable += last.costmap.label_at(g) == TravLabel::Traversable;
        if (last.terrain.is_valid(g.row, g.col)) CHECK(std::abs(last.terrain.height(g.row, g.col)) < 0.05);
      }
    }
    CHECK(traversable > 500);
    const GroundTruthMap gt = scene.ground_truth(last.terrain.anchor, last.pose.translation(),
                                                 small_config().limits(), 20.0);
    const MetricReport m = evaluate_frame(last, gt, false);
    REQUIRE(m.traversability);
    CHECK(m.traversability->precision > 0.95);
    CHECK(m.elevation->mean_abs_error < 0.02);
  }

  TEST_CASE("non-finite frames are skipped") {
    const SyntheticScene scene(light_scene("flat", 2));
    auto frames = simulate_sequence(scene, 1);
    frames[0].points[0].x() = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
    const auto prev = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    const auto results = run_pipeline(small_config(), frames);
    set_warning_sink(prev);
    REQUIRE(results.size() == 1);
    CHECK(results[0].frame_id == 1);
    CHECK_FALSE(warnings.empty());
  }

  TEST_CASE("output is deterministic") {
    const SyntheticScene scene(light_scene("hills", 2));
    const auto frames = simulate_sequence(scene, 5);
    const auto a = run_pipeline(small_config(), frames);
    const auto b = run_pipeline(small_config(), frames);
    REQUIRE(a.size() == b.size());
    const fs::path dir = fs::temp_directory_path() / ("terrafuse_det_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    for (std::size_t i = 0; i < a.size(); ++i) {
      io::write_grid_csv(dir / "a.csv", a[i].terrain.side(), a[i].terrain.elevation, a[i].terrain.valid);
      io::write_grid_csv(dir / "b.csv", b[i].terrain.side(), b[i].terrain.elevation, b[i].terrain.valid);
      CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
      CHECK(a[i].costmap.label == b[i].costmap.label);
      CHECK(a[i].costmap.cost == b[i].costmap.cost);
    }
    fs::remove_all(dir);
    PipelineConfig threaded = small_config();
    threaded.threads = 3;
    const auto c = run_pipeline(threaded, frames);
    CHECK(c.back().terrain.elevation == a.back().terrain.elevation);
    CHECK(c.back().costmap.label == a.back().costmap.label);
  }

  TEST_CASE("stage times") {
    const SyntheticScene scene(light_scene("flat", 2));
    const auto results = run_pipeline(small_config(), simulate_sequence(scene, 1));
    for (const auto& r : results) {
      CHECK(r.times.rectify_ms >= 0.0);
      CHECK(r.times.integrate_ms >= 0.0);
      CHECK(r.times.bgk_ms >= 0.0);
      CHECK(r.times.traversability_ms >= 0.0);
      CHECK(r.times.total_ms >= r.times.stage_sum());
      CHECK(r.times.total_ms - r.times.stage_sum() < 1.0);
    }
  }

  TEST_CASE("timer overhead is negligible") {
    const SyntheticScene scene(light_scene("flat", 1));
    const auto results = run_pipeline(PipelineConfig{}, simulate_sequence(scene, 1));
    REQUIRE(results.size() == 1);
    StageTimer t;
    const int reps = 100000;
    StageTimer outer;
    outer.start();
    for (int i = 0; i < reps; ++i) {
      t.start();
      (void)t.stop();
    }
    const double per_pair = outer.stop() / reps;
    // Six start/stop pairs per frame.
    CHECK(6.0 * per_pair < 0.01 * results[0].times.total_ms);
  }

  TEST_CASE("json lines") {
    MetricReport r;
    r.frame_id = 3;
    CHECK(to_json_line(r) == "{\"frame\":3,\"P\":null,\"R\":null,\"F1\":null,\"E\":null,\"RMSE\":null,\"Rc\":null}");
    r.traversability = TraversabilityScores{1.0, 0.5, 2.0 / 3.0};
    r.elevation = ElevationScores{0.05, 0.07, 0.5, 10};
    r.time_ms = 12.5;
    CHECK(to_json_line(r, false, true) ==
          "{\"frame\":3,\"P\":1,\"R\":0.5,\"F1\":0.6666666666666666,\"E\":0.05,\"Rc\":0.5,\"time_ms\":12.5}");
  }

  TEST_CASE("ablation covers every configuration") {
    PipelineConfig cfg = small_config();
    const auto rows = run_ablation(cfg, light_scene("curb", 2));
    REQUIRE(rows.size() == 24);
    int ndt = 0;
    for (const auto& r : rows) {
      ndt += r.fusion == FusionMode::Ndt;
      CHECK(r.evaluated_frames == 2);
      CHECK(r.f1 > 0.0);
    }
    CHECK(ndt == 12);
    const std::string csv = ablation_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
    CHECK(csv.rfind("fusion,bf,ev,cell_size,P,R,F1,E,RMSE,Rc,time_ms,frames\n", 0) == 0);
  }

  TEST_CASE("config defaults") {
    const PipelineConfig cfg;
    CHECK(cfg.map_size == 80.0);
    CHECK(cfg.cell_size == 0.2);
    CHECK(cfg.side_cells() == 400);
    CHECK(cfg.height_threshold == 0.4);
    CHECK(cfg.variance_threshold == 0.1);
    CHECK(cfg.bilateral_variance == 0.1);
    CHECK(cfg.kernel_radius == 1.0);
    CHECK(cfg.max_similarity_deg == 10.0);
    CHECK(cfg.min_concavity_deg == 80.0);
    CHECK(cfg.overhang_threshold == 2.3);
    CHECK(cfg.min_obs == 3);
    CHECK(cfg.lambda == 5.0);
    CHECK(cfg.limits().max_similarity_deg == 10.0);
    CHECK(cfg.bgk_config().bilateral_variance == 0.1);
    CHECK(cfg.fusion_config().height_threshold == 0.4);
    PipelineConfig odd;
    odd.cell_size = 0.3;
    CHECK_THROWS_AS(odd.side_cells(), std::invalid_argument);
  }

  TEST_CASE("config settings, files and environment") {
    PipelineConfig cfg;
    apply_setting(cfg, "cell_size", "0.4");
    apply_setting(cfg, "fusion", "kf");
    apply_setting(cfg, "bilateral", "false");
    CHECK(cfg.cell_size == 0.4);
    CHECK(cfg.fusion == FusionMode::Kalman);
    CHECK_FALSE(cfg.bilateral);
    CHECK_THROWS_AS(apply_setting(cfg, "nope", "1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_setting(cfg, "cell_size", "abc"), std::invalid_argument);
    CHECK_THROWS_AS(apply_setting(cfg, "fusion", "ukf"), std::invalid_argument);

    const fs::path file = fs::temp_directory_path() / ("terrafuse_cfg_" + std::to_string(std::random_device{}()));
    std::ofstream(file) << "# test\nkernel_radius = 1.5  # meters\n\nlambda=2\n";
    const PipelineConfig loaded = load_config(file);
    fs::remove(file);
    CHECK(loaded.kernel_radius == 1.5);
    CHECK(loaded.lambda == 2.0);
    CHECK_THROWS_AS(load_config(file), std::runtime_error);

    std::string a = "TERRAFUSE_CELL_SIZE=0.1";
    std::string b = "TERRAFUSE_UNKNOWN_THING=3";
    std::string c = "PATH=/bin";
    char* env[] = {a.data(), b.data(), c.data(), nullptr};
    PipelineConfig from_env;
    apply_environment(from_env, env);
    CHECK(from_env.cell_size == 0.1);

    for (const auto& key : config_keys()) {
      PipelineConfig copy;
      apply_setting(copy, key, config_value(PipelineConfig{}, key));
      CHECK(config_value(copy, key) == config_value(PipelineConfig{}, key));
    }
    CHECK(to_text(PipelineConfig{}).find("cell_size = 0.2") != std::string::npos);
  }
}
