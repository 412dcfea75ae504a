// terrafuse command-line front end: run, eval, ablate, synth, plan.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "terrafuse/config.hpp"
#include "terrafuse/io.hpp"
#include "terrafuse/log.hpp"
#include "terrafuse/pipeline.hpp"
#include "terrafuse/synth.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace terrafuse;

namespace {

struct CommonOptions {
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file, "key = value configuration file");
  for (const auto& key : config_keys()) {
    cmd->add_option("--" + key, opts.overrides[key], "override '" + key + "'");
  }
}

// Defaults, then the config file, then TERRAFUSE_* variables, then flags.
PipelineConfig resolve_config(const CLI::App* cmd, const CommonOptions& opts) {
  PipelineConfig cfg;
  if (!opts.config_file.empty()) cfg = load_config(opts.config_file);
  apply_environment(cfg, environ);
  for (const auto& [key, value] : opts.overrides) {
    if (cmd->count("--" + key) > 0) apply_setting(cfg, key, value);
  }
  cfg.side_cells();
  return cfg;
}

std::string frame_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d", id);
  return buf;
}

void write_frame_outputs(const fs::path& dir, const FrameResult& r, double sentinel) {
  const std::string stem = frame_stem(r.frame_id);
  const int n = r.terrain.side();
  io::write_grid_csv(dir / (stem + "_elevation.csv"), n, r.terrain.elevation, r.terrain.valid, sentinel);
  io::write_grid_csv(dir / (stem + "_variance.csv"), n, r.terrain.variance, r.terrain.valid, sentinel);
  std::vector<std::uint8_t> trav(r.costmap.label.size());
  std::vector<double> labels(r.costmap.label.size());
  for (std::size_t k = 0; k < trav.size(); ++k) {
    trav[k] = r.costmap.label[k] == TravLabel::Traversable;
    labels[k] = static_cast<double>(r.costmap.label[k]);
  }
  io::write_grid_csv(dir / (stem + "_cost.csv"), n, r.costmap.cost, trav, sentinel);
  io::write_grid_csv(dir / (stem + "_label.csv"), n, labels, {}, sentinel);
  io::write_pgm(dir / (stem + "_elevation.pgm"), n, r.terrain.elevation, r.terrain.valid);
  io::write_pgm(dir / (stem + "_cost.pgm"), n, r.costmap.cost, trav);
}

std::string timing_line(const FrameResult& r) {
  const auto& t = r.times;
  return "{\"frame\":" + std::to_string(r.frame_id) + ",\"rectify_ms\":" + io::format_double(t.rectify_ms) +
         ",\"integrate_ms\":" + io::format_double(t.integrate_ms) + ",\"bgk_ms\":" + io::format_double(t.bgk_ms) +
         ",\"traversability_ms\":" + io::format_double(t.traversability_ms) +
         ",\"total_ms\":" + io::format_double(t.total_ms) + "}";
}

LabelConfig label_dictionary(const std::string& name, const PipelineConfig& cfg) {
  LabelConfig lc;
  if (name == "kitti") {
    lc = semantic_kitti_labels();
  } else if (name == "rellis") {
    lc = rellis_labels();
  } else {
    throw std::invalid_argument("unknown label dictionary '" + name + "' (kitti or rellis)");
  }
  lc.overhang_threshold = cfg.overhang_threshold;
  return lc;
}

GridIndex parse_cell(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("cell must be 'row,col'");
  return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

int cmd_run(const PipelineConfig& cfg) {
  if (cfg.input.empty()) throw std::invalid_argument("run: --input manifest required");
  const fs::path out = cfg.output.empty() ? fs::path("out") : fs::path(cfg.output);
  fs::create_directories(out);
  const io::LoadedSequence seq = io::load_sequence(cfg.input);
  std::ofstream timing(out / "timing.jsonl");
  std::size_t count = 0;
  run_pipeline(cfg, seq.frames, [&](FrameResult&& r) {
    write_frame_outputs(out, r, cfg.sentinel);
    timing << timing_line(r) << '\n';
    ++count;
  });
  std::cerr << "processed " << count << " frames into " << out.string() << '\n';
  return 0;
}

int cmd_eval(const PipelineConfig& cfg, bool synthetic, const std::string& labels_name, double expect_f1,
             bool with_time) {
  std::vector<ScanFrame> frames;
  std::vector<LabeledScan> labeled;
  std::optional<SyntheticScene> scene;
  if (synthetic) {
    scene.emplace(builtin_scene(cfg.scene, cfg.frames, cfg.lidar_height));
    frames = simulate_sequence(*scene, cfg.seed);
  } else {
    if (cfg.input.empty()) throw std::invalid_argument("eval: --input manifest or --synthetic required");
    io::LoadedSequence seq = io::load_sequence(cfg.input);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      // Gravity-aligned offsets from each frame position, so pure
      // translations bring them into the center frame.
      ScanFrame up = rectify_scan(seq.frames[i], seq.frames[i].frame_pose, seq.frames[i].frame_pose);
      labeled.push_back(LabeledScan{std::move(up.points), seq.labels[i],
                                    Pose6::from_translation(seq.frames[i].frame_pose.translation())});
    }
    frames = std::move(seq.frames);
  }
  const LabelConfig lc = synthetic ? LabelConfig{} : label_dictionary(labels_name, cfg);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!cfg.output.empty()) {
    fs::create_directories(cfg.output);
    file.open(fs::path(cfg.output) / "metrics.jsonl");
    out = &file;
  }
  double f1_sum = 0.0;
  int f1_count = 0;
  std::size_t index = 0;
  run_pipeline(cfg, frames, [&](FrameResult&& r) {
    GroundTruthMap gt;
    if (synthetic) {
      gt = scene->ground_truth(r.terrain.anchor, r.pose.translation(), cfg.limits(), cfg.gt_radius);
    } else {
      while (index < labeled.size() && frames[index].frame_id != r.frame_id) ++index;
      const LabeledCloud cloud = assemble_map(labeled, index, cfg.gt_radius, true);
      gt = finalize_gt(label_traversability(cloud, r.terrain.anchor, lc, r.pose.translation().z()));
    }
    const MetricReport m = evaluate_frame(r, gt, cfg.count_invalid);
    if (m.traversability) {
      f1_sum += m.traversability->f1;
      ++f1_count;
    }
    *out << to_json_line(m, true, with_time) << '\n';
  });
  if (f1_count > 0) {
    const double mean_f1 = 100.0 * f1_sum / f1_count;
    std::cerr << "mean F1 " << io::format_double(mean_f1) << "% over " << f1_count << " frames\n";
    if (expect_f1 >= 0.0) {
      const bool ok = std::abs(mean_f1 - expect_f1) <= 3.0;
      std::cerr << (ok ? "PASS" : "FAIL") << ": expected " << io::format_double(expect_f1) << " +- 3\n";
      return ok ? 0 : 1;
    }
  }
  return 0;
}

int cmd_ablate(const PipelineConfig& cfg) {
  const SceneSpec spec = builtin_scene(cfg.scene, cfg.frames, cfg.lidar_height);
  const std::string csv = ablation_csv(run_ablation(cfg, spec));
  if (cfg.output.empty()) {
    std::cout << csv;
  } else {
    fs::create_directories(cfg.output);
    std::ofstream(fs::path(cfg.output) / "ablation.csv") << csv;
  }
  return 0;
}

int cmd_synth(const PipelineConfig& cfg) {
  const fs::path out = cfg.output.empty() ? fs::path("synth_" + cfg.scene) : fs::path(cfg.output);
  const SyntheticScene scene(builtin_scene(cfg.scene, cfg.frames, cfg.lidar_height));
  std::vector<ScanFrame> frames;
  std::vector<std::vector<std::uint32_t>> labels;
  const auto& traj = scene.spec().trajectory;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<std::uint32_t> lab;
    ScanFrame f = simulate_lidar(scene, traj[i], scene.spec().sensor, cfg.seed * 1000003ull + i, &lab);
    f.frame_pose = traj[i];
    frames.push_back(std::move(f));
    labels.push_back(std::move(lab));
  }
  io::write_sequence(out, frames, labels);
  std::cerr << "wrote " << frames.size() << " frames to " << out.string() << '\n';
  return 0;
}

int cmd_plan(const PipelineConfig& cfg, const std::string& elevation, const std::string& start_s,
             const std::string& goal_s) {
  const io::GridCsv grid = io::read_grid_csv(elevation);
  const MapAnchor anchor = MapAnchor::create(Vec2::Zero(), cfg.cell_size, grid.side);
  TerrainModel model = TerrainModel::empty(anchor);
  for (int r = 0; r < grid.side; ++r) {
    for (int c = 0; c < grid.side; ++c) {
      const double h = grid.values[model.linear(r, c)];
      if (h != cfg.sentinel) model.set(r, c, h, 0.0);
    }
  }
  const GridIndex start = parse_cell(start_s);
  const GridIndex goal = parse_cell(goal_s);
  if (!model.is_valid(start.row, start.col)) throw std::invalid_argument("plan: start cell has no elevation");
  model.lidar_z = model.height(start.row, start.col) + cfg.lidar_height;
  const CostMap cm = analyze_traversability(model, cfg.limits(), start, cfg.threads);
  const auto path = plan_path(cm, start, goal, cfg.lambda);
  if (!path) {
    std::cerr << "plan: goal unreachable\n";
    return 2;
  }
  const fs::path out = cfg.output.empty() ? fs::path("path.csv") : fs::path(cfg.output);
  io::write_path_csv(out, path->cells);
  std::cerr << "path of " << path->cells.size() << " cells, cost " << io::format_double(path->cost) << " -> "
            << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terrafuse: LiDAR terrain modelling and traversability analysis"};
  app.require_subcommand(1);

  CommonOptions run_opts, eval_opts, ablate_opts, synth_opts, plan_opts;
  auto* run = app.add_subcommand("run", "process a sequence manifest and write maps");
  add_config_flags(run, run_opts);

  auto* eval = app.add_subcommand("eval", "process a sequence and score it against ground truth");
  add_config_flags(eval, eval_opts);
  bool synthetic = false;
  std::string labels_name = "kitti";
  double expect_f1 = -1.0;
  bool with_time = false;
  eval->add_flag("--synthetic", synthetic, "simulate the configured scene instead of reading --input");
  eval->add_option("--labels", labels_name, "label dictionary: kitti or rellis");
  eval->add_option("--expect-f1", expect_f1, "reference F1 in percent; exit 1 unless within 3 points");
  eval->add_flag("--with-time", with_time, "include per-frame time in metrics lines");

  auto* ablate = app.add_subcommand("ablate", "fusion x BF x EV x cell size comparison on a synthetic scene");
  add_config_flags(ablate, ablate_opts);

  auto* synth = app.add_subcommand("synth", "write a simulated sequence (bin, label, poses, manifest)");
  add_config_flags(synth, synth_opts);

  auto* plan = app.add_subcommand("plan", "plan a path over an elevation CSV");
  add_config_flags(plan, plan_opts);
  std::string elevation, start, goal;
  plan->add_option("--elevation", elevation, "elevation CSV")->required();
  plan->add_option("--start", start, "start cell row,col")->required();
  plan->add_option("--goal", goal, "goal cell row,col")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(resolve_config(run, run_opts));
    if (eval->parsed()) return cmd_eval(resolve_config(eval, eval_opts), synthetic, labels_name, expect_f1, with_time);
    if (ablate->parsed()) return cmd_ablate(resolve_config(ablate, ablate_opts));
    if (synth->parsed()) return cmd_synth(resolve_config(synth, synth_opts));
    if (plan->parsed()) return cmd_plan(resolve_config(plan, plan_opts), elevation, start, goal);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
