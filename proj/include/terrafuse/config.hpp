#ifndef TERRAFUSE_CONFIG_HPP
#define TERRAFUSE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "terrafuse/bgk.hpp"
#include "terrafuse/fusion.hpp"
#include "terrafuse/traversability.hpp"

namespace terrafuse {

struct PipelineConfig {
  double map_size = 80.0;             // W, meters
  double cell_size = 0.2;             // omega, meters
  double height_threshold = 0.4;      // T_h, meters
  double variance_threshold = 0.1;    // T_Sigma
  double bilateral_variance = 0.1;    // Sigma_w
  double kernel_radius = 1.0;         // l, meters
  double max_similarity_deg = 10.0;   // T_alpha
  double min_concavity_deg = 80.0;    // T_theta
  double overhang_threshold = 2.3;    // T_o = vehicle height + 0.5
  double lidar_height = 1.8;
  double seed_tolerance = 0.4;
  double seed_search_radius = 6.0;

  FusionMode fusion = FusionMode::Ndt;
  bool bilateral = true;            // BF
  bool estimated_variance = true;   // EV
  double constant_variance = 0.01;  // used when EV is off
  std::uint32_t min_obs = 3;
  double kf_process_noise = 0.01;   // epsilon
  double kf_noise_per_meter = 0.01;
  double lambda = 5.0;
  double sentinel = -999.0;
  bool count_invalid = false;
  double gt_radius = 40.0;

  std::uint64_t seed = 1;
  int threads = 1;

  std::string input;    // manifest path
  std::string output;   // output directory
  std::string scene = "flat";
  int frames = 10;

  /// N = W / omega; throws if that is not an even integer.
  int side_cells() const;
  FusionConfig fusion_config() const;
  BgkConfig bgk_config() const;
  KinematicLimits limits() const;
};

/// Sets one key ("cell_size", "fusion", ...). Throws std::invalid_argument
/// for unknown keys or unparsable values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// key = value lines; '#' starts a comment. Throws std::runtime_error when
/// the file cannot be read.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Applies TERRAFUSE_<KEY> variables (upper-cased keys) found in `environ`.
void apply_environment(PipelineConfig& cfg, char** environ_block);

std::vector<std::string> config_keys();
std::string config_value(const PipelineConfig& cfg, const std::string& key);
std::string to_text(const PipelineConfig& cfg);

}  // namespace terrafuse

#endif  // TERRAFUSE_CONFIG_HPP
