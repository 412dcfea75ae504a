#ifndef TERRAFUSE_IO_HPP
#define TERRAFUSE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "terrafuse/geometry.hpp"
#include "terrafuse/preprocess.hpp"

namespace terrafuse::io {

// All readers throw std::runtime_error on unreadable or malformed input.

/// Little-endian float32 (x, y, z, intensity) records.
std::vector<Point3> read_kitti_bin(const std::filesystem::path& path);
void write_kitti_bin(const std::filesystem::path& path, std::span<const Point3> points);

/// CSV with header "x,y,z" or "x,y,z,t"; t becomes the sweep fraction.
ScanFrame read_csv_cloud(const std::filesystem::path& path);
void write_csv_cloud(const std::filesystem::path& path, const ScanFrame& scan);

/// Dispatches on extension: .bin or .csv.
ScanFrame read_cloud(const std::filesystem::path& path);

/// Little-endian uint32 per point; only the lower 16 bits are kept.
std::vector<std::uint32_t> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const std::uint32_t> labels);

/// One pose per line: 12 floats, row-major [R|t].
std::vector<Pose6> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, std::span<const Pose6> poses);

struct ManifestFrame {
  std::filesystem::path cloud;
  std::optional<std::filesystem::path> labels;
};

/// Text manifest: "poses <file>" and "frame <cloud> [labels]" lines; '#'
/// starts a comment. Relative paths resolve against the manifest directory.
struct SequenceManifest {
  std::optional<std::filesystem::path> poses;
  std::vector<ManifestFrame> frames;
};
SequenceManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const SequenceManifest& manifest);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// N rows of N comma-separated values; cells with valid == 0 are written as
/// `sentinel`.
void write_grid_csv(const std::filesystem::path& path, int side, std::span<const double> values,
                    std::span<const std::uint8_t> valid, double sentinel = -999.0);

struct GridCsv {
  int side = 0;
  std::vector<double> values;
};
GridCsv read_grid_csv(const std::filesystem::path& path);

/// 8-bit binary PGM scaled linearly from the valid range to [1, 255]; invalid
/// cells are 0. The comment line records the min and max.
void write_pgm(const std::filesystem::path& path, int side, std::span<const double> values,
               std::span<const std::uint8_t> valid);

void write_path_csv(const std::filesystem::path& path, std::span<const GridIndex> cells);

struct LoadedSequence {
  std::vector<ScanFrame> frames;
  /// Per frame; empty when the manifest lists no label file for it.
  std::vector<std::vector<std::uint32_t>> labels;
};

/// Loads every frame of a manifest and attaches the matching pose. Frames
/// that cannot be read, lack a pose or whose label count disagrees are
/// skipped with a warning. Throws only when the manifest or pose file itself
/// is unreadable.
LoadedSequence load_sequence(const std::filesystem::path& manifest_path);

/// Writes frame_NNNNNN.bin (+ .label), poses.txt and manifest.txt into `dir`.
void write_sequence(const std::filesystem::path& dir, std::span<const ScanFrame> frames,
                    std::span<const std::vector<std::uint32_t>> labels);

}  // namespace terrafuse::io

#endif  // TERRAFUSE_IO_HPP
