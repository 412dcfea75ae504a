#include "terrafuse/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "terrafuse/log.hpp"

namespace terrafuse::io {
namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, const fs::path& path) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("bad number '" + std::string(s) + "' in " + path.string());
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> out;
  std::string_view all(text);
  std::size_t start = 0;
  while (start < all.size()) {
    auto pos = all.find('\n', start);
    if (pos == std::string_view::npos) pos = all.size();
    out.push_back(all.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path raw(p);
  return raw.is_absolute() ? raw : base / raw;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::vector<Point3> read_kitti_bin(const fs::path& path) {
  const std::string data = read_all(path);
  if (data.size() % (4 * sizeof(float)) != 0) {
    throw std::runtime_error(path.string() + ": size is not a multiple of 16 bytes");
  }
  const std::size_t count = data.size() / (4 * sizeof(float));
  std::vector<Point3> pts(count);
  for (std::size_t i = 0; i < count; ++i) {
    float rec[4];
    std::memcpy(rec, data.data() + i * sizeof(rec), sizeof(rec));
    pts[i] = Point3(rec[0], rec[1], rec[2]);
  }
  return pts;
}

void write_kitti_bin(const fs::path& path, std::span<const Point3> points) {
  auto out = open_out(path, true);
  for (const auto& p : points) {
    const float rec[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), 0.0f};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
}

ScanFrame read_csv_cloud(const fs::path& path) {
  const std::string text = read_all(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::runtime_error(path.string() + ": empty CSV");
  const auto header = split(trim(lines[0]), ',');
  const bool has_t = header.size() >= 4;
  if (header.size() < 3 || trim(header[0]) != "x" || trim(header[1]) != "y" || trim(header[2]) != "z" ||
      (has_t && trim(header[3]) != "t")) {
    throw std::runtime_error(path.string() + ": expected header x,y,z[,t]");
  }
  ScanFrame scan;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw std::runtime_error(path.string() + ": wrong field count on a row");
    scan.points.emplace_back(parse_double(f[0], path), parse_double(f[1], path), parse_double(f[2], path));
    if (has_t) scan.fractions.push_back(parse_double(f[3], path));
  }
  return scan;
}

void write_csv_cloud(const fs::path& path, const ScanFrame& scan) {
  auto out = open_out(path);
  const bool has_t = scan.has_fractions();
  out << (has_t ? "x,y,z,t\n" : "x,y,z\n");
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z());
    if (has_t) out << ',' << format_double(scan.fractions[i]);
    out << '\n';
  }
}

ScanFrame read_cloud(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".bin") {
    ScanFrame s;
    s.points = read_kitti_bin(path);
    return s;
  }
  if (ext == ".csv") return read_csv_cloud(path);
  throw std::runtime_error(path.string() + ": unknown point cloud extension");
}

std::vector<std::uint32_t> read_labels(const fs::path& path) {
  const std::string data = read_all(path);
  if (data.size() % sizeof(std::uint32_t) != 0) {
    throw std::runtime_error(path.string() + ": size is not a multiple of 4 bytes");
  }
  std::vector<std::uint32_t> labels(data.size() / sizeof(std::uint32_t));
  std::memcpy(labels.data(), data.data(), data.size());
  for (auto& l : labels) l &= 0xFFFFu;
  return labels;
}

void write_labels(const fs::path& path, std::span<const std::uint32_t> labels) {
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * sizeof(std::uint32_t)));
}

std::vector<Pose6> read_poses(const fs::path& path) {
  const std::string text = read_all(path);
  std::vector<Pose6> poses;
  for (auto line : lines_of(text)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto b = line.find_first_not_of(" \t", pos);
      if (b == std::string_view::npos) break;
      auto e = line.find_first_of(" \t", b);
      if (e == std::string_view::npos) e = line.size();
      v.push_back(parse_double(line.substr(b, e - b), path));
      pos = e;
    }
    if (v.size() != 12) throw std::runtime_error(path.string() + ": pose line needs 12 values");
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    poses.emplace_back(Vec3(v[3], v[7], v[11]), r, static_cast<double>(poses.size()));
  }
  return poses;
}

void write_poses(const fs::path& path, std::span<const Pose6> poses) {
  auto out = open_out(path);
  for (const auto& p : poses) {
    const auto m = p.matrix3x4();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (r + c > 0) out << ' ';
        out << format_double(m(r, c));
      }
    }
    out << '\n';
  }
}

SequenceManifest read_manifest(const fs::path& path) {
  const std::string text = read_all(path);
  const fs::path base = path.parent_path();
  SequenceManifest m;
  for (auto line : lines_of(text)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::istringstream ss{std::string(trim(line))};
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "poses") {
      std::string p;
      if (!(ss >> p)) throw std::runtime_error(path.string() + ": 'poses' needs a file");
      m.poses = resolve(base, p);
    } else if (key == "frame") {
      std::string cloud;
      std::string labels;
      if (!(ss >> cloud)) throw std::runtime_error(path.string() + ": 'frame' needs a cloud file");
      ManifestFrame f{resolve(base, cloud), std::nullopt};
      if (ss >> labels) f.labels = resolve(base, labels);
      m.frames.push_back(std::move(f));
    } else {
      throw std::runtime_error(path.string() + ": unknown manifest key '" + key + "'");
    }
  }
  return m;
}

void write_manifest(const fs::path& path, const SequenceManifest& manifest) {
  auto out = open_out(path);
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return fs::relative(p, base.empty() ? "." : base).generic_string(); };
  if (manifest.poses) out << "poses " << rel(*manifest.poses) << '\n';
  for (const auto& f : manifest.frames) {
    out << "frame " << rel(f.cloud);
    if (f.labels) out << ' ' << rel(*f.labels);
    out << '\n';
  }
}

void write_grid_csv(const fs::path& path, int side, std::span<const double> values,
                    std::span<const std::uint8_t> valid, double sentinel) {
  const std::size_t total = static_cast<std::size_t>(side) * side;
  if (values.size() != total || (!valid.empty() && valid.size() != total)) {
    throw std::invalid_argument("write_grid_csv: size mismatch");
  }
  auto out = open_out(path);
  std::string row;
  for (int r = 0; r < side; ++r) {
    row.clear();
    for (int c = 0; c < side; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * side + c;
      if (c) row += ',';
      row += format_double((valid.empty() || valid[k]) ? values[k] : sentinel);
    }
    row += '\n';
    out << row;
  }
}

GridCsv read_grid_csv(const fs::path& path) {
  const std::string text = read_all(path);
  GridCsv g;
  for (auto line : lines_of(text)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (g.side == 0) g.side = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != g.side) throw std::runtime_error(path.string() + ": ragged grid");
    for (auto f : fields) g.values.push_back(parse_double(f, path));
  }
  if (g.values.size() != static_cast<std::size_t>(g.side) * g.side) {
    throw std::runtime_error(path.string() + ": grid is not square");
  }
  return g;
}

void write_pgm(const fs::path& path, int side, std::span<const double> values, std::span<const std::uint8_t> valid) {
  const std::size_t total = static_cast<std::size_t>(side) * side;
  if (values.size() != total || valid.size() != total) throw std::invalid_argument("write_pgm: size mismatch");
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < total; ++k) {
    if (!valid[k]) continue;
    lo = any ? std::min(lo, values[k]) : values[k];
    hi = any ? std::max(hi, values[k]) : values[k];
    any = true;
  }
  std::vector<unsigned char> pixels(total, 0);
  const double span = hi - lo;
  for (std::size_t k = 0; k < total; ++k) {
    if (!valid[k]) continue;
    const double t = span > 0.0 ? (values[k] - lo) / span : 0.5;
    pixels[k] = static_cast<unsigned char>(1 + std::lround(t * 254.0));
  }
  auto out = open_out(path, true);
  out << "P5\n# min=" << format_double(lo) << " max=" << format_double(hi) << "\n"
      << side << ' ' << side << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_path_csv(const fs::path& path, std::span<const GridIndex> cells) {
  auto out = open_out(path);
  out << "row,col\n";
  for (const auto& g : cells) out << g.row << ',' << g.col << '\n';
}

LoadedSequence load_sequence(const fs::path& manifest_path) {
  const SequenceManifest manifest = read_manifest(manifest_path);
  std::vector<Pose6> poses;
  if (manifest.poses) poses = read_poses(*manifest.poses);
  LoadedSequence seq;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const ManifestFrame& mf = manifest.frames[i];
    if (i >= poses.size()) {
      warn("load_sequence: frame " + std::to_string(i) + " has no pose, skipped");
      continue;
    }
    try {
      ScanFrame scan = read_cloud(mf.cloud);
      std::vector<std::uint32_t> labels;
      if (mf.labels) {
        labels = read_labels(*mf.labels);
        if (labels.size() != scan.points.size()) {
          warn("load_sequence: frame " + std::to_string(i) + " label count mismatch, skipped");
          continue;
        }
      }
      scan.frame_id = static_cast<int>(i);
      scan.frame_pose = poses[i];
      seq.frames.push_back(std::move(scan));
      seq.labels.push_back(std::move(labels));
    } catch (const std::exception& e) {
      warn("load_sequence: frame " + std::to_string(i) + " skipped: " + e.what());
    }
  }
  return seq;
}

void write_sequence(const fs::path& dir, std::span<const ScanFrame> frames,
                    std::span<const std::vector<std::uint32_t>> labels) {
  fs::create_directories(dir);
  SequenceManifest manifest;
  manifest.poses = dir / "poses.txt";
  std::vector<Pose6> poses;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%06zu", i);
    const fs::path cloud = dir / (std::string(stem) + ".bin");
    write_kitti_bin(cloud, frames[i].points);
    ManifestFrame mf{cloud, std::nullopt};
    if (i < labels.size() && !labels[i].empty()) {
      const fs::path lp = dir / (std::string(stem) + ".label");
      write_labels(lp, labels[i]);
      mf.labels = lp;
    }
    manifest.frames.push_back(std::move(mf));
    poses.push_back(frames[i].frame_pose);
  }
  write_poses(*manifest.poses, poses);
  write_manifest(dir / "manifest.txt", manifest);
}

}  // namespace terrafuse::io
