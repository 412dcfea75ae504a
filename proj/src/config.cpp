#include "terrafuse/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "terrafuse/io.hpp"

namespace terrafuse {
namespace {

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

struct Field {
  const char* name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define TF_DOUBLE(member)                                                                     \
  Field {                                                                                      \
    #member, [](PipelineConfig& c, const std::string& v) { c.member = to_double(#member, v); }, \
        [](const PipelineConfig& c) { return io::format_double(c.member); }                    \
  }
#define TF_BOOL(member)                                                                     \
  Field {                                                                                    \
    #member, [](PipelineConfig& c, const std::string& v) { c.member = to_bool(#member, v); }, \
        [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); }     \
  }
#define TF_INT(member)                                                                                      \
  Field {                                                                                                    \
    #member,                                                                                                 \
        [](PipelineConfig& c, const std::string& v) { c.member = to_int<decltype(c.member)>(#member, v); }, \
        [](const PipelineConfig& c) { return std::to_string(c.member); }                                     \
  }
#define TF_STRING(member)                                                     \
  Field {                                                                      \
    #member, [](PipelineConfig& c, const std::string& v) { c.member = v; },   \
        [](const PipelineConfig& c) { return c.member; }                       \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TF_DOUBLE(map_size),
      TF_DOUBLE(cell_size),
      TF_DOUBLE(height_threshold),
      TF_DOUBLE(variance_threshold),
      TF_DOUBLE(bilateral_variance),
      TF_DOUBLE(kernel_radius),
      TF_DOUBLE(max_similarity_deg),
      TF_DOUBLE(min_concavity_deg),
      TF_DOUBLE(overhang_threshold),
      TF_DOUBLE(lidar_height),
      TF_DOUBLE(seed_tolerance),
      TF_DOUBLE(seed_search_radius),
      Field{"fusion",
            [](PipelineConfig& c, const std::string& v) {
              if (v == "ndt") {
                c.fusion = FusionMode::Ndt;
              } else if (v == "kf") {
                c.fusion = FusionMode::Kalman;
              } else {
                throw std::invalid_argument("config: 'fusion' expects ndt or kf, got '" + v + "'");
              }
            },
            [](const PipelineConfig& c) { return std::string(c.fusion == FusionMode::Ndt ? "ndt" : "kf"); }},
      TF_BOOL(bilateral),
      TF_BOOL(estimated_variance),
      TF_DOUBLE(constant_variance),
      TF_INT(min_obs),
      TF_DOUBLE(kf_process_noise),
      TF_DOUBLE(kf_noise_per_meter),
      TF_DOUBLE(lambda),
      TF_DOUBLE(sentinel),
      TF_BOOL(count_invalid),
      TF_DOUBLE(gt_radius),
      TF_INT(seed),
      TF_INT(threads),
      TF_STRING(input),
      TF_STRING(output),
      TF_STRING(scene),
      TF_INT(frames),
  };
  return table;
}

#undef TF_DOUBLE
#undef TF_BOOL
#undef TF_INT
#undef TF_STRING

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.name) return f;
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

int PipelineConfig::side_cells() const {
  if (!(cell_size > 0.0) || !(map_size > 0.0)) throw std::invalid_argument("config: sizes must be positive");
  const double ratio = map_size / cell_size;
  const long long n = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-6 || n % 2 != 0 || n <= 0) {
    throw std::invalid_argument("config: map_size / cell_size must be an even integer");
  }
  return static_cast<int>(n);
}

FusionConfig PipelineConfig::fusion_config() const {
  FusionConfig f;
  f.mode = fusion;
  f.height_threshold = height_threshold;
  f.overhang_threshold = overhang_threshold;
  f.variance_threshold = variance_threshold;
  f.min_obs = min_obs;
  f.kf.epsilon = kf_process_noise;
  f.kf.xi_per_meter = kf_noise_per_meter;
  return f;
}

BgkConfig PipelineConfig::bgk_config() const {
  BgkConfig b;
  b.kernel_radius = kernel_radius;
  b.bilateral_variance = bilateral_variance;
  b.use_bilateral = bilateral;
  b.use_estimated_variance = estimated_variance;
  b.constant_variance = constant_variance;
  b.threads = threads;
  return b;
}

KinematicLimits PipelineConfig::limits() const {
  KinematicLimits k;
  k.max_similarity_deg = max_similarity_deg;
  k.min_concavity_deg = min_concavity_deg;
  k.lidar_height = lidar_height;
  k.seed_tolerance = seed_tolerance;
  k.seed_search_radius = seed_search_radius;
  return k;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, trimmed(value));
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(base, trimmed(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

void apply_environment(PipelineConfig& cfg, char** environ_block) {
  if (!environ_block) return;
  constexpr std::string_view prefix = "TERRAFUSE_";
  for (char** e = environ_block; *e; ++e) {
    const std::string_view entry(*e);
    if (!entry.starts_with(prefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key(entry.substr(prefix.size(), eq - prefix.size()));
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    const bool known = std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return key == f.name; });
    if (!known) continue;
    apply_setting(cfg, key, std::string(entry.substr(eq + 1)));
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.name);
  return keys;
}

std::string config_value(const PipelineConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

std::string to_text(const PipelineConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.name << " = " << f.get(cfg) << '\n';
  return out.str();
}

}  // namespace terrafuse
