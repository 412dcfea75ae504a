#include "terrafuse/bgk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "terrafuse/parallel.hpp"

namespace terrafuse {

double sparse_kernel(double d, double l) {
  if (d >= l) return 0.0;
  const double ratio = d / l;
  const double phase = 2.0 * std::numbers::pi * ratio;
  const double k = (2.0 + std::cos(phase)) / 3.0 * (1.0 - ratio) + std::sin(phase) / (2.0 * std::numbers::pi);
  return std::clamp(k, 0.0, 1.0);
}

namespace {

std::optional<PosteriorGaussian> fuse(std::span<const BgkObservation> obs, const PriorGaussian& prior,
                                      const Vec2& target, double kernel_radius, bool weighted) {
  double num = prior.informative() ? prior.mean * prior.precision : 0.0;
  double den = prior.informative() ? prior.precision : 0.0;
  for (const auto& o : obs) {
    if (!(o.variance > 0.0)) throw std::invalid_argument("observation variance must be positive");
    const double k = sparse_kernel((o.position - target).norm(), kernel_radius);
    if (k <= 0.0) continue;
    const double p = k * (weighted ? o.weight : 1.0) / o.variance;
    num += p * o.mean;
    den += p;
  }
  if (!(den > 0.0)) return std::nullopt;
  return PosteriorGaussian{num / den, 1.0 / den};
}

}  // namespace

std::optional<PosteriorGaussian> bgk_posterior(std::span<const BgkObservation> obs,
                                               const PriorGaussian& prior, const Vec2& target,
                                               double kernel_radius) {
  return fuse(obs, prior, target, kernel_radius, false);
}

std::optional<PosteriorGaussian> bgk_weighted_posterior(std::span<const BgkObservation> obs,
                                                        const PriorGaussian& prior,
                                                        const Vec2& target, double kernel_radius) {
  return fuse(obs, prior, target, kernel_radius, true);
}

std::vector<double> bilateral_weights(std::span<const BgkObservation> obs,
                                      std::span<const double> first_pass, double bilateral_variance) {
  if (obs.size() != first_pass.size()) throw std::invalid_argument("first pass size mismatch");
  std::vector<double> w(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    w[i] = bilateral_weight(first_pass[i] - obs[i].mean, bilateral_variance);
  }
  return w;
}

PosteriorGaussian predictive_distribution(const PosteriorGaussian& post, double likelihood_variance) {
  return {post.mean, post.variance + likelihood_variance};
}

namespace {

struct KernelTap {
  int dr;
  int dc;
  double k;
};

std::vector<KernelTap> kernel_taps(double cell_size, double kernel_radius, int& reach) {
  reach = static_cast<int>(std::ceil(kernel_radius / cell_size));
  std::vector<KernelTap> taps;
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      const double d = cell_size * std::sqrt(static_cast<double>(dr * dr + dc * dc));
      const double k = sparse_kernel(d, kernel_radius);
      if (k > 0.0) taps.push_back({dr, dc, k});
    }
  }
  return taps;
}

// Padded row-major plane so window sums need no bounds checks.
struct PaddedPlane {
  int side = 0;
  int pad = 0;
  int stride = 0;
  std::vector<double> values;

  PaddedPlane(int side_cells, int padding)
      : side(side_cells), pad(padding), stride(side_cells + 2 * padding),
        values(static_cast<std::size_t>(stride) * stride, 0.0) {}
  double& at(int r, int c) { return values[static_cast<std::size_t>(r + pad) * stride + (c + pad)]; }
  const double* row_ptr(int r) const { return values.data() + static_cast<std::size_t>(r + pad) * stride + pad; }
};

}  // namespace

TerrainModel infer_dense_terrain(const MapSnapshot& snapshot, const BgkConfig& cfg) {
  TerrainModel model = TerrainModel::empty(snapshot.anchor);
  model.lidar_z = snapshot.lidar_z;
  const int n = snapshot.side();
  int reach = 0;
  const auto taps = kernel_taps(snapshot.anchor.cell_size, cfg.kernel_radius, reach);

  // Per-cell observation precision and precision-weighted mean.
  PaddedPlane precision(n, reach);
  PaddedPlane weighted_mean(n, reach);
  std::vector<double> own_precision(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t k = snapshot.linear(r, c);
      if (snapshot.cls[k] == CellClass::Obstacle) model.obstacle[k] = 1;
      if (snapshot.cls[k] != CellClass::PotentialTerrain || snapshot.count[k] == 0) continue;
      const double var = cfg.use_estimated_variance ? std::max(snapshot.variance[k], cfg.variance_floor)
                                                    : cfg.constant_variance;
      own_precision[k] = 1.0 / var;
      precision.at(r, c) = 1.0 / var;
      weighted_mean.at(r, c) = snapshot.mean[k] / var;
    }
  }

  const auto window_sum = [&](const PaddedPlane& num_plane, const PaddedPlane& den_plane, int r, int c,
                              double& num, double& den) {
    num = 0.0;
    den = 0.0;
    for (const auto& t : taps) {
      const std::size_t off = static_cast<std::size_t>(r + t.dr + reach) * num_plane.stride + (c + t.dc + reach);
      num += t.k * num_plane.values[off];
      den += t.k * den_plane.values[off];
    }
  };

  // Pass one: leave-self-in estimate at observed cells, then bilateral weights.
  if (cfg.use_bilateral) {
    std::vector<double> weights(static_cast<std::size_t>(n) * n, 1.0);
    parallel_chunks(n, cfg.threads, [&](int r0, int r1) {
      for (int r = r0; r < r1; ++r) {
        for (int c = 0; c < n; ++c) {
          const std::size_t k = snapshot.linear(r, c);
          if (own_precision[k] == 0.0) continue;
          double num = 0.0;
          double den = 0.0;
          window_sum(weighted_mean, precision, r, c, num, den);
          weights[k] = bilateral_weight(num / den - snapshot.mean[k], cfg.bilateral_variance);
        }
      }
    });
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double w = weights[snapshot.linear(r, c)];
        precision.at(r, c) *= w;
        weighted_mean.at(r, c) *= w;
      }
    }
  }

  // Pass two: every non-obstacle cell. Observed cells use their own fused
  // distribution as prior; unobserved cells have the uninformative prior.
  parallel_chunks(n, cfg.threads, [&](int r0, int r1) {
    for (int r = r0; r < r1; ++r) {
      for (int c = 0; c < n; ++c) {
        const std::size_t k = snapshot.linear(r, c);
        if (model.obstacle[k]) continue;
        double num = 0.0;
        double den = 0.0;
        window_sum(weighted_mean, precision, r, c, num, den);
        if (own_precision[k] > 0.0) {
          num += snapshot.mean[k] * own_precision[k];
          den += own_precision[k];
        }
        if (!(den > 0.0)) continue;
        model.set(r, c, num / den, 1.0 / den);
      }
    }
  });
  return model;
}

}  // namespace terrafuse
