#ifndef TERRAFUSE_BGK_HPP
#define TERRAFUSE_BGK_HPP

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "terrafuse/fusion.hpp"
#include "terrafuse/geometry.hpp"
#include "terrafuse/terrain.hpp"

namespace terrafuse {

struct BgkConfig {
  double kernel_radius = 1.0;       // l
  double bilateral_variance = 0.1;  // Sigma_w
  bool use_bilateral = true;
  /// When false every observation gets the same variance, constant_variance.
  bool use_estimated_variance = true;
  double constant_variance = 0.01;
  double variance_floor = 1e-4;
  int threads = 1;
};

struct BgkObservation {
  Vec2 position = Vec2::Zero();
  double mean = 0.0;
  double variance = 1.0;
  double weight = 1.0;
};

struct PosteriorGaussian {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conjugate prior on the target elevation. Zero precision encodes the
/// infinite-variance prior, whose terms then vanish exactly.
struct PriorGaussian {
  double mean = 0.0;
  double precision = 0.0;

  static PriorGaussian uninformative() { return {0.0, 0.0}; }
  static PriorGaussian from_variance(double mean, double variance) { return {mean, 1.0 / variance}; }
  bool informative() const { return precision > 0.0; }
};

/// Compactly supported kernel: 1 at d = 0, smoothly reaching 0 at d = l.
double sparse_kernel(double d, double l);

/// Kernel-weighted precision fusion ignoring bilateral weights.
/// nullopt when no observation lies within range and the prior is
/// uninformative. Throws std::invalid_argument on non-positive variances.
std::optional<PosteriorGaussian> bgk_posterior(std::span<const BgkObservation> obs,
                                               const PriorGaussian& prior, const Vec2& target,
                                               double kernel_radius);

/// Same as bgk_posterior with each precision term scaled by its weight.
std::optional<PosteriorGaussian> bgk_weighted_posterior(std::span<const BgkObservation> obs,
                                                        const PriorGaussian& prior,
                                                        const Vec2& target, double kernel_radius);

inline double bilateral_weight(double delta, double bilateral_variance) {
  return std::exp(-delta * delta / (2.0 * bilateral_variance));
}

/// w_i = exp(-(first_pass_i - mean_i)^2 / (2 Sigma_w)).
std::vector<double> bilateral_weights(std::span<const BgkObservation> obs,
                                      std::span<const double> first_pass, double bilateral_variance);

/// Posterior predictive of a new elevation with likelihood variance
/// `likelihood_variance`: same mean, variances add.
PosteriorGaussian predictive_distribution(const PosteriorGaussian& post, double likelihood_variance);

/// Two-pass inference over a map snapshot. Pass one estimates every potential
/// terrain cell and derives bilateral weights; pass two estimates every
/// non-obstacle cell. Cells without kernel support stay invalid.
TerrainModel infer_dense_terrain(const MapSnapshot& snapshot, const BgkConfig& cfg);

}  // namespace terrafuse

#endif  // TERRAFUSE_BGK_HPP
