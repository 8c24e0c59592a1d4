#pragma once

// Liquidity caps: translate trailing traded-volume history and an investment
// sum into per-asset weight bounds. An asset's weight is capped by the share
// of its average daily volume the investor could plausibly trade:
//
//   capᵢ = min(1, volume_fraction · mean daily volumeᵢ / investment_sum).
//
// Assets flagged always-liquid keep cap 1 regardless of volume. If the caps
// sum below 1 the portfolio could not be fully invested, so they are rescaled
// proportionally to sum exactly 1 and the result is flagged as repaired.

#include <algorithm>
#include <string>
#include <vector>

#include "folio/common.hpp"
#include "folio/panel.hpp"
#include "folio/simplex.hpp"

namespace folio {

struct LiquiditySpec {
  double investment_sum = 1e7;    // USD
  double volume_fraction = 0.01;  // tradable share of average daily volume
  int lookback = 252;             // days of volume history used for the mean
};

inline void validate_liquidity_spec(const LiquiditySpec& spec) {
  if (!(spec.investment_sum > 0.0))
    throw ConfigError("libro.investment_sum_usd must be positive");
  if (!(spec.volume_fraction > 0.0) || spec.volume_fraction > 1.0)
    throw ConfigError("libro.volume_fraction must lie in (0, 1]");
  if (spec.lookback < 1) throw ConfigError("libro.lookback_days must be >= 1");
}

/// Computes weight caps from a volume window (rows = trailing days). The
/// window should already be restricted to the lookback; extra rows are used
/// as given. `always_liquid` marks assets exempt from capping.
inline BoundsSpec compute_caps(const MatrixXd& volume_window, const LiquiditySpec& spec,
                               const std::vector<bool>& always_liquid = {}) {
  validate_liquidity_spec(spec);
  const Eigen::Index rows = volume_window.rows();
  const Eigen::Index n = volume_window.cols();
  if (rows < 1 || n < 1) throw ValidationError("compute_caps: empty volume window");
  if (!always_liquid.empty() && static_cast<Eigen::Index>(always_liquid.size()) != n)
    throw ValidationError("compute_caps: always_liquid size mismatch");
  if (volume_window.maxCoeff() <= 0.0)
    throw ValidationError("compute_caps: all volumes are zero");

  BoundsSpec bounds;
  bounds.caps.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!always_liquid.empty() && always_liquid[static_cast<std::size_t>(j)]) {
      bounds.caps[j] = 1.0;
      continue;
    }
    const double mean_volume = volume_window.col(j).mean();
    const double cap = spec.volume_fraction * mean_volume / spec.investment_sum;
    // A zero-volume asset is untradable; a tiny positive floor keeps the
    // bound specification valid (caps must be > 0) while still excluding the
    // asset from any meaningful allocation.
    bounds.caps[j] = std::clamp(cap, 1e-12, 1.0);
  }

  const double total = bounds.caps.sum();
  if (total < 1.0) {
    // Full investment would be impossible; rescale so the caps just admit it.
    bounds.caps *= 1.0 / total;
    bounds.caps = bounds.caps.cwiseMin(1.0);
    bounds.repaired = true;
  }
  return bounds;
}

/// Convenience overload: slices the trailing `spec.lookback` rows of a volume
/// panel ending at row `end_row` (exclusive) and derives the liquidity flags
/// from the returns panel's asset metadata.
inline BoundsSpec compute_caps(const VolumePanel& volumes, Eigen::Index end_row,
                               const LiquiditySpec& spec,
                               const std::vector<AssetInfo>& assets) {
  if (end_row < 1 || end_row > volumes.values.rows())
    throw ValidationError("compute_caps: window end outside volume panel");
  const Eigen::Index take = std::min<Eigen::Index>(spec.lookback, end_row);
  std::vector<bool> always_liquid;
  always_liquid.reserve(assets.size());
  for (const auto& asset : assets) always_liquid.push_back(asset.always_liquid);
  return compute_caps(volumes.values.middleRows(end_row - take, take), spec, always_liquid);
}

}  // namespace folio
