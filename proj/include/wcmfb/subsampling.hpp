#ifndef WCMFB_SUBSAMPLING_HPP_
#define WCMFB_SUBSAMPLING_HPP_

// Per-channel subsampling ratios for a warped bank.
//
// Channel k must not alias onto the span of its own passband and those of its
// two neighbours. That span is taken on the uniform axis, mapped to real
// frequency, and fed to the bandpass-sampling rule
//
//     floor(n / 2fU) >= S >= ceil((n-1) / 2fL),   1 <= n <= floor(fU / (fU - fL)).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcmfb/warpmap.hpp"

namespace wcmfb {

struct ChannelBand {
  double f_lower = 0.0;  // cycles/sample
  double f_upper = 0.0;
  int n_k = 1;
  int s_k = 1;
};

struct EdgeSets {
  std::vector<double> uniform_edges;  // radians
  std::vector<double> warped_edges;   // radians
};

struct RatioChoice {
  int s_k = 1;
  int n_k = 1;
  friend bool operator==(const RatioChoice&, const RatioChoice&) = default;
};

inline std::vector<double> uniform_edges(int channels_m) {
  if (channels_m < 1) throw std::invalid_argument("channel count must be >= 1");
  std::vector<double> edges(channels_m + 1);
  for (int k = 0; k <= channels_m; ++k) edges[k] = kPi * k / channels_m;
  edges[channels_m] = kPi;
  return edges;
}

inline EdgeSets edge_sets(int channels_m, WarpCoefficient alpha) {
  EdgeSets sets{uniform_edges(channels_m), {}};
  sets.warped_edges.reserve(sets.uniform_edges.size());
  for (double f : sets.uniform_edges) sets.warped_edges.push_back(warp_inverse(f, alpha));
  return sets;
}

/// [f_lower, f_upper] in cycles/sample covering channels k-1, k and k+1.
inline ChannelBand warped_band(int k, int channels_m, WarpCoefficient alpha) {
  if (k < 0 || k >= channels_m) {
    throw std::out_of_range("channel index " + std::to_string(k) + " outside [0, " +
                            std::to_string(channels_m) + ")");
  }
  const auto edges = uniform_edges(channels_m);
  const double two_pi = 2.0 * kPi;
  ChannelBand band;
  band.f_lower = (k == 0) ? 0.0 : warp_inverse(edges[k - 1], alpha) / two_pi;
  band.f_upper = (k >= channels_m - 2) ? 0.5 : warp_inverse(edges[k + 2], alpha) / two_pi;
  return band;
}

/// Largest feasible S over all bandpass indices n; ties go to the smaller n.
/// n >= 2 is infeasible when f_lower == 0. Falls back to S = 1, n = 1.
inline RatioChoice select_ratio(double f_lower, double f_upper) {
  if (!(f_lower >= 0.0 && f_upper <= 0.5 && f_upper > f_lower)) {
    throw std::invalid_argument("degenerate band [" + std::to_string(f_lower) + ", " +
                                std::to_string(f_upper) + "]");
  }
  RatioChoice best;
  const int n_max = static_cast<int>(std::floor(f_upper / (f_upper - f_lower)));
  for (int n = 1; n <= n_max; ++n) {
    const int upper = static_cast<int>(std::floor(n / (2.0 * f_upper)));
    int lower = 0;
    if (n > 1) {
      if (f_lower == 0.0) continue;
      lower = static_cast<int>(std::ceil((n - 1) / (2.0 * f_lower)));
    }
    if (upper >= lower && upper > best.s_k) best = {upper, n};
  }
  return best;
}

inline ChannelBand select_band(int k, int channels_m, WarpCoefficient alpha) {
  ChannelBand band = warped_band(k, channels_m, alpha);
  const RatioChoice choice = select_ratio(band.f_lower, band.f_upper);
  band.s_k = choice.s_k;
  band.n_k = choice.n_k;
  return band;
}

inline std::vector<ChannelBand> select_bands(int channels_m, WarpCoefficient alpha) {
  std::vector<ChannelBand> bands;
  bands.reserve(channels_m);
  for (int k = 0; k < channels_m; ++k) bands.push_back(select_band(k, channels_m, alpha));
  return bands;
}

inline std::vector<int> select_all(int channels_m, WarpCoefficient alpha) {
  std::vector<int> ratios;
  for (const auto& band : select_bands(channels_m, alpha)) ratios.push_back(band.s_k);
  return ratios;
}

}  // namespace wcmfb

#endif  // WCMFB_SUBSAMPLING_HPP_
