#pragma once

#include "gamebounds/identify.hpp"
#include "gamebounds/oracle.hpp"

namespace gamebounds {

/// Simultaneous confidence band on the CCPs: per (y, x) the interval
/// [lo, hi] holds all cells jointly with asymptotic probability >= 1 - alpha.
struct ConfidenceBand {
  std::vector<double> lo, hi;  // [x * n_outcomes + y]
  int n_outcomes = 0;
  double alpha = 0.0;
  double beta = 0.0;  // per-bin level after the across-bin correction
  bool beta_warning = false;
  std::vector<std::int64_t> bin_counts;
  std::vector<int> dropped_bins;

  int n_bins() const { return static_cast<int>(bin_counts.size()); }
  double lower(int y, int x) const {
    return lo[static_cast<std::size_t>(x) * n_outcomes + y];
  }
  double upper(int y, int x) const {
    return hi[static_cast<std::size_t>(x) * n_outcomes + y];
  }
  bool degenerate(double tol = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i] - lo[i] > tol) return false;
    return true;
  }
  /// Point estimate (band midpoint clipped back into the simplex source).
  CCPTable center() const;
  static ConfidenceBand exact(const CCPTable& ccp);
};

/// Frequency estimator phi(y|x) = count(y,x) / n^x. Bins that never occur
/// are listed in dropped_bins and their rows left at zero.
CCPTable frequency_ccp(const MarketDataset& data, int n_outcomes, int n_bins);

/// Simultaneous band with half-width z(beta/4) / (2 sqrt(n^x)) per bin,
/// beta = 1 - (1-alpha)^(1/|X|) correcting across bins. Flags a warning
/// when beta > 0.05 (the half-width formula is only a good bound below
/// that level).
ConfidenceBand fs_band(const CCPTable& ccp, double alpha);

/// True iff some CCP table inside the band (with latent per-node CCPs when
/// mixing is active) satisfies every family inequality at theta. Solved per
/// bin as a linear program in the level-form residuals.
bool confidence_membership(const GameSpec& spec, const Theta& th,
                           const ConfidenceBand& band,
                           const InequalityFamily& family,
                           const IdentifyOptions& opts = {});

/// min / max of p . theta over the confidence set: joint program over
/// (theta, phi [, q]) with band and simplex constraints; the endpoint theta
/// is always certified by confidence_membership. A degenerate band reduces
/// to project().
ProjectionResult confidence_project(const GameSpec& spec,
                                    const ConfidenceBand& band,
                                    const InequalityFamily& family,
                                    const std::vector<double>& p, Sense sense,
                                    const IdentifyOptions& opts = {});

}  // namespace gamebounds
