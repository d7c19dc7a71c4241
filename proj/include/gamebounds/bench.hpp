#pragma once

#include "gamebounds/identify.hpp"

namespace gamebounds {

struct BenchConfig {
  std::vector<int> bin_counts{1};
  std::int64_t draws = 10000;        // simulation draws per oracle evaluation
  double theta_grid_size = 1e5;      // #(Theta) for extrapolated grid search
  int reps = 1;
  std::uint64_t seed = 7;
};

struct BenchRow {
  int bins = 0;
  double abj_seconds = 0.0;     // closed-form projection, singleton family
  double sharp_seconds = 0.0;   // closed-form projection, full event family
  double ct_tau_seconds = 0.0;  // one simulated criterion evaluation, one bin
  double ct_seconds = 0.0;      // extrapolated tau * bins * #(Theta)
};

/// Replicate a one-bin game across `bins` identical covariate bins.
GameSpec replicate_bins(const GameSpec& base, int bins);

/// Wall-clock comparison of closed-form projection runs against the
/// extrapolated cost of a simulated-criterion grid search. The simulated
/// criterion prices one theta as: unique- and possible-equilibrium
/// frequencies for every outcome from `draws` equilibrium enumerations.
std::vector<BenchRow> bench_compare(const GameSpec& one_bin_spec,
                                    const Theta& th0, const BenchConfig& cfg);

}  // namespace gamebounds
