#include "gamebounds/bench.hpp"

#include <chrono>

#include "gamebounds/oracle.hpp"

namespace gamebounds {

GameSpec replicate_bins(const GameSpec& base, int bins) {
  if (bins < 1) throw std::invalid_argument("replicate_bins: bins must be >= 1");
  if (base.n_bins() != 1)
    throw std::invalid_argument("replicate_bins: base game must have one bin");
  GameSpec spec = base;
  spec.bin_labels.clear();
  for (int x = 0; x < bins; ++x) spec.bin_labels.push_back("x" + std::to_string(x));
  const int ny = base.n_outcomes();
  const int d = base.param_dim;
  spec.coeff.assign(static_cast<std::size_t>(base.n_players) * ny * bins * d, 0.0);
  spec.offset.assign(static_cast<std::size_t>(base.n_players) * ny * bins, 0.0);
  for (int i = 0; i < base.n_players; ++i)
    for (int y = 0; y < ny; ++y) {
      const std::size_t src_c = base.coeff_base(i, y, 0);
      const double b = base.offset[base.offset_index(i, y, 0)];
      for (int x = 0; x < bins; ++x) {
        const std::size_t dst =
            ((static_cast<std::size_t>(i) * ny + y) * bins + x);
        for (int k = 0; k < d; ++k) spec.coeff[dst * d + k] = base.coeff[src_c + k];
        spec.offset[dst] = b;
      }
    }
  spec.finalize();
  return spec;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

CCPTable model_ccp(const GameSpec& spec, const Theta& th) {
  // Exact uniform-selection CCP when equilibrium multiplicity is pairwise
  // only (entry-type games): phi(y) = L(y) - (1/2) sum_z R({y,z}).
  CCPTable t = CCPTable::uniform_like(spec);
  for (int x = 0; x < spec.n_bins(); ++x) {
    double total = 0.0;
    for (int y = 0; y < spec.n_outcomes(); ++y) {
      double phi = singleton_likelihood(spec, th, y, x);
      for (int z = 0; z < spec.n_outcomes(); ++z) {
        if (z == y) continue;
        phi -= 0.5 * intersection_probability(spec, th, OutcomeEvent::of({y, z}), x);
      }
      t.at(y, x) = phi;
      total += phi;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument(
          "bench_compare: base game has non-pairwise equilibrium multiplicity");
  }
  return t;
}

}  // namespace

std::vector<BenchRow> bench_compare(const GameSpec& one_bin_spec,
                                    const Theta& th0, const BenchConfig& cfg) {
  if (cfg.draws < 1000)
    throw std::invalid_argument("bench_compare: draws must be >= 1000");
  for (int k : cfg.bin_counts)
    if (k < 1) throw std::invalid_argument("bench_compare: bin counts positive");
  if (cfg.theta_grid_size < 1 || cfg.reps < 1)
    throw std::invalid_argument("bench_compare: positive grid size and reps");

  std::vector<double> p(one_bin_spec.param_dim, 0.0);
  p.back() = 1.0;

  std::vector<BenchRow> rows;
  for (int bins : cfg.bin_counts) {
    const GameSpec spec = replicate_bins(one_bin_spec, bins);
    const CCPTable ccp = model_ccp(spec, th0);
    IdentifyOptions opts;
    opts.starts = 2;
    opts.seed = cfg.seed;

    BenchRow row;
    row.bins = bins;

    for (int rep = 0; rep < cfg.reps; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      (void)project(spec, ccp, InequalityFamily::abj(spec), p, Sense::lower, opts);
      row.abj_seconds += seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      (void)project(spec, ccp,
                    InequalityFamily::sharpK(spec, spec.n_outcomes()), p,
                    Sense::lower, opts);
      row.sharp_seconds += seconds_since(t0);

      // one simulated criterion evaluation: H1 and H2 for every outcome of
      // one bin at one theta
      t0 = std::chrono::steady_clock::now();
      for (int y = 0; y < spec.n_outcomes(); ++y) {
        (void)mc_bounds(spec, th0, 0, OutcomeEvent::of({y}), cfg.draws,
                        McKind::H1, cfg.seed + y);
        (void)mc_bounds(spec, th0, 0, OutcomeEvent::of({y}), cfg.draws,
                        McKind::H2, cfg.seed + 101 + y);
      }
      row.ct_tau_seconds += seconds_since(t0);
    }
    row.abj_seconds /= cfg.reps;
    row.sharp_seconds /= cfg.reps;
    row.ct_tau_seconds /= cfg.reps;
    row.ct_seconds = row.ct_tau_seconds * bins * cfg.theta_grid_size;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gamebounds
