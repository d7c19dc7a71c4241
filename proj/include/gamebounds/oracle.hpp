#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gamebounds/game.hpp"

namespace gamebounds {

/// splitmix64 stream; cheap, seedable, and good enough for Monte Carlo.
/// Per-market substreams are derived from (seed, index) so datasets are
/// identical regardless of how the market loop is partitioned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    mix.next();
    return mix;
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double logistic() { return logistic_quantile(uniform()); }

  /// Standard Gumbel (type-1 extreme value).
  double gumbel() { return -std::log(-std::log(uniform())); }

 private:
  std::uint64_t state_;
};

/// Per-player, per-action additive shocks.
struct LatentDraw {
  std::vector<std::vector<double>> eps;  // eps[i][a]
  std::uint64_t seed = 0;

  /// Binary games: eps[i] = {0, xi_i} with xi_i standard logistic.
  static LatentDraw binary(const GameSpec& spec, Rng& rng);
  /// General games: independent Gumbel shock per (player, action).
  static LatentDraw gumbel(const GameSpec& spec, Rng& rng);
};

struct SelectionRule {
  enum class Kind { symmetric_uniform, first_listed, custom_weights };
  Kind kind = Kind::symmetric_uniform;
  std::vector<double> weights;  // over outcome ids, custom_weights only

  static SelectionRule uniform() { return {}; }
  static SelectionRule first_listed() { return {Kind::first_listed, {}}; }
  static SelectionRule custom(std::vector<double> w) {
    return {Kind::custom_weights, std::move(w)};
  }

  /// Pick one outcome from a non-empty realized equilibrium set.
  int select(const std::vector<int>& equilibria, Rng& rng) const;
};

struct MarketRow {
  std::int64_t market_id;
  int x_bin;
  int outcome;
  std::optional<double> omega;
};

struct MarketDataset {
  std::vector<MarketRow> rows;
  bool has_omega = false;
};

/// Thrown when a latent draw admits no pure-strategy equilibrium.
struct DegenerateModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All outcomes y where no player has a profitable unilateral deviation
/// under utilities v_i(y,x;theta) + shift (non-baseline) + eps[i][y_i].
/// Ties count as equilibria (weak inequality). May be empty.
std::vector<int> enumerate_pure_nash(const GameSpec& spec, const Theta& th,
                                     int x, const LatentDraw& draw,
                                     double shift = 0.0);

/// i.i.d. markets: draw omega (if a grid is given) and shocks, enumerate
/// equilibria, select one. markets_per_bin[x] markets are generated for
/// bin x. A draw with an empty equilibrium set aborts.
MarketDataset simulate_dataset(const GameSpec& spec, const Theta& th,
                               const SelectionRule& selection,
                               const std::vector<std::int64_t>& markets_per_bin,
                               const MixingGrid* grid, std::uint64_t seed,
                               int n_threads = 1);

enum class McKind { L, R_cap, H1, H2 };

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t draws = 0;
};

/// Monte Carlo frequencies against enumerated equilibrium sets:
///   L, H2   : some member of A is an equilibrium
///   R_cap   : every member of A is an equilibrium
///   H1      : the equilibrium set is exactly {y} (singleton A only)
McEstimate mc_bounds(const GameSpec& spec, const Theta& th, int x,
                     const OutcomeEvent& a, std::int64_t draws, McKind kind,
                     std::uint64_t seed, const MixingGrid* grid = nullptr,
                     int n_threads = 1);

}  // namespace gamebounds
