#include "gamebounds/oracle.hpp"

#include <atomic>
#include <thread>

namespace gamebounds {

LatentDraw LatentDraw::binary(const GameSpec& spec, Rng& rng) {
  LatentDraw d;
  d.eps.resize(spec.n_players);
  for (int i = 0; i < spec.n_players; ++i)
    d.eps[i] = {0.0, rng.logistic()};
  return d;
}

LatentDraw LatentDraw::gumbel(const GameSpec& spec, Rng& rng) {
  LatentDraw d;
  d.eps.resize(spec.n_players);
  for (int i = 0; i < spec.n_players; ++i) {
    d.eps[i].resize(spec.n_actions(i));
    for (double& e : d.eps[i]) e = rng.gumbel();
  }
  return d;
}

int SelectionRule::select(const std::vector<int>& equilibria, Rng& rng) const {
  if (equilibria.empty())
    throw std::invalid_argument("SelectionRule: empty equilibrium set");
  if (equilibria.size() == 1) return equilibria[0];
  switch (kind) {
    case Kind::first_listed:
      return equilibria.front();
    case Kind::symmetric_uniform: {
      const auto idx =
          static_cast<std::size_t>(rng.uniform() * equilibria.size());
      return equilibria[std::min(idx, equilibria.size() - 1)];
    }
    case Kind::custom_weights: {
      double total = 0.0;
      for (int y : equilibria) {
        if (static_cast<std::size_t>(y) >= weights.size())
          throw std::invalid_argument("SelectionRule: weight table too short");
        total += weights[y];
      }
      if (total <= 0.0)
        throw std::invalid_argument(
            "SelectionRule: zero total weight on realized equilibrium set");
      double u = rng.uniform() * total;
      for (int y : equilibria) {
        u -= weights[y];
        if (u <= 0.0) return y;
      }
      return equilibria.back();
    }
  }
  throw std::logic_error("SelectionRule: unknown kind");
}

std::vector<int> enumerate_pure_nash(const GameSpec& spec, const Theta& th,
                                     int x, const LatentDraw& draw,
                                     double shift) {
  std::vector<int> eq;
  for (int y = 0; y < spec.n_outcomes(); ++y) {
    bool stable = true;
    for (int i = 0; i < spec.n_players && stable; ++i) {
      const int ai = spec.action_of(y, i);
      const double u = spec.payoff(th, i, y, x, shift) + draw.eps[i][ai];
      for (int a = 0; a < spec.n_actions(i); ++a) {
        if (a == ai) continue;
        const double ud =
            spec.payoff(th, i, spec.replace_action(y, i, a), x, shift) +
            draw.eps[i][a];
        if (ud > u) {
          stable = false;
          break;
        }
      }
    }
    if (stable) eq.push_back(y);
  }
  return eq;
}

namespace {

int draw_omega_index(const MixingGrid& grid, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    u -= grid.weights[k];
    if (u <= 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(grid.size() - 1);
}

template <class Fn>
void parallel_for(std::int64_t n, int n_threads, Fn&& body) {
  if (n_threads <= 1 || n < 2) {
    for (std::int64_t t = 0; t < n; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> cursor{0};
  const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * n_threads));
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t lo = cursor.fetch_add(chunk);
        if (lo >= n) return;
        const std::int64_t hi = std::min(n, lo + chunk);
        for (std::int64_t t = lo; t < hi; ++t) body(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

MarketDataset simulate_dataset(const GameSpec& spec, const Theta& th,
                               const SelectionRule& selection,
                               const std::vector<std::int64_t>& markets_per_bin,
                               const MixingGrid* grid, std::uint64_t seed,
                               int n_threads) {
  if (static_cast<int>(markets_per_bin.size()) != spec.n_bins())
    throw std::invalid_argument("simulate_dataset: design length != bin count");
  if (grid) grid->validate();
  const bool binary = spec.is_binary();

  std::int64_t n = 0;
  std::vector<int> bin_of_market;
  for (int x = 0; x < spec.n_bins(); ++x) {
    if (markets_per_bin[x] < 0)
      throw std::invalid_argument("simulate_dataset: negative market count");
    for (std::int64_t m = 0; m < markets_per_bin[x]; ++m) bin_of_market.push_back(x);
    n += markets_per_bin[x];
  }

  MarketDataset data;
  data.has_omega = (grid != nullptr);
  data.rows.resize(n);
  std::atomic<bool> degenerate{false};

  parallel_for(n, n_threads, [&](std::int64_t m) {
    if (degenerate.load(std::memory_order_relaxed)) return;
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(m));
    const int x = bin_of_market[m];
    double shift = 0.0;
    std::optional<double> omega;
    if (grid) {
      const int k = draw_omega_index(*grid, rng);
      omega = grid->nodes[k];
      shift = grid->scale * grid->nodes[k];
    }
    const LatentDraw draw =
        binary ? LatentDraw::binary(spec, rng) : LatentDraw::gumbel(spec, rng);
    const std::vector<int> eq = enumerate_pure_nash(spec, th, x, draw, shift);
    if (eq.empty()) {
      degenerate.store(true, std::memory_order_relaxed);
      return;
    }
    data.rows[m] = MarketRow{m, x, selection.select(eq, rng), omega};
  });

  if (degenerate.load())
    throw DegenerateModelError(
        "simulate_dataset: a latent draw admits no pure-strategy equilibrium");
  return data;
}

McEstimate mc_bounds(const GameSpec& spec, const Theta& th, int x,
                     const OutcomeEvent& a, std::int64_t draws, McKind kind,
                     std::uint64_t seed, const MixingGrid* grid, int n_threads) {
  if (draws < 1000)
    throw std::invalid_argument("mc_bounds: need at least 1000 draws");
  if (kind == McKind::H1 && a.size() != 1)
    throw std::invalid_argument("mc_bounds: H1 is defined for singleton events");
  if (grid) grid->validate();
  const bool binary = spec.is_binary();

  std::atomic<std::int64_t> hits{0};
  parallel_for(draws, n_threads, [&](std::int64_t t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    double shift = 0.0;
    if (grid) shift = grid->scale * grid->nodes[draw_omega_index(*grid, rng)];
    const LatentDraw draw =
        binary ? LatentDraw::binary(spec, rng) : LatentDraw::gumbel(spec, rng);
    const std::vector<int> eq = enumerate_pure_nash(spec, th, x, draw, shift);
    bool hit = false;
    switch (kind) {
      case McKind::L:
      case McKind::H2:
        for (int y : a.members)
          if (std::find(eq.begin(), eq.end(), y) != eq.end()) {
            hit = true;
            break;
          }
        break;
      case McKind::R_cap: {
        hit = true;
        for (int y : a.members)
          if (std::find(eq.begin(), eq.end(), y) == eq.end()) {
            hit = false;
            break;
          }
        break;
      }
      case McKind::H1:
        hit = (eq.size() == 1 && eq[0] == a.members[0]);
        break;
    }
    if (hit) hits.fetch_add(1, std::memory_order_relaxed);
  });

  McEstimate est;
  est.draws = draws;
  est.value = static_cast<double>(hits.load()) / static_cast<double>(draws);
  est.std_error = std::sqrt(std::max(est.value * (1.0 - est.value), 1e-12) /
                            static_cast<double>(draws));
  return est;
}

}  // namespace gamebounds
