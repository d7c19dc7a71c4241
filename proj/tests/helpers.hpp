#pragma once

#include "gamebounds/identify.hpp"
#include "gamebounds/oracle.hpp"

namespace gbtest {

using namespace gamebounds;

/// Two-player entry game with theta = (beta1, beta2, delta1, delta2):
/// v_i(enter) = beta_i + delta_i * 1{opponent enters}, outside option 0.
/// delta coordinates boxed to [-6, 0], betas to [-6, 6].
inline GameSpec entry2() {
  GameSpec spec;
  spec.n_players = 2;
  spec.action_labels = {{"out", "in"}, {"out", "in"}};
  spec.bin_labels = {"base"};
  spec.param_dim = 4;
  spec.param_lower = {-6.0, -6.0, -6.0, -6.0};
  spec.param_upper = {6.0, 6.0, 0.0, 0.0};
  const int ny = 4;
  spec.coeff.assign(2 * ny * 1 * 4, 0.0);
  spec.offset.assign(2 * ny * 1, 0.0);
  auto set = [&](int i, int y1, int y2, std::initializer_list<double> c) {
    const int y = y1 + 2 * y2;
    std::size_t base = ((static_cast<std::size_t>(i) * ny + y) * 1) * 4;
    int k = 0;
    for (double v : c) spec.coeff[base + k++] = v;
  };
  set(0, 1, 0, {1, 0, 0, 0});
  set(0, 1, 1, {1, 0, 1, 0});
  set(1, 0, 1, {0, 1, 0, 0});
  set(1, 1, 1, {0, 1, 0, 1});
  spec.finalize();
  return spec;
}

inline int oid(int y1, int y2) { return y1 + 2 * y2; }

/// Exact uniform-selection CCP for games whose equilibrium multiplicity is
/// pairwise only (true for entry-type sign patterns).
inline CCPTable exact_ccp(const GameSpec& spec, const Theta& th) {
  CCPTable t = CCPTable::uniform_like(spec);
  for (int x = 0; x < spec.n_bins(); ++x) {
    for (int y = 0; y < spec.n_outcomes(); ++y) {
      double phi = singleton_likelihood(spec, th, y, x);
      for (int z = 0; z < spec.n_outcomes(); ++z)
        if (z != y)
          phi -= 0.5 * intersection_probability(spec, th, OutcomeEvent::of({y, z}), x);
      t.at(y, x) = phi;
    }
  }
  return t;
}

inline Theta theta0() { return Theta{{0.0, 0.0, -0.5, -0.5}}; }

/// Random binary game: 2 or 3 players, one bin, dense random coefficient
/// tensor on d parameters, outside options normalized to zero payoff.
inline GameSpec random_binary_spec(Rng& rng, int players, int d) {
  GameSpec spec;
  spec.n_players = players;
  for (int i = 0; i < players; ++i)
    spec.action_labels.push_back({"out", "in"});
  spec.bin_labels = {"b0"};
  spec.param_dim = d;
  spec.param_lower.assign(d, -3.0);
  spec.param_upper.assign(d, 3.0);
  const int ny = 1 << players;
  spec.coeff.assign(static_cast<std::size_t>(players) * ny * d, 0.0);
  spec.offset.assign(static_cast<std::size_t>(players) * ny, 0.0);
  for (int i = 0; i < players; ++i)
    for (int y = 0; y < ny; ++y) {
      if (((y >> i) & 1) == 0) continue;  // outside option stays at zero
      for (int k = 0; k < d; ++k)
        spec.coeff[(static_cast<std::size_t>(i) * ny + y) * d + k] =
            2.0 * rng.uniform() - 1.0;
      spec.offset[static_cast<std::size_t>(i) * ny + y] = rng.uniform() - 0.5;
    }
  spec.finalize();
  return spec;
}

inline Theta random_theta(const GameSpec& spec, Rng& rng, double span = 1.5) {
  Theta th;
  for (int k = 0; k < spec.param_dim; ++k) {
    double lo = std::max(spec.param_lower[k], -span);
    double hi = std::min(spec.param_upper[k], span);
    th.values.push_back(lo + rng.uniform() * (hi - lo));
  }
  return th;
}

/// Central finite-difference gradient of f at x.
template <class F>
std::vector<double> fd_gradient(F&& f, std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace gbtest
