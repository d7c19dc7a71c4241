#pragma once

#include <optional>
#include <vector>

#include "gamebounds/game.hpp"

namespace gamebounds {

// Closed-form bound functions on outcome events. All take an optional
// additive shift applied to every non-baseline action payoff; the shift is
// constant in theta, so it never contributes to gradients. Passing a
// non-null grad span (length param_dim) fills the theta-gradient of the
// *returned* quantity (level form unless the name says log).

double payoff_index(const GameSpec& spec, const Theta& th, int i, int y, int x);

/// log of the product-of-logit choice probability for outcome y
/// (each player's action against the fixed opponent profile).
double log_singleton_likelihood(const GameSpec& spec, const Theta& th, int y,
                                int x, double shift = 0.0,
                                double* grad = nullptr);

double singleton_likelihood(const GameSpec& spec, const Theta& th, int y, int x,
                            double shift = 0.0, double* grad = nullptr);

/// g(theta) = log phi(y|x) - log L(y|x;theta). phi_yx = 0 maps to -inf
/// (vacuous inequality). grad is d g / d theta.
double abj_residual(const GameSpec& spec, const Theta& th, double phi_yx, int y,
                    int x, double shift = 0.0, double* grad = nullptr);

/// log probability that y is a profile of strictly dominant actions.
double log_dominant_lower_bound(const GameSpec& spec, const Theta& th, int y,
                                int x, double shift = 0.0,
                                double* grad = nullptr);

double dominant_lower_bound(const GameSpec& spec, const Theta& th, int y, int x,
                            double shift = 0.0, double* grad = nullptr);

/// Per-player shock intervals supporting each outcome of a binary game.
/// For outcome y and player i the supporting shocks are [l, r]; one end
/// is always infinite: y_i = 1 needs xi_i >= -w_i(y_{-i}), y_i = 0 needs
/// xi_i <= -w_i(y_{-i}), with w_i the entry index against y_{-i}.
struct BinaryGameView {
  int n_players = 0;
  int n_outcomes = 0;
  int param_dim = 0;
  std::vector<double> lo, hi;        // [i * n_outcomes + y], extended reals
  std::vector<double> finite_grad;   // gradient of the finite end, same layout x d

  static BinaryGameView build(const GameSpec& spec, const Theta& th, int x,
                              double shift = 0.0);

  double l(int i, int y) const { return lo[static_cast<std::size_t>(i) * n_outcomes + y]; }
  double r(int i, int y) const { return hi[static_cast<std::size_t>(i) * n_outcomes + y]; }
  const double* grad(int i, int y) const {
    return finite_grad.data() +
           (static_cast<std::size_t>(i) * n_outcomes + y) * param_dim;
  }
};

/// R(A|x;theta): probability every member of A is simultaneously supported.
/// Binary games only.
double intersection_probability(const GameSpec& spec, const Theta& th,
                                const OutcomeEvent& a, int x, double shift = 0.0,
                                double* grad = nullptr);

double intersection_probability(const BinaryGameView& view,
                                const std::vector<int>& members,
                                double* grad = nullptr);

/// L(A|x;theta) by inclusion-exclusion over subsets of A. Binary games for
/// |A| > 1; any game for singletons. Events above the subset cap throw.
double union_likelihood(const GameSpec& spec, const Theta& th,
                        const OutcomeEvent& a, int x, double shift = 0.0,
                        double* grad = nullptr, int max_members = 16);

/// Events A with |A| <= max_cardinality that cannot be split into two
/// non-empty parts with all cross pairs disconnected (R of the pair = 0).
/// The inequalities for the returned family imply all others.
std::vector<OutcomeEvent> core_determining_family(const GameSpec& spec,
                                                  const Theta& th, int x,
                                                  int max_cardinality,
                                                  double shift = 0.0,
                                                  double zero_tol = 1e-14);

enum class BoundKind { upper_L, lower_dominant, R_cap, union_L };

/// Weighted average of a bound over the mixing grid, shifting entry payoffs
/// by scale * node at each node.
double mixed_bound(const GameSpec& spec, const Theta& th, const MixingGrid& grid,
                   BoundKind kind, const OutcomeEvent& a, int x,
                   double* grad = nullptr);

/// Single-node kernel behind mixed_bound.
double event_bound(const GameSpec& spec, const Theta& th, BoundKind kind,
                   const OutcomeEvent& a, int x, double shift = 0.0,
                   double* grad = nullptr);

}  // namespace gamebounds
