#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gamebounds/numeric.hpp"

namespace gamebounds {

/// Thrown when a binary-action-only operation is invoked on a game with
/// more than two actions for some player.
struct UnsupportedStructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an event exceeds the inclusion-exclusion cost cap.
struct ComplexityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Theta {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
};

/// An outcome is a full action profile, one action index per player.
using Outcome = std::vector<int>;

/// A non-empty set of outcomes, stored as sorted unique flat indices
/// into the outcome space of a specific GameSpec.
struct OutcomeEvent {
  std::vector<int> members;

  static OutcomeEvent of(std::vector<int> outcome_ids) {
    std::sort(outcome_ids.begin(), outcome_ids.end());
    outcome_ids.erase(std::unique(outcome_ids.begin(), outcome_ids.end()),
                      outcome_ids.end());
    if (outcome_ids.empty()) throw std::invalid_argument("OutcomeEvent: empty event");
    return OutcomeEvent{std::move(outcome_ids)};
  }
  std::size_t size() const { return members.size(); }
  bool operator==(const OutcomeEvent& o) const { return members == o.members; }
  bool operator<(const OutcomeEvent& o) const { return members < o.members; }
};

/// Discrete mixing distribution for the market-level shock omega.
struct MixingGrid {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // non-negative, sum to 1
  double scale = 0.0;           // sigma_omega >= 0

  void validate() const {
    if (nodes.size() != weights.size() || nodes.empty())
      throw std::invalid_argument("MixingGrid: nodes/weights size mismatch");
    if (scale < 0.0) throw std::invalid_argument("MixingGrid: negative scale");
    double s = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (weights[k] < 0.0) throw std::invalid_argument("MixingGrid: negative weight");
      if (k > 0 && !(nodes[k] > nodes[k - 1]))
        throw std::invalid_argument("MixingGrid: nodes not strictly increasing");
      s += weights[k];
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("MixingGrid: weights do not sum to 1");
  }

  /// Equal-weight grid on logistic quantiles F^{-1}((2k-1)/(2K)), k=1..K.
  static MixingGrid logistic_quantiles(int k_nodes, double scale) {
    if (k_nodes < 1) throw std::invalid_argument("MixingGrid: K must be >= 1");
    MixingGrid g;
    g.scale = scale;
    for (int k = 1; k <= k_nodes; ++k) {
      g.nodes.push_back(logistic_quantile((2.0 * k - 1.0) / (2.0 * k_nodes)));
      g.weights.push_back(1.0 / k_nodes);
    }
    return g;
  }

  std::size_t size() const { return nodes.size(); }
};

/// Static discrete game with payoff indices affine in theta:
///   v_i(y, x; theta) = coeff[i][y][x] . theta + offset[i][y][x].
class GameSpec {
 public:
  int n_players = 0;
  std::vector<std::vector<std::string>> action_labels;  // per player
  std::vector<std::string> bin_labels;
  int param_dim = 0;
  std::vector<double> param_lower;  // entries may be -inf
  std::vector<double> param_upper;  // entries may be +inf

  // coeff[(((i * n_outcomes) + y) * n_bins + x) * param_dim + k]
  std::vector<double> coeff;
  // offset[((i * n_outcomes) + y) * n_bins + x]
  std::vector<double> offset;

  int n_actions(int i) const { return static_cast<int>(action_labels[i].size()); }
  int n_bins() const { return static_cast<int>(bin_labels.size()); }
  int n_outcomes() const { return n_outcomes_; }

  bool is_binary() const {
    for (int i = 0; i < n_players; ++i)
      if (n_actions(i) != 2) return false;
    return true;
  }

  /// Mixed-radix encoding of an action profile, player 0 fastest.
  int outcome_id(const Outcome& y) const {
    int id = 0;
    for (int i = n_players - 1; i >= 0; --i) {
      if (y[i] < 0 || y[i] >= n_actions(i))
        throw std::out_of_range("GameSpec: action index out of range");
      id = id * n_actions(i) + y[i];
    }
    return id;
  }

  Outcome outcome_actions(int id) const {
    Outcome y(n_players);
    for (int i = 0; i < n_players; ++i) {
      y[i] = id % n_actions(i);
      id /= n_actions(i);
    }
    return y;
  }

  int replace_action(int outcome, int player, int action) const {
    Outcome y = outcome_actions(outcome);
    y[player] = action;
    return outcome_id(y);
  }

  int action_of(int outcome, int player) const {
    for (int i = 0; i < player; ++i) outcome /= n_actions(i);
    return outcome % n_actions(player);
  }

  std::size_t coeff_base(int i, int y, int x) const {
    check_index(i, y, x);
    return ((static_cast<std::size_t>(i) * n_outcomes_ + y) * n_bins() + x) *
           param_dim;
  }
  std::size_t offset_index(int i, int y, int x) const {
    check_index(i, y, x);
    return (static_cast<std::size_t>(i) * n_outcomes_ + y) * n_bins() + x;
  }

  /// v_i(y, x; theta), plus an additive shift on every non-baseline action
  /// of player i (used by the unobserved-heterogeneity kernel).
  double payoff(const Theta& th, int i, int y, int x, double shift = 0.0) const {
    const std::size_t base = coeff_base(i, y, x);
    double v = offset[offset_index(i, y, x)];
    for (int k = 0; k < param_dim; ++k) v += coeff[base + k] * th.values[k];
    if (shift != 0.0 && action_of(y, i) != 0) v += shift;
    return v;
  }

  /// Gradient of v_i(y, x; theta) in theta.
  void payoff_grad(int i, int y, int x, std::span<double> out) const {
    const std::size_t base = coeff_base(i, y, x);
    for (int k = 0; k < param_dim; ++k) out[k] = coeff[base + k];
  }

  void validate() const {
    if (n_players < 1) throw std::invalid_argument("GameSpec: need at least 1 player");
    if (static_cast<int>(action_labels.size()) != n_players)
      throw std::invalid_argument("GameSpec: action label rows != n_players");
    for (int i = 0; i < n_players; ++i)
      if (n_actions(i) < 2)
        throw std::invalid_argument("GameSpec: every player needs |Y_i| >= 2");
    if (bin_labels.empty()) throw std::invalid_argument("GameSpec: no covariate bins");
    if (param_dim < 1) throw std::invalid_argument("GameSpec: param_dim must be >= 1");
    if (param_lower.size() != static_cast<std::size_t>(param_dim) ||
        param_upper.size() != static_cast<std::size_t>(param_dim))
      throw std::invalid_argument("GameSpec: param box dimension mismatch");
    for (int k = 0; k < param_dim; ++k)
      if (!(param_lower[k] <= param_upper[k]))
        throw std::invalid_argument("GameSpec: param box lower > upper");
    const std::size_t nc = static_cast<std::size_t>(n_players) * n_outcomes_ *
                           n_bins() * param_dim;
    const std::size_t no =
        static_cast<std::size_t>(n_players) * n_outcomes_ * n_bins();
    if (coeff.size() != nc || offset.size() != no)
      throw std::invalid_argument("GameSpec: coefficient tensor shape mismatch");
  }

  void finalize() {
    n_outcomes_ = 1;
    for (int i = 0; i < n_players; ++i) n_outcomes_ *= n_actions(i);
    validate();
  }

  bool in_box(const Theta& th, double tol = 0.0) const {
    for (int k = 0; k < param_dim; ++k)
      if (th.values[k] < param_lower[k] - tol || th.values[k] > param_upper[k] + tol)
        return false;
    return true;
  }

 private:
  int n_outcomes_ = 0;

  void check_index(int i, int y, int x) const {
    if (i < 0 || i >= n_players || y < 0 || y >= n_outcomes_ || x < 0 ||
        x >= n_bins())
      throw std::out_of_range("GameSpec: (player, outcome, bin) index out of range");
  }
};

/// Conditional choice probabilities with per-bin sample counts.
struct CCPTable {
  // phi[x * n_outcomes + y]
  std::vector<double> phi;
  std::vector<std::int64_t> bin_counts;  // n^x
  int n_outcomes = 0;
  std::int64_t total = 0;
  std::vector<int> dropped_bins;  // bins with n^x = 0, excluded from phi rows

  double operator()(int y, int x) const {
    return phi[static_cast<std::size_t>(x) * n_outcomes + y];
  }
  double& at(int y, int x) {
    return phi[static_cast<std::size_t>(x) * n_outcomes + y];
  }
  int n_bins() const { return static_cast<int>(bin_counts.size()); }

  double event_prob(const OutcomeEvent& a, int x) const {
    double s = 0.0;
    for (int y : a.members) s += (*this)(y, x);
    return s;
  }

  void validate(double tol = 1e-12) const {
    for (int x = 0; x < n_bins(); ++x) {
      double s = 0.0;
      for (int y = 0; y < n_outcomes; ++y) {
        const double p = (*this)(y, x);
        if (p < -tol || p > 1.0 + tol)
          throw std::invalid_argument("CCPTable: probability outside [0,1]");
        s += p;
      }
      if (std::abs(s - 1.0) > tol)
        throw std::invalid_argument("CCPTable: bin row is not a simplex point");
    }
  }

  static CCPTable uniform_like(const GameSpec& spec) {
    CCPTable t;
    t.n_outcomes = spec.n_outcomes();
    t.bin_counts.assign(spec.n_bins(), 0);
    t.phi.assign(static_cast<std::size_t>(spec.n_bins()) * spec.n_outcomes(),
                 1.0 / spec.n_outcomes());
    return t;
  }
};

}  // namespace gamebounds
