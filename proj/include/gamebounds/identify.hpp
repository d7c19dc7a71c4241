#pragma once

#include <cstdint>
#include <optional>

#include "gamebounds/bounds.hpp"
#include "gamebounds/solver.hpp"

namespace gamebounds {

/// One moment inequality: an upper bound phi(A|x) <= bound(A|x;theta) or a
/// lower bound bound(y|x;theta) <= phi(y|x).
struct Inequality {
  OutcomeEvent a;
  int x = 0;
  BoundKind kind = BoundKind::upper_L;

  bool is_upper() const { return kind != BoundKind::lower_dominant; }
};

struct InequalityFamily {
  enum class Kind { abj, abj_lb, sharpK };
  Kind kind = Kind::abj;
  int max_cardinality = 1;
  std::vector<Inequality> items;
  std::optional<MixingGrid> grid;

  bool mixing() const { return grid.has_value() && grid->scale != 0.0; }

  /// Singleton upper bounds only (the convex outer set).
  static InequalityFamily abj(const GameSpec& spec);
  /// Singleton upper bounds plus dominant-strategy lower bounds.
  static InequalityFamily abj_lb(const GameSpec& spec);
  /// All events with |A| <= K (binary games only). K = |Y| gives the sharp
  /// set; the K-truncated family is valid for any K.
  static InequalityFamily sharpK(const GameSpec& spec, int K);

  InequalityFamily with_grid(MixingGrid g) const {
    InequalityFamily f = *this;
    f.grid = std::move(g);
    return f;
  }
};

/// Log-form residual of one inequality at fixed theta (no mixing):
/// upper: log phi(A|x) - log bound; lower: log bound - log phi(y|x).
/// phi(A|x) = 0 yields -inf for upper bounds (vacuous). grad, when given,
/// receives d residual / d theta.
double residual_log(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                    const Inequality& item, double shift = 0.0,
                    double* grad = nullptr);

struct SolveReport {
  enum class Status { optimal, infeasible, max_iter, stalled };
  Status status = Status::stalled;
  double objective = 0.0;
  Theta theta;
  std::vector<double> q;  // latent per-node CCPs, [x][k][y] flattened; mixing only
  double max_violation = kInf;
  int starts_used = 0;
  std::vector<std::uint64_t> start_seeds;
};

struct IdentifyOptions {
  int starts = 4;
  std::uint64_t seed = 1;
  double smooth_alpha = 200.0;
  double feas_tol = 1e-6;       // membership-by-optimization
  double member_tol = 1e-9;     // direct membership
  double t_box = 2.0;           // epigraph variable bounds for mixing programs
};

/// Maximal violation over the family. Without mixing: max log-form residual.
/// With mixing: value of the per-bin latent-CCP feasibility program (linear
/// program, level form). theta is in the identified set iff Q <= 0.
double criterion_Q(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                   const InequalityFamily& family,
                   const IdentifyOptions& opts = {});

/// Smoothed criterion (1/alpha) log sum exp(alpha g): exact Q <= smooth Q
/// <= exact Q + log(m)/alpha. No-mixing families only. grad optional.
double criterion_Q_smooth(const GameSpec& spec, const Theta& th,
                          const CCPTable& ccp, const InequalityFamily& family,
                          double alpha, double* grad = nullptr);

/// Exact-max membership at tolerance member_tol. sharpK families are
/// regenerated at theta (the core-determining family is theta-dependent).
bool membership(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                const InequalityFamily& family, const IdentifyOptions& opts = {});

/// Multi-start search for a point with Q <= feas_tol.
SolveReport find_feasible_point(const GameSpec& spec, const CCPTable& ccp,
                                const InequalityFamily& family,
                                const IdentifyOptions& opts = {});

enum class Sense { lower, upper };

struct ProjectionResult {
  double endpoint = 0.0;
  SolveReport report;
};

/// min (lower) or max (upper) of p . theta over the identified set; the
/// returned endpoint is certified by an exact membership check at theta.
ProjectionResult project(const GameSpec& spec, const CCPTable& ccp,
                         const InequalityFamily& family,
                         const std::vector<double>& p, Sense sense,
                         const IdentifyOptions& opts = {});

/// Independent endpoint computation for convex families: bisection on the
/// level c of p . theta, testing at each level whether the slice
/// {theta : p.theta = c} meets the identified set. Needs a feasible start.
double project_bisection(const GameSpec& spec, const CCPTable& ccp,
                         const InequalityFamily& family,
                         const std::vector<double>& p, Sense sense,
                         const Theta& feasible, double level_tol = 1e-6,
                         const IdentifyOptions& opts = {});

}  // namespace gamebounds
