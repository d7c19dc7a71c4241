#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gamebounds/numeric.hpp"

namespace gamebounds {

/// Differentiable scalar function: fills grad (same length as x) and
/// returns the value.
using ScalarFn = std::function<double(std::span<const double> x,
                                      std::span<double> grad)>;

struct MinimizeOptions {
  int max_iters = 500;
  double grad_tol = 1e-9;   // on the projected gradient, sup norm
  double f_tol = 1e-14;     // relative objective stall
  int history = 10;         // L-BFGS memory
};

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
};

/// L-BFGS with box constraints handled by gradient projection: search
/// directions from the two-loop recursion, iterates projected onto the box,
/// Armijo backtracking on the projected path.
MinimizeResult minimize_box(const ScalarFn& f, std::vector<double> x0,
                            std::span<const double> lower,
                            std::span<const double> upper,
                            const MinimizeOptions& opts = {});

struct NlpOptions {
  MinimizeOptions inner;
  int max_outer = 60;
  double feas_tol = 1e-8;      // max constraint violation at exit
  double mu0 = 10.0;           // initial penalty
  double mu_growth = 4.0;
  double mu_max = 1e12;
};

struct NlpResult {
  std::vector<double> x;
  double objective = 0.0;
  double max_violation = 0.0;  // over inequalities (positive part) and |equalities|
  int outer_iters = 0;
  bool feasible = false;
};

/// Augmented Lagrangian for
///   min f(x)  s.t.  g_j(x) <= 0, h_j(x) = 0, lower <= x <= upper.
/// Inequalities use the standard positive-part multiplier form.
NlpResult minimize_constrained(const ScalarFn& objective,
                               const std::vector<ScalarFn>& inequalities,
                               const std::vector<ScalarFn>& equalities,
                               std::vector<double> x0,
                               std::span<const double> lower,
                               std::span<const double> upper,
                               const NlpOptions& opts = {});

/// Dense LP:  min c.x  s.t. rows (a.x <= b or a.x = b), lo <= x <= hi,
/// all variable bounds finite. Solved by two-phase tableau simplex with
/// Bland's rule; sized for the small per-bin programs used here.
struct LpProblem {
  int n = 0;
  std::vector<double> c, lo, hi;
  struct Row {
    std::vector<double> a;
    double b = 0.0;
    char op = '<';  // '<' or '='
  };
  std::vector<Row> rows;
};

struct LpResult {
  enum class Status { optimal, infeasible, unbounded, iteration_limit };
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

LpResult solve_lp(const LpProblem& lp);

/// Deterministic scrambled low-discrepancy starts inside [lower, upper];
/// infinite box edges are clamped to +-span around 0.
std::vector<std::vector<double>> latin_hypercube_starts(
    std::span<const double> lower, std::span<const double> upper, int count,
    std::uint64_t seed, double span = 4.0);

}  // namespace gamebounds
