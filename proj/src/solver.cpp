#include "gamebounds/solver.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "gamebounds/oracle.hpp"  // Rng

namespace gamebounds {

namespace {

void project_box(std::span<double> x, std::span<const double> lo,
                 std::span<const double> hi) {
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::clamp(x[i], lo[i], hi[i]);
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

}  // namespace

MinimizeResult minimize_box(const ScalarFn& f, std::vector<double> x0,
                            std::span<const double> lower,
                            std::span<const double> upper,
                            const MinimizeOptions& opts) {
  const std::size_t n = x0.size();
  project_box(x0, lower, upper);

  std::vector<double> x = x0, g(n), g_new(n), d(n), x_new(n), pg(n);
  double fx = f(x, g);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> mem;

  MinimizeResult res;
  res.converged = false;

  int it = 0;
  for (; it < opts.max_iters; ++it) {
    // projected gradient: how far a unit gradient step actually moves
    for (std::size_t i = 0; i < n; ++i)
      pg[i] = x[i] - std::clamp(x[i] - g[i], lower[i], upper[i]);
    if (inf_norm(pg) <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // two-loop recursion for d = -H g
    d.assign(g.begin(), g.end());
    std::vector<double> alpha(mem.size());
    for (std::size_t j = mem.size(); j-- > 0;) {
      const Pair& p = mem[j];
      alpha[j] = p.rho * std::inner_product(p.s.begin(), p.s.end(), d.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * p.y[i];
    }
    if (!mem.empty()) {
      const Pair& last = mem.back();
      const double yy =
          std::inner_product(last.y.begin(), last.y.end(), last.y.begin(), 0.0);
      const double sy =
          std::inner_product(last.s.begin(), last.s.end(), last.y.begin(), 0.0);
      if (yy > 0.0)
        for (double& di : d) di *= sy / yy;
    }
    for (std::size_t j = 0; j < mem.size(); ++j) {
      const Pair& p = mem[j];
      const double beta =
          p.rho * std::inner_product(p.y.begin(), p.y.end(), d.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - beta) * p.s[i];
    }
    for (double& di : d) di = -di;

    // kill components pushing against an active bound
    for (std::size_t i = 0; i < n; ++i) {
      if ((x[i] <= lower[i] && d[i] < 0.0) || (x[i] >= upper[i] && d[i] > 0.0))
        d[i] = 0.0;
    }
    double gd = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
    if (!(gd < 0.0)) {  // not a descent direction; steepest descent restart
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      mem.clear();
      gd = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
      if (!(gd < 0.0)) break;
    }

    // Armijo backtracking along the projected path
    double t = (mem.empty() && it == 0) ? std::min(1.0, 1.0 / (1.0 + inf_norm(g)))
                                        : 1.0;
    bool accepted = false;
    double f_new = fx;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i)
        x_new[i] = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
      double step_g = 0.0;  // g . (x_new - x), accounts for projection
      for (std::size_t i = 0; i < n; ++i) step_g += g[i] * (x_new[i] - x[i]);
      f_new = f(x_new, g_new);
      if (f_new <= fx + 1e-4 * step_g && step_g < 0.0) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = std::inner_product(p.s.begin(), p.s.end(), p.y.begin(), 0.0);
    const double ss = std::inner_product(p.s.begin(), p.s.end(), p.s.begin(), 0.0);
    if (sy > 1e-12 * std::sqrt(ss) *
                 std::sqrt(std::inner_product(p.y.begin(), p.y.end(),
                                              p.y.begin(), 0.0)) &&
        sy > 0.0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > opts.history) mem.pop_front();
    }

    const double drop = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (drop <= opts.f_tol * (std::abs(fx) + 1.0)) {
      // objective stalled; report converged if the projected gradient is small-ish
      for (std::size_t i = 0; i < n; ++i)
        pg[i] = x[i] - std::clamp(x[i] - g[i], lower[i], upper[i]);
      res.converged = inf_norm(pg) <= std::max(opts.grad_tol, 1e-7);
      break;
    }
  }

  res.x = std::move(x);
  res.f = fx;
  res.iters = it;
  return res;
}

NlpResult minimize_constrained(const ScalarFn& objective,
                               const std::vector<ScalarFn>& inequalities,
                               const std::vector<ScalarFn>& equalities,
                               std::vector<double> x0,
                               std::span<const double> lower,
                               std::span<const double> upper,
                               const NlpOptions& opts) {
  const std::size_t n = x0.size();
  const std::size_t mi = inequalities.size();
  const std::size_t me = equalities.size();

  std::vector<double> lam(mi, 0.0), nu(me, 0.0);
  double mu = opts.mu0;

  std::vector<double> x = x0;
  project_box(x, lower, upper);

  auto violation = [&](std::span<const double> xx) {
    std::vector<double> gtmp(n);
    double v = 0.0;
    for (const auto& gfn : inequalities)
      v = std::max(v, gfn(xx, gtmp));
    for (const auto& hfn : equalities)
      v = std::max(v, std::abs(hfn(xx, gtmp)));
    return v;
  };

  double prev_viol = kInf;
  NlpResult best;
  best.x = x;
  best.max_violation = kInf;
  best.objective = kInf;

  std::vector<double> cgrad(n);
  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    ScalarFn al = [&](std::span<const double> xx, std::span<double> grad) {
      double val = objective(xx, grad);
      for (std::size_t j = 0; j < mi; ++j) {
        const double gj = inequalities[j](xx, cgrad);
        const double m = lam[j] + mu * gj;
        if (m > 0.0) {
          val += (m * m - lam[j] * lam[j]) / (2.0 * mu);
          for (std::size_t i = 0; i < n; ++i) grad[i] += m * cgrad[i];
        } else {
          val -= lam[j] * lam[j] / (2.0 * mu);
        }
      }
      for (std::size_t j = 0; j < me; ++j) {
        const double hj = equalities[j](xx, cgrad);
        val += nu[j] * hj + 0.5 * mu * hj * hj;
        const double m = nu[j] + mu * hj;
        for (std::size_t i = 0; i < n; ++i) grad[i] += m * cgrad[i];
      }
      return val;
    };

    MinimizeOptions inner = opts.inner;
    inner.grad_tol = std::max(opts.inner.grad_tol, 1e-6 / std::sqrt(mu));
    MinimizeResult r = minimize_box(al, x, lower, upper, inner);
    x = r.x;

    const double viol = violation(x);
    std::vector<double> gobj(n);
    const double fobj = objective(x, gobj);

    if (viol < best.max_violation ||
        (viol <= opts.feas_tol && fobj < best.objective)) {
      best.x = x;
      best.objective = fobj;
      best.max_violation = viol;
    }

    if (viol <= opts.feas_tol && outer > 0 && prev_viol <= opts.feas_tol) break;

    // multiplier updates
    for (std::size_t j = 0; j < mi; ++j) {
      const double gj = inequalities[j](x, cgrad);
      lam[j] = std::max(0.0, lam[j] + mu * gj);
    }
    for (std::size_t j = 0; j < me; ++j) {
      const double hj = equalities[j](x, cgrad);
      nu[j] += mu * hj;
    }
    if (viol > 0.25 * prev_viol && mu < opts.mu_max) mu *= opts.mu_growth;
    prev_viol = viol;
  }

  best.outer_iters = outer;
  best.feasible = best.max_violation <= opts.feas_tol;
  return best;
}

// ---------------------------------------------------------------------------
// Two-phase tableau simplex.

namespace {

constexpr double kLpEps = 1e-10;

struct Tableau {
  int m = 0, ncols = 0;
  std::vector<double> t;  // (m + 1) x (ncols + 1), row-major; last row = costs
  std::vector<int> basis;

  double& at(int r, int c) { return t[static_cast<std::size_t>(r) * (ncols + 1) + c]; }
  double at(int r, int c) const {
    return t[static_cast<std::size_t>(r) * (ncols + 1) + c];
  }
  double& rhs(int r) { return at(r, ncols); }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    for (int c = 0; c <= ncols; ++c) at(pr, c) /= piv;
    for (int r = 0; r <= m; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= ncols; ++c) at(r, c) -= f * at(pr, c);
    }
    basis[pr] = pc;
  }

  /// Bland's rule iteration on the current cost row. allowed(c) gates
  /// entering columns. Returns optimal / unbounded / iteration_limit.
  LpResult::Status iterate(const std::vector<char>& allowed, int max_iters) {
    for (int it = 0; it < max_iters; ++it) {
      int pc = -1;
      for (int c = 0; c < ncols; ++c) {
        if (allowed[c] && at(m, c) < -kLpEps) {
          pc = c;
          break;
        }
      }
      if (pc < 0) return LpResult::Status::optimal;
      int pr = -1;
      double best = kInf;
      for (int r = 0; r < m; ++r) {
        const double a = at(r, pc);
        if (a > kLpEps) {
          const double ratio = rhs(r) / a;
          if (ratio < best - kLpEps ||
              (ratio < best + kLpEps && (pr < 0 || basis[r] < basis[pr]))) {
            best = ratio;
            pr = r;
          }
        }
      }
      if (pr < 0) return LpResult::Status::unbounded;
      pivot(pr, pc);
    }
    return LpResult::Status::iteration_limit;
  }
};

}  // namespace

LpResult solve_lp(const LpProblem& lp) {
  const int n = lp.n;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lo[j]) || !std::isfinite(lp.hi[j]) ||
        lp.lo[j] > lp.hi[j])
      throw std::invalid_argument("solve_lp: variable bounds must be finite");
  }

  // Shift to z = x - lo >= 0; upper bounds become <= rows.
  struct NRow {
    std::vector<double> a;
    double b;
    bool eq;
  };
  std::vector<NRow> rows;
  for (const auto& r : lp.rows) {
    if (static_cast<int>(r.a.size()) != n)
      throw std::invalid_argument("solve_lp: row width mismatch");
    NRow nr{r.a, r.b, r.op == '='};
    for (int j = 0; j < n; ++j) nr.b -= r.a[j] * lp.lo[j];
    rows.push_back(std::move(nr));
  }
  for (int j = 0; j < n; ++j) {
    const double u = lp.hi[j] - lp.lo[j];
    NRow nr{std::vector<double>(n, 0.0), u, false};
    nr.a[j] = 1.0;
    rows.push_back(std::move(nr));
  }

  const int m = static_cast<int>(rows.size());
  // columns: n structural, then one slack per inequality row, then one
  // artificial per row that needs it.
  int n_slack = 0;
  for (const auto& r : rows)
    if (!r.eq) ++n_slack;

  Tableau tab;
  tab.m = m;
  tab.ncols = n + n_slack + m;  // artificial slots allocated per row, used as needed
  tab.t.assign(static_cast<std::size_t>(m + 1) * (tab.ncols + 1), 0.0);
  tab.basis.assign(m, -1);

  int slack_at = n;
  const int art0 = n + n_slack;
  int n_art = 0;
  for (int r = 0; r < m; ++r) {
    double sign = 1.0;
    if (rows[r].b < 0.0) sign = -1.0;
    for (int j = 0; j < n; ++j) tab.at(r, j) = sign * rows[r].a[j];
    tab.rhs(r) = sign * rows[r].b;
    if (!rows[r].eq) {
      tab.at(r, slack_at) = sign * 1.0;
      if (sign > 0.0) tab.basis[r] = slack_at;  // slack is a valid basic column
      ++slack_at;
    }
    if (tab.basis[r] < 0) {
      const int ac = art0 + n_art++;
      tab.at(r, ac) = 1.0;
      tab.basis[r] = ac;
    }
  }
  const int used_cols = art0 + n_art;
  // shrink logical width to the used artificials
  tab.ncols = used_cols;
  {
    // rebuild with the tighter stride
    Tableau t2;
    t2.m = m;
    t2.ncols = used_cols;
    t2.t.assign(static_cast<std::size_t>(m + 1) * (used_cols + 1), 0.0);
    t2.basis = tab.basis;
    for (int r = 0; r <= m; ++r)
      for (int c = 0; c <= used_cols; ++c)
        t2.t[static_cast<std::size_t>(r) * (used_cols + 1) + c] =
            tab.t[static_cast<std::size_t>(r) * (n + n_slack + m + 1) +
                  (c == used_cols ? n + n_slack + m : c)];
    tab = std::move(t2);
  }

  const int max_iters = 2000 + 200 * (m + tab.ncols);
  std::vector<char> allowed(tab.ncols, 1);

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    for (int c = 0; c < tab.ncols; ++c) tab.at(m, c) = (c >= art0) ? 1.0 : 0.0;
    tab.rhs(m) = 0.0;
    for (int r = 0; r < m; ++r) {
      if (tab.basis[r] >= art0) {
        for (int c = 0; c <= tab.ncols; ++c) tab.at(m, c) -= tab.at(r, c);
      }
    }
    const auto st = tab.iterate(allowed, max_iters);
    if (st == LpResult::Status::iteration_limit)
      return {LpResult::Status::iteration_limit, {}, 0.0};
    if (-tab.rhs(m) > 1e-7) return {LpResult::Status::infeasible, {}, 0.0};
    // pivot surviving artificials out where possible
    for (int r = 0; r < m; ++r) {
      if (tab.basis[r] >= art0) {
        int pc = -1;
        for (int c = 0; c < art0; ++c)
          if (std::abs(tab.at(r, c)) > 1e-8) {
            pc = c;
            break;
          }
        if (pc >= 0) tab.pivot(r, pc);
      }
    }
  }

  // Phase 2: original costs over z; artificials barred from entering.
  for (int c = art0; c < tab.ncols; ++c) allowed[c] = 0;
  for (int c = 0; c <= tab.ncols; ++c) tab.at(m, c) = 0.0;
  for (int j = 0; j < n; ++j) tab.at(m, j) = lp.c[j];
  for (int r = 0; r < m; ++r) {
    const int bj = tab.basis[r];
    const double cb = (bj < n) ? lp.c[bj] : 0.0;
    if (cb != 0.0)
      for (int c = 0; c <= tab.ncols; ++c) tab.at(m, c) -= cb * tab.at(r, c);
  }
  const auto st = tab.iterate(allowed, max_iters);
  if (st == LpResult::Status::unbounded)
    return {LpResult::Status::unbounded, {}, 0.0};
  if (st == LpResult::Status::iteration_limit)
    return {LpResult::Status::iteration_limit, {}, 0.0};

  LpResult res;
  res.status = LpResult::Status::optimal;
  res.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (tab.basis[r] < n) res.x[tab.basis[r]] = tab.rhs(r);
  double obj = 0.0;
  for (int j = 0; j < n; ++j) {
    res.x[j] += lp.lo[j];
    res.x[j] = std::clamp(res.x[j], lp.lo[j], lp.hi[j]);
    obj += lp.c[j] * res.x[j];
  }
  res.objective = obj;
  return res;
}

std::vector<std::vector<double>> latin_hypercube_starts(
    std::span<const double> lower, std::span<const double> upper, int count,
    std::uint64_t seed, double span) {
  const std::size_t d = lower.size();
  std::vector<std::vector<double>> starts(count, std::vector<double>(d));
  Rng rng(seed);
  for (std::size_t k = 0; k < d; ++k) {
    const double lo = std::isfinite(lower[k]) ? lower[k] : -span;
    const double hi = std::isfinite(upper[k]) ? upper[k] : span;
    std::vector<int> perm(count);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int s = 0; s < count; ++s) {
      const double u = (perm[s] + rng.uniform()) / count;
      starts[s][k] = lo + u * (hi - lo);
    }
  }
  return starts;
}

}  // namespace gamebounds
