#include "gamebounds/identify.hpp"

#include <bit>

namespace gamebounds {

namespace {

void singleton_items(const GameSpec& spec, BoundKind kind,
                     std::vector<Inequality>& out) {
  for (int x = 0; x < spec.n_bins(); ++x)
    for (int y = 0; y < spec.n_outcomes(); ++y)
      out.push_back({OutcomeEvent::of({y}), x, kind});
}

}  // namespace

InequalityFamily InequalityFamily::abj(const GameSpec& spec) {
  InequalityFamily f;
  f.kind = Kind::abj;
  f.max_cardinality = 1;
  singleton_items(spec, BoundKind::upper_L, f.items);
  return f;
}

InequalityFamily InequalityFamily::abj_lb(const GameSpec& spec) {
  InequalityFamily f;
  f.kind = Kind::abj_lb;
  f.max_cardinality = 1;
  singleton_items(spec, BoundKind::upper_L, f.items);
  singleton_items(spec, BoundKind::lower_dominant, f.items);
  return f;
}

InequalityFamily InequalityFamily::sharpK(const GameSpec& spec, int K) {
  if (!spec.is_binary())
    throw UnsupportedStructureError("sharpK family needs a binary-action game");
  const int n = spec.n_outcomes();
  if (K < 1 || K > n)
    throw std::invalid_argument("sharpK: K must lie in [1, |Y|]");
  InequalityFamily f;
  f.kind = Kind::sharpK;
  f.max_cardinality = K;
  for (int x = 0; x < spec.n_bins(); ++x) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (std::popcount(mask) > K) continue;
      std::vector<int> members;
      for (int y = 0; y < n; ++y)
        if (mask & (1u << y)) members.push_back(y);
      const BoundKind kind =
          members.size() == 1 ? BoundKind::upper_L : BoundKind::union_L;
      f.items.push_back({OutcomeEvent::of(members), x, kind});
    }
  }
  return f;
}

double residual_log(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                    const Inequality& item, double shift, double* grad) {
  const int d = spec.param_dim;
  const double phi_a = ccp.event_prob(item.a, item.x);
  if (item.is_upper()) {
    std::vector<double> gb(grad ? d : 0);
    const double b = event_bound(spec, th, item.kind, item.a, item.x, shift,
                                 grad ? gb.data() : nullptr);
    if (grad)
      for (int k = 0; k < d; ++k) grad[k] = -gb[k] / b;
    if (phi_a <= 0.0) return -kInf;
    return std::log(phi_a) - std::log(b);
  }
  const double logb =
      log_dominant_lower_bound(spec, th, item.a.members[0], item.x, shift, grad);
  return logb - std::log(std::max(phi_a, 1e-300));
}

namespace {

/// Log-form residual averaged over a mixing grid is not linear, so the
/// mixing path never calls this; without mixing it is the one g used
/// everywhere.
double residual_max(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                    const std::vector<Inequality>& items) {
  double q = -kInf;
  for (const auto& item : items)
    q = std::max(q, residual_log(spec, th, ccp, item, 0.0, nullptr));
  return q;
}

bool bin_dropped(const CCPTable& ccp, int x) {
  return std::find(ccp.dropped_bins.begin(), ccp.dropped_bins.end(), x) !=
         ccp.dropped_bins.end();
}

/// Per-bin latent-CCP program at fixed theta: variables q(y|omega_k) and
/// epigraph t; minimize t subject to level-form bounds per node, per-node
/// simplex rows, and the mixing equality tying q back to phi.
double mixing_lp_value(const GameSpec& spec, const Theta& th,
                       const CCPTable& ccp, const InequalityFamily& family,
                       int x, double t_box, std::vector<double>* q_out) {
  const MixingGrid& grid = *family.grid;
  const int K = static_cast<int>(grid.size());
  const int ny = spec.n_outcomes();
  const int nq = K * ny;

  LpProblem lp;
  lp.n = nq + 1;
  lp.lo.assign(lp.n, 0.0);
  lp.hi.assign(lp.n, 1.0);
  lp.lo[nq] = -t_box;
  lp.hi[nq] = t_box;
  lp.c.assign(lp.n, 0.0);
  lp.c[nq] = 1.0;

  for (const auto& item : family.items) {
    if (item.x != x) continue;
    for (int k = 0; k < K; ++k) {
      const double shift = grid.scale * grid.nodes[k];
      LpProblem::Row row;
      row.a.assign(lp.n, 0.0);
      row.a[nq] = -1.0;
      if (item.is_upper()) {
        for (int y : item.a.members) row.a[k * ny + y] = 1.0;
        row.b = event_bound(spec, th, item.kind, item.a, item.x, shift);
      } else {
        row.a[k * ny + item.a.members[0]] = -1.0;
        row.b = -dominant_lower_bound(spec, th, item.a.members[0], x, shift);
      }
      row.op = '<';
      lp.rows.push_back(std::move(row));
    }
  }
  for (int k = 0; k < K; ++k) {
    LpProblem::Row row;
    row.a.assign(lp.n, 0.0);
    for (int y = 0; y < ny; ++y) row.a[k * ny + y] = 1.0;
    row.b = 1.0;
    row.op = '=';
    lp.rows.push_back(std::move(row));
  }
  for (int y = 0; y < ny; ++y) {
    LpProblem::Row row;
    row.a.assign(lp.n, 0.0);
    for (int k = 0; k < K; ++k) row.a[k * ny + y] = grid.weights[k];
    row.b = ccp(y, x);
    row.op = '=';
    lp.rows.push_back(std::move(row));
  }

  const LpResult r = solve_lp(lp);
  if (r.status != LpResult::Status::optimal)
    throw std::runtime_error("mixing program: simplex did not reach optimality");
  if (q_out) q_out->assign(r.x.begin(), r.x.begin() + nq);
  return r.objective;
}

}  // namespace

double criterion_Q(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                   const InequalityFamily& family, const IdentifyOptions& opts) {
  if (!family.mixing()) return residual_max(spec, th, ccp, family.items);
  double q = -kInf;
  for (int x = 0; x < spec.n_bins(); ++x) {
    if (bin_dropped(ccp, x)) continue;
    q = std::max(q, mixing_lp_value(spec, th, ccp, family, x, opts.t_box, nullptr));
  }
  return q;
}

double criterion_Q_smooth(const GameSpec& spec, const Theta& th,
                          const CCPTable& ccp, const InequalityFamily& family,
                          double alpha, double* grad) {
  if (family.mixing())
    throw std::invalid_argument("criterion_Q_smooth: mixing uses the LP path");
  const int d = spec.param_dim;
  const std::size_t m = family.items.size();
  std::vector<double> g(m), gg(grad ? m * d : 0);
  for (std::size_t j = 0; j < m; ++j)
    g[j] = alpha * residual_log(spec, th, ccp, family.items[j], 0.0,
                                grad ? gg.data() + j * d : nullptr);
  const double lse = log_sum_exp(g);
  if (grad) {
    std::fill(grad, grad + d, 0.0);
    if (lse != -kInf) {
      for (std::size_t j = 0; j < m; ++j) {
        if (g[j] == -kInf) continue;
        const double w = std::exp(g[j] - lse);
        for (int k = 0; k < d; ++k) grad[k] += w * gg[j * d + k];
      }
    }
  }
  return lse / alpha;
}

bool membership(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                const InequalityFamily& family, const IdentifyOptions& opts) {
  if (family.kind == InequalityFamily::Kind::sharpK && !family.mixing()) {
    // the core-determining family depends on theta; rebuild it here
    for (int x = 0; x < spec.n_bins(); ++x) {
      if (bin_dropped(ccp, x)) continue;
      const auto events =
          core_determining_family(spec, th, x, family.max_cardinality);
      for (const auto& a : events) {
        const BoundKind kind =
            a.size() == 1 ? BoundKind::upper_L : BoundKind::union_L;
        if (residual_log(spec, th, ccp, {a, x, kind}) > opts.member_tol)
          return false;
      }
    }
    return true;
  }
  return criterion_Q(spec, th, ccp, family, opts) <= opts.member_tol;
}

namespace {

struct JointLayout {
  // variable order: theta (d), then q[x][k][y] when mixing, then optional t
  int d = 0, nx = 0, K = 0, ny = 0;
  bool mixing = false;
  bool epigraph = false;

  int q_index(int x, int k, int y) const { return d + (x * K + k) * ny + y; }
  int t_index() const { return d + (mixing ? nx * K * ny : 0); }
  int size() const { return t_index() + (epigraph ? 1 : 0); }
};

struct JointProgram {
  JointLayout lay;
  std::vector<double> lower, upper;
  std::vector<ScalarFn> inequalities, equalities;
};

/// Constraints of the identified-set program over (theta [, q] [, t]) with
/// phi fixed. Without mixing the residuals are log-form in theta; with
/// mixing they are level-form in (theta, q).
JointProgram build_joint(const GameSpec& spec, const CCPTable& ccp,
                         const InequalityFamily& family, bool epigraph,
                         double t_box) {
  JointProgram prog;
  JointLayout& lay = prog.lay;
  lay.d = spec.param_dim;
  lay.nx = spec.n_bins();
  lay.mixing = family.mixing();
  lay.K = lay.mixing ? static_cast<int>(family.grid->size()) : 0;
  lay.ny = spec.n_outcomes();
  lay.epigraph = epigraph;

  const int n = lay.size();
  prog.lower.assign(n, 0.0);
  prog.upper.assign(n, 1.0);
  for (int k = 0; k < lay.d; ++k) {
    prog.lower[k] = spec.param_lower[k];
    prog.upper[k] = spec.param_upper[k];
  }
  if (epigraph) {
    prog.lower[lay.t_index()] = -t_box;
    prog.upper[lay.t_index()] = t_box;
  }

  for (const auto& item : family.items) {
    if (bin_dropped(ccp, item.x)) continue;
    if (!lay.mixing) {
      if (item.is_upper() && ccp.event_prob(item.a, item.x) <= 0.0)
        continue;  // vacuous
      prog.inequalities.push_back(
          [&spec, &ccp, item, lay](std::span<const double> z,
                                   std::span<double> grad) {
            std::fill(grad.begin(), grad.end(), 0.0);
            Theta th{{z.begin(), z.begin() + lay.d}};
            double r = residual_log(spec, th, ccp, item, 0.0, grad.data());
            if (lay.epigraph) {
              r -= z[lay.t_index()];
              grad[lay.t_index()] = -1.0;
            }
            return r;
          });
    } else {
      const MixingGrid grid = *family.grid;
      for (int k = 0; k < lay.K; ++k) {
        const double shift = grid.scale * grid.nodes[k];
        prog.inequalities.push_back(
            [&spec, item, lay, shift, k](std::span<const double> z,
                                         std::span<double> grad) {
              std::fill(grad.begin(), grad.end(), 0.0);
              Theta th{{z.begin(), z.begin() + lay.d}};
              double r;
              if (item.is_upper()) {
                const double b = event_bound(spec, th, item.kind, item.a,
                                             item.x, shift, grad.data());
                for (int j = 0; j < lay.d; ++j) grad[j] = -grad[j];
                double qa = 0.0;
                for (int y : item.a.members) {
                  qa += z[lay.q_index(item.x, k, y)];
                  grad[lay.q_index(item.x, k, y)] = 1.0;
                }
                r = qa - b;
              } else {
                const double b = dominant_lower_bound(
                    spec, th, item.a.members[0], item.x, shift, grad.data());
                const int qi = lay.q_index(item.x, k, item.a.members[0]);
                grad[qi] = -1.0;
                r = b - z[qi];
              }
              if (lay.epigraph) {
                r -= z[lay.t_index()];
                grad[lay.t_index()] = -1.0;
              }
              return r;
            });
      }
    }
  }

  if (lay.mixing) {
    const MixingGrid grid = *family.grid;
    for (int x = 0; x < lay.nx; ++x) {
      if (bin_dropped(ccp, x)) continue;
      for (int k = 0; k < lay.K; ++k) {
        prog.equalities.push_back(
            [lay, x, k](std::span<const double> z, std::span<double> grad) {
              std::fill(grad.begin(), grad.end(), 0.0);
              double s = -1.0;
              for (int y = 0; y < lay.ny; ++y) {
                s += z[lay.q_index(x, k, y)];
                grad[lay.q_index(x, k, y)] = 1.0;
              }
              return s;
            });
      }
      for (int y = 0; y < lay.ny; ++y) {
        const double phi = ccp(y, x);
        prog.equalities.push_back([lay, grid, x, y, phi](
                                      std::span<const double> z,
                                      std::span<double> grad) {
          std::fill(grad.begin(), grad.end(), 0.0);
          double s = -phi;
          for (int k = 0; k < lay.K; ++k) {
            s += grid.weights[k] * z[lay.q_index(x, k, y)];
            grad[lay.q_index(x, k, y)] = grid.weights[k];
          }
          return s;
        });
      }
    }
  }
  return prog;
}

std::vector<double> joint_start(const JointLayout& lay, const CCPTable& ccp,
                                std::span<const double> theta0) {
  std::vector<double> z(lay.size(), 0.0);
  std::copy(theta0.begin(), theta0.end(), z.begin());
  if (lay.mixing) {
    for (int x = 0; x < lay.nx; ++x)
      for (int k = 0; k < lay.K; ++k)
        for (int y = 0; y < lay.ny; ++y)
          z[lay.q_index(x, k, y)] = ccp(y, x);
  }
  if (lay.epigraph) z[lay.t_index()] = 1.0;
  return z;
}

Theta theta_of(const JointLayout& lay, std::span<const double> z) {
  return Theta{{z.begin(), z.begin() + lay.d}};
}

}  // namespace

SolveReport find_feasible_point(const GameSpec& spec, const CCPTable& ccp,
                                const InequalityFamily& family,
                                const IdentifyOptions& opts) {
  SolveReport rep;
  rep.starts_used = opts.starts;
  const auto starts = latin_hypercube_starts(spec.param_lower, spec.param_upper,
                                             std::max(1, opts.starts), opts.seed);
  for (std::size_t s = 0; s < starts.size(); ++s)
    rep.start_seeds.push_back(opts.seed + s);

  if (!family.mixing()) {
    auto smooth_obj = [&](double alpha) {
      return ScalarFn([&spec, &ccp, &family, alpha](std::span<const double> z,
                                                    std::span<double> grad) {
        Theta th{{z.begin(), z.end()}};
        return criterion_Q_smooth(spec, th, ccp, family, alpha, grad.data());
      });
    };
    double best_q = kInf;
    std::vector<double> best_x;
    bool any_converged = false;
    for (const auto& x0 : starts) {
      MinimizeResult r = minimize_box(smooth_obj(opts.smooth_alpha), x0,
                                      spec.param_lower, spec.param_upper);
      any_converged = any_converged || r.converged;
      const double q =
          criterion_Q(spec, Theta{{r.x.begin(), r.x.end()}}, ccp, family, opts);
      if (q < best_q) {
        best_q = q;
        best_x = r.x;
      }
    }
    // exact-max polish: sharpen the smoothing around the best point
    for (double alpha : {10.0 * opts.smooth_alpha, 100.0 * opts.smooth_alpha}) {
      MinimizeResult r = minimize_box(smooth_obj(alpha), best_x,
                                      spec.param_lower, spec.param_upper);
      const double q =
          criterion_Q(spec, Theta{{r.x.begin(), r.x.end()}}, ccp, family, opts);
      if (q < best_q) {
        best_q = q;
        best_x = r.x;
      }
    }
    // exact-max refinement: the smoothed surrogate stops a little above the
    // true minimum when the set has empty interior, so finish on the
    // epigraph program min t s.t. residual_j <= t
    bool epi_feasible = false;
    if (best_q > opts.feas_tol) {
      JointProgram prog = build_joint(spec, ccp, family, true, opts.t_box);
      const int tix = prog.lay.t_index();
      ScalarFn obj_t = [tix](std::span<const double> z, std::span<double> grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        grad[tix] = 1.0;
        return z[tix];
      };
      std::vector<double> z0 = joint_start(prog.lay, ccp, best_x);
      z0[tix] = std::min(opts.t_box, std::max(best_q, 0.0) + 0.1);
      NlpResult r = minimize_constrained(obj_t, prog.inequalities,
                                         prog.equalities, z0, prog.lower,
                                         prog.upper);
      epi_feasible = r.feasible;
      const Theta th = theta_of(prog.lay, r.x);
      const double q = criterion_Q(spec, th, ccp, family, opts);
      if (q < best_q) {
        best_q = q;
        best_x.assign(r.x.begin(), r.x.begin() + prog.lay.d);
      }
    }
    rep.theta = Theta{{best_x.begin(), best_x.end()}};
    rep.objective = best_q;
    rep.max_violation = std::max(0.0, best_q);
    rep.status = best_q <= opts.feas_tol
                     ? SolveReport::Status::optimal
                     : (any_converged || epi_feasible
                            ? SolveReport::Status::infeasible
                            : SolveReport::Status::stalled);
    return rep;
  }

  // mixing: epigraph program min t over (theta, q, t)
  JointProgram prog = build_joint(spec, ccp, family, true, opts.t_box);
  const int tix = prog.lay.t_index();
  ScalarFn obj_t = [tix](std::span<const double> z, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[tix] = 1.0;
    return z[tix];
  };

  double best_t = kInf;
  std::vector<double> best_z;
  for (const auto& th0 : starts) {
    std::vector<double> z0 = joint_start(prog.lay, ccp, th0);
    NlpResult r = minimize_constrained(obj_t, prog.inequalities, prog.equalities,
                                       z0, prog.lower, prog.upper);
    if (!r.feasible) continue;
    if (r.x[tix] < best_t) {
      best_t = r.x[tix];
      best_z = r.x;
    }
  }
  if (best_z.empty()) {
    rep.status = SolveReport::Status::stalled;
    return rep;
  }
  rep.theta = theta_of(prog.lay, best_z);
  // exact epigraph value at the returned theta via the LP
  double q = -kInf;
  for (int x = 0; x < spec.n_bins(); ++x) {
    if (bin_dropped(ccp, x)) continue;
    q = std::max(q, mixing_lp_value(spec, rep.theta, ccp, family, x, opts.t_box,
                                    nullptr));
  }
  rep.objective = q;
  rep.max_violation = std::max(0.0, q);
  rep.q.assign(best_z.begin() + prog.lay.d, best_z.begin() + tix);
  rep.status = q <= opts.feas_tol ? SolveReport::Status::optimal
                                  : SolveReport::Status::infeasible;
  return rep;
}

namespace {

bool member_quick(const GameSpec& spec, const Theta& th, const CCPTable& ccp,
                  const InequalityFamily& family, const IdentifyOptions& opts) {
  return criterion_Q(spec, th, ccp, family, opts) <= opts.feas_tol;
}

/// Walk from a feasible point toward a target until membership breaks;
/// returns the last certified-feasible point.
std::vector<double> certify_segment(const GameSpec& spec, const CCPTable& ccp,
                                    const InequalityFamily& family,
                                    const IdentifyOptions& opts,
                                    std::vector<double> feas,
                                    const std::vector<double>& target) {
  auto member_at = [&](const std::vector<double>& th) {
    return member_quick(spec, Theta{th}, ccp, family, opts);
  };
  if (member_at(target)) return target;
  std::vector<double> lo = std::move(feas), hi = target, mid(lo.size());
  for (int it = 0; it < 60; ++it) {
    for (std::size_t i = 0; i < lo.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
    if (member_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

ProjectionResult project(const GameSpec& spec, const CCPTable& ccp,
                         const InequalityFamily& family,
                         const std::vector<double>& p, Sense sense,
                         const IdentifyOptions& opts) {
  if (p.size() != static_cast<std::size_t>(spec.param_dim))
    throw std::invalid_argument("project: direction dimension mismatch");
  double norm = 0.0;
  for (double v : p) norm += v * v;
  if (!(norm > 0.0)) throw std::invalid_argument("project: zero direction");

  std::vector<double> dir = p;
  if (sense == Sense::upper)
    for (double& v : dir) v = -v;  // minimize -p.theta

  ProjectionResult out;
  SolveReport fp = find_feasible_point(spec, ccp, family, opts);
  if (fp.status != SolveReport::Status::optimal) {
    out.report = fp;
    out.report.status = fp.status == SolveReport::Status::stalled
                            ? SolveReport::Status::stalled
                            : SolveReport::Status::infeasible;
    return out;
  }

  JointProgram prog = build_joint(spec, ccp, family, false, opts.t_box);
  const JointLayout lay = prog.lay;
  ScalarFn obj = [dir, lay](std::span<const double> z, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double v = 0.0;
    for (int k = 0; k < lay.d; ++k) {
      v += dir[k] * z[k];
      grad[k] = dir[k];
    }
    return v;
  };

  std::vector<std::vector<double>> theta_starts = latin_hypercube_starts(
      spec.param_lower, spec.param_upper, std::max(1, opts.starts - 1),
      opts.seed + 17);
  theta_starts.insert(theta_starts.begin(), fp.theta.values);

  double best = kInf;
  std::vector<double> best_theta;
  NlpOptions nopts;
  for (const auto& th0 : theta_starts) {
    std::vector<double> z0 = joint_start(lay, ccp, th0);
    NlpResult r = minimize_constrained(obj, prog.inequalities, prog.equalities,
                                       z0, prog.lower, prog.upper, nopts);
    std::vector<double> th(r.x.begin(), r.x.begin() + lay.d);
    if (!member_quick(spec, Theta{th}, ccp, family, opts))
      th = certify_segment(spec, ccp, family, opts, fp.theta.values, th);
    double v = 0.0;
    for (int k = 0; k < lay.d; ++k) v += dir[k] * th[k];
    if (v < best) {
      best = v;
      best_theta = th;
    }
  }

  out.report = fp;
  out.report.theta = Theta{best_theta};
  out.report.status = SolveReport::Status::optimal;
  out.report.objective = best;
  out.report.max_violation = std::max(
      0.0, criterion_Q(spec, Theta{best_theta}, ccp, family, opts));
  out.endpoint = (sense == Sense::upper) ? -best : best;
  return out;
}

double project_bisection(const GameSpec& spec, const CCPTable& ccp,
                         const InequalityFamily& family,
                         const std::vector<double>& p, Sense sense,
                         const Theta& feasible, double level_tol,
                         const IdentifyOptions& opts) {
  if (family.mixing())
    throw std::invalid_argument("project_bisection: no-mixing families only");
  std::vector<double> dir = p;
  if (sense == Sense::lower)
    for (double& v : dir) v = -v;  // maximize dir.theta, flip back at the end

  double dd = 0.0;
  for (double v : dir) dd += v * v;

  const int d = spec.param_dim;
  std::vector<double> base = feasible.values;
  auto level_of = [&](const std::vector<double>& th) {
    double c = 0.0;
    for (int k = 0; k < d; ++k) c += dir[k] * th[k];
    return c;
  };

  // membership of the slice {dir.theta = c}: minimize a sharply smoothed
  // criterion subject to the level equality, then verify with the exact max
  auto slice_feasible = [&](double c, std::vector<double>& seed) {
    ScalarFn obj = [&spec, &ccp, &family](std::span<const double> z,
                                          std::span<double> grad) {
      Theta th{{z.begin(), z.end()}};
      return criterion_Q_smooth(spec, th, ccp, family, 1000.0, grad.data());
    };
    std::vector<ScalarFn> eqs;
    eqs.push_back([dir, c](std::span<const double> z, std::span<double> grad) {
      double s = -c;
      for (std::size_t k = 0; k < dir.size(); ++k) {
        s += dir[k] * z[k];
        grad[k] = dir[k];
      }
      return s;
    });
    std::vector<double> x0 = seed;
    const double shiftc = (c - level_of(x0)) / dd;
    for (int k = 0; k < d; ++k)
      x0[k] = std::clamp(x0[k] + shiftc * dir[k], spec.param_lower[k],
                         spec.param_upper[k]);
    NlpOptions nopts;
    nopts.max_outer = 25;
    nopts.feas_tol = 1e-9;
    nopts.mu0 = 100.0;
    NlpResult r = minimize_constrained(obj, {}, eqs, x0, spec.param_lower,
                                       spec.param_upper, nopts);
    Theta th{{r.x.begin(), r.x.end()}};
    double q = r.feasible ? criterion_Q(spec, th, ccp, family, opts) : kInf;
    if (r.feasible && q > opts.feas_tol) {
      // smoothing leaves a gap of order log(m)/alpha; finish on the exact
      // epigraph program min t s.t. residual_j <= t, dir.theta = c
      JointProgram prog = build_joint(spec, ccp, family, true, opts.t_box);
      const int tix = prog.lay.t_index();
      ScalarFn obj_t = [tix](std::span<const double> z, std::span<double> g2) {
        std::fill(g2.begin(), g2.end(), 0.0);
        g2[tix] = 1.0;
        return z[tix];
      };
      std::vector<ScalarFn> eqs_t;
      eqs_t.push_back(
          [dir, c](std::span<const double> z, std::span<double> g2) {
            std::fill(g2.begin(), g2.end(), 0.0);
            double s = -c;
            for (std::size_t k = 0; k < dir.size(); ++k) {
              s += dir[k] * z[k];
              g2[k] = dir[k];
            }
            return s;
          });
      std::vector<double> z0 = joint_start(prog.lay, ccp, r.x);
      z0[tix] = std::min(opts.t_box, q + 0.1);
      NlpResult re = minimize_constrained(obj_t, prog.inequalities, eqs_t, z0,
                                          prog.lower, prog.upper);
      if (re.feasible) {
        const Theta th2 = theta_of(prog.lay, re.x);
        const double q2 = criterion_Q(spec, th2, ccp, family, opts);
        if (q2 < q) {
          q = q2;
          th = th2;
          r.x.assign(re.x.begin(), re.x.begin() + prog.lay.d);
        }
      }
    }
    const bool ok = q <= opts.feas_tol;
    if (ok) seed = r.x;
    return ok;
  };

  double c_lo = level_of(base);  // feasible level
  // upper bracket: the level at the box corner aligned with dir
  double c_hi = 0.0;
  for (int k = 0; k < d; ++k) {
    const double edge = dir[k] > 0.0 ? spec.param_upper[k] : spec.param_lower[k];
    c_hi += dir[k] * (std::isfinite(edge) ? edge : (dir[k] > 0 ? 16.0 : -16.0));
  }
  std::vector<double> seed = base;
  if (slice_feasible(c_hi, seed)) return (sense == Sense::lower) ? -c_hi : c_hi;

  while (c_hi - c_lo > level_tol) {
    const double mid = 0.5 * (c_lo + c_hi);
    if (slice_feasible(mid, seed))
      c_lo = mid;
    else
      c_hi = mid;
  }
  return (sense == Sense::lower) ? -c_lo : c_lo;
}

}  // namespace gamebounds
