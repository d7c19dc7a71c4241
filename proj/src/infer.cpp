#include "gamebounds/infer.hpp"

namespace gamebounds {

CCPTable ConfidenceBand::center() const {
  CCPTable t;
  t.n_outcomes = n_outcomes;
  t.bin_counts = bin_counts;
  t.dropped_bins = dropped_bins;
  t.phi.resize(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) t.phi[i] = 0.5 * (lo[i] + hi[i]);
  for (std::int64_t c : bin_counts) t.total += c;
  return t;
}

ConfidenceBand ConfidenceBand::exact(const CCPTable& ccp) {
  ConfidenceBand b;
  b.n_outcomes = ccp.n_outcomes;
  b.bin_counts = ccp.bin_counts;
  b.dropped_bins = ccp.dropped_bins;
  b.lo = ccp.phi;
  b.hi = ccp.phi;
  b.alpha = 0.0;
  b.beta = 0.0;
  return b;
}

CCPTable frequency_ccp(const MarketDataset& data, int n_outcomes, int n_bins) {
  if (data.rows.empty() && n_bins > 0) {
    // allowed: all bins drop
  }
  CCPTable t;
  t.n_outcomes = n_outcomes;
  t.bin_counts.assign(n_bins, 0);
  t.phi.assign(static_cast<std::size_t>(n_bins) * n_outcomes, 0.0);
  for (const auto& row : data.rows) {
    if (row.x_bin < 0 || row.x_bin >= n_bins || row.outcome < 0 ||
        row.outcome >= n_outcomes)
      throw std::out_of_range("frequency_ccp: row outside the spec's index space");
    t.bin_counts[row.x_bin] += 1;
    t.at(row.outcome, row.x_bin) += 1.0;
    t.total += 1;
  }
  for (int x = 0; x < n_bins; ++x) {
    if (t.bin_counts[x] == 0) {
      t.dropped_bins.push_back(x);
      continue;
    }
    for (int y = 0; y < n_outcomes; ++y)
      t.at(y, x) /= static_cast<double>(t.bin_counts[x]);
  }
  return t;
}

ConfidenceBand fs_band(const CCPTable& ccp, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.3))
    throw std::invalid_argument("fs_band: alpha must lie in (0, 0.3)");
  int live_bins = 0;
  for (int x = 0; x < ccp.n_bins(); ++x)
    if (ccp.bin_counts[x] > 0) ++live_bins;
  if (live_bins == 0) throw std::invalid_argument("fs_band: no occupied bins");

  ConfidenceBand b;
  b.n_outcomes = ccp.n_outcomes;
  b.bin_counts = ccp.bin_counts;
  b.dropped_bins = ccp.dropped_bins;
  b.alpha = alpha;
  b.beta = 1.0 - std::pow(1.0 - alpha, 1.0 / live_bins);
  b.beta_warning = b.beta > 0.05 + 1e-12;
  b.lo.assign(ccp.phi.size(), 0.0);
  b.hi.assign(ccp.phi.size(), 1.0);
  const double z = normal_upper_quantile(b.beta / 4.0);
  for (int x = 0; x < ccp.n_bins(); ++x) {
    if (ccp.bin_counts[x] <= 0) continue;
    const double half = z / (2.0 * std::sqrt(static_cast<double>(ccp.bin_counts[x])));
    for (int y = 0; y < ccp.n_outcomes; ++y) {
      const std::size_t i = static_cast<std::size_t>(x) * ccp.n_outcomes + y;
      b.lo[i] = std::max(ccp.phi[i] - half, 0.0);
      b.hi[i] = std::min(ccp.phi[i] + half, 1.0);
    }
  }
  return b;
}

namespace {

bool band_bin_dropped(const ConfidenceBand& band, int x) {
  return std::find(band.dropped_bins.begin(), band.dropped_bins.end(), x) !=
         band.dropped_bins.end();
}

/// Feasibility of the per-bin linear program in (phi [, q]) at fixed theta.
bool bin_feasible(const GameSpec& spec, const Theta& th,
                  const ConfidenceBand& band, const InequalityFamily& family,
                  int x) {
  const int ny = spec.n_outcomes();
  const bool mixing = family.mixing();
  const int K = mixing ? static_cast<int>(family.grid->size()) : 0;
  const int nq = mixing ? K * ny : 0;

  LpProblem lp;
  lp.n = ny + nq;  // phi first, then q[k][y]
  lp.c.assign(lp.n, 0.0);
  lp.lo.assign(lp.n, 0.0);
  lp.hi.assign(lp.n, 1.0);
  for (int y = 0; y < ny; ++y) {
    lp.lo[y] = band.lower(y, x);
    lp.hi[y] = band.upper(y, x);
  }

  auto fresh_row = [&]() {
    LpProblem::Row row;
    row.a.assign(lp.n, 0.0);
    return row;
  };

  {  // phi simplex
    auto row = fresh_row();
    for (int y = 0; y < ny; ++y) row.a[y] = 1.0;
    row.b = 1.0;
    row.op = '=';
    lp.rows.push_back(std::move(row));
  }

  if (!mixing) {
    for (const auto& item : family.items) {
      if (item.x != x) continue;
      auto row = fresh_row();
      if (item.is_upper()) {
        for (int y : item.a.members) row.a[y] = 1.0;
        row.b = event_bound(spec, th, item.kind, item.a, x);
      } else {
        row.a[item.a.members[0]] = -1.0;
        row.b = -dominant_lower_bound(spec, th, item.a.members[0], x);
      }
      row.op = '<';
      lp.rows.push_back(std::move(row));
    }
  } else {
    const MixingGrid& grid = *family.grid;
    for (const auto& item : family.items) {
      if (item.x != x) continue;
      for (int k = 0; k < K; ++k) {
        const double shift = grid.scale * grid.nodes[k];
        auto row = fresh_row();
        if (item.is_upper()) {
          for (int y : item.a.members) row.a[ny + k * ny + y] = 1.0;
          row.b = event_bound(spec, th, item.kind, item.a, x, shift);
        } else {
          row.a[ny + k * ny + item.a.members[0]] = -1.0;
          row.b = -dominant_lower_bound(spec, th, item.a.members[0], x, shift);
        }
        row.op = '<';
        lp.rows.push_back(std::move(row));
      }
    }
    for (int k = 0; k < K; ++k) {  // per-node simplex
      auto row = fresh_row();
      for (int y = 0; y < ny; ++y) row.a[ny + k * ny + y] = 1.0;
      row.b = 1.0;
      row.op = '=';
      lp.rows.push_back(std::move(row));
    }
    for (int y = 0; y < ny; ++y) {  // mixture matches phi
      auto row = fresh_row();
      row.a[y] = -1.0;
      for (int k = 0; k < K; ++k) row.a[ny + k * ny + y] = grid.weights[k];
      row.b = 0.0;
      row.op = '=';
      lp.rows.push_back(std::move(row));
    }
  }

  const LpResult r = solve_lp(lp);
  if (r.status == LpResult::Status::iteration_limit)
    throw std::runtime_error("confidence program: simplex iteration limit");
  return r.status == LpResult::Status::optimal;
}

}  // namespace

bool confidence_membership(const GameSpec& spec, const Theta& th,
                           const ConfidenceBand& band,
                           const InequalityFamily& family,
                           const IdentifyOptions&) {
  if (!spec.in_box(th, 0.0)) return false;
  for (int x = 0; x < spec.n_bins(); ++x) {
    if (band_bin_dropped(band, x)) continue;
    if (!bin_feasible(spec, th, band, family, x)) return false;
  }
  return true;
}

namespace {

struct BandLayout {
  int d = 0, nx = 0, ny = 0, K = 0;
  bool mixing = false;
  bool epigraph = false;

  int phi_index(int x, int y) const { return d + x * ny + y; }
  int q_index(int x, int k, int y) const {
    return d + nx * ny + (x * K + k) * ny + y;
  }
  int t_index() const { return d + nx * ny + (mixing ? nx * K * ny : 0); }
  int size() const { return t_index() + (epigraph ? 1 : 0); }
};

struct BandProgram {
  BandLayout lay;
  std::vector<double> lower, upper;
  std::vector<ScalarFn> inequalities, equalities;
};

BandProgram build_band_program(const GameSpec& spec, const ConfidenceBand& band,
                               const InequalityFamily& family, bool epigraph,
                               double t_box) {
  BandProgram prog;
  BandLayout& lay = prog.lay;
  lay.d = spec.param_dim;
  lay.nx = spec.n_bins();
  lay.ny = spec.n_outcomes();
  lay.mixing = family.mixing();
  lay.K = lay.mixing ? static_cast<int>(family.grid->size()) : 0;
  lay.epigraph = epigraph;

  prog.lower.assign(lay.size(), 0.0);
  prog.upper.assign(lay.size(), 1.0);
  for (int k = 0; k < lay.d; ++k) {
    prog.lower[k] = spec.param_lower[k];
    prog.upper[k] = spec.param_upper[k];
  }
  for (int x = 0; x < lay.nx; ++x)
    for (int y = 0; y < lay.ny; ++y) {
      prog.lower[lay.phi_index(x, y)] = band.lower(y, x);
      prog.upper[lay.phi_index(x, y)] = band.upper(y, x);
    }
  if (epigraph) {
    prog.lower[lay.t_index()] = -t_box;
    prog.upper[lay.t_index()] = t_box;
  }

  for (const auto& item : family.items) {
    if (band_bin_dropped(band, item.x)) continue;
    const int n_nodes = lay.mixing ? lay.K : 1;
    for (int k = 0; k < n_nodes; ++k) {
      const double shift =
          lay.mixing ? family.grid->scale * family.grid->nodes[k] : 0.0;
      prog.inequalities.push_back([&spec, item, lay, shift, k](
                                      std::span<const double> z,
                                      std::span<double> grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        Theta th{{z.begin(), z.begin() + lay.d}};
        auto var_index = [&](int y) {
          return lay.mixing ? lay.q_index(item.x, k, y)
                            : lay.phi_index(item.x, y);
        };
        double r;
        if (item.is_upper()) {
          const double b = event_bound(spec, th, item.kind, item.a, item.x,
                                       shift, grad.data());
          for (int j = 0; j < lay.d; ++j) grad[j] = -grad[j];
          double pa = 0.0;
          for (int y : item.a.members) {
            pa += z[var_index(y)];
            grad[var_index(y)] = 1.0;
          }
          r = pa - b;
        } else {
          const double b = dominant_lower_bound(spec, th, item.a.members[0],
                                                item.x, shift, grad.data());
          grad[var_index(item.a.members[0])] = -1.0;
          r = b - z[var_index(item.a.members[0])];
        }
        if (lay.epigraph) {
          r -= z[lay.t_index()];
          grad[lay.t_index()] = -1.0;
        }
        return r;
      });
    }
  }

  for (int x = 0; x < lay.nx; ++x) {
    if (band_bin_dropped(band, x)) continue;
    prog.equalities.push_back(
        [lay, x](std::span<const double> z, std::span<double> grad) {
          std::fill(grad.begin(), grad.end(), 0.0);
          double s = -1.0;
          for (int y = 0; y < lay.ny; ++y) {
            s += z[lay.phi_index(x, y)];
            grad[lay.phi_index(x, y)] = 1.0;
          }
          return s;
        });
    if (lay.mixing) {
      const MixingGrid grid = *family.grid;
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
        prog.equalities.push_back([lay, grid, x, y](std::span<const double> z,
                                                    std::span<double> grad) {
          std::fill(grad.begin(), grad.end(), 0.0);
          double s = -z[lay.phi_index(x, y)];
          grad[lay.phi_index(x, y)] = -1.0;
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

std::vector<double> band_start(const BandLayout& lay, const ConfidenceBand& band,
                               std::span<const double> theta0) {
  std::vector<double> z(lay.size(), 0.0);
  std::copy(theta0.begin(), theta0.end(), z.begin());
  for (int x = 0; x < lay.nx; ++x) {
    // start phi at the band midpoint renormalized onto the simplex
    double s = 0.0;
    std::vector<double> mid(lay.ny);
    for (int y = 0; y < lay.ny; ++y) {
      mid[y] = 0.5 * (band.lower(y, x) + band.upper(y, x));
      s += mid[y];
    }
    for (int y = 0; y < lay.ny; ++y) {
      const double v = s > 0.0 ? mid[y] / s : 1.0 / lay.ny;
      z[lay.phi_index(x, y)] = std::clamp(v, band.lower(y, x), band.upper(y, x));
      if (lay.mixing)
        for (int k = 0; k < lay.K; ++k) z[lay.q_index(x, k, y)] = v;
    }
  }
  if (lay.epigraph) z[lay.t_index()] = 1.0;
  return z;
}

}  // namespace

ProjectionResult confidence_project(const GameSpec& spec,
                                    const ConfidenceBand& band,
                                    const InequalityFamily& family,
                                    const std::vector<double>& p, Sense sense,
                                    const IdentifyOptions& opts) {
  if (band.degenerate(1e-12))
    return project(spec, band.center(), family, p, sense, opts);

  std::vector<double> dir = p;
  if (sense == Sense::upper)
    for (double& v : dir) v = -v;

  ProjectionResult out;
  out.report.starts_used = opts.starts;

  // phase 0: feasible point of the joint program via the epigraph form
  BandProgram feas_prog = build_band_program(spec, band, family, true, opts.t_box);
  const int tix = feas_prog.lay.t_index();
  ScalarFn obj_t = [tix](std::span<const double> z, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[tix] = 1.0;
    return z[tix];
  };

  const auto theta_starts = latin_hypercube_starts(
      spec.param_lower, spec.param_upper, std::max(1, opts.starts), opts.seed);

  std::vector<double> feas_theta;
  for (const auto& th0 : theta_starts) {
    std::vector<double> z0 = band_start(feas_prog.lay, band, th0);
    NlpResult r = minimize_constrained(obj_t, feas_prog.inequalities,
                                       feas_prog.equalities, z0,
                                       feas_prog.lower, feas_prog.upper);
    if (!r.feasible || r.x[tix] > opts.feas_tol) continue;
    Theta th{{r.x.begin(), r.x.begin() + feas_prog.lay.d}};
    if (confidence_membership(spec, th, band, family, opts)) {
      feas_theta = th.values;
      break;
    }
  }
  if (feas_theta.empty()) {
    out.report.status = SolveReport::Status::infeasible;
    return out;
  }

  // phase 1: push p.theta from every start, certify by the exact LP check
  BandProgram prog = build_band_program(spec, band, family, false, opts.t_box);
  const BandLayout lay = prog.lay;
  ScalarFn obj = [dir, lay](std::span<const double> z, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double v = 0.0;
    for (int k = 0; k < lay.d; ++k) {
      v += dir[k] * z[k];
      grad[k] = dir[k];
    }
    return v;
  };

  auto member_at = [&](const std::vector<double>& th) {
    return confidence_membership(spec, Theta{th}, band, family, opts);
  };

  std::vector<std::vector<double>> starts = theta_starts;
  starts.insert(starts.begin(), feas_theta);

  std::vector<double> best_theta = feas_theta;
  double best = 0.0;
  for (int k = 0; k < lay.d; ++k) best += dir[k] * feas_theta[k];

  for (const auto& th0 : starts) {
    std::vector<double> z0 = band_start(lay, band, th0);
    NlpResult r = minimize_constrained(obj, prog.inequalities, prog.equalities,
                                       z0, prog.lower, prog.upper);
    std::vector<double> th(r.x.begin(), r.x.begin() + lay.d);
    if (!member_at(th)) {
      // pull back toward the known member until the LP certificate holds
      std::vector<double> lo = feas_theta, hi = th, mid(th.size());
      for (int it = 0; it < 60; ++it) {
        for (std::size_t i = 0; i < lo.size(); ++i)
          mid[i] = 0.5 * (lo[i] + hi[i]);
        if (member_at(mid))
          lo = mid;
        else
          hi = mid;
      }
      th = lo;
    }
    double v = 0.0;
    for (int k = 0; k < lay.d; ++k) v += dir[k] * th[k];
    if (v < best) {
      best = v;
      best_theta = th;
    }
  }

  out.report.status = SolveReport::Status::optimal;
  out.report.theta = Theta{best_theta};
  out.report.objective = best;
  out.report.max_violation = 0.0;  // endpoint carries an exact LP certificate
  out.endpoint = (sense == Sense::upper) ? -best : best;
  return out;
}

}  // namespace gamebounds
