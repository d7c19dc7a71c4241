#include "gamebounds/bounds.hpp"

#include <bit>
#include <cstring>

namespace gamebounds {

double payoff_index(const GameSpec& spec, const Theta& th, int i, int y, int x) {
  return spec.payoff(th, i, y, x);
}

double log_singleton_likelihood(const GameSpec& spec, const Theta& th, int y,
                                int x, double shift, double* grad) {
  const int d = spec.param_dim;
  if (grad) std::fill(grad, grad + d, 0.0);

  std::vector<double> v;      // deviation payoffs of one player
  std::vector<double> gtmp(d);
  double logl = 0.0;
  for (int i = 0; i < spec.n_players; ++i) {
    const int na = spec.n_actions(i);
    v.resize(na);
    for (int a = 0; a < na; ++a) {
      const int yd = spec.replace_action(y, i, a);
      v[a] = spec.payoff(th, i, yd, x, shift);
      if (!std::isfinite(v[a]))
        throw std::domain_error("singleton_likelihood: non-finite payoff index");
    }
    const double lse = log_sum_exp(v);
    const int ai = spec.action_of(y, i);
    logl += v[ai] - lse;
    if (grad) {
      spec.payoff_grad(i, y, x, std::span<double>(gtmp));
      for (int k = 0; k < d; ++k) grad[k] += gtmp[k];
      for (int a = 0; a < na; ++a) {
        const double w = std::exp(v[a] - lse);  // softmax weight
        spec.payoff_grad(i, spec.replace_action(y, i, a), x,
                         std::span<double>(gtmp));
        for (int k = 0; k < d; ++k) grad[k] -= w * gtmp[k];
      }
    }
  }
  return logl;
}

double singleton_likelihood(const GameSpec& spec, const Theta& th, int y, int x,
                            double shift, double* grad) {
  const double logl = log_singleton_likelihood(spec, th, y, x, shift, grad);
  const double l = std::exp(logl);
  if (grad)
    for (int k = 0; k < spec.param_dim; ++k) grad[k] *= l;
  return l;
}

double abj_residual(const GameSpec& spec, const Theta& th, double phi_yx, int y,
                    int x, double shift, double* grad) {
  const double logl = log_singleton_likelihood(spec, th, y, x, shift, grad);
  if (grad)
    for (int k = 0; k < spec.param_dim; ++k) grad[k] = -grad[k];
  if (phi_yx <= 0.0) return -kInf;
  return std::log(phi_yx) - logl;
}

double log_dominant_lower_bound(const GameSpec& spec, const Theta& th, int y,
                                int x, double shift, double* grad) {
  const int d = spec.param_dim;
  if (grad) std::fill(grad, grad + d, 0.0);

  std::vector<double> neg_h;         // -h_i(y_i, a) over deviations a
  std::vector<int> argmin_outcome;   // outcome attaining the min in h
  std::vector<double> g1(d), g2(d);
  double logb = 0.0;

  for (int i = 0; i < spec.n_players; ++i) {
    const int na = spec.n_actions(i);
    const int yi = spec.action_of(y, i);
    neg_h.assign(na, 0.0);
    argmin_outcome.assign(na, -1);
    for (int a = 0; a < na; ++a) {
      if (a == yi) continue;  // h_i(y_i, y_i) = 0
      double h = kInf;
      for (int yo = 0; yo < spec.n_outcomes(); ++yo) {
        if (spec.action_of(yo, i) != yi) continue;
        const double diff = spec.payoff(th, i, yo, x, shift) -
                            spec.payoff(th, i, spec.replace_action(yo, i, a), x,
                                        shift);
        if (diff < h) {
          h = diff;
          argmin_outcome[a] = yo;
        }
      }
      neg_h[a] = -h;
    }
    const double lse = log_sum_exp(neg_h);
    logb -= lse;
    if (grad) {
      for (int a = 0; a < na; ++a) {
        if (a == yi) continue;
        const double w = std::exp(neg_h[a] - lse);
        const int yo = argmin_outcome[a];
        spec.payoff_grad(i, yo, x, std::span<double>(g1));
        spec.payoff_grad(i, spec.replace_action(yo, i, a), x,
                         std::span<double>(g2));
        // d(-lse)/dθ picks up w * d h / dθ at the active minimiser
        for (int k = 0; k < d; ++k) grad[k] += w * (g1[k] - g2[k]);
      }
    }
  }
  return logb;
}

double dominant_lower_bound(const GameSpec& spec, const Theta& th, int y, int x,
                            double shift, double* grad) {
  const double logb = log_dominant_lower_bound(spec, th, y, x, shift, grad);
  const double b = std::exp(logb);
  if (grad)
    for (int k = 0; k < spec.param_dim; ++k) grad[k] *= b;
  return b;
}

BinaryGameView BinaryGameView::build(const GameSpec& spec, const Theta& th,
                                     int x, double shift) {
  if (!spec.is_binary())
    throw UnsupportedStructureError(
        "BinaryGameView: every player must have exactly two actions");
  BinaryGameView v;
  v.n_players = spec.n_players;
  v.n_outcomes = spec.n_outcomes();
  v.param_dim = spec.param_dim;
  v.lo.resize(static_cast<std::size_t>(v.n_players) * v.n_outcomes);
  v.hi.resize(v.lo.size());
  v.finite_grad.assign(v.lo.size() * v.param_dim, 0.0);

  std::vector<double> gin(v.param_dim), gout(v.param_dim);
  for (int i = 0; i < v.n_players; ++i) {
    for (int y = 0; y < v.n_outcomes; ++y) {
      const int y_in = spec.replace_action(y, i, 1);
      const int y_out = spec.replace_action(y, i, 0);
      const double w = spec.payoff(th, i, y_in, x, shift) -
                       spec.payoff(th, i, y_out, x, shift);
      const std::size_t idx = static_cast<std::size_t>(i) * v.n_outcomes + y;
      spec.payoff_grad(i, y_in, x, std::span<double>(gin));
      spec.payoff_grad(i, y_out, x, std::span<double>(gout));
      double* fg = v.finite_grad.data() + idx * v.param_dim;
      // the finite threshold is -w, so its gradient is -(grad in - grad out)
      for (int k = 0; k < v.param_dim; ++k) fg[k] = gout[k] - gin[k];
      if (spec.action_of(y, i) == 1) {
        v.lo[idx] = -w;
        v.hi[idx] = kInf;
      } else {
        v.lo[idx] = -kInf;
        v.hi[idx] = -w;
      }
    }
  }
  return v;
}

double intersection_probability(const BinaryGameView& view,
                                const std::vector<int>& members, double* grad) {
  const int d = view.param_dim;
  if (grad) std::fill(grad, grad + d, 0.0);

  struct Side {
    double z;
    const double* g;  // null when the end is infinite
  };
  std::vector<double> terms(view.n_players);
  std::vector<Side> los(view.n_players), his(view.n_players);

  for (int i = 0; i < view.n_players; ++i) {
    double lmax = -kInf, rmin = kInf;
    const double* glmax = nullptr;
    const double* grmin = nullptr;
    for (int y : members) {
      const double l = view.l(i, y);
      const double r = view.r(i, y);
      if (l > lmax) {
        lmax = l;
        glmax = std::isfinite(l) ? view.grad(i, y) : nullptr;
      }
      if (r < rmin) {
        rmin = r;
        grmin = std::isfinite(r) ? view.grad(i, y) : nullptr;
      }
    }
    const double t = logistic_cdf(rmin) - logistic_cdf(lmax);
    if (t <= 0.0) return 0.0;  // empty interval for player i (gradient 0)
    terms[i] = t;
    los[i] = {lmax, glmax};
    his[i] = {rmin, grmin};
  }

  double prod = 1.0;
  for (int i = 0; i < view.n_players; ++i) prod *= terms[i];
  if (grad) {
    for (int i = 0; i < view.n_players; ++i) {
      const double scale = prod / terms[i];
      if (his[i].g) {
        const double f = logistic_pdf(his[i].z);
        for (int k = 0; k < d; ++k) grad[k] += scale * f * his[i].g[k];
      }
      if (los[i].g) {
        const double f = logistic_pdf(los[i].z);
        for (int k = 0; k < d; ++k) grad[k] -= scale * f * los[i].g[k];
      }
    }
  }
  return prod;
}

double intersection_probability(const GameSpec& spec, const Theta& th,
                                const OutcomeEvent& a, int x, double shift,
                                double* grad) {
  const BinaryGameView view = BinaryGameView::build(spec, th, x, shift);
  return intersection_probability(view, a.members, grad);
}

double union_likelihood(const GameSpec& spec, const Theta& th,
                        const OutcomeEvent& a, int x, double shift, double* grad,
                        int max_members) {
  const int m = static_cast<int>(a.size());
  if (m == 1) return singleton_likelihood(spec, th, a.members[0], x, shift, grad);
  if (m > max_members)
    throw ComplexityError("union_likelihood: event exceeds inclusion-exclusion cap");

  const BinaryGameView view = BinaryGameView::build(spec, th, x, shift);
  const int d = spec.param_dim;
  if (grad) std::fill(grad, grad + d, 0.0);

  std::vector<double> gsub(grad ? d : 0);
  std::vector<int> sub;
  double total = 0.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    sub.clear();
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) sub.push_back(a.members[j]);
    const double sign = (std::popcount(mask) % 2 == 1) ? 1.0 : -1.0;
    const double r = intersection_probability(view, sub, grad ? gsub.data() : nullptr);
    total += sign * r;
    if (grad)
      for (int k = 0; k < d; ++k) grad[k] += sign * gsub[k];
  }
  if (total < 0.0 || total > 1.0) {
    if (total < -1e-10 || total > 1.0 + 1e-10)
      throw std::domain_error("union_likelihood: inclusion-exclusion left [0,1]");
    total = std::clamp(total, 0.0, 1.0);
  }
  return total;
}

std::vector<OutcomeEvent> core_determining_family(const GameSpec& spec,
                                                  const Theta& th, int x,
                                                  int max_cardinality,
                                                  double shift, double zero_tol) {
  const BinaryGameView view = BinaryGameView::build(spec, th, x, shift);
  const int n = spec.n_outcomes();
  if (max_cardinality < 1 || max_cardinality > n)
    throw std::invalid_argument("core_determining_family: bad max cardinality");

  // connectivity between outcomes: y ~ y' iff both can be equilibria at once
  std::vector<std::vector<bool>> connected(n, std::vector<bool>(n, false));
  for (int y = 0; y < n; ++y) {
    connected[y][y] = true;
    for (int z = y + 1; z < n; ++z) {
      const double r = intersection_probability(view, {y, z}, nullptr);
      connected[y][z] = connected[z][y] = (r > zero_tol);
    }
  }

  std::vector<OutcomeEvent> family;
  std::vector<int> members, comp;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) > max_cardinality) continue;
    members.clear();
    for (int y = 0; y < n; ++y)
      if (mask & (1u << y)) members.push_back(y);
    // keep A iff its connectivity graph restricted to A is connected:
    // a disconnected A splits into parts with all cross pairs disconnected,
    // so its inequality is implied by the parts' (disjoint additivity).
    comp.assign(members.size(), 0);
    comp[0] = 1;
    std::size_t reached = 1;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t p = 0; p < members.size(); ++p) {
        if (comp[p]) continue;
        for (std::size_t q = 0; q < members.size(); ++q) {
          if (comp[q] && connected[members[p]][members[q]]) {
            comp[p] = 1;
            ++reached;
            grew = true;
            break;
          }
        }
      }
    }
    if (reached == members.size())
      family.push_back(OutcomeEvent{members});
  }
  return family;
}

double event_bound(const GameSpec& spec, const Theta& th, BoundKind kind,
                   const OutcomeEvent& a, int x, double shift, double* grad) {
  switch (kind) {
    case BoundKind::upper_L:
      if (a.size() != 1)
        throw std::invalid_argument("event_bound: upper_L expects a singleton");
      return singleton_likelihood(spec, th, a.members[0], x, shift, grad);
    case BoundKind::lower_dominant:
      if (a.size() != 1)
        throw std::invalid_argument("event_bound: lower_dominant expects a singleton");
      return dominant_lower_bound(spec, th, a.members[0], x, shift, grad);
    case BoundKind::R_cap:
      return intersection_probability(spec, th, a, x, shift, grad);
    case BoundKind::union_L:
      return union_likelihood(spec, th, a, x, shift, grad);
  }
  throw std::logic_error("event_bound: unknown kind");
}

double mixed_bound(const GameSpec& spec, const Theta& th, const MixingGrid& grid,
                   BoundKind kind, const OutcomeEvent& a, int x, double* grad) {
  grid.validate();
  const int d = spec.param_dim;
  if (grad) std::fill(grad, grad + d, 0.0);
  std::vector<double> gk(grad ? d : 0);
  double total = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double shift = grid.scale * grid.nodes[k];
    total += grid.weights[k] *
             event_bound(spec, th, kind, a, x, shift, grad ? gk.data() : nullptr);
    if (grad)
      for (int j = 0; j < d; ++j) grad[j] += grid.weights[k] * gk[j];
  }
  return total;
}

}  // namespace gamebounds
