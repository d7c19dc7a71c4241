// End-to-end acceptance gate. Each numbered check prints one PASS/FAIL line;
// the exit status is the number of failures.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "gamebounds/bench.hpp"
#include "gamebounds/infer.hpp"
#include "gamebounds/io.hpp"
#include "helpers.hpp"

using namespace gamebounds;
using gbtest::oid;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int hw_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 4 : static_cast<int>(n);
}

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("[%s] %d. %s%s%s\n", ok ? "PASS" : "FAIL", id, title,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_criterion(int id, const char* title,
                   const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(id, title, ok, detail);
}

const GameSpec kSpec = gbtest::entry2();
const Theta kTheta0 = gbtest::theta0();

std::string fmt_interval(double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%.4f, %.4f]", lo, hi);
  return buf;
}

// -------------------------------------------------------------------------

bool criterion1_ccp(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t n = 1000000;
  const auto data = simulate_dataset(kSpec, kTheta0, SelectionRule::uniform(),
                                     {n}, nullptr, 20260824, hw_threads());
  const CCPTable ccp = frequency_ccp(data, 4, 1);
  const CCPTable truth = gbtest::exact_ccp(kSpec, kTheta0);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (int y = 0; y < 4; ++y)
    worst = std::max(worst, std::abs(ccp(y, 0) - truth(y, 0)));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max cell error %.5f (cap 0.003), %.1f s",
                worst, elapsed);
  detail = buf;
  return worst <= 0.003 && elapsed < 30.0;
}

bool criterion2_table1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const CCPTable ccp = gbtest::exact_ccp(kSpec, kTheta0);
  struct Row {
    InequalityFamily fam;
    int coord;
    double lo_ref, hi_ref;
    const char* name;
  };
  const std::vector<Row> rows = {
      {InequalityFamily::sharpK(kSpec, 4), 0, -0.214, 0.193, "sharp beta1"},
      {InequalityFamily::sharpK(kSpec, 4), 2, -0.936, -0.014, "sharp delta1"},
      {InequalityFamily::abj(kSpec), 0, -0.217, 0.196, "abj beta1"},
      {InequalityFamily::abj(kSpec), 2, -0.945, -0.005, "abj delta1"},
  };
  bool ok = true;
  std::string parts;
  for (const auto& row : rows) {
    std::vector<double> p(4, 0.0);
    p[row.coord] = 1.0;
    const double lo = project(kSpec, ccp, row.fam, p, Sense::lower).endpoint;
    const double hi = project(kSpec, ccp, row.fam, p, Sense::upper).endpoint;
    const bool row_ok =
        std::abs(lo - row.lo_ref) <= 0.01 && std::abs(hi - row.hi_ref) <= 0.01;
    ok = ok && row_ok;
    if (!row_ok)
      parts += std::string(parts.empty() ? "" : "; ") + row.name + " " +
               fmt_interval(lo, hi) + " vs ref " +
               fmt_interval(row.lo_ref, row.hi_ref);
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 60.0) {
    ok = false;
    parts += (parts.empty() ? "" : "; ") + std::string("over 60 s budget");
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%.1f s", parts.empty() ? "" : " -- ",
                elapsed);
  detail = parts + buf;
  return ok;
}

/// MC frequency of "every action in y is strictly dominant for its player".
double mc_dominant_frequency(const GameSpec& spec, const Theta& th, int y,
                             std::int64_t draws, std::uint64_t seed) {
  std::atomic<std::int64_t> hits{0};
  const int nt = hw_threads();
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> cursor{0};
  const std::int64_t chunk = 4096;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      std::int64_t local = 0;
      for (;;) {
        const std::int64_t lo = cursor.fetch_add(chunk);
        if (lo >= draws) break;
        const std::int64_t hi = std::min(draws, lo + chunk);
        for (std::int64_t m = lo; m < hi; ++m) {
          Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(m));
          const LatentDraw d = LatentDraw::binary(spec, rng);
          bool dominant = true;
          for (int i = 0; i < spec.n_players && dominant; ++i) {
            const int a = spec.action_of(y, i);
            for (int z = 0; z < spec.n_outcomes() && dominant; ++z) {
              if (spec.action_of(z, i) != a) continue;
              const int dev = spec.replace_action(z, i, 1 - a);
              const double own = spec.payoff(th, i, z, 0) + d.eps[i][a];
              const double other = spec.payoff(th, i, dev, 0) + d.eps[i][1 - a];
              if (!(own > other)) dominant = false;
            }
          }
          if (dominant) ++local;
        }
      }
      hits += local;
    });
  for (auto& t : pool) t.join();
  return static_cast<double>(hits.load()) / static_cast<double>(draws);
}

bool criterion3_closed_forms(std::string& detail) {
  const std::int64_t draws = 1000000;
  Rng rng(606);
  int checks = 0;
  double worst_sigmas = 0.0;
  auto within = [&](double closed, double mc, double se, const char* what,
                    std::string& out) {
    ++checks;
    const double slack = 3.0 * se + 1e-6;
    const double sig = se > 0 ? std::abs(closed - mc) / se : 0.0;
    worst_sigmas = std::max(worst_sigmas, sig);
    if (std::abs(closed - mc) <= slack) return true;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s closed %.6f vs mc %.6f (se %.6f)", what,
                  closed, mc, se);
    out += std::string(out.empty() ? "" : "; ") + buf;
    return false;
  };
  bool ok = true;
  std::string parts;
  for (int rep = 0; rep < 50; ++rep) {
    const GameSpec spec = gbtest::random_binary_spec(rng, 2 + (rep % 2), 3);
    const Theta th = gbtest::random_theta(spec, rng);
    const int ny = spec.n_outcomes();
    const int y1 = static_cast<int>(rng.next() % ny);
    int y2 = static_cast<int>(rng.next() % ny);
    if (y2 == y1) y2 = (y2 + 1) % ny;
    const auto single = OutcomeEvent::of({y1});
    const auto pair = OutcomeEvent::of({y1, y2});
    const std::uint64_t seed = 9000 + rep;

    const auto mc_l1 = mc_bounds(spec, th, 0, single, draws, McKind::L, seed,
                                 nullptr, hw_threads());
    ok = within(singleton_likelihood(spec, th, y1, 0), mc_l1.value,
                mc_l1.std_error, "L(singleton)", parts) && ok;

    const auto mc_r = mc_bounds(spec, th, 0, pair, draws, McKind::R_cap,
                                seed + 100, nullptr, hw_threads());
    ok = within(intersection_probability(spec, th, pair, 0), mc_r.value,
                mc_r.std_error, "R(pair)", parts) && ok;

    const auto mc_l2 = mc_bounds(spec, th, 0, pair, draws, McKind::L, seed + 200,
                                 nullptr, hw_threads());
    ok = within(union_likelihood(spec, th, pair, 0), mc_l2.value,
                mc_l2.std_error, "L(pair)", parts) && ok;

    const double dom_mc = mc_dominant_frequency(spec, th, y1, draws, seed + 300);
    const double dom_se =
        std::sqrt(std::max(dom_mc * (1.0 - dom_mc), 1e-12) / draws);
    ok = within(dominant_lower_bound(spec, th, y1, 0), dom_mc, dom_se,
                "dominant LB", parts) && ok;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d comparisons, worst deviation %.2f se%s%s",
                checks, worst_sigmas, parts.empty() ? "" : " -- ",
                parts.c_str());
  detail = buf;
  return ok;
}

bool criterion4_core_family(std::string& detail) {
  const auto fam = core_determining_family(kSpec, kTheta0, 0, 4);
  const std::vector<OutcomeEvent> expect = {
      OutcomeEvent::of({oid(0, 0)}), OutcomeEvent::of({oid(1, 0)}),
      OutcomeEvent::of({oid(0, 1)}), OutcomeEvent::of({oid(1, 1)}),
      OutcomeEvent::of({oid(1, 0), oid(0, 1)})};
  std::vector<OutcomeEvent> got = fam, want = expect;
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  if (got != want) {
    detail = "family has " + std::to_string(fam.size()) +
             " events, expected the four singletons plus the anti-diagonal pair";
    return false;
  }

  // the dropped inequalities must never flip a membership verdict
  const auto full = InequalityFamily::sharpK(kSpec, 4);
  Rng rng(1234);
  int members = 0, non_members = 0, disagreements = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Theta th = gbtest::random_theta(kSpec, rng, 2.0);
    if (th.values[2] >= 0.0) th.values[2] = -1e-3;
    if (th.values[3] >= 0.0) th.values[3] = -1e-3;
    CCPTable ccp = CCPTable::uniform_like(kSpec);
    if (rep % 2 == 0) {
      ccp = gbtest::exact_ccp(kSpec, th);  // guaranteed member
    } else {
      double s = 0.0;
      std::vector<double> u(4);
      for (auto& v : u) s += (v = 0.05 + rng.uniform());
      for (int y = 0; y < 4; ++y) ccp.at(y, 0) = u[y] / s;
    }
    const double tol = 1e-9;
    double q_core = -kInf;
    for (const auto& a : core_determining_family(kSpec, th, 0, 4))
      q_core = std::max(
          q_core, residual_log(kSpec, th, ccp,
                               Inequality{a, 0,
                                          a.size() == 1 ? BoundKind::upper_L
                                                        : BoundKind::union_L}));
    const double q_full = criterion_Q(kSpec, th, ccp, full);
    const bool in_core = q_core <= tol;
    const bool in_full = q_full <= tol;
    if (in_full) ++members; else ++non_members;
    if (in_core != in_full) ++disagreements;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "%d members / %d non-members tested, %d disagreements", members,
                non_members, disagreements);
  detail = buf;
  return disagreements == 0 && members > 0 && non_members > 0;
}

bool criterion5_convexity(std::string& detail) {
  const CCPTable ccp = gbtest::exact_ccp(kSpec, kTheta0);
  const auto fam = InequalityFamily::abj(kSpec);
  Rng rng(5555);
  int chords = 0;
  double worst = -kInf;
  for (int rep = 0; rep < 2000; ++rep) {
    const Theta a = gbtest::random_theta(kSpec, rng, 2.5);
    const Theta b = gbtest::random_theta(kSpec, rng, 2.5);
    Theta mid;
    for (int k = 0; k < 4; ++k)
      mid.values.push_back(0.5 * (a.values[k] + b.values[k]));
    // each singleton residual is convex in theta
    for (int y = 0; y < 4; ++y) {
      const Inequality item{OutcomeEvent::of({y}), 0, BoundKind::upper_L};
      const double gap = residual_log(kSpec, mid, ccp, item) -
                         0.5 * (residual_log(kSpec, a, ccp, item) +
                                residual_log(kSpec, b, ccp, item));
      worst = std::max(worst, gap);
      ++chords;
    }
    // so is their maximum, hence membership of the singleton-family set
    const double gap_q = criterion_Q(kSpec, mid, ccp, fam) -
                         std::max(criterion_Q(kSpec, a, ccp, fam),
                                  criterion_Q(kSpec, b, ccp, fam));
    worst = std::max(worst, gap_q);
    ++chords;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d chords, worst convexity gap %.2e", chords,
                worst);
  detail = buf;
  return worst <= 1e-9;
}

bool criterion6_gradients(std::string& detail) {
  Rng rng(777);
  int points = 0, failures = 0;
  double worst = 0.0;
  const CCPTable ccp = gbtest::exact_ccp(kSpec, kTheta0);
  std::vector<Inequality> items;
  for (const auto& it : InequalityFamily::abj_lb(kSpec).items) items.push_back(it);
  for (const auto& it : InequalityFamily::sharpK(kSpec, 4).items)
    if (it.a.size() > 1) items.push_back(it);
  while (points < 1000) {
    const Theta th = gbtest::random_theta(kSpec, rng, 2.0);
    for (const auto& item : items) {
      if (points >= 1000) break;
      std::vector<double> grad(4);
      const double val = residual_log(kSpec, th, ccp, item, 0.0, grad.data());
      if (!std::isfinite(val)) continue;
      const auto fd = gbtest::fd_gradient(
          [&](const std::vector<double>& v) {
            return residual_log(kSpec, Theta{v}, ccp, item);
          },
          th.values);
      ++points;
      for (int k = 0; k < 4; ++k) {
        const double err =
            std::abs(grad[k] - fd[k]) / std::max(1.0, std::abs(fd[k]));
        worst = std::max(worst, err);
        if (err > 1e-4) {
          ++failures;
          break;
        }
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d points, worst relative error %.2e", points,
                worst);
  detail = buf;
  return failures == 0;
}

bool criterion7_confidence(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fam = InequalityFamily::abj(kSpec);
  const std::vector<double> p{0.0, 0.0, 1.0, 0.0};
  const CCPTable exact = gbtest::exact_ccp(kSpec, kTheta0);

  // population projection interval (the n = infinity column)
  const double pop_lo = project(kSpec, exact, fam, p, Sense::lower).endpoint;
  const double pop_hi = project(kSpec, exact, fam, p, Sense::upper).endpoint;

  const int reps = 200;
  const std::int64_t n = 2000;
  std::vector<double> lo(reps), hi(reps);
  std::vector<char> rep_ok(reps, 0);
  std::atomic<int> cursor{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < hw_threads(); ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int r = cursor.fetch_add(1);
        if (r >= reps) break;
        const auto data =
            simulate_dataset(kSpec, kTheta0, SelectionRule::uniform(), {n},
                             nullptr, 300000 + static_cast<std::uint64_t>(r), 1);
        const CCPTable ccp = frequency_ccp(data, 4, 1);
        const ConfidenceBand band = fs_band(ccp, 0.05);
        IdentifyOptions opts;
        opts.seed = 17 + static_cast<std::uint64_t>(r);
        const auto l = confidence_project(kSpec, band, fam, p, Sense::lower, opts);
        const auto h = confidence_project(kSpec, band, fam, p, Sense::upper, opts);
        lo[r] = l.endpoint;
        hi[r] = h.endpoint;
        rep_ok[r] = l.report.status == SolveReport::Status::optimal &&
                    h.report.status == SolveReport::Status::optimal;
      }
    });
  for (auto& t : pool) t.join();

  double mean_lo = 0.0, mean_hi = 0.0;
  int covered = 0, solved = 0;
  for (int r = 0; r < reps; ++r) {
    if (!rep_ok[r]) continue;
    ++solved;
    mean_lo += lo[r];
    mean_hi += hi[r];
    if (lo[r] <= pop_lo + 1e-6 && hi[r] >= pop_hi - 1e-6) ++covered;
  }
  mean_lo /= solved;
  mean_hi /= solved;
  const double coverage = static_cast<double>(covered) / solved;
  const double elapsed = seconds_since(t0);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "avg CI %s (ref [-1.41, 0.00]), pop %s (ref [-0.95, 0.00]), "
                "coverage %.3f over %d reps, %.0f s",
                fmt_interval(mean_lo, mean_hi).c_str(),
                fmt_interval(pop_lo, pop_hi).c_str(), coverage, solved, elapsed);
  detail = buf;
  return solved == reps && std::abs(mean_lo - (-1.41)) <= 0.05 &&
         std::abs(mean_hi - 0.0) <= 0.05 && std::abs(pop_lo - (-0.95)) <= 0.01 &&
         std::abs(pop_hi - 0.0) <= 0.01 && coverage >= 0.95 && elapsed < 900.0;
}

bool criterion8_bench(std::string& detail) {
  BenchConfig cfg;
  cfg.bin_counts = {1, 1000};
  cfg.draws = 10000;
  cfg.theta_grid_size = 100000;
  cfg.reps = 1;
  cfg.seed = 5;
  const auto rows = bench_compare(kSpec, kTheta0, cfg);
  const BenchRow* big = nullptr;
  for (const auto& r : rows)
    if (r.bins == 1000) big = &r;
  if (big == nullptr) {
    detail = "no K = 1000 row";
    return false;
  }
  const double closed = std::max(big->abj_seconds, big->sharp_seconds);
  const double ratio = big->ct_seconds / closed;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "K=1000: abj %.2f s, sharp %.2f s, CT extrapolated %.0f s "
                "(ratio %.0fx)",
                big->abj_seconds, big->sharp_seconds, big->ct_seconds, ratio);
  detail = buf;
  return big->abj_seconds < 60.0 && big->sharp_seconds < 60.0 && ratio >= 1e3;
}

bool criterion9_bisection(std::string& detail) {
  const CCPTable ccp = gbtest::exact_ccp(kSpec, kTheta0);
  const auto fam = InequalityFamily::abj(kSpec);
  const auto feas = find_feasible_point(kSpec, ccp, fam);
  if (feas.status != SolveReport::Status::optimal) {
    detail = "no feasible start";
    return false;
  }
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> p(4, 0.0);
    p[k] = 1.0;
    for (Sense sense : {Sense::lower, Sense::upper}) {
      const double direct = project(kSpec, ccp, fam, p, sense).endpoint;
      const double bisect =
          project_bisection(kSpec, ccp, fam, p, sense, feas.theta);
      worst = std::max(worst, std::abs(direct - bisect));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst endpoint gap %.2e (cap 2e-3)", worst);
  detail = buf;
  return worst <= 2e-3;
}

}  // namespace

int main() {
  run_criterion(1, "simulated CCPs reproduce the closed-form values",
                criterion1_ccp);
  run_criterion(2, "exact-CCP projections match the reference intervals",
                criterion2_table1);
  run_criterion(3, "closed-form bounds match Monte Carlo frequencies",
                criterion3_closed_forms);
  run_criterion(4, "core-determining family is minimal and sufficient",
                criterion4_core_family);
  run_criterion(5, "singleton residuals and criterion are convex",
                criterion5_convexity);
  run_criterion(6, "analytic residual gradients match finite differences",
                criterion6_gradients);
  run_criterion(7, "confidence intervals at n=2000 and n=infinity",
                criterion7_confidence);
  run_criterion(8, "closed forms beat simulated grid search by 1000x",
                criterion8_bench);
  run_criterion(9, "bisection endpoints confirm solver endpoints",
                criterion9_bisection);
  if (g_failures > 0)
    std::printf("%d of 9 criteria failed\n", g_failures);
  else
    std::printf("all 9 criteria passed\n");
  return g_failures;
}
