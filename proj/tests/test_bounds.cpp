#include <doctest.h>

#include "helpers.hpp"

using namespace gamebounds;
using gbtest::oid;

namespace {
const GameSpec kSpec = gbtest::entry2();
const Theta kTheta0 = gbtest::theta0();
}  // namespace

TEST_CASE("singleton likelihood closed forms") {
  // both out: each player independently prefers out, F(0) * F(0)
  CHECK(singleton_likelihood(kSpec, kTheta0, oid(0, 0), 0) == doctest::Approx(0.25));
  // both in: (1 - F(0.5))^2
  const double f05 = logistic_cdf(0.5);
  CHECK(singleton_likelihood(kSpec, kTheta0, oid(1, 1), 0) ==
        doctest::Approx((1.0 - f05) * (1.0 - f05)));
  CHECK(singleton_likelihood(kSpec, kTheta0, oid(1, 1), 0) ==
        doctest::Approx(0.142537).epsilon(1e-5));
}

TEST_CASE("likelihoods sum to one without strategic interaction") {
  const Theta th{{0.37, -0.82, 0.0, 0.0}};
  double s = 0.0;
  for (int y = 0; y < 4; ++y) s += singleton_likelihood(kSpec, th, y, 0);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("likelihood sum exceeds one under multiplicity") {
  double s = 0.0;
  for (int y = 0; y < 4; ++y) s += singleton_likelihood(kSpec, kTheta0, y, 0);
  const double overlap = intersection_probability(
      kSpec, kTheta0, OutcomeEvent::of({oid(1, 0), oid(0, 1)}), 0);
  CHECK(s > 1.0);
  CHECK(s == doctest::Approx(1.0 + overlap).epsilon(1e-12));
}

TEST_CASE("log residual against observed probabilities") {
  const Theta zeros{{0.0, 0.0, 0.0, 0.0}};
  // phi(0,1) = 0.304 against the interaction-free likelihood 0.25
  const double g = abj_residual(kSpec, zeros, 0.304, oid(0, 1), 0);
  CHECK(g == doctest::Approx(std::log(0.304 / 0.25)).epsilon(1e-12));
  CHECK(g == doctest::Approx(0.19556).epsilon(1e-4));
  CHECK(g > 0.0);  // violated

  CHECK(abj_residual(kSpec, zeros, 0.0, oid(0, 1), 0) == -kInf);

  // the data-generating parameter satisfies its own bounds
  const CCPTable ccp = gbtest::exact_ccp(kSpec, kTheta0);
  for (int y = 0; y < 4; ++y)
    CHECK(abj_residual(kSpec, kTheta0, ccp(y, 0), y, 0) <= 1e-12);
}

TEST_CASE("dominant-strategy lower bound") {
  // out is dominant when the monopoly payoff is already negative:
  // factor F(-beta_i) for y_i = 0 under delta <= 0
  const Theta th{{0.4, -0.3, -0.7, -0.2}};
  const double b = dominant_lower_bound(kSpec, th, oid(0, 0), 0);
  CHECK(b == doctest::Approx(logistic_cdf(-0.4) * logistic_cdf(0.3)).epsilon(1e-12));

  // at theta0 and (1,1) the bound coincides with the likelihood
  CHECK(dominant_lower_bound(kSpec, kTheta0, oid(1, 1), 0) ==
        doctest::Approx(0.142537).epsilon(1e-5));
}

TEST_CASE("lower bound never exceeds the likelihood") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const GameSpec spec = gbtest::random_binary_spec(rng, 2 + (rep % 2), 3);
    const Theta th = gbtest::random_theta(spec, rng);
    for (int y = 0; y < spec.n_outcomes(); ++y) {
      CHECK(dominant_lower_bound(spec, th, y, 0) <=
            singleton_likelihood(spec, th, y, 0) + 1e-12);
    }
  }
}

TEST_CASE("intersection probability of the multiplicity pair") {
  const OutcomeEvent pair = OutcomeEvent::of({oid(0, 1), oid(1, 0)});
  const double r = intersection_probability(kSpec, kTheta0, pair, 0);
  const double width = logistic_cdf(0.5) - logistic_cdf(0.0);
  CHECK(r == doctest::Approx(width * width).epsilon(1e-12));
  CHECK(r == doctest::Approx(0.0149963).epsilon(1e-4));

  // (0,0) and (1,1) cannot both be equilibria here
  CHECK(intersection_probability(kSpec, kTheta0,
                                 OutcomeEvent::of({oid(0, 0), oid(1, 1)}), 0) == 0.0);

  // singletons reduce to the likelihood
  for (int y = 0; y < 4; ++y)
    CHECK(intersection_probability(kSpec, kTheta0, OutcomeEvent::of({y}), 0) ==
          doctest::Approx(singleton_likelihood(kSpec, kTheta0, y, 0)).epsilon(1e-12));
}

TEST_CASE("union likelihood via inclusion-exclusion") {
  const OutcomeEvent pair = OutcomeEvent::of({oid(0, 1), oid(1, 0)});
  const double l = union_likelihood(kSpec, kTheta0, pair, 0);
  CHECK(l == doctest::Approx(0.311230 + 0.311230 - 0.014996).epsilon(1e-4));
  CHECK(l == doctest::Approx(0.607463).epsilon(1e-5));

  // an equilibrium always exists for this sign pattern
  CHECK(union_likelihood(kSpec, kTheta0, OutcomeEvent::of({0, 1, 2, 3}), 0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("event monotonicity") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const GameSpec spec = gbtest::random_binary_spec(rng, 2, 4);
    const Theta th = gbtest::random_theta(spec, rng);
    const OutcomeEvent small = OutcomeEvent::of({0, 3});
    const OutcomeEvent big = OutcomeEvent::of({0, 1, 3});
    CHECK(union_likelihood(spec, th, small, 0) <=
          union_likelihood(spec, th, big, 0) + 1e-12);
    CHECK(intersection_probability(spec, th, small, 0) + 1e-12 >=
          intersection_probability(spec, th, big, 0));
  }
}

TEST_CASE("log-concavity of the singleton likelihood in theta") {
  Rng rng(31337);
  for (int rep = 0; rep < 500; ++rep) {
    const GameSpec spec = gbtest::random_binary_spec(rng, 2 + (rep % 2), 3);
    const Theta a = gbtest::random_theta(spec, rng);
    const Theta b = gbtest::random_theta(spec, rng);
    const double lam = rng.uniform();
    Theta mid;
    for (int k = 0; k < spec.param_dim; ++k)
      mid.values.push_back(lam * a.values[k] + (1.0 - lam) * b.values[k]);
    for (int y = 0; y < spec.n_outcomes(); ++y) {
      const double lmid = log_singleton_likelihood(spec, mid, y, 0);
      const double chord = lam * log_singleton_likelihood(spec, a, y, 0) +
                           (1.0 - lam) * log_singleton_likelihood(spec, b, y, 0);
      CHECK(lmid >= chord - 1e-9);
    }
  }
}

TEST_CASE("disjoint additivity of the union") {
  // with delta = 0 every pair is disconnected, so unions add up
  const Theta th{{0.25, -0.4, 0.0, 0.0}};
  for (int y = 0; y < 4; ++y)
    for (int z = y + 1; z < 4; ++z) {
      if (intersection_probability(kSpec, th, OutcomeEvent::of({y, z}), 0) > 1e-14)
        continue;
      const double joint = union_likelihood(kSpec, th, OutcomeEvent::of({y, z}), 0);
      const double parts = union_likelihood(kSpec, th, OutcomeEvent::of({y}), 0) +
                           union_likelihood(kSpec, th, OutcomeEvent::of({z}), 0);
      CHECK(joint == doctest::Approx(parts).epsilon(1e-12));
    }
}

TEST_CASE("core-determining family on the entry game") {
  // delta < 0: four singletons plus the anti-coordination pair
  const auto fam = core_determining_family(kSpec, kTheta0, 0, 4);
  REQUIRE(fam.size() == 5);
  std::vector<OutcomeEvent> expect = {
      OutcomeEvent::of({0}), OutcomeEvent::of({1}), OutcomeEvent::of({2}),
      OutcomeEvent::of({3}), OutcomeEvent::of({oid(1, 0), oid(0, 1)})};
  for (const auto& e : expect)
    CHECK(std::find(fam.begin(), fam.end(), e) != fam.end());

  // K = 1 truncates to singletons
  CHECK(core_determining_family(kSpec, kTheta0, 0, 1).size() == 4);

  // delta = 0 degenerates the multiplicity rectangle: singletons only
  const Theta flat{{0.0, 0.0, 0.0, 0.0}};
  CHECK(core_determining_family(kSpec, flat, 0, 4).size() == 4);
}

TEST_CASE("binary game view threshold structure") {
  const BinaryGameView v = BinaryGameView::build(kSpec, kTheta0, 0);
  for (int i = 0; i < 2; ++i)
    for (int y = 0; y < 4; ++y) {
      const bool entering = kSpec.action_of(y, i) == 1;
      CHECK((entering ? v.r(i, y) == kInf : v.l(i, y) == -kInf));
      CHECK(v.l(i, y) <= v.r(i, y));
    }
  // player 1 entering against an entrant needs xi >= -(beta1 + delta1) = 0.5
  CHECK(v.l(0, oid(1, 1)) == doctest::Approx(0.5));
  CHECK(v.l(0, oid(1, 0)) == doctest::Approx(0.0));
}

TEST_CASE("non-binary games are rejected by interval machinery") {
  GameSpec spec = gbtest::entry2();
  spec.action_labels[0] = {"out", "small", "large"};
  const int ny = 3 * 2;
  spec.coeff.assign(2 * ny * 1 * 4, 0.0);
  spec.offset.assign(2 * ny * 1, 0.0);
  spec.finalize();
  const Theta th{{0.0, 0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(intersection_probability(spec, th, OutcomeEvent::of({0, 1}), 0),
                  UnsupportedStructureError);
  CHECK_THROWS_AS(core_determining_family(spec, th, 0, 2),
                  UnsupportedStructureError);
  // singleton likelihood still fine in the general game
  double s = 0.0;
  for (int y = 0; y < ny; ++y) s += singleton_likelihood(spec, th, y, 0);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixed bounds") {
  const OutcomeEvent both_in = OutcomeEvent::of({oid(1, 1)});
  // degenerate mixing equals the unmixed bound
  MixingGrid degenerate = MixingGrid::logistic_quantiles(11, 0.0);
  CHECK(mixed_bound(kSpec, kTheta0, degenerate, BoundKind::upper_L, both_in, 0) ==
        doctest::Approx(singleton_likelihood(kSpec, kTheta0, oid(1, 1), 0)));

  // convex combination stays between the per-node extremes
  const MixingGrid grid = MixingGrid::logistic_quantiles(7, 0.8);
  double lo = kInf, hi = -kInf;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = singleton_likelihood(kSpec, kTheta0, oid(1, 1), 0,
                                          grid.scale * grid.nodes[k]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mixed =
      mixed_bound(kSpec, kTheta0, grid, BoundKind::upper_L, both_in, 0);
  CHECK(mixed >= lo - 1e-14);
  CHECK(mixed <= hi + 1e-14);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(99);
  const OutcomeEvent pair = OutcomeEvent::of({1, 2});
  for (int rep = 0; rep < 100; ++rep) {
    const GameSpec spec = gbtest::random_binary_spec(rng, 2, 4);
    const Theta th = gbtest::random_theta(spec, rng);
    const int y = static_cast<int>(rng.next() % spec.n_outcomes());
    std::vector<double> grad(spec.param_dim);

    auto check_grad = [&](auto&& fn) {
      const auto fd = gbtest::fd_gradient(
          [&](const std::vector<double>& v) { return fn(Theta{v}, nullptr); },
          th.values);
      fn(th, grad.data());
      for (int k = 0; k < spec.param_dim; ++k) {
        const double scale = std::max({1.0, std::abs(fd[k]), std::abs(grad[k])});
        CHECK(std::abs(grad[k] - fd[k]) / scale < 1e-4);
      }
    };

    check_grad([&](const Theta& t, double* g) {
      return log_singleton_likelihood(spec, t, y, 0, 0.0, g);
    });
    check_grad([&](const Theta& t, double* g) {
      return log_dominant_lower_bound(spec, t, y, 0, 0.0, g);
    });
    check_grad([&](const Theta& t, double* g) {
      return union_likelihood(spec, t, pair, 0, 0.0, g);
    });
    if (intersection_probability(spec, th, pair, 0) > 1e-6) {
      check_grad([&](const Theta& t, double* g) {
        return intersection_probability(spec, t, pair, 0, 0.0, g);
      });
    }
  }
}
