#include <doctest.h>

#include <cmath>
#include <random>

#include "meb/errors.hpp"
#include "meb/estimators.hpp"
#include "meb/rng.hpp"

using namespace meb;

namespace {

ObservedRound round1d(std::int64_t t, double x, int action, double reward,
                      double propensity, double err_var) {
  return {Eigen::VectorXd::Constant(1, x), action,
          reward,                          propensity,
          Eigen::MatrixXd::Constant(1, 1, err_var), t};
}

History two_round_history(double err_var, double prop1 = 0.5, double prop2 = 0.5) {
  History h;
  h.dim = 1;
  h.num_actions = 2;
  h.append(round1d(1, 1.0, 0, 2.0, prop1, err_var));
  h.append(round1d(2, 2.0, 0, 4.0, prop2, err_var));
  return h;
}

// Test-only oracle: re-derives the weighted sums with plain scalar loops in
// round order, independent of SufficientStats.
struct OracleSums {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd errcov;
  Eigen::VectorXd xr;
};

OracleSums oracle_weighted_sums(const History& h, int action,
                                const ReferencePolicySchedule& ref) {
  const int d = h.dim;
  OracleSums s{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d),
               Eigen::VectorXd::Zero(d)};
  for (const auto& r : h.rounds) {
    const double w = ref.probs_at(r.round_index, r.action) / r.propensity;
    if (r.action == action) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          s.gram(i, j) += w * (r.noisy_context(i) * r.noisy_context(j));
        }
        s.xr(i) += (w * r.reward) * r.noisy_context(i);
      }
    }
    const double p = ref.probs_at(r.round_index, action);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) s.errcov(i, j) += p * r.error_cov(i, j);
    }
  }
  return s;
}

History random_history(std::mt19937_64& rng, int d, int t_max, double err_scale,
                       bool propensity_matches_reference) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  History h;
  h.dim = d;
  h.num_actions = 2;
  for (int t = 1; t <= t_max; ++t) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = normal(rng);
    const int action = static_cast<int>(rng() % 2);
    const double prop = propensity_matches_reference ? 0.5 : 0.1 + 0.8 * unif(rng);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    if (err_scale > 0.0) {
      Eigen::MatrixXd a(d, d);
      for (int i = 0; i < d * d; ++i) a(i / d, i % d) = normal(rng);
      cov = err_scale * (a * a.transpose()) / d;
    }
    h.append({x, action, normal(rng), prop, cov, t});
  }
  return h;
}

}  // namespace

TEST_CASE("ridge estimate: closed-form values") {
  History empty;
  empty.dim = 2;
  empty.num_actions = 2;
  CHECK(rls_estimate(empty, 0, 1.0) == Eigen::VectorXd::Zero(2));

  History h = two_round_history(0.0);
  // lambda 0: (1*2 + 2*4) / (1 + 4)
  CHECK(rls_estimate(h, 0, 0.0)(0) == doctest::Approx(2.0).epsilon(1e-12));
  // lambda 5: (2 + 8) / (5 + 5)
  CHECK(rls_estimate(h, 0, 5.0)(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uncorrected estimate: closed-form values") {
  CHECK(naive_me_estimate(two_round_history(0.0), 0)(0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // 10 / ((1 - 0.5) + (4 - 0.5))
  CHECK(naive_me_estimate(two_round_history(0.5), 0)(0) ==
        doctest::Approx(2.5).epsilon(1e-12));
  CHECK_THROWS_AS(naive_me_estimate(two_round_history(0.0), 1), NoDataForAction);
}

TEST_CASE("weighted estimate: closed-form values") {
  const auto ref = ReferencePolicySchedule::uniform(2);
  // all weights 1, no error: collapses to least squares
  CHECK(weighted_me_estimate(two_round_history(0.0), 0, ref)(0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // propensities 1/4 and 3/4: weights 2 and 2/3, gram (2*1 + (2/3)*4)/2 = 7/3,
  // xr (2*2 + (2/3)*8)/2 = 14/3
  CHECK(weighted_me_estimate(two_round_history(0.0, 0.25, 0.75), 0, ref)(0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // error variance 0.5 on both rounds, weights 1:
  // (5/2) / (5/2 - (0.25 + 0.25)/2) = 5 / 2.25
  CHECK(weighted_me_estimate(two_round_history(0.5), 0, ref)(0) ==
        doctest::Approx(5.0 / 2.25).epsilon(1e-12));
}

TEST_CASE("weighted estimate with estimated covariances") {
  const auto ref = ReferencePolicySchedule::uniform(2);

  SUBCASE("exact estimates reproduce the known-covariance value") {
    History h = two_round_history(0.5);
    const auto known = weighted_me_estimate(h, 0, ref);
    std::vector<Eigen::MatrixXd> truth{h.rounds[0].error_cov, h.rounds[1].error_cov};
    const auto est = weighted_me_estimate_estvar(h, 0, ref, &truth);
    CHECK(est.theta == known);
    CHECK(*est.delta_norm == 0.0);
  }

  SUBCASE("single round, unit propensity: 0.5/(0.5 - 0.1)") {
    History h;
    h.dim = 1;
    h.num_actions = 2;
    h.append(round1d(1, 1.0, 0, 1.0, 1.0, 0.2));
    const auto est = weighted_me_estimate_estvar(h, 0, ref);
    CHECK(est.theta(0) == doctest::Approx(1.25).epsilon(1e-12));
  }

  SUBCASE("single round, matched propensity 1/2: 1/(1 - 0.1)") {
    History h;
    h.dim = 1;
    h.num_actions = 2;
    h.append(round1d(1, 1.0, 0, 1.0, 0.5, 0.2));
    const auto est = weighted_me_estimate_estvar(h, 0, ref);
    CHECK(est.theta(0) == doctest::Approx(1.0 / 0.9).epsilon(1e-12));
  }

  SUBCASE("covariance estimate large enough to zero the design is singular") {
    History h;
    h.dim = 1;
    h.num_actions = 2;
    h.append(round1d(1, 1.0, 0, 1.0, 0.5, 2.0));  // gram 1, correction 1
    CHECK_THROWS_AS(weighted_me_estimate_estvar(h, 0, ref), SingularDesign);
  }

  SUBCASE("delta diagnostic is the weighted covariance gap") {
    History h = two_round_history(0.5);
    std::vector<Eigen::MatrixXd> truth{Eigen::MatrixXd::Constant(1, 1, 0.3),
                                       Eigen::MatrixXd::Constant(1, 1, 0.3)};
    const auto est = weighted_me_estimate_estvar(h, 0, ref, &truth);
    // (0.5*(0.5-0.3) + 0.5*(0.5-0.3)) / 2
    CHECK(*est.delta_norm == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("weighted moments") {
  const auto ref = ReferencePolicySchedule::uniform(2);

  SUBCASE("constant moment recovers the target-action frequency") {
    std::mt19937_64 rng(5);
    History h = random_history(rng, 1, 40, 0.0, /*matches_reference=*/true);
    const auto v = weighted_moments(h, 0, ref, {[](const Eigen::VectorXd&, double) {
      return 1.0;
    }});
    std::int64_t n0 = 0;
    for (const auto& r : h.rounds) n0 += (r.action == 0);
    CHECK(v(0) == doctest::Approx(static_cast<double>(n0) / 40.0).epsilon(1e-12));
  }

  SUBCASE("x*r moment on the two-round data") {
    const auto v = weighted_moments(two_round_history(0.0), 0, ref,
                                    {[](const Eigen::VectorXd& x, double r) {
                                      return x(0) * r;
                                    }});
    CHECK(v(0) == doctest::Approx(5.0).epsilon(1e-12));  // (1*2 + 2*4)/2
  }

  SUBCASE("empty history yields zeros") {
    History h;
    h.dim = 1;
    h.num_actions = 2;
    const auto v = weighted_moments(h, 0, ref,
                                    {[](const Eigen::VectorXd&, double) { return 9.9; },
                                     [](const Eigen::VectorXd&, double) { return 1.0; }});
    CHECK(v == Eigen::VectorXd::Zero(2));
  }
}

TEST_CASE("absorb: incremental sums equal the scalar-loop oracle exactly") {
  std::mt19937_64 rng(11);
  const auto ref = ReferencePolicySchedule::uniform(2);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const int t_max = 5 + static_cast<int>(rng() % 46);
    History h = random_history(rng, d, t_max, 0.3, false);

    SufficientStats stats(d, 2);
    for (const auto& r : h.rounds) stats.absorb(r, ref);

    for (int a = 0; a < 2; ++a) {
      const OracleSums oracle = oracle_weighted_sums(h, a, ref);
      CHECK(stats.weighted_gram(a) == oracle.gram);
      CHECK(stats.weighted_errcov(a) == oracle.errcov);
      CHECK(stats.weighted_xr(a) == oracle.xr);
      if (stats.action_count(a) == 0) continue;

      // same conditioned solve applied to the independently built sums
      const double t = static_cast<double>(stats.count());
      const Eigen::VectorXd via_oracle =
          solve_symmetric(oracle.gram / t - oracle.errcov / t, oracle.xr / t).x;
      const Eigen::VectorXd via_stats = weighted_estimate_from_stats(stats, a).theta;
      CHECK(via_stats == via_oracle);
      CHECK(via_stats == weighted_me_estimate(h, a, ref));

      // fully independent solver agrees to tolerance
      const Eigen::VectorXd lu =
          (oracle.gram / t - oracle.errcov / t).fullPivLu().solve(oracle.xr / t);
      CHECK((via_stats - lu).norm() <= 1e-8 * (1.0 + lu.norm()));
    }
  }
}

TEST_CASE("absorb: no data for an action is an error, and actions are independent") {
  const auto ref = ReferencePolicySchedule::uniform(2);
  SufficientStats stats(1, 2);
  CHECK_THROWS_AS(weighted_estimate_from_stats(stats, 0), NoDataForAction);

  const SufficientStats before = stats;
  stats.absorb(round1d(1, 1.0, 1, 2.0, 0.5, 0.0), ref);
  CHECK(stats.weighted_gram(0) == before.weighted_gram(0));
  CHECK(stats.weighted_xr(0) == before.weighted_xr(0));
  CHECK(stats.action_count(0) == 0);
  CHECK(stats.action_count(1) == 1);
  // the covariance correction accrues for every action regardless of a_t
  CHECK(stats.weighted_errcov(0) == stats.weighted_errcov(1));
}

TEST_CASE("functional absorb_round equals member absorb") {
  const auto ref = ReferencePolicySchedule::uniform(2);
  SufficientStats a(1, 2);
  const SufficientStats b = absorb_round(a, round1d(1, 1.0, 0, 2.0, 0.5, 0.1), ref);
  a.absorb(round1d(1, 1.0, 0, 2.0, 0.5, 0.1), ref);
  CHECK(a.weighted_gram(0) == b.weighted_gram(0));
  CHECK(a.count() == b.count());
}

TEST_CASE("reduction: matched propensities collapse the weights") {
  std::mt19937_64 rng(13);
  const auto ref = ReferencePolicySchedule::uniform(2);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    History h = random_history(rng, d, 30, 0.0, /*matches_reference=*/true);
    SufficientStats weighted(d, 2);
    PlainStats plain(d, 2);
    for (const auto& r : h.rounds) {
      weighted.absorb(r, ref);
      plain.absorb(r);
    }
    for (int a = 0; a < 2; ++a) {
      CHECK(weighted.weighted_gram(a).isApprox(plain.gram(a), 1e-14));
      CHECK(weighted.weighted_xr(a).isApprox(plain.xr(a), 1e-14));
      if (weighted.action_count(a) == 0) continue;
      // with zero error covariance the two estimators coincide
      const auto w = weighted_estimate_from_stats(weighted, a).theta;
      const auto n = naive_estimate_from_stats(plain, a).theta;
      CHECK((w - n).norm() <= 1e-10 * (1.0 + n.norm()));
    }
  }
}

TEST_CASE("reduction: zero noise and unit weights equal unregularized least squares") {
  std::mt19937_64 rng(17);
  const auto ref = ReferencePolicySchedule::uniform(2);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 2);
    History h = random_history(rng, d, 40, 0.0, /*matches_reference=*/true);
    for (int a = 0; a < 2; ++a) {
      const auto w = weighted_me_estimate(h, a, ref);
      const auto ls = rls_estimate(h, a, 0.0);
      CHECK((w - ls).norm() <= 1e-10 * (1.0 + ls.norm()));
    }
  }
}

TEST_CASE("singular designs are refused, ridge fallback is recorded when allowed") {
  const auto ref = ReferencePolicySchedule::uniform(2);
  History h;
  h.dim = 2;
  h.num_actions = 2;
  // both rounds share one direction: rank-1 gram, zero error covariance
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
  h.append({x, 0, 1.0, 0.5, Eigen::MatrixXd::Zero(2, 2), 1});
  h.append({2.0 * x, 0, 2.0, 0.5, Eigen::MatrixXd::Zero(2, 2), 2});

  CHECK_THROWS_AS(weighted_me_estimate(h, 0, ref), SingularDesign);

  SufficientStats stats(2, 2);
  for (const auto& r : h.rounds) stats.absorb(r, ref);
  SolveOptions opts;
  opts.allow_ridge_fallback = true;
  const auto est = weighted_estimate_from_stats(stats, 0, opts);
  CHECK(est.regularizer_used > 0.0);
  CHECK(est.condition_number >= 1.0);
  CHECK(est.condition_number <= 1e12);
}

TEST_CASE("all-action report carries diagnostics") {
  std::mt19937_64 rng(23);
  const auto ref = ReferencePolicySchedule::uniform(2);
  History h = random_history(rng, 2, 60, 0.1, false);
  SufficientStats stats(2, 2);
  for (const auto& r : h.rounds) stats.absorb(r, ref);
  const EstimatorReport report = estimate_all(stats, ref);
  REQUIRE(report.theta_hat.size() == 2);
  for (int a = 0; a < 2; ++a) {
    CHECK(report.condition_number[a] >= 1.0);
    CHECK(report.regularizer_used[a] == 0.0);
    CHECK(report.theta_hat[a] == weighted_me_estimate(h, a, ref));
  }
}

TEST_CASE("moment diagnostics on a constant one-dimensional history") {
  const auto ref = ReferencePolicySchedule::uniform(2);
  History h;
  h.dim = 1;
  h.num_actions = 2;
  for (int t = 1; t <= 10; ++t) h.append(round1d(t, 3.0, t % 2, 1.0, 0.5, 0.0));
  const MomentDiagnostics diag = moment_diagnostics(h, ref, 8, 1);
  // scaled observation w = sqrt(1) * 3: second moment 9, fourth moment 81,
  // reference-weighted design 0.5 * 9 per action
  CHECK(diag.nu_hat == doctest::Approx(9.0));
  CHECK(diag.xi_hat == doctest::Approx(81.0));
  CHECK(diag.lambda0_hat == doctest::Approx(4.5));

  History empty;
  empty.dim = 1;
  empty.num_actions = 2;
  const MomentDiagnostics zero = moment_diagnostics(empty, ref);
  CHECK(zero.nu_hat == 0.0);
}

TEST_CASE("weighted second-moment identity (Monte Carlo, reduced scale)") {
  // fixed x, Gaussian error, a context-dependent logging policy bounded below;
  // the weighted gram and xr terms must average to
  // ref(a) (x x^T + Sigma) and ref(a) x x^T theta_a.
  std::mt19937_64 rng = make_stream(99, RngStream::policy);
  const Eigen::Vector2d x(0.6, -0.2);
  const Eigen::Matrix2d sigma =
      (Eigen::Matrix2d() << 0.3, 0.1, 0.1, 0.2).finished();
  const Eigen::Matrix2d chol = sigma.llt().matrixL();
  const Eigen::Vector2d theta0(1.0, -2.0);

  const int n = 30000;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Eigen::Matrix2d gsum = Eigen::Matrix2d::Zero(), gsq = Eigen::Matrix2d::Zero();
  Eigen::Vector2d vsum = Eigen::Vector2d::Zero(), vsq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d eps = chol * Eigen::Vector2d(normal(rng), normal(rng));
    const Eigen::Vector2d xt = x + eps;
    const double p1 = 0.15 + 0.7 / (1.0 + std::exp(-2.0 * xt.sum()));
    const int a = unif(rng) < p1 ? 1 : 0;
    const double w0 = (a == 0) ? 0.5 / (1.0 - p1) : 0.0;
    const double reward = theta0.dot(x) + 0.3 * normal(rng);
    const Eigen::Matrix2d gterm = w0 * (xt * xt.transpose());
    const Eigen::Vector2d vterm = (w0 * reward) * xt;
    gsum += gterm;
    gsq += gterm.cwiseProduct(gterm);
    vsum += vterm;
    vsq += vterm.cwiseProduct(vterm);
  }
  const Eigen::Matrix2d gmean = gsum / n;
  const Eigen::Matrix2d gtarget = 0.5 * (x * x.transpose() + sigma);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double se =
          std::sqrt(std::max(gsq(i, j) / n - gmean(i, j) * gmean(i, j), 0.0) / n);
      CHECK(std::abs(gmean(i, j) - gtarget(i, j)) <= 5.0 * se);
    }
  }
  const Eigen::Vector2d vmean = vsum / n;
  const Eigen::Vector2d vtarget = 0.5 * (x * x.transpose()) * theta0;
  for (int i = 0; i < 2; ++i) {
    const double se = std::sqrt(std::max(vsq(i) / n - vmean(i) * vmean(i), 0.0) / n);
    CHECK(std::abs(vmean(i) - vtarget(i)) <= 5.0 * se);
  }
}
