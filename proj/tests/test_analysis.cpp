#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qm2arl/analysis.hpp"
#include "qm2arl/envs.hpp"
#include "qm2arl/qnn.hpp"
#include "qm2arl/rng.hpp"
#include "qm2arl/train.hpp"

using namespace qm2arl;

namespace {

constexpr double kPi = std::numbers::pi;

qnn::AngleParams random_angles(const qnn::QnnConfig& cfg, Rng& rng) {
    qnn::AngleParams phi(static_cast<std::size_t>(cfg.num_angles()));
    for (double& v : phi) v = rng.uniform(-kPi, kPi);
    return phi;
}

qnn::QnnConfig two_qubit_config() {
    qnn::QnnConfig cfg;
    cfg.num_qubits = 2;
    cfg.depth = 2;
    cfg.beta = 8.0;
    cfg.action_qubits = {{1}, {2}};
    return cfg;
}

}  // namespace

TEST_CASE("noise contraction: E[Q_noisy] = sinc(alpha) * Q_clean") {
    const qnn::QnnConfig cfg = qnn::twostep_default_config();
    Rng rng(101);
    const qnn::AngleParams phi = random_angles(cfg, rng);
    qnn::PoleParams theta(6);
    for (double& v : theta) v = rng.uniform(-1.0, 1.0);
    const qnn::Observation o = {kPi / 2.0, 0.0, kPi / 2.0};

    for (double alpha : {kPi / 6.0, kPi / 3.0, kPi / 2.0}) {
        const analysis::LemmaReport rep =
            analysis::lemma1_check(cfg, phi, theta, alpha, o, 1, 20000, 99);
        CHECK(rep.alpha == alpha);
        CHECK(rep.sample_count == 20000);
        CHECK(rep.standard_error > 0.0);
        const double q_clean = qnn::q_value(cfg, o, 1, phi, theta);
        CHECK(rep.analytic_prediction ==
              doctest::Approx(std::sin(alpha) / alpha * q_clean).epsilon(1e-12));
        CHECK(std::abs(rep.monte_carlo_estimate - rep.analytic_prediction) <=
              5.0 * rep.standard_error + 1e-3);
        CHECK(rep.pass);
    }

    // alpha = 0 short-circuits: the estimate is the clean value itself.
    const analysis::LemmaReport zero = analysis::lemma1_check(cfg, phi, theta, 0.0, o, 0, 10, 1);
    CHECK(zero.pass);
    CHECK(zero.sample_count == 0);
    CHECK(zero.monte_carlo_estimate == doctest::Approx(zero.analytic_prediction).epsilon(1e-14));

    CHECK_THROWS_AS(analysis::lemma1_check(cfg, phi, theta, -0.1, o, 0, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(analysis::lemma1_check(cfg, phi, theta, kPi + 0.1, o, 0, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(analysis::lemma1_check(cfg, phi, theta, 0.5, o, 0, 1, 1),
                    std::invalid_argument);
}

TEST_CASE("gradient-variance bound holds on single-qubit action maps") {
    const qnn::QnnConfig cfg = two_qubit_config();
    Rng rng(202);
    const qnn::AngleParams phi = random_angles(cfg, rng);
    const qnn::AngleParams phi_target = random_angles(cfg, rng);
    const qnn::PoleParams theta(4, 0.0);

    train::MetaEpisode episode;
    train::MetaStep step;
    step.obs = {rng.uniform(0.0, kPi), rng.uniform(0.0, kPi)};
    step.action = 0;
    step.reward = -9.0;  // keeps the residual constant non-positive
    step.next_obs = step.obs;
    step.terminal = true;
    step.noise.assign(4, 0.0);
    episode.push_back(step);

    for (int k : {0, 5, 11}) {
        const analysis::Lemma3Report rep =
            analysis::lemma3_check(cfg, phi, phi_target, theta, kPi / 3.0, episode, k, 20000, 7);
        CHECK(rep.sample_count == 20000);
        CHECK(rep.variance_estimate >= 0.0);
        CHECK(rep.variance_estimate <= rep.bound + 5.0 * rep.standard_error);
        CHECK(rep.pass);
    }

    // A two-transition episode exercises the mean over steps.
    train::MetaStep second = step;
    second.reward = -8.5;
    second.terminal = false;
    episode.push_back(second);
    const analysis::Lemma3Report rep2 =
        analysis::lemma3_check(cfg, phi, phi_target, theta, kPi / 4.0, episode, 3, 20000, 8);
    CHECK(rep2.pass);

    CHECK_THROWS_AS(analysis::lemma3_check(cfg, phi, phi_target, theta, kPi / 3.0,
                                           train::MetaEpisode{}, 0, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        analysis::lemma3_check(cfg, phi, phi_target, theta, kPi / 3.0, episode, 12, 100, 1),
        std::out_of_range);
    CHECK_THROWS_AS(
        analysis::lemma3_check(cfg, phi, phi_target, theta, kPi / 3.0, episode, -1, 100, 1),
        std::out_of_range);

    qnn::QnnConfig multi = cfg;
    multi.action_qubits = {{1, 2}, {2}};
    CHECK_THROWS_AS(analysis::lemma3_check(multi, phi, phi_target, theta, kPi / 3.0, episode, 0,
                                           100, 1),
                    std::invalid_argument);
}

TEST_CASE("pole grid probe geometry and closed-form values") {
    const qnn::QnnConfig cfg = qnn::twostep_default_config();
    const qnn::AngleParams phi(45, 0.0);
    const qnn::Observation s1 = {0.0, 0.0, 0.0};

    // Single action 0 measures qubit 2 only: coordinates are its (polar,
    // azimuth) pair. On |000...> the value is beta * cos(polar), azimuth-flat.
    const analysis::PoleGrid g0 = analysis::pole_grid_probe(cfg, phi, s1, {0}, "s1");
    CHECK(g0.state_label == "s1");
    REQUIRE(g0.axis_values.size() == 33);
    CHECK(g0.axis_values.front() == doctest::Approx(-kPi).epsilon(1e-15));
    CHECK(g0.axis_values[16] == 0.0);  // exact midpoint
    CHECK(g0.axis_values.back() == doctest::Approx(kPi).epsilon(1e-15));
    for (std::size_t i = 1; i < 33; ++i) {
        CHECK(g0.axis_values[i] - g0.axis_values[i - 1] ==
              doctest::Approx(kPi / 16.0).epsilon(1e-12));
    }
    REQUIRE(g0.values.size() == 33);
    for (std::size_t i = 0; i < 33; ++i) {
        REQUIRE(g0.values[i].size() == 33);
        const double expect = 8.0 * std::cos(g0.axis_values[i]);
        for (std::size_t j = 0; j < 33; ++j) {
            CHECK(g0.values[i][j] == doctest::Approx(expect).scale(1.0).epsilon(1e-10));
        }
    }

    // Default action set covers both measured qubits: the scan runs over the
    // two polar angles and maximizes over the actions, so the zero-pole cell
    // carries max(8, 8) and every cell max(8cos(t1), 8cos(t2)).
    const analysis::PoleGrid gall = analysis::pole_grid_probe(cfg, phi, s1);
    CHECK(gall.values[16][16] == doctest::Approx(8.0).epsilon(1e-10));
    for (std::size_t i = 0; i < 33; i += 4) {
        for (std::size_t j = 0; j < 33; j += 4) {
            const double expect = 8.0 * std::max(std::cos(gall.axis_values[i]),
                                                 std::cos(gall.axis_values[j]));
            CHECK(gall.values[i][j] == doctest::Approx(expect).scale(1.0).epsilon(1e-10));
        }
    }

    CHECK_THROWS_AS(analysis::pole_grid_probe(cfg, phi, s1, {2}), std::out_of_range);
}

TEST_CASE("normalized distance grid") {
    analysis::PoleGrid grid;
    grid.axis_values = {0.0, 1.0};
    grid.values = {{1.0, 2.0}, {3.0, 5.0}};

    const auto d = analysis::d_norm(grid, 1.0);
    REQUIRE(d.size() == 2);
    CHECK(d[0][0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(d[0][1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d[1][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d[1][1] == doctest::Approx(1.0).epsilon(1e-14));

    // A flat grid equal to the target is all zeros.
    analysis::PoleGrid flat = grid;
    flat.values = {{4.0, 4.0}, {4.0, 4.0}};
    const auto zeros = analysis::d_norm(flat, 4.0);
    for (const auto& row : zeros)
        for (double v : row) CHECK(v == 0.0);

    // A flat grid away from the target cannot be normalized.
    CHECK_THROWS_AS(analysis::d_norm(flat, 5.0), std::domain_error);

    analysis::PoleGrid empty;
    CHECK_THROWS_AS(analysis::d_norm(empty, 1.0), std::invalid_argument);
}

TEST_CASE("optimal-Q distance: zero parameters and a hand-built optimum") {
    const qnn::QnnConfig cfg = qnn::twostep_default_config();
    const qnn::AngleParams phi(45, 0.0);
    const std::vector<qnn::PoleParams> zeros(2, qnn::PoleParams(6, 0.0));

    // Zero poles tie at s1 (route to s2, regret 1) and pick (0,0) at s3
    // (regret 8): distance 9. EnvB's matrix rewards (0,0), so only the s2
    // route costs anything (8 - 4); EnvA loses both (8 + 4).
    CHECK(analysis::optimal_q_distance(envs::TwoStepVariant::Main, cfg, phi, zeros) ==
          doctest::Approx(9.0).epsilon(1e-12));
    CHECK(analysis::optimal_q_distance(envs::TwoStepVariant::EnvB, cfg, phi, zeros) ==
          doctest::Approx(4.0).epsilon(1e-12));
    CHECK(analysis::optimal_q_distance(envs::TwoStepVariant::EnvA, cfg, phi, zeros) ==
          doctest::Approx(12.0).epsilon(1e-12));

    // Poles steering both agents to route s3 and play (1,1) reach the Main
    // cooperative optimum exactly: distance 0.
    qnn::PoleParams steer(6, 0.0);
    steer[(std::size_t)qnn::pole_polar_index(2)] = kPi / 2.0;
    steer[(std::size_t)qnn::pole_polar_index(3)] = kPi / 4.0;
    const std::vector<qnn::PoleParams> steered(2, steer);
    CHECK(analysis::optimal_q_distance(envs::TwoStepVariant::Main, cfg, phi, steered) == 0.0);

    CHECK_THROWS_AS(analysis::optimal_q_distance(envs::TwoStepVariant::Main, cfg, phi, {zeros[0]}),
                    std::invalid_argument);
}

TEST_CASE("meta q-table rows at the probe states") {
    const qnn::QnnConfig cfg = qnn::twostep_default_config();
    const qnn::AngleParams phi(45, 0.0);
    const qnn::PoleParams theta(6, 0.0);

    // Zero parameters: s1 keeps |000> (both actions read +1); after the CNOT
    // cascade the s2 state leaves both measured qubits at <Z> = 0 and the s3
    // state pins qubit 3 to |1>.
    const auto table = analysis::twostep_meta_qtable(cfg, phi, theta);
    CHECK(table[0][0] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(table[0][1] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(table[1][0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(table[1][1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(table[2][0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(table[2][1] == doctest::Approx(-8.0).epsilon(1e-12));

    // Rows agree with direct Q evaluation at the probe observations.
    Rng rng(303);
    const qnn::AngleParams rphi = random_angles(cfg, rng);
    const auto rtable = analysis::twostep_meta_qtable(cfg, rphi, theta);
    const qnn::Observation o1 = envs::twostep_observation(envs::TwoStepState::S1, 0, 0, 3);
    const qnn::Observation o2 = envs::twostep_observation(envs::TwoStepState::S2, 0, 1, 3);
    const qnn::Observation o3 = envs::twostep_observation(envs::TwoStepState::S3, 0, 1, 3);
    const std::vector<double> q1 = qnn::q_values_all(cfg, o1, rphi, theta);
    const std::vector<double> q2 = qnn::q_values_all(cfg, o2, rphi, theta);
    const std::vector<double> q3 = qnn::q_values_all(cfg, o3, rphi, theta);
    for (int a = 0; a < 2; ++a) {
        CHECK(rtable[0][(std::size_t)a] == doctest::Approx(q1[(std::size_t)a]).epsilon(1e-13));
        CHECK(rtable[1][(std::size_t)a] == doctest::Approx(q2[(std::size_t)a]).epsilon(1e-13));
        CHECK(rtable[2][(std::size_t)a] == doctest::Approx(q3[(std::size_t)a]).epsilon(1e-13));
    }
}

TEST_CASE("gradient check suite passes, and catches sabotage") {
    const analysis::GradCheckReport rep = analysis::gradcheck_suite(8, 1e-5, 7);
    CHECK(rep.n_configs == 8);
    CHECK(rep.tolerance == 1e-5);
    CHECK(rep.max_angle_dev <= 1e-5);
    CHECK(rep.max_pole_dev <= 1e-5);
    CHECK(rep.max_meta_loss_dev <= 1e-4);
    CHECK(rep.max_pole_loss_dev <= 1e-4);
    CHECK(rep.pass);

    // Negating the analytic gradients must break the comparison.
    const analysis::GradCheckReport neg = analysis::gradcheck_suite(4, 1e-5, 7, true);
    CHECK_FALSE(neg.pass);

    CHECK_THROWS_AS(analysis::gradcheck_suite(0, 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(analysis::gradcheck_suite(3, 0.0), std::invalid_argument);
}
