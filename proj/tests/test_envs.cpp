#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qm2arl/envs.hpp"
#include "qm2arl/rng.hpp"

using namespace qm2arl;
using envs::OpponentModel;
using envs::SingleHopEnv;
using envs::SingleHopParams;
using envs::TwoStepEnv;
using envs::TwoStepState;
using envs::TwoStepVariant;

namespace {

constexpr double kPi = std::numbers::pi;

envs::AgentPolicy constant_policy(int action) {
    return [action](const qnn::Observation&, Rng&) { return action; };
}

envs::AgentPolicy uniform_policy(int num_actions) {
    return [num_actions](const qnn::Observation&, Rng& rng) {
        return static_cast<int>(rng.integer(static_cast<std::uint64_t>(num_actions)));
    };
}

}  // namespace

TEST_CASE("two-step payoff tables per variant") {
    CHECK(envs::twostep_s2_payoff(TwoStepVariant::Main) == 7.0);
    CHECK(envs::twostep_s2_payoff(TwoStepVariant::EnvA) == 4.0);
    CHECK(envs::twostep_s2_payoff(TwoStepVariant::EnvB) == 4.0);

    const auto main3 = envs::twostep_s3_matrix(TwoStepVariant::Main);
    CHECK(main3[0][0] == 0.0);
    CHECK(main3[0][1] == 1.0);
    CHECK(main3[1][0] == 1.0);
    CHECK(main3[1][1] == 8.0);
    CHECK(envs::twostep_s3_matrix(TwoStepVariant::EnvA) == main3);

    const auto b3 = envs::twostep_s3_matrix(TwoStepVariant::EnvB);
    CHECK(b3[0][0] == 8.0);
    CHECK(b3[0][1] == 1.0);
    CHECK(b3[1][0] == 1.0);
    CHECK(b3[1][1] == 1.0);
}

TEST_CASE("two-step observation encoding") {
    const qnn::Observation s1 = envs::twostep_observation(TwoStepState::S1, 0, 0, 3);
    CHECK(s1 == qnn::Observation{0.0, 0.0, 0.0});

    const qnn::Observation s3 = envs::twostep_observation(TwoStepState::S3, 1, 1, 4);
    REQUIRE(s3.size() == 4);
    CHECK(s3[0] == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(s3[1] == kPi);
    CHECK(s3[2] == doctest::Approx(kPi / 2.0).epsilon(1e-15));
    CHECK(s3[3] == 0.0);

    const qnn::Observation s2 = envs::twostep_observation(TwoStepState::S2, 0, 1, 3);
    CHECK(s2[0] == doctest::Approx(kPi / 2.0).epsilon(1e-15));
    CHECK(s2[1] == 0.0);
    CHECK(s2[2] == doctest::Approx(kPi / 2.0).epsilon(1e-15));

    // Shorter registers truncate, longer ones pad with zeros.
    CHECK(envs::twostep_observation(TwoStepState::S2, 1, 0, 2).size() == 2);
    CHECK_THROWS_AS(envs::twostep_observation(TwoStepState::S1, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("two-step episode dynamics and lifecycle") {
    TwoStepEnv env(TwoStepVariant::Main);
    CHECK(env.num_agents() == 2);
    CHECK(env.num_actions() == 2);

    // Fresh env must be reset before stepping.
    CHECK_THROWS_AS(env.step({0, 0}), std::logic_error);

    auto obs = env.reset();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0] == qnn::Observation{0.0, 0.0, 0.0});
    CHECK(obs[1][1] == kPi);
    CHECK(env.state() == TwoStepState::S1);

    // Agent 0's first action routes: 0 -> s2.
    auto [t1, done1] = env.step({0, 1});
    CHECK_FALSE(done1);
    CHECK(t1.reward == 0.0);
    CHECK_FALSE(t1.terminal);
    CHECK(env.state() == TwoStepState::S2);
    CHECK(t1.joint_obs[0][0] == 0.0);                                 // from s1
    CHECK(t1.next_joint_obs[0][0] == doctest::Approx(kPi / 2.0));     // to s2
    CHECK(t1.next_joint_obs[0][2] == doctest::Approx(kPi / 2.0));     // step flag set

    // Any joint action in s2 pays the fixed reward and terminates.
    auto [t2, done2] = env.step({1, 0});
    CHECK(done2);
    CHECK(t2.reward == 7.0);
    CHECK(t2.terminal);
    CHECK_THROWS_AS(env.step({0, 0}), std::logic_error);

    // Route 1 -> s3, payoff from the matrix.
    env.reset();
    env.step({1, 0});
    CHECK(env.state() == TwoStepState::S3);
    auto [t3, done3] = env.step({1, 1});
    CHECK(done3);
    CHECK(t3.reward == 8.0);

    env.reset();
    env.step({1, 1});
    auto [t4, d4] = env.step({0, 0});
    CHECK(t4.reward == 0.0);
    CHECK(d4);

    // EnvB swaps the s3 optimum to the (0, 0) corner.
    TwoStepEnv envb(TwoStepVariant::EnvB);
    envb.reset();
    envb.step({1, 0});
    auto [tb, db] = envb.step({0, 0});
    CHECK(tb.reward == 8.0);
    CHECK(db);

    CHECK_THROWS_AS([&] { TwoStepEnv e(TwoStepVariant::Main); e.reset(); e.step({0}); }(),
                    std::invalid_argument);
    CHECK_THROWS_AS([&] { TwoStepEnv e(TwoStepVariant::Main); e.reset(); e.step({0, 2}); }(),
                    std::invalid_argument);
    CHECK_THROWS_AS(TwoStepEnv(TwoStepVariant::Main, 0), std::invalid_argument);
}

TEST_CASE("optimal q tables by dynamic programming") {
    const auto mu = envs::twostep_optimal_q(TwoStepVariant::Main, OpponentModel::UniformRandom);
    CHECK(mu.q[0][0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(mu.q[0][1] == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(mu.q[1][0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(mu.q[1][1] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(mu.q[2][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(mu.q[2][1] == doctest::Approx(4.5).epsilon(1e-14));

    const auto mb = envs::twostep_optimal_q(TwoStepVariant::Main, OpponentModel::BestResponse);
    CHECK(mb.q[0][0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(mb.q[0][1] == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(mb.q[2][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mb.q[2][1] == doctest::Approx(8.0).epsilon(1e-14));

    const auto au = envs::twostep_optimal_q(TwoStepVariant::EnvA, OpponentModel::UniformRandom);
    CHECK(au.q[0][0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(au.q[0][1] == doctest::Approx(4.5).epsilon(1e-14));

    const auto bu = envs::twostep_optimal_q(TwoStepVariant::EnvB, OpponentModel::UniformRandom);
    CHECK(bu.q[2][0] == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(bu.q[2][1] == doctest::Approx(1.0).epsilon(1e-14));

    for (TwoStepVariant v : {TwoStepVariant::Main, TwoStepVariant::EnvA, TwoStepVariant::EnvB}) {
        CHECK(envs::twostep_cooperative_optimum(v) == doctest::Approx(8.0).epsilon(1e-14));
    }
}

TEST_CASE("single-hop reset state and first-step arithmetic") {
    SingleHopEnv env;
    const auto obs = env.reset();
    REQUIRE(obs.size() == 4);
    for (const auto& o : obs) {
        REQUIRE(o.size() == 4);
        for (double v : o) CHECK(v == doctest::Approx(kPi / 2.0).epsilon(1e-14));  // 10/20 * pi
    }
    for (double q : env.edge_queues()) CHECK(q == 10.0);
    for (double c : env.cloud_queues()) CHECK(c == 10.0);
    CHECK(env.total_chunks() == doctest::Approx(60.0).epsilon(1e-14));

    // All agents send a small chunk to cloud 1 (action 0): edges 10-1+2 = 11,
    // cloud 1 gets +4 then drains 4 back to 10, cloud 2 drains to 6.
    auto [t, done] = env.step({0, 0, 0, 0});
    CHECK_FALSE(done);
    for (double q : env.edge_queues()) CHECK(q == doctest::Approx(11.0).epsilon(1e-14));
    CHECK(env.cloud_queues()[0] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(env.cloud_queues()[1] == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(t.reward == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(env.last_flow().arrivals == doctest::Approx(8.0));
    CHECK(env.last_flow().drained == doctest::Approx(8.0));
    CHECK(env.last_flow().clamp_events == 0);

    // Observation slots: own queue, previous queue, the two clouds.
    CHECK(t.next_joint_obs[0][0] == doctest::Approx(11.0 / 20.0 * kPi));
    CHECK(t.next_joint_obs[0][1] == doctest::Approx(10.0 / 20.0 * kPi));
    CHECK(t.next_joint_obs[0][2] == doctest::Approx(10.0 / 20.0 * kPi));
    CHECK(t.next_joint_obs[0][3] == doctest::Approx(6.0 / 20.0 * kPi));
}

TEST_CASE("single-hop flow conservation holds step by step") {
    SingleHopEnv env;
    env.reset();
    Rng rng(77);
    bool done = false;
    int steps = 0;
    while (!done) {
        const double before = env.total_chunks();
        std::vector<int> joint(4);
        for (int& a : joint) a = static_cast<int>(rng.integer(4));
        auto [t, fin] = env.step(joint);
        const auto& flow = env.last_flow();
        const double after = env.total_chunks();
        CHECK(std::abs(after - (before + flow.arrivals - flow.drained - flow.clamped_excess)) <=
              1e-9);
        CHECK(t.reward <= 0.0);
        done = fin;
        ++steps;
    }
    CHECK(steps == 10);
    CHECK_THROWS_AS(env.step({0, 0, 0, 0}), std::logic_error);
}

TEST_CASE("single-hop clamping kicks in when everyone floods one cloud") {
    SingleHopEnv env;
    env.reset();
    // Action 2 = large chunk to cloud 1: +12 per step against a drain of 4.
    env.step({2, 2, 2, 2});
    CHECK(env.cloud_queues()[0] == doctest::Approx(18.0));
    CHECK(env.total_clamp_events() == 0);
    env.step({2, 2, 2, 2});
    CHECK(env.cloud_queues()[0] == doctest::Approx(20.0));  // 26 clamped to q_max
    CHECK(env.last_flow().clamped_excess == doctest::Approx(6.0));
    CHECK(env.last_flow().clamp_events == 1);
    CHECK(env.total_clamp_events() == 1);
}

TEST_CASE("single-hop argument and parameter validation") {
    SingleHopEnv env;
    env.reset();
    CHECK_THROWS_AS(env.step({0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(env.step({0, 0, 0, 4}), std::domain_error);
    CHECK_THROWS_AS(env.step({-1, 0, 0, 0}), std::domain_error);

    auto bad = [](auto mutate) {
        SingleHopParams p;
        mutate(p);
        return p;
    };
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.q_target = 0.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.q_target = 25.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.q_max = 0.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.horizon = 0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.large_chunk = 0.5; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.arrival_rate = 0.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(SingleHopEnv(bad([](SingleHopParams& p) { p.drain_rate = -1.0; })),
                    std::invalid_argument);
}

TEST_CASE("rollout is seed-deterministic and respects policies") {
    TwoStepEnv env(TwoStepVariant::Main);

    // Constant policies: route to s2, collect 7.
    const envs::Episode fixed =
        envs::rollout(env, {constant_policy(0), constant_policy(1)}, 123);
    REQUIRE(fixed.size() == 2);
    CHECK(fixed[0].joint_action == std::vector<int>{0, 1});
    CHECK(envs::episode_return(fixed) == 7.0);

    // Same seed, same episode; different seed may differ but stays valid.
    const envs::Episode a = envs::rollout(env, {uniform_policy(2), uniform_policy(2)}, 9);
    const envs::Episode b = envs::rollout(env, {uniform_policy(2), uniform_policy(2)}, 9);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].joint_action == b[i].joint_action);
        CHECK(a[i].reward == b[i].reward);
    }

    CHECK_THROWS_AS(envs::rollout(env, {constant_policy(0)}, 3), std::invalid_argument);
}

TEST_CASE("uniform-random play matches the enumerated mean return") {
    // Main: E[return] = 0.5 * 7 + 0.5 * mean{0,1,1,8} = 4.75; sd ~ 3.19.
    TwoStepEnv env(TwoStepVariant::Main);
    const int n = 4000;
    double total = 0.0;
    Rng rng(2024);
    for (int e = 0; e < n; ++e) {
        total += envs::episode_return(envs::rollout(env, {uniform_policy(2), uniform_policy(2)}, rng));
    }
    CHECK(std::abs(total / n - 4.75) <= 0.3);  // ~6 standard errors at n = 4000

    // Single-hop random play always lands strictly below zero.
    SingleHopEnv sh;
    for (std::uint64_t seed : {5ULL, 6ULL, 7ULL}) {
        const envs::Episode ep = envs::rollout(
            sh, {uniform_policy(4), uniform_policy(4), uniform_policy(4), uniform_policy(4)}, seed);
        CHECK(envs::episode_return(ep) < 0.0);
    }
}
