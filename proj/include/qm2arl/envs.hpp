#pragma once

#include <array>
#include <functional>
#include <vector>

#include "qm2arl/qnn.hpp"
#include "qm2arl/rng.hpp"

namespace qm2arl::envs {

struct Transition {
    std::vector<qnn::Observation> joint_obs;
    std::vector<int> joint_action;
    double reward = 0.0;
    std::vector<qnn::Observation> next_joint_obs;
    bool terminal = false;
};

using Episode = std::vector<Transition>;

class Env {
public:
    virtual ~Env() = default;
    virtual std::vector<qnn::Observation> reset() = 0;
    // Returns the transition and whether the episode is done.
    virtual std::pair<Transition, bool> step(const std::vector<int>& joint_action) = 0;
    virtual int num_agents() const = 0;
    virtual int num_actions() const = 0;
};

// ---------------------------------------------------------------------------
// Two-step matrix game. Agent 1's first action routes s1 -> s2 (action 0) or
// s1 -> s3 (action 1); the second joint action pays out and terminates.
// ---------------------------------------------------------------------------

enum class TwoStepVariant { Main, EnvA, EnvB };
enum class TwoStepState { S1 = 0, S2 = 1, S3 = 2 };

double twostep_s2_payoff(TwoStepVariant variant);
std::array<std::array<double, 2>, 2> twostep_s3_matrix(TwoStepVariant variant);

// Encoding: angles (state in {s1,s2,s3} -> {0, pi/2, pi}, agent id -> {0, pi},
// step index -> {0, pi/2}), padded with zeros to num_qubits entries.
qnn::Observation twostep_observation(TwoStepState state, int agent, int step, int num_qubits);

class TwoStepEnv : public Env {
public:
    explicit TwoStepEnv(TwoStepVariant variant, int encode_qubits = 3);

    std::vector<qnn::Observation> reset() override;
    std::pair<Transition, bool> step(const std::vector<int>& joint_action) override;
    int num_agents() const override { return 2; }
    int num_actions() const override { return 2; }

    TwoStepVariant variant() const { return variant_; }
    TwoStepState state() const { return state_; }
    int step_index() const { return step_index_; }

private:
    std::vector<qnn::Observation> observations() const;

    TwoStepVariant variant_;
    int encode_qubits_;
    TwoStepState state_ = TwoStepState::S1;
    int step_index_ = 0;
    bool done_ = true;
};

enum class OpponentModel { UniformRandom, BestResponse };

// Q*(s, a) for the routing agent, exact dynamic programming over the 2-step
// tree (discount 1), under the given opponent model.
struct OptimalQTable {
    // indexed [state][action], states s1, s2, s3
    std::array<std::array<double, 2>, 3> q{};
};

OptimalQTable twostep_optimal_q(TwoStepVariant variant, OpponentModel opponent);

// Highest achievable joint return (best-response table maximized at s1).
double twostep_cooperative_optimum(TwoStepVariant variant);

// ---------------------------------------------------------------------------
// Single-hop offloading: 4 edge agents move chunks to 2 cloud queues. Each
// action = (chunk size small/large) x (cloud 1/2). Deterministic dynamics.
// ---------------------------------------------------------------------------

struct SingleHopParams {
    double arrival_rate = 2.0;  // chunks per agent per step
    double drain_rate = 4.0;    // chunks per cloud per step
    double small_chunk = 1.0;
    double large_chunk = 3.0;
    double q_target = 10.0;
    double q_max = 20.0;
    int horizon = 10;
};

// Per-step flow accounting, for conservation checks.
struct FlowReport {
    double arrivals = 0.0;
    double drained = 0.0;
    double clamped_excess = 0.0;  // chunks dropped by the q_max clamp
    int clamp_events = 0;
};

class SingleHopEnv : public Env {
public:
    explicit SingleHopEnv(SingleHopParams params = {});

    std::vector<qnn::Observation> reset() override;
    std::pair<Transition, bool> step(const std::vector<int>& joint_action) override;
    int num_agents() const override { return 4; }
    int num_actions() const override { return 4; }

    const SingleHopParams& params() const { return params_; }
    const std::array<double, 4>& edge_queues() const { return edge_; }
    const std::array<double, 2>& cloud_queues() const { return cloud_; }
    const FlowReport& last_flow() const { return flow_; }
    int total_clamp_events() const { return total_clamp_events_; }
    double total_chunks() const;

private:
    std::vector<qnn::Observation> observations() const;

    SingleHopParams params_;
    std::array<double, 4> edge_{};
    std::array<double, 4> prev_edge_{};
    std::array<double, 2> cloud_{};
    int step_index_ = 0;
    bool done_ = true;
    FlowReport flow_{};
    int total_clamp_events_ = 0;
};

// ---------------------------------------------------------------------------

using AgentPolicy = std::function<int(const qnn::Observation&, Rng&)>;

// Runs one full episode; deterministic given the seed and the policies.
Episode rollout(Env& env, const std::vector<AgentPolicy>& policies, std::uint64_t seed);
Episode rollout(Env& env, const std::vector<AgentPolicy>& policies, Rng& rng);

double episode_return(const Episode& episode);

}  // namespace qm2arl::envs
