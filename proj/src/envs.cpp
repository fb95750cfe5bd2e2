#include "qm2arl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qm2arl::envs {

namespace {

constexpr double kPi = std::numbers::pi;

void check_joint_action(const std::vector<int>& joint_action, int num_agents, int num_actions,
                        bool domain_on_bad_index) {
    if (static_cast<int>(joint_action.size()) != num_agents) {
        throw std::invalid_argument("joint action must have one entry per agent");
    }
    for (int a : joint_action) {
        if (a < 0 || a >= num_actions) {
            if (domain_on_bad_index) {
                throw std::domain_error("action index out of range");
            }
            throw std::invalid_argument("action index out of range");
        }
    }
}

}  // namespace

double twostep_s2_payoff(TwoStepVariant variant) {
    return variant == TwoStepVariant::Main ? 7.0 : 4.0;
}

std::array<std::array<double, 2>, 2> twostep_s3_matrix(TwoStepVariant variant) {
    if (variant == TwoStepVariant::EnvB) {
        return {{{8.0, 1.0}, {1.0, 1.0}}};
    }
    return {{{0.0, 1.0}, {1.0, 8.0}}};
}

qnn::Observation twostep_observation(TwoStepState state, int agent, int step, int num_qubits) {
    if (num_qubits < 1) throw std::invalid_argument("num_qubits must be >= 1");
    qnn::Observation obs = {static_cast<int>(state) * kPi / 2.0, agent == 0 ? 0.0 : kPi,
                            step == 0 ? 0.0 : kPi / 2.0};
    obs.resize(static_cast<std::size_t>(num_qubits), 0.0);
    return obs;
}

TwoStepEnv::TwoStepEnv(TwoStepVariant variant, int encode_qubits)
    : variant_(variant), encode_qubits_(encode_qubits) {
    if (encode_qubits < 1) throw std::invalid_argument("encode_qubits must be >= 1");
}

std::vector<qnn::Observation> TwoStepEnv::reset() {
    state_ = TwoStepState::S1;
    step_index_ = 0;
    done_ = false;
    return observations();
}

std::vector<qnn::Observation> TwoStepEnv::observations() const {
    std::vector<qnn::Observation> obs;
    obs.reserve(2);
    const int step = std::min(step_index_, 1);
    for (int agent = 0; agent < 2; ++agent) {
        obs.push_back(twostep_observation(state_, agent, step, encode_qubits_));
    }
    return obs;
}

std::pair<Transition, bool> TwoStepEnv::step(const std::vector<int>& joint_action) {
    if (done_) throw std::logic_error("step() called before reset() or after the episode ended");
    check_joint_action(joint_action, 2, 2, /*domain_on_bad_index=*/false);

    Transition t;
    t.joint_obs = observations();
    t.joint_action = joint_action;

    if (state_ == TwoStepState::S1) {
        t.reward = 0.0;
        state_ = joint_action[0] == 0 ? TwoStepState::S2 : TwoStepState::S3;
        step_index_ = 1;
        t.terminal = false;
    } else {
        if (state_ == TwoStepState::S2) {
            t.reward = twostep_s2_payoff(variant_);
        } else {
            t.reward = twostep_s3_matrix(variant_)[joint_action[0]][joint_action[1]];
        }
        step_index_ = 2;
        t.terminal = true;
        done_ = true;
    }
    t.next_joint_obs = observations();
    return {t, done_};
}

OptimalQTable twostep_optimal_q(TwoStepVariant variant, OpponentModel opponent) {
    const double s2 = twostep_s2_payoff(variant);
    const auto s3 = twostep_s3_matrix(variant);
    OptimalQTable table;
    for (int a = 0; a < 2; ++a) {
        table.q[1][a] = s2;
        if (opponent == OpponentModel::UniformRandom) {
            table.q[2][a] = 0.5 * (s3[a][0] + s3[a][1]);
        } else {
            table.q[2][a] = std::max(s3[a][0], s3[a][1]);
        }
    }
    const double v2 = std::max(table.q[1][0], table.q[1][1]);
    const double v3 = std::max(table.q[2][0], table.q[2][1]);
    table.q[0][0] = v2;  // s1 rewards are all 0
    table.q[0][1] = v3;
    return table;
}

double twostep_cooperative_optimum(TwoStepVariant variant) {
    const auto table = twostep_optimal_q(variant, OpponentModel::BestResponse);
    return std::max(table.q[0][0], table.q[0][1]);
}

SingleHopEnv::SingleHopEnv(SingleHopParams params) : params_(params) {
    if (params_.q_max <= 0.0 || params_.q_target <= 0.0 || params_.q_target > params_.q_max ||
        params_.horizon < 1 || params_.small_chunk <= 0.0 ||
        params_.large_chunk < params_.small_chunk || params_.arrival_rate <= 0.0 ||
        params_.drain_rate <= 0.0) {
        throw std::invalid_argument("invalid single-hop parameters");
    }
}

std::vector<qnn::Observation> SingleHopEnv::reset() {
    edge_.fill(params_.q_target);
    prev_edge_ = edge_;
    cloud_.fill(params_.q_target);
    step_index_ = 0;
    done_ = false;
    flow_ = {};
    total_clamp_events_ = 0;
    return observations();
}

std::vector<qnn::Observation> SingleHopEnv::observations() const {
    std::vector<qnn::Observation> obs;
    obs.reserve(4);
    const double scale = kPi / params_.q_max;
    for (int n = 0; n < 4; ++n) {
        obs.push_back({edge_[n] * scale, prev_edge_[n] * scale, cloud_[0] * scale,
                       cloud_[1] * scale});
    }
    return obs;
}

double SingleHopEnv::total_chunks() const {
    double total = 0.0;
    for (double q : edge_) total += q;
    for (double c : cloud_) total += c;
    return total;
}

std::pair<Transition, bool> SingleHopEnv::step(const std::vector<int>& joint_action) {
    if (done_) throw std::logic_error("step() called before reset() or after the episode ended");
    check_joint_action(joint_action, 4, 4, /*domain_on_bad_index=*/true);

    Transition t;
    t.joint_obs = observations();
    t.joint_action = joint_action;

    prev_edge_ = edge_;
    flow_ = {};

    // Transmissions: action = (chunk size) x (cloud choice), capped by availability.
    for (int n = 0; n < 4; ++n) {
        const double chunk = (joint_action[n] / 2 == 0) ? params_.small_chunk : params_.large_chunk;
        const int cloud = joint_action[n] % 2;
        const double sent = std::min(chunk, edge_[n]);
        edge_[n] -= sent;
        cloud_[cloud] += sent;
    }

    // Arrivals, then cloud drain.
    for (int n = 0; n < 4; ++n) {
        edge_[n] += params_.arrival_rate;
        flow_.arrivals += params_.arrival_rate;
    }
    for (int j = 0; j < 2; ++j) {
        const double drained = std::min(params_.drain_rate, cloud_[j]);
        cloud_[j] -= drained;
        flow_.drained += drained;
    }

    // Capacity clamp, counted per queue.
    auto clamp_queue = [&](double& q) {
        if (q > params_.q_max) {
            flow_.clamped_excess += q - params_.q_max;
            q = params_.q_max;
            ++flow_.clamp_events;
        }
    };
    for (double& q : edge_) clamp_queue(q);
    for (double& c : cloud_) clamp_queue(c);
    total_clamp_events_ += flow_.clamp_events;

    double penalty = 0.0;
    for (double q : edge_) penalty += std::abs(q - params_.q_target) / params_.q_target;
    for (double c : cloud_) penalty += std::abs(c - params_.q_target) / params_.q_target;
    t.reward = -penalty;

    ++step_index_;
    done_ = step_index_ >= params_.horizon;
    t.terminal = done_;
    t.next_joint_obs = observations();
    return {t, done_};
}

Episode rollout(Env& env, const std::vector<AgentPolicy>& policies, std::uint64_t seed) {
    Rng rng(seed);
    return rollout(env, policies, rng);
}

Episode rollout(Env& env, const std::vector<AgentPolicy>& policies, Rng& rng) {
    if (static_cast<int>(policies.size()) != env.num_agents()) {
        throw std::invalid_argument("need one policy per agent");
    }
    Episode episode;
    auto obs = env.reset();
    bool done = false;
    while (!done) {
        std::vector<int> joint_action(policies.size());
        for (std::size_t n = 0; n < policies.size(); ++n) {
            joint_action[n] = policies[n](obs[n], rng);
        }
        auto [transition, finished] = env.step(joint_action);
        obs = transition.next_joint_obs;
        episode.push_back(std::move(transition));
        done = finished;
    }
    return episode;
}

double episode_return(const Episode& episode) {
    double total = 0.0;
    for (const auto& t : episode) total += t.reward;
    return total;
}

}  // namespace qm2arl::envs
