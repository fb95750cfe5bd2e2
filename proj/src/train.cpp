#include "qm2arl/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qm2arl/analysis.hpp"

namespace qm2arl::train {

namespace {

constexpr double kPi = std::numbers::pi;

qnn::PoleParams add_poles(const qnn::PoleParams& a, const qnn::PoleParams& b) {
    qnn::PoleParams out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> behavior_probs(const std::vector<double>& q, double temperature, double eps) {
    std::vector<double> p = qnn::softmax(q, temperature);
    const double uniform = 1.0 / static_cast<double>(q.size());
    for (double& v : p) v = (1.0 - eps) * v + eps * uniform;
    return p;
}

void check_common(int epochs, int target_period, double learning_rate, double weight_decay,
                  double temperature, double eps_start, double eps_end, double eps_anneal_frac) {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (target_period < 1) throw std::invalid_argument("target_period must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning_rate must be positive");
    if (weight_decay < 0.0 || !std::isfinite(weight_decay))
        throw std::invalid_argument("weight_decay must be non-negative");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
        throw std::invalid_argument("exploration floor must lie in [0, 1]");
    if (!(eps_anneal_frac > 0.0) || eps_anneal_frac > 1.0)
        throw std::invalid_argument("eps_anneal_frac must lie in (0, 1]");
}

}  // namespace

void NoiseSpec::validate() const {
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha > kPi)
        throw std::invalid_argument("noise bound alpha must lie in [0, pi]");
}

qnn::PoleParams sample_pole_noise(const NoiseSpec& spec, int dim, Rng& rng) {
    spec.validate();
    if (dim < 0) throw std::invalid_argument("noise dimension must be non-negative");
    qnn::PoleParams noise(static_cast<std::size_t>(dim), 0.0);
    if (spec.alpha == 0.0) return noise;
    for (int i = 0; i < dim; ++i) {
        if (spec.mode == NoiseMode::PolarOnly && i % 2 == 1) continue;
        noise[static_cast<std::size_t>(i)] = rng.uniform(-spec.alpha, spec.alpha);
    }
    return noise;
}

OptimizerState OptimizerState::make(std::size_t dim, double learning_rate, double weight_decay) {
    OptimizerState opt;
    opt.first_moment.assign(dim, 0.0);
    opt.second_moment.assign(dim, 0.0);
    opt.learning_rate = learning_rate;
    opt.weight_decay = weight_decay;
    return opt;
}

void adam_update(std::vector<double>& params, const std::vector<double>& grads,
                 OptimizerState& opt, bool wrap_angles) {
    if (params.size() != grads.size() || params.size() != opt.first_moment.size() ||
        params.size() != opt.second_moment.size()) {
        throw std::length_error("adam_update: parameter, gradient, and moment sizes must match");
    }
    ++opt.step_count;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * grads[i];
        opt.second_moment[i] =
            opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
        const double mhat = opt.first_moment[i] / bc1;
        const double vhat = opt.second_moment[i] / bc2;
        params[i] -= opt.learning_rate *
                     (mhat / (std::sqrt(vhat) + opt.epsilon) + opt.weight_decay * params[i]);
        if (wrap_angles) params[i] = qnn::wrap_angle(params[i]);
    }
}

double epsilon_at(int epoch, int total_epochs, double eps_start, double eps_end,
                  double anneal_frac, bool strict) {
    if (strict) return 0.0;
    const int half = std::max(1, static_cast<int>(total_epochs * anneal_frac));
    if (epoch >= half) return eps_end;
    return eps_start + (eps_end - eps_start) * (static_cast<double>(epoch) / half);
}

std::string env_label(EnvKind kind) {
    switch (kind) {
        case EnvKind::TwoStepMain: return "main";
        case EnvKind::TwoStepA: return "env-a";
        case EnvKind::TwoStepB: return "env-b";
        case EnvKind::SingleHop: return "single-hop";
    }
    throw std::invalid_argument("unknown environment kind");
}

EnvKind env_kind_from_label(const std::string& label) {
    if (label == "main") return EnvKind::TwoStepMain;
    if (label == "env-a") return EnvKind::TwoStepA;
    if (label == "env-b") return EnvKind::TwoStepB;
    if (label == "single-hop") return EnvKind::SingleHop;
    throw std::invalid_argument("unknown environment label: " + label);
}

bool is_twostep(EnvKind kind) { return kind != EnvKind::SingleHop; }

envs::TwoStepVariant twostep_variant(EnvKind kind) {
    switch (kind) {
        case EnvKind::TwoStepMain: return envs::TwoStepVariant::Main;
        case EnvKind::TwoStepA: return envs::TwoStepVariant::EnvA;
        case EnvKind::TwoStepB: return envs::TwoStepVariant::EnvB;
        default: throw std::invalid_argument("not a two-step environment");
    }
}

std::unique_ptr<envs::Env> make_env(EnvKind kind, const qnn::QnnConfig& cfg,
                                    const envs::SingleHopParams& singlehop) {
    if (kind == EnvKind::SingleHop) return std::make_unique<envs::SingleHopEnv>(singlehop);
    return std::make_unique<envs::TwoStepEnv>(twostep_variant(kind), cfg.num_qubits);
}

// ---------------------------------------------------------------------------
// Meta loss and gradient
// ---------------------------------------------------------------------------

namespace {

double meta_residual(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                     const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                     const MetaStep& step, int frozen_astar) {
    const double q_noisy =
        qnn::q_value(cfg, step.obs, step.action, phi, add_poles(theta, step.noise));
    double target = step.reward;
    if (!step.terminal) {
        const int astar = frozen_astar >= 0
                              ? frozen_astar
                              : argmax_index(qnn::q_values_all(cfg, step.next_obs, phi, theta));
        target += qnn::q_value(cfg, step.next_obs, astar, phi_target, theta);
    }
    return target - q_noisy;
}

}  // namespace

double meta_td_loss(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                    const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                    const MetaEpisode& episode) {
    if (episode.empty()) throw std::invalid_argument("meta_td_loss: episode is empty");
    double acc = 0.0;
    for (const MetaStep& step : episode) {
        const double r = meta_residual(cfg, phi, phi_target, theta, step, -1);
        acc += r * r;
    }
    return acc / static_cast<double>(episode.size());
}

double meta_td_loss(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                    const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                    const MetaEpisode& episode, const std::vector<int>& frozen_astar) {
    if (episode.empty()) throw std::invalid_argument("meta_td_loss: episode is empty");
    if (frozen_astar.size() != episode.size())
        throw std::length_error("meta_td_loss: frozen action list length mismatch");
    double acc = 0.0;
    for (std::size_t t = 0; t < episode.size(); ++t) {
        const double r =
            meta_residual(cfg, phi, phi_target, theta, episode[t], frozen_astar[t]);
        acc += r * r;
    }
    return acc / static_cast<double>(episode.size());
}

std::vector<int> meta_target_actions(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                                     const qnn::PoleParams& theta, const MetaEpisode& episode) {
    std::vector<int> astar(episode.size(), -1);
    for (std::size_t t = 0; t < episode.size(); ++t) {
        if (!episode[t].terminal) {
            astar[t] = argmax_index(qnn::q_values_all(cfg, episode[t].next_obs, phi, theta));
        }
    }
    return astar;
}

std::vector<double> meta_loss_grad(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                                   const qnn::AngleParams& phi_target,
                                   const qnn::PoleParams& theta, const MetaEpisode& episode,
                                   const std::vector<int>* frozen_astar) {
    if (episode.empty()) throw std::invalid_argument("meta_loss_grad: episode is empty");
    if (frozen_astar && frozen_astar->size() != episode.size())
        throw std::length_error("meta_loss_grad: frozen action list length mismatch");
    const double scale = 2.0 * cfg.beta / static_cast<double>(episode.size());
    std::vector<double> grad(phi.size(), 0.0);
    for (std::size_t t = 0; t < episode.size(); ++t) {
        const MetaStep& step = episode[t];
        const int astar = frozen_astar ? (*frozen_astar)[t] : -1;
        const double resid = meta_residual(cfg, phi, phi_target, theta, step, astar);
        const qnn::PoleParams noisy = add_poles(theta, step.noise);
        const std::vector<double> dobs = qnn::grad_angle_shift(cfg, step.obs, step.action, phi, noisy);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= scale * resid * dobs[k];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Meta training loop
// ---------------------------------------------------------------------------

void MetaConfig::validate() const {
    qnn.validate();
    noise.validate();
    check_common(epochs, target_period, learning_rate, weight_decay, temperature, eps_start,
                 eps_end, eps_anneal_frac);
    if (envs.empty()) throw std::invalid_argument("meta training needs at least one environment");
}

MetaResult train_meta(const MetaConfig& config) {
    config.validate();
    const qnn::QnnConfig& cfg = config.qnn;
    Rng rng(config.seed);

    qnn::AngleParams phi(static_cast<std::size_t>(cfg.num_angles()));
    for (double& v : phi) v = rng.uniform(-kPi, kPi);
    qnn::AngleParams phi_target = phi;
    const qnn::PoleParams theta0(static_cast<std::size_t>(cfg.num_poles()), 0.0);

    OptimizerState opt =
        OptimizerState::make(phi.size(), config.learning_rate, config.weight_decay);

    std::vector<std::unique_ptr<envs::Env>> env_list;
    env_list.reserve(config.envs.size());
    for (EnvKind kind : config.envs) {
        env_list.push_back(make_env(kind, cfg, config.singlehop));
        if (env_list.back()->num_actions() != cfg.num_actions())
            throw std::invalid_argument("environment action count does not match the QNN");
    }

    MetaResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(config.epochs));

    for (int ep = 0; ep < config.epochs; ++ep) {
        const double eps = epsilon_at(ep, config.epochs, config.eps_start, config.eps_end,
                                      config.eps_anneal_frac, config.strict_paper_mode);
        MetaEpisode episode;
        for (auto& env : env_list) {
            auto obs = env->reset();
            bool done = false;
            while (!done) {
                MetaStep step;
                step.noise = sample_pole_noise(config.noise, cfg.num_poles(), rng);
                const std::vector<double> q =
                    qnn::q_values_all(cfg, obs[0], phi, add_poles(theta0, step.noise));
                const std::vector<double> probs = behavior_probs(q, config.temperature, eps);
                std::vector<int> joint(static_cast<std::size_t>(env->num_agents()));
                joint[0] = rng.categorical(probs);
                for (int n = 1; n < env->num_agents(); ++n)
                    joint[static_cast<std::size_t>(n)] = rng.integer(env->num_actions());
                auto [transition, finished] = env->step(joint);
                step.obs = transition.joint_obs[0];
                step.action = joint[0];
                step.reward = transition.reward;
                step.next_obs = transition.next_joint_obs[0];
                step.terminal = transition.terminal;
                episode.push_back(std::move(step));
                obs = transition.next_joint_obs;
                done = finished;
            }
        }
        result.loss_curve.push_back(meta_td_loss(cfg, phi, phi_target, theta0, episode));
        const std::vector<double> grad = meta_loss_grad(cfg, phi, phi_target, theta0, episode);
        adam_update(phi, grad, opt);
        if ((ep + 1) % config.target_period == 0) phi_target = phi;
    }

    result.phi = std::move(phi);
    result.phi_target = std::move(phi_target);
    return result;
}

// ---------------------------------------------------------------------------
// Pole loss and gradient
// ---------------------------------------------------------------------------

namespace {

void check_pole_sets(const qnn::QnnConfig& cfg, const std::vector<qnn::PoleParams>& poles,
                     const std::vector<qnn::PoleParams>& poles_target,
                     const envs::Episode& episode) {
    if (episode.empty()) throw std::invalid_argument("pole loss: episode is empty");
    const std::size_t agents = episode.front().joint_obs.size();
    if (poles.size() != agents || poles_target.size() != agents)
        throw std::length_error("pole loss: need one pole vector per agent");
    for (const auto& p : poles)
        if (static_cast<int>(p.size()) != cfg.num_poles())
            throw std::length_error("pole loss: pole vector length mismatch");
    for (const auto& p : poles_target)
        if (static_cast<int>(p.size()) != cfg.num_poles())
            throw std::length_error("pole loss: target pole vector length mismatch");
}

std::vector<double> pole_residuals(const qnn::QnnConfig& cfg,
                                   const std::vector<qnn::PoleParams>& poles,
                                   const std::vector<qnn::PoleParams>& poles_target,
                                   const qnn::AngleParams& phi, const envs::Episode& episode) {
    const int agents = static_cast<int>(poles.size());
    std::vector<double> residuals;
    residuals.reserve(episode.size());
    for (const envs::Transition& tr : episode) {
        double acc = 0.0;
        for (int n = 0; n < agents; ++n) {
            const std::size_t un = static_cast<std::size_t>(n);
            const double q_taken =
                qnn::q_value(cfg, tr.joint_obs[un], tr.joint_action[un], phi, poles[un]);
            double next_max = 0.0;
            if (!tr.terminal) {
                const std::vector<double> next =
                    qnn::q_values_all(cfg, tr.next_joint_obs[un], phi, poles_target[un]);
                next_max = *std::max_element(next.begin(), next.end());
            }
            acc += next_max - q_taken;
        }
        residuals.push_back(tr.reward + acc / static_cast<double>(agents));
    }
    return residuals;
}

}  // namespace

double pole_td_loss(const qnn::QnnConfig& cfg, const std::vector<qnn::PoleParams>& poles,
                    const std::vector<qnn::PoleParams>& poles_target, const qnn::AngleParams& phi,
                    const envs::Episode& episode) {
    check_pole_sets(cfg, poles, poles_target, episode);
    const std::vector<double> res = pole_residuals(cfg, poles, poles_target, phi, episode);
    double acc = 0.0;
    for (double r : res) acc += r * r;
    return acc / static_cast<double>(res.size());
}

std::vector<qnn::PoleParams> pole_loss_grad(const qnn::QnnConfig& cfg,
                                            const std::vector<qnn::PoleParams>& poles,
                                            const std::vector<qnn::PoleParams>& poles_target,
                                            const qnn::AngleParams& phi,
                                            const envs::Episode& episode) {
    check_pole_sets(cfg, poles, poles_target, episode);
    const int agents = static_cast<int>(poles.size());
    const std::vector<double> res = pole_residuals(cfg, poles, poles_target, phi, episode);
    const double scale =
        2.0 * cfg.beta / (static_cast<double>(agents) * static_cast<double>(episode.size()));
    std::vector<qnn::PoleParams> grad(
        poles.size(), qnn::PoleParams(static_cast<std::size_t>(cfg.num_poles()), 0.0));
    for (std::size_t t = 0; t < episode.size(); ++t) {
        const envs::Transition& tr = episode[t];
        for (int n = 0; n < agents; ++n) {
            const std::size_t un = static_cast<std::size_t>(n);
            const std::vector<double> dobs =
                qnn::grad_pole_shift(cfg, tr.joint_obs[un], tr.joint_action[un], phi, poles[un]);
            for (std::size_t k = 0; k < dobs.size(); ++k)
                grad[un][k] -= scale * res[t] * dobs[k];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Pole training loop
// ---------------------------------------------------------------------------

void PoleConfig::validate() const {
    qnn.validate();
    check_common(epochs, target_period, learning_rate, weight_decay, temperature, eps_start,
                 eps_end, eps_anneal_frac);
    if (trajectory_period < 1) throw std::invalid_argument("trajectory_period must be >= 1");
    if (record_distance && !is_twostep(env))
        throw std::invalid_argument("distance recording is defined for two-step variants only");
}

namespace {

std::vector<double> flatten(const std::vector<qnn::PoleParams>& poles) {
    std::vector<double> flat;
    for (const auto& p : poles) flat.insert(flat.end(), p.begin(), p.end());
    return flat;
}

void unflatten(const std::vector<double>& flat, std::vector<qnn::PoleParams>& poles) {
    std::size_t i = 0;
    for (auto& p : poles)
        for (double& v : p) v = flat[i++];
}

}  // namespace

double greedy_return(const qnn::QnnConfig& cfg, EnvKind kind, const qnn::AngleParams& phi,
                     const std::vector<qnn::PoleParams>& poles,
                     const envs::SingleHopParams& singlehop) {
    auto env = make_env(kind, cfg, singlehop);
    std::vector<envs::AgentPolicy> policies;
    policies.reserve(poles.size());
    for (const auto& agent_poles : poles) {
        policies.push_back([&cfg, &phi, agent_poles](const qnn::Observation& o, Rng&) {
            return argmax_index(qnn::q_values_all(cfg, o, phi, agent_poles));
        });
    }
    const envs::Episode episode = envs::rollout(*env, policies, 0);
    return envs::episode_return(episode);
}

PoleResult train_pole(const PoleConfig& config, const qnn::AngleParams& phi,
                      const std::vector<qnn::PoleParams>& init_poles,
                      const OptimizerState* resume_optimizer) {
    config.validate();
    const qnn::QnnConfig& cfg = config.qnn;
    Rng rng(config.seed);

    auto env = make_env(config.env, cfg, config.singlehop);
    if (env->num_actions() != cfg.num_actions())
        throw std::invalid_argument("environment action count does not match the QNN");
    const int agents = env->num_agents();

    std::vector<qnn::PoleParams> poles(
        static_cast<std::size_t>(agents),
        qnn::PoleParams(static_cast<std::size_t>(cfg.num_poles()), 0.0));
    if (!init_poles.empty()) {
        if (static_cast<int>(init_poles.size()) != agents)
            throw std::length_error("init poles: need one vector per agent");
        for (const auto& p : init_poles)
            if (static_cast<int>(p.size()) != cfg.num_poles())
                throw std::length_error("init poles: vector length mismatch");
        poles = init_poles;
    }
    std::vector<qnn::PoleParams> poles_target = poles;

    std::vector<double> flat = flatten(poles);
    OptimizerState opt = resume_optimizer
                             ? *resume_optimizer
                             : OptimizerState::make(flat.size(), config.learning_rate,
                                                    config.weight_decay);
    if (opt.first_moment.size() != flat.size())
        throw std::length_error("resumed optimizer state does not match the pole dimensions");

    PoleResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(config.epochs));
    result.return_curve.reserve(static_cast<std::size_t>(config.epochs));

    for (int ep = 0; ep < config.epochs; ++ep) {
        const double eps = epsilon_at(ep, config.epochs, config.eps_start, config.eps_end,
                                      config.eps_anneal_frac, config.strict_paper_mode);
        envs::Episode episode;
        auto obs = env->reset();
        bool done = false;
        while (!done) {
            std::vector<int> joint(static_cast<std::size_t>(agents));
            for (int n = 0; n < agents; ++n) {
                const std::size_t un = static_cast<std::size_t>(n);
                const std::vector<double> q = qnn::q_values_all(cfg, obs[un], phi, poles[un]);
                joint[un] = rng.categorical(behavior_probs(q, config.temperature, eps));
            }
            auto [transition, finished] = env->step(joint);
            obs = transition.next_joint_obs;
            episode.push_back(std::move(transition));
            done = finished;
        }

        result.loss_curve.push_back(pole_td_loss(cfg, poles, poles_target, phi, episode));
        const std::vector<qnn::PoleParams> grad =
            pole_loss_grad(cfg, poles, poles_target, phi, episode);
        const std::vector<double> flat_grad = flatten(grad);
        flat = flatten(poles);
        adam_update(flat, flat_grad, opt);
        unflatten(flat, poles);
        if ((ep + 1) % config.target_period == 0) poles_target = poles;

        result.return_curve.push_back(
            greedy_return(cfg, config.env, phi, poles, config.singlehop));
        if (config.record_distance) {
            result.distance_curve.push_back(analysis::optimal_q_distance(
                twostep_variant(config.env), cfg, phi, poles));
        }
        if ((ep + 1) % config.trajectory_period == 0 || ep + 1 == config.epochs) {
            result.pole_trajectory.push_back({ep + 1, poles});
        }
    }

    result.poles = std::move(poles);
    result.optimizer = std::move(opt);
    return result;
}

// ---------------------------------------------------------------------------
// Pole memory
// ---------------------------------------------------------------------------

void PoleMemoryStore::save(PoleMemoryEntry entry) {
    if (entry.label.empty()) throw std::invalid_argument("pole memory label must be nonempty");
    for (auto& existing : entries_) {
        if (existing.label == entry.label) {
            existing = std::move(entry);
            return;
        }
    }
    entries_.push_back(std::move(entry));
}

const PoleMemoryEntry& PoleMemoryStore::load(const std::string& label) const {
    for (const auto& entry : entries_)
        if (entry.label == label) return entry;
    throw std::out_of_range("pole memory has no entry labeled '" + label + "'");
}

bool PoleMemoryStore::contains(const std::string& label) const {
    for (const auto& entry : entries_)
        if (entry.label == label) return true;
    return false;
}

void pole_memory_save(PoleMemoryStore& store, const std::string& label,
                      const std::vector<qnn::PoleParams>& poles, const std::string& variant,
                      int epoch, double alpha_degrees) {
    store.save({label, poles, variant, epoch, alpha_degrees});
}

const std::vector<qnn::PoleParams>& pole_memory_load(const PoleMemoryStore& store,
                                                     const std::string& label) {
    return store.load(label).agent_poles;
}

// ---------------------------------------------------------------------------
// Continual phases
// ---------------------------------------------------------------------------

void ContinualConfig::validate() const {
    qnn.validate();
    noise.validate();
    check_common(meta_epochs, target_period, meta_learning_rate, weight_decay, temperature,
                 eps_start, eps_end, eps_anneal_frac);
    if (pole_epochs < 1) throw std::invalid_argument("pole_epochs must be >= 1");
    if (!(pole_learning_rate > 0.0)) throw std::invalid_argument("pole_learning_rate must be positive");
    if (schedule.empty()) throw std::invalid_argument("phase schedule is empty");
    for (EnvKind kind : schedule)
        if (!is_twostep(kind))
            throw std::invalid_argument("continual phases are defined on two-step variants");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ContinualResult fast_remember(const ContinualConfig& config) {
    config.validate();
    const qnn::QnnConfig& cfg = config.qnn;

    std::vector<EnvKind> distinct;
    for (EnvKind kind : config.schedule)
        if (std::find(distinct.begin(), distinct.end(), kind) == distinct.end())
            distinct.push_back(kind);

    MetaConfig meta_cfg;
    meta_cfg.qnn = cfg;
    meta_cfg.envs = distinct;
    meta_cfg.epochs = config.meta_epochs;
    meta_cfg.target_period = config.target_period;
    meta_cfg.noise = config.noise;
    meta_cfg.learning_rate = config.meta_learning_rate;
    meta_cfg.weight_decay = config.weight_decay;
    meta_cfg.temperature = config.temperature;
    meta_cfg.eps_start = config.eps_start;
    meta_cfg.eps_end = config.eps_end;
    meta_cfg.eps_anneal_frac = config.eps_anneal_frac;
    meta_cfg.strict_paper_mode = config.strict_paper_mode;
    meta_cfg.seed = derive_seed(config.seed, 0);
    MetaResult meta = train_meta(meta_cfg);

    ContinualResult out;
    out.phi = std::move(meta.phi);
    out.meta_loss_curve = std::move(meta.loss_curve);

    const int agents = make_env(config.schedule.front(), cfg, {})->num_agents();
    const double alpha_degrees = config.noise.alpha * 180.0 / kPi;
    const std::vector<qnn::PoleParams> zero_poles(
        static_cast<std::size_t>(agents),
        qnn::PoleParams(static_cast<std::size_t>(cfg.num_poles()), 0.0));
    pole_memory_save(out.memory, "meta", zero_poles, "", 0, alpha_degrees);

    std::vector<qnn::PoleParams> current = zero_poles;
    OptimizerState carried;
    bool have_carried = false;

    for (std::size_t i = 0; i < config.schedule.size(); ++i) {
        const EnvKind kind = config.schedule[i];
        PoleConfig pole_cfg;
        pole_cfg.qnn = cfg;
        pole_cfg.env = kind;
        pole_cfg.epochs = config.pole_epochs;
        pole_cfg.target_period = config.target_period;
        pole_cfg.learning_rate = config.pole_learning_rate;
        pole_cfg.weight_decay = config.weight_decay;
        pole_cfg.temperature = config.temperature;
        pole_cfg.eps_start = config.eps_start;
        pole_cfg.eps_end = config.eps_end;
        pole_cfg.eps_anneal_frac = config.eps_anneal_frac;
        pole_cfg.strict_paper_mode = config.strict_paper_mode;
        pole_cfg.record_distance = true;
        pole_cfg.seed = derive_seed(config.seed, 1000 + i);

        ContinualPhase phase;
        phase.env = kind;

        std::vector<qnn::PoleParams> init;
        const OptimizerState* resume = nullptr;
        if (config.memory_enabled) {
            const std::string label = env_label(kind);
            phase.init_label = out.memory.contains(label) ? label : "meta";
            init = pole_memory_load(out.memory, phase.init_label);
            phase.loaded_from_memory = true;
        } else {
            init = current;
            if (have_carried) resume = &carried;
        }

        phase.start_distance =
            analysis::optimal_q_distance(twostep_variant(kind), cfg, out.phi, init);

        PoleResult pr = train_pole(pole_cfg, out.phi, init, resume);
        current = pr.poles;
        carried = std::move(pr.optimizer);
        have_carried = true;

        phase.distance_curve = std::move(pr.distance_curve);
        phase.return_curve = std::move(pr.return_curve);
        phase.final_poles = current;
        pole_memory_save(out.memory, env_label(kind), current, env_label(kind),
                         config.pole_epochs, alpha_degrees);
        out.phases.push_back(std::move(phase));
    }
    return out;
}

}  // namespace qm2arl::train
