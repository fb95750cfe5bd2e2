#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qm2arl/envs.hpp"
#include "qm2arl/qnn.hpp"
#include "qm2arl/rng.hpp"

namespace qm2arl::train {

// ---------------------------------------------------------------------------
// Pole-angle noise regularization
// ---------------------------------------------------------------------------

enum class NoiseMode { AllPoleCoords, PolarOnly };

struct NoiseSpec {
    double alpha = 0.0;  // radians, in [0, pi]; 0 disables regularization
    NoiseMode mode = NoiseMode::AllPoleCoords;
    void validate() const;
};

// i.i.d. uniform entries in [-alpha, alpha]; polar-only mode zeroes the
// azimuth slots (odd indices).
qnn::PoleParams sample_pole_noise(const NoiseSpec& spec, int dim, Rng& rng);

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay
// ---------------------------------------------------------------------------

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState make(std::size_t dim, double learning_rate, double weight_decay);
};

// In-place update; wraps parameters to [-pi, pi] when wrap_angles is set.
void adam_update(std::vector<double>& params, const std::vector<double>& grads,
                 OptimizerState& opt, bool wrap_angles = true);

// Exploration floor: linear eps_start -> eps_end over the first anneal_frac of
// training, then constant eps_end. strict mode returns 0 (pure softmax).
double epsilon_at(int epoch, int total_epochs, double eps_start, double eps_end,
                  double anneal_frac, bool strict);

// ---------------------------------------------------------------------------
// Environments by name
// ---------------------------------------------------------------------------

enum class EnvKind { TwoStepMain, TwoStepA, TwoStepB, SingleHop };

std::string env_label(EnvKind kind);
EnvKind env_kind_from_label(const std::string& label);
bool is_twostep(EnvKind kind);
envs::TwoStepVariant twostep_variant(EnvKind kind);

std::unique_ptr<envs::Env> make_env(EnvKind kind, const qnn::QnnConfig& cfg,
                                    const envs::SingleHopParams& singlehop = {});

// ---------------------------------------------------------------------------
// Meta (circuit-angle) training
// ---------------------------------------------------------------------------

// One transition as seen by the meta agent, with the pole noise drawn when the
// step was collected (the loss reuses exactly this noise).
struct MetaStep {
    qnn::Observation obs;
    int action = 0;
    double reward = 0.0;
    qnn::Observation next_obs;
    bool terminal = false;
    qnn::PoleParams noise;
};

using MetaEpisode = std::vector<MetaStep>;

// Mean squared TD residual; online term uses noisy poles theta + noise, the
// bootstrap uses target angles with clean poles and the online-network argmax
// (double-Q rule). Terminal transitions drop the bootstrap.
double meta_td_loss(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                    const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                    const MetaEpisode& episode);

// Same loss with the double-Q bootstrap actions pinned (finite-difference
// checks differentiate through a fixed argmax); -1 marks terminal entries.
double meta_td_loss(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                    const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                    const MetaEpisode& episode, const std::vector<int>& frozen_astar);

// Analytic gradient via the shift rule. frozen_astar (one action per
// transition, -1 = terminal) pins the target argmax for finite-difference
// comparisons; null recomputes it from the online network.
std::vector<double> meta_loss_grad(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                                   const qnn::AngleParams& phi_target,
                                   const qnn::PoleParams& theta, const MetaEpisode& episode,
                                   const std::vector<int>* frozen_astar = nullptr);

// Greedy bootstrap actions of the online network, for freezing.
std::vector<int> meta_target_actions(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                                     const qnn::PoleParams& theta, const MetaEpisode& episode);

struct MetaConfig {
    qnn::QnnConfig qnn;
    std::vector<EnvKind> envs{EnvKind::TwoStepMain};  // union: one episode each per epoch
    envs::SingleHopParams singlehop;
    int epochs = 3000;
    int target_period = 50;
    NoiseSpec noise;
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    double temperature = 1.0;
    double eps_start = 0.3;
    double eps_end = 0.01;
    double eps_anneal_frac = 0.5;
    bool strict_paper_mode = false;  // disables the exploration floor
    std::uint64_t seed = 1;
    void validate() const;
};

struct MetaResult {
    qnn::AngleParams phi;
    qnn::AngleParams phi_target;
    std::vector<double> loss_curve;
};

// Trains circuit angles with per-step pole noise; the meta agent is agent 0,
// all other agents act uniformly at random. Poles stay at zero throughout.
MetaResult train_meta(const MetaConfig& config);

// ---------------------------------------------------------------------------
// Pole (measurement-axis) training, VDN-style joint residual
// ---------------------------------------------------------------------------

double pole_td_loss(const qnn::QnnConfig& cfg, const std::vector<qnn::PoleParams>& poles,
                    const std::vector<qnn::PoleParams>& poles_target, const qnn::AngleParams& phi,
                    const envs::Episode& episode);

std::vector<qnn::PoleParams> pole_loss_grad(const qnn::QnnConfig& cfg,
                                            const std::vector<qnn::PoleParams>& poles,
                                            const std::vector<qnn::PoleParams>& poles_target,
                                            const qnn::AngleParams& phi,
                                            const envs::Episode& episode);

struct PoleConfig {
    qnn::QnnConfig qnn;
    EnvKind env = EnvKind::TwoStepMain;
    envs::SingleHopParams singlehop;
    int epochs = 20000;
    int target_period = 50;
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    double temperature = 1.0;
    double eps_start = 0.3;
    double eps_end = 0.01;
    double eps_anneal_frac = 0.5;
    bool strict_paper_mode = false;
    bool record_distance = false;   // two-step only: optimal-Q distance per epoch
    int trajectory_period = 1;      // pole snapshot cadence (epochs)
    std::uint64_t seed = 1;
    void validate() const;
};

struct PoleSnapshot {
    int epoch = 0;  // 1-based epoch the snapshot was taken after
    std::vector<qnn::PoleParams> poles;
};

struct PoleResult {
    std::vector<qnn::PoleParams> poles;  // per agent
    std::vector<double> loss_curve;
    std::vector<double> return_curve;    // greedy joint return per epoch
    std::vector<double> distance_curve;  // per epoch when record_distance is set
    std::vector<PoleSnapshot> pole_trajectory;
    OptimizerState optimizer;            // final state, for continuation
};

// Trains per-agent poles with frozen angles phi. Empty init_poles means all
// zeros; resume_optimizer continues a previous run's Adam state (null = fresh).
PoleResult train_pole(const PoleConfig& config, const qnn::AngleParams& phi,
                      const std::vector<qnn::PoleParams>& init_poles = {},
                      const OptimizerState* resume_optimizer = nullptr);

// Deterministic greedy joint rollout return (ties resolve to the lowest
// action index).
double greedy_return(const qnn::QnnConfig& cfg, EnvKind kind, const qnn::AngleParams& phi,
                     const std::vector<qnn::PoleParams>& poles,
                     const envs::SingleHopParams& singlehop = {});

// ---------------------------------------------------------------------------
// Pole memory
// ---------------------------------------------------------------------------

struct PoleMemoryEntry {
    std::string label;
    std::vector<qnn::PoleParams> agent_poles;
    std::string variant;
    int epoch = 0;
    double alpha_degrees = 0.0;
};

class PoleMemoryStore {
public:
    // Upsert by label; empty label is rejected.
    void save(PoleMemoryEntry entry);
    // Unknown label -> std::out_of_range.
    const PoleMemoryEntry& load(const std::string& label) const;
    bool contains(const std::string& label) const;
    const std::vector<PoleMemoryEntry>& entries() const { return entries_; }

private:
    std::vector<PoleMemoryEntry> entries_;  // insertion order, stable files
};

void pole_memory_save(PoleMemoryStore& store, const std::string& label,
                      const std::vector<qnn::PoleParams>& poles, const std::string& variant = "",
                      int epoch = 0, double alpha_degrees = 0.0);
const std::vector<qnn::PoleParams>& pole_memory_load(const PoleMemoryStore& store,
                                                     const std::string& label);

// ---------------------------------------------------------------------------
// Continual phases with fast remembering
// ---------------------------------------------------------------------------

struct ContinualConfig {
    qnn::QnnConfig qnn;
    std::vector<EnvKind> schedule{EnvKind::TwoStepA, EnvKind::TwoStepB, EnvKind::TwoStepA};
    int meta_epochs = 5000;
    int pole_epochs = 10000;
    NoiseSpec noise;
    bool memory_enabled = true;
    double meta_learning_rate = 1e-4;
    double pole_learning_rate = 1e-4;
    double weight_decay = 1e-5;
    int target_period = 50;
    double temperature = 1.0;
    double eps_start = 0.3;
    double eps_end = 0.01;
    double eps_anneal_frac = 0.5;
    bool strict_paper_mode = false;
    std::uint64_t seed = 1;
    void validate() const;
};

struct ContinualPhase {
    EnvKind env = EnvKind::TwoStepA;
    bool loaded_from_memory = false;
    std::string init_label;      // memory entry used to initialize ("" = continued)
    double start_distance = 0.0; // optimal-Q distance before the first update
    std::vector<double> distance_curve;
    std::vector<double> return_curve;
    std::vector<qnn::PoleParams> final_poles;
};

struct ContinualResult {
    qnn::AngleParams phi;
    std::vector<double> meta_loss_curve;
    std::vector<ContinualPhase> phases;
    PoleMemoryStore memory;
};

// Meta-trains angles on the union of the schedule's distinct environments,
// then runs pole training per phase. With memory enabled, each phase starts
// from the stored entry for its environment (falling back to the "meta"
// zero-pole entry) with a fresh optimizer; without, poles and optimizer
// carry over. Phase seeds depend only on (seed, phase), so both arms see
// identical draws.
ContinualResult fast_remember(const ContinualConfig& config);

// Stable sub-seed derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace qm2arl::train
