#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qm2arl/envs.hpp"
#include "qm2arl/qnn.hpp"
#include "qm2arl/train.hpp"

namespace qm2arl::analysis {

// ---------------------------------------------------------------------------
// Noise-contraction check: under polar-only pole noise uniform in [-a, a],
// E[Q_noisy] = (sin a / a) * Q_clean.
// ---------------------------------------------------------------------------

struct LemmaReport {
    double alpha = 0.0;
    double monte_carlo_estimate = 0.0;
    double analytic_prediction = 0.0;
    long sample_count = 0;
    double standard_error = 0.0;
    bool pass = false;  // |estimate - prediction| <= 5*standard_error + 1e-3
};

LemmaReport lemma1_check(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                         const qnn::PoleParams& theta, double alpha, const qnn::Observation& o,
                         int action, long n_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient-variance bound check (single measured qubit per action, polar-only
// noise): Monte Carlo variance of dLoss/dphi_k vs the analytic bound built
// from the +-pi/2-shifted states.
// ---------------------------------------------------------------------------

struct Lemma3Report {
    double alpha = 0.0;
    double variance_estimate = 0.0;
    double bound = 0.0;
    long sample_count = 0;
    double standard_error = 0.0;  // of the variance estimate (fourth moment)
    bool pass = false;            // variance <= bound + 5*standard_error
};

Lemma3Report lemma3_check(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                          const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                          double alpha, const train::MetaEpisode& episode, int k, long n_samples,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pole-grid probe: max_a Q over a 33x33 sweep of two pole coordinates (step
// pi/16 from -pi to pi), every other pole fixed at 0.
// ---------------------------------------------------------------------------

struct PoleGrid {
    std::vector<double> axis_values;              // 33 angles, -pi .. pi
    std::vector<std::vector<double>> values;      // [i][j] = max_a Q(theta1_i, theta2_j)
    std::string state_label;
};

// Scanned coordinates: with one measured qubit in the action set, its (polar,
// azimuth) pair; with several, the polar angles of the first two qubits.
PoleGrid pole_grid_probe(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                         const qnn::Observation& o, const std::vector<int>& action_set = {},
                         const std::string& state_label = "");

// Distance grid D = |q_star - value| normalized by (max D - min D); note
// the numerator keeps its offset (no min subtraction).
// An all-equal grid matching q_star returns zeros; an all-equal nonzero
// distance grid throws a domain error.
std::vector<std::vector<double>> d_norm(const PoleGrid& grid, double q_star);

// ---------------------------------------------------------------------------
// Optimal-Q distance for two-step variants: summed regret of the
// decentralized-greedy joint policy against the cooperative optimum, over
// probe states {s1, s2, s3}. Zero iff the greedy joint actions are optimal.
// ---------------------------------------------------------------------------

double optimal_q_distance(envs::TwoStepVariant variant, const qnn::QnnConfig& cfg,
                          const qnn::AngleParams& phi,
                          const std::vector<qnn::PoleParams>& poles);

// Routing-agent Q rows at the probe states (s1 row uses the pre-route
// observation, s2/s3 rows the second-step observation), clean poles.
std::array<std::array<double, 2>, 3> twostep_meta_qtable(const qnn::QnnConfig& cfg,
                                                         const qnn::AngleParams& phi,
                                                         const qnn::PoleParams& theta);

// ---------------------------------------------------------------------------
// Shift-rule vs finite-difference sweep
// ---------------------------------------------------------------------------

struct GradCheckReport {
    int n_configs = 0;
    double tolerance = 0.0;        // shift-vs-FD tolerance; losses use 10x
    double max_angle_dev = 0.0;    // angle-domain shift rule vs FD
    double max_pole_dev = 0.0;     // pole-domain shift rule vs FD
    double max_meta_loss_dev = 0.0;  // analytic meta-loss grad vs FD (frozen argmax)
    double max_pole_loss_dev = 0.0;  // analytic pole-loss grad vs FD
    bool pass = false;
};

// negate_analytic flips the sign of every analytic gradient before the
// comparison — a deliberate-failure self-test of the harness.
GradCheckReport gradcheck_suite(int n_configs, double tolerance, std::uint64_t seed = 7,
                                bool negate_analytic = false);

}  // namespace qm2arl::analysis
