#include "qm2arl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qm2arl/parallel.hpp"
#include "qm2arl/qcore.hpp"
#include "qm2arl/rng.hpp"

namespace qm2arl::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double a) { return a == 0.0 ? 1.0 : std::sin(a) / a; }

void check_alpha(double alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha > kPi)
        throw std::invalid_argument("alpha must lie in [0, pi]");
}

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// <M(tp + u, ta)> on a fixed state factors as cos(tp+u)*z - sin(tp+u)*w with
// w = cos(ta)<X> - sin(ta)<Y>; noise then costs two trig calls per sample.
struct PoleSection {
    double z = 0.0;
    double w = 0.0;
};

PoleSection pole_section(const qcore::Statevector& state, int qubit, double theta_azimuth) {
    const double x = qcore::expect_1q(state, qcore::pauli(qcore::Axis::X), qubit);
    const double y = qcore::expect_1q(state, qcore::pauli(qcore::Axis::Y), qubit);
    const double z = qcore::expect_1q(state, qcore::pauli(qcore::Axis::Z), qubit);
    return {z, std::cos(theta_azimuth) * x - std::sin(theta_azimuth) * y};
}

double section_value(const PoleSection& s, double theta_polar) {
    return std::cos(theta_polar) * s.z - std::sin(theta_polar) * s.w;
}

}  // namespace

LemmaReport lemma1_check(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                         const qnn::PoleParams& theta, double alpha, const qnn::Observation& o,
                         int action, long n_samples, std::uint64_t seed) {
    cfg.validate();
    check_alpha(alpha);
    const qcore::Statevector state = qnn::forward(cfg, o, phi);
    const double q_clean = cfg.beta * qnn::observable_sum(cfg, state, action, theta);

    LemmaReport report;
    report.alpha = alpha;
    report.analytic_prediction = sinc(alpha) * q_clean;

    if (alpha == 0.0) {
        report.monte_carlo_estimate = q_clean;
        report.sample_count = 0;
        report.standard_error = 0.0;
        report.pass = true;
        return report;
    }
    if (n_samples < 2) throw std::invalid_argument("lemma1_check needs at least 2 samples");

    struct Term {
        double tp;
        PoleSection section;
    };
    std::vector<Term> terms;
    for (int m : cfg.action_qubits[static_cast<std::size_t>(action)]) {
        terms.push_back({theta[static_cast<std::size_t>(qnn::pole_polar_index(m))],
                         pole_section(state, m,
                                      theta[static_cast<std::size_t>(qnn::pole_azimuth_index(m))])});
    }

    Rng rng(seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        double val = 0.0;
        for (const Term& t : terms) {
            const double u = rng.uniform(-alpha, alpha);
            val += section_value(t.section, t.tp + u);
        }
        const double q = cfg.beta * val;
        const double delta = q - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (q - mean);
    }
    const double variance = m2 / static_cast<double>(n_samples - 1);
    report.monte_carlo_estimate = mean;
    report.sample_count = n_samples;
    report.standard_error = std::sqrt(std::max(variance, 0.0) / static_cast<double>(n_samples));
    report.pass = std::abs(report.monte_carlo_estimate - report.analytic_prediction) <=
                  5.0 * report.standard_error + 1e-3;
    return report;
}

Lemma3Report lemma3_check(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                          const qnn::AngleParams& phi_target, const qnn::PoleParams& theta,
                          double alpha, const train::MetaEpisode& episode, int k, long n_samples,
                          std::uint64_t seed) {
    cfg.validate();
    check_alpha(alpha);
    if (episode.empty()) throw std::invalid_argument("lemma3_check: episode is empty");
    if (k < 0 || k >= cfg.num_angles())
        throw std::out_of_range("lemma3_check: angle coordinate out of range");
    if (n_samples < 2) throw std::invalid_argument("lemma3_check needs at least 2 samples");
    for (const auto& qubits : cfg.action_qubits)
        if (qubits.size() != 1)
            throw std::invalid_argument(
                "lemma3_check applies to single-measured-qubit action maps");

    const double g1 = sinc(alpha);
    const double g2 = sinc(2.0 * alpha);
    const double beta = cfg.beta;
    const double episodes = static_cast<double>(episode.size());

    struct Tau {
        double tp = 0.0;
        double c = 0.0;  // r/beta + clean target max (0 if terminal)
        PoleSection s0, sp, sm;
    };
    std::vector<Tau> taus;
    double bound_sum = 0.0;

    qnn::AngleParams shifted = phi;
    for (const train::MetaStep& step : episode) {
        Tau tau;
        const int m = cfg.action_qubits[static_cast<std::size_t>(step.action)][0];
        tau.tp = theta[static_cast<std::size_t>(qnn::pole_polar_index(m))];
        const double ta = theta[static_cast<std::size_t>(qnn::pole_azimuth_index(m))];

        const qcore::Statevector psi0 = qnn::forward(cfg, step.obs, phi);
        shifted[static_cast<std::size_t>(k)] = phi[static_cast<std::size_t>(k)] + kPi / 2.0;
        const qcore::Statevector psip = qnn::forward(cfg, step.obs, shifted);
        shifted[static_cast<std::size_t>(k)] = phi[static_cast<std::size_t>(k)] - kPi / 2.0;
        const qcore::Statevector psim = qnn::forward(cfg, step.obs, shifted);
        shifted[static_cast<std::size_t>(k)] = phi[static_cast<std::size_t>(k)];

        tau.s0 = pole_section(psi0, m, ta);
        tau.sp = pole_section(psip, m, ta);
        tau.sm = pole_section(psim, m, ta);

        tau.c = step.reward / beta;
        if (!step.terminal) {
            const qcore::Statevector psit = qnn::forward(cfg, step.next_obs, phi_target);
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < cfg.num_actions(); ++a)
                best = std::max(best, qnn::observable_sum(cfg, psit, a, theta));
            tau.c += best;
        }

        const double a3 = (tau.c - 1.0) * (tau.c - 1.0);
        const double overlap = std::norm(qcore::inner_product(psip, psim));
        const double tr_a4_sq = 2.0 - 2.0 * overlap;  // Tr(A4^2 M^2), M^2 = I
        const double tr_a4m = section_value(tau.sp, tau.tp) - section_value(tau.sm, tau.tp);
        bound_sum += g2 * a3 * tr_a4_sq - g1 * g1 * tr_a4m * tr_a4m;

        taus.push_back(tau);
    }

    Lemma3Report report;
    report.alpha = alpha;
    report.sample_count = n_samples;
    report.bound =
        4.0 * beta * beta * beta * beta * bound_sum / (episodes * episodes);

    Rng rng(seed);
    std::vector<double> samples(static_cast<std::size_t>(n_samples));
    for (long i = 0; i < n_samples; ++i) {
        double total = 0.0;
        for (const Tau& tau : taus) {
            const double u = rng.uniform(-alpha, alpha);
            const double o0 = section_value(tau.s0, tau.tp + u);
            const double gshift = (section_value(tau.sp, tau.tp + u) -
                                   section_value(tau.sm, tau.tp + u)) /
                                  2.0;
            total += -2.0 * beta * beta * (tau.c - o0) * gshift;
        }
        samples[static_cast<std::size_t>(i)] = total / episodes;
    }

    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    double m4 = 0.0;
    for (double s : samples) {
        const double d = s - mean;
        var += d * d;
        m4 += d * d * d * d;
    }
    var /= static_cast<double>(n_samples - 1);
    m4 /= static_cast<double>(n_samples);
    report.variance_estimate = var;
    report.standard_error =
        std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(n_samples));
    report.pass = report.variance_estimate <= report.bound + 5.0 * report.standard_error;
    return report;
}

PoleGrid pole_grid_probe(const qnn::QnnConfig& cfg, const qnn::AngleParams& phi,
                         const qnn::Observation& o, const std::vector<int>& action_set,
                         const std::string& state_label) {
    cfg.validate();
    std::vector<int> actions = action_set;
    if (actions.empty()) {
        actions.resize(static_cast<std::size_t>(cfg.num_actions()));
        for (int a = 0; a < cfg.num_actions(); ++a) actions[static_cast<std::size_t>(a)] = a;
    }
    for (int a : actions)
        if (a < 0 || a >= cfg.num_actions())
            throw std::out_of_range("pole_grid_probe: action index out of range");

    std::vector<int> qubits;
    for (int a : actions)
        for (int m : cfg.action_qubits[static_cast<std::size_t>(a)])
            if (std::find(qubits.begin(), qubits.end(), m) == qubits.end()) qubits.push_back(m);

    int coord1 = 0;
    int coord2 = 0;
    if (qubits.size() == 1) {
        coord1 = qnn::pole_polar_index(qubits[0]);
        coord2 = qnn::pole_azimuth_index(qubits[0]);
    } else {
        coord1 = qnn::pole_polar_index(qubits[0]);
        coord2 = qnn::pole_polar_index(qubits[1]);
    }

    const qcore::Statevector state = qnn::forward(cfg, o, phi);

    PoleGrid grid;
    grid.state_label = state_label;
    const int points = 33;
    const double step = kPi / 16.0;
    grid.axis_values.resize(points);
    for (int i = 0; i < points; ++i) grid.axis_values[static_cast<std::size_t>(i)] = -kPi + step * i;

    grid.values.assign(points, std::vector<double>(points, 0.0));
    parallel_for(points, [&](int i) {
        qnn::PoleParams theta(static_cast<std::size_t>(cfg.num_poles()), 0.0);
        theta[static_cast<std::size_t>(coord1)] = grid.axis_values[static_cast<std::size_t>(i)];
        for (int j = 0; j < points; ++j) {
            theta[static_cast<std::size_t>(coord2)] =
                grid.axis_values[static_cast<std::size_t>(j)];
            double best = -std::numeric_limits<double>::infinity();
            for (int a : actions)
                best = std::max(best, qnn::q_value_on_state(cfg, state, a, theta));
            grid.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = best;
        }
    });
    return grid;
}

std::vector<std::vector<double>> d_norm(const PoleGrid& grid, double q_star) {
    if (grid.values.empty()) throw std::invalid_argument("d_norm: empty grid");
    std::vector<std::vector<double>> dist(grid.values.size());
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        dist[i].resize(grid.values[i].size());
        for (std::size_t j = 0; j < grid.values[i].size(); ++j) {
            const double d = std::abs(q_star - grid.values[i][j]);
            dist[i][j] = d;
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
    }
    const double denom = dmax - dmin;
    if (denom == 0.0) {
        if (dmax == 0.0) return dist;  // exact match everywhere
        throw std::domain_error("d_norm: degenerate (constant nonzero) distance grid");
    }
    for (auto& row : dist)
        for (double& v : row) v /= denom;
    return dist;
}

double optimal_q_distance(envs::TwoStepVariant variant, const qnn::QnnConfig& cfg,
                          const qnn::AngleParams& phi,
                          const std::vector<qnn::PoleParams>& poles) {
    if (poles.size() != 2)
        throw std::invalid_argument("optimal_q_distance expects one pole vector per agent (2)");
    const auto oracle = envs::twostep_optimal_q(variant, envs::OpponentModel::BestResponse);
    const double v_s2 = std::max(oracle.q[1][0], oracle.q[1][1]);
    const double v_s3 = std::max(oracle.q[2][0], oracle.q[2][1]);
    const double v_s1 = std::max(oracle.q[0][0], oracle.q[0][1]);
    const auto s3 = envs::twostep_s3_matrix(variant);

    double distance = 0.0;
    // s3: both agents pick greedily; regret of the realized joint payoff.
    int greedy[2];
    for (int n = 0; n < 2; ++n) {
        const qnn::Observation obs =
            envs::twostep_observation(envs::TwoStepState::S3, n, 1, cfg.num_qubits);
        greedy[n] = argmax_index(qnn::q_values_all(cfg, obs, phi, poles[static_cast<std::size_t>(n)]));
    }
    distance += v_s3 - s3[static_cast<std::size_t>(greedy[0])][static_cast<std::size_t>(greedy[1])];
    // s2 pays a constant regardless of the joint action: zero regret.
    // s1: the routing agent's greedy choice, scored by the continuation value.
    const qnn::Observation obs1 =
        envs::twostep_observation(envs::TwoStepState::S1, 0, 0, cfg.num_qubits);
    const int route = argmax_index(qnn::q_values_all(cfg, obs1, phi, poles[0]));
    distance += v_s1 - (route == 0 ? v_s2 : v_s3);
    return distance;
}

std::array<std::array<double, 2>, 3> twostep_meta_qtable(const qnn::QnnConfig& cfg,
                                                         const qnn::AngleParams& phi,
                                                         const qnn::PoleParams& theta) {
    std::array<std::array<double, 2>, 3> table{};
    const envs::TwoStepState states[3] = {envs::TwoStepState::S1, envs::TwoStepState::S2,
                                          envs::TwoStepState::S3};
    for (int s = 0; s < 3; ++s) {
        const int step = s == 0 ? 0 : 1;
        const qnn::Observation obs =
            envs::twostep_observation(states[s], 0, step, cfg.num_qubits);
        const std::vector<double> q = qnn::q_values_all(cfg, obs, phi, theta);
        table[static_cast<std::size_t>(s)] = {q[0], q[1]};
    }
    return table;
}

GradCheckReport gradcheck_suite(int n_configs, double tolerance, std::uint64_t seed,
                                bool negate_analytic) {
    if (n_configs < 1) throw std::invalid_argument("gradcheck_suite needs at least one config");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const qnn::QnnConfig cfg = qnn::twostep_default_config();
    Rng rng(seed);
    const double c = 1e-3;
    const double sign = negate_analytic ? -1.0 : 1.0;

    GradCheckReport report;
    report.n_configs = n_configs;
    report.tolerance = tolerance;

    auto random_obs = [&] {
        qnn::Observation o(static_cast<std::size_t>(cfg.num_qubits));
        for (double& v : o) v = rng.uniform(0.0, kPi);
        return o;
    };
    auto random_angles = [&] {
        qnn::AngleParams phi(static_cast<std::size_t>(cfg.num_angles()));
        for (double& v : phi) v = rng.uniform(-kPi, kPi);
        return phi;
    };
    auto random_poles = [&] {
        qnn::PoleParams theta(static_cast<std::size_t>(cfg.num_poles()));
        for (double& v : theta) v = rng.uniform(-kPi, kPi);
        return theta;
    };

    for (int i = 0; i < n_configs; ++i) {
        const qnn::Observation o = random_obs();
        const qnn::AngleParams phi = random_angles();
        const qnn::PoleParams theta = random_poles();
        const int action = rng.integer(cfg.num_actions());

        const auto ga = qnn::grad_angle_shift(cfg, o, action, phi, theta);
        const auto fa = qnn::grad_fd(cfg, o, action, phi, theta, qnn::GradDomain::Angle, c);
        for (std::size_t k = 0; k < ga.size(); ++k)
            report.max_angle_dev = std::max(report.max_angle_dev, std::abs(sign * ga[k] - fa[k]));

        const auto gp = qnn::grad_pole_shift(cfg, o, action, phi, theta);
        const auto fp = qnn::grad_fd(cfg, o, action, phi, theta, qnn::GradDomain::Pole, c);
        for (std::size_t k = 0; k < gp.size(); ++k)
            report.max_pole_dev = std::max(report.max_pole_dev, std::abs(sign * gp[k] - fp[k]));
    }

    // Loss-level checks are quadratic in |phi|; a tenth of the configs keeps
    // the suite fast while exercising fresh random draws each time.
    const int n_loss = std::max(1, n_configs / 10);
    for (int i = 0; i < n_loss; ++i) {
        train::MetaEpisode episode(2);
        for (std::size_t t = 0; t < episode.size(); ++t) {
            episode[t].obs = random_obs();
            episode[t].next_obs = random_obs();
            episode[t].action = rng.integer(cfg.num_actions());
            episode[t].reward = rng.uniform(-2.0, 10.0);
            episode[t].terminal = t + 1 == episode.size();
            episode[t].noise = random_poles();
            for (double& v : episode[t].noise) v *= 0.25;
        }
        qnn::AngleParams phi = random_angles();
        const qnn::AngleParams phi_target = random_angles();
        const qnn::PoleParams theta = random_poles();
        const std::vector<int> frozen = train::meta_target_actions(cfg, phi, theta, episode);
        const std::vector<double> analytic =
            train::meta_loss_grad(cfg, phi, phi_target, theta, episode, &frozen);
        for (std::size_t k = 0; k < phi.size(); ++k) {
            const double orig = phi[k];
            phi[k] = orig + c;
            const double up = train::meta_td_loss(cfg, phi, phi_target, theta, episode, frozen);
            phi[k] = orig - c;
            const double dn = train::meta_td_loss(cfg, phi, phi_target, theta, episode, frozen);
            phi[k] = orig;
            report.max_meta_loss_dev = std::max(
                report.max_meta_loss_dev, std::abs(sign * analytic[k] - (up - dn) / (2.0 * c)));
        }

        // VDN pole loss on a synthetic 2-agent episode.
        envs::Episode joint(2);
        for (std::size_t t = 0; t < joint.size(); ++t) {
            for (int n = 0; n < 2; ++n) {
                joint[t].joint_obs.push_back(random_obs());
                joint[t].next_joint_obs.push_back(random_obs());
                joint[t].joint_action.push_back(rng.integer(cfg.num_actions()));
            }
            joint[t].reward = rng.uniform(-2.0, 10.0);
            joint[t].terminal = t + 1 == joint.size();
        }
        std::vector<qnn::PoleParams> poles = {random_poles(), random_poles()};
        const std::vector<qnn::PoleParams> poles_target = {random_poles(), random_poles()};
        const std::vector<qnn::PoleParams> analytic_p =
            train::pole_loss_grad(cfg, poles, poles_target, phi, joint);
        for (std::size_t n = 0; n < poles.size(); ++n) {
            for (std::size_t j = 0; j < poles[n].size(); ++j) {
                const double orig = poles[n][j];
                poles[n][j] = orig + c;
                const double up = train::pole_td_loss(cfg, poles, poles_target, phi, joint);
                poles[n][j] = orig - c;
                const double dn = train::pole_td_loss(cfg, poles, poles_target, phi, joint);
                poles[n][j] = orig;
                report.max_pole_loss_dev =
                    std::max(report.max_pole_loss_dev,
                             std::abs(sign * analytic_p[n][j] - (up - dn) / (2.0 * c)));
            }
        }
    }

    report.pass = report.max_angle_dev <= tolerance && report.max_pole_dev <= tolerance &&
                  report.max_meta_loss_dev <= 10.0 * tolerance &&
                  report.max_pole_loss_dev <= 10.0 * tolerance;
    return report;
}

}  // namespace qm2arl::analysis
