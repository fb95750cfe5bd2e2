#include "qm2arl/qnn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qm2arl/parallel.hpp"

namespace qm2arl::qnn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_angles(const QnnConfig& cfg, const AngleParams& phi) {
    if (static_cast<int>(phi.size()) != cfg.num_angles())
        throw std::invalid_argument("angle vector length " + std::to_string(phi.size()) +
                                    " does not match 3*L*D = " + std::to_string(cfg.num_angles()));
    for (double v : phi)
        if (!std::isfinite(v)) throw std::invalid_argument("angle vector has a non-finite entry");
}

void check_poles(const QnnConfig& cfg, const PoleParams& theta) {
    if (static_cast<int>(theta.size()) != cfg.num_poles())
        throw std::invalid_argument("pole vector length " + std::to_string(theta.size()) +
                                    " does not match 2*L = " + std::to_string(cfg.num_poles()));
    for (double v : theta)
        if (!std::isfinite(v)) throw std::invalid_argument("pole vector has a non-finite entry");
}

void check_action(const QnnConfig& cfg, int action) {
    if (action < 0 || action >= cfg.num_actions())
        throw std::out_of_range("action " + std::to_string(action) + " has no measured-qubit set");
}

}  // namespace

void QnnConfig::validate() const {
    if (num_qubits < 1 || num_qubits > 12)
        throw std::invalid_argument("QnnConfig: qubit count must be in [1, 12]");
    if (depth < 0) throw std::invalid_argument("QnnConfig: depth must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("QnnConfig: beta must be positive");
    if (action_qubits.empty()) throw std::invalid_argument("QnnConfig: no actions configured");
    for (const auto& ma : action_qubits) {
        if (ma.empty()) throw std::invalid_argument("QnnConfig: empty measured-qubit set");
        for (int m : ma)
            if (m < 1 || m > num_qubits)
                throw std::invalid_argument("QnnConfig: measured qubit " + std::to_string(m) +
                                            " outside [1, " + std::to_string(num_qubits) + "]");
    }
}

QnnConfig twostep_default_config() {
    QnnConfig cfg;
    cfg.num_qubits = 3;
    cfg.depth = 5;
    cfg.beta = 8.0;
    cfg.action_qubits = {{2}, {3}};
    return cfg;
}

QnnConfig singlehop_default_config() {
    QnnConfig cfg;
    cfg.num_qubits = 4;
    cfg.depth = 4;
    cfg.beta = 8.0;
    cfg.action_qubits = {{1}, {2}, {3}, {4}};
    return cfg;
}

double wrap_angle(double x) {
    return x - 2.0 * kPi * std::floor((x + kPi) / (2.0 * kPi));
}

int angle_index(const QnnConfig& cfg, int layer, int qubit, int slot) {
    return layer * 3 * cfg.num_qubits + (qubit - 1) * 3 + slot;
}

qcore::Statevector encode(const QnnConfig& cfg, const Observation& o) {
    if (static_cast<int>(o.size()) != cfg.num_qubits)
        throw std::invalid_argument("observation length " + std::to_string(o.size()) +
                                    " does not match qubit count " +
                                    std::to_string(cfg.num_qubits));
    for (double v : o)
        if (!(v >= -1e-12 && v <= kPi + 1e-12))
            throw std::invalid_argument("observation angle outside [0, pi]");
    qcore::Statevector s = qcore::zero_state(cfg.num_qubits);
    for (int q = 1; q <= cfg.num_qubits; ++q)
        qcore::apply_1q_inplace(s, qcore::rotation_gate(qcore::Axis::Y, o[q - 1]), q);
    return s;
}

qcore::Statevector pqc_forward(const qcore::Statevector& state, const QnnConfig& cfg,
                               const AngleParams& phi) {
    if (state.num_qubits != cfg.num_qubits)
        throw std::invalid_argument("pqc_forward: state qubit count mismatch");
    check_angles(cfg, phi);
    qcore::Statevector s = state;
    const int L = cfg.num_qubits;
    int i = 0;
    for (int d = 0; d < cfg.depth; ++d) {
        for (int q = 1; q <= L; ++q) {
            qcore::apply_1q_inplace(s, qcore::rotation_gate(qcore::Axis::X, phi[i++]), q);
            qcore::apply_1q_inplace(s, qcore::rotation_gate(qcore::Axis::Y, phi[i++]), q);
            qcore::apply_1q_inplace(s, qcore::rotation_gate(qcore::Axis::Z, phi[i++]), q);
        }
        if (L > 1)
            for (int q = 1; q <= L; ++q) qcore::apply_cnot_inplace(s, q, (q % L) + 1);
    }
    return s;
}

qcore::Statevector forward(const QnnConfig& cfg, const Observation& o, const AngleParams& phi) {
    return pqc_forward(encode(cfg, o), cfg, phi);
}

qcore::Gate2x2 pole_observable(double theta_polar, double theta_azimuth) {
    if (!std::isfinite(theta_polar) || !std::isfinite(theta_azimuth))
        throw std::domain_error("pole_observable: non-finite angle");
    using qcore::Gate2x2;
    const Gate2x2 u = qcore::multiply(qcore::rotation_gate(qcore::Axis::Y, theta_polar),
                                      qcore::rotation_gate(qcore::Axis::Z, theta_azimuth));
    return qcore::multiply(qcore::multiply(qcore::adjoint(u), qcore::pauli(qcore::Axis::Z)), u);
}

double observable_sum(const QnnConfig& cfg, const qcore::Statevector& state, int action,
                      const PoleParams& theta) {
    check_action(cfg, action);
    check_poles(cfg, theta);
    double acc = 0.0;
    for (int m : cfg.action_qubits[action]) {
        const qcore::Gate2x2 obs =
            pole_observable(theta[pole_polar_index(m)], theta[pole_azimuth_index(m)]);
        acc += qcore::expect_1q(state, obs, m);
    }
    return acc;
}

double q_value(const QnnConfig& cfg, const Observation& o, int action, const AngleParams& phi,
               const PoleParams& theta) {
    return q_value_on_state(cfg, forward(cfg, o, phi), action, theta);
}

double q_value_on_state(const QnnConfig& cfg, const qcore::Statevector& state, int action,
                        const PoleParams& theta) {
    return cfg.beta * observable_sum(cfg, state, action, theta);
}

std::vector<double> q_values_all(const QnnConfig& cfg, const Observation& o,
                                 const AngleParams& phi, const PoleParams& theta) {
    return q_values_on_state(cfg, forward(cfg, o, phi), theta);
}

std::vector<double> q_values_on_state(const QnnConfig& cfg, const qcore::Statevector& state,
                                      const PoleParams& theta) {
    std::vector<double> q(cfg.action_qubits.size());
    for (int a = 0; a < cfg.num_actions(); ++a) q[a] = q_value_on_state(cfg, state, a, theta);
    return q;
}

std::vector<double> softmax(const std::vector<double>& q, double temperature) {
    if (!(temperature > 0.0)) throw std::domain_error("softmax: temperature must be positive");
    const double mx = *std::max_element(q.begin(), q.end());
    std::vector<double> p(q.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        p[i] = std::exp((q[i] - mx) / temperature);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> policy(const QnnConfig& cfg, const Observation& o, const AngleParams& phi,
                           const PoleParams& theta, double temperature) {
    return softmax(q_values_all(cfg, o, phi, theta), temperature);
}

std::vector<double> grad_angle_shift(const QnnConfig& cfg, const Observation& o, int action,
                                     const AngleParams& phi, const PoleParams& theta) {
    check_angles(cfg, phi);
    const qcore::Statevector enc = encode(cfg, o);
    std::vector<double> g(phi.size());
    parallel_for(static_cast<int>(phi.size()), [&](int k) {
        AngleParams shifted = phi;
        shifted[static_cast<std::size_t>(k)] = phi[static_cast<std::size_t>(k)] + kHalfPi;
        const double up = observable_sum(cfg, pqc_forward(enc, cfg, shifted), action, theta);
        shifted[static_cast<std::size_t>(k)] = phi[static_cast<std::size_t>(k)] - kHalfPi;
        const double dn = observable_sum(cfg, pqc_forward(enc, cfg, shifted), action, theta);
        g[static_cast<std::size_t>(k)] = (up - dn) / 2.0;
    });
    return g;
}

std::vector<double> grad_pole_shift(const QnnConfig& cfg, const Observation& o, int action,
                                    const AngleParams& phi, const PoleParams& theta) {
    return grad_pole_shift_on_state(cfg, forward(cfg, o, phi), action, theta);
}

std::vector<double> grad_pole_shift_on_state(const QnnConfig& cfg,
                                             const qcore::Statevector& state, int action,
                                             const PoleParams& theta) {
    check_action(cfg, action);
    check_poles(cfg, theta);
    std::vector<double> g(theta.size(), 0.0);
    PoleParams shifted = theta;
    for (int m : cfg.action_qubits[action]) {
        for (int j : {pole_polar_index(m), pole_azimuth_index(m)}) {
            shifted[j] = theta[j] + kHalfPi;
            const double up = observable_sum(cfg, state, action, shifted);
            shifted[j] = theta[j] - kHalfPi;
            const double dn = observable_sum(cfg, state, action, shifted);
            shifted[j] = theta[j];
            g[j] = (up - dn) / 2.0;
        }
    }
    return g;
}

std::vector<double> grad_fd(const QnnConfig& cfg, const Observation& o, int action,
                            const AngleParams& phi, const PoleParams& theta, GradDomain domain,
                            double c) {
    if (!(c > 0.0) || c > 1e-2) throw std::domain_error("grad_fd: step must be in (0, 1e-2]");
    if (domain == GradDomain::Angle) {
        const qcore::Statevector enc = encode(cfg, o);
        std::vector<double> g(phi.size());
        AngleParams shifted = phi;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            shifted[k] = phi[k] + c;
            const double up = observable_sum(cfg, pqc_forward(enc, cfg, shifted), action, theta);
            shifted[k] = phi[k] - c;
            const double dn = observable_sum(cfg, pqc_forward(enc, cfg, shifted), action, theta);
            shifted[k] = phi[k];
            g[k] = (up - dn) / (2.0 * c);
        }
        return g;
    }
    const qcore::Statevector state = forward(cfg, o, phi);
    std::vector<double> g(theta.size());
    PoleParams shifted = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        shifted[j] = theta[j] + c;
        const double up = observable_sum(cfg, state, action, shifted);
        shifted[j] = theta[j] - c;
        const double dn = observable_sum(cfg, state, action, shifted);
        shifted[j] = theta[j];
        g[j] = (up - dn) / (2.0 * c);
    }
    return g;
}

}  // namespace qm2arl::qnn
