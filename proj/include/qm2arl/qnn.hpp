#pragma once

#include <vector>

#include "qm2arl/qcore.hpp"

namespace qm2arl::qnn {

// Flat angle vector, layout (layer, qubit, axis-slot), length 3*L*D.
using AngleParams = std::vector<double>;
// Flat pole vector, layout (qubit, [polar, azimuth]), length 2*L. Every qubit
// carries a pole pair; qubits outside the measured sets never influence Q.
using PoleParams = std::vector<double>;
// Encoding angles, length L, entries in [0, pi].
using Observation = std::vector<double>;

enum class GradDomain { Angle, Pole };

struct QnnConfig {
    int num_qubits = 3;
    int depth = 5;
    double beta = 8.0;
    // action index -> measured qubit set M_a (1-based qubit indices)
    std::vector<std::vector<int>> action_qubits;

    int num_angles() const { return 3 * num_qubits * depth; }
    int num_poles() const { return 2 * num_qubits; }
    int num_actions() const { return static_cast<int>(action_qubits.size()); }
    void validate() const;
};

// Default two-step mapping: action 0 -> qubit 2, action 1 -> qubit 3 (L=3, D=5).
QnnConfig twostep_default_config();
// Single-hop mapping: 4 actions, action a -> qubit a+1 (L=4, D=4).
QnnConfig singlehop_default_config();

double wrap_angle(double x);  // into [-pi, pi]

inline int pole_polar_index(int qubit) { return 2 * (qubit - 1); }
inline int pole_azimuth_index(int qubit) { return 2 * (qubit - 1) + 1; }
int angle_index(const QnnConfig& cfg, int layer, int qubit, int slot);

// |psi_o> = prod_k R_y(o_k)|0>
qcore::Statevector encode(const QnnConfig& cfg, const Observation& o);

// Per layer: R_x, R_y, R_z on each qubit, then the CNOT ring q -> (q mod L)+1.
// The ring is skipped at L = 1 (a 1-qubit register has no valid CNOT).
qcore::Statevector pqc_forward(const qcore::Statevector& state, const QnnConfig& cfg,
                               const AngleParams& phi);

qcore::Statevector forward(const QnnConfig& cfg, const Observation& o, const AngleParams& phi);

// M(theta_polar, theta_azimuth) = U† Z U with U = R_y(theta_polar) * R_z(theta_azimuth).
qcore::Gate2x2 pole_observable(double theta_polar, double theta_azimuth);

// sum_{m in M_a} <M_{theta_m}> on a prepared state (no beta scaling)
double observable_sum(const QnnConfig& cfg, const qcore::Statevector& state, int action,
                      const PoleParams& theta);

// Q(o, a; phi, theta) = beta * sum_{m in M_a} <M_{theta_m}>
double q_value(const QnnConfig& cfg, const Observation& o, int action, const AngleParams& phi,
               const PoleParams& theta);
double q_value_on_state(const QnnConfig& cfg, const qcore::Statevector& state, int action,
                        const PoleParams& theta);
std::vector<double> q_values_all(const QnnConfig& cfg, const Observation& o,
                                 const AngleParams& phi, const PoleParams& theta);
std::vector<double> q_values_on_state(const QnnConfig& cfg, const qcore::Statevector& state,
                                      const PoleParams& theta);

// softmax(Q(o, .)/temperature)
std::vector<double> policy(const QnnConfig& cfg, const Observation& o, const AngleParams& phi,
                           const PoleParams& theta, double temperature);
std::vector<double> softmax(const std::vector<double>& q, double temperature);

// d<O_a>/dphi_k by the exact ±pi/2 parameter shift; length |phi|, unscaled by beta.
std::vector<double> grad_angle_shift(const QnnConfig& cfg, const Observation& o, int action,
                                     const AngleParams& phi, const PoleParams& theta);

// d<O_a>/dtheta_j by the exact ±pi/2 shift in the pole domain; full pole-vector
// length with zeros for qubits outside M_a.
std::vector<double> grad_pole_shift(const QnnConfig& cfg, const Observation& o, int action,
                                    const AngleParams& phi, const PoleParams& theta);
std::vector<double> grad_pole_shift_on_state(const QnnConfig& cfg,
                                             const qcore::Statevector& state, int action,
                                             const PoleParams& theta);

// Central finite difference of <O_a> per coordinate of the chosen domain
// (step 0 < c <= 1e-2); the independent gradient oracle.
std::vector<double> grad_fd(const QnnConfig& cfg, const Observation& o, int action,
                            const AngleParams& phi, const PoleParams& theta, GradDomain domain,
                            double c);

}  // namespace qm2arl::qnn
