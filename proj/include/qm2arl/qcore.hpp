#pragma once

#include <array>
#include <complex>
#include <vector>

namespace qm2arl::qcore {

using cplx = std::complex<double>;

enum class Axis { X, Y, Z };

// Row-major 2x2 complex matrix: {m00, m01, m10, m11}.
struct Gate2x2 {
    std::array<cplx, 4> m{};

    cplx operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }
};

// L-qubit pure state. Qubits are indexed 1..L externally; amplitude index
// bit (q-1) holds qubit q's basis value (little-endian).
struct Statevector {
    int num_qubits = 0;
    std::vector<cplx> amps;
};

Statevector zero_state(int num_qubits);

Gate2x2 identity_gate();
Gate2x2 pauli(Axis axis);
// exp(-i*delta/2 * P_axis)
Gate2x2 rotation_gate(Axis axis, double delta);
Gate2x2 multiply(const Gate2x2& a, const Gate2x2& b);
Gate2x2 adjoint(const Gate2x2& g);
// max-abs-entry norm of (U†U - I); 0 for exactly unitary U
double unitarity_defect(const Gate2x2& g);
// max-abs-entry norm of (M - M†)
double hermiticity_defect(const Gate2x2& g);

void apply_1q_inplace(Statevector& state, const Gate2x2& gate, int target);
Statevector apply_1q(const Statevector& state, const Gate2x2& gate, int target);

void apply_cnot_inplace(Statevector& state, int control, int target);
Statevector apply_cnot(const Statevector& state, int control, int target);

// <state| I ⊗ obs(qubit) ⊗ I |state> for a Hermitian single-qubit observable.
double expect_1q(const Statevector& state, const Gate2x2& obs, int qubit);

double norm(const Statevector& state);
cplx inner_product(const Statevector& a, const Statevector& b);

}  // namespace qm2arl::qcore
