#include "qm2arl/qcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qm2arl::qcore {

namespace {

constexpr double kHermTol = 1e-12;

void check_qubit(const Statevector& state, int qubit, const char* what) {
    if (qubit < 1 || qubit > state.num_qubits)
        throw std::out_of_range(std::string(what) + ": qubit index " + std::to_string(qubit) +
                                " outside [1, " + std::to_string(state.num_qubits) + "]");
}

}  // namespace

Statevector zero_state(int num_qubits) {
    if (num_qubits < 1 || num_qubits > 12)
        throw std::invalid_argument("zero_state: qubit count must be in [1, 12], got " +
                                    std::to_string(num_qubits));
    Statevector s;
    s.num_qubits = num_qubits;
    s.amps.assign(std::size_t(1) << num_qubits, cplx(0.0, 0.0));
    s.amps[0] = cplx(1.0, 0.0);
    return s;
}

Gate2x2 identity_gate() { return Gate2x2{{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)}}; }

Gate2x2 pauli(Axis axis) {
    switch (axis) {
        case Axis::X: return Gate2x2{{cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0)}};
        case Axis::Y: return Gate2x2{{cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0)}};
        case Axis::Z: return Gate2x2{{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0)}};
    }
    throw std::invalid_argument("pauli: bad axis");
}

Gate2x2 rotation_gate(Axis axis, double delta) {
    if (!std::isfinite(delta)) throw std::domain_error("rotation_gate: non-finite angle");
    const double c = std::cos(delta / 2.0);
    const double s = std::sin(delta / 2.0);
    switch (axis) {
        case Axis::X:
            return Gate2x2{{cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0)}};
        case Axis::Y:
            return Gate2x2{{cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0)}};
        case Axis::Z:
            return Gate2x2{{cplx(c, -s), cplx(0, 0), cplx(0, 0), cplx(c, s)}};
    }
    throw std::invalid_argument("rotation_gate: bad axis");
}

Gate2x2 multiply(const Gate2x2& a, const Gate2x2& b) {
    Gate2x2 r;
    r.m[0] = a.m[0] * b.m[0] + a.m[1] * b.m[2];
    r.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[3];
    r.m[2] = a.m[2] * b.m[0] + a.m[3] * b.m[2];
    r.m[3] = a.m[2] * b.m[1] + a.m[3] * b.m[3];
    return r;
}

Gate2x2 adjoint(const Gate2x2& g) {
    return Gate2x2{{std::conj(g.m[0]), std::conj(g.m[2]), std::conj(g.m[1]), std::conj(g.m[3])}};
}

double unitarity_defect(const Gate2x2& g) {
    const Gate2x2 p = multiply(adjoint(g), g);
    double d = 0.0;
    d = std::max(d, std::abs(p.m[0] - cplx(1, 0)));
    d = std::max(d, std::abs(p.m[1]));
    d = std::max(d, std::abs(p.m[2]));
    d = std::max(d, std::abs(p.m[3] - cplx(1, 0)));
    return d;
}

double hermiticity_defect(const Gate2x2& g) {
    double d = 0.0;
    d = std::max(d, std::abs(g.m[0] - std::conj(g.m[0])));
    d = std::max(d, std::abs(g.m[1] - std::conj(g.m[2])));
    d = std::max(d, std::abs(g.m[3] - std::conj(g.m[3])));
    return d;
}

void apply_1q_inplace(Statevector& state, const Gate2x2& gate, int target) {
    check_qubit(state, target, "apply_1q");
    const std::size_t bit = std::size_t(1) << (target - 1);
    const std::size_t dim = state.amps.size();
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & bit) continue;
        const cplx a0 = state.amps[base];
        const cplx a1 = state.amps[base | bit];
        state.amps[base] = gate.m[0] * a0 + gate.m[1] * a1;
        state.amps[base | bit] = gate.m[2] * a0 + gate.m[3] * a1;
    }
}

Statevector apply_1q(const Statevector& state, const Gate2x2& gate, int target) {
    Statevector out = state;
    apply_1q_inplace(out, gate, target);
    return out;
}

void apply_cnot_inplace(Statevector& state, int control, int target) {
    check_qubit(state, control, "apply_cnot");
    check_qubit(state, target, "apply_cnot");
    if (control == target) throw std::invalid_argument("apply_cnot: control equals target");
    const std::size_t cb = std::size_t(1) << (control - 1);
    const std::size_t tb = std::size_t(1) << (target - 1);
    const std::size_t dim = state.amps.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cb) && !(i & tb)) std::swap(state.amps[i], state.amps[i | tb]);
    }
}

Statevector apply_cnot(const Statevector& state, int control, int target) {
    Statevector out = state;
    apply_cnot_inplace(out, control, target);
    return out;
}

double expect_1q(const Statevector& state, const Gate2x2& obs, int qubit) {
    check_qubit(state, qubit, "expect_1q");
    if (hermiticity_defect(obs) > kHermTol)
        throw std::domain_error("expect_1q: observable is not Hermitian");
    const std::size_t bit = std::size_t(1) << (qubit - 1);
    const std::size_t dim = state.amps.size();
    cplx acc(0.0, 0.0);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & bit) continue;
        const cplx a0 = state.amps[base];
        const cplx a1 = state.amps[base | bit];
        acc += std::conj(a0) * (obs.m[0] * a0 + obs.m[1] * a1);
        acc += std::conj(a1) * (obs.m[2] * a0 + obs.m[3] * a1);
    }
    return acc.real();
}

double norm(const Statevector& state) {
    double s = 0.0;
    for (const cplx& a : state.amps) s += std::norm(a);
    return std::sqrt(s);
}

cplx inner_product(const Statevector& a, const Statevector& b) {
    if (a.amps.size() != b.amps.size())
        throw std::invalid_argument("inner_product: dimension mismatch");
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < a.amps.size(); ++i) acc += std::conj(a.amps[i]) * b.amps[i];
    return acc;
}

}  // namespace qm2arl::qcore
