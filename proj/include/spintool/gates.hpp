#pragma once

// Full bipartite state-vector simulation of decoupling sequences and
// conditional nuclear-gate fidelities.

#include <complex>
#include <vector>

#include "spintool/sequences.hpp"
#include "spintool/spinmath.hpp"

namespace spintool {

// Product basis {|s0>,|s1>} x {|up>,|down>}^n, electron factor first:
// index = e * 2^n + nuclear bits, nucleus 0 in the most significant
// nuclear bit, bit 0 = |up>.
struct BipartiteState {
    std::vector<std::complex<double>> amps;
    int n_nuclei = 0;

    static BipartiteState basis_state(int n_nuclei, int electron, unsigned nuclear_bits);
    double norm() const;
};

struct ConditionalGate {
    Rotation rot_u; // nuclear rotation given electron |s0>
    Rotation rot_v; // given |s1>
};

enum class GateTarget { BellFamily, NuclearX, Identity };

// Which ideal electron pulses wrap the conditional-evolution blocks:
// the pi/2 at the start, the closing pi that completes an even-N pulse
// train, and the final pi/2 before readout.
struct PulseFrame {
    bool initial_half_pulse = false;
    bool closing_pi = false;
    bool final_half_pulse = false;
};

// Full echo frame: pi/2, sequence (with closing pi), pi/2.
inline constexpr PulseFrame kEchoFrame{true, true, true};

BipartiteState simulate_sequence(const BipartiteState& state0, const SpinSystem& system,
                                 const SequenceSpec& spec, const PulseFrame& frame);

// Composed conditional rotations for the indexed nucleus over the sequence.
ConditionalGate extract_conditional_rotations(const SpinSystem& system, int spin_index,
                                              const SequenceSpec& spec);

// Overlap fidelity |<target|final>|^2 for the gate realised at a resonance tau.
// BellFamily maximises over the four Bell states of the electron-nucleus pair
// (other nuclei follow their own post-sequence state).
double gate_fidelity(const SpinSystem& system, int spin_index, const SequenceSpec& spec,
                     GateTarget target);

// Electron |s0> retention probability after the full echo frame, averaged
// over the nuclear basis states (unpolarized nuclei); equals (1 + M)/2 with
// M the product coherence.
double retention_probability(const SpinSystem& system, const SequenceSpec& spec);

// Product coherence M recovered from the state-vector simulation alone:
// 2 * retention - 1. Cross-checks the operator-composition value.
double electron_coherence(const SpinSystem& system, const SequenceSpec& spec);

} // namespace spintool
