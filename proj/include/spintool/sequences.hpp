#pragma once

// Hahn-echo and CPMG coherence signals for one or several weakly coupled
// nuclear spins, via the exact operator formalism and the ESEEM closed form.

#include <utility>
#include <vector>

#include "spintool/spinmath.hpp"

namespace spintool {

struct SpinSystem {
    FieldConfig field;
    ElectronSubspace subspace;
    std::vector<NuclearSpin> nuclei; // nuclear-nuclear couplings neglected
};

enum class SequenceKind { Hahn, Cpmg };

// (tau - pi - tau)^N with ideal instantaneous pi pulses.
// Hahn means N = 1; CPMG requires even N.
struct SequenceSpec {
    SequenceKind kind = SequenceKind::Hahn;
    double tau_us = 0.0;
    int n_pulses = 1;

    void validate() const;
};

struct SignalTrace {
    std::vector<double> abscissa;
    std::vector<double> values;
    std::string unit; // "us" or "pulses"
};

struct EnvelopeParams {
    double amplitude = 1.0;
    double t2 = 1.0; // same unit as the trace abscissa
    double n_stretch = 1.0;
    double y0 = 0.0;
};

struct CoherenceResult {
    double total = 1.0;
    std::vector<double> per_nucleus;
};

// Modulation depth k = (f_L * A_perp / (f0 * f1))^2.
// Throws on degenerate conditional precession.
double hahn_modulation_depth(const NuclearSpin& spin, const ElectronSubspace& subspace,
                             const FieldConfig& field);

// Composed conditional rotations (U, V) for one nucleus over the full sequence.
std::pair<Rotation, Rotation> sequence_operators(const NuclearSpin& spin,
                                                 const ElectronSubspace& subspace,
                                                 const FieldConfig& field,
                                                 const SequenceSpec& spec);

// Per-nucleus coherence M = cos(theta_{V^dag U}/2); total is the product.
// Probability of retaining |s0> is (1 + total)/2.
CoherenceResult sequence_coherence(const SpinSystem& system, const SequenceSpec& spec);

// ESEEM closed form for a single-nucleus Hahn echo; equals the operator
// coherence from sequence_coherence.
double hahn_closed_form(const NuclearSpin& spin, const ElectronSubspace& subspace,
                        const FieldConfig& field, double tau_us);

// Coherence vs tau at fixed pulse number. Grid must be strictly increasing.
SignalTrace tau_sweep(const SpinSystem& system, int n_pulses,
                      const std::vector<double>& tau_grid_us);
SignalTrace tau_sweep_serial(const SpinSystem& system, int n_pulses,
                             const std::vector<double>& tau_grid_us);

// Coherence vs pulse number at fixed tau. All n must be even (n = 0 gives 1).
SignalTrace pulse_sweep(const SpinSystem& system, double tau_us,
                        const std::vector<int>& n_list);
SignalTrace pulse_sweep_serial(const SpinSystem& system, double tau_us,
                               const std::vector<int>& n_list);

// value_i <- A * exp(-(t_i/t2)^n) * value_i + y0
SignalTrace apply_envelope(const SignalTrace& trace, const EnvelopeParams& env);

} // namespace spintool
