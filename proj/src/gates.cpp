#include "spintool/gates.hpp"

#include <array>

namespace spintool {

namespace {

using cd = std::complex<double>;

constexpr cd kI{0.0, 1.0};

// SU(2) matrix of a half-angle rotation: U = w*1 - i (v . sigma)
std::array<cd, 4> su2(const Rotation& r) {
    return {cd{r.w, -r.v.z}, cd{-r.v.y, -r.v.x}, cd{r.v.y, -r.v.x}, cd{r.w, r.v.z}};
}

// Ideal electron pulse about y by the given angle (pi flips |s0> <-> |s1>).
std::array<double, 4> electron_ry(double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    return {c, -s, s, c};
}

void apply_electron(BipartiteState& st, const std::array<double, 4>& m) {
    const std::size_t half = st.amps.size() / 2;
    for (std::size_t j = 0; j < half; ++j) {
        const cd a0 = st.amps[j];
        const cd a1 = st.amps[half + j];
        st.amps[j] = m[0] * a0 + m[1] * a1;
        st.amps[half + j] = m[2] * a0 + m[3] * a1;
    }
}

void apply_nuclear(BipartiteState& st, int nucleus, int electron, const std::array<cd, 4>& m) {
    const int n = st.n_nuclei;
    const std::size_t half = st.amps.size() / 2;
    const std::size_t bit = std::size_t{1} << (n - 1 - nucleus);
    const std::size_t base = electron == 0 ? 0 : half;
    for (std::size_t j = 0; j < half; ++j) {
        if (j & bit) continue;
        const std::size_t i_up = base + j;
        const std::size_t i_dn = base + (j | bit);
        const cd a = st.amps[i_up];
        const cd b = st.amps[i_dn];
        st.amps[i_up] = m[0] * a + m[1] * b;
        st.amps[i_dn] = m[2] * a + m[3] * b;
    }
}

// Free evolution for time tau: each nucleus precesses conditionally on the
// electron component; nuclei evolve independently.
void evolve(BipartiteState& st, const SpinSystem& system, double tau_us) {
    for (int e = 0; e < 2; ++e) {
        const double s = e == 0 ? system.subspace.s0 : system.subspace.s1;
        for (int i = 0; i < st.n_nuclei; ++i) {
            const auto cp = conditional_precession(s, system.nuclei[i], system.field);
            apply_nuclear(st, i, e, su2(rotation_from_precession(cp, tau_us)));
        }
    }
}

} // namespace

BipartiteState BipartiteState::basis_state(int n_nuclei, int electron, unsigned nuclear_bits) {
    if (n_nuclei < 0 || n_nuclei > 30)
        throw std::invalid_argument("basis_state: bad nucleus count");
    if (electron != 0 && electron != 1)
        throw std::invalid_argument("basis_state: electron must be 0 or 1");
    if (nuclear_bits >= (1u << n_nuclei))
        throw std::invalid_argument("basis_state: nuclear bits out of range");
    BipartiteState st;
    st.n_nuclei = n_nuclei;
    st.amps.assign(std::size_t{2} << n_nuclei, cd{0.0, 0.0});
    st.amps[(static_cast<std::size_t>(electron) << n_nuclei) + nuclear_bits] = 1.0;
    return st;
}

double BipartiteState::norm() const {
    double s = 0.0;
    for (const auto& a : amps) s += std::norm(a);
    return std::sqrt(s);
}

BipartiteState simulate_sequence(const BipartiteState& state0, const SpinSystem& system,
                                 const SequenceSpec& spec, const PulseFrame& frame) {
    spec.validate();
    if (state0.n_nuclei != static_cast<int>(system.nuclei.size()))
        throw std::invalid_argument("simulate_sequence: nucleus count mismatch");

    BipartiteState st = state0;
    const auto half_pulse = electron_ry(0.5 * kPi);
    const auto pi_pulse = electron_ry(kPi);

    if (frame.initial_half_pulse) apply_electron(st, half_pulse);
    for (int p = 0; p < spec.n_pulses; ++p) {
        evolve(st, system, spec.tau_us);
        apply_electron(st, pi_pulse);
        evolve(st, system, spec.tau_us);
    }
    if (frame.closing_pi && spec.n_pulses % 2 == 0) apply_electron(st, pi_pulse);
    if (frame.final_half_pulse) apply_electron(st, half_pulse);
    return st;
}

ConditionalGate extract_conditional_rotations(const SpinSystem& system, int spin_index,
                                              const SequenceSpec& spec) {
    if (spec.kind != SequenceKind::Cpmg)
        throw std::invalid_argument("extract_conditional_rotations: CPMG spec required");
    if (spin_index < 0 || spin_index >= static_cast<int>(system.nuclei.size()))
        throw std::invalid_argument("extract_conditional_rotations: bad spin index");
    const auto [u, v] = sequence_operators(system.nuclei[spin_index], system.subspace,
                                           system.field, spec);
    return {u, v};
}

double retention_probability(const SpinSystem& system, const SequenceSpec& spec) {
    const int n = static_cast<int>(system.nuclei.size());
    const unsigned configs = 1u << n;
    double mean = 0.0;
    for (unsigned bits = 0; bits < configs; ++bits) {
        const auto st = simulate_sequence(BipartiteState::basis_state(n, 0, bits), system,
                                          spec, kEchoFrame);
        double p = 0.0;
        const std::size_t half = st.amps.size() / 2;
        for (std::size_t j = 0; j < half; ++j) p += std::norm(st.amps[j]);
        mean += p;
    }
    return mean / configs;
}

double electron_coherence(const SpinSystem& system, const SequenceSpec& spec) {
    return 2.0 * retention_probability(system, spec) - 1.0;
}

namespace {

// |<pair_target x anything|psi>|^2 summed over the spectator basis: the
// target fixes the electron and the addressed nucleus, spectators keep
// whatever state the sequence left them in.
double pair_overlap(const BipartiteState& st, int nucleus,
                    const std::array<cd, 4>& pair_amps) {
    // pair_amps: coefficients on {|s0,up>,|s0,dn>,|s1,up>,|s1,dn>} of the pair
    const int n = st.n_nuclei;
    const std::size_t half = st.amps.size() / 2;
    const std::size_t bit = std::size_t{1} << (n - 1 - nucleus);
    double total = 0.0;
    for (std::size_t j = 0; j < half; ++j) {
        if (j & bit) continue; // iterate spectator configurations only
        cd acc{0.0, 0.0};
        acc += std::conj(pair_amps[0]) * st.amps[j];
        acc += std::conj(pair_amps[1]) * st.amps[j | bit];
        acc += std::conj(pair_amps[2]) * st.amps[half + j];
        acc += std::conj(pair_amps[3]) * st.amps[half + (j | bit)];
        total += std::norm(acc);
    }
    return total;
}

} // namespace

double gate_fidelity(const SpinSystem& system, int spin_index, const SequenceSpec& spec,
                     GateTarget target) {
    const int n = static_cast<int>(system.nuclei.size());
    if (spin_index < 0 || spin_index >= n)
        throw std::invalid_argument("gate_fidelity: bad spin index");

    if (target == GateTarget::BellFamily) {
        // electron half pulse first, nuclei start |up>
        const auto st = simulate_sequence(BipartiteState::basis_state(n, 0, 0), system, spec,
                                          PulseFrame{true, true, false});
        // Bell family in the nuclear y-basis, the basis generated by the
        // ideal conditional +/- pi/2 x-rotations from |up>:
        // |+y> = (|up> + i|dn>)/sqrt2, |-y> = (|up> - i|dn>)/sqrt2.
        const double r = 1.0 / std::sqrt(2.0);
        const cd up_p = r, dn_p = kI * r;  // |+y>
        const cd up_m = r, dn_m = -kI * r; // |-y>
        double best = 0.0;
        for (int swap = 0; swap < 2; ++swap) {
            for (double sign : {1.0, -1.0}) {
                const cd a_up = swap == 0 ? up_m : up_p;
                const cd a_dn = swap == 0 ? dn_m : dn_p;
                const cd b_up = swap == 0 ? up_p : up_m;
                const cd b_dn = swap == 0 ? dn_p : dn_m;
                const std::array<cd, 4> bell = {r * a_up, r * a_dn, sign * r * b_up,
                                                sign * r * b_dn};
                best = std::max(best, pair_overlap(st, spin_index, bell));
            }
        }
        return best;
    }

    // NuclearX / Identity: bare conditional-evolution block on the
    // eigenstate basis, no electron half pulses.
    const auto st = simulate_sequence(BipartiteState::basis_state(n, 0, 0), system, spec,
                                      PulseFrame{false, false, false});
    std::array<cd, 4> tgt{};
    if (target == GateTarget::NuclearX) {
        tgt[1] = 1.0; // |s0, down>
    } else {
        tgt[0] = 1.0; // |s0, up>
    }
    return pair_overlap(st, spin_index, tgt);
}

} // namespace spintool
