#include "spintool/sequences.hpp"

#include <cstddef>

namespace spintool {

void SequenceSpec::validate() const {
    if (tau_us < 0.0) throw std::invalid_argument("SequenceSpec: tau < 0");
    if (kind == SequenceKind::Hahn) {
        if (n_pulses != 1)
            throw std::invalid_argument("SequenceSpec: Hahn requires n_pulses = 1");
    } else {
        if (n_pulses < 2 || n_pulses % 2 != 0)
            throw std::invalid_argument("SequenceSpec: CPMG requires even n_pulses >= 2");
    }
}

double hahn_modulation_depth(const NuclearSpin& spin, const ElectronSubspace& subspace,
                             const FieldConfig& field) {
    subspace.validate();
    const auto cp0 = conditional_precession(subspace.s0, spin, field);
    const auto cp1 = conditional_precession(subspace.s1, spin, field);
    if (cp0.degenerate || cp1.degenerate)
        throw std::domain_error("hahn_modulation_depth: degenerate conditional precession");
    const double f_larmor = larmor_frequency_khz(spin.species, field);
    const double r = f_larmor * spin.coupling.a_perp_khz / (cp0.freq_khz * cp1.freq_khz);
    return r * r;
}

static Rotation rotation_power(const Rotation& r, int n) {
    Rotation acc = Rotation::identity();
    for (int i = 0; i < n; ++i) acc = compose(r, acc);
    return acc;
}

std::pair<Rotation, Rotation> sequence_operators(const NuclearSpin& spin,
                                                 const ElectronSubspace& subspace,
                                                 const FieldConfig& field,
                                                 const SequenceSpec& spec) {
    spec.validate();
    subspace.validate();
    const auto u0 = rotation_from_precession(
        conditional_precession(subspace.s0, spin, field), spec.tau_us);
    const auto u1 = rotation_from_precession(
        conditional_precession(subspace.s1, spin, field), spec.tau_us);

    if (spec.kind == SequenceKind::Hahn) {
        return {compose(u1, u0), compose(u0, u1)};
    }
    // CPMG grouping (tau-pi-tau-pi-tau-pi-tau)^{N/2}
    const Rotation d0 = compose(u1, u0); // s0 for tau, then s1 for tau
    const Rotation d1 = compose(u0, u1);
    const Rotation block_u = compose(d1, d0);
    const Rotation block_v = compose(d0, d1);
    const int half = spec.n_pulses / 2;
    return {rotation_power(block_u, half), rotation_power(block_v, half)};
}

static double coherence_of(const NuclearSpin& spin, const ElectronSubspace& subspace,
                           const FieldConfig& field, const SequenceSpec& spec) {
    const auto [u, v] = sequence_operators(spin, subspace, field, spec);
    return compose(inverse(v), u).w; // cos(theta_{V^dag U}/2)
}

CoherenceResult sequence_coherence(const SpinSystem& system, const SequenceSpec& spec) {
    spec.validate();
    CoherenceResult out;
    out.per_nucleus.reserve(system.nuclei.size());
    for (const auto& spin : system.nuclei) {
        const double m = coherence_of(spin, system.subspace, system.field, spec);
        out.per_nucleus.push_back(m);
        out.total *= m;
    }
    return out;
}

double hahn_closed_form(const NuclearSpin& spin, const ElectronSubspace& subspace,
                        const FieldConfig& field, double tau_us) {
    const auto cp0 = conditional_precession(subspace.s0, spin, field);
    const auto cp1 = conditional_precession(subspace.s1, spin, field);
    if (cp0.degenerate || cp1.degenerate)
        throw std::domain_error("hahn_closed_form: degenerate conditional precession");
    const double k = hahn_modulation_depth(spin, subspace, field);
    const double a = kTwoPi * cycles(cp0.freq_khz, tau_us);
    const double b = kTwoPi * cycles(cp1.freq_khz, tau_us);
    return 1.0 - 0.25 * k * (2.0 - 2.0 * std::cos(a) - 2.0 * std::cos(b) +
                             std::cos(a + b) + std::cos(a - b));
}

static void check_grid(const std::vector<double>& grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("grid must be strictly increasing");
}

static SequenceSpec spec_for(double tau_us, int n_pulses) {
    SequenceSpec spec;
    spec.kind = n_pulses == 1 ? SequenceKind::Hahn : SequenceKind::Cpmg;
    spec.tau_us = tau_us;
    spec.n_pulses = n_pulses;
    return spec;
}

SignalTrace tau_sweep_serial(const SpinSystem& system, int n_pulses,
                             const std::vector<double>& tau_grid_us) {
    check_grid(tau_grid_us);
    spec_for(tau_grid_us.empty() ? 0.0 : tau_grid_us.front(), n_pulses).validate();
    SignalTrace trace;
    trace.abscissa = tau_grid_us;
    trace.unit = "us";
    trace.values.resize(tau_grid_us.size());
    for (std::size_t i = 0; i < tau_grid_us.size(); ++i)
        trace.values[i] = sequence_coherence(system, spec_for(tau_grid_us[i], n_pulses)).total;
    return trace;
}

SignalTrace tau_sweep(const SpinSystem& system, int n_pulses,
                      const std::vector<double>& tau_grid_us) {
    check_grid(tau_grid_us);
    spec_for(tau_grid_us.empty() ? 0.0 : tau_grid_us.front(), n_pulses).validate();
    SignalTrace trace;
    trace.abscissa = tau_grid_us;
    trace.unit = "us";
    trace.values.resize(tau_grid_us.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tau_grid_us.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        trace.values[i] = sequence_coherence(system, spec_for(tau_grid_us[i], n_pulses)).total;
    return trace;
}

SignalTrace pulse_sweep_serial(const SpinSystem& system, double tau_us,
                               const std::vector<int>& n_list) {
    SignalTrace trace;
    trace.unit = "pulses";
    trace.abscissa.reserve(n_list.size());
    trace.values.resize(n_list.size());
    for (int n : n_list) {
        if (n < 0 || n % 2 != 0)
            throw std::invalid_argument("pulse_sweep: pulse numbers must be even and >= 0");
        trace.abscissa.push_back(static_cast<double>(n));
    }
    for (std::size_t i = 0; i < n_list.size(); ++i)
        trace.values[i] = n_list[i] == 0
                              ? 1.0
                              : sequence_coherence(system, spec_for(tau_us, n_list[i])).total;
    return trace;
}

SignalTrace pulse_sweep(const SpinSystem& system, double tau_us,
                        const std::vector<int>& n_list) {
    SignalTrace trace;
    trace.unit = "pulses";
    trace.abscissa.reserve(n_list.size());
    trace.values.resize(n_list.size());
    for (int n : n_list) {
        if (n < 0 || n % 2 != 0)
            throw std::invalid_argument("pulse_sweep: pulse numbers must be even and >= 0");
        trace.abscissa.push_back(static_cast<double>(n));
    }
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n_list.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i)
        trace.values[i] = n_list[i] == 0
                              ? 1.0
                              : sequence_coherence(system, spec_for(tau_us, n_list[i])).total;
    return trace;
}

SignalTrace apply_envelope(const SignalTrace& trace, const EnvelopeParams& env) {
    if (env.t2 <= 0.0) throw std::invalid_argument("EnvelopeParams: t2 must be > 0");
    if (env.n_stretch <= 0.0) throw std::invalid_argument("EnvelopeParams: n_stretch must be > 0");
    SignalTrace out = trace;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double t = out.abscissa[i];
        out.values[i] = env.amplitude * std::exp(-std::pow(t / env.t2, env.n_stretch)) *
                            out.values[i] +
                        env.y0;
    }
    return out;
}

} // namespace spintool
