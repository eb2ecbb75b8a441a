#pragma once

// CPMG resonance times: zero-order value, first-order correction, exact
// root of the anti-parallel-axes condition, and the critical-field theorem.

#include "spintool/sequences.hpp"
#include "spintool/spinmath.hpp"

namespace spintool {

struct ResonanceQuery {
    NuclearSpin spin;
    ElectronSubspace subspace;
    FieldConfig field;
    int k = 1; // resonance order, >= 1

    void validate() const {
        if (k < 1) throw std::invalid_argument("ResonanceQuery: k must be >= 1");
        subspace.validate();
    }
};

struct ResonanceResult {
    double tau_zero_us = 0.0;
    double epsilon_tau = 0.0;
    double tau_approx_us = 0.0;
    double tau_exact_us = 0.0;
    double rel_error = 0.0; // signed, (tau_exact - tau_approx)/tau_exact
};

// (2k-1)/(2 (f0+f1)), the zero-order resonance time.
double tau_zero(const ResonanceQuery& query);

// First-order fractional correction sin(w0 tau_k / 2) ((n0.n1)^-1 - 1)/((2k-1) pi).
double epsilon_tau(const ResonanceQuery& query);

// tau_zero * (1 + epsilon_tau)
double tau_approx(const ResonanceQuery& query);

// Root of cos(w0 t/2) cos(w1 t/2) - (n0.n1) sin(w0 t/2) sin(w1 t/2)
// nearest tau_zero, bracketed in [0.5, 1.5] * tau_zero and bisected to
// |dt| <= 1e-6 * tau_zero.
double tau_exact(const ResonanceQuery& query);

ResonanceResult resonance(const ResonanceQuery& query);

inline constexpr double kDefaultEpsilonN = 0.1 * kPi;

// Minimum field for which the first-order resonance approximation holds.
double b_crit(const NuclearSpin& spin, const ElectronSubspace& subspace,
              double epsilon_n = kDefaultEpsilonN);

// |(tau_exact - tau_approx)/tau_exact| vs field. Per-point solver failures
// are flagged as NaN, not fatal.
SignalTrace error_sweep(const NuclearSpin& spin, const ElectronSubspace& subspace,
                        const std::vector<double>& b_grid_gauss, int k);
SignalTrace error_sweep_serial(const NuclearSpin& spin, const ElectronSubspace& subspace,
                               const std::vector<double>& b_grid_gauss, int k);

} // namespace spintool
