#include "spintool/resonance.hpp"

#include <cstddef>
#include <limits>
#include <sstream>

namespace spintool {

namespace {

struct PrecessionPair {
    double f0, f1;   // kHz
    double axis_dot; // n0 . n1
};

PrecessionPair precessions(const ResonanceQuery& q) {
    const auto cp0 = conditional_precession(q.subspace.s0, q.spin, q.field);
    const auto cp1 = conditional_precession(q.subspace.s1, q.spin, q.field);
    if (cp0.degenerate || cp1.degenerate)
        throw std::domain_error("resonance: degenerate conditional precession");
    return {cp0.freq_khz, cp1.freq_khz, cp0.axis.dot(cp1.axis)};
}

// w component of the composed (tau - pi - 2tau - pi - tau) half block;
// its zero is the anti-parallel-axes condition, free of tangent poles.
double block_scalar(const PrecessionPair& p, double tau_us) {
    const double h0 = kPi * cycles(p.f0, tau_us);
    const double h1 = kPi * cycles(p.f1, tau_us);
    return std::cos(h0) * std::cos(h1) - p.axis_dot * std::sin(h0) * std::sin(h1);
}

} // namespace

double tau_zero(const ResonanceQuery& query) {
    query.validate();
    const auto p = precessions(query);
    // kHz -> us: 1/kHz = 1000 us
    return (2.0 * query.k - 1.0) * 1000.0 / (2.0 * (p.f0 + p.f1));
}

double epsilon_tau(const ResonanceQuery& query) {
    query.validate();
    const auto p = precessions(query);
    if (query.spin.coupling.a_perp_khz == 0.0) return 0.0; // collinear axes
    const double tk = tau_zero(query);
    const double half0 = kPi * cycles(p.f0, tk);
    return std::sin(half0) * (1.0 / p.axis_dot - 1.0) / ((2.0 * query.k - 1.0) * kPi);
}

double tau_approx(const ResonanceQuery& query) {
    return tau_zero(query) * (1.0 + epsilon_tau(query));
}

double tau_exact(const ResonanceQuery& query) {
    query.validate();
    const auto p = precessions(query);
    const double tk = tau_zero(query);
    if (query.spin.coupling.a_perp_khz == 0.0) return tk; // exact in the asymptotic case

    const double lo = 0.5 * tk;
    const double hi = 1.5 * tk;
    const int scan = 512;
    const double step = (hi - lo) / scan;
    const double tol = 1e-6 * tk;

    double best = -1.0;
    double prev_t = lo;
    double prev_g = block_scalar(p, lo);
    for (int i = 1; i <= scan; ++i) {
        const double t = lo + i * step;
        const double g = block_scalar(p, t);
        if (prev_g == 0.0) {
            if (best < 0.0 || std::abs(prev_t - tk) < std::abs(best - tk)) best = prev_t;
        } else if (g * prev_g < 0.0) {
            double a = prev_t, b = t, ga = prev_g;
            while (b - a > tol) {
                const double m = 0.5 * (a + b);
                const double gm = block_scalar(p, m);
                if (gm == 0.0) { a = b = m; break; }
                if (ga * gm < 0.0) {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            const double root = 0.5 * (a + b);
            if (best < 0.0 || std::abs(root - tk) < std::abs(best - tk)) best = root;
        }
        prev_t = t;
        prev_g = g;
    }
    if (best < 0.0) {
        std::ostringstream msg;
        msg << "tau_exact: no sign change of the resonance condition in ["
            << lo << ", " << hi << "] us";
        throw std::runtime_error(msg.str());
    }
    return best;
}

ResonanceResult resonance(const ResonanceQuery& query) {
    ResonanceResult r;
    r.tau_zero_us = tau_zero(query);
    r.epsilon_tau = epsilon_tau(query);
    r.tau_approx_us = r.tau_zero_us * (1.0 + r.epsilon_tau);
    r.tau_exact_us = tau_exact(query);
    r.rel_error = (r.tau_exact_us - r.tau_approx_us) / r.tau_exact_us;
    return r;
}

double b_crit(const NuclearSpin& spin, const ElectronSubspace& subspace, double epsilon_n) {
    subspace.validate();
    spin.coupling.validate();
    const double gamma = spin.species.gamma_khz_per_g;
    if (gamma == 0.0) throw std::invalid_argument("b_crit: gamma must be nonzero");
    const double sgn = gamma > 0.0 ? 1.0 : -1.0;
    const double a_par = spin.coupling.a_par_khz;
    const double a_perp = spin.coupling.a_perp_khz;
    const double factor = 1.0 / std::sqrt((1.0 + epsilon_n) * (1.0 + epsilon_n) - 1.0);
    const double a_sign = (subspace.s0 + subspace.s1) * a_par + sgn * std::abs(a_perp) * factor;
    const double disc = a_sign * a_sign -
                        4.0 * subspace.s0 * subspace.s1 * (a_perp * a_perp + a_par * a_par);
    if (disc < 0.0) {
        std::ostringstream msg;
        msg << "b_crit: no real critical field (discriminant = " << disc << ")";
        throw std::domain_error(msg.str());
    }
    return (a_sign + sgn * std::sqrt(disc)) / (2.0 * gamma);
}

static double sweep_point(const NuclearSpin& spin, const ElectronSubspace& subspace,
                          double b, int k) {
    ResonanceQuery q{spin, subspace, FieldConfig{b}, k};
    try {
        const double te = tau_exact(q);
        return std::abs((te - tau_approx(q)) / te);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

SignalTrace error_sweep_serial(const NuclearSpin& spin, const ElectronSubspace& subspace,
                               const std::vector<double>& b_grid_gauss, int k) {
    SignalTrace trace;
    trace.unit = "gauss";
    trace.abscissa = b_grid_gauss;
    trace.values.resize(b_grid_gauss.size());
    for (std::size_t i = 1; i < b_grid_gauss.size(); ++i)
        if (b_grid_gauss[i] <= b_grid_gauss[i - 1])
            throw std::invalid_argument("error_sweep: grid must be positive ascending");
    if (!b_grid_gauss.empty() && b_grid_gauss.front() <= 0.0)
        throw std::invalid_argument("error_sweep: grid must be positive");
    for (std::size_t i = 0; i < b_grid_gauss.size(); ++i)
        trace.values[i] = sweep_point(spin, subspace, b_grid_gauss[i], k);
    return trace;
}

SignalTrace error_sweep(const NuclearSpin& spin, const ElectronSubspace& subspace,
                        const std::vector<double>& b_grid_gauss, int k) {
    SignalTrace trace;
    trace.unit = "gauss";
    trace.abscissa = b_grid_gauss;
    trace.values.resize(b_grid_gauss.size());
    for (std::size_t i = 1; i < b_grid_gauss.size(); ++i)
        if (b_grid_gauss[i] <= b_grid_gauss[i - 1])
            throw std::invalid_argument("error_sweep: grid must be positive ascending");
    if (!b_grid_gauss.empty() && b_grid_gauss.front() <= 0.0)
        throw std::invalid_argument("error_sweep: grid must be positive");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(b_grid_gauss.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        trace.values[i] = sweep_point(spin, subspace, b_grid_gauss[i], k);
    return trace;
}

} // namespace spintool
