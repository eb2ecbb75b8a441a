#pragma once

// Laser-refocusing feedback protocol: a deterministic state machine that
// probes the locked line, rescans in widening windows when the signal is
// lost, and relocks onto the A2 transition — plus a simulated drifting
// emitter for closed-loop tests.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spintool/fitting.hpp"

namespace spintool {

enum class Phase { Probe, Scan3, Reset13, Reset20, Resume };

// Probe passes when strictly more than this many photons arrive in 500 ms.
inline constexpr long kProbeThreshold = 300;

struct LineCriteria {
    double sep_min_ghz = 0.9;
    double sep_max_ghz = 1.1;
    double ratio_min = 1.0 / 3.0; // amp1/amp2 window
    double ratio_max = 3.0;
    double width_min_mhz = 10.0; // FWHM window, both peaks
    double width_max_mhz = 100.0;
    double min_snr = 5.0; // strictly greater
};

struct LineFit {
    double c1_ghz = 0.0; // lower-frequency peak
    double c2_ghz = 0.0; // higher-frequency peak = A2
    double fwhm1_mhz = 0.0;
    double fwhm2_mhz = 0.0;
    double amp1 = 0.0;
    double amp2 = 0.0;
    double background = 0.0;
    bool converged = false;
};

struct CriteriaReport {
    bool separation_ok = false;
    bool ratio_ok = false;
    bool width_ok = false;
    bool snr_ok = false;
    bool pass() const { return separation_ok && ratio_ok && width_ok && snr_ok; }
};

CriteriaReport check_criteria(const LineFit& fit, const LineCriteria& criteria);

// Double-Lorentzian fit of a frequency scan (x in GHz), widths converted to
// MHz, centers ordered.
LineFit fit_scan(const DataSet& scan);

struct Observation {
    enum class Kind { Counts, Scan } kind = Kind::Counts;
    long counts = 0;
    DataSet scan;

    static Observation probe_counts(long c) { return {Kind::Counts, c, {}}; }
    static Observation scan_data(DataSet d) { return {Kind::Scan, 0, std::move(d)}; }
};

struct Action {
    enum class Kind { Probe, Scan, RepumpThenScan, LockTo } kind = Kind::Probe;
    double range_ghz = 0.0;     // Scan / RepumpThenScan: 3, 13 or 20
    double frequency_ghz = 0.0; // LockTo target
};

struct ProtocolState {
    Phase phase = Phase::Probe;
    int scan3_attempts = 0;
    int reset13_attempts = 0;
    bool locked = false;
    double locked_ghz = 0.0;
    bool has_fit = false;
    LineFit last_fit;
};

struct StepResult {
    ProtocolState state;
    Action action;
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Consume the observation produced by the previous action; return the next
// state and action. Throws ProtocolError if the observation kind does not
// match the phase.
StepResult step(const ProtocolState& state, const Observation& obs,
                const LineCriteria& criteria);

// Scan window for the given state: after a lock, A2 sits at 2/3 of the span;
// otherwise the window is centred on `fallback_center_ghz`.
std::pair<double, double> scan_window(const ProtocolState& state, double range_ghz,
                                      double fallback_center_ghz);

struct EnvironmentConfig {
    std::uint32_t seed = 0;
    double drift_mhz_per_min = 5.0;  // random-walk step, common to both lines
    double a1_ghz = -0.5;            // initial line centers (relative frequency)
    double a2_ghz = 0.5;
    double fwhm1_mhz = 41.0;
    double fwhm2_mhz = 24.0;
    double peak_rate_hz = 2000.0;    // on-resonance count rate
    double rate_ratio = 1.2;         // A1 peak rate = ratio * A2 peak rate base
    double bg_rate_hz = 20.0;
    double probe_s = 0.5;
    int scan_points_per_ghz = 40;
    double dwell_s = 0.01;
    double ionization_prob = 0.0;    // chance per scan of going dark
    bool shot_noise = true;
};

// Drifting two-line emitter answering Probe and Scan actions; deterministic
// for a fixed seed.
class Environment {
  public:
    explicit Environment(const EnvironmentConfig& config);

    Observation respond(const Action& action, const ProtocolState& state);
    void advance_minutes(double minutes);

    double a2_center_ghz() const { return a2_; }
    double laser_ghz() const { return laser_; }
    bool dark() const { return dark_; }

  private:
    double rate_hz(double f_ghz) const;
    long poisson_counts(double expected);

    EnvironmentConfig cfg_;
    std::mt19937 rng_;
    double a1_, a2_;
    double laser_;
    bool dark_ = false;
};

struct LockLogRow {
    double t_s = 0.0;
    Phase phase = Phase::Probe;
    std::string action;
    double counts_or_center = 0.0; // probe counts, or fitted A2 center (GHz)
    double locked_error_mhz = 0.0;
};

struct LockRunResult {
    std::vector<LockLogRow> rows;
    long probes = 0;
    long probes_within_linewidth = 0;
    double fraction_within_linewidth = 0.0;
};

// Closed loop: probe every `cadence_s` of simulated time, relocking through
// the protocol whenever a probe fails. Error is judged against the last
// fitted A2 linewidth.
LockRunResult run_closed_loop(const EnvironmentConfig& config, double minutes,
                              double cadence_s, const LineCriteria& criteria);

const char* phase_name(Phase p);

} // namespace spintool
