#include "spintool/laserlock.hpp"

#include <cmath>

namespace spintool {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Probe: return "probe";
        case Phase::Scan3: return "scan3";
        case Phase::Reset13: return "reset13";
        case Phase::Reset20: return "reset20";
        case Phase::Resume: return "resume";
    }
    return "?";
}

CriteriaReport check_criteria(const LineFit& fit, const LineCriteria& criteria) {
    CriteriaReport r;
    const double sep = fit.c2_ghz - fit.c1_ghz;
    r.separation_ok = fit.converged && sep >= criteria.sep_min_ghz && sep <= criteria.sep_max_ghz;
    const double ratio = fit.amp2 != 0.0 ? fit.amp1 / fit.amp2 : 1e300;
    r.ratio_ok = fit.converged && ratio >= criteria.ratio_min && ratio <= criteria.ratio_max;
    r.width_ok = fit.converged && fit.fwhm1_mhz >= criteria.width_min_mhz &&
                 fit.fwhm1_mhz <= criteria.width_max_mhz &&
                 fit.fwhm2_mhz >= criteria.width_min_mhz &&
                 fit.fwhm2_mhz <= criteria.width_max_mhz;
    const double snr = fit.background > 0.0
                           ? std::max(fit.amp1, fit.amp2) / fit.background
                           : 1e300;
    r.snr_ok = fit.converged && snr > criteria.min_snr;
    return r;
}

LineFit fit_scan(const DataSet& scan) {
    LineFit out;
    try {
        auto fit = fit_double_lorentzian(scan);
        out.c1_ghz = fit.params.at("center1");
        out.c2_ghz = fit.params.at("center2");
        out.fwhm1_mhz = fit.params.at("fwhm1") * 1e3;
        out.fwhm2_mhz = fit.params.at("fwhm2") * 1e3;
        out.amp1 = fit.params.at("amp1");
        out.amp2 = fit.params.at("amp2");
        out.background = fit.params.at("background");
        out.converged = fit.converged;
    } catch (const std::exception&) {
        out.converged = false;
    }
    return out;
}

std::pair<double, double> scan_window(const ProtocolState& state, double range_ghz,
                                      double fallback_center_ghz) {
    if (state.has_fit) {
        // A2 sits at 2/3 of the span of the next scan
        const double a2 = state.last_fit.c2_ghz;
        return {a2 - 2.0 / 3.0 * range_ghz, a2 + 1.0 / 3.0 * range_ghz};
    }
    return {fallback_center_ghz - 0.5 * range_ghz, fallback_center_ghz + 0.5 * range_ghz};
}

namespace {

StepResult lock_on(ProtocolState st, const LineFit& fit) {
    st.locked = true;
    st.locked_ghz = fit.c2_ghz;
    st.has_fit = true;
    st.last_fit = fit;
    st.scan3_attempts = 0;
    st.reset13_attempts = 0;
    st.phase = Phase::Probe; // verification probe follows the lock
    return {st, Action{Action::Kind::LockTo, 0.0, fit.c2_ghz}};
}

} // namespace

StepResult step(const ProtocolState& state, const Observation& obs,
                const LineCriteria& criteria) {
    ProtocolState st = state;
    switch (state.phase) {
        case Phase::Probe:
        case Phase::Resume: {
            if (obs.kind != Observation::Kind::Counts)
                throw ProtocolError("step: counts observation expected while probing");
            if (obs.counts > kProbeThreshold) {
                st.phase = Phase::Resume;
                return {st, Action{Action::Kind::Probe}};
            }
            st.phase = Phase::Scan3;
            st.scan3_attempts = 1;
            return {st, Action{Action::Kind::Scan, 3.0}};
        }
        case Phase::Scan3: {
            if (obs.kind != Observation::Kind::Scan)
                throw ProtocolError("step: scan observation expected in the 3 GHz phase");
            const LineFit fit = fit_scan(obs.scan);
            if (check_criteria(fit, criteria).pass()) return lock_on(st, fit);
            if (st.scan3_attempts < 2) {
                ++st.scan3_attempts;
                return {st, Action{Action::Kind::Scan, 3.0}};
            }
            st.phase = Phase::Reset13;
            st.reset13_attempts = 1;
            return {st, Action{Action::Kind::RepumpThenScan, 13.0}};
        }
        case Phase::Reset13: {
            if (obs.kind != Observation::Kind::Scan)
                throw ProtocolError("step: scan observation expected in the 13 GHz phase");
            const LineFit fit = fit_scan(obs.scan);
            if (check_criteria(fit, criteria).pass()) return lock_on(st, fit);
            if (st.reset13_attempts < 2) {
                ++st.reset13_attempts;
                return {st, Action{Action::Kind::RepumpThenScan, 13.0}};
            }
            st.phase = Phase::Reset20;
            return {st, Action{Action::Kind::Scan, 20.0}};
        }
        case Phase::Reset20: {
            if (obs.kind != Observation::Kind::Scan)
                throw ProtocolError("step: scan observation expected in the 20 GHz phase");
            const LineFit fit = fit_scan(obs.scan);
            if (check_criteria(fit, criteria).pass()) {
                // lines found: restart the narrow-scan stage around them
                st.has_fit = true;
                st.last_fit = fit;
                st.phase = Phase::Scan3;
                st.scan3_attempts = 1;
                st.reset13_attempts = 0;
                return {st, Action{Action::Kind::Scan, 3.0}};
            }
            return {st, Action{Action::Kind::Scan, 20.0}}; // fresh wide-scan cycle
        }
    }
    throw ProtocolError("step: unreachable phase");
}

Environment::Environment(const EnvironmentConfig& config)
    : cfg_(config), rng_(config.seed), a1_(config.a1_ghz), a2_(config.a2_ghz), laser_(0.0) {
    if (cfg_.drift_mhz_per_min < 0.0 || cfg_.peak_rate_hz <= 0.0 || cfg_.dwell_s <= 0.0 ||
        cfg_.probe_s <= 0.0 || cfg_.scan_points_per_ghz < 4)
        throw std::invalid_argument("Environment: config values must be positive");
}

double Environment::rate_hz(double f_ghz) const {
    if (dark_) return cfg_.bg_rate_hz;
    auto lor = [](double d_ghz, double fwhm_mhz) {
        const double h = 0.5 * fwhm_mhz * 1e-3;
        return h * h / (d_ghz * d_ghz + h * h);
    };
    return cfg_.bg_rate_hz +
           cfg_.peak_rate_hz * cfg_.rate_ratio * lor(f_ghz - a1_, cfg_.fwhm1_mhz) +
           cfg_.peak_rate_hz * lor(f_ghz - a2_, cfg_.fwhm2_mhz);
}

long Environment::poisson_counts(double expected) {
    if (!cfg_.shot_noise) return std::lround(expected);
    std::poisson_distribution<long> dist(expected);
    return dist(rng_);
}

void Environment::advance_minutes(double minutes) {
    if (minutes <= 0.0 || cfg_.drift_mhz_per_min == 0.0) return;
    std::normal_distribution<double> d(0.0, cfg_.drift_mhz_per_min * std::sqrt(minutes) * 1e-3);
    const double shift = d(rng_);
    a1_ += shift;
    a2_ += shift;
}

Observation Environment::respond(const Action& action, const ProtocolState& state) {
    switch (action.kind) {
        case Action::Kind::Probe:
            return Observation::probe_counts(poisson_counts(cfg_.probe_s * rate_hz(laser_)));
        case Action::Kind::LockTo:
            laser_ = action.frequency_ghz;
            return Observation::probe_counts(poisson_counts(cfg_.probe_s * rate_hz(laser_)));
        case Action::Kind::RepumpThenScan:
        case Action::Kind::Scan: {
            if (action.kind == Action::Kind::RepumpThenScan) {
                dark_ = false;
            } else if (cfg_.ionization_prob > 0.0) {
                std::bernoulli_distribution ion(cfg_.ionization_prob);
                if (ion(rng_)) dark_ = true;
            }
            const auto [lo, hi] = scan_window(state, action.range_ghz, laser_);
            const int points =
                static_cast<int>(action.range_ghz * cfg_.scan_points_per_ghz) + 1;
            DataSet d;
            d.x_unit = "ghz";
            d.y_unit = "counts";
            d.x.reserve(points);
            d.y.reserve(points);
            for (int i = 0; i < points; ++i) {
                const double f = lo + (hi - lo) * i / (points - 1);
                d.x.push_back(f);
                d.y.push_back(static_cast<double>(
                    poisson_counts(cfg_.dwell_s * rate_hz(f))));
            }
            return Observation::scan_data(std::move(d));
        }
    }
    throw std::logic_error("Environment::respond: unknown action");
}

namespace {

double action_duration_s(const Action& a, const EnvironmentConfig& cfg) {
    switch (a.kind) {
        case Action::Kind::Probe:
        case Action::Kind::LockTo:
            return cfg.probe_s;
        case Action::Kind::RepumpThenScan:
            return 1.0 + a.range_ghz * cfg.scan_points_per_ghz * cfg.dwell_s; // 1 s repump
        case Action::Kind::Scan:
            return a.range_ghz * cfg.scan_points_per_ghz * cfg.dwell_s;
    }
    return 0.0;
}

const char* action_name(const Action& a) {
    switch (a.kind) {
        case Action::Kind::Probe: return "probe";
        case Action::Kind::Scan: return "scan";
        case Action::Kind::RepumpThenScan: return "repump_scan";
        case Action::Kind::LockTo: return "lock_to";
    }
    return "?";
}

} // namespace

LockRunResult run_closed_loop(const EnvironmentConfig& config, double minutes,
                              double cadence_s, const LineCriteria& criteria) {
    if (minutes <= 0.0 || cadence_s <= 0.0)
        throw std::invalid_argument("run_closed_loop: duration and cadence must be positive");
    Environment env(config);
    ProtocolState st;
    Action act{Action::Kind::Probe};
    LockRunResult out;
    const double horizon_s = minutes * 60.0;
    double t = 0.0;
    while (t < horizon_s) {
        if (st.phase == Phase::Resume && act.kind == Action::Kind::Probe) {
            env.advance_minutes(cadence_s / 60.0);
            t += cadence_s;
            if (t >= horizon_s) break;
        }
        const double dur = action_duration_s(act, config);
        env.advance_minutes(dur / 60.0);
        t += dur;

        const bool counted_probe =
            st.locked && (act.kind == Action::Kind::Probe || act.kind == Action::Kind::LockTo);
        const Observation obs = env.respond(act, st);

        LockLogRow row;
        row.t_s = t;
        row.phase = st.phase;
        row.action = action_name(act);
        row.locked_error_mhz =
            st.locked ? std::abs(st.locked_ghz - env.a2_center_ghz()) * 1e3 : 0.0;
        if (counted_probe) {
            ++out.probes;
            const double linewidth = st.has_fit ? st.last_fit.fwhm2_mhz : config.fwhm2_mhz;
            if (row.locked_error_mhz <= linewidth) ++out.probes_within_linewidth;
        }

        auto [next_state, next_action] = step(st, obs, criteria);
        row.counts_or_center = obs.kind == Observation::Kind::Counts
                                   ? static_cast<double>(obs.counts)
                                   : next_state.has_fit ? next_state.last_fit.c2_ghz : 0.0;
        out.rows.push_back(row);
        st = next_state;
        act = next_action;
    }
    out.fraction_within_linewidth =
        out.probes > 0 ? static_cast<double>(out.probes_within_linewidth) / out.probes : 0.0;
    return out;
}

} // namespace spintool
