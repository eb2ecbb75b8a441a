#include "spintool/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "spintool/fitting.hpp"
#include "spintool/gates.hpp"
#include "spintool/laserlock.hpp"
#include "spintool/resonance.hpp"
#include "spintool/trace_io.hpp"

namespace spintool::cli {

namespace {

using nlohmann::ordered_json;

// Round to 12 significant digits so serialized payloads are stable and
// lossless at test tolerances.
double num12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

ordered_json vec3_json(const Vec3& v) {
    return ordered_json::array({num12(v.x), num12(v.y), num12(v.z)});
}

void emit(const ordered_json& j) { std::cout << j.dump() << "\n"; }

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ordered_json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError(path + ": cannot open file");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

int parse_flags(CLI::App& app, const std::vector<std::string>& rest) {
    std::vector<std::string> reversed(rest.rbegin(), rest.rend());
    app.parse(reversed);
    return 0;
}

SequenceSpec even_cpmg(double tau, int n) { return {SequenceKind::Cpmg, tau, n}; }

std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 2 || hi <= lo)
        throw UsageError("grid requires points >= 2 and max > min");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

const NuclearSpin& spin_at(const SpinSystem& sys, int index) {
    if (index < 0 || index >= static_cast<int>(sys.nuclei.size()))
        throw UsageError("--spin index out of range");
    return sys.nuclei[index];
}

// ---- simulate ----

int cmd_simulate(const std::vector<std::string>& args) {
    if (args.empty()) throw UsageError("simulate requires hahn|cpmg|pulse-sweep");
    const std::string what = args[0];
    std::vector<std::string> rest(args.begin() + 1, args.end());

    CLI::App app{"simulate"};
    std::string system_path, out_path;
    double tau_min = 1.0, tau_max = 21.0, tau = 5.38;
    int points = 2000, n = 8, n_max = 32;
    app.add_option("--system", system_path)->required();
    app.add_option("--out", out_path)->required();
    if (what == "hahn" || what == "cpmg") {
        app.add_option("--tau-min", tau_min);
        app.add_option("--tau-max", tau_max);
        app.add_option("--points", points);
        if (what == "cpmg") app.add_option("--n", n);
    } else if (what == "pulse-sweep") {
        app.add_option("--tau", tau);
        app.add_option("--n-max", n_max);
    } else {
        throw UsageError("unknown simulate mode '" + what + "'");
    }
    parse_flags(app, rest);

    const SpinSystem sys = load_system(system_path);
    SignalTrace trace;
    ordered_json j{{"command", "simulate " + what}};
    if (what == "pulse-sweep") {
        std::vector<int> ns;
        for (int k = 2; k <= n_max; k += 2) ns.push_back(k);
        trace = pulse_sweep(sys, tau, ns);
        j["tau_us"] = num12(tau);
        j["n_max"] = n_max;
    } else {
        const int pulses = what == "hahn" ? 1 : n;
        trace = tau_sweep(sys, pulses, linspace(tau_min, tau_max, points));
        j["n_pulses"] = pulses;
        j["tau_min_us"] = num12(tau_min);
        j["tau_max_us"] = num12(tau_max);
        j["points"] = points;
    }
    write_trace_csv(trace, out_path);
    std::size_t imin = 0;
    for (std::size_t i = 1; i < trace.values.size(); ++i)
        if (trace.values[i] < trace.values[imin]) imin = i;
    j["min_value"] = num12(trace.values[imin]);
    j["min_abscissa"] = num12(trace.abscissa[imin]);
    j["out"] = out_path;
    emit(j);
    return 0;
}

// ---- resonance / bcrit / error-sweep / gates ----

int cmd_resonance(const std::vector<std::string>& rest) {
    CLI::App app{"resonance"};
    std::string system_path;
    int spin = 0, k = 1;
    app.add_option("--system", system_path)->required();
    app.add_option("--spin", spin);
    app.add_option("--k", k);
    parse_flags(app, rest);
    const SpinSystem sys = load_system(system_path);
    const ResonanceQuery q{spin_at(sys, spin), sys.subspace, sys.field, k};
    const auto r = resonance(q);
    emit(ordered_json{{"command", "resonance"},
                      {"spin", spin},
                      {"k", k},
                      {"field_gauss", num12(sys.field.b_gauss)},
                      {"tau_zero_us", num12(r.tau_zero_us)},
                      {"epsilon_tau", num12(r.epsilon_tau)},
                      {"tau_approx_us", num12(r.tau_approx_us)},
                      {"tau_exact_us", num12(r.tau_exact_us)},
                      {"rel_error", num12(r.rel_error)}});
    return 0;
}

int cmd_bcrit(const std::vector<std::string>& rest) {
    CLI::App app{"bcrit"};
    std::string system_path;
    int spin = 0;
    double epsilon_n = kDefaultEpsilonN;
    app.add_option("--system", system_path)->required();
    app.add_option("--spin", spin);
    app.add_option("--epsilon-n", epsilon_n);
    parse_flags(app, rest);
    const SpinSystem sys = load_system(system_path);
    emit(ordered_json{{"command", "bcrit"},
                      {"spin", spin},
                      {"epsilon_n", num12(epsilon_n)},
                      {"b_crit_gauss", num12(b_crit(spin_at(sys, spin), sys.subspace,
                                                    epsilon_n))}});
    return 0;
}

int cmd_error_sweep(const std::vector<std::string>& rest) {
    CLI::App app{"error-sweep"};
    std::string system_path, out_path;
    int spin = 0, k = 1, points = 101;
    double b_min = 0.0, b_max = 0.0;
    app.add_option("--system", system_path)->required();
    app.add_option("--out", out_path)->required();
    app.add_option("--spin", spin);
    app.add_option("--k", k);
    app.add_option("--b-min", b_min)->required();
    app.add_option("--b-max", b_max)->required();
    app.add_option("--points", points);
    parse_flags(app, rest);
    const SpinSystem sys = load_system(system_path);
    const auto trace =
        error_sweep(spin_at(sys, spin), sys.subspace, linspace(b_min, b_max, points), k);
    write_trace_csv(trace, out_path);
    double worst = 0.0;
    for (double v : trace.values)
        if (std::isfinite(v) && v > worst) worst = v;
    emit(ordered_json{{"command", "error-sweep"},
                      {"spin", spin},
                      {"k", k},
                      {"points", points},
                      {"max_rel_error", num12(worst)},
                      {"out", out_path}});
    return 0;
}

int cmd_gates(const std::vector<std::string>& rest) {
    CLI::App app{"gates"};
    std::string system_path, target_name = "bell";
    int spin = 0, n = 4;
    double tau = 5.38;
    app.add_option("--system", system_path)->required();
    app.add_option("--spin", spin);
    app.add_option("--n", n);
    app.add_option("--tau", tau);
    app.add_option("--target", target_name);
    parse_flags(app, rest);
    const SpinSystem sys = load_system(system_path);
    GateTarget target;
    if (target_name == "bell") target = GateTarget::BellFamily;
    else if (target_name == "x") target = GateTarget::NuclearX;
    else if (target_name == "identity") target = GateTarget::Identity;
    else throw UsageError("unknown --target '" + target_name + "'");
    const auto spec = even_cpmg(tau, n);
    const auto gate = extract_conditional_rotations(sys, spin, spec);
    emit(ordered_json{{"target", target_name},
                      {"n_pulses", n},
                      {"tau_us", num12(tau)},
                      {"fidelity", num12(gate_fidelity(sys, spin, spec, target))},
                      {"axis_u", vec3_json(gate.rot_u.axis())},
                      {"axis_v", vec3_json(gate.rot_v.axis())},
                      {"angle_u", num12(gate.rot_u.angle())},
                      {"angle_v", num12(gate.rot_v.angle())}});
    return 0;
}

// ---- fit ----

ordered_json fit_json(const FitResult& fit) {
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : fit.params) params[k] = num12(v);
    return ordered_json{{"model", fit.model},
                        {"params", params},
                        {"rss", num12(fit.rss)},
                        {"converged", fit.converged},
                        {"iterations", fit.iterations}};
}

int cmd_fit(const std::vector<std::string>& args) {
    if (args.empty()) throw UsageError("fit requires hyperfine|envelope|ple|g2");
    const std::string what = args[0];
    std::vector<std::string> rest(args.begin() + 1, args.end());

    CLI::App app{"fit"};
    std::string data_path;
    double field = 81.0, s0 = 0.5, s1 = 1.5;
    app.add_option("--data", data_path)->required();
    if (what == "hyperfine") {
        app.add_option("--field", field);
        app.add_option("--s0", s0);
        app.add_option("--s1", s1);
    } else if (what != "envelope" && what != "ple" && what != "g2") {
        throw UsageError("unknown fit mode '" + what + "'");
    }
    parse_flags(app, rest);

    const DataSet data = read_dataset_csv(data_path);
    if (data.x.empty()) throw UsageError(data_path + ": empty input");
    if (what == "hyperfine") {
        const auto hf = fit_hahn_hyperfine(data, FieldConfig{field},
                                           ElectronSubspace{s0, s1}, species_registry());
        auto j = fit_json(hf.fit);
        j["species"] = hf.species.name;
        j["ambiguous"] = hf.ambiguous;
        emit(j);
    } else if (what == "envelope") {
        emit(fit_json(fit_envelope(data)));
    } else if (what == "ple") {
        emit(fit_json(fit_double_lorentzian(data)));
    } else {
        emit(fit_json(fit_g2(data)));
    }
    return 0;
}

// ---- analyze ----

int cmd_analyze(const std::vector<std::string>& args) {
    if (args.empty()) throw UsageError("analyze requires yield|grid");
    const std::string what = args[0];
    std::vector<std::string> rest(args.begin() + 1, args.end());

    CLI::App app{"analyze"};
    std::string histogram_str, data_path;
    double dose = 0.0, hole = 0.0, pitch = 0.0;
    if (what == "yield") {
        app.add_option("--histogram", histogram_str)->required();
        app.add_option("--dose", dose)->required();
        app.add_option("--hole-diameter", hole)->required();
    } else if (what == "grid") {
        app.add_option("--data", data_path)->required();
        app.add_option("--pitch", pitch)->required();
    } else {
        throw UsageError("unknown analyze mode '" + what + "'");
    }
    parse_flags(app, rest);

    if (what == "yield") {
        std::vector<long> hist;
        std::stringstream ss(histogram_str);
        std::string f;
        while (std::getline(ss, f, ',')) hist.push_back(std::stol(f));
        const auto res = analyze_yield(hist, dose, hole);
        const double radius_cm = 0.5 * hole * 1e-7;
        emit(ordered_json{{"command", "analyze yield"},
                          {"mean", num12(res.mean)},
                          {"expected_ions", num12(dose * kPi * radius_cm * radius_cm)},
                          {"yield", num12(res.yield)}});
    } else {
        const DataSet d = read_dataset_csv(data_path);
        std::vector<std::pair<double, double>> pos;
        for (std::size_t i = 0; i < d.x.size(); ++i) pos.push_back({d.x[i], d.y[i]});
        const auto g = register_grid(pos, pitch);
        emit(ordered_json{{"command", "analyze grid"},
                          {"pitch_nm", num12(pitch)},
                          {"rotation_rad", num12(g.model.rotation_rad)},
                          {"scale_x", num12(g.model.scale_x)},
                          {"scale_y", num12(g.model.scale_y)},
                          {"offset_x_nm", num12(g.model.offset_x_nm)},
                          {"offset_y_nm", num12(g.model.offset_y_nm)},
                          {"variance_nm", num12(g.variance_nm)}});
    }
    return 0;
}

// ---- lock ----

int cmd_lock(const std::vector<std::string>& args) {
    if (args.empty() || args[0] != "simulate")
        throw UsageError("lock requires the 'simulate' mode");
    std::vector<std::string> rest(args.begin() + 1, args.end());

    CLI::App app{"lock simulate"};
    std::string out_path;
    unsigned seed = 0;
    double minutes = 60.0, cadence = 60.0, drift = 5.0, ionization = 0.0;
    app.add_option("--seed", seed);
    app.add_option("--minutes", minutes);
    app.add_option("--cadence", cadence);
    app.add_option("--drift", drift);
    app.add_option("--ionization", ionization);
    app.add_option("--out", out_path);
    parse_flags(app, rest);

    EnvironmentConfig cfg;
    cfg.seed = seed;
    cfg.drift_mhz_per_min = drift;
    cfg.ionization_prob = ionization;
    const auto res = run_closed_loop(cfg, minutes, cadence, LineCriteria{});
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw UsageError(out_path + ": cannot open file for writing");
        out << "t_s,phase,action,counts_or_fit_center_ghz,locked_error_mhz\n";
        for (const auto& row : res.rows) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%.12g,%s,%s,%.12g,%.12g\n", row.t_s,
                          phase_name(row.phase), row.action.c_str(), row.counts_or_center,
                          row.locked_error_mhz);
            out << buf;
        }
    }
    emit(ordered_json{{"command", "lock simulate"},
                      {"seed", seed},
                      {"minutes", num12(minutes)},
                      {"cadence_s", num12(cadence)},
                      {"drift_mhz_per_min", num12(drift)},
                      {"probes", res.probes},
                      {"probes_within_linewidth", res.probes_within_linewidth},
                      {"fraction_within_linewidth", num12(res.fraction_within_linewidth)}});
    return 0;
}

// ---- reproduce ----

struct Check {
    ordered_json detail = ordered_json::object();
    bool pass = true;

    void record(const std::string& name, double measured, double expected, double tol) {
        const bool ok = std::abs(measured - expected) <= tol;
        detail[name] = ordered_json{{"measured", num12(measured)},
                                    {"expected", num12(expected)},
                                    {"tolerance", num12(tol)},
                                    {"pass", ok}};
        pass = pass && ok;
    }
    void record_range(const std::string& name, double measured, double lo, double hi) {
        const bool ok = measured >= lo && measured <= hi;
        detail[name] = ordered_json{{"measured", num12(measured)},
                                    {"low", num12(lo)},
                                    {"high", num12(hi)},
                                    {"pass", ok}};
        pass = pass && ok;
    }
};

SpinSystem paper_system() {
    const auto si = *find_species("29Si");
    return {FieldConfig{81.0},
            ElectronSubspace{0.5, 1.5},
            {NuclearSpin{si, {-23.5, 12.0}}, NuclearSpin{si, {0.2, 8.5}}}};
}

int cmd_reproduce(const std::vector<std::string>& args) {
    if (args.size() != 1) throw UsageError("reproduce takes exactly one check name");
    const std::string name = args[0];
    const auto si = *find_species("29Si");
    const ElectronSubspace sub{0.5, 1.5};
    Check c;

    if (name == "tau538") {
        const SpinSystem sys = paper_system();
        c.record("tau_approx_us",
                 tau_approx({sys.nuclei[0], sub, sys.field, 1}), 5.38, 0.01);
    } else if (name == "bcrit605") {
        c.record("b_crit_gauss", b_crit({si, {-23.6, 12.2}}, sub), 60.5, 0.2);
    } else if (name == "fidelities") {
        const SpinSystem sys = paper_system();
        c.record("bell_n4", gate_fidelity(sys, 0, even_cpmg(5.38, 4), GateTarget::BellFamily),
                 0.97, 0.01);
        c.record("x_n8", gate_fidelity(sys, 0, even_cpmg(5.38, 8), GateTarget::NuclearX),
                 0.94, 0.01);
        c.record("identity_n16",
                 gate_fidelity(sys, 0, even_cpmg(5.38, 16), GateTarget::Identity), 0.98,
                 0.01);
    } else if (name == "fig4b") {
        const SpinSystem sys = paper_system();
        const auto trace = tau_sweep(sys, 8, linspace(1.0, 21.0, 2001));
        std::size_t imin = 0;
        for (std::size_t i = 1; i < trace.values.size(); ++i)
            if (trace.values[i] < trace.values[imin]) imin = i;
        c.record("global_min_tau_us", trace.abscissa[imin], 5.38, 0.05);
    } else if (name == "fig4c") {
        const SpinSystem sys = paper_system();
        std::vector<int> ns;
        for (int k = 2; k <= 32; k += 2) ns.push_back(k);
        const auto trace = pulse_sweep(sys, 5.38, ns);
        c.record_range("signal_n8", trace.values[3], -1.0, -0.95);
        c.record_range("signal_n16", trace.values[7], 0.95, 1.0);
    } else if (name == "figS17") {
        const NuclearSpin spin{si, {-23.6, 12.2}};
        const double bc = b_crit(spin, sub);
        const auto trace = error_sweep(spin, sub, linspace(bc, 5.0 * bc, 101), 1);
        double worst = 0.0;
        for (double v : trace.values)
            if (std::isfinite(v) && v > worst) worst = v;
        c.record_range("max_rel_error", worst, 0.0, 0.0035);
    } else if (name == "figS18") {
        const SpinSystem truth = paper_system();
        const auto grid = linspace(1.0, 21.0, 400);
        const auto trace = tau_sweep(truth, 8, grid);
        DataSet data;
        data.x = trace.abscissa;
        data.y = trace.values;
        data.x_unit = "us";
        const std::vector<NuclearSpin> init{{si, {-22.0, 13.0}}, {si, {0.5, 8.0}}};
        const auto fit = fit_cpmg_refine(data, truth.field, sub, init, 8);
        const double truths[4] = {-23.5, 12.0, 0.2, 8.5};
        const char* names[4] = {"a_par_khz_0", "a_perp_khz_0", "a_par_khz_1",
                                "a_perp_khz_1"};
        for (int i = 0; i < 4; ++i)
            c.record(names[i], fit.params.at(names[i]), truths[i],
                     0.01 * std::abs(truths[i]));
    } else if (name == "yield") {
        const double radius_cm = 50e-7;
        const double ions = 1e11 * kPi * radius_cm * radius_cm;
        c.record("expected_ions", ions, 7.85, 0.01);
        c.record_range("yield_percent", 100.0 * 0.66 / ions, 7.7, 9.3);
    } else {
        throw UsageError("unknown reproduce check '" + name + "'");
    }

    emit(ordered_json{{"check", name}, {"pass", c.pass}, {"results", c.detail}});
    return c.pass ? 0 : 1;
}

} // namespace

SpinSystem load_system(const std::string& path) {
    const ordered_json j = load_json(path);
    try {
        SpinSystem sys;
        sys.field = FieldConfig{j.at("field_gauss").get<double>()};
        const auto& sub = j.at("subspace");
        sys.subspace = ElectronSubspace{sub.at(0).get<double>(), sub.at(1).get<double>()};
        for (const auto& n : j.at("nuclei")) {
            NuclearSpecies species;
            if (n.contains("species")) {
                const auto found = find_species(n.at("species").get<std::string>());
                if (!found)
                    throw UsageError(path + ": unknown species '" +
                                     n.at("species").get<std::string>() + "'");
                species = *found;
            } else {
                species = {"custom", n.at("gamma_khz_per_g").get<double>()};
            }
            sys.nuclei.push_back(NuclearSpin{
                species, {n.at("a_par_khz").get<double>(), n.at("a_perp_khz").get<double>()}});
        }
        sys.subspace.validate();
        for (const auto& s : sys.nuclei) s.coupling.validate();
        return sys;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

int run(const std::vector<std::string>& args) {
    try {
        if (args.empty()) throw UsageError(
            "usage: spintool <simulate|resonance|bcrit|error-sweep|gates|fit|analyze|lock|"
            "reproduce> ...");
        const std::string cmd = args[0];
        const std::vector<std::string> rest(args.begin() + 1, args.end());
        if (cmd == "simulate") return cmd_simulate(rest);
        if (cmd == "resonance") return cmd_resonance(rest);
        if (cmd == "bcrit") return cmd_bcrit(rest);
        if (cmd == "error-sweep") return cmd_error_sweep(rest);
        if (cmd == "gates") return cmd_gates(rest);
        if (cmd == "fit") return cmd_fit(rest);
        if (cmd == "analyze") return cmd_analyze(rest);
        if (cmd == "lock") return cmd_lock(rest);
        if (cmd == "reproduce") return cmd_reproduce(rest);
        throw UsageError("unknown command '" + cmd + "'");
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace spintool::cli
