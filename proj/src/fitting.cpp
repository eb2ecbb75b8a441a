#include "spintool/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spintool {

void DataSet::validate(std::size_t min_points) const {
    if (x.size() != y.size())
        throw std::invalid_argument("DataSet: abscissa/value length mismatch");
    if (!sigma.empty() && sigma.size() != x.size())
        throw std::invalid_argument("DataSet: uncertainty length mismatch");
    if (x.size() < min_points)
        throw std::invalid_argument("DataSet: fewer points than model parameters");
}

namespace {

double clamp_to(double v, const std::pair<double, double>& b) {
    return std::min(std::max(v, b.first), b.second);
}

double objective(const ModelFn& model, const DataSet& data, const std::vector<double>& p) {
    double rss = 0.0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        double r = model(p, data.x[i]) - data.y[i];
        if (!data.sigma.empty() && data.sigma[i] > 0.0) r /= data.sigma[i];
        rss += r * r;
    }
    return std::isfinite(rss) ? rss : 1e300;
}

struct SimplexOutcome {
    std::vector<double> best;
    double value = 0.0;
    long iterations = 0;
    bool converged = false;
};

// One Nelder-Mead descent from `start`; parameters clamped to bounds at
// every evaluation.
SimplexOutcome simplex_descent(const ModelFn& model, const DataSet& data,
                               std::vector<double> start,
                               const std::vector<std::pair<double, double>>& bounds,
                               double tol, long max_iter) {
    const std::size_t n = start.size();
    for (std::size_t i = 0; i < n; ++i) start[i] = clamp_to(start[i], bounds[i]);

    auto eval = [&](std::vector<double> p) {
        for (std::size_t i = 0; i < n; ++i) p[i] = clamp_to(p[i], bounds[i]);
        return objective(model, data, p);
    };

    std::vector<std::vector<double>> pts(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) {
        double step = 0.05 * std::abs(start[i]);
        if (step == 0.0) step = 0.01 * std::max(1.0, bounds[i].second - bounds[i].first) * 0.01;
        if (step == 0.0) step = 1e-4;
        pts[i + 1][i] = clamp_to(start[i] + step, bounds[i]);
        if (pts[i + 1][i] == start[i]) pts[i + 1][i] = clamp_to(start[i] - step, bounds[i]);
    }
    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) f[i] = eval(pts[i]);

    SimplexOutcome out;
    long iter = 0;
    while (iter < max_iter) {
        std::vector<std::size_t> order(n + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return f[a] < f[b];
        });
        const std::size_t lo = order[0], hi = order[n], nh = order[n - 1];

        const double spread = std::abs(f[hi] - f[lo]);
        if (spread <= tol * (std::abs(f[lo]) + tol)) {
            out.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == hi) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
        }
        for (std::size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

        auto blend = [&](double c) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = clamp_to(centroid[j] + c * (centroid[j] - pts[hi][j]), bounds[j]);
            return p;
        };

        const auto refl = blend(1.0);
        const double f_refl = eval(refl);
        ++iter;
        if (f_refl < f[lo]) {
            const auto expd = blend(2.0);
            const double f_exp = eval(expd);
            ++iter;
            if (f_exp < f_refl) {
                pts[hi] = expd;
                f[hi] = f_exp;
            } else {
                pts[hi] = refl;
                f[hi] = f_refl;
            }
        } else if (f_refl < f[nh]) {
            pts[hi] = refl;
            f[hi] = f_refl;
        } else {
            const auto ctr = blend(f_refl < f[hi] ? 0.5 : -0.5);
            const double f_ctr = eval(ctr);
            ++iter;
            if (f_ctr < std::min(f_refl, f[hi])) {
                pts[hi] = ctr;
                f[hi] = f_ctr;
            } else {
                for (std::size_t i = 0; i <= n; ++i) { // shrink toward the best vertex
                    if (i == lo) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        pts[i][j] = clamp_to(pts[lo][j] + 0.5 * (pts[i][j] - pts[lo][j]),
                                             bounds[j]);
                    f[i] = eval(pts[i]);
                    ++iter;
                }
            }
        }
    }
    std::size_t lo = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (f[i] < f[lo]) lo = i;
    out.best = pts[lo];
    out.value = f[lo];
    out.iterations = iter;
    return out;
}

} // namespace

FitResult least_squares(const ModelFn& model, const DataSet& data,
                        const std::vector<double>& init,
                        const std::vector<std::pair<double, double>>& bounds,
                        const std::vector<std::string>& names, const std::string& model_id,
                        const FitOptions& opts) {
    const std::size_t n = init.size();
    if (bounds.size() != n || names.size() != n)
        throw std::invalid_argument("least_squares: init/bounds/names size mismatch");
    data.validate(n);
    for (std::size_t i = 0; i < n; ++i)
        if (init[i] < bounds[i].first || init[i] > bounds[i].second)
            throw std::invalid_argument("least_squares: init outside bounds");

    long budget = opts.max_iterations;
    auto best = simplex_descent(model, data, init, bounds, opts.tolerance, budget);
    budget -= best.iterations;
    long total_iter = best.iterations;

    for (int r = 0; r < opts.restarts && budget > 0; ++r) {
        std::vector<double> start = best.best;
        for (std::size_t i = 0; i < n; ++i) {
            const double sgn = ((r + static_cast<int>(i)) % 2 == 0) ? 1.0 : -1.0;
            const double bump = start[i] != 0.0
                                    ? 0.1 * std::abs(start[i])
                                    : 0.01 * (bounds[i].second - bounds[i].first);
            start[i] = clamp_to(start[i] + sgn * bump, bounds[i]);
        }
        auto trial = simplex_descent(model, data, start, bounds, opts.tolerance, budget);
        budget -= trial.iterations;
        total_iter += trial.iterations;
        if (trial.value < best.value) best = trial;
        if (!trial.converged) best.converged = false;
    }

    FitResult res;
    res.model = model_id;
    for (std::size_t i = 0; i < n; ++i) res.params[names[i]] = best.best[i];
    res.rss = best.value;
    res.iterations = total_iter;
    res.converged = best.converged;
    return res;
}

namespace {

double stretched_env(double t, double amp, double t2, double n_stretch, double y0) {
    return amp * std::exp(-std::pow(std::abs(t) / t2, n_stretch)) + y0;
}

// Rough envelope starting point from the trace itself.
void envelope_seed(const DataSet& d, double& amp, double& t2, double& n_stretch, double& y0) {
    const std::size_t n = d.y.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 20);
    y0 = std::accumulate(d.y.end() - tail, d.y.end(), 0.0) / tail;
    amp = d.y.front() - y0;
    n_stretch = 1.0;
    t2 = d.x.back() > d.x.front() ? (d.x.back() - d.x.front()) : 1.0;
    const double target = y0 + amp / std::exp(1.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const bool crossed = amp >= 0.0 ? d.y[i + 1] <= target : d.y[i + 1] >= target;
        if (crossed && d.x[i + 1] > d.x.front()) {
            t2 = d.x[i + 1] - d.x.front();
            break;
        }
    }
    if (t2 <= 0.0) t2 = 1.0;
}

} // namespace

FitResult fit_envelope(const DataSet& data) {
    data.validate(4);
    double amp, t2, n_stretch, y0;
    envelope_seed(data, amp, t2, n_stretch, y0);
    const double span = std::max(1.0, data.x.back() - data.x.front());
    const double ymag = 1.0 + *std::max_element(data.y.begin(), data.y.end(),
                                                [](double a, double b) {
                                                    return std::abs(a) < std::abs(b);
                                                });
    const ModelFn model = [](const std::vector<double>& p, double t) {
        return stretched_env(t, p[0], p[1], p[2], p[3]);
    };
    return least_squares(model, data, {amp, t2, n_stretch, y0},
                         {{-10.0 * std::abs(ymag), 10.0 * std::abs(ymag)},
                          {1e-6 * span, 1e4 * span},
                          {0.2, 6.0},
                          {-10.0 * std::abs(ymag), 10.0 * std::abs(ymag)}},
                         {"amp", "t2", "n_stretch", "y0"}, "envelope");
}

HyperfineFit fit_hahn_hyperfine(const DataSet& data, const FieldConfig& field,
                                const ElectronSubspace& subspace,
                                const std::vector<NuclearSpecies>& candidates) {
    data.validate(6);
    if (candidates.empty())
        throw std::invalid_argument("fit_hahn_hyperfine: empty candidate list");

    double amp, t2, n_stretch, y0;
    envelope_seed(data, amp, t2, n_stretch, y0);
    if (std::abs(amp) < 1e-3) amp = 1.0;
    n_stretch = 1.5;

    std::vector<std::pair<NuclearSpecies, FitResult>> converged;
    for (const auto& species : candidates) {
        // signal = envelope(tau) * M(tau) + y0, envelope multiplicative on the
        // coherence as in apply_envelope
        const ModelFn model = [&species, &field, &subspace](const std::vector<double>& p,
                                                            double tau) {
            const NuclearSpin spin{species, {p[0], p[1]}};
            const double env = p[2] * std::exp(-std::pow(std::abs(tau) / p[3], p[4]));
            return env * hahn_closed_form(spin, subspace, field, tau) + p[5];
        };

        // coarse scan of coupling space with the seeded envelope, then refine
        // from the most promising cells
        struct Cell {
            double rss, a_par, a_perp;
        };
        std::vector<Cell> cells;
        for (int ia = 0; ia < 40; ++ia) {
            for (int ip = 0; ip < 20; ++ip) {
                const double a_par = -48.75 + 2.5 * ia;
                const double a_perp = 1.25 + 2.5 * ip;
                const double rss =
                    objective(model, data, {a_par, a_perp, amp, t2, n_stretch, y0});
                cells.push_back({rss, a_par, a_perp});
            }
        }
        std::sort(cells.begin(), cells.end(),
                  [](const Cell& a, const Cell& b) { return a.rss < b.rss; });

        FitResult species_best;
        bool have = false;
        for (int c = 0; c < 4 && c < static_cast<int>(cells.size()); ++c) {
            auto fit = least_squares(model, data,
                                     {cells[c].a_par, cells[c].a_perp, amp, t2, n_stretch, y0},
                                     {{-60.0, 60.0},
                                      {0.0, 60.0},
                                      {-10.0, 10.0},
                                      {1e-3, 1e7},
                                      {0.2, 6.0},
                                      {-10.0, 10.0}},
                                     {"a_par_khz", "a_perp_khz", "amp", "t2", "n_stretch", "y0"},
                                     "hahn_hyperfine");
            if (!have || fit.rss < species_best.rss) {
                species_best = fit;
                have = true;
            }
        }
        if (have && species_best.converged) converged.push_back({species, species_best});
    }
    if (converged.empty())
        throw std::runtime_error("fit_hahn_hyperfine: no candidate fit converged");
    std::sort(converged.begin(), converged.end(),
              [](const auto& a, const auto& b) { return a.second.rss < b.second.rss; });

    HyperfineFit best;
    best.species = converged.front().first;
    best.fit = converged.front().second;
    if (converged.size() > 1) {
        const double second = converged[1].second.rss;
        const double scale = std::max(second, 1e-300);
        best.ambiguous = (second - best.fit.rss) <= 0.01 * scale;
    }
    return best;
}

FitResult fit_cpmg_refine(const DataSet& data, const FieldConfig& field,
                          const ElectronSubspace& subspace,
                          const std::vector<NuclearSpin>& init, int n_pulses) {
    if (init.empty()) {
        auto res = fit_envelope(data);
        res.model = "cpmg_refine";
        return res;
    }
    data.validate(2 * init.size());

    std::vector<NuclearSpecies> species;
    std::vector<double> start;
    std::vector<std::pair<double, double>> bounds;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < init.size(); ++i) {
        species.push_back(init[i].species);
        start.push_back(init[i].coupling.a_par_khz);
        start.push_back(init[i].coupling.a_perp_khz);
        bounds.push_back({-60.0, 60.0});
        bounds.push_back({0.0, 60.0});
        names.push_back("a_par_khz_" + std::to_string(i));
        names.push_back("a_perp_khz_" + std::to_string(i));
    }

    const ModelFn model = [species, field, subspace, n_pulses](const std::vector<double>& p,
                                                               double tau) {
        double m = 1.0;
        for (std::size_t i = 0; i < species.size(); ++i) {
            const NuclearSpin spin{species[i], {p[2 * i], p[2 * i + 1]}};
            const auto [u, v] = sequence_operators(
                spin, subspace, field, SequenceSpec{SequenceKind::Cpmg, tau, n_pulses});
            m *= compose(inverse(v), u).w;
        }
        return m;
    };
    return least_squares(model, data, start, bounds, names, "cpmg_refine");
}

namespace {

double lorentzian(double x, double center, double fwhm, double amp) {
    const double h = 0.5 * fwhm;
    return amp * h * h / ((x - center) * (x - center) + h * h);
}

} // namespace

FitResult fit_double_lorentzian(const DataSet& data) {
    data.validate(7);
    const std::size_t n = data.x.size();

    // light smoothing, then pick the two dominant well-separated maxima
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int d = -2; d <= 2; ++d) {
            const long j = static_cast<long>(i) + d;
            if (j < 0 || j >= static_cast<long>(n)) continue;
            acc += data.y[j];
            ++cnt;
        }
        s[i] = acc / cnt;
    }
    const double bg0 = *std::min_element(s.begin(), s.end());
    const std::size_t i1 =
        std::distance(s.begin(), std::max_element(s.begin(), s.end()));
    const double span = data.x.back() - data.x.front();
    const double exclude = 0.1 * std::abs(span);
    std::size_t i2 = i1;
    double best2 = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(data.x[i] - data.x[i1]) < exclude) continue;
        if (s[i] > best2) {
            best2 = s[i];
            i2 = i;
        }
    }
    auto width_at = [&](std::size_t ip) {
        const double half = bg0 + 0.5 * (s[ip] - bg0);
        double lo = data.x.front(), hi = data.x.back();
        for (std::size_t i = ip; i > 0; --i)
            if (s[i] < half) {
                lo = data.x[i];
                break;
            }
        for (std::size_t i = ip; i < n; ++i)
            if (s[i] < half) {
                hi = data.x[i];
                break;
            }
        const double w = hi - lo;
        return w > 0.0 ? w : 0.02 * std::abs(span);
    };

    double c1 = data.x[i1], c2 = data.x[i2];
    double a1 = s[i1] - bg0, a2 = s[i2] - bg0;
    double w1 = width_at(i1), w2 = width_at(i2);
    if (c1 > c2) {
        std::swap(c1, c2);
        std::swap(a1, a2);
        std::swap(w1, w2);
    }
    const double amax = std::max({std::abs(a1), std::abs(a2), 1.0});

    const ModelFn model = [](const std::vector<double>& p, double x) {
        return lorentzian(x, p[0], p[2], p[4]) + lorentzian(x, p[1], p[3], p[5]) + p[6];
    };
    auto res = least_squares(
        model, data, {c1, c2, w1, w2, a1, a2, bg0},
        {{data.x.front(), data.x.back()},
         {data.x.front(), data.x.back()},
         {1e-6 * std::abs(span), std::abs(span)},
         {1e-6 * std::abs(span), std::abs(span)},
         {0.0, 100.0 * amax},
         {0.0, 100.0 * amax},
         {-10.0 * amax, 10.0 * amax}},
        {"center1", "center2", "fwhm1", "fwhm2", "amp1", "amp2", "background"},
        "double_lorentzian");

    if (res.params["center1"] > res.params["center2"]) {
        std::swap(res.params["center1"], res.params["center2"]);
        std::swap(res.params["fwhm1"], res.params["fwhm2"]);
        std::swap(res.params["amp1"], res.params["amp2"]);
    }
    const double sep = res.params["center2"] - res.params["center1"];
    res.params["separation"] = sep;
    const double lo_amp = std::min(res.params["amp1"], res.params["amp2"]);
    const double hi_amp = std::max(res.params["amp1"], res.params["amp2"]);
    res.params["amplitude_ratio"] = lo_amp != 0.0 ? hi_amp / lo_amp : 1e300;
    const double bg = res.params["background"];
    res.params["snr"] = bg > 0.0 ? hi_amp / bg : 1e300;
    // overlapping centers: effectively a single peak
    res.params["single_peak"] =
        sep < 0.5 * (res.params["fwhm1"] + res.params["fwhm2"]) ? 1.0 : 0.0;
    return res;
}

FitResult fit_g2(const DataSet& data) {
    data.validate(4);
    const double span = std::max(std::abs(data.x.front()), std::abs(data.x.back()));
    const ModelFn model = [](const std::vector<double>& p, double tau) {
        const double n = p[0], a = p[1];
        return (1.0 - a * std::exp(-std::abs(tau) / p[2]) +
                (1.0 - a) * std::exp(-std::abs(tau) / p[3])) /
                   n +
               (n - 1.0) / n;
    };
    return least_squares(model, data, {1.0, 0.9, 0.02 * span, 0.2 * span},
                         {{0.2, 20.0}, {0.0, 3.0}, {1e-4 * span, 10.0 * span},
                          {1e-4 * span, 10.0 * span}},
                         {"n_emitters", "a", "tau1", "tau2"}, "g2");
}

YieldResult analyze_yield(const std::vector<long>& histogram, double dose_per_cm2,
                          double hole_diameter_nm) {
    if (histogram.empty()) throw std::invalid_argument("analyze_yield: empty histogram");
    if (dose_per_cm2 <= 0.0 || hole_diameter_nm <= 0.0)
        throw std::invalid_argument("analyze_yield: dose and diameter must be positive");
    long spots = 0;
    long defects = 0;
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        if (histogram[i] < 0) throw std::invalid_argument("analyze_yield: negative bin");
        spots += histogram[i];
        defects += static_cast<long>(i) * histogram[i];
    }
    if (spots == 0) throw std::invalid_argument("analyze_yield: zero spots");
    const double mean = static_cast<double>(defects) / spots;
    const double radius_cm = 0.5 * hole_diameter_nm * 1e-7;
    const double ions_per_hole = dose_per_cm2 * kPi * radius_cm * radius_cm;
    return {mean, mean / ions_per_hole};
}

GridFit register_grid(const std::vector<std::pair<double, double>>& positions_nm,
                      double pitch_nm) {
    if (positions_nm.size() < 4)
        throw std::invalid_argument("register_grid: at least 4 positions required");
    if (pitch_nm <= 0.0) throw std::invalid_argument("register_grid: pitch must be positive");

    // measured = R(theta) * diag(sx, sy) * ideal + offset; residual against
    // the nearest ideal node after inverse mapping
    auto residuals = [&](const std::vector<double>& p, std::vector<double>* radii) {
        const double ct = std::cos(p[0]), st = std::sin(p[0]);
        const double sx = p[1], sy = p[2], ox = p[3], oy = p[4];
        double rss = 0.0;
        for (const auto& [mx, my] : positions_nm) {
            const double dx = mx - ox, dy = my - oy;
            const double ix = (ct * dx + st * dy) / sx;
            const double iy = (-st * dx + ct * dy) / sy;
            const double gx = pitch_nm * std::round(ix / pitch_nm);
            const double gy = pitch_nm * std::round(iy / pitch_nm);
            const double fx = ct * sx * gx - st * sy * gy + ox;
            const double fy = st * sx * gx + ct * sy * gy + oy;
            const double r2 = (mx - fx) * (mx - fx) + (my - fy) * (my - fy);
            rss += r2;
            if (radii) radii->push_back(std::sqrt(r2));
        }
        return rss;
    };

    // reuse the simplex engine through a residual adapter: a single synthetic
    // "data point" whose squared residual is the full objective
    DataSet adapter;
    adapter.x.assign(5, 0.0);
    adapter.y.assign(5, 0.0);
    const ModelFn obj = [&](const std::vector<double>& p, double) {
        return std::sqrt(residuals(p, nullptr));
    };
    auto fit = least_squares(obj, adapter, {0.0, 1.0, 1.0, 0.0, 0.0},
                             {{-kPi / 4, kPi / 4},
                              {0.9, 1.1},
                              {0.9, 1.1},
                              {-pitch_nm, pitch_nm},
                              {-pitch_nm, pitch_nm}},
                             {"rotation_rad", "scale_x", "scale_y", "offset_x_nm",
                              "offset_y_nm"},
                             "grid_registration");

    GridFit out;
    out.model.pitch_nm = pitch_nm;
    out.model.rotation_rad = fit.params["rotation_rad"];
    out.model.scale_x = fit.params["scale_x"];
    out.model.scale_y = fit.params["scale_y"];
    out.model.offset_x_nm = fit.params["offset_x_nm"];
    out.model.offset_y_nm = fit.params["offset_y_nm"];
    const std::vector<double> p = {out.model.rotation_rad, out.model.scale_x,
                                   out.model.scale_y, out.model.offset_x_nm,
                                   out.model.offset_y_nm};
    const double rss = residuals(p, &out.residual_radii_nm);
    out.variance_nm = std::sqrt(rss / (2.0 * positions_nm.size()));
    return out;
}

} // namespace spintool
