#pragma once

// Derivative-free least-squares engine and the fit models used across the
// toolkit: hyperfine extraction from echo traces, decay envelopes, double
// Lorentzians, antibunching histograms, Poisson yield, grid registration.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spintool/sequences.hpp"
#include "spintool/spinmath.hpp"

namespace spintool {

struct DataSet {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma; // optional; empty means unweighted
    std::string x_unit;
    std::string y_unit;

    void validate(std::size_t min_points) const;
};

struct FitResult {
    std::string model;
    std::map<std::string, double> params;
    double rss = 0.0;
    long iterations = 0;
    bool converged = false;
};

struct FitOptions {
    double tolerance = 1e-10; // relative spread of simplex values
    long max_iterations = 100000;
    int restarts = 3; // deterministic +/-10% perturbations of the optimum
};

// y(x; p) for scalar x.
using ModelFn = std::function<double(const std::vector<double>&, double)>;

// Nelder-Mead simplex descent of sum of squared residuals, parameters
// clamped to [bounds.first, bounds.second].
FitResult least_squares(const ModelFn& model, const DataSet& data,
                        const std::vector<double>& init,
                        const std::vector<std::pair<double, double>>& bounds,
                        const std::vector<std::string>& names, const std::string& model_id,
                        const FitOptions& opts = {});

struct HyperfineFit {
    FitResult fit;            // params: a_par_khz, a_perp_khz, amp, t2, n_stretch, y0
    NuclearSpecies species;   // lowest-residual candidate
    bool ambiguous = false;   // runner-up residual within 1%
};

// Identify the species and couplings behind a Hahn-echo trace (tau in us vs
// signal): per candidate, grid-scan coupling space then refine jointly with
// a stretched-exponential envelope.
HyperfineFit fit_hahn_hyperfine(const DataSet& data, const FieldConfig& field,
                                const ElectronSubspace& subspace,
                                const std::vector<NuclearSpecies>& candidates);

// Joint refinement of all coupling pairs against the product-coherence model
// of an n_pulses CPMG tau-sweep. Empty init fits the envelope only.
FitResult fit_cpmg_refine(const DataSet& data, const FieldConfig& field,
                          const ElectronSubspace& subspace,
                          const std::vector<NuclearSpin>& init, int n_pulses);

// A * exp(-(t/t2)^n_stretch) + y0.
FitResult fit_envelope(const DataSet& data);

// Sum of two Lorentzians plus constant background; widths are FWHM. Reports
// the derived separation, amplitude ratio, and signal-to-background as extra
// parameters. Centers ordered so c1 < c2.
FitResult fit_double_lorentzian(const DataSet& data);

// g2(tau) = (1/N)[1 - a exp(-|tau|/tau1) + (1-a) exp(-|tau|/tau2)] + (N-1)/N.
FitResult fit_g2(const DataSet& data);

struct YieldResult {
    double mean;  // Poisson MLE = sample mean of the histogram
    double yield; // mean / (dose * hole area)
};

// histogram[i] = number of spots containing i defects.
YieldResult analyze_yield(const std::vector<long>& histogram, double dose_per_cm2,
                          double hole_diameter_nm);

struct GridModel {
    double pitch_nm = 0.0;
    double rotation_rad = 0.0;
    double scale_x = 1.0; // within [0.9, 1.1]
    double scale_y = 1.0;
    double offset_x_nm = 0.0;
    double offset_y_nm = 0.0;
};

struct GridFit {
    GridModel model;
    std::vector<double> residual_radii_nm; // distance to the nearest ideal node
    double variance_nm = 0.0;              // 1-sigma of the isotropic scatter
};

// Align measured positions to an ideal square grid over rotation, per-axis
// scale, and offset; residuals are taken against the nearest node.
GridFit register_grid(const std::vector<std::pair<double, double>>& positions_nm,
                      double pitch_nm);

} // namespace spintool
