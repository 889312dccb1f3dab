#pragma once

#include "mfe/functional.h"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfe {

// ---------------------------------------------------------------------------
// Moser-Trudinger evidence

/// F(u) = 1/2 int |grad u|^2 - a log int e^u + a log |Omega| for the coefficient a.
double mt_functional(const GridSpec& grid, const Field& u, double coefficient);

struct MTSample {
    std::string descriptor;
    double value = 0.0;
};

struct MTReport {
    std::size_t samples = 0;
    double min_value = 0.0;
    std::string argmin;
    bool violation = false;  ///< min_value < floor
    double floor = 0.0;
    std::vector<MTSample> values;
};

struct MTConfig {
    double coefficient = 0.0;  ///< 0 selects 8 pi
    double floor = -1e3;
    bool random_fields = true;
    bool bubbles = true;
    bool scaled = true;
    int random_count = 8;
    std::vector<double> lambdas{10.0, 30.0, 100.0, 300.0};
    std::vector<double> scales{0.5, 1.0, 2.0, 4.0, 8.0};
    std::uint64_t seed = 1;
};

/// Evaluates F over the configured generators: random smooth fields, single bubbles on the
/// mid-circle (annulus) or centered (torus) over the lambda sweep, and t u for the scales.
/// Reports the minimum only; no bound is claimed.
MTReport moser_trudinger_check(const GridPtr& grid, const MTConfig& config);

/// Region of the domain for the improved inequality: a polar sector (annulus) or a disc.
struct Region {
    enum class Shape { sector, disc };
    Shape shape = Shape::disc;
    Point center;               ///< disc
    double radius = 0.0;        ///< disc
    double angle_begin = 0.0;   ///< sector, counter-clockwise from angle_begin to angle_end
    double angle_end = 0.0;

    static Region disc(Point c, double r) { return {Shape::disc, c, r, 0.0, 0.0}; }
    static Region sector(double a0, double a1) { return {Shape::sector, {}, 0.0, a0, a1}; }
    bool contains(Point x) const;
};

struct ImprovedMTReport {
    double fraction_1 = 0.0;  ///< int_{S1} e^u / int e^u
    double fraction_2 = 0.0;
    double separation = 0.0;  ///< distance between the node sets of S1 and S2
    bool hypothesis_holds = false;
    std::optional<double> deficit;  ///< log int e^u - int |grad u|^2 / (32 pi - eps)
};

/// Running record of deficits, i.e. empirical lower bounds for the additive constant of the
/// improved inequality. Nothing is assumed about its true value.
struct EmpiricalConstantLedger {
    std::vector<double> deficits;
    std::optional<double> max() const;
};

ImprovedMTReport improved_mt_check(const GridSpec& grid, const Field& u, const Region& s1, const Region& s2,
                                   double gamma0, double eps, EmpiricalConstantLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// Concentration

struct Peak {
    Point location;
    std::size_t node = 0;
    double density = 0.0;  ///< e^v at the peak
    double mass = 0.0;     ///< int over B_r(peak) of e^v
    double ratio_8pi = 0.0;
    double integer_deviation = 0.0;  ///< |ratio - round(ratio)|
    /// sqrt(density * pi r^2 / mass - 1) / r; about lambda for a Liouville bubble, O(1/r) for flat densities.
    double effective_lambda = 0.0;
    bool blow_up_scale = false;
    bool near_boundary = false;
};

struct ConcentrationReport {
    double radius = 0.0;
    double total_mass = 0.0;
    std::vector<Peak> peaks;
};

struct ConcentrationConfig {
    double threshold = 0.5;       ///< local maxima below threshold * max density are ignored
    double blow_up_ratio = 5.0;   ///< blow-up scale when effective_lambda * r >= this
};

/// Peaks of the density e^v, their local masses in radius-r balls, and the ratios to 8 pi.
/// Peaks closer than 2r are merged (higher density kept).
ConcentrationReport detect_concentration(const GridSpec& grid, const Field& v, double radius,
                                         const ConcentrationConfig& config = {});

/// v = u + log(rho) - log int K e^u, so that int e^v = rho (c on the torus).
Field scaled_log_density(const ProblemSpec& p, const Field& u);

void write_peaks_csv(std::ostream& out, const ConcentrationReport& r);

// ---------------------------------------------------------------------------
// Spectrum of the second variation

struct SpectrumReport {
    std::vector<double> eigenvalues;  ///< ascending
    std::vector<double> residuals;    ///< |H e - lambda e| / |e| in the quadrature norm
    std::vector<Field> eigenfields;
    int morse_index = 0;
    double tol_eig = 0.0;             ///< absolute threshold used for the index
    std::optional<int> inertia_index; ///< annulus: exact count from the LDL^T inertia
    int iterations = 0;
    bool converged = false;
};

struct MorseConfig {
    double tol_eig = 1e-6;  ///< relative to the largest computed |lambda|
    int max_iterations = 500;
    std::uint64_t seed = 7;
};

/// k smallest eigenvalues of H(u) restricted to Dirichlet fields (annulus) or mean-zero
/// fields (torus), by block shift-and-invert subspace iteration with Rayleigh-Ritz.
/// Throws NoConvergence carrying the residuals if the iteration stagnates.
SpectrumReport morse_index(const ProblemSpec& p, const Field& u, int k, const MorseConfig& config = {});

// ---------------------------------------------------------------------------
// Palais-Smale monitor

struct TracePoint {
    double dirichlet_integral = 0.0;  ///< int |grad u|^2
    double gradient_norm = 0.0;
    double energy = 0.0;
};

struct PalaisSmaleReport {
    bool pass = true;
    double max_dirichlet = 0.0;
    std::size_t argmax = 0;
    bool compactness_warning = false;
    std::string note;
};

/// Checks int |grad u|^2 <= cap along the trace. Warns when the gradient norm stalls while
/// the Dirichlet integral keeps growing.
PalaisSmaleReport palais_smale_monitor(const std::vector<TracePoint>& trace, double cap);

}  // namespace mfe
