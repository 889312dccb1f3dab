#pragma once

#include "mfe/diagnostics.h"
#include "mfe/functional.h"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfe {

/// Truncated Liouville bubble
///   t chi(|x-p|/delta) 2 log((1 + lambda^2 delta^2) / (1 + lambda^2 |x-p|^2)),
/// with chi = 1 on [0, 1/2] and a smooth decay to 0 at 1. The bracket vanishes at
/// |x-p| = delta, so the field is exactly zero outside the support disc. Distances are
/// periodic on the torus.
struct BubbleParams {
    Point center;
    double lambda = 1.0;
    double amplitude = 1.0;  ///< t in [0, 1]
    double support = 0.45;   ///< delta
};

/// Throws ConfigError if the support leaves the annulus, exceeds half a torus period, is
/// narrower than 3 grid cells, or lambda < 1, or t outside [0, 1].
Field make_bubble(const GridPtr& grid, const BubbleParams& b);

/// Default support: 90% of the annulus half-width or of the shorter torus half-period.
double default_support(const GridSpec& grid);

/// Turning number of the closed polygon `loop` around `center`. The loop is closed
/// implicitly; a repeated first point at the end is ignored. Throws DegenerateLoop if a
/// vertex lies within `eps` of the center.
int winding_number(const std::vector<Point>& loop, Point center, double eps = 1e-9);

// ---------------------------------------------------------------------------
// Path families

struct FamilySample {
    double s = 0.0;      ///< radial coordinate in the parameter disk
    double angle = 0.0;  ///< angular coordinate in the parameter disk (bubble angle)
    BubbleParams bubble;
    Field field;
    double energy = 0.0;
};

enum class TorusAxis { x, y };

struct FamilyConfig {
    int n_radial = 16;
    int n_angular = 8;
    double amplitude_ramp = 0.3;  ///< s below which the amplitude ramps at lambda = 1
    double lambda_max = 1e3;
    int lambda_sweep = 41;        ///< geometric sweep points in [1, lambda_max] for the ring
    /// Default: halfway between J(0) and the first local maximum of the ring bubble sweep.
    std::optional<double> j_low;
    std::optional<double> max_jump;  ///< continuity bound; default: parameter
    std::optional<double> support;
    TorusAxis torus_axis = TorusAxis::x;
};

/// Discrete map from the unit disk into field space. Sample 0 is the disk center (zero
/// field); sample 1 + (i-1) n_angular + j sits at s = i / n_radial, angle 2 pi j / n_angular.
/// The ring i = n_radial realizes the low-energy boundary.
struct PathFamily {
    GridPtr grid;
    double parameter = 0.0;
    int n_radial = 0;
    int n_angular = 0;
    double lambda_ring = 0.0;
    double j_low = 0.0;
    double max_jump = 0.0;
    TorusAxis torus_axis = TorusAxis::x;
    std::vector<FamilySample> samples;

    std::size_t index(int i, int j) const {
        return i == 0 ? 0 : 1 + static_cast<std::size_t>(i - 1) * n_angular + static_cast<std::size_t>(j);
    }
    bool is_center(std::size_t k) const { return k == 0; }
    bool is_ring(std::size_t k) const { return k >= index(n_radial, 0); }
    /// Largest energy over non-center samples (lowest flat index on ties).
    std::size_t argmax() const;
    double max_energy() const { return samples[argmax()].energy; }
    /// Largest energy jump between radial or angular neighbors.
    double continuity_jump() const;
};

/// Center-of-mass point of a field: m_c(u) on the annulus, the complex first moment of
/// K e^u / int K e^u along `axis` on the torus.
Point loop_point(const ProblemSpec& p, const Field& u, TorusAxis axis = TorusAxis::x);
/// Winding number of the ring's loop points around the origin.
int ring_winding(const ProblemSpec& p, const PathFamily& f);

/// Bubble family for J_rho (annulus) or J_c (torus). Ring bubbles sit on the mid-circle
/// (annulus) or on the line y = L_y / 2 traversing the x circle (torus). Throws
/// ConfigError if the ring cannot reach j_low or the loop does not wind once.
PathFamily build_path_family(const ProblemSpec& p, const FamilyConfig& config = {});

// ---------------------------------------------------------------------------
// Deformation

struct DeformationConfig {
    double window_fraction = 0.10;  ///< half-width of the energy window relative to |alpha|
    double tol_stag = 1e-7;
    int stagnation_sweeps = 5;
    int max_sweeps = 600;
    double armijo = 1e-4;
    double initial_step = 1.0;
    double min_step = 1e-10;
    bool tangent_projection = true;
    double grad_threshold = 1e-2;    ///< min_decrease only counts sweeps at or above this
    int threads = 0;                 ///< 0 = hardware concurrency
};

struct SweepRecord {
    int sweep = 0;
    double max_energy = 0.0;         ///< family max after the sweep
    double max_grad_norm = 0.0;      ///< descent-direction norm at the family argmax
    double dirichlet_bound = 0.0;    ///< running max of int |grad u|^2 over window samples
    int moved = 0;
    int winding = 0;
};

/// One sweep: every non-ring, non-center sample with energy in [alpha - dw, alpha + dw]
/// takes one Armijo step along the Sobolev gradient, with the component along the ray
/// tangent toward its higher-energy neighbor removed. Steps are computed from the old
/// family and applied together. The family max never increases; the ring never moves.
PathFamily deform(const ProblemSpec& p, const PathFamily& family, const DeformationConfig& config,
                  SweepRecord* record = nullptr);

struct MinimaxResult {
    double alpha = 0.0;
    std::size_t argmax = 0;
    double argmax_s = 0.0;
    double argmax_angle = 0.0;
    Field argmax_field;
    std::vector<SweepRecord> trace;
    bool converged = false;
    PathFamily family;
    /// Smallest per-sweep decrease of the family max among sweeps whose gradient norm was
    /// at least grad_threshold (infinity if none).
    double min_decrease = 0.0;
};

MinimaxResult estimate_minimax(const ProblemSpec& p, const PathFamily& family, const DeformationConfig& config = {});

void write_trace_csv(std::ostream& out, const std::vector<SweepRecord>& trace);

// ---------------------------------------------------------------------------
// Critical points

struct Provenance {
    std::string source;
    int continuation_step = -1;
    std::uint64_t seed = 0;
};

struct CriticalPoint {
    Field field;
    EnergyBreakdown energy;
    double parameter = 0.0;
    double residual_max = 0.0;
    double residual_dual = 0.0;
    int newton_iterations = 0;
    std::vector<double> newton_trace;
    std::optional<SpectrumReport> spectrum;
    std::optional<ConcentrationReport> concentration;
    Provenance provenance;
};

struct NewtonConfig {
    double tol = 1e-9;
    int max_iterations = 40;
    /// Scale tol by max(1, |u|_inf) of the iterate.
    bool relative = false;
};

/// Damped Newton on the residual with the exact second variation as Jacobian; the merit
/// function is the residual dual norm. Throws NoConvergence with the merit trace.
CriticalPoint saddle_refine(const ProblemSpec& p, const Field& u0, const NewtonConfig& config = {});

/// Recomputes the residual dual norm on a freshly built grid of the same geometry.
double verify_residual(const ProblemSpec& p, const Field& u);

struct MinimizeConfig {
    double tol = 1e-9;
    int max_descent = 2000;
    double switch_to_newton = 1e-3;  ///< dual norm below which Newton takes over
};

/// Sobolev gradient descent with Armijo steps, finished by Newton. For coercive (subcritical)
/// problems this reaches a local minimizer.
CriticalPoint minimize(const ProblemSpec& p, const Field& u0, const MinimizeConfig& config = {});

struct ContinuationConfig {
    NewtonConfig newton;
    double dirichlet_cap = 1e4;  ///< cap on int |grad u|^2 along the branch
    int max_bisections = 6;
};

struct ContinuationResult {
    std::vector<CriticalPoint> points;
    bool complete = true;
    std::string message;
};

/// Solves at rho_k = rho_start + k (rho_end - rho_start) / steps, k = 0..steps, each from the
/// previous solution. A failed step is bisected up to max_bisections times; after that the
/// partial branch is returned with complete = false.
ContinuationResult continuation_in_rho(const ProblemSpec& p, const Field& start, double rho_start, double rho_end,
                                       int steps, const ContinuationConfig& config = {});

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct MinimaxPipelineConfig {
    FamilyConfig family;
    DeformationConfig deformation;
    NewtonConfig newton;
    int spectrum_size = 6;
    MorseConfig morse;
    double concentration_radius = 0.2;
};

struct MinimaxPipelineResult {
    MinimaxResult minimax;
    CriticalPoint critical;
};

/// build_path_family, estimate_minimax, saddle_refine from the argmax, then spectrum and
/// concentration diagnostics.
MinimaxPipelineResult run_minimax_pipeline(const ProblemSpec& p, const MinimaxPipelineConfig& config = {});

/// Fills spectrum and concentration of a critical point.
void analyse_critical_point(const ProblemSpec& p, CriticalPoint& cp, int spectrum_size, const MorseConfig& morse,
                            double concentration_radius);

}  // namespace mfe
