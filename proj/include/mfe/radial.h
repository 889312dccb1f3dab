#pragma once

#include "mfe/grid.h"

#include <iosfwd>
#include <optional>
#include <vector>

namespace mfe {

/// Radially symmetric solution of -(1/r)(r u')' = sigma e^u on [r_inner, r_outer] with
/// u = 0 at both ends and sigma * int e^u dA = rho.
struct RadialProfile {
    double r_inner = 0.0;
    double r_outer = 0.0;
    double rho = 0.0;
    double sigma = 0.0;
    double slope = 0.0;  ///< u'(r_inner)
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> du;
    double mass = 0.0;           ///< int e^u dA
    double dirichlet = 0.0;      ///< 1/2 int |grad u|^2
    double boundary_residual = 0.0;  ///< |u(r_outer)|
    int newton_iterations = 0;

    /// J_rho of the profile, computed from the integrated quantities.
    double energy() const;
    /// Cubic Hermite interpolation on the stored nodes.
    double value_at(double radius) const;
};

struct RadialOptions {
    /// Seeds for (u'(r_inner), sigma). Without them the branch is continued from rho -> 0.
    std::optional<double> initial_slope;
    std::optional<double> initial_sigma;
    double ode_tolerance = 1e-10;
    double shooting_tolerance = 1e-11;
    int max_newton = 30;
    int max_restarts = 40;
};

RadialProfile solve_radial(double r_inner, double r_outer, double rho, int n, const RadialOptions& opt = {});

/// Profiles at increasing rho values, each warm-started from the previous one.
std::vector<RadialProfile> radial_branch(double r_inner, double r_outer, const std::vector<double>& rhos, int n,
                                         const RadialOptions& opt = {});

/// Max-norm residual of the ODE in integrated form, checked independently of the
/// integrator: r u' - r_inner u'(r_inner) + sigma int r e^u and u - int u', both with
/// end-corrected trapezoid sums on the stored nodes.
double radial_ode_residual(const RadialProfile& p);

/// Samples the profile on an annulus grid with the same radii (constant in theta).
Field evaluate_on_grid(const RadialProfile& p, const GridPtr& grid);

/// CSV `r,u` rows followed by a footer line `# rho=...,sigma=...`.
void write_profile_csv(std::ostream& out, const RadialProfile& p);

}  // namespace mfe
