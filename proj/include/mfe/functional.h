#pragma once

#include "mfe/grid.h"

#include <optional>

namespace mfe {

/// The variational problem: J_rho on an annulus or J_c on a flat torus.
///
/// Annulus: J(u) = 1/2 int |grad u|^2 - rho log int e^u over H^1_0.
/// Torus:   J(u) = 1/2 int |grad u|^2 + c avg(u) - c log int K e^u, avg(u) = int u / |T|.
/// On a unit-area torus avg(u) = int u, which is the usual form. Dividing by the area
/// keeps J invariant under u -> u + const for any period lengths.
class ProblemSpec {
public:
    static ProblemSpec annulus(GridPtr grid, double rho);
    static ProblemSpec torus(GridPtr grid, double c, std::optional<Field> weight = std::nullopt);

    DomainKind kind() const { return grid_->kind(); }
    const GridSpec& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    /// rho on the annulus, c on the torus.
    double parameter() const { return parameter_; }
    /// log K at every node (all zeros for K = 1 and on the annulus).
    const Eigen::VectorXd& log_weight() const { return log_weight_; }
    bool unit_weight() const { return unit_weight_; }

    /// Same problem with a different rho / c.
    ProblemSpec with_parameter(double value) const;

private:
    ProblemSpec(GridPtr grid, double parameter, Eigen::VectorXd log_weight, bool unit_weight);

    GridPtr grid_;
    double parameter_;
    Eigen::VectorXd log_weight_;
    bool unit_weight_;
};

struct EnergyBreakdown {
    double dirichlet = 0.0;  ///< 1/2 int |grad u|^2
    double log_mass = 0.0;   ///< log int e^u, or log int K e^u on the torus
    double linear = 0.0;     ///< c avg(u); zero on the annulus
    double total = 0.0;
};

/// log sum_k w_k e^{u_k}, evaluated as M + log sum_k w_k e^{u_k - M} with M = max u.
double log_integral_exp(const GridSpec& grid, const Field& u);

/// Normalized density q = K e^u / int K e^u (so that int q = 1) and log int K e^u.
struct Density {
    Eigen::VectorXd q;
    double log_mass = 0.0;
};
Density density(const ProblemSpec& p, const Field& u);

EnergyBreakdown energy(const ProblemSpec& p, const Field& u);

/// Euler-Lagrange residual in strong form: -Delta u - rho q on the annulus (zero on the
/// boundary circles), -Delta u + c/|T| - c q on the torus. For every admissible phi,
/// dJ(u)[phi] = <residual(u), phi> in the quadrature inner product.
Field residual(const ProblemSpec& p, const Field& u);

/// Riesz representative of dJ(u) in the energy inner product: poisson_solve(residual).
Field sobolev_gradient(const ProblemSpec& p, const Field& u);

/// H^{-1} norm of the residual, sqrt(<residual, sobolev_gradient>).
double residual_dual_norm(const ProblemSpec& p, const Field& u);

/// Second variation H phi = -Delta phi - rho (q phi - q <q, phi>) (c in place of rho on
/// the torus). Self-adjoint in the quadrature inner product.
Field second_variation_apply(const ProblemSpec& p, const Field& u, const Field& phi);

/// e^u weighted barycenter int x e^u / int e^u. Annulus only.
Point center_of_mass(const GridSpec& grid, const Field& u);

/// Copy of `f` with the annulus boundary circles set to zero.
Field zero_boundary(Field f);

}  // namespace mfe
