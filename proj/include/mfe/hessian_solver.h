#pragma once

#include "mfe/functional.h"

#include <functional>
#include <memory>
#include <optional>

namespace mfe {

struct MinresResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual_estimate = 0.0;  ///< preconditioned residual norm relative to |b|
    bool converged = false;
};

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Preconditioned MINRES for symmetric (possibly indefinite) A with SPD preconditioner.
MinresResult minres(const VectorMap& apply_a, const VectorMap& apply_preconditioner,
                    const Eigen::VectorXd& b, double rel_tol, int max_iterations);

/// Solves (H(u) - shift) x = rhs for the second variation at u.
///
/// Annulus: sparse LDL^T of W(-Delta - rho diag(q) - shift) on the interior unknowns;
/// the nonlocal term rho (Wq)(Wq)^T is rank one and handled by Sherman-Morrison.
/// Torus: MINRES on the mean-zero subspace, preconditioned by the Fourier inverse of
/// -Delta + mu. Constants are the exact null space of H on the torus, so solutions
/// are returned with zero mean.
class HessianSolver {
public:
    HessianSolver(const ProblemSpec& p, const Field& u, double shift = 0.0);
    ~HessianSolver();
    HessianSolver(HessianSolver&&) noexcept;
    HessianSolver& operator=(HessianSolver&&) noexcept;

    Field solve(const Field& rhs) const;

    /// Number of negative eigenvalues of H - shift from the LDL^T inertia (annulus only).
    std::optional<int> negative_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mfe
