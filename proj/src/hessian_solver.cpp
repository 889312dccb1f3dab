#include "mfe/hessian_solver.h"

#include "mfe/errors.h"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace mfe {

MinresResult minres(const VectorMap& apply_a, const VectorMap& apply_preconditioner,
                    const Eigen::VectorXd& b, double rel_tol, int max_iterations) {
    MinresResult out;
    const auto n = b.size();
    out.x = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd r1 = b;
    Eigen::VectorXd y = apply_preconditioner(r1);
    const double beta1_sq = r1.dot(y);
    if (beta1_sq < 0.0) throw NumericError("minres: preconditioner is not positive definite");
    const double beta1 = std::sqrt(beta1_sq);
    if (beta1 == 0.0) {
        out.converged = true;
        return out;
    }

    Eigen::VectorXd r2 = r1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w1 = w;
    Eigen::VectorXd w2 = w;
    double old_beta = 0.0;
    double beta = beta1;
    double dbar = 0.0;
    double epsilon = 0.0;
    double phibar = beta1;
    double cs = -1.0;
    double sn = 0.0;
    constexpr double tiny = std::numeric_limits<double>::min();

    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::VectorXd v = y / beta;
        y = apply_a(v);
        if (it >= 2) y -= (beta / old_beta) * r1;
        const double alpha = v.dot(y);
        y -= (alpha / beta) * r2;
        r1 = r2;
        r2 = y;
        y = apply_preconditioner(r2);
        old_beta = beta;
        const double beta_sq = r2.dot(y);
        if (beta_sq < 0.0) throw NumericError("minres: preconditioner is not positive definite");
        beta = std::sqrt(beta_sq);

        const double old_epsilon = epsilon;
        const double delta = cs * dbar + sn * alpha;
        const double gbar = sn * dbar - cs * alpha;
        epsilon = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), tiny);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1 = w2;
        w2 = w;
        w = (v - old_epsilon * w1 - delta * w2) / gamma;
        out.x += phi * w;
        out.iterations = it;
        out.residual_estimate = phibar / beta1;
        if (out.residual_estimate <= rel_tol || beta == 0.0) {
            out.converged = true;
            break;
        }
    }
    return out;
}

struct HessianSolver::Impl {
    ProblemSpec problem;
    GridPtr grid;
    double shift = 0.0;
    double param = 0.0;
    Eigen::VectorXd q;  // normalized density, full grid

    // annulus
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool use_lu = false;
    Eigen::VectorXd v;  // W q on the interior unknowns
    Eigen::VectorXd z;  // A^{-1} v
    double denominator = 1.0;
    std::optional<int> negatives;

    // torus
    double mu = 1.0;

    explicit Impl(const ProblemSpec& p) : problem(p) {}

    Eigen::VectorXd solve_base(const Eigen::VectorXd& b) const {
        return use_lu ? Eigen::VectorXd(lu.solve(b)) : Eigen::VectorXd(ldlt.solve(b));
    }
};

HessianSolver::HessianSolver(const ProblemSpec& p, const Field& u, double shift)
    : impl_(std::make_unique<Impl>(p)) {
    auto& s = *impl_;
    s.grid = p.grid_ptr();
    s.shift = shift;
    s.param = p.parameter();
    s.q = density(p, u).q;

    if (p.kind() == DomainKind::annulus) {
        const auto& g = p.grid().annulus();
        const Eigen::VectorXd w = g.interior_weights();
        const Eigen::VectorXd q_int = g.restrict_interior(s.q);
        Eigen::SparseMatrix<double> a = g.stiffness();
        const Eigen::VectorXd diag = w.cwiseProduct(s.param * q_int + Eigen::VectorXd::Constant(w.size(), shift));
        for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) -= diag[k];
        s.ldlt.compute(a);
        bool ok = s.ldlt.info() == Eigen::Success;
        if (ok) {
            const auto d = s.ldlt.vectorD();
            ok = d.allFinite() && (d.array() != 0.0).all();
        }
        if (!ok) {
            s.use_lu = true;
            s.lu.analyzePattern(a);
            s.lu.factorize(a);
            if (s.lu.info() != Eigen::Success) throw NumericError("second variation is singular");
        }
        s.v = w.cwiseProduct(q_int);
        s.z = s.solve_base(s.v);
        s.denominator = 1.0 + s.param * s.v.dot(s.z);
        if (!std::isfinite(s.denominator) || std::abs(s.denominator) < 1e-14) {
            throw NumericError("second variation is singular (rank-one update)");
        }
        if (!s.use_lu) {
            const auto d = s.ldlt.vectorD();
            int neg = static_cast<int>((d.array() < 0.0).count());
            if (s.param > 0.0 && s.denominator < 0.0) --neg;
            s.negatives = neg;
        }
    } else {
        s.mu = 1.0 + std::abs(shift) + s.param / p.grid().area();
    }
}

HessianSolver::~HessianSolver() = default;
HessianSolver::HessianSolver(HessianSolver&&) noexcept = default;
HessianSolver& HessianSolver::operator=(HessianSolver&&) noexcept = default;

Field HessianSolver::solve(const Field& rhs) const {
    const auto& s = *impl_;
    require_conforming(*s.grid, rhs);
    if (s.grid->kind() == DomainKind::annulus) {
        const auto& g = s.grid->annulus();
        const Eigen::VectorXd b = g.restrict_interior(rhs.values).cwiseProduct(g.interior_weights());
        const Eigen::VectorXd y = s.solve_base(b);
        const Eigen::VectorXd x = y - s.z * (s.param * s.v.dot(y) / s.denominator);
        return Field(s.grid, g.extend_interior(x));
    }

    const auto& g = s.grid->torus();
    const auto n = static_cast<double>(g.size());
    const auto& symbol = g.symbol();
    auto project = [n](Eigen::VectorXd x) {
        x.array() -= x.sum() / n;
        return x;
    };
    const double w = g.cell_area();
    auto apply_a = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        std::vector<std::complex<double>> spec;
        g.forward(x, spec);
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= symbol[k];
        Eigen::VectorXd y = g.backward(spec);
        const double qx = w * s.q.dot(x);
        y -= s.param * (s.q.cwiseProduct(x) - qx * s.q);
        y -= s.shift * x;
        return project(std::move(y));
    };
    auto apply_m = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        std::vector<std::complex<double>> spec;
        g.forward(project(x), spec);
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] /= (symbol[k] + s.mu);
        return project(g.backward(spec));
    };
    const Eigen::VectorXd b = project(rhs.values);
    const MinresResult r = minres(apply_a, apply_m, b, 1e-13, 4000);
    if (!r.converged && r.residual_estimate > 1e-9) {
        throw NoConvergence("minres did not converge in the torus Hessian solve", {r.residual_estimate});
    }
    return Field(s.grid, r.x);
}

std::optional<int> HessianSolver::negative_count() const { return impl_->negatives; }

}  // namespace mfe
