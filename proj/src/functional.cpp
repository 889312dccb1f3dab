#include "mfe/functional.h"

#include "mfe/errors.h"

#include <cmath>

namespace mfe {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

// log sum_k w_k exp(a_k) with a max shift; a may already contain log K.
double shifted_log_sum(const Eigen::VectorXd& w, const Eigen::VectorXd& a) {
    const double m = a.maxCoeff();
    const double s = (w.array() * (a.array() - m).exp()).sum();
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericError("log-sum-exp underflow");
    return m + std::log(s);
}

void require_admissible(const ProblemSpec& p, const Field& u) {
    require_conforming(p.grid(), u);
    require_finite(u.values, "field");
    if (p.kind() == DomainKind::annulus && !is_dirichlet(u)) {
        throw ConfigError("annulus field must vanish on the boundary circles");
    }
}

}  // namespace

ProblemSpec::ProblemSpec(GridPtr grid, double parameter, Eigen::VectorXd log_weight, bool unit_weight)
    : grid_(std::move(grid)),
      parameter_(parameter),
      log_weight_(std::move(log_weight)),
      unit_weight_(unit_weight) {}

ProblemSpec ProblemSpec::annulus(GridPtr grid, double rho) {
    if (!grid || grid->kind() != DomainKind::annulus) throw ConfigError("annulus problem needs an annulus grid");
    if (!std::isfinite(rho) || rho < 0.0) throw ConfigError("rho must be finite and non-negative");
    const auto n = static_cast<Eigen::Index>(grid->size());
    return ProblemSpec(std::move(grid), rho, Eigen::VectorXd::Zero(n), true);
}

ProblemSpec ProblemSpec::torus(GridPtr grid, double c, std::optional<Field> weight) {
    if (!grid || grid->kind() != DomainKind::torus) throw ConfigError("torus problem needs a torus grid");
    if (!std::isfinite(c) || c < 0.0) throw ConfigError("c must be finite and non-negative");
    const auto n = static_cast<Eigen::Index>(grid->size());
    if (!weight) return ProblemSpec(std::move(grid), c, Eigen::VectorXd::Zero(n), true);
    require_conforming(*grid, *weight);
    if (!weight->values.allFinite() || (weight->values.array() <= 0.0).any()) {
        throw ConfigError("torus weight K must be finite and strictly positive");
    }
    const bool unit = (weight->values.array() == 1.0).all();
    return ProblemSpec(std::move(grid), c, weight->values.array().log().matrix(), unit);
}

ProblemSpec ProblemSpec::with_parameter(double value) const {
    if (!std::isfinite(value) || value < 0.0) throw ConfigError("parameter must be finite and non-negative");
    ProblemSpec copy = *this;
    copy.parameter_ = value;
    return copy;
}

double log_integral_exp(const GridSpec& grid, const Field& u) {
    require_conforming(grid, u);
    require_finite(u.values, "field");
    return shifted_log_sum(grid.weights(), u.values);
}

Density density(const ProblemSpec& p, const Field& u) {
    require_conforming(p.grid(), u);
    require_finite(u.values, "field");
    const Eigen::VectorXd a = u.values + p.log_weight();
    Density d;
    d.log_mass = shifted_log_sum(p.grid().weights(), a);
    d.q = (a.array() - d.log_mass).exp().matrix();
    return d;
}

EnergyBreakdown energy(const ProblemSpec& p, const Field& u) {
    require_admissible(p, u);
    const auto& g = p.grid();
    EnergyBreakdown e;
    e.dirichlet = dirichlet_energy(g, u);
    e.log_mass = shifted_log_sum(g.weights(), u.values + p.log_weight());
    const double param = p.parameter();
    if (p.kind() == DomainKind::annulus) {
        e.total = e.dirichlet - param * e.log_mass;
    } else {
        e.linear = param * integrate(g, u) / g.area();
        e.total = e.dirichlet + e.linear - param * e.log_mass;
    }
    if (!std::isfinite(e.total)) throw NumericError("energy is not finite");
    return e;
}

Field residual(const ProblemSpec& p, const Field& u) {
    require_admissible(p, u);
    const auto& g = p.grid();
    Field r = laplacian_apply(g, u);
    const Density d = density(p, u);
    const double param = p.parameter();
    if (p.kind() == DomainKind::annulus) {
        r.values -= param * d.q;
        return zero_boundary(std::move(r));
    }
    r.values.array() += param / g.area();
    r.values -= param * d.q;
    return r;
}

Field sobolev_gradient(const ProblemSpec& p, const Field& u) {
    return poisson_solve(p.grid(), residual(p, u));
}

double residual_dual_norm(const ProblemSpec& p, const Field& u) {
    const Field r = residual(p, u);
    const Field g = poisson_solve(p.grid(), r);
    return std::sqrt(std::max(0.0, inner(p.grid(), r, g)));
}

Field second_variation_apply(const ProblemSpec& p, const Field& u, const Field& phi) {
    require_admissible(p, u);
    require_conforming(p.grid(), phi);
    const auto& g = p.grid();
    const Field phi0 = zero_boundary(phi);
    Field out = laplacian_apply(g, phi0);
    const Density d = density(p, u);
    const double q_phi = (g.weights().array() * d.q.array() * phi0.values.array()).sum();
    out.values -= p.parameter() * (d.q.cwiseProduct(phi0.values) - q_phi * d.q);
    return zero_boundary(std::move(out));
}

Point center_of_mass(const GridSpec& grid, const Field& u) {
    require_conforming(grid, u);
    require_finite(u.values, "field");
    if (grid.kind() != DomainKind::annulus) {
        throw ConfigError("center_of_mass is defined on the annulus; use phase_center on the torus");
    }
    const double m = u.values.maxCoeff();
    const auto& w = grid.weights();
    double mass = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        const double e = w[idx] * std::exp(u.values[idx] - m);
        const Point x = grid.node(k);
        mass += e;
        sx += e * x.x;
        sy += e * x.y;
    }
    return {sx / mass, sy / mass};
}

Field zero_boundary(Field f) {
    if (f.grid->kind() == DomainKind::annulus) {
        const auto& g = f.grid->annulus();
        const auto n = static_cast<Eigen::Index>(g.n_theta());
        f.values.head(n).setZero();
        f.values.tail(n).setZero();
    }
    return f;
}

}  // namespace mfe
