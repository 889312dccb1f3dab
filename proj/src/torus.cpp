#include "mfe/torus.h"

#include "mfe/errors.h"

#include <cmath>
#include <numbers>
#include <random>

namespace mfe {

namespace {

constexpr double pi = std::numbers::pi;

void require_torus(const ProblemSpec& p, const char* who) {
    if (p.kind() != DomainKind::torus) throw ConfigError(std::string(who) + ": torus problem required");
}

Field random_start(const ProblemSpec& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const auto& g = p.grid().torus();
    Field f = Field::zeros(p.grid_ptr());
    for (int mx = 0; mx <= 2; ++mx) {
        for (int my = 0; my <= 2; ++my) {
            if (mx == 0 && my == 0) continue;
            const double a = coef(rng) / (mx + my);
            const double b = coef(rng) / (mx + my);
            for (std::size_t k = 0; k < g.size(); ++k) {
                const Point x = g.node(k);
                const double ph = 2 * pi * (mx * x.x / g.l_x() + my * x.y / g.l_y());
                f.values[static_cast<Eigen::Index>(k)] += a * std::cos(ph) + b * std::sin(ph);
            }
        }
    }
    return f;
}

}  // namespace

Field normalize(const ProblemSpec& p, const Field& u) {
    require_conforming(p.grid(), u);
    Field v = u;
    v.values.array() -= density(p, u).log_mass;
    return v;
}

PhaseCenter phase_center(const ProblemSpec& p, const Field& u, double eps_phase) {
    require_torus(p, "phase_center");
    const Density d = density(p, u);
    const auto& g = p.grid().torus();
    const auto& w = g.weights();
    std::complex<double> mx{};
    std::complex<double> my{};
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point x = g.node(k);
        const double m = w[static_cast<Eigen::Index>(k)] * d.q[static_cast<Eigen::Index>(k)];
        mx += m * std::polar(1.0, 2 * pi * x.x / g.l_x());
        my += m * std::polar(1.0, 2 * pi * x.y / g.l_y());
    }
    auto angle = [](std::complex<double> z) {
        const double a = std::arg(z);
        const double b = a < 0.0 ? a + 2 * pi : a;
        return b >= 2 * pi ? 0.0 : b;
    };
    PhaseCenter c;
    c.m_x = std::min(1.0, std::abs(mx));
    c.m_y = std::min(1.0, std::abs(my));
    c.phi_x = angle(mx);
    c.phi_y = angle(my);
    c.defined_x = c.m_x >= eps_phase;
    c.defined_y = c.m_y >= eps_phase;
    return c;
}

double oscillation(const Field& u) { return u.values.maxCoeff() - u.values.minCoeff(); }

PathFamily build_torus_family(const ProblemSpec& p, const FamilyConfig& config) {
    require_torus(p, "build_torus_family");
    return build_path_family(p, config);
}

TorusSolution solve_torus(const ProblemSpec& p, const TorusConfig& config) {
    require_torus(p, "solve_torus");
    const double c = p.parameter();
    if (!(c > 0.0) || c >= 16 * pi) throw ConfigError("solve_torus: c must lie in (0, 16 pi)");
    if (std::abs(c - 8 * pi) <= 1e-12 * 8 * pi) throw ConfigError("solve_torus: c = 8 pi is critical");

    TorusSolution sol;
    sol.supercritical = c > 8 * pi;
    const auto& pc = config.pipeline;
    if (sol.supercritical) {
        auto res = run_minimax_pipeline(p, pc);
        sol.critical = std::move(res.critical);
        sol.minimax = std::move(res.minimax);
    } else {
        sol.critical = minimize(p, random_start(p, config.seed), config.minimize);
        sol.critical.provenance = {"minimize", -1, config.seed};
    }

    sol.critical.field = normalize(p, sol.critical.field);
    sol.critical.energy = energy(p, sol.critical.field);
    sol.normalization_error = std::abs(std::exp(density(p, sol.critical.field).log_mass) - 1.0);
    sol.normalized_residual = residual(p, sol.critical.field).values.cwiseAbs().maxCoeff();
    sol.critical.residual_max = sol.normalized_residual;
    sol.critical.residual_dual = residual_dual_norm(p, sol.critical.field);
    if (!sol.supercritical || !sol.critical.spectrum) {
        analyse_critical_point(p, sol.critical, pc.spectrum_size, pc.morse, pc.concentration_radius);
    }
    sol.osc = oscillation(sol.critical.field);
    sol.phase = phase_center(p, sol.critical.field);
    return sol;
}

}  // namespace mfe
