#include "mfe/radial.h"

#include "mfe/errors.h"
#include "mfe/field_io.h"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mfe {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// u, u', m = int r e^u, e = int r u'^2, and the derivatives of (u, u', m) in s and sigma.
using State = std::array<double, 10>;

struct Shot {
    State end{};
    std::vector<double> u;
    std::vector<double> du;
};

Shot integrate(double a, const std::vector<double>& mesh, double s, double sigma, double tol) {
    namespace odeint = boost::numeric::odeint;
    auto rhs = [sigma](const State& y, State& dy, double r) {
        const double eu = std::exp(y[0]);
        dy[0] = y[1];
        dy[1] = -y[1] / r - sigma * eu;
        dy[2] = r * eu;
        dy[3] = r * y[1] * y[1];
        dy[4] = y[5];
        dy[5] = -y[5] / r - sigma * eu * y[4];
        dy[6] = r * eu * y[4];
        dy[7] = y[8];
        dy[8] = -y[8] / r - eu - sigma * eu * y[7];
        dy[9] = r * eu * y[7];
    };
    State y{};
    y[1] = s;
    y[5] = 1.0;
    Shot shot;
    shot.u.reserve(mesh.size());
    shot.du.reserve(mesh.size());
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    const double h0 = (mesh.back() - a) / static_cast<double>(mesh.size() - 1);
    odeint::integrate_times(stepper, rhs, y, mesh.begin(), mesh.end(), 0.25 * h0, [&](const State& x, double) {
        shot.u.push_back(x[0]);
        shot.du.push_back(x[1]);
    });
    for (const double v : y) {
        if (!std::isfinite(v)) throw NumericError("radial shooting blew up");
    }
    shot.end = y;
    return shot;
}

struct Residual {
    double f1;
    double f2;
    double norm() const { return std::hypot(f1, f2); }
};

Residual shooting_residual(const State& y, double sigma, double rho) {
    return {y[0], two_pi * sigma * y[2] / rho - 1.0};
}

std::vector<double> make_mesh(double a, double b, int n) {
    std::vector<double> mesh(static_cast<std::size_t>(n));
    const double h = (b - a) / (n - 1);
    for (int k = 0; k < n; ++k) mesh[static_cast<std::size_t>(k)] = a + k * h;
    mesh.back() = b;
    return mesh;
}

struct Guess {
    double s;
    double sigma;
};

// Small-rho asymptotics: u ~ (rho/|Omega|) u_1 with -Delta u_1 = 1, Dirichlet.
Guess linear_guess(double a, double b, double rho) {
    const double area = std::numbers::pi * (b * b - a * a);
    const double coef = (b * b - a * a) / (4.0 * std::log(b / a));
    return {rho / area * (-a / 2.0 + coef / a), rho / area};
}

// Damped Newton on the two matching conditions. Returns false if it stalls.
bool newton(double a, const std::vector<double>& mesh, double rho, const RadialOptions& opt, Guess& g,
            int& iterations, std::vector<double>& trace) {
    Shot shot = integrate(a, mesh, g.s, g.sigma, opt.ode_tolerance);
    Residual res = shooting_residual(shot.end, g.sigma, rho);
    for (int it = 0; it < opt.max_newton; ++it) {
        trace.push_back(res.norm());
        if (res.norm() <= opt.shooting_tolerance) {
            iterations = it;
            return true;
        }
        const auto& y = shot.end;
        const double j11 = y[4];
        const double j12 = y[7];
        const double j21 = two_pi * g.sigma * y[6] / rho;
        const double j22 = two_pi * (y[2] + g.sigma * y[9]) / rho;
        const double det = j11 * j22 - j12 * j21;
        if (!std::isfinite(det) || det == 0.0) return false;
        const double ds = -(j22 * res.f1 - j12 * res.f2) / det;
        const double dsig = -(-j21 * res.f1 + j11 * res.f2) / det;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            const Guess trial{g.s + t * ds, g.sigma + t * dsig};
            if (trial.sigma <= 0.0) continue;
            try {
                Shot next = integrate(a, mesh, trial.s, trial.sigma, opt.ode_tolerance);
                const Residual r = shooting_residual(next.end, trial.sigma, rho);
                if (r.norm() < (1.0 - 1e-4 * t) * res.norm() || r.norm() <= opt.shooting_tolerance) {
                    g = trial;
                    shot = std::move(next);
                    res = r;
                    accepted = true;
                    break;
                }
            } catch (const NumericError&) {
            }
        }
        if (!accepted) {
            // Integration noise floor: accept when already near the tolerance.
            if (res.norm() <= 100.0 * opt.shooting_tolerance) {
                iterations = it;
                return true;
            }
            return false;
        }
    }
    trace.push_back(res.norm());
    iterations = opt.max_newton;
    return res.norm() <= 100.0 * opt.shooting_tolerance;
}

RadialProfile finish(double a, double b, double rho, const std::vector<double>& mesh, const Guess& g,
                     const RadialOptions& opt, int iterations) {
    const Shot shot = integrate(a, mesh, g.s, g.sigma, opt.ode_tolerance);
    RadialProfile p;
    p.r_inner = a;
    p.r_outer = b;
    p.rho = rho;
    p.sigma = g.sigma;
    p.slope = g.s;
    p.r = mesh;
    p.u = shot.u;
    p.du = shot.du;
    p.boundary_residual = std::abs(shot.end[0]);
    p.u.front() = 0.0;
    p.u.back() = 0.0;
    p.mass = two_pi * shot.end[2];
    p.dirichlet = 0.5 * two_pi * shot.end[3];
    p.newton_iterations = iterations;
    return p;
}

void validate(double a, double b, double rho, int n) {
    if (!(a > 0.0) || !(b > a)) throw ConfigError("radial: need 0 < r_inner < r_outer");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("radial: rho must be positive");
    if (n < 1000) throw ConfigError("radial: mesh needs at least 1000 nodes");
}

// Continuation in rho from `from` (with solution guess g) to `to`.
Guess continue_to(double a, const std::vector<double>& mesh, double from, Guess g, double to,
                  const RadialOptions& opt, int& iterations, std::vector<double>& trace) {
    double current = from;
    double step = std::max(0.5, 0.1 * (to - from));
    Guess prev = g;
    double prev_rho = from;
    int failures = 0;
    while (current < to) {
        const double next = std::min(to, current + step);
        Guess trial = g;
        if (prev_rho < current) {
            const double w = (next - current) / (current - prev_rho);
            trial = {g.s + w * (g.s - prev.s), g.sigma + w * (g.sigma - prev.sigma)};
            if (trial.sigma <= 0.0) trial = g;
        }
        int its = 0;
        bool ok = false;
        try {
            ok = newton(a, mesh, next, opt, trial, its, trace);
        } catch (const NumericError&) {
            ok = false;
        }
        if (ok) {
            prev = g;
            prev_rho = current;
            g = trial;
            current = next;
            iterations = its;
            if (its <= 4) step *= 1.5;
        } else {
            step *= 0.5;
            if (++failures > opt.max_restarts || step < 1e-6) {
                throw NoConvergence("radial continuation stalled at rho=" + format_double(current), trace);
            }
        }
    }
    return g;
}

}  // namespace

double RadialProfile::energy() const { return dirichlet - rho * std::log(mass); }

double RadialProfile::value_at(double radius) const {
    if (radius < r.front() - 1e-12 || radius > r.back() + 1e-12) {
        throw ConfigError("radius outside the profile range");
    }
    const double h = (r.back() - r.front()) / static_cast<double>(r.size() - 1);
    auto k = static_cast<std::size_t>(std::floor((radius - r.front()) / h));
    k = std::min(k, r.size() - 2);
    const double x0 = r[k];
    const double dx = r[k + 1] - x0;
    const double t = std::clamp((radius - x0) / dx, 0.0, 1.0);
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * u[k] + (t3 - 2 * t2 + t) * dx * du[k] + (-2 * t3 + 3 * t2) * u[k + 1] +
           (t3 - t2) * dx * du[k + 1];
}

RadialProfile solve_radial(double r_inner, double r_outer, double rho, int n, const RadialOptions& opt) {
    validate(r_inner, r_outer, rho, n);
    const auto mesh = make_mesh(r_inner, r_outer, n);
    std::vector<double> trace;
    int iterations = 0;
    if (opt.initial_slope || opt.initial_sigma) {
        const Guess lin = linear_guess(r_inner, r_outer, rho);
        Guess g{opt.initial_slope.value_or(lin.s), opt.initial_sigma.value_or(lin.sigma)};
        if (!newton(r_inner, mesh, rho, opt, g, iterations, trace)) {
            throw NoConvergence("radial shooting from the given seed did not converge", trace);
        }
        return finish(r_inner, r_outer, rho, mesh, g, opt, iterations);
    }
    const double start = std::min(rho, 0.5);
    Guess g = linear_guess(r_inner, r_outer, start);
    if (!newton(r_inner, mesh, start, opt, g, iterations, trace)) {
        throw NoConvergence("radial shooting failed at the small-rho start", trace);
    }
    g = continue_to(r_inner, mesh, start, g, rho, opt, iterations, trace);
    return finish(r_inner, r_outer, rho, mesh, g, opt, iterations);
}

std::vector<RadialProfile> radial_branch(double r_inner, double r_outer, const std::vector<double>& rhos, int n,
                                         const RadialOptions& opt) {
    std::vector<RadialProfile> out;
    if (rhos.empty()) return out;
    for (std::size_t k = 1; k < rhos.size(); ++k) {
        if (!(rhos[k] > rhos[k - 1])) throw ConfigError("radial_branch: rho values must increase");
    }
    out.push_back(solve_radial(r_inner, r_outer, rhos.front(), n, opt));
    const auto mesh = make_mesh(r_inner, r_outer, n);
    std::vector<double> trace;
    for (std::size_t k = 1; k < rhos.size(); ++k) {
        const auto& last = out.back();
        int iterations = 0;
        const Guess g = continue_to(r_inner, mesh, last.rho, {last.slope, last.sigma}, rhos[k], opt, iterations,
                                    trace);
        out.push_back(finish(r_inner, r_outer, rhos[k], mesh, g, opt, iterations));
    }
    return out;
}

double radial_ode_residual(const RadialProfile& p) {
    const std::size_t n = p.r.size();
    // f = r e^u, f' = e^u (1 + r u'); g = u', g' = -u'/r - sigma e^u
    double mass = 0.0;
    double uint = 0.0;
    double worst = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double h = p.r[k] - p.r[k - 1];
        const double e0 = std::exp(p.u[k - 1]);
        const double e1 = std::exp(p.u[k]);
        const double f0 = p.r[k - 1] * e0;
        const double f1 = p.r[k] * e1;
        const double fp0 = e0 * (1.0 + p.r[k - 1] * p.du[k - 1]);
        const double fp1 = e1 * (1.0 + p.r[k] * p.du[k]);
        mass += 0.5 * h * (f0 + f1) - h * h / 12.0 * (fp1 - fp0);
        const double gp0 = -p.du[k - 1] / p.r[k - 1] - p.sigma * e0;
        const double gp1 = -p.du[k] / p.r[k] - p.sigma * e1;
        uint += 0.5 * h * (p.du[k - 1] + p.du[k]) - h * h / 12.0 * (gp1 - gp0);
        const double flux = p.r[k] * p.du[k] - p.r.front() * p.du.front() + p.sigma * mass;
        worst = std::max({worst, std::abs(flux), std::abs(p.u[k] - uint)});
    }
    worst = std::max(worst, std::abs(p.sigma * two_pi * mass - p.rho) / p.rho);
    return worst;
}

Field evaluate_on_grid(const RadialProfile& p, const GridPtr& grid) {
    if (grid->kind() != DomainKind::annulus) throw ConfigError("radial profile needs an annulus grid");
    const auto& g = grid->annulus();
    const double tol = 1e-12 * p.r_outer;
    if (std::abs(g.r_inner() - p.r_inner) > tol || std::abs(g.r_outer() - p.r_outer) > tol) {
        throw ConfigError("grid radii do not match the radial profile range");
    }
    Field f = Field::zeros(grid);
    for (int i = 1; i + 1 < g.n_r(); ++i) {
        const double v = p.value_at(g.radius(i));
        for (int j = 0; j < g.n_theta(); ++j) f.values[static_cast<Eigen::Index>(g.index(i, j))] = v;
    }
    return f;
}

void write_profile_csv(std::ostream& out, const RadialProfile& p) {
    out << "r,u\n";
    for (std::size_t k = 0; k < p.r.size(); ++k) out << format_double(p.r[k]) << ',' << format_double(p.u[k]) << '\n';
    out << "# rho=" << format_double(p.rho) << ",sigma=" << format_double(p.sigma) << '\n';
}

}  // namespace mfe
