#include "mfe/minimax.h"

#include "mfe/errors.h"
#include "mfe/field_io.h"
#include "mfe/hessian_solver.h"
#include "mfe/torus.h"
#include "parallel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace mfe {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double eight_pi = 8.0 * pi;

double smooth_step_part(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// 1 on [0, 1/2], C-infinity decay to 0 at 1.
double cutoff(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    const double t = (s - 0.5) / 0.5;
    const double a = smooth_step_part(1.0 - t);
    return a / (a + smooth_step_part(t));
}

double wrap(double d, double period) { return d - period * std::round(d / period); }

double distance(const GridSpec& grid, Point x, Point c) {
    if (grid.kind() == DomainKind::torus) {
        const auto& t = grid.torus();
        return std::hypot(wrap(x.x - c.x, t.l_x()), wrap(x.y - c.y, t.l_y()));
    }
    return std::hypot(x.x - c.x, x.y - c.y);
}

double energy_norm(const GridSpec& g, const Field& f) { return std::sqrt(std::max(0.0, energy_inner(g, f, f))); }

Point ring_center(const GridSpec& grid, double angle, TorusAxis axis) {
    if (grid.kind() == DomainKind::annulus) {
        const auto& a = grid.annulus();
        const double r = 0.5 * (a.r_inner() + a.r_outer());
        return {r * std::cos(angle), r * std::sin(angle)};
    }
    const auto& t = grid.torus();
    const double frac = angle / (2.0 * pi);
    if (axis == TorusAxis::x) return {t.l_x() * frac, 0.5 * t.l_y()};
    return {0.5 * t.l_x(), t.l_y() * frac};
}

}  // namespace

// ---------------------------------------------------------------------------
// Bubbles and loops

double default_support(const GridSpec& grid) {
    if (grid.kind() == DomainKind::annulus) {
        const auto& a = grid.annulus();
        return 0.45 * (a.r_outer() - a.r_inner());
    }
    const auto& t = grid.torus();
    return 0.45 * std::min(t.l_x(), t.l_y());
}

Field make_bubble(const GridPtr& grid, const BubbleParams& b) {
    if (!(b.lambda >= 1.0) || !std::isfinite(b.lambda)) throw ConfigError("bubble: lambda must be >= 1");
    if (!(b.amplitude >= 0.0 && b.amplitude <= 1.0)) throw ConfigError("bubble: amplitude must lie in [0, 1]");
    if (!(b.support > 0.0)) throw ConfigError("bubble: support radius must be positive");
    const double delta = b.support;
    double cell = 0.0;
    if (grid->kind() == DomainKind::annulus) {
        const auto& a = grid->annulus();
        const double rc = std::hypot(b.center.x, b.center.y);
        const double slack = 1e-12 * a.r_outer();
        if (rc - delta < a.r_inner() - slack || rc + delta > a.r_outer() + slack) {
            throw ConfigError("bubble: center too close to the boundary for the support radius");
        }
        cell = std::max(a.h_r(), rc * a.h_theta());
    } else {
        const auto& t = grid->torus();
        if (2.0 * delta >= std::min(t.l_x(), t.l_y())) {
            throw ConfigError("bubble: support radius must stay below half a torus period");
        }
        cell = std::max(t.l_x() / t.n_x(), t.l_y() / t.n_y());
    }
    if (delta < 3.0 * cell) throw ConfigError("bubble: support narrower than 3 grid cells");

    Field f = Field::zeros(grid);
    if (b.amplitude == 0.0) return f;
    const double l2 = b.lambda * b.lambda;
    const double top = std::log1p(l2 * delta * delta);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        if (grid->on_boundary(k)) continue;
        const double d = distance(*grid, grid->node(k), b.center);
        if (d >= delta) continue;
        const double v = 2.0 * (top - std::log1p(l2 * d * d));
        f.values[static_cast<Eigen::Index>(k)] = b.amplitude * cutoff(d / delta) * v;
    }
    return f;
}

int winding_number(const std::vector<Point>& loop, Point center, double eps) {
    std::vector<Point> pts = loop;
    if (pts.size() >= 2) {
        const Point& a = pts.front();
        const Point& z = pts.back();
        if (std::hypot(a.x - z.x, a.y - z.y) <= 1e-12 * (1.0 + std::hypot(a.x, a.y))) pts.pop_back();
    }
    if (pts.size() < 3) throw DegenerateLoop("winding_number: loop needs at least 3 distinct points");
    for (const auto& p : pts) {
        if (std::hypot(p.x - center.x, p.y - center.y) <= eps) {
            throw DegenerateLoop("winding_number: loop passes through the center");
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& a = pts[k];
        const Point& b = pts[(k + 1) % pts.size()];
        const double ax = a.x - center.x;
        const double ay = a.y - center.y;
        const double bx = b.x - center.x;
        const double by = b.y - center.y;
        total += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
    return static_cast<int>(std::lround(total / (2.0 * pi)));
}

Point loop_point(const ProblemSpec& p, const Field& u, TorusAxis axis) {
    if (p.kind() == DomainKind::annulus) return center_of_mass(p.grid(), u);
    const PhaseCenter c = phase_center(p, u);
    const double m = axis == TorusAxis::x ? c.m_x : c.m_y;
    const double phi = axis == TorusAxis::x ? c.phi_x : c.phi_y;
    return {m * std::cos(phi), m * std::sin(phi)};
}

int ring_winding(const ProblemSpec& p, const PathFamily& f) {
    std::vector<Point> loop;
    for (int j = 0; j < f.n_angular; ++j) {
        loop.push_back(loop_point(p, f.samples[f.index(f.n_radial, j)].field, f.torus_axis));
    }
    return winding_number(loop, {0.0, 0.0}, 1e-9);
}

// ---------------------------------------------------------------------------
// Families

std::size_t PathFamily::argmax() const {
    std::size_t best = 1;
    for (std::size_t k = 2; k < samples.size(); ++k) {
        if (samples[k].energy > samples[best].energy) best = k;
    }
    return best;
}

double PathFamily::continuity_jump() const {
    double jump = 0.0;
    for (int i = 1; i <= n_radial; ++i) {
        for (int j = 0; j < n_angular; ++j) {
            const double e = samples[index(i, j)].energy;
            jump = std::max(jump, std::abs(e - samples[index(i - 1, j)].energy));
            jump = std::max(jump, std::abs(e - samples[index(i, (j + 1) % n_angular)].energy));
        }
    }
    return jump;
}

PathFamily build_path_family(const ProblemSpec& p, const FamilyConfig& config) {
    const double param = p.parameter();
    if (!(param > eight_pi && param < 2.0 * eight_pi)) {
        throw ConfigError("path family needs a supercritical parameter in (8 pi, 16 pi)");
    }
    if (config.n_radial < 4 || config.n_angular < 8) throw ConfigError("path family needs at least 4 x 8 samples");
    if (!(config.amplitude_ramp > 0.0 && config.amplitude_ramp < 1.0)) {
        throw ConfigError("amplitude_ramp must lie in (0, 1)");
    }
    if (!(config.lambda_max > 1.0) || config.lambda_sweep < 2) throw ConfigError("invalid lambda sweep");

    const GridPtr grid = p.grid_ptr();
    const double support = config.support.value_or(default_support(*grid));
    const double j0 = energy(p, Field::zeros(grid)).total;

    PathFamily f;
    f.grid = grid;
    f.parameter = param;
    f.n_radial = config.n_radial;
    f.n_angular = config.n_angular;
    f.torus_axis = config.torus_axis;
    f.max_jump = config.max_jump.value_or(param);

    // Ring concentration: the deepest energy of a geometric sweep beyond its first local maximum.
    const Point c0 = ring_center(*grid, 0.0, config.torus_axis);
    std::vector<double> lams(static_cast<std::size_t>(config.lambda_sweep));
    std::vector<double> sweep(lams.size());
    for (std::size_t k = 0; k < lams.size(); ++k) {
        lams[k] = std::pow(config.lambda_max, static_cast<double>(k) / (config.lambda_sweep - 1));
        sweep[k] = energy(p, make_bubble(grid, {c0, lams[k], 1.0, support})).total;
    }
    std::size_t peak = 0;
    while (peak + 1 < sweep.size() && sweep[peak + 1] > sweep[peak]) ++peak;
    const auto low = static_cast<std::size_t>(std::min_element(sweep.begin() + static_cast<std::ptrdiff_t>(peak), sweep.end()) -
                                              sweep.begin());
    f.lambda_ring = lams[low];
    f.j_low = config.j_low.value_or(j0 + 0.5 * (sweep[peak] - j0));

    const std::size_t count = 1 + static_cast<std::size_t>(config.n_radial) * config.n_angular;
    f.samples.resize(count);
    f.samples[0].field = Field::zeros(grid);
    f.samples[0].bubble = {c0, 1.0, 0.0, support};
    f.samples[0].energy = j0;
    detail::parallel_for(count - 1, 0, [&](std::size_t m) {
        const int i = 1 + static_cast<int>(m) / config.n_angular;
        const int j = static_cast<int>(m) % config.n_angular;
        FamilySample& s = f.samples[f.index(i, j)];
        s.s = static_cast<double>(i) / config.n_radial;
        s.angle = 2.0 * pi * j / config.n_angular;
        const double ramp = config.amplitude_ramp;
        double t = 1.0;
        double lam = 1.0;
        if (s.s <= ramp) {
            t = s.s / ramp;
        } else {
            lam = std::pow(f.lambda_ring, (s.s - ramp) / (1.0 - ramp));
        }
        if (i == config.n_radial) lam = f.lambda_ring;
        s.bubble = {ring_center(*grid, s.angle, config.torus_axis), lam, t, support};
        s.field = make_bubble(grid, s.bubble);
        s.energy = energy(p, s.field).total;
    });

    double ring_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < f.n_angular; ++j) ring_max = std::max(ring_max, f.samples[f.index(f.n_radial, j)].energy);
    if (!(ring_max < f.j_low)) {
        throw ConfigError("boundary ring energy " + format_double(ring_max) + " does not reach J_low = " +
                          format_double(f.j_low) + "; increase lambda_max or refine the grid");
    }
    if (f.continuity_jump() > f.max_jump) {
        throw ConfigError("family energy jump " + format_double(f.continuity_jump()) + " exceeds the bound " +
                          format_double(f.max_jump) + "; use more radial samples");
    }
    if (ring_winding(p, f) != 1) throw ConfigError("boundary loop does not wind once around the hole");
    return f;
}

// ---------------------------------------------------------------------------
// Deformation

PathFamily deform(const ProblemSpec& p, const PathFamily& family, const DeformationConfig& config,
                  SweepRecord* record) {
    require_conforming(p.grid(), family.samples.front().field);
    const auto& g = p.grid();
    PathFamily out = family;
    if (family.parameter != p.parameter()) {
        out.parameter = p.parameter();
        for (auto& s : out.samples) s.energy = energy(p, s.field).total;
    }
    const PathFamily& old = out.parameter == family.parameter ? family : out;

    const double alpha = old.max_energy();
    const double dw = config.window_fraction * std::abs(alpha);
    std::vector<std::size_t> window;
    for (std::size_t k = 1; k < old.samples.size(); ++k) {
        if (old.is_ring(k)) continue;
        if (old.samples[k].energy >= alpha - dw) window.push_back(k);
    }

    struct Step {
        Field field;
        double energy = 0.0;
        double dir_norm = 0.0;
        double dirichlet = 0.0;
        bool moved = false;
    };
    std::vector<Step> steps(window.size());
    detail::parallel_for(window.size(), config.threads, [&](std::size_t w) {
        const std::size_t k = window[w];
        const FamilySample& s = old.samples[k];
        Step& st = steps[w];
        const Field grad = sobolev_gradient(p, s.field);
        st.dirichlet = 2.0 * dirichlet_energy(g, s.field);
        Field dir = grad;
        if (config.tangent_projection) {
            const int i = 1 + static_cast<int>(k - 1) / old.n_angular;
            const int j = static_cast<int>(k - 1) % old.n_angular;
            const FamilySample& inner_s = old.samples[old.index(i - 1, j)];
            const FamilySample& outer_s = old.samples[old.index(i + 1, j)];
            Field tangent = outer_s.energy > inner_s.energy ? outer_s.field - s.field : s.field - inner_s.field;
            const double tn = energy_norm(g, tangent);
            if (tn > 0.0) {
                tangent *= 1.0 / tn;
                dir -= energy_inner(g, grad, tangent) * tangent;
            }
        }
        const double slope = energy_inner(g, grad, dir);
        st.dir_norm = energy_norm(g, dir);
        if (!(slope > 0.0)) return;
        for (double t = config.initial_step; t >= config.min_step; t *= 0.5) {
            Field trial = s.field - t * dir;
            double e = 0.0;
            try {
                e = energy(p, trial).total;
            } catch (const NumericError&) {
                continue;
            }
            if (e <= s.energy - config.armijo * t * slope) {
                st.field = std::move(trial);
                st.energy = e;
                st.moved = true;
                st.dirichlet = std::max(st.dirichlet, 2.0 * dirichlet_energy(g, st.field));
                return;
            }
        }
    });

    SweepRecord rec;
    const std::size_t top = old.argmax();
    for (std::size_t w = 0; w < window.size(); ++w) {
        auto& st = steps[w];
        if (window[w] == top) rec.max_grad_norm = st.dir_norm;
        rec.dirichlet_bound = std::max(rec.dirichlet_bound, st.dirichlet);
        if (!st.moved) continue;
        auto& target = out.samples[window[w]];
        target.field = std::move(st.field);
        target.energy = st.energy;
        ++rec.moved;
    }
    rec.max_energy = out.max_energy();
    if (rec.max_energy > alpha) throw InternalError("deformation increased the family maximum");
    rec.winding = ring_winding(p, out);
    if (rec.winding != 1) throw InternalError("deformation changed the boundary winding number");
    if (record) *record = rec;
    return out;
}

MinimaxResult estimate_minimax(const ProblemSpec& p, const PathFamily& family, const DeformationConfig& config) {
    MinimaxResult res;
    PathFamily current = family;
    double bound = 0.0;
    std::vector<double> history{current.max_energy()};
    res.min_decrease = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        SweepRecord rec;
        current = deform(p, current, config, &rec);
        rec.sweep = sweep;
        bound = std::max(bound, rec.dirichlet_bound);
        rec.dirichlet_bound = bound;
        res.trace.push_back(rec);
        const double decrease = history.back() - rec.max_energy;
        if (rec.max_grad_norm >= config.grad_threshold) res.min_decrease = std::min(res.min_decrease, decrease);
        history.push_back(rec.max_energy);
        if (rec.moved == 0) {
            res.converged = true;
            break;
        }
        const auto n = history.size();
        if (static_cast<int>(n) > config.stagnation_sweeps) {
            const double then = history[n - 1 - static_cast<std::size_t>(config.stagnation_sweeps)];
            if (std::abs(then - rec.max_energy) <= config.tol_stag * std::max(1.0, std::abs(rec.max_energy))) {
                res.converged = true;
                break;
            }
        }
    }
    res.argmax = current.argmax();
    const auto& best = current.samples[res.argmax];
    res.alpha = best.energy;
    res.argmax_s = best.s;
    res.argmax_angle = best.angle;
    res.argmax_field = best.field;
    res.family = std::move(current);
    return res;
}

void write_trace_csv(std::ostream& out, const std::vector<SweepRecord>& trace) {
    out << "sweep,max_energy,max_grad_norm,dirichlet_bound\n";
    for (const auto& r : trace) {
        out << r.sweep << ',' << format_double(r.max_energy) << ',' << format_double(r.max_grad_norm) << ','
            << format_double(r.dirichlet_bound) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Critical points

namespace {

void fill_critical(const ProblemSpec& p, CriticalPoint& cp) {
    cp.parameter = p.parameter();
    cp.energy = energy(p, cp.field);
    const Field r = residual(p, cp.field);
    cp.residual_max = r.values.lpNorm<Eigen::Infinity>();
    cp.residual_dual = std::sqrt(std::max(0.0, inner(p.grid(), r, poisson_solve(p.grid(), r))));
}

}  // namespace

CriticalPoint saddle_refine(const ProblemSpec& p, const Field& u0, const NewtonConfig& config) {
    require_conforming(p.grid(), u0);
    if (!u0.values.allFinite()) throw ConfigError("saddle_refine: start field is not finite");
    CriticalPoint cp;
    Field u = p.kind() == DomainKind::annulus ? zero_boundary(u0) : u0;
    if (p.kind() == DomainKind::annulus) u = Field(p.grid_ptr(), u.values);
    double merit = residual_dual_norm(p, u);
    for (int it = 0;; ++it) {
        cp.newton_trace.push_back(merit);
        const double tol = config.tol * (config.relative ? std::max(1.0, u.values.lpNorm<Eigen::Infinity>()) : 1.0);
        if (merit <= tol) {
            cp.newton_iterations = it;
            break;
        }
        if (it >= config.max_iterations) {
            throw NoConvergence("Newton did not reach the residual tolerance", cp.newton_trace);
        }
        Field step;
        try {
            const HessianSolver solver(p, u);
            step = solver.solve(residual(p, u));
        } catch (const NumericError& e) {
            throw NoConvergence(std::string("Newton: ") + e.what(), cp.newton_trace);
        }
        bool accepted = false;
        for (double t = 1.0; t >= 1.0 / 1024.0; t *= 0.5) {
            Field trial = u - t * step;
            if (!trial.values.allFinite()) continue;
            double m = 0.0;
            try {
                m = residual_dual_norm(p, trial);
            } catch (const NumericError&) {
                continue;
            }
            if (m < (1.0 - 1e-4 * t) * merit) {
                u = std::move(trial);
                merit = m;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NoConvergence("Newton line search failed", cp.newton_trace);
    }
    cp.field = std::move(u);
    fill_critical(p, cp);
    cp.provenance.source = "newton";
    return cp;
}

double verify_residual(const ProblemSpec& p, const Field& u) {
    const GridPtr fresh = grid_from_descriptor(p.grid().describe());
    const Field v(fresh, u.values);
    if (p.kind() == DomainKind::annulus) return residual_dual_norm(ProblemSpec::annulus(fresh, p.parameter()), v);
    const Field k(fresh, p.log_weight().array().exp().matrix());
    return residual_dual_norm(ProblemSpec::torus(fresh, p.parameter(), k), v);
}

CriticalPoint minimize(const ProblemSpec& p, const Field& u0, const MinimizeConfig& config) {
    require_conforming(p.grid(), u0);
    Field u = p.kind() == DomainKind::annulus ? zero_boundary(u0) : u0;
    double e = energy(p, u).total;
    std::vector<double> trace;
    const auto& g = p.grid();
    for (int it = 0; it < config.max_descent; ++it) {
        const Field grad = sobolev_gradient(p, u);
        const double gn = energy_norm(g, grad);
        trace.push_back(gn);
        if (gn <= config.switch_to_newton) {
            NewtonConfig nc;
            nc.tol = config.tol;
            CriticalPoint cp = saddle_refine(p, u, nc);
            cp.provenance.source = "minimize";
            return cp;
        }
        const double slope = gn * gn;
        bool moved = false;
        for (double t = 1.0; t >= 1e-10; t *= 0.5) {
            Field trial = u - t * grad;
            double et = 0.0;
            try {
                et = energy(p, trial).total;
            } catch (const NumericError&) {
                continue;
            }
            if (et <= e - 1e-4 * t * slope) {
                u = std::move(trial);
                e = et;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    throw NoConvergence("gradient descent did not approach a critical point", trace);
}

ContinuationResult continuation_in_rho(const ProblemSpec& p, const Field& start, double rho_start, double rho_end,
                                       int steps, const ContinuationConfig& config) {
    if (steps < 0) throw ConfigError("continuation: steps must be non-negative");
    if (!(rho_end >= rho_start) || !(rho_start > 0.0)) throw ConfigError("continuation: need 0 < rho_start <= rho_end");
    if (steps == 0 && rho_end != rho_start) throw ConfigError("continuation: zero steps need rho_start == rho_end");
    ContinuationResult out;
    auto solve_at = [&](double rho, const Field& guess) { return saddle_refine(p.with_parameter(rho), guess, config.newton); };
    auto check_cap = [&](const CriticalPoint& cp) { return 2.0 * cp.energy.dirichlet <= config.dirichlet_cap; };

    try {
        out.points.push_back(solve_at(rho_start, start));
    } catch (const NoConvergence& e) {
        out.complete = false;
        out.message = std::string("initial solve failed: ") + e.what();
        return out;
    }
    out.points.back().provenance = {"continuation", 0, 0};
    if (!check_cap(out.points.back())) {
        out.complete = false;
        out.message = "Dirichlet integral above the cap at the first step";
        return out;
    }

    double rho_cur = rho_start;
    for (int k = 1; k <= steps; ++k) {
        const double target = rho_start + (rho_end - rho_start) * k / steps;
        int depth = 0;
        while (rho_cur < target) {
            const double h = (target - rho_cur) / std::pow(2.0, depth);
            const double next = depth == 0 ? target : rho_cur + h;
            // secant predictor from the last two solutions
            Field guess = out.points.back().field;
            if (out.points.size() >= 2) {
                const auto& a = out.points[out.points.size() - 2];
                const auto& b = out.points.back();
                const double w = (next - b.parameter) / (b.parameter - a.parameter);
                guess = b.field + w * (b.field - a.field);
            }
            try {
                CriticalPoint cp = solve_at(next, guess);
                if (!check_cap(cp)) {
                    out.complete = false;
                    out.message = "Dirichlet integral exceeded the cap at rho=" + format_double(next);
                    return out;
                }
                rho_cur = next;
                if (next == target) {
                    cp.provenance = {"continuation", k, 0};
                    out.points.push_back(std::move(cp));
                } else {
                    // intermediate bisection point: keep as predictor history only
                    cp.provenance = {"continuation-substep", k, 0};
                    out.points.push_back(std::move(cp));
                }
                depth = 0;
            } catch (const NoConvergence&) {
                if (++depth > config.max_bisections) {
                    out.complete = false;
                    out.message = "continuation step failed near rho=" + format_double(next);
                    std::erase_if(out.points, [](const CriticalPoint& c) { return c.provenance.source != "continuation"; });
                    return out;
                }
            }
        }
    }
    std::erase_if(out.points, [](const CriticalPoint& c) { return c.provenance.source != "continuation"; });
    return out;
}

void analyse_critical_point(const ProblemSpec& p, CriticalPoint& cp, int spectrum_size, const MorseConfig& morse,
                            double concentration_radius) {
    if (spectrum_size > 0) cp.spectrum = morse_index(p, cp.field, spectrum_size, morse);
    if (concentration_radius > 0.0) {
        cp.concentration = detect_concentration(p.grid(), scaled_log_density(p, cp.field), concentration_radius);
    }
}

MinimaxPipelineResult run_minimax_pipeline(const ProblemSpec& p, const MinimaxPipelineConfig& config) {
    MinimaxPipelineResult out;
    const PathFamily family = build_path_family(p, config.family);
    out.minimax = estimate_minimax(p, family, config.deformation);
    out.critical = saddle_refine(p, out.minimax.argmax_field, config.newton);
    out.critical.provenance.source = "minimax";
    analyse_critical_point(p, out.critical, config.spectrum_size, config.morse, config.concentration_radius);
    return out;
}

}  // namespace mfe
