#include "mfe/diagnostics.h"

#include "mfe/errors.h"
#include "mfe/field_io.h"
#include "mfe/hessian_solver.h"
#include "mfe/minimax.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace mfe {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double eight_pi = 8.0 * pi;

double wrap(double d, double period) { return d - period * std::round(d / period); }

double node_distance(const GridSpec& grid, Point a, Point b) {
    if (grid.kind() == DomainKind::torus) {
        const auto& t = grid.torus();
        return std::hypot(wrap(a.x - b.x, t.l_x()), wrap(a.y - b.y, t.l_y()));
    }
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Low-mode random field: Dirichlet sines times Fourier modes (annulus), Fourier modes (torus).
Field random_smooth(const GridPtr& grid, std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    Field f = Field::zeros(grid);
    if (grid->kind() == DomainKind::annulus) {
        const auto& g = grid->annulus();
        for (int a = 1; a <= 3; ++a) {
            for (int m = 0; m <= 3; ++m) {
                const double cc = coef(rng) * amplitude / (a * (m + 1));
                const double cs = coef(rng) * amplitude / (a * (m + 1));
                for (int i = 1; i + 1 < g.n_r(); ++i) {
                    const double s = std::sin(a * pi * (g.radius(i) - g.r_inner()) / (g.r_outer() - g.r_inner()));
                    for (int j = 0; j < g.n_theta(); ++j) {
                        const double t = g.angle(j);
                        f.values[static_cast<Eigen::Index>(g.index(i, j))] +=
                            s * (cc * std::cos(m * t) + cs * std::sin(m * t));
                    }
                }
            }
        }
        return f;
    }
    const auto& g = grid->torus();
    for (int mx = 0; mx <= 2; ++mx) {
        for (int my = 0; my <= 2; ++my) {
            const double a = coef(rng) * amplitude / (1 + mx + my);
            const double b = coef(rng) * amplitude / (1 + mx + my);
            for (std::size_t k = 0; k < g.size(); ++k) {
                const Point x = g.node(k);
                const double ph = 2 * pi * (mx * x.x / g.l_x() + my * x.y / g.l_y());
                f.values[static_cast<Eigen::Index>(k)] += a * std::cos(ph) + b * std::sin(ph);
            }
        }
    }
    return f;
}

Point sweep_bubble_center(const GridSpec& grid) {
    if (grid.kind() == DomainKind::annulus) {
        const auto& a = grid.annulus();
        return {0.5 * (a.r_inner() + a.r_outer()), 0.0};
    }
    const auto& t = grid.torus();
    return {0.5 * t.l_x(), 0.5 * t.l_y()};
}

std::vector<std::size_t> neighbors(const GridSpec& grid, std::size_t k) {
    std::vector<std::size_t> out;
    if (grid.kind() == DomainKind::annulus) {
        const auto& a = grid.annulus();
        const int i = static_cast<int>(k / a.n_theta());
        const int j = static_cast<int>(k % a.n_theta());
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if ((di == 0 && dj == 0) || i + di < 0 || i + di >= a.n_r()) continue;
                out.push_back(a.index(i + di, (j + dj + a.n_theta()) % a.n_theta()));
            }
        }
        return out;
    }
    const auto& t = grid.torus();
    const int i = static_cast<int>(k / t.n_y());
    const int j = static_cast<int>(k % t.n_y());
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            out.push_back(t.index((i + di + t.n_x()) % t.n_x(), (j + dj + t.n_y()) % t.n_y()));
        }
    }
    return out;
}

double cell_size(const GridSpec& grid) {
    if (grid.kind() == DomainKind::annulus) {
        const auto& a = grid.annulus();
        return std::max(a.h_r(), 0.5 * (a.r_inner() + a.r_outer()) * a.h_theta());
    }
    const auto& t = grid.torus();
    return std::max(t.l_x() / t.n_x(), t.l_y() / t.n_y());
}

}  // namespace

// ---------------------------------------------------------------------------
// Moser-Trudinger

double mt_functional(const GridSpec& grid, const Field& u, double coefficient) {
    return dirichlet_energy(grid, u) - coefficient * log_integral_exp(grid, u) + coefficient * std::log(grid.area());
}

MTReport moser_trudinger_check(const GridPtr& grid, const MTConfig& config) {
    const double a = config.coefficient > 0.0 ? config.coefficient : eight_pi;
    MTReport rep;
    rep.floor = config.floor;
    rep.min_value = std::numeric_limits<double>::infinity();
    auto add = [&](std::string descriptor, const Field& u) {
        const double v = mt_functional(*grid, u, a);
        if (v < rep.min_value) {
            rep.min_value = v;
            rep.argmin = descriptor;
        }
        rep.values.push_back({std::move(descriptor), v});
    };
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> amp(0.5, 4.0);
    std::vector<Field> randoms;
    if (config.random_fields || config.scaled) {
        const int count = std::max(config.random_count, 1);
        for (int k = 0; k < count; ++k) randoms.push_back(random_smooth(grid, rng, amp(rng)));
    }
    if (config.random_fields) {
        for (std::size_t k = 0; k < randoms.size(); ++k) add("random " + std::to_string(k), randoms[k]);
    }
    if (config.bubbles) {
        const double support = default_support(*grid);
        for (const double lam : config.lambdas) {
            add("bubble lambda=" + format_double(lam),
                make_bubble(grid, {sweep_bubble_center(*grid), lam, 1.0, support}));
        }
    }
    if (config.scaled) {
        for (const double t : config.scales) add("scaled t=" + format_double(t), t * randoms.front());
    }
    rep.samples = rep.values.size();
    if (rep.samples == 0) throw ConfigError("moser_trudinger_check: no generators selected");
    rep.violation = rep.min_value < config.floor;
    return rep;
}

bool Region::contains(Point x) const {
    if (shape == Shape::disc) return std::hypot(x.x - center.x, x.y - center.y) <= radius;
    const double two_pi = 2.0 * pi;
    auto norm = [two_pi](double t) {
        t = std::fmod(t, two_pi);
        return t < 0.0 ? t + two_pi : t;
    };
    const double t = norm(std::atan2(x.y, x.x) - angle_begin);
    const double span = norm(angle_end - angle_begin);
    return t <= span;
}

std::optional<double> EmpiricalConstantLedger::max() const {
    if (deficits.empty()) return std::nullopt;
    return *std::max_element(deficits.begin(), deficits.end());
}

ImprovedMTReport improved_mt_check(const GridSpec& grid, const Field& u, const Region& s1, const Region& s2,
                                   double gamma0, double eps, EmpiricalConstantLedger* ledger) {
    require_conforming(grid, u);
    if (!(gamma0 > 0.0 && gamma0 < 0.5)) throw ConfigError("gamma0 must lie in (0, 1/2)");
    if (!(eps > 0.0 && eps < 32.0 * pi)) throw ConfigError("eps must lie in (0, 32 pi)");
    std::vector<std::size_t> n1;
    std::vector<std::size_t> n2;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point x = grid.node(k);
        const bool in1 = s1.contains(x);
        const bool in2 = s2.contains(x);
        if (in1 && in2) throw ConfigError("regions S1 and S2 overlap");
        if (in1) n1.push_back(k);
        if (in2) n2.push_back(k);
    }
    if (n1.empty() || n2.empty()) throw ConfigError("region contains no grid nodes");

    // closest pair: sort S2 by x and prune on |dx|
    std::vector<Point> p2;
    for (auto k : n2) p2.push_back(grid.node(k));
    std::sort(p2.begin(), p2.end(), [](Point a, Point b) { return a.x < b.x; });
    double sep = std::numeric_limits<double>::infinity();
    for (auto k : n1) {
        const Point a = grid.node(k);
        auto it = std::lower_bound(p2.begin(), p2.end(), a.x, [](Point b, double x) { return b.x < x; });
        for (auto jt = it; jt != p2.end() && jt->x - a.x < sep; ++jt) sep = std::min(sep, node_distance(grid, a, *jt));
        for (auto jt = it; jt != p2.begin();) {
            --jt;
            if (a.x - jt->x >= sep) break;
            sep = std::min(sep, node_distance(grid, a, *jt));
        }
    }
    if (!(sep > 0.0)) throw ConfigError("regions S1 and S2 must have positive distance");

    const auto& w = grid.weights();
    const double m = u.values.maxCoeff();
    double total = 0.0;
    double part1 = 0.0;
    double part2 = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) total += w[static_cast<Eigen::Index>(k)] * std::exp(u[k] - m);
    for (auto k : n1) part1 += w[static_cast<Eigen::Index>(k)] * std::exp(u[k] - m);
    for (auto k : n2) part2 += w[static_cast<Eigen::Index>(k)] * std::exp(u[k] - m);

    ImprovedMTReport rep;
    rep.fraction_1 = part1 / total;
    rep.fraction_2 = part2 / total;
    rep.separation = sep;
    rep.hypothesis_holds = rep.fraction_1 >= gamma0 && rep.fraction_2 >= gamma0;
    if (rep.hypothesis_holds) {
        rep.deficit = log_integral_exp(grid, u) - 2.0 * dirichlet_energy(grid, u) / (32.0 * pi - eps);
        if (ledger) ledger->deficits.push_back(*rep.deficit);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Concentration

Field scaled_log_density(const ProblemSpec& p, const Field& u) {
    const Density d = density(p, u);
    Field v = u;
    v.values.array() += p.log_weight().array() + std::log(p.parameter()) - d.log_mass;
    return v;
}

ConcentrationReport detect_concentration(const GridSpec& grid, const Field& v, double radius,
                                         const ConcentrationConfig& config) {
    require_conforming(grid, v);
    if (!v.values.allFinite()) throw NumericError("detect_concentration: non-finite field");
    if (!(radius >= 2.0 * cell_size(grid) * (1.0 - 1e-12))) {
        throw ConfigError("concentration radius must be at least 2 grid cells (" + format_double(2.0 * cell_size(grid)) +
                          ")");
    }
    if (v.values.maxCoeff() > 700.0) throw NumericError("detect_concentration: density overflows");
    const Eigen::VectorXd dens = v.values.array().exp().matrix();
    const auto& w = grid.weights();
    ConcentrationReport rep;
    rep.radius = radius;
    rep.total_mass = w.dot(dens);
    const double dmax = dens.maxCoeff();

    // round-off ripple on a flat density is not a peak
    const double vmax = v.values.maxCoeff();
    const bool flat = vmax - v.values.minCoeff() <= 1e-8 * (1.0 + std::abs(vmax));
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < grid.size() && !flat; ++k) {
        const double vk = v[k];
        if (dens[static_cast<Eigen::Index>(k)] < config.threshold * dmax) continue;
        bool is_max = true;
        bool strict = false;
        for (auto n : neighbors(grid, k)) {
            if (v[n] > vk) {
                is_max = false;
                break;
            }
            if (v[n] < vk) strict = true;
        }
        if (is_max && strict) candidates.push_back(k);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return dens[static_cast<Eigen::Index>(a)] > dens[static_cast<Eigen::Index>(b)]; });

    for (auto k : candidates) {
        const Point x = grid.node(k);
        bool merged = false;
        for (const auto& pk : rep.peaks) {
            if (node_distance(grid, x, pk.location) < 2.0 * radius) {
                merged = true;
                break;
            }
        }
        if (merged) continue;
        Peak pk;
        pk.location = x;
        pk.node = k;
        pk.density = dens[static_cast<Eigen::Index>(k)];
        for (std::size_t m = 0; m < grid.size(); ++m) {
            if (node_distance(grid, x, grid.node(m)) <= radius) {
                pk.mass += w[static_cast<Eigen::Index>(m)] * dens[static_cast<Eigen::Index>(m)];
            }
        }
        pk.ratio_8pi = pk.mass / eight_pi;
        pk.integer_deviation = std::abs(pk.ratio_8pi - std::round(pk.ratio_8pi));
        pk.effective_lambda = std::sqrt(std::max(0.0, pk.density * pi * radius * radius / pk.mass - 1.0)) / radius;
        pk.blow_up_scale = pk.effective_lambda * radius >= config.blow_up_ratio;
        if (grid.kind() == DomainKind::annulus) {
            const auto& a = grid.annulus();
            const double r = std::hypot(x.x, x.y);
            pk.near_boundary = std::min(r - a.r_inner(), a.r_outer() - r) < 2.0 * radius;
        }
        rep.peaks.push_back(pk);
    }
    return rep;
}

void write_peaks_csv(std::ostream& out, const ConcentrationReport& r) {
    out << "peak_x,peak_y,mass,ratio_8pi\n";
    for (const auto& p : r.peaks) {
        out << format_double(p.location.x) << ',' << format_double(p.location.y) << ',' << format_double(p.mass) << ','
            << format_double(p.ratio_8pi) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Spectrum

namespace {

// The eigenproblem lives on the interior unknowns (annulus) or on mean-zero fields (torus),
// with the quadrature inner product.
struct Subspace {
    const ProblemSpec& p;
    bool annulus;
    Eigen::VectorXd w;

    explicit Subspace(const ProblemSpec& prob)
        : p(prob), annulus(prob.kind() == DomainKind::annulus) {
        w = annulus ? prob.grid().annulus().interior_weights() : prob.grid().weights();
    }
    Eigen::Index dim() const { return w.size(); }
    Field to_field(const Eigen::VectorXd& x) const {
        if (annulus) return Field(p.grid_ptr(), p.grid().annulus().extend_interior(x));
        return Field(p.grid_ptr(), x);
    }
    Eigen::VectorXd from_field(const Field& f) const {
        if (annulus) return p.grid().annulus().restrict_interior(f.values);
        return f.values;
    }
    void project(Eigen::VectorXd& x) const {
        if (!annulus) x.array() -= w.dot(x) / w.sum();
    }
    double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return (w.array() * a.array() * b.array()).sum(); }
};

// W-orthonormalizes the columns in place (two passes of modified Gram-Schmidt); columns
// that collapse are replaced by fresh random vectors.
void orthonormalize(const Subspace& sp, Eigen::MatrixXd& x, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (int attempt = 0; attempt < 5; ++attempt) {
            Eigen::VectorXd v = x.col(c);
            sp.project(v);
            const double before = std::sqrt(sp.dot(v, v));
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index d = 0; d < c; ++d) {
                    const Eigen::VectorXd q = x.col(d);
                    v -= sp.dot(q, v) * q;
                }
            }
            const double after = std::sqrt(sp.dot(v, v));
            if (after > 1e-10 * before && after > 0.0) {
                x.col(c) = v / after;
                break;
            }
            for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = n01(rng);
        }
    }
}

}  // namespace

SpectrumReport morse_index(const ProblemSpec& p, const Field& u, int k, const MorseConfig& config) {
    require_conforming(p.grid(), u);
    if (k < 1) throw ConfigError("morse_index: k must be at least 1");
    const Subspace sp(p);
    const Eigen::Index n = sp.dim() - (sp.annulus ? 0 : 1);
    if (k > n) throw ConfigError("morse_index: k exceeds the subspace dimension");
    const Eigen::Index b = std::min<Eigen::Index>(k + 4, n);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd x(sp.dim(), b);
    for (auto& v : x.reshaped()) v = n01(rng);
    orthonormalize(sp, x, rng);

    auto apply_h = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd y = sp.from_field(second_variation_apply(p, u, sp.to_field(v)));
        sp.project(y);
        return y;
    };

    const Density dens = density(p, u);
    double shift = -p.parameter() * dens.q.maxCoeff() - 1.0;
    bool reshifted = false;
    auto solver = std::make_unique<HessianSolver>(p, u, shift);

    SpectrumReport rep;
    Eigen::VectorXd theta;
    Eigen::MatrixXd hx(sp.dim(), b);
    std::vector<double> res(static_cast<std::size_t>(b));
    for (int it = 1; it <= config.max_iterations; ++it) {
        for (Eigen::Index c = 0; c < b; ++c) {
            Eigen::VectorXd y = sp.from_field(solver->solve(sp.to_field(x.col(c))));
            sp.project(y);
            x.col(c) = y;
        }
        orthonormalize(sp, x, rng);
        for (Eigen::Index c = 0; c < b; ++c) hx.col(c) = apply_h(x.col(c));
        const Eigen::MatrixXd t = x.transpose() * sp.w.asDiagonal() * hx;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t + t.transpose()));
        theta = es.eigenvalues();
        x = x * es.eigenvectors();
        hx = hx * es.eigenvectors();
        double scale = 0.0;
        for (int i = 0; i < k; ++i) scale = std::max(scale, std::abs(theta[i]));
        scale = std::max(scale, 1e-12);
        const double tol_abs = config.tol_eig * scale;
        double worst = 0.0;
        for (Eigen::Index c = 0; c < b; ++c) {
            const Eigen::VectorXd r = hx.col(c) - theta[c] * x.col(c);
            res[static_cast<std::size_t>(c)] = std::sqrt(sp.dot(r, r));
            if (c < k) worst = std::max(worst, res[static_cast<std::size_t>(c)]);
        }
        rep.iterations = it;
        if (worst <= tol_abs) {
            rep.converged = true;
            rep.tol_eig = tol_abs;
            break;
        }
        // Move the shift close below the wanted eigenvalues once they are roughly located.
        if (!reshifted && worst <= 1e-2 * scale) {
            const double spread = theta[b - 1] - theta[0];
            const double candidate = theta[0] - std::max(1.0, 0.25 * spread);
            bool safe = true;
            if (sp.annulus) {
                const HessianSolver probe(p, u, candidate);
                safe = probe.negative_count().value_or(1) == 0;
            }
            if (safe && candidate > shift) {
                shift = candidate;
                solver = std::make_unique<HessianSolver>(p, u, shift);
            }
            reshifted = true;
        }
    }
    if (!rep.converged) {
        throw NoConvergence("morse_index: subspace iteration did not converge",
                            std::vector<double>(res.begin(), res.begin() + k));
    }
    for (int i = 0; i < k; ++i) {
        rep.eigenvalues.push_back(theta[i]);
        rep.residuals.push_back(res[static_cast<std::size_t>(i)]);
        rep.eigenfields.push_back(sp.to_field(x.col(i)));
        if (theta[i] < -rep.tol_eig) ++rep.morse_index;
    }
    if (sp.annulus) rep.inertia_index = HessianSolver(p, u, -rep.tol_eig).negative_count();
    return rep;
}

// ---------------------------------------------------------------------------
// Palais-Smale

PalaisSmaleReport palais_smale_monitor(const std::vector<TracePoint>& trace, double cap) {
    PalaisSmaleReport rep;
    if (trace.empty()) {
        rep.note = "empty trace";
        return rep;
    }
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace[k].dirichlet_integral > rep.max_dirichlet || k == 0) {
            rep.max_dirichlet = trace[k].dirichlet_integral;
            rep.argmax = k;
        }
    }
    rep.pass = rep.max_dirichlet <= cap;
    if (!rep.pass) rep.note = "Dirichlet integral exceeded the cap at entry " + std::to_string(rep.argmax);
    const std::size_t third = trace.size() / 3;
    if (third >= 1) {
        double g_first = 0.0;
        double d_first = 0.0;
        double g_last = std::numeric_limits<double>::infinity();
        double d_last = 0.0;
        for (std::size_t k = 0; k < third; ++k) {
            g_first = std::max(g_first, trace[k].gradient_norm);
            d_first = std::max(d_first, trace[k].dirichlet_integral);
        }
        for (std::size_t k = trace.size() - third; k < trace.size(); ++k) {
            g_last = std::min(g_last, trace[k].gradient_norm);
            d_last = std::max(d_last, trace[k].dirichlet_integral);
        }
        if (g_first > 0.0 && g_last >= 0.5 * g_first && d_last >= 2.0 * d_first && d_first > 0.0) {
            rep.compactness_warning = true;
            if (rep.note.empty()) rep.note = "gradient norm stalls while the Dirichlet integral grows";
        }
    }
    return rep;
}

}  // namespace mfe
