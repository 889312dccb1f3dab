#include "mfe/cli.h"

#include "CLI11.hpp"
#include "mfe/diagnostics.h"
#include "mfe/errors.h"
#include "mfe/field_io.h"
#include "mfe/minimax.h"
#include "mfe/radial.h"
#include "mfe/report.h"
#include "mfe/torus.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

namespace mfe {

namespace fs = std::filesystem;

double parse_pi_number(const std::string& text) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    double factor = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        s.resize(s.size() - 2);
        if (!s.empty() && s.back() == '*') s.pop_back();
        if (s.empty() || s == "+") return factor;
        if (s == "-") return -factor;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + text + "'");
    return v * factor;
}

namespace {

struct RunConfig {
    std::string domain = "annulus";
    double r_inner = 1.0;
    double r_outer = 2.0;
    int nr = 64;
    int ntheta = 128;
    double lx = 1.0;
    double ly = 1.0;
    int nx = 64;
    int ny = 64;
    std::string stencil = "spectral";
    std::optional<double> rho;
    std::optional<double> c;
    std::string weight;
    std::string out = ".";
    std::uint64_t seed = 1;
    int threads = 0;

    double tol = 1e-9;
    int max_newton = 40;
    int k = 6;
    double tol_eig = 1e-6;
    double radius = 0.2;
    double dirichlet_cap = 1e4;

    int n_radial = 16;
    int n_angular = 8;
    double lambda_max = 1e3;
    std::optional<double> j_low;
    std::optional<double> max_jump;
    std::optional<double> support;
    std::string axis = "x";
    double window = 0.10;
    double tol_stag = 1e-7;
    int max_sweeps = 600;

    std::string start = "zero";
    bool minimize = false;
    int n = 2000;

    std::optional<double> from;
    std::optional<double> to;
    int steps = 8;

    double coefficient = 8 * std::numbers::pi;
    std::vector<std::string> sweep{"all"};
    double floor = -1e3;
    int count = 8;

    std::string field;
};

// Numbers that accept the pi suffix are rewritten to plain decimals before conversion.
const CLI::Validator pi_number(
    [](std::string& s) {
        try {
            s = format_double(parse_pi_number(s));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "NUMBER[pi]", "pi_number");

void validate(const RunConfig& cfg) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("--") + name + " must be positive");
    };
    positive(cfg.tol, "tol");
    positive(cfg.tol_eig, "tol-eig");
    positive(cfg.tol_stag, "tol-stag");
    positive(cfg.radius, "radius");
    positive(cfg.window, "window");
    positive(cfg.dirichlet_cap, "dirichlet-cap");
    if (cfg.max_newton < 1 || cfg.max_sweeps < 1) throw ConfigError("iteration budgets must be at least 1");
    if (cfg.k < 0) throw ConfigError("--k must be non-negative");
    auto resolution = [](int v, int lo, const char* name) {
        if (v < lo || v > 8192) {
            throw ConfigError(std::string("--") + name + " must lie in [" + std::to_string(lo) + ", 8192]");
        }
    };
    if (cfg.domain == "annulus") {
        resolution(cfg.nr, 4, "nr");
        resolution(cfg.ntheta, 8, "ntheta");
    } else {
        resolution(cfg.nx, 4, "nx");
        resolution(cfg.ny, 4, "ny");
    }
}

GridPtr make_grid(const RunConfig& cfg) {
    if (cfg.domain == "annulus") return build_annulus_grid(cfg.r_inner, cfg.r_outer, cfg.nr, cfg.ntheta);
    const auto stencil = cfg.stencil == "five-point" ? TorusStencil::five_point : TorusStencil::spectral;
    return build_torus_grid(cfg.lx, cfg.ly, cfg.nx, cfg.ny, stencil);
}

ProblemSpec make_problem(const RunConfig& cfg, const GridPtr& grid) {
    if (grid->kind() == DomainKind::annulus) {
        if (!cfg.rho) throw ConfigError("--rho is required on the annulus");
        return ProblemSpec::annulus(grid, *cfg.rho);
    }
    if (!cfg.c) throw ConfigError("--c is required on the torus");
    if (cfg.weight.empty()) return ProblemSpec::torus(grid, *cfg.c);
    return ProblemSpec::torus(grid, *cfg.c, load_field(cfg.weight, grid));
}

MinimaxPipelineConfig pipeline_config(const RunConfig& cfg) {
    MinimaxPipelineConfig pc;
    pc.family.n_radial = cfg.n_radial;
    pc.family.n_angular = cfg.n_angular;
    pc.family.lambda_max = cfg.lambda_max;
    pc.family.j_low = cfg.j_low;
    pc.family.max_jump = cfg.max_jump;
    pc.family.support = cfg.support;
    if (cfg.axis != "x" && cfg.axis != "y") throw ConfigError("--axis must be x or y");
    pc.family.torus_axis = cfg.axis == "x" ? TorusAxis::x : TorusAxis::y;
    pc.deformation.window_fraction = cfg.window;
    pc.deformation.tol_stag = cfg.tol_stag;
    pc.deformation.max_sweeps = cfg.max_sweeps;
    pc.deformation.threads = cfg.threads;
    pc.newton.tol = cfg.tol;
    pc.newton.max_iterations = cfg.max_newton;
    pc.spectrum_size = cfg.k;
    pc.morse.tol_eig = cfg.tol_eig;
    pc.morse.seed = cfg.seed;
    pc.concentration_radius = cfg.radius;
    return pc;
}

class Outputs {
public:
    Outputs(fs::path dir, Report& report) : dir_(std::move(dir)), report_(report) { fs::create_directories(dir_); }

    template <class Fn>
    void csv(const std::string& key, const std::string& name, Fn&& write) {
        std::ofstream f(dir_ / name);
        if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
        write(f);
        files_.emplace_back(key, name);
    }
    void field(const std::string& key, const std::string& name, const Field& u) {
        save_field(u, dir_ / name);
        files_.emplace_back(key, name);
    }
    void finish() {
        report_.section("outputs");
        for (const auto& [k, v] : files_) report_.add(k, v);
        files_.clear();
    }
    fs::path report_path() const { return dir_ / "report.txt"; }

private:
    fs::path dir_;
    Report& report_;
    std::vector<std::pair<std::string, std::string>> files_;
};

void write_spectrum_csv(std::ostream& out, const SpectrumReport& s) {
    out << "index,eigenvalue,residual\n";
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        out << i << ',' << format_double(s.eigenvalues[i]) << ',' << format_double(s.residuals[i]) << '\n';
    }
}

void report_spectrum(Report& rep, Outputs& outs, const SpectrumReport& s) {
    rep.section("spectrum");
    rep.add("morse_index", s.morse_index);
    if (s.inertia_index) rep.add("inertia_index", *s.inertia_index);
    rep.add("tol_eig", s.tol_eig);
    rep.add("iterations", s.iterations);
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) rep.add("eigenvalue_" + std::to_string(i), s.eigenvalues[i]);
    outs.csv("spectrum_csv", "spectrum.csv", [&](std::ostream& f) { write_spectrum_csv(f, s); });
}

void report_concentration(Report& rep, Outputs& outs, const ConcentrationReport& c) {
    rep.section("concentration");
    rep.add("radius", c.radius);
    rep.add("total_mass", c.total_mass);
    rep.add("peaks", c.peaks.size());
    for (std::size_t i = 0; i < c.peaks.size(); ++i) {
        const auto& p = c.peaks[i];
        const std::string k = "peak_" + std::to_string(i) + "_";
        rep.add(k + "x", p.location.x);
        rep.add(k + "y", p.location.y);
        rep.add(k + "mass", p.mass);
        rep.add(k + "ratio_8pi", p.ratio_8pi);
        rep.add(k + "integer_deviation", p.integer_deviation);
        rep.add(k + "effective_lambda", p.effective_lambda);
        rep.add(k + "blow_up_scale", p.blow_up_scale);
        rep.add(k + "near_boundary", p.near_boundary);
    }
    outs.csv("peaks_csv", "peaks.csv", [&](std::ostream& f) { write_peaks_csv(f, c); });
}

void report_critical(Report& rep, Outputs& outs, const ProblemSpec& p, const CriticalPoint& cp) {
    rep.section("critical_point");
    rep.add("source", cp.provenance.source);
    rep.add("parameter", cp.parameter);
    rep.add("energy", cp.energy.total);
    rep.add("dirichlet", cp.energy.dirichlet);
    rep.add("log_mass", cp.energy.log_mass);
    if (p.kind() == DomainKind::torus) rep.add("linear", cp.energy.linear);
    rep.add("residual_max", cp.residual_max);
    rep.add("residual_dual", cp.residual_dual);
    rep.add("residual_verified", verify_residual(p, cp.field));
    rep.add("newton_iterations", cp.newton_iterations);
    rep.add("max_u", cp.field.values.maxCoeff());
    outs.field("field_csv", "field.csv", cp.field);
    if (cp.spectrum) report_spectrum(rep, outs, *cp.spectrum);
    if (cp.concentration) report_concentration(rep, outs, *cp.concentration);
}

Field start_field(const RunConfig& cfg, const ProblemSpec& p) {
    if (cfg.start == "zero") return Field::zeros(p.grid_ptr());
    if (cfg.start == "radial") {
        if (p.kind() != DomainKind::annulus) throw ConfigError("--start radial needs the annulus");
        return evaluate_on_grid(solve_radial(cfg.r_inner, cfg.r_outer, p.parameter(), cfg.n), p.grid_ptr());
    }
    return load_field(cfg.start, p.grid_ptr());
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_solve(const RunConfig& cfg, Report& rep, Outputs& outs) {
    const auto p = make_problem(cfg, make_grid(cfg));
    const Field start = start_field(cfg, p);
    CriticalPoint cp;
    if (cfg.minimize) {
        MinimizeConfig mc;
        mc.tol = cfg.tol;
        cp = minimize(p, start, mc);
    } else {
        NewtonConfig nc;
        nc.tol = cfg.tol;
        nc.max_iterations = cfg.max_newton;
        cp = saddle_refine(p, start, nc);
    }
    cp.provenance.seed = cfg.seed;
    MorseConfig mc;
    mc.tol_eig = cfg.tol_eig;
    mc.seed = cfg.seed;
    analyse_critical_point(p, cp, cfg.k, mc, cfg.radius);
    report_critical(rep, outs, p, cp);
    if (p.kind() == DomainKind::torus) {
        rep.section("torus");
        rep.add("c", p.parameter());
        rep.add("osc", oscillation(cp.field));
        const PhaseCenter ph = phase_center(p, cp.field);
        rep.add("phase_x", ph.phi_x);
        rep.add("phase_y", ph.phi_y);
    }
}

void cmd_radial(const RunConfig& cfg, Report& rep, Outputs& outs) {
    if (cfg.domain != "annulus") throw ConfigError("radial needs the annulus");
    if (!cfg.rho) throw ConfigError("--rho is required");
    const RadialProfile prof = solve_radial(cfg.r_inner, cfg.r_outer, *cfg.rho, cfg.n);
    rep.section("radial");
    rep.add("rho", prof.rho);
    rep.add("sigma", prof.sigma);
    rep.add("slope", prof.slope);
    rep.add("energy", prof.energy());
    rep.add("dirichlet", prof.dirichlet);
    rep.add("mass", prof.mass);
    rep.add("max_u", *std::max_element(prof.u.begin(), prof.u.end()));
    rep.add("boundary_residual", prof.boundary_residual);
    rep.add("ode_residual", radial_ode_residual(prof));
    rep.add("newton_iterations", prof.newton_iterations);
    outs.csv("profile_csv", "profile.csv", [&](std::ostream& f) { write_profile_csv(f, prof); });
}

void report_minimax(Report& rep, Outputs& outs, const MinimaxResult& mm, double cap) {
    rep.section("minimax");
    const auto& f = mm.family;
    rep.add("lambda_ring", f.lambda_ring);
    rep.add("j_low", f.j_low);
    rep.add("max_jump", f.max_jump);
    rep.add("samples", f.samples.size());
    rep.add("alpha", mm.alpha);
    rep.add("converged", mm.converged);
    rep.add("sweeps", mm.trace.size());
    rep.add("argmax", mm.argmax);
    rep.add("argmax_s", mm.argmax_s);
    rep.add("argmax_angle", mm.argmax_angle);
    rep.add("min_decrease", mm.min_decrease);
    bool winding = true;
    std::vector<TracePoint> tp;
    for (const auto& r : mm.trace) {
        winding = winding && r.winding == 1;
        tp.push_back({r.dirichlet_bound, r.max_grad_norm, r.max_energy});
    }
    rep.add("winding_one_every_sweep", winding);
    rep.add("dirichlet_bound", mm.trace.empty() ? 0.0 : mm.trace.back().dirichlet_bound);
    const PalaisSmaleReport ps = palais_smale_monitor(tp, cap);
    rep.add("palais_smale_pass", ps.pass);
    rep.add("palais_smale_warning", ps.compactness_warning);
    outs.csv("trace_csv", "trace.csv", [&](std::ostream& o) { write_trace_csv(o, mm.trace); });
}

void cmd_minimax(const RunConfig& cfg, Report& rep, Outputs& outs) {
    const auto p = make_problem(cfg, make_grid(cfg));
    const MinimaxPipelineConfig pc = pipeline_config(cfg);
    const PathFamily fam = build_path_family(p, pc.family);
    const MinimaxResult mm = estimate_minimax(p, fam, pc.deformation);
    report_minimax(rep, outs, mm, cfg.dirichlet_cap);
    outs.field("argmax_csv", "argmax.csv", mm.argmax_field);
    CriticalPoint cp = saddle_refine(p, mm.argmax_field, pc.newton);
    cp.provenance = {"minimax", -1, cfg.seed};
    analyse_critical_point(p, cp, pc.spectrum_size, pc.morse, pc.concentration_radius);
    report_critical(rep, outs, p, cp);
    if (p.kind() == DomainKind::annulus) {
        // the radial branch is recorded next to the minimax point, without identifying them
        const RadialProfile prof = solve_radial(cfg.r_inner, cfg.r_outer, p.parameter(), cfg.n);
        rep.section("radial_comparison");
        rep.add("radial_energy", prof.energy());
        rep.add("minimax_energy", cp.energy.total);
    }
}

void cmd_torus(const RunConfig& cfg, Report& rep, Outputs& outs) {
    if (cfg.domain != "torus") throw ConfigError("torus needs --domain torus");
    const auto p = make_problem(cfg, make_grid(cfg));
    TorusConfig tc;
    tc.pipeline = pipeline_config(cfg);
    tc.minimize.tol = cfg.tol;
    tc.seed = cfg.seed;
    const TorusSolution s = solve_torus(p, tc);
    if (s.minimax) report_minimax(rep, outs, *s.minimax, cfg.dirichlet_cap);
    report_critical(rep, outs, p, s.critical);
    rep.section("torus");
    rep.add("c", p.parameter());
    rep.add("supercritical", s.supercritical);
    rep.add("osc", s.osc);
    rep.add("phase_x", s.phase.phi_x);
    rep.add("phase_y", s.phase.phi_y);
    rep.add("phase_m_x", s.phase.m_x);
    rep.add("phase_m_y", s.phase.m_y);
    rep.add("phase_defined_x", s.phase.defined_x);
    rep.add("phase_defined_y", s.phase.defined_y);
    rep.add("normalization_error", s.normalization_error);
    rep.add("normalized_residual", s.normalized_residual);
}

void cmd_sweep(const RunConfig& cfg, Report& rep, Outputs& outs) {
    const GridPtr grid = make_grid(cfg);
    const std::string pname = grid->kind() == DomainKind::annulus ? "rho" : "c";
    if (!cfg.from || !cfg.to) throw ConfigError("--from and --to are required");
    RunConfig at_start = cfg;
    (grid->kind() == DomainKind::annulus ? at_start.rho : at_start.c) = *cfg.from;
    const auto p = make_problem(at_start, grid);
    Field start;
    if (cfg.start == "minimax") {
        const auto pc = pipeline_config(cfg);
        start = estimate_minimax(p, build_path_family(p, pc.family), pc.deformation).argmax_field;
    } else {
        start = start_field(at_start, p);
    }
    ContinuationConfig cc;
    cc.newton.tol = cfg.tol;
    cc.newton.max_iterations = cfg.max_newton;
    cc.dirichlet_cap = cfg.dirichlet_cap;
    const ContinuationResult br = continuation_in_rho(p, start, *cfg.from, *cfg.to, cfg.steps, cc);

    rep.section("sweep");
    rep.add("parameter_name", pname);
    rep.add("points", br.points.size());
    rep.add("complete", br.complete);
    if (!br.message.empty()) rep.add("message", br.message);
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<TracePoint> tp;
    for (std::size_t k = 0; k < br.points.size(); ++k) {
        const auto& q = br.points[k];
        tp.push_back({2.0 * q.energy.dirichlet, q.residual_dual, q.energy.total});
        if (k > 0) {
            const double a = br.points[k - 1].energy.total / br.points[k - 1].parameter;
            const double b = q.energy.total / q.parameter;
            worst = std::max(worst, (b - a) / std::abs(a));
        }
    }
    if (br.points.size() > 1) rep.add("max_relative_ratio_increase", worst);
    const PalaisSmaleReport ps = palais_smale_monitor(tp, cfg.dirichlet_cap);
    rep.add("palais_smale_pass", ps.pass);
    rep.add("max_dirichlet_integral", ps.max_dirichlet);
    outs.csv("branch_csv", "branch.csv", [&](std::ostream& o) {
        o << "step," << pname << ",energy,energy_over_" << pname << ",dirichlet_integral,residual_dual\n";
        for (const auto& q : br.points) {
            o << q.provenance.continuation_step << ',' << format_double(q.parameter) << ',' << format_double(q.energy.total)
              << ',' << format_double(q.energy.total / q.parameter) << ',' << format_double(2.0 * q.energy.dirichlet)
              << ',' << format_double(q.residual_dual) << '\n';
        }
    });
    if (!br.points.empty()) outs.field("last_field_csv", "field_last.csv", br.points.back().field);
    if (!br.complete) throw NoConvergence("continuation incomplete: " + br.message);
}

void cmd_mt_check(const RunConfig& cfg, Report& rep, Outputs& outs) {
    MTConfig mc;
    mc.coefficient = cfg.coefficient;
    mc.floor = cfg.floor;
    mc.random_count = cfg.count;
    mc.seed = cfg.seed;
    mc.random_fields = mc.bubbles = mc.scaled = false;
    for (const auto& s : cfg.sweep) {
        if (s == "all") {
            mc.random_fields = mc.bubbles = mc.scaled = true;
        } else if (s == "bubbles") {
            mc.bubbles = true;
        } else if (s == "random") {
            mc.random_fields = true;
        } else if (s == "scaled") {
            mc.scaled = true;
        } else {
            throw ConfigError("--sweep must be one of all, bubbles, random, scaled");
        }
    }
    const MTReport r = moser_trudinger_check(make_grid(cfg), mc);
    rep.section("moser_trudinger");
    rep.add("coefficient", cfg.coefficient);
    rep.add("samples", r.samples);
    rep.add("min_value", r.min_value);
    rep.add("argmin", r.argmin);
    rep.add("floor", r.floor);
    rep.add("violation", r.violation);
    outs.csv("values_csv", "mt.csv", [&](std::ostream& o) {
        o << "descriptor,value\n";
        for (const auto& s : r.values) o << s.descriptor << ',' << format_double(s.value) << '\n';
    });
}

void cmd_diagnose(const RunConfig& cfg, Report& rep, Outputs& outs) {
    if (cfg.field.empty()) throw ConfigError("--field is required");
    const Field u = load_field(cfg.field);
    RunConfig local = cfg;
    local.domain = u.grid->kind() == DomainKind::annulus ? "annulus" : "torus";
    const auto p = make_problem(local, u.grid);
    rep.section("field");
    rep.add("grid", u.grid->describe());
    rep.add("residual_max", residual(p, u).values.lpNorm<Eigen::Infinity>());
    rep.add("residual_dual", residual_dual_norm(p, u));
    rep.add("energy", energy(p, u).total);
    if (cfg.k > 0) {
        MorseConfig mc;
        mc.tol_eig = cfg.tol_eig;
        mc.seed = cfg.seed;
        report_spectrum(rep, outs, morse_index(p, u, cfg.k, mc));
    }
    report_concentration(rep, outs, detect_concentration(p.grid(), scaled_log_density(p, u), cfg.radius));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Mean field equation solver: annulus and flat torus", "mfe"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "Flat `key = value` file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    app.add_option("--domain", cfg.domain, "annulus or torus")->check(CLI::IsMember({"annulus", "torus"}));
    app.add_option("--r-inner", cfg.r_inner, "Inner radius");
    app.add_option("--r-outer", cfg.r_outer, "Outer radius");
    app.add_option("--nr", cfg.nr, "Radial nodes including both boundary circles");
    app.add_option("--ntheta", cfg.ntheta, "Angular nodes");
    app.add_option("--lx", cfg.lx, "Torus period in x");
    app.add_option("--ly", cfg.ly, "Torus period in y");
    app.add_option("--nx", cfg.nx, "Torus nodes in x");
    app.add_option("--ny", cfg.ny, "Torus nodes in y");
    app.add_option("--stencil", cfg.stencil, "Torus Laplacian")->check(CLI::IsMember({"spectral", "five-point"}));
    app.add_option("--rho", cfg.rho, "Annulus parameter (accepts the pi suffix)")->transform(pi_number);
    app.add_option("--c", cfg.c, "Torus parameter (accepts the pi suffix)")->transform(pi_number);
    app.add_option("--weight", cfg.weight, "Torus weight K as a field CSV");
    app.add_option("--out", cfg.out, "Output directory");
    app.add_option("--seed", cfg.seed, "Seed for random starts and eigensolver blocks");
    app.add_option("--threads", cfg.threads, "Deformation threads (0 = all cores)");
    app.add_option("--tol", cfg.tol, "Newton tolerance on the residual dual norm");
    app.add_option("--max-newton", cfg.max_newton, "Newton iteration budget");
    app.add_option("--k", cfg.k, "Number of eigenvalues (0 skips the spectrum)");
    app.add_option("--tol-eig", cfg.tol_eig, "Relative eigenvalue threshold");
    app.add_option("--radius", cfg.radius, "Concentration ball radius");
    app.add_option("--dirichlet-cap", cfg.dirichlet_cap, "Cap on the Dirichlet integral along traces");
    app.add_option("--n-radial", cfg.n_radial, "Family radial samples");
    app.add_option("--n-angular", cfg.n_angular, "Family angular samples");
    app.add_option("--lambda-max", cfg.lambda_max, "Largest bubble concentration in the ring sweep");
    app.add_option("--j-low", cfg.j_low, "Ring energy threshold")->transform(pi_number);
    app.add_option("--max-jump", cfg.max_jump, "Continuity bound between neighboring samples");
    app.add_option("--support", cfg.support, "Bubble support radius");
    app.add_option("--axis", cfg.axis, "Torus loop direction (x or y)");
    app.add_option("--window", cfg.window, "Deformation window half-width relative to |alpha|");
    app.add_option("--tol-stag", cfg.tol_stag, "Relative stagnation tolerance");
    app.add_option("--max-sweeps", cfg.max_sweeps, "Deformation sweep budget");
    app.add_option("--start", cfg.start, "zero, radial, minimax (sweep only) or a field CSV path");
    app.add_flag("--minimize", cfg.minimize, "solve: gradient descent before Newton")->default_str("false");
    app.add_option("--n", cfg.n, "Radial oracle nodes");
    app.add_option("--from", cfg.from, "sweep: first parameter")->transform(pi_number);
    app.add_option("--to", cfg.to, "sweep: last parameter")->transform(pi_number);
    app.add_option("--steps", cfg.steps, "sweep: number of steps");
    app.add_option("--coefficient", cfg.coefficient, "mt-check: coefficient a of the functional")
        ->transform(pi_number)
        ->default_str(format_double(cfg.coefficient));
    app.add_option("--sweep", cfg.sweep, "mt-check generators: all, bubbles, random, scaled")->default_str("all");
    app.add_option("--floor", cfg.floor, "mt-check: violation floor");
    app.add_option("--count", cfg.count, "mt-check: random fields");
    app.add_option("--field", cfg.field, "diagnose: field CSV");

    using Handler = void (*)(const RunConfig&, Report&, Outputs&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands{
        {"solve", "Newton (or descent with --minimize) from a start field", cmd_solve},
        {"radial", "Radial oracle profile", cmd_radial},
        {"minimax", "Path family, deformation, Newton refinement and diagnostics", cmd_minimax},
        {"torus", "Flat torus pipeline", cmd_torus},
        {"sweep", "Continuation in the parameter", cmd_sweep},
        {"mt-check", "Moser-Trudinger functional over sampled fields", cmd_mt_check},
        {"diagnose", "Spectrum and concentration of a saved field", cmd_diagnose},
    };
    for (const auto& [name, desc, fn] : commands) app.add_subcommand(name, desc)->fallthrough();

    std::ostringstream cli_out;
    std::ostringstream cli_err;
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, cli_out, cli_err);
        out << cli_out.str();
        err << cli_err.str();
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n' << app.help();
        return 2;
    }

    const auto* sub = app.get_subcommands().front();
    Handler handler = nullptr;
    for (const auto& [name, desc, fn] : commands) {
        if (name == sub->get_name()) handler = fn;
    }

    Report rep("mfe " + sub->get_name() + " report");
    rep.section("config");
    rep.add("subcommand", sub->get_name());
    for (const CLI::Option* o : app.get_options()) {
        if (o->get_lnames().empty() || o->get_name() == "--config" || o->get_name() == "--help") continue;
        std::string v;
        if (o->count() > 0) {
            for (const auto& s : o->results()) v += (v.empty() ? "" : ",") + s;
        } else {
            v = o->get_default_str();
        }
        rep.add(o->get_lnames().front(), v.empty() ? std::string("none") : v);
    }

    try {
        validate(cfg);
        Outputs outs(cfg.out, rep);
        try {
            handler(cfg, rep, outs);
        } catch (const NoConvergence& e) {
            rep.section("status");
            rep.add("status", "no_convergence");
            rep.add("message", e.what());
            if (!e.trace().empty()) rep.add("trace_last", e.trace().back());
            rep.add("trace_length", e.trace().size());
            outs.finish();
            rep.write(outs.report_path());
            err << "no convergence: " << e.what() << '\n';
            return 3;
        } catch (const NumericError& e) {
            rep.section("status");
            rep.add("status", "numeric_error");
            rep.add("message", e.what());
            outs.finish();
            rep.write(outs.report_path());
            err << "numerical failure: " << e.what() << '\n';
            return 3;
        }
        outs.finish();
        rep.section("status");
        rep.add("status", "ok");
        rep.write(outs.report_path());
        out << "wrote " << outs.report_path().string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateLoop& e) {
        err << "degenerate loop: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mfe
