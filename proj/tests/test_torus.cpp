#include "doctest.h"

#include "mfe/errors.h"
#include "mfe/torus.h"
#include "test_support.h"

#include <cmath>
#include <numbers>

using namespace mfe;
using namespace mfe::testing;

namespace {

constexpr double pi = std::numbers::pi;

const GridPtr& unit64() {
    static const GridPtr g = build_torus_grid(1.0, 1.0, 64, 64);
    return g;
}

const TorusSolution& solution30() {
    static const TorusSolution s = solve_torus(ProblemSpec::torus(unit64(), 30.0));
    return s;
}

Field shifted(const Field& u, double c) {
    Field v = u;
    v.values.array() += c;
    return v;
}

}  // namespace

TEST_CASE("normalize") {
    const auto p = ProblemSpec::torus(unit64(), 30.0);
    CHECK(normalize(p, Field::zeros(unit64())).values.isZero(1e-15));
    std::mt19937_64 rng(2);
    const Field u = random_smooth_field(unit64(), rng, 2.0);
    const Field n = normalize(p, u);
    CHECK(std::abs(std::exp(log_integral_exp(*unit64(), n)) - 1.0) <= 1e-12);
    CHECK((normalize(p, shifted(u, 5.0)).values - n.values).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("phase center locates a bubble and is gauge invariant") {
    const auto p = ProblemSpec::torus(unit64(), 30.0);
    const Field u = make_bubble(unit64(), {{0.25, 0.5}, 20.0, 1.0, 0.4});
    const PhaseCenter c = phase_center(p, u);
    CHECK(c.defined_x);
    CHECK(c.defined_y);
    CHECK(c.phi_x == doctest::Approx(pi / 2).epsilon(1e-9));
    CHECK(c.phi_y == doctest::Approx(pi).epsilon(1e-9));
    CHECK(c.m_x > 0.5);
    const PhaseCenter d = phase_center(p, shifted(u, -7.0));
    CHECK(std::abs(d.phi_x - c.phi_x) <= 1e-9);
    CHECK(std::abs(d.m_x - c.m_x) <= 1e-9);

    const PhaseCenter flat = phase_center(p, Field::zeros(unit64()));
    CHECK_FALSE(flat.defined_x);
    CHECK_FALSE(flat.defined_y);
    CHECK(flat.m_x <= 1e-12);

    const PhaseCenter origin = phase_center(p, make_bubble(unit64(), {{0.0, 0.0}, 20.0, 1.0, 0.4}));
    CHECK(origin.phi_x >= 0.0);
    CHECK(origin.phi_x < 2 * pi);
    CHECK(std::min(origin.phi_x, 2 * pi - origin.phi_x) <= 1e-9);
}

TEST_CASE("oscillation") {
    Field u = Field::zeros(unit64());
    CHECK(oscillation(u) == 0.0);
    u.values[3] = 2.0;
    u.values[9] = -0.5;
    CHECK(oscillation(u) == 2.5);
}

TEST_CASE("constant field is an exact solution for every c") {
    for (double c : {1.0, 20.0, 30.0, 45.0, 49.0}) {
        const auto p = ProblemSpec::torus(unit64(), c);
        CHECK(residual(p, Field::zeros(unit64())).values.lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK(residual(p, shifted(Field::zeros(unit64()), 3.0)).values.lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("torus family at c = 30") {
    const auto p = ProblemSpec::torus(unit64(), 30.0);
    const PathFamily f = build_torus_family(p);
    CHECK(f.samples[0].energy == 0.0);
    CHECK(ring_winding(p, f) == 1);
    for (int j = 0; j < f.n_angular; ++j) CHECK(f.samples[f.index(f.n_radial, j)].energy < f.j_low);
    CHECK(f.continuity_jump() <= f.max_jump);

    FamilyConfig ycfg;
    ycfg.torus_axis = TorusAxis::y;
    const PathFamily fy = build_torus_family(p, ycfg);
    CHECK(ring_winding(p, fy) == 1);
    CHECK(fy.samples[fy.index(fy.n_radial, 0)].energy == doctest::Approx(f.samples[f.index(f.n_radial, 0)].energy).epsilon(1e-9));

    CHECK_THROWS_AS(build_torus_family(ProblemSpec::torus(unit64(), 20.0)), ConfigError);
    CHECK_THROWS_AS(build_torus_family(ProblemSpec::annulus(build_annulus_grid(1, 2, 32, 64), 12 * pi)), ConfigError);
}

TEST_CASE("non-constant solution at c = 30") {
    const auto& s = solution30();
    const auto p = ProblemSpec::torus(unit64(), 30.0);
    CHECK(s.supercritical);
    REQUIRE(s.minimax);
    CHECK(s.minimax->converged);
    CHECK(s.osc > 0.1);
    CHECK(s.normalized_residual <= 1e-8);
    CHECK(s.normalization_error <= 1e-12);
    REQUIRE(s.critical.spectrum);
    CHECK(s.critical.spectrum->morse_index >= 1);
    CHECK(s.phase.defined_x);
    CHECK(s.critical.energy.total > 0.0);
    CHECK(s.critical.provenance.source == "minimax");
    CHECK(verify_residual(p, s.critical.field) <= 2 * s.critical.residual_dual + 1e-12);
    for (const auto& r : s.minimax->trace) CHECK(r.winding == 1);
}

TEST_CASE("torus observables are gauge invariant") {
    const auto& s = solution30();
    const auto p = ProblemSpec::torus(unit64(), 30.0);
    const Field& u = s.critical.field;
    const Field v = shifted(u, 4.0);
    CHECK(std::abs(energy(p, v).total - energy(p, u).total) <= 1e-9);
    CHECK((residual(p, v).values - residual(p, u).values).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(std::abs(oscillation(v) - oscillation(u)) <= 1e-9);
    const PhaseCenter a = phase_center(p, u);
    const PhaseCenter b = phase_center(p, v);
    CHECK(std::abs(a.phi_x - b.phi_x) <= 1e-9);
    CHECK(std::abs(a.phi_y - b.phi_y) <= 1e-9);
}

TEST_CASE("solve_torus is deterministic") {
    const TorusSolution again = solve_torus(ProblemSpec::torus(unit64(), 30.0));
    CHECK(again.critical.field.values == solution30().critical.field.values);
    CHECK(again.osc == solution30().osc);
}

TEST_CASE("subcritical torus problem minimizes to the constant") {
    const auto p = ProblemSpec::torus(build_torus_grid(1.0, 1.0, 32, 32), 20.0);
    const TorusSolution s = solve_torus(p);
    CHECK_FALSE(s.supercritical);
    CHECK_FALSE(s.minimax);
    CHECK(s.normalized_residual <= 1e-8);
    CHECK(s.osc <= 1e-8);
    REQUIRE(s.critical.spectrum);
    CHECK(s.critical.spectrum->morse_index == 0);
}

TEST_CASE("non-constant weight smoke test") {
    const auto g = build_torus_grid(1.0, 1.0, 32, 32);
    const Field k = sample(g, [](Point x) { return 1.0 + 0.3 * std::cos(2 * pi * x.x); });
    const auto p = ProblemSpec::torus(g, 20.0, k);
    const TorusSolution s = solve_torus(p);
    CHECK(s.normalized_residual <= 1e-8);
    CHECK(s.normalization_error <= 1e-12);
    CHECK(s.osc > 0.0);
}

TEST_CASE("solve_torus parameter range") {
    CHECK_THROWS_AS(solve_torus(ProblemSpec::torus(unit64(), 16 * pi)), ConfigError);
    CHECK_THROWS_AS(solve_torus(ProblemSpec::torus(unit64(), 8 * pi)), ConfigError);
    CHECK_THROWS_AS(solve_torus(ProblemSpec::annulus(build_annulus_grid(1, 2, 32, 64), 12 * pi)), ConfigError);
}
