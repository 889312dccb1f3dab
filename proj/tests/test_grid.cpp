#include "doctest.h"

#include "mfe/errors.h"
#include "mfe/functional.h"
#include "mfe/grid.h"
#include "test_support.h"

#include <cmath>
#include <numbers>

using namespace mfe;
using namespace mfe::testing;

namespace {

constexpr double pi = std::numbers::pi;

// u = sin(pi (r-1)) sin(theta) on annulus(1,2); -Delta u in closed form.
double manufactured(Point p) {
    const double r = std::hypot(p.x, p.y);
    const double t = std::atan2(p.y, p.x);
    return std::sin(pi * (r - 1.0)) * std::sin(t);
}

double manufactured_minus_laplacian(Point p) {
    const double r = std::hypot(p.x, p.y);
    const double t = std::atan2(p.y, p.x);
    const double s = std::sin(pi * (r - 1.0));
    const double c = std::cos(pi * (r - 1.0));
    return (pi * pi * s - pi * c / r + s / (r * r)) * std::sin(t);
}

// int |grad u|^2 = pi int_1^2 (pi^2 cos^2 + sin^2 / r^2) r dr, composite Simpson on 20000 panels.
double manufactured_gradient_integral() {
    auto f = [](double r) {
        const double s = std::sin(pi * (r - 1.0));
        const double c = std::cos(pi * (r - 1.0));
        return (pi * pi * c * c + s * s / (r * r)) * r;
    };
    const int n = 20000;
    const double h = 1.0 / n;
    double sum = f(1.0) + f(2.0);
    for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(1.0 + k * h);
    return pi * sum * h / 3.0;
}

Field exact_manufactured(const GridPtr& g) {
    return zero_boundary(sample(g, manufactured));
}

}  // namespace

TEST_CASE("annulus grid construction and quadrature") {
    const auto g = build_annulus_grid(1.0, 2.0, 64, 128);
    CHECK(rel_err(g->weights().sum(), 3.0 * pi) <= 1e-12);
    CHECK((g->weights().array() > 0.0).all());
    CHECK(g->on_boundary(0));
    CHECK(g->on_boundary(g->size() - 1));
    CHECK_FALSE(g->on_boundary(g->annulus().index(1, 0)));

    const auto minimal = build_annulus_grid(1.0, 2.0, 8, 8);
    CHECK(minimal->size() == 64);

    CHECK_THROWS_AS(build_annulus_grid(2.0, 1.0, 64, 128), ConfigError);
    CHECK_THROWS_AS(build_annulus_grid(0.0, 1.0, 64, 128), ConfigError);
    CHECK_THROWS_AS(build_annulus_grid(1.0, 2.0, 7, 128), ConfigError);
    CHECK_THROWS_AS(build_annulus_grid(1.0, 2.0, 64, 9), ConfigError);
}

TEST_CASE("torus grid quadrature") {
    const auto g = build_torus_grid(1.0, 1.0, 32, 32);
    CHECK(integrate(*g, Field::constant(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    const auto h = build_torus_grid(2.0, 0.5, 16, 8);
    CHECK(rel_err(h->weights().sum(), 1.0) <= 1e-14);
    CHECK_THROWS_AS(build_torus_grid(1.0, -1.0, 16, 16), ConfigError);
}

TEST_CASE("polar integral converges at second order") {
    // int r^2 sin^2(theta) r dr dtheta over annulus(1,2) = (15/4) pi
    const double exact = 15.0 / 4.0 * pi;
    std::vector<double> errors;
    for (int n : {16, 32, 64, 128}) {
        const auto g = build_annulus_grid(1.0, 2.0, n, 2 * n);
        const Field f = sample(g, [](Point p) { return p.y * p.y; });
        errors.push_back(std::abs(integrate(*g, f) - exact));
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        const double slope = std::log2(errors[k - 1] / errors[k]);
        CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
    }
    CHECK(errors.back() / exact < 1e-4);
}

TEST_CASE("annulus Laplacian: manufactured solution refinement") {
    std::vector<double> errors;
    for (int n : {16, 32, 64, 128}) {
        const auto g = build_annulus_grid(1.0, 2.0, n, 2 * n);
        const Field u = exact_manufactured(g);
        const Field lu = laplacian_apply(*g, u);
        double err = 0.0;
        for (std::size_t k = 0; k < g->size(); ++k) {
            if (g->on_boundary(k)) continue;
            err = std::max(err, std::abs(lu[k] - manufactured_minus_laplacian(g->node(k))));
        }
        errors.push_back(err);
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        CHECK(std::log2(errors[k - 1] / errors[k]) == doctest::Approx(2.0).epsilon(0.1));
    }
}

TEST_CASE("Dirichlet energy of the manufactured solution converges") {
    const double exact = 0.5 * manufactured_gradient_integral();
    std::vector<double> errors;
    for (int n : {16, 32, 64, 128}) {
        const auto g = build_annulus_grid(1.0, 2.0, n, 2 * n);
        errors.push_back(std::abs(dirichlet_energy(*g, exact_manufactured(g)) - exact));
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        CHECK(std::log2(errors[k - 1] / errors[k]) == doctest::Approx(2.0).epsilon(0.1));
    }
}

TEST_CASE("annulus summation by parts, Green identity and Poisson round trip") {
    std::mt19937_64 rng(7);
    const auto g = build_annulus_grid(1.0, 2.0, 24, 48);
    for (int trial = 0; trial < 10; ++trial) {
        const Field u = random_rough_field(g, rng);
        const Field v = random_rough_field(g, rng);
        const Field lu = laplacian_apply(*g, u);
        const Field lv = laplacian_apply(*g, v);
        CHECK(rel_err(dirichlet_energy(*g, u), 0.5 * inner(*g, lu, u)) <= 1e-10);
        CHECK(rel_err(inner(*g, lu, v), inner(*g, u, lv)) <= 1e-10);
        const Field back = poisson_solve(*g, lu);
        CHECK((back.values - u.values).lpNorm<Eigen::Infinity>() <= 1e-8 * u.values.lpNorm<Eigen::Infinity>());
        const Field lback = laplacian_apply(*g, poisson_solve(*g, u));
        CHECK((lback.values - u.values).lpNorm<Eigen::Infinity>() <= 1e-10 * u.values.lpNorm<Eigen::Infinity>());
    }
    const Field zero = Field::zeros(g);
    CHECK(laplacian_apply(*g, zero).values.isZero(0.0));
    CHECK(poisson_solve(*g, zero).values.isZero(0.0));

    const auto big = build_annulus_grid(1.0, 2.0, 64, 128);
    const Field u = exact_manufactured(big);
    const Field back = poisson_solve(*big, laplacian_apply(*big, u));
    CHECK((back.values - u.values).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("torus spectral Laplacian on an eigenfunction") {
    for (auto [lx, ly] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
        const auto g = build_torus_grid(lx, ly, 32, 16);
        const double l_x = lx;
        const Field u = sample(g, [&](Point p) { return std::cos(2 * pi * p.x / l_x); });
        const Field lu = laplacian_apply(*g, u);
        const double k2 = std::pow(2 * pi / lx, 2);
        CHECK((lu.values - k2 * u.values).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("torus five-point stencil on an eigenfunction") {
    const auto g = build_torus_grid(1.0, 1.0, 32, 32, TorusStencil::five_point);
    const Field u = sample(g, [](Point p) { return std::sin(2 * pi * p.y); });
    const Field lu = laplacian_apply(*g, u);
    const double h = 1.0 / 32;
    const double ev = (2 - 2 * std::cos(2 * pi * h)) / (h * h);
    CHECK((lu.values - ev * u.values).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("torus Poisson solve") {
    std::mt19937_64 rng(11);
    const auto g = build_torus_grid(1.0, 1.0, 32, 32);
    for (int trial = 0; trial < 5; ++trial) {
        Field u = random_smooth_field(g, rng);
        u.values.array() -= u.values.mean();
        const Field back = poisson_solve(*g, laplacian_apply(*g, u));
        CHECK((back.values - u.values).lpNorm<Eigen::Infinity>() <= 1e-10);
        const Field v = random_rough_field(g, rng);
        CHECK(rel_err(inner(*g, laplacian_apply(*g, u), v), inner(*g, u, laplacian_apply(*g, v))) <= 1e-10);
        CHECK(rel_err(dirichlet_energy(*g, v), 0.5 * energy_inner(*g, v, v)) <= 1e-12);
    }
    const Field c = poisson_solve(*g, Field::constant(g, 3.0));
    CHECK(c.values.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("grid/field mismatch is rejected") {
    const auto a = build_annulus_grid(1.0, 2.0, 16, 32);
    const auto b = build_annulus_grid(1.0, 2.0, 16, 16);
    const auto a2 = build_annulus_grid(1.0, 2.0, 16, 32);
    CHECK_THROWS_AS(laplacian_apply(*a, Field::zeros(b)), ConfigError);
    CHECK_NOTHROW(laplacian_apply(*a, Field::zeros(a2)));
    CHECK_THROWS_AS(Field(a, Eigen::VectorXd::Zero(3)), ConfigError);
}
