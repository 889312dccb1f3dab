#include "mfe/grid.h"

#include "mfe/errors.h"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mfe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// AnnulusGrid

struct AnnulusGrid::Factor {
    std::once_flag once;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

AnnulusGrid::AnnulusGrid(double r_inner, double r_outer, int n_r, int n_theta)
    : r_inner_(r_inner), r_outer_(r_outer), n_r_(n_r), n_theta_(n_theta) {
    if (!(std::isfinite(r_inner) && std::isfinite(r_outer)) || !(r_inner > 0.0) ||
        !(r_outer > r_inner)) {
        throw ConfigError("annulus requires 0 < r_inner < r_outer");
    }
    if (n_r < 8 || n_theta < 8) {
        throw ConfigError("annulus requires n_r >= 8 and n_theta >= 8");
    }
    if (n_theta % 2 != 0) {
        throw ConfigError("annulus requires an even n_theta");
    }
    h_r_ = (r_outer - r_inner) / (n_r - 1);
    h_theta_ = kTwoPi / n_theta;

    weights_.resize(static_cast<Eigen::Index>(size()));
    for (int i = 0; i < n_r_; ++i) {
        double w = radius(i) * h_r_ * h_theta_;
        if (i == 0 || i == n_r_ - 1) w *= 0.5;
        for (int j = 0; j < n_theta_; ++j) weights_[static_cast<Eigen::Index>(index(i, j))] = w;
    }
    interior_weights_ = restrict_interior(weights_);

    const auto n_int = static_cast<Eigen::Index>(interior_size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n_int) * 5);
    auto unknown = [this](int i, int j) {
        j = (j + n_theta_) % n_theta_;
        return static_cast<Eigen::Index>(i - 1) * n_theta_ + j;
    };
    for (int i = 1; i <= n_r_ - 2; ++i) {
        const double r = radius(i);
        const double r_plus = r + 0.5 * h_r_;
        const double r_minus = r - 0.5 * h_r_;
        const double radial_plus = r_plus * h_theta_ / h_r_;
        const double radial_minus = r_minus * h_theta_ / h_r_;
        const double angular = h_r_ / (r * h_theta_);
        for (int j = 0; j < n_theta_; ++j) {
            const auto m = unknown(i, j);
            triplets.emplace_back(m, m, radial_plus + radial_minus + 2.0 * angular);
            if (i + 1 <= n_r_ - 2) triplets.emplace_back(m, unknown(i + 1, j), -radial_plus);
            if (i - 1 >= 1) triplets.emplace_back(m, unknown(i - 1, j), -radial_minus);
            triplets.emplace_back(m, unknown(i, j + 1), -angular);
            triplets.emplace_back(m, unknown(i, j - 1), -angular);
        }
    }
    stiffness_.resize(n_int, n_int);
    stiffness_.setFromTriplets(triplets.begin(), triplets.end());
    stiffness_.makeCompressed();
    factor_ = std::make_shared<Factor>();
}

Point AnnulusGrid::node(std::size_t k) const {
    const int i = static_cast<int>(k / n_theta_);
    const int j = static_cast<int>(k % n_theta_);
    const double r = radius(i);
    const double t = angle(j);
    return {r * std::cos(t), r * std::sin(t)};
}

bool AnnulusGrid::on_boundary(std::size_t k) const {
    const auto i = k / n_theta_;
    return i == 0 || i == static_cast<std::size_t>(n_r_ - 1);
}

double AnnulusGrid::area() const {
    return std::numbers::pi * (r_outer_ * r_outer_ - r_inner_ * r_inner_);
}

Eigen::VectorXd AnnulusGrid::restrict_interior(const Eigen::VectorXd& full) const {
    return full.segment(n_theta_, static_cast<Eigen::Index>(interior_size()));
}

Eigen::VectorXd AnnulusGrid::extend_interior(const Eigen::VectorXd& interior) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    full.segment(n_theta_, static_cast<Eigen::Index>(interior_size())) = interior;
    return full;
}

Eigen::VectorXd AnnulusGrid::solve_stiffness(const Eigen::VectorXd& b) const {
    std::call_once(factor_->once, [this] {
        factor_->llt.compute(stiffness_);
    });
    if (factor_->llt.info() != Eigen::Success) {
        throw InternalError("annulus stiffness factorization failed");
    }
    return factor_->llt.solve(b);
}

// ---------------------------------------------------------------------------
// TorusGrid

struct TorusGrid::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~Plans() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

TorusGrid::TorusGrid(double l_x, double l_y, int n_x, int n_y, TorusStencil stencil)
    : l_x_(l_x), l_y_(l_y), n_x_(n_x), n_y_(n_y), stencil_(stencil) {
    if (!(std::isfinite(l_x) && std::isfinite(l_y)) || !(l_x > 0.0) || !(l_y > 0.0)) {
        throw ConfigError("torus periods must be positive");
    }
    if (n_x < 4 || n_y < 4 || n_x % 2 != 0 || n_y % 2 != 0) {
        throw ConfigError("torus requires even node counts >= 4");
    }
    weights_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size()), cell_area());

    const int n_yc = n_y_ / 2 + 1;
    symbol_.resize(static_cast<std::size_t>(n_x_) * n_yc);
    const double h_x = l_x_ / n_x_;
    const double h_y = l_y_ / n_y_;
    for (int i = 0; i < n_x_; ++i) {
        const int m = i <= n_x_ / 2 ? i : i - n_x_;
        for (int j = 0; j < n_yc; ++j) {
            double value = 0.0;
            if (stencil_ == TorusStencil::spectral) {
                const double kx = kTwoPi * m / l_x_;
                const double ky = kTwoPi * j / l_y_;
                value = kx * kx + ky * ky;
            } else {
                value = (2.0 - 2.0 * std::cos(kTwoPi * m / n_x_)) / (h_x * h_x) +
                        (2.0 - 2.0 * std::cos(kTwoPi * j / n_y_)) / (h_y * h_y);
            }
            symbol_[static_cast<std::size_t>(i) * n_yc + j] = value;
        }
    }

    plans_ = std::make_shared<Plans>();
    std::vector<double> real(size());
    std::vector<std::complex<double>> spec(symbol_.size());
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    std::lock_guard lock(fftw_planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_2d(n_x_, n_y_, real.data(), cplx,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->backward = fftw_plan_dft_c2r_2d(n_x_, n_y_, cplx, real.data(),
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plans_->forward || !plans_->backward) throw InternalError("FFTW planning failed");
}

Point TorusGrid::node(std::size_t k) const {
    const auto i = static_cast<double>(k / n_y_);
    const auto j = static_cast<double>(k % n_y_);
    return {i * l_x_ / n_x_, j * l_y_ / n_y_};
}

void TorusGrid::forward(const Eigen::VectorXd& in, std::vector<std::complex<double>>& out) const {
    out.resize(symbol_.size());
    Eigen::VectorXd copy = in;
    fftw_execute_dft_r2c(plans_->forward, copy.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

Eigen::VectorXd TorusGrid::backward(const std::vector<std::complex<double>>& in) const {
    std::vector<std::complex<double>> copy = in;  // c2r overwrites its input
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(copy.data()), out.data());
    out /= static_cast<double>(size());
    return out;
}

// ---------------------------------------------------------------------------
// GridSpec

const AnnulusGrid& GridSpec::annulus() const {
    if (const auto* g = std::get_if<AnnulusGrid>(&impl_)) return *g;
    throw ConfigError("operation requires an annulus grid");
}

const TorusGrid& GridSpec::torus() const {
    if (const auto* g = std::get_if<TorusGrid>(&impl_)) return *g;
    throw ConfigError("operation requires a torus grid");
}

std::size_t GridSpec::size() const {
    return std::visit([](const auto& g) { return g.size(); }, impl_);
}

const Eigen::VectorXd& GridSpec::weights() const {
    return std::visit([](const auto& g) -> const Eigen::VectorXd& { return g.weights(); }, impl_);
}

Point GridSpec::node(std::size_t k) const {
    return std::visit([k](const auto& g) { return g.node(k); }, impl_);
}

double GridSpec::area() const {
    return std::visit([](const auto& g) { return g.area(); }, impl_);
}

bool GridSpec::on_boundary(std::size_t k) const {
    if (const auto* g = std::get_if<AnnulusGrid>(&impl_)) return g->on_boundary(k);
    return false;
}

bool GridSpec::same_geometry(const GridSpec& other) const {
    if (this == &other) return true;
    if (kind() != other.kind()) return false;
    if (kind() == DomainKind::annulus) {
        const auto& a = annulus();
        const auto& b = other.annulus();
        return a.r_inner() == b.r_inner() && a.r_outer() == b.r_outer() && a.n_r() == b.n_r() &&
               a.n_theta() == b.n_theta();
    }
    const auto& a = torus();
    const auto& b = other.torus();
    return a.l_x() == b.l_x() && a.l_y() == b.l_y() && a.n_x() == b.n_x() && a.n_y() == b.n_y() &&
           a.stencil() == b.stencil();
}

std::string GridSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind() == DomainKind::annulus) {
        const auto& g = annulus();
        os << "annulus r_inner=" << g.r_inner() << " r_outer=" << g.r_outer() << " nr=" << g.n_r()
           << " ntheta=" << g.n_theta();
    } else {
        const auto& g = torus();
        os << "torus lx=" << g.l_x() << " ly=" << g.l_y() << " nx=" << g.n_x() << " ny=" << g.n_y()
           << " stencil=" << (g.stencil() == TorusStencil::spectral ? "spectral" : "five_point");
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Field

Field::Field(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw ConfigError("field without grid");
    if (static_cast<std::size_t>(values.size()) != grid->size()) {
        throw ConfigError("field value count does not match grid node count");
    }
}

Field Field::zeros(GridPtr g) {
    const auto n = static_cast<Eigen::Index>(g->size());
    return Field(std::move(g), Eigen::VectorXd::Zero(n));
}

Field Field::constant(GridPtr g, double value) {
    const auto n = static_cast<Eigen::Index>(g->size());
    return Field(std::move(g), Eigen::VectorXd::Constant(n, value));
}

Field& Field::operator+=(const Field& other) {
    require_conforming(*grid, other);
    values += other.values;
    return *this;
}

Field& Field::operator-=(const Field& other) {
    require_conforming(*grid, other);
    values -= other.values;
    return *this;
}

Field& Field::operator*=(double s) {
    values *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

// ---------------------------------------------------------------------------
// Operations

GridPtr build_annulus_grid(double r_inner, double r_outer, int n_r, int n_theta) {
    return std::make_shared<const GridSpec>(AnnulusGrid(r_inner, r_outer, n_r, n_theta));
}

GridPtr build_torus_grid(double l_x, double l_y, int n_x, int n_y, TorusStencil stencil) {
    return std::make_shared<const GridSpec>(TorusGrid(l_x, l_y, n_x, n_y, stencil));
}

void require_conforming(const GridSpec& grid, const Field& f) {
    if (!f.grid || static_cast<std::size_t>(f.values.size()) != grid.size() ||
        !grid.same_geometry(*f.grid)) {
        throw ConfigError("grid/field mismatch");
    }
}

bool is_dirichlet(const Field& f) {
    if (f.grid->kind() != DomainKind::annulus) return true;
    const auto& g = f.grid->annulus();
    const auto last = static_cast<Eigen::Index>(g.index(g.n_r() - 1, 0));
    const auto n = static_cast<Eigen::Index>(g.n_theta());
    return (f.values.head(n).array() == 0.0).all() && (f.values.segment(last, n).array() == 0.0).all();
}

namespace {

Eigen::VectorXd torus_multiply(const TorusGrid& g, const Eigen::VectorXd& u, bool inverse) {
    std::vector<std::complex<double>> spec;
    g.forward(u, spec);
    const auto& symbol = g.symbol();
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (inverse) {
            spec[k] = symbol[k] > 0.0 ? spec[k] / symbol[k] : std::complex<double>{};
        } else {
            spec[k] *= symbol[k];
        }
    }
    return g.backward(spec);
}

}  // namespace

Field laplacian_apply(const GridSpec& grid, const Field& u) {
    require_conforming(grid, u);
    if (grid.kind() == DomainKind::annulus) {
        const auto& g = grid.annulus();
        const Eigen::VectorXd x = g.restrict_interior(u.values);
        const Eigen::VectorXd y = (g.stiffness() * x).cwiseQuotient(g.interior_weights());
        return Field(u.grid, g.extend_interior(y));
    }
    return Field(u.grid, torus_multiply(grid.torus(), u.values, false));
}

Field poisson_solve(const GridSpec& grid, const Field& f) {
    require_conforming(grid, f);
    if (grid.kind() == DomainKind::annulus) {
        const auto& g = grid.annulus();
        const Eigen::VectorXd rhs = g.restrict_interior(f.values).cwiseProduct(g.interior_weights());
        return Field(f.grid, g.extend_interior(g.solve_stiffness(rhs)));
    }
    // The zero mode carries the mean; dividing it out projects the mean away.
    return Field(f.grid, torus_multiply(grid.torus(), f.values, true));
}

double integrate(const GridSpec& grid, const Field& f) {
    require_conforming(grid, f);
    return grid.weights().dot(f.values);
}

double inner(const GridSpec& grid, const Field& f, const Field& g) {
    require_conforming(grid, f);
    require_conforming(grid, g);
    return (grid.weights().array() * f.values.array() * g.values.array()).sum();
}

double dirichlet_energy(const GridSpec& grid, const Field& u) {
    require_conforming(grid, u);
    if (grid.kind() == DomainKind::torus) {
        return 0.5 * inner(grid, laplacian_apply(grid, u), u);
    }
    const auto& g = grid.annulus();
    const int nr = g.n_r();
    const int nt = g.n_theta();
    auto value = [&](int i, int j) {
        if (i == 0 || i == nr - 1) return 0.0;
        return u.values[static_cast<Eigen::Index>(g.index(i, (j + nt) % nt))];
    };
    double sum = 0.0;
    for (int i = 0; i + 1 < nr; ++i) {
        const double coeff = (g.radius(i) + 0.5 * g.h_r()) * g.h_theta() / g.h_r();
        for (int j = 0; j < nt; ++j) {
            const double d = value(i + 1, j) - value(i, j);
            sum += coeff * d * d;
        }
    }
    for (int i = 1; i + 1 < nr; ++i) {
        const double coeff = g.h_r() / (g.radius(i) * g.h_theta());
        for (int j = 0; j < nt; ++j) {
            const double d = value(i, j + 1) - value(i, j);
            sum += coeff * d * d;
        }
    }
    return 0.5 * sum;
}

double energy_inner(const GridSpec& grid, const Field& a, const Field& b) {
    return inner(grid, laplacian_apply(grid, a), b);
}

}  // namespace mfe
