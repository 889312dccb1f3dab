#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace mfe {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class DomainKind { annulus, torus };

/// Discretization of -Delta on the torus. Both are diagonal in the discrete Fourier basis.
enum class TorusStencil { spectral, five_point };

/// Polar grid on { r_inner <= |x| <= r_outer }.
///
/// Nodes sit at r_i = r_inner + i h_r (i = 0..n_r-1, both circles included) and
/// theta_j = j h_theta (j = 0..n_theta-1). Flat index k = i n_theta + j.
/// Quadrature is trapezoidal in r with Jacobian r at the nodes and trapezoidal in
/// theta; it integrates r exactly, so the weights sum to the annulus area.
///
/// The unknowns of Dirichlet problems are the interior circles i = 1..n_r-2. The
/// stiffness matrix A = W L on those unknowns is symmetric positive definite and
/// its Cholesky factor is built on first use and shared by every copy of the grid.
class AnnulusGrid {
public:
    AnnulusGrid(double r_inner, double r_outer, int n_r, int n_theta);

    double r_inner() const { return r_inner_; }
    double r_outer() const { return r_outer_; }
    int n_r() const { return n_r_; }
    int n_theta() const { return n_theta_; }
    double h_r() const { return h_r_; }
    double h_theta() const { return h_theta_; }

    std::size_t size() const { return static_cast<std::size_t>(n_r_) * n_theta_; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_theta_ + j; }
    double radius(int i) const { return r_inner_ + i * h_r_; }
    double angle(int j) const { return j * h_theta_; }
    Point node(std::size_t k) const;
    bool on_boundary(std::size_t k) const;
    double area() const;

    const Eigen::VectorXd& weights() const { return weights_; }

    std::size_t interior_size() const { return static_cast<std::size_t>(n_r_ - 2) * n_theta_; }
    Eigen::VectorXd restrict_interior(const Eigen::VectorXd& full) const;
    Eigen::VectorXd extend_interior(const Eigen::VectorXd& interior) const;
    const Eigen::VectorXd& interior_weights() const { return interior_weights_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

    /// Solves A x = b on the interior unknowns with the cached factorization.
    Eigen::VectorXd solve_stiffness(const Eigen::VectorXd& b) const;

private:
    struct Factor;

    double r_inner_;
    double r_outer_;
    int n_r_;
    int n_theta_;
    double h_r_;
    double h_theta_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd interior_weights_;
    Eigen::SparseMatrix<double> stiffness_;
    std::shared_ptr<Factor> factor_;
};

/// Periodic grid on [0, L_x) x [0, L_y). Flat index k = i n_y + j for x_i = i L_x / n_x,
/// y_j = j L_y / n_y. All weights equal L_x L_y / (n_x n_y).
class TorusGrid {
public:
    TorusGrid(double l_x, double l_y, int n_x, int n_y, TorusStencil stencil);

    double l_x() const { return l_x_; }
    double l_y() const { return l_y_; }
    int n_x() const { return n_x_; }
    int n_y() const { return n_y_; }
    TorusStencil stencil() const { return stencil_; }

    std::size_t size() const { return static_cast<std::size_t>(n_x_) * n_y_; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_y_ + j; }
    Point node(std::size_t k) const;
    double area() const { return l_x_ * l_y_; }
    double cell_area() const { return area() / static_cast<double>(size()); }

    const Eigen::VectorXd& weights() const { return weights_; }

    /// Eigenvalues of the discrete -Delta in the half-complex layout n_x * (n_y/2 + 1).
    const std::vector<double>& symbol() const { return symbol_; }
    std::size_t spectrum_size() const { return symbol_.size(); }

    void forward(const Eigen::VectorXd& in, std::vector<std::complex<double>>& out) const;
    /// Inverse transform including the 1/(n_x n_y) normalization.
    Eigen::VectorXd backward(const std::vector<std::complex<double>>& in) const;

private:
    struct Plans;

    double l_x_;
    double l_y_;
    int n_x_;
    int n_y_;
    TorusStencil stencil_;
    Eigen::VectorXd weights_;
    std::vector<double> symbol_;
    std::shared_ptr<Plans> plans_;
};

class GridSpec {
public:
    explicit GridSpec(AnnulusGrid g) : impl_(std::move(g)) {}
    explicit GridSpec(TorusGrid g) : impl_(std::move(g)) {}

    DomainKind kind() const {
        return std::holds_alternative<AnnulusGrid>(impl_) ? DomainKind::annulus : DomainKind::torus;
    }
    const AnnulusGrid& annulus() const;
    const TorusGrid& torus() const;

    std::size_t size() const;
    const Eigen::VectorXd& weights() const;
    Point node(std::size_t k) const;
    double area() const;
    bool on_boundary(std::size_t k) const;

    bool same_geometry(const GridSpec& other) const;
    /// One-line geometry descriptor, e.g. "annulus r_inner=1 r_outer=2 nr=64 ntheta=128".
    std::string describe() const;

private:
    std::variant<AnnulusGrid, TorusGrid> impl_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

/// One real value per grid node.
struct Field {
    GridPtr grid;
    Eigen::VectorXd values;

    Field() = default;
    Field(GridPtr g, Eigen::VectorXd v);

    static Field zeros(GridPtr g);
    static Field constant(GridPtr g, double value);

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    double operator[](std::size_t k) const { return values[static_cast<Eigen::Index>(k)]; }

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

GridPtr build_annulus_grid(double r_inner, double r_outer, int n_r, int n_theta);
GridPtr build_torus_grid(double l_x, double l_y, int n_x, int n_y,
                         TorusStencil stencil = TorusStencil::spectral);

/// Throws ConfigError unless `f` lives on a grid with the same geometry as `grid`.
void require_conforming(const GridSpec& grid, const Field& f);
/// True when every boundary value is exactly zero (always true on the torus).
bool is_dirichlet(const Field& f);

/// -Delta u. Annulus: conservative polar 5-point stencil on interior circles, boundary
/// values read as zero and boundary outputs set to zero. Torus: Fourier multiplier.
Field laplacian_apply(const GridSpec& grid, const Field& u);

/// g with -Delta g = f. Annulus: homogeneous Dirichlet data. Torus: the mean of f is
/// projected out and g has zero mean.
Field poisson_solve(const GridSpec& grid, const Field& f);

double integrate(const GridSpec& grid, const Field& f);

/// Quadrature inner product sum_k w_k f_k g_k.
double inner(const GridSpec& grid, const Field& f, const Field& g);

/// 1/2 int |grad u|^2, summed over cell faces; equals 1/2 <laplacian_apply(u), u>.
double dirichlet_energy(const GridSpec& grid, const Field& u);

/// Energy inner product <-Delta a, b> (the H^1_0 / H^1-seminorm inner product).
double energy_inner(const GridSpec& grid, const Field& a, const Field& b);

}  // namespace mfe
