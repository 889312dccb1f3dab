#pragma once

#include "mfe/grid.h"

#include <cmath>
#include <numbers>
#include <random>

namespace mfe::testing {

inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Smooth random field: a few low Dirichlet sine modes (annulus) or Fourier modes (torus).
inline Field random_smooth_field(const GridPtr& grid, std::mt19937_64& rng, double amplitude = 1.0) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    Field f = Field::zeros(grid);
    constexpr double pi = std::numbers::pi;
    if (grid->kind() == DomainKind::annulus) {
        const auto& g = grid->annulus();
        for (int a = 1; a <= 3; ++a) {
            for (int m = 0; m <= 3; ++m) {
                const double cc = coef(rng) * amplitude / (a * (m + 1));
                const double cs = coef(rng) * amplitude / (a * (m + 1));
                for (int i = 0; i < g.n_r(); ++i) {
                    const double s = std::sin(a * pi * (g.radius(i) - g.r_inner()) / (g.r_outer() - g.r_inner()));
                    for (int j = 0; j < g.n_theta(); ++j) {
                        const double t = g.angle(j);
                        f.values[static_cast<Eigen::Index>(g.index(i, j))] +=
                            s * (cc * std::cos(m * t) + cs * std::sin(m * t));
                    }
                }
            }
        }
        f.values.head(g.n_theta()).setZero();
        f.values.tail(g.n_theta()).setZero();
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

/// Random field with independent node values (rough), Dirichlet on the annulus.
inline Field random_rough_field(const GridPtr& grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    Field f = Field::zeros(grid);
    for (Eigen::Index k = 0; k < f.values.size(); ++k) {
        if (!grid->on_boundary(static_cast<std::size_t>(k))) f.values[k] = coef(rng);
    }
    return f;
}

template <class Fn>
Field sample(const GridPtr& grid, Fn&& fn) {
    Field f = Field::zeros(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        f.values[static_cast<Eigen::Index>(k)] = fn(grid->node(k));
    }
    return f;
}

}  // namespace mfe::testing
