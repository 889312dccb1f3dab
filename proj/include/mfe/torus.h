#pragma once

#include "mfe/minimax.h"

#include <optional>

namespace mfe {

/// First circular moments of the density K e^u / int K e^u:
/// m_x e^{i phi_x} = int e^{2 pi i x / L_x} dmu, and likewise in y.
struct PhaseCenter {
    double phi_x = 0.0;  ///< in [0, 2 pi)
    double phi_y = 0.0;
    double m_x = 0.0;    ///< in [0, 1]
    double m_y = 0.0;
    bool defined_x = false;  ///< m_x >= eps_phase
    bool defined_y = false;
};

/// u - log int K e^u, so that int K e^u = 1.
Field normalize(const ProblemSpec& p, const Field& u);

PhaseCenter phase_center(const ProblemSpec& p, const Field& u, double eps_phase = 1e-3);

/// max u - min u.
double oscillation(const Field& u);

/// Torus bubble family; the ring traverses the x circle (or y with TorusAxis::y).
PathFamily build_torus_family(const ProblemSpec& p, const FamilyConfig& config = {});

struct TorusConfig {
    MinimaxPipelineConfig pipeline;
    MinimizeConfig minimize;
    std::uint64_t seed = 1;  ///< random smooth start for the subcritical minimization
};

struct TorusSolution {
    CriticalPoint critical;  ///< normalized
    double osc = 0.0;
    PhaseCenter phase;
    bool supercritical = false;
    std::optional<MinimaxResult> minimax;
    double normalization_error = 0.0;  ///< |int K e^u - 1|
    double normalized_residual = 0.0;  ///< max |-Delta u + c - c K e^u| for the normalized u
};

/// c in (8 pi, 16 pi): minimax pipeline and Newton, then normalization.
/// c < 8 pi: minimization from a seeded random smooth start.
TorusSolution solve_torus(const ProblemSpec& p, const TorusConfig& config = {});

}  // namespace mfe
