#pragma once

#include "core.hpp"

#include <utility>
#include <vector>

namespace rlmesh {

/// Caps on sparse-selection geometry before solving. Virtual midpoints are
/// inserted by recursive bisection until every gap and adjacent-gap ratio is
/// within bounds.
struct AugmentationPolicy {
    double max_gap_ratio = 3.0;       // gap <= ratio * nominal spacing
    double max_adjacent_ratio = 2.0;  // max(g_i, g_{i+1}) <= ratio * min(...)
    bool anchor_walls = true;         // ensure nodes at 0 and 1
};

/// Convective flux blend: phi = 1 is pure Godunov, phi = 0 pure Rusanov.
struct FluxConfig {
    double godunov_blend = 0.8;
};

struct IntegratorConfig {
    double rtol = 1e-6;
    double atol = 1e-8;
    double cfl_coeff = 0.5;        // initial step dt0 = C * min_gap / max(|u0|, floor)
    double velocity_floor = 1e-8;
    long max_steps = 20'000'000;
};

/// Per-call diagnostics; wall time feeds the time-error harness.
struct SolveStats {
    long accepted_steps = 0;
    long rejected_steps = 0;
    double seconds = 0.0;
    double last_time = 0.0;
    long cg_iterations = 0;
    double residual = 0.0;
};

struct AugmentResult {
    std::vector<double> nodes;
    std::vector<int> original_index;  // original node i lives at nodes[original_index[i]]
};

AugmentResult augment_geometry(const std::vector<double>& nodes, double nominal_h,
                               const AugmentationPolicy& policy);

/// (r + |r|) / (1 + |r|); zero for r <= 0, bounded in [0, 2).
double van_leer_limiter(double r);

/// MUSCL (Van Leer) finite volume with blended Godunov/Rusanov convective
/// flux and face-based diffusion, integrated to t = horizon by an embedded
/// Dormand-Prince 5(4) pair. Wall values are pinned only when boundary nodes
/// are present in DirichletWalls mode. With restrict_output the result is
/// given at the original nodes, else on the augmented grid (returned nodes
/// accessible through augment_geometry).
Field burgers_solve_nonuniform(const Field& ic_values, const SpatialGrid& nodes,
                               const ProblemSpec& spec, const FluxConfig& flux = {},
                               const AugmentationPolicy& aug = {},
                               const IntegratorConfig& integ = {},
                               bool restrict_output = true, SolveStats* stats = nullptr);

/// Same discretization on the dense uniform grid.
Field burgers_solve_uniform(const Field& ic, const ProblemSpec& spec,
                            const FluxConfig& flux = {}, const IntegratorConfig& integ = {},
                            SolveStats* stats = nullptr);

/// 5-point finite differences with harmonic-mean face coefficients and zero
/// Dirichlet boundary, solved by Jacobi-preconditioned conjugate gradients to
/// relative residual 1e-10.
Field darcy_solve(const Field& coefficient, const ProblemSpec& spec,
                  SolveStats* stats = nullptr);

/// dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F with periodic indexing.
std::vector<double> lorenz96_rhs(const std::vector<double>& x, double forcing);

/// Classical RK4 with fixed step spec.lorenz96.dt up to t = horizon.
std::vector<double> lorenz96_solve(const std::vector<double>& x0, const ProblemSpec& spec,
                                   SolveStats* stats = nullptr);

}  // namespace rlmesh
