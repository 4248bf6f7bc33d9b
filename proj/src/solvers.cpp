#include "solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rlmesh {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Geometry augmentation
// ---------------------------------------------------------------------------

AugmentResult augment_geometry(const std::vector<double>& nodes, double nominal_h,
                               const AugmentationPolicy& policy) {
    if (nodes.size() < 2) throw std::invalid_argument("augment_geometry needs at least 2 nodes");
    if (!(nominal_h > 0)) throw std::invalid_argument("augment_geometry needs nominal_h > 0");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("augment_geometry nodes must be strictly increasing");

    std::vector<double> work = nodes;
    if (policy.anchor_walls) {
        if (work.front() > 0.0) work.insert(work.begin(), 0.0);
        if (work.back() < 1.0) work.push_back(1.0);
    }

    // Gap cap: bisect each offending gap into 2^d equal pieces.
    const double cap = policy.max_gap_ratio * nominal_h;
    std::vector<double> out;
    out.reserve(work.size() * 2);
    out.push_back(work.front());
    for (std::size_t i = 1; i < work.size(); ++i) {
        double a = out.back();
        double b = work[i];
        double gap = b - a;
        if (gap > cap * (1.0 + 1e-12)) {
            int depth = static_cast<int>(std::ceil(std::log2(gap / cap)));
            long pieces = 1L << depth;
            for (long j = 1; j < pieces; ++j)
                out.push_back(a + gap * double(j) / double(pieces));
        }
        out.push_back(b);
    }

    // Adjacent-ratio pass: bisect the larger gap of the worst offending pair.
    const double rcap = policy.max_adjacent_ratio * (1.0 + 1e-12);
    for (;;) {
        bool changed = false;
        for (std::size_t i = 0; i + 2 < out.size(); ++i) {
            double g0 = out[i + 1] - out[i];
            double g1 = out[i + 2] - out[i + 1];
            double hi = std::max(g0, g1), lo = std::min(g0, g1);
            if (hi > rcap * lo) {
                std::size_t j = (g0 > g1) ? i : i + 1;
                out.insert(out.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                           0.5 * (out[j] + out[j + 1]));
                changed = true;
                break;
            }
        }
        if (!changed) break;
        if (out.size() > nodes.size() * 4096)
            throw std::runtime_error("augment_geometry: adjacency pass failed to converge");
    }

    AugmentResult res;
    res.nodes = std::move(out);
    res.original_index.reserve(nodes.size());
    std::size_t cursor = 0;
    for (double v : nodes) {
        while (cursor < res.nodes.size() && res.nodes[cursor] < v) ++cursor;
        if (cursor >= res.nodes.size() || res.nodes[cursor] != v)
            throw std::runtime_error("augment_geometry lost an original node");
        res.original_index.push_back(static_cast<int>(cursor));
    }
    return res;
}

double van_leer_limiter(double r) {
    double ar = std::abs(r);
    return (r + ar) / (1.0 + ar);
}

// ---------------------------------------------------------------------------
// Burgers finite volume
// ---------------------------------------------------------------------------

namespace {

inline double burgers_f(double u) { return 0.5 * u * u; }

inline double godunov_flux(double ul, double ur) {
    if (ul > ur) {  // shock, speed (ul + ur) / 2
        return (ul + ur > 0.0) ? burgers_f(ul) : burgers_f(ur);
    }
    if (ul >= 0.0) return burgers_f(ul);
    if (ur <= 0.0) return burgers_f(ur);
    return 0.0;  // transonic rarefaction
}

inline double rusanov_flux(double ul, double ur) {
    double a = std::max(std::abs(ul), std::abs(ur));
    return 0.5 * (burgers_f(ul) + burgers_f(ur)) - 0.5 * a * (ur - ul);
}

/// Limited slope from one-sided differences; Van Leer in harmonic form.
inline double limited_slope(double dm, double dp) {
    double prod = dm * dp;
    if (prod <= 0.0) return 0.0;
    return 2.0 * prod / (dm + dp);
}

struct BurgersScheme {
    std::vector<double> x;
    double viscosity = 0.0;
    double blend = 0.8;
    bool periodic = false;
    bool pin_walls = false;

    // scratch
    mutable std::vector<double> sigma, flux, diff;

    int size() const { return static_cast<int>(x.size()); }

    void rhs(const std::vector<double>& u, std::vector<double>& du) const {
        const int m = size();
        sigma.assign(static_cast<std::size_t>(m), 0.0);
        const double L = 1.0;

        auto gap = [&](int i) {  // gap between node i and i+1 (periodic wrap)
            if (i == m - 1) return x[0] + L - x[static_cast<std::size_t>(m - 1)];
            return x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i)];
        };

        if (periodic) {
            for (int i = 0; i < m; ++i) {
                int im = (i + m - 1) % m;
                double dm = (u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(im)]) / gap(im);
                double dp = (u[static_cast<std::size_t>((i + 1) % m)] - u[static_cast<std::size_t>(i)]) / gap(i);
                sigma[static_cast<std::size_t>(i)] = limited_slope(dm, dp);
            }
            flux.assign(static_cast<std::size_t>(m), 0.0);
            diff.assign(static_cast<std::size_t>(m), 0.0);
            for (int i = 0; i < m; ++i) {  // face i between node i and i+1
                int ip = (i + 1) % m;
                double g = gap(i);
                double xf_rel = 0.5 * g;  // face offset from node i
                double ul = u[static_cast<std::size_t>(i)] + sigma[static_cast<std::size_t>(i)] * xf_rel;
                double ur = u[static_cast<std::size_t>(ip)] - sigma[static_cast<std::size_t>(ip)] * (g - xf_rel);
                flux[static_cast<std::size_t>(i)] = blend * godunov_flux(ul, ur) +
                                                    (1.0 - blend) * rusanov_flux(ul, ur);
                diff[static_cast<std::size_t>(i)] =
                    viscosity * (u[static_cast<std::size_t>(ip)] - u[static_cast<std::size_t>(i)]) / g;
            }
            for (int i = 0; i < m; ++i) {
                int im = (i + m - 1) % m;
                double w = 0.5 * (gap(im) + gap(i));
                du[static_cast<std::size_t>(i)] =
                    (-(flux[static_cast<std::size_t>(i)] - flux[static_cast<std::size_t>(im)]) +
                     (diff[static_cast<std::size_t>(i)] - diff[static_cast<std::size_t>(im)])) / w;
            }
            return;
        }

        for (int i = 1; i + 1 < m; ++i) {
            double dm = (u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(i - 1)]) /
                        (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i - 1)]);
            double dp = (u[static_cast<std::size_t>(i + 1)] - u[static_cast<std::size_t>(i)]) /
                        (x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i)]);
            sigma[static_cast<std::size_t>(i)] = limited_slope(dm, dp);
        }
        flux.assign(static_cast<std::size_t>(m - 1), 0.0);
        diff.assign(static_cast<std::size_t>(m - 1), 0.0);
        for (int i = 0; i + 1 < m; ++i) {  // interior face between nodes i, i+1
            double xl = x[static_cast<std::size_t>(i)], xr = x[static_cast<std::size_t>(i + 1)];
            double xf = 0.5 * (xl + xr);
            double ul = u[static_cast<std::size_t>(i)] + sigma[static_cast<std::size_t>(i)] * (xf - xl);
            double ur = u[static_cast<std::size_t>(i + 1)] + sigma[static_cast<std::size_t>(i + 1)] * (xf - xr);
            flux[static_cast<std::size_t>(i)] = blend * godunov_flux(ul, ur) +
                                                (1.0 - blend) * rusanov_flux(ul, ur);
            diff[static_cast<std::size_t>(i)] =
                viscosity * (u[static_cast<std::size_t>(i + 1)] - u[static_cast<std::size_t>(i)]) / (xr - xl);
        }
        for (int i = 1; i + 1 < m; ++i) {
            double w = 0.5 * (x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i - 1)]);
            du[static_cast<std::size_t>(i)] =
                (-(flux[static_cast<std::size_t>(i)] - flux[static_cast<std::size_t>(i - 1)]) +
                 (diff[static_cast<std::size_t>(i)] - diff[static_cast<std::size_t>(i - 1)])) / w;
        }
        if (pin_walls) {
            du[0] = 0.0;
            du[static_cast<std::size_t>(m - 1)] = 0.0;
        } else {
            // Zero-gradient ghost at the domain faces; end cells are half cells.
            double g0 = x[1] - x[0];
            double gl = x[static_cast<std::size_t>(m - 1)] - x[static_cast<std::size_t>(m - 2)];
            double f_ghost0 = burgers_f(u[0]);
            double f_ghostl = burgers_f(u[static_cast<std::size_t>(m - 1)]);
            du[0] = (-(flux[0] - f_ghost0) + diff[0]) / (0.5 * g0);
            du[static_cast<std::size_t>(m - 1)] =
                (-(f_ghostl - flux[static_cast<std::size_t>(m - 2)]) -
                 diff[static_cast<std::size_t>(m - 2)]) / (0.5 * gl);
        }
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = B1 - 5179.0 / 57600, E3 = B3 - 7571.0 / 16695, E4 = B4 - 393.0 / 640,
                 E5 = B5 + 92097.0 / 339200, E6 = B6 - 187.0 / 2100, E7 = -1.0 / 40;

std::vector<double> integrate_dp45(const BurgersScheme& scheme, std::vector<double> u,
                                   double t_end, const IntegratorConfig& cfg,
                                   SolveStats* stats) {
    const std::size_t m = u.size();
    std::vector<double> k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), ytmp(m), ynew(m);

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < m; ++i)
        min_gap = std::min(min_gap, scheme.x[i] - scheme.x[i - 1]);
    if (scheme.periodic)
        min_gap = std::min(min_gap, scheme.x[0] + 1.0 - scheme.x[m - 1]);
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    double dt = cfg.cfl_coeff * min_gap / std::max(umax, cfg.velocity_floor);
    dt = std::min(dt, t_end);

    double t = 0.0;
    bool have_k1 = false;
    long steps = 0;
    while (t < t_end) {
        if (++steps > cfg.max_steps)
            throw std::runtime_error("burgers integrator exceeded max steps at t=" +
                                     std::to_string(t));
        if (dt < 1e-14 * t_end)
            throw std::runtime_error("burgers integrator step underflow at t=" +
                                     std::to_string(t));
        bool final_step = false;
        if (t + dt >= t_end) {
            dt = t_end - t;
            final_step = true;
        }
        if (!have_k1) scheme.rhs(u, k1);
        for (std::size_t i = 0; i < m; ++i) ytmp[i] = u[i] + dt * A21 * k1[i];
        scheme.rhs(ytmp, k2);
        for (std::size_t i = 0; i < m; ++i) ytmp[i] = u[i] + dt * (A31 * k1[i] + A32 * k2[i]);
        scheme.rhs(ytmp, k3);
        for (std::size_t i = 0; i < m; ++i)
            ytmp[i] = u[i] + dt * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        scheme.rhs(ytmp, k4);
        for (std::size_t i = 0; i < m; ++i)
            ytmp[i] = u[i] + dt * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        scheme.rhs(ytmp, k5);
        for (std::size_t i = 0; i < m; ++i)
            ytmp[i] = u[i] + dt * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] +
                                   A65 * k5[i]);
        scheme.rhs(ytmp, k6);
        for (std::size_t i = 0; i < m; ++i)
            ynew[i] = u[i] + dt * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] +
                                   B6 * k6[i]);
        scheme.rhs(ynew, k7);

        double errsq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double e = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] +
                             E7 * k7[i]);
            double scale = cfg.atol + cfg.rtol * std::max(std::abs(u[i]), std::abs(ynew[i]));
            double q = e / scale;
            errsq += q * q;
        }
        double err = std::sqrt(errsq / double(m));

        if (err <= 1.0) {
            t += dt;
            u.swap(ynew);
            k1.swap(k7);  // FSAL
            have_k1 = true;
            if (stats) {
                ++stats->accepted_steps;
                stats->last_time = t;
            }
            if (final_step) break;
        } else {
            if (stats) ++stats->rejected_steps;
            have_k1 = true;  // k1 still valid for the same state
        }
        double factor = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
        dt *= std::clamp(factor, 0.2, 5.0);
    }
    return u;
}

std::vector<double> linear_interp(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const std::vector<double>& xq) {
    std::vector<double> out;
    out.reserve(xq.size());
    for (double q : xq) {
        if (q <= xs.front()) {
            out.push_back(ys.front());
        } else if (q >= xs.back()) {
            out.push_back(ys.back());
        } else {
            auto it = std::upper_bound(xs.begin(), xs.end(), q);
            std::size_t hi = static_cast<std::size_t>(it - xs.begin());
            std::size_t lo = hi - 1;
            double w = (q - xs[lo]) / (xs[hi] - xs[lo]);
            out.push_back(ys[lo] + w * (ys[hi] - ys[lo]));
        }
    }
    return out;
}

}  // namespace

Field burgers_solve_nonuniform(const Field& ic_values, const SpatialGrid& nodes,
                               const ProblemSpec& spec, const FluxConfig& flux,
                               const AugmentationPolicy& aug, const IntegratorConfig& integ,
                               bool restrict_output, SolveStats* stats) {
    auto t0 = Clock::now();
    if (ic_values.size() != nodes.size())
        throw std::invalid_argument("burgers_solve_nonuniform: ic/node size mismatch");
    if (!ic_values.finite())
        throw std::invalid_argument("burgers_solve_nonuniform: non-finite initial condition");
    if (flux.godunov_blend < 0.0 || flux.godunov_blend > 1.0)
        throw std::invalid_argument("FluxConfig blend must lie in [0, 1]");

    const bool periodic = spec.burgers.boundary == BoundaryMode::periodic;
    if (periodic && nodes.coords.front() == 0.0 && nodes.coords.back() == 1.0)
        throw std::invalid_argument(
            "periodic grids identify x=0 with x=1; supply nodes in [0, 1)");

    double nominal_h = nodes.nominal_spacing > 0
                           ? nodes.nominal_spacing
                           : 1.0 / double(spec.burgers.grid_n - 1);

    AugmentationPolicy policy = aug;
    if (periodic) policy.anchor_walls = false;
    AugmentResult geo = augment_geometry(nodes.coords, nominal_h, policy);

    std::vector<double> u0 = linear_interp(nodes.coords, ic_values.values, geo.nodes);

    BurgersScheme scheme;
    scheme.x = geo.nodes;
    scheme.viscosity = spec.burgers.viscosity;
    scheme.blend = flux.godunov_blend;
    scheme.periodic = periodic;
    scheme.pin_walls = !periodic && scheme.x.front() == 0.0 && scheme.x.back() == 1.0;

    std::vector<double> uT = integrate_dp45(scheme, std::move(u0), spec.burgers.horizon,
                                            integ, stats);

    Field out;
    if (restrict_output) {
        out.values.reserve(geo.original_index.size());
        for (int idx : geo.original_index)
            out.values.push_back(uT[static_cast<std::size_t>(idx)]);
    } else {
        out.values = std::move(uT);
    }
    if (stats) stats->seconds += elapsed_seconds(t0);
    return out;
}

Field burgers_solve_uniform(const Field& ic, const ProblemSpec& spec, const FluxConfig& flux,
                            const IntegratorConfig& integ, SolveStats* stats) {
    int n = spec.burgers.grid_n;
    if (ic.size() != n && spec.burgers.boundary == BoundaryMode::dirichlet_walls)
        throw std::invalid_argument("burgers_solve_uniform: ic size does not match grid_n");
    SpatialGrid grid;
    if (spec.burgers.boundary == BoundaryMode::periodic) {
        grid.coords.resize(static_cast<std::size_t>(ic.size()));
        for (int i = 0; i < ic.size(); ++i)
            grid.coords[static_cast<std::size_t>(i)] = double(i) / double(ic.size());
        grid.nominal_spacing = 1.0 / double(ic.size());
    } else {
        grid = SpatialGrid::uniform(n);
    }
    return burgers_solve_nonuniform(ic, grid, spec, flux, AugmentationPolicy{}, integ,
                                    /*restrict_output=*/false, stats);
}

// ---------------------------------------------------------------------------
// Darcy
// ---------------------------------------------------------------------------

Field darcy_solve(const Field& coefficient, const ProblemSpec& spec, SolveStats* stats) {
    auto t0 = Clock::now();
    const int n = spec.darcy.grid_n;
    if (coefficient.size() != n * n)
        throw std::invalid_argument("darcy_solve: coefficient must be n*n");
    for (double c : coefficient.values)
        if (!(c > 0.0))
            throw std::invalid_argument("darcy_solve: coefficient must be strictly positive");

    const int ni = n - 2;  // interior per side
    const double h = 1.0 / double(n - 1);
    const double h2 = h * h;
    const double f = spec.darcy.forcing;
    const std::size_t N = static_cast<std::size_t>(ni) * static_cast<std::size_t>(ni);

    auto cof = [&](int i, int j) {
        return coefficient.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                                  static_cast<std::size_t>(j)];
    };
    auto harm = [](double a, double b) { return 2.0 * a * b / (a + b); };

    // Precompute stencil coefficients per interior cell.
    std::vector<double> aN(N), aS(N), aE(N), aW(N), diag(N);
    for (int i = 1; i <= ni; ++i) {
        for (int j = 1; j <= ni; ++j) {
            std::size_t p = static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(ni) +
                            static_cast<std::size_t>(j - 1);
            double an = harm(cof(i, j), cof(i - 1, j));
            double as = harm(cof(i, j), cof(i + 1, j));
            double aw = harm(cof(i, j), cof(i, j - 1));
            double ae = harm(cof(i, j), cof(i, j + 1));
            aN[p] = an / h2; aS[p] = as / h2; aW[p] = aw / h2; aE[p] = ae / h2;
            diag[p] = (an + as + aw + ae) / h2;
        }
    }

    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int i = 0; i < ni; ++i) {
            for (int j = 0; j < ni; ++j) {
                std::size_t p = static_cast<std::size_t>(i) * static_cast<std::size_t>(ni) +
                                static_cast<std::size_t>(j);
                double acc = diag[p] * v[p];
                if (i > 0) acc -= aN[p] * v[p - static_cast<std::size_t>(ni)];
                if (i < ni - 1) acc -= aS[p] * v[p + static_cast<std::size_t>(ni)];
                if (j > 0) acc -= aW[p] * v[p - 1];
                if (j < ni - 1) acc -= aE[p] * v[p + 1];
                out[p] = acc;
            }
        }
    };

    std::vector<double> b(N, f), u(N, 0.0), r(N), z(N), p(N), Ap(N);
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);

    r = b;  // u = 0 start
    for (std::size_t q = 0; q < N; ++q) z[q] = r[q] / diag[q];
    p = z;
    double rz = 0.0;
    for (std::size_t q = 0; q < N; ++q) rz += r[q] * z[q];

    const double tol = 1e-10;
    const long max_iter = 40L * n + 2000;
    long iter = 0;
    double rnorm = bnorm;
    while (rnorm > tol * bnorm) {
        if (iter++ >= max_iter)
            throw std::runtime_error("darcy_solve: CG failed to converge, relative residual " +
                                     std::to_string(rnorm / bnorm));
        apply(p, Ap);
        double pAp = 0.0;
        for (std::size_t q = 0; q < N; ++q) pAp += p[q] * Ap[q];
        double alpha = rz / pAp;
        for (std::size_t q = 0; q < N; ++q) {
            u[q] += alpha * p[q];
            r[q] -= alpha * Ap[q];
        }
        double rz_new = 0.0;
        rnorm = 0.0;
        for (std::size_t q = 0; q < N; ++q) {
            z[q] = r[q] / diag[q];
            rz_new += r[q] * z[q];
            rnorm += r[q] * r[q];
        }
        rnorm = std::sqrt(rnorm);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t q = 0; q < N; ++q) p[q] = z[q] + beta * p[q];
    }

    Field out;
    out.values.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < ni; ++j)
            out.values[static_cast<std::size_t>(i + 1) * static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(j + 1)] =
                u[static_cast<std::size_t>(i) * static_cast<std::size_t>(ni) +
                  static_cast<std::size_t>(j)];
    if (stats) {
        stats->cg_iterations = iter;
        stats->residual = rnorm / bnorm;
        stats->seconds += elapsed_seconds(t0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lorenz-96
// ---------------------------------------------------------------------------

std::vector<double> lorenz96_rhs(const std::vector<double>& x, double forcing) {
    const int n = static_cast<int>(x.size());
    if (n < 4) throw std::invalid_argument("lorenz96_rhs needs at least 4 variables");
    std::vector<double> dx(x.size());
    for (int i = 0; i < n; ++i) {
        int ip1 = (i + 1) % n;
        int im1 = (i + n - 1) % n;
        int im2 = (i + n - 2) % n;
        dx[static_cast<std::size_t>(i)] =
            (x[static_cast<std::size_t>(ip1)] - x[static_cast<std::size_t>(im2)]) *
                x[static_cast<std::size_t>(im1)] -
            x[static_cast<std::size_t>(i)] + forcing;
    }
    return dx;
}

std::vector<double> lorenz96_solve(const std::vector<double>& x0, const ProblemSpec& spec,
                                   SolveStats* stats) {
    auto t0 = Clock::now();
    const double dt = spec.lorenz96.dt;
    const double T = spec.lorenz96.horizon;
    const double F = spec.lorenz96.forcing;
    std::vector<double> x = x0;
    const std::size_t n = x.size();
    std::vector<double> tmp(n);

    auto step = [&](double h) {
        auto k1 = lorenz96_rhs(x, F);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        auto k2 = lorenz96_rhs(tmp, F);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        auto k3 = lorenz96_rhs(tmp, F);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        auto k4 = lorenz96_rhs(tmp, F);
        for (std::size_t i = 0; i < n; ++i)
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    long full = static_cast<long>(std::floor(T / dt + 1e-9));
    for (long s = 0; s < full; ++s) step(dt);
    double rem = T - double(full) * dt;
    if (rem > 1e-12) step(rem);
    if (stats) {
        stats->accepted_steps += full + (rem > 1e-12 ? 1 : 0);
        stats->last_time = T;
        stats->seconds += elapsed_seconds(t0);
    }
    return x;
}

}  // namespace rlmesh
