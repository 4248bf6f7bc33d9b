#include "solvers.hpp"

#include "core.hpp"
#include "rng.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rlmesh;

namespace {

ProblemSpec burgers_spec(double nu = 0.002, BoundaryMode mode = BoundaryMode::dirichlet_walls,
                         int n = 129) {
    ProblemSpec s;
    s.kind = ProblemKind::burgers;
    s.burgers.viscosity = nu;
    s.burgers.grid_n = n;
    s.burgers.boundary = mode;
    return s;
}

Field ic_family(double a, double b, const std::vector<double>& xs) {
    Field f;
    constexpr double kPi = 3.14159265358979323846;
    for (double x : xs)
        f.values.push_back(a * std::exp(-a * x) * std::sin(2 * kPi * x) * std::cos(b * kPi * x));
    return f;
}

// Exhaustive postcondition scan used as the augmentation oracle.
void check_augmented(const std::vector<double>& original, const AugmentResult& res,
                     double nominal_h, const AugmentationPolicy& p) {
    REQUIRE(res.nodes.size() >= original.size());
    for (std::size_t i = 1; i < res.nodes.size(); ++i)
        REQUIRE(res.nodes[i] > res.nodes[i - 1]);
    // every original node is present and the index map points at it
    REQUIRE(res.original_index.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        REQUIRE(res.nodes[static_cast<std::size_t>(res.original_index[i])] == original[i]);
    double cap = p.max_gap_ratio * nominal_h * (1 + 1e-9);
    for (std::size_t i = 1; i < res.nodes.size(); ++i)
        REQUIRE(res.nodes[i] - res.nodes[i - 1] <= cap);
    for (std::size_t i = 2; i < res.nodes.size(); ++i) {
        double g0 = res.nodes[i - 1] - res.nodes[i - 2];
        double g1 = res.nodes[i] - res.nodes[i - 1];
        REQUIRE(std::max(g0, g1) <= p.max_adjacent_ratio * std::min(g0, g1) * (1 + 1e-9));
    }
}

double total_variation_periodic(const std::vector<double>& u) {
    double tv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        tv += std::abs(u[(i + 1) % u.size()] - u[i]);
    return tv;
}

double trapezoid_mass_periodic(const std::vector<double>& x, const std::vector<double>& u) {
    // node weight = half-sum of adjacent gaps on the circle of length 1
    double mass = 0.0;
    const std::size_t m = x.size();
    for (std::size_t i = 0; i < m; ++i) {
        double gl = (i == 0) ? x[0] + 1.0 - x[m - 1] : x[i] - x[i - 1];
        double gr = (i + 1 == m) ? x[0] + 1.0 - x[m - 1] : x[i + 1] - x[i];
        mass += 0.5 * (gl + gr) * u[i];
    }
    return mass;
}

}  // namespace

TEST_CASE("van Leer limiter closed form") {
    CHECK(van_leer_limiter(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(van_leer_limiter(0.0) == 0.0);
    CHECK(van_leer_limiter(3.0) == doctest::Approx(1.5).epsilon(1e-15));
    rng::Stream s(3, 1);
    for (int i = 0; i < 1000; ++i) {
        double r = s.next_uniform(-50.0, 50.0);
        double v = van_leer_limiter(r);
        CHECK(v >= 0.0);
        CHECK(v < 2.0);
        if (r <= 0.0) CHECK(v == 0.0);
    }
}

TEST_CASE("geometry augmentation bisection example") {
    AugmentationPolicy p;  // caps 3.0 / 2.0, anchor walls
    auto res = augment_geometry({0.0, 0.5, 1.0}, 0.1, p);
    std::vector<double> expected = {0.0, 0.25, 0.5, 0.75, 1.0};
    REQUIRE(res.nodes.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(res.nodes[i] == doctest::Approx(expected[i]).epsilon(1e-14));
    check_augmented({0.0, 0.5, 1.0}, res, 0.1, p);
}

TEST_CASE("geometry augmentation keeps compliant node sets unchanged") {
    AugmentationPolicy p;
    std::vector<double> nodes;
    for (int i = 0; i <= 10; ++i) nodes.push_back(i / 10.0);
    auto res = augment_geometry(nodes, 0.1, p);
    CHECK(res.nodes == nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        CHECK(res.original_index[i] == static_cast<int>(i));
}

TEST_CASE("geometry augmentation caps the two-node worst case") {
    AugmentationPolicy p;
    auto res = augment_geometry({0.0, 1.0}, 0.1, p);
    CHECK(res.nodes.front() == 0.0);
    CHECK(res.nodes.back() == 1.0);
    check_augmented({0.0, 1.0}, res, 0.1, p);
    CHECK_THROWS_AS(augment_geometry({0.5}, 0.1, p), std::invalid_argument);
}

TEST_CASE("geometry augmentation fuzz: caps, preservation, index map") {
    AugmentationPolicy p;
    rng::Stream s(5, 2);
    for (int trial = 0; trial < 1000; ++trial) {
        int m = 2 + int(s.next_below(40));
        std::vector<double> nodes;
        for (int i = 0; i < m; ++i) nodes.push_back(s.next_unit());
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        if (nodes.size() < 2) continue;
        auto res = augment_geometry(nodes, 1.0 / 128.0, p);
        check_augmented(nodes, res, 1.0 / 128.0, p);
    }
}

TEST_CASE("burgers: zero initial condition is a fixed point") {
    ProblemSpec spec = burgers_spec();
    Field ic;
    ic.values.assign(129, 0.0);
    Field out = burgers_solve_uniform(ic, spec);
    for (double v : out.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("burgers: constant state invariant in periodic mode") {
    ProblemSpec spec = burgers_spec(0.002, BoundaryMode::periodic);
    Field ic;
    ic.values.assign(64, 0.7);
    Field out = burgers_solve_uniform(ic, spec);
    for (double v : out.values) CHECK(v == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("burgers: deterministic bitwise rerun") {
    ProblemSpec spec = burgers_spec();
    SpatialGrid g = SpatialGrid::uniform(129);
    Field ic = ic_family(3.0, 2.0, g.coords);
    Field a = burgers_solve_uniform(ic, spec);
    Field b = burgers_solve_uniform(ic, spec);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("burgers: grid self-convergence 129 -> 257 -> 513") {
    auto diff_on_shared = [](const Field& coarse, const Field& fine) {
        // fine grid has 2x resolution: shared nodes are the even fine indices
        double worst = 0.0;
        for (std::size_t i = 0; i < coarse.values.size(); ++i)
            worst = std::max(worst, std::abs(coarse.values[i] - fine.values[2 * i]));
        return worst;
    };
    Field ic129 = ic_family(2.5, 3.5, SpatialGrid::uniform(129).coords);
    Field ic257 = ic_family(2.5, 3.5, SpatialGrid::uniform(257).coords);
    Field ic513 = ic_family(2.5, 3.5, SpatialGrid::uniform(513).coords);
    Field u129 = burgers_solve_uniform(ic129, burgers_spec(0.002, BoundaryMode::dirichlet_walls, 129));
    Field u257 = burgers_solve_uniform(ic257, burgers_spec(0.002, BoundaryMode::dirichlet_walls, 257));
    Field u513 = burgers_solve_uniform(ic513, burgers_spec(0.002, BoundaryMode::dirichlet_walls, 513));
    double d1 = diff_on_shared(u129, u257);
    double d2 = diff_on_shared(u257, u513);
    CHECK(d2 < d1);
}

TEST_CASE("burgers: nonuniform path on the full uniform node set matches the uniform solver") {
    ProblemSpec spec = burgers_spec();
    SpatialGrid g = SpatialGrid::uniform(129);
    Field ic = ic_family(4.0, 1.5, g.coords);
    Field uni = burgers_solve_uniform(ic, spec);
    Field non = burgers_solve_nonuniform(ic, g, spec, {}, {}, {}, true);
    REQUIRE(non.values.size() == uni.values.size());
    for (std::size_t i = 0; i < uni.values.size(); ++i)
        CHECK(std::abs(non.values[i] - uni.values[i]) <= 1e-10);
}

TEST_CASE("burgers TVD: pure Rusanov, no viscosity, periodic") {
    ProblemSpec spec = burgers_spec(0.0, BoundaryMode::periodic, 129);
    // ProblemSpec.validate() requires nu > 0 for the pipeline; the solver itself
    // accepts the inviscid limit for this property.
    FluxConfig flux;
    flux.godunov_blend = 0.0;
    IntegratorConfig integ;
    integ.rtol = 1e-10;
    integ.atol = 1e-12;
    rng::Stream s(9, 3);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> xs;
        for (int i = 0; i < 96; ++i) xs.push_back(double(i) / 96.0);
        double a = s.next_uniform(1.0, 6.0), b = s.next_uniform(1.0, 6.0);
        Field ic = ic_family(a, b, xs);
        SpatialGrid g = SpatialGrid::from_coords(xs, 1.0 / 96.0);
        Field out = burgers_solve_nonuniform(ic, g, spec, flux, {}, integ, true);
        double tv0 = total_variation_periodic(ic.values);
        double tvT = total_variation_periodic(out.values);
        CHECK(tvT <= tv0 + 1e-8);
    }
}

TEST_CASE("burgers mass conservation on augmented sparse periodic grids") {
    ProblemSpec spec = burgers_spec(0.002, BoundaryMode::periodic, 129);
    AugmentationPolicy pol;
    pol.anchor_walls = false;
    rng::Stream s(21, 4);
    for (int trial = 0; trial < 3; ++trial) {
        // sparse subset of the dense grid, in [0, 1)
        std::vector<double> nodes;
        for (int i = 0; i < 128; ++i)
            if (s.next_unit() < 0.3) nodes.push_back(double(i) / 128.0);
        if (nodes.size() < 8) continue;
        auto aug = augment_geometry(nodes, 1.0 / 128.0, pol);
        std::vector<double> xs = aug.nodes;
        if (xs.back() >= 1.0) xs.pop_back();
        double a = s.next_uniform(1.0, 6.0), b = s.next_uniform(1.0, 6.0);
        Field ic = ic_family(a, b, xs);
        SpatialGrid g = SpatialGrid::from_coords(xs, 1.0 / 128.0);
        Field out = burgers_solve_nonuniform(ic, g, spec, {}, pol, {}, false);
        // the grid already satisfies the caps, so the augmented grid is xs itself
        REQUIRE(out.values.size() == xs.size());
        double m0 = trapezoid_mass_periodic(xs, ic.values);
        double mT = trapezoid_mass_periodic(xs, out.values);
        CHECK(std::abs(mT - m0) <= 1e-6);
    }
}

TEST_CASE("burgers integrator reports step underflow with the last accepted time") {
    ProblemSpec spec = burgers_spec();
    SpatialGrid g = SpatialGrid::uniform(65);
    Field ic = ic_family(3.0, 3.0, g.coords);
    IntegratorConfig integ;
    integ.rtol = 1e-30;
    integ.atol = 1e-300;  // below roundoff: every step rejects and dt -> 0
    CHECK_THROWS_WITH_AS(burgers_solve_nonuniform(ic, g, spec, {}, {}, integ, true),
                         doctest::Contains("underflow"), std::runtime_error);
}

TEST_CASE("darcy: constant coefficient center value against dense reference") {
    ProblemSpec spec;
    spec.kind = ProblemKind::darcy;
    spec.darcy.grid_n = 65;
    Field c;
    c.values.assign(65 * 65, 4.0);
    Field u = darcy_solve(c, spec);
    double center65 = u.values[32 * 65 + 32];

    ProblemSpec ref_spec = spec;
    ref_spec.darcy.grid_n = 257;
    Field cref;
    cref.values.assign(257 * 257, 4.0);
    Field uref = darcy_solve(cref, ref_spec);
    double center257 = uref.values[128 * 257 + 128];

    CHECK(center65 == doctest::Approx(center257).epsilon(0.02));
    // -laplace u = 1/4 on the unit square: u(center) = 0.0736713... / 4
    CHECK(center257 == doctest::Approx(0.25 * 0.07367135).epsilon(1e-3));
    CHECK(center65 == doctest::Approx(0.0184).epsilon(5e-3));
}

TEST_CASE("darcy: reflection symmetry of the discrete operator") {
    ProblemSpec spec;
    spec.kind = ProblemKind::darcy;
    spec.darcy.grid_n = 33;
    const int n = 33;
    Field c;
    c.values.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // symmetric under x <-> y (transpose)
            double v = 4.0 + 8.0 * ((i * j + (i + j) * (i + j)) % 7 == 0 ? 1.0 : 0.0);
            c.values[static_cast<std::size_t>(i) * n + j] = v;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            c.values[static_cast<std::size_t>(i) * n + j] =
                c.values[static_cast<std::size_t>(j) * n + i];
        }
    Field u = darcy_solve(c, spec);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(u.values[static_cast<std::size_t>(i) * n + j] -
                                             u.values[static_cast<std::size_t>(j) * n + i]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("darcy: maximum principle and residual bound on random coefficient fields") {
    // the generator lives in another module; use simple deterministic random
    // two-level fields here
    ProblemSpec spec;
    spec.kind = ProblemKind::darcy;
    spec.darcy.grid_n = 32;
    rng::Stream s(33, 5);
    for (int trial = 0; trial < 100; ++trial) {
        Field c;
        for (int i = 0; i < 32 * 32; ++i) c.values.push_back(s.next_unit() < 0.5 ? 4.0 : 12.0);
        SolveStats stats;
        Field u = darcy_solve(c, spec, &stats);
        CHECK(stats.residual <= 1e-10);
        for (double v : u.values) CHECK(v >= -1e-12);
    }
    Field bad;
    bad.values.assign(32 * 32, 1.0);
    bad.values[40] = 0.0;
    CHECK_THROWS_AS(darcy_solve(bad, spec), std::invalid_argument);
}

TEST_CASE("lorenz96 rhs: equilibrium, hand value, shift equivariance") {
    std::vector<double> eq(60, 4.0);
    auto d = lorenz96_rhs(eq, 4.0);
    for (double v : d) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

    auto d4 = lorenz96_rhs({1.0, 0.0, 0.0, 0.0}, 0.0);
    CHECK(d4[0] == doctest::Approx(-1.0));
    CHECK(d4[1] == doctest::Approx(0.0));
    CHECK(d4[2] == doctest::Approx(0.0));
    CHECK(d4[3] == doctest::Approx(0.0));

    rng::Stream s(41, 6);
    std::vector<double> x(8);
    for (auto& v : x) v = s.next_normal();
    auto dx = lorenz96_rhs(x, 4.0);
    std::vector<double> shifted(8);
    for (int i = 0; i < 8; ++i) shifted[static_cast<std::size_t>((i + 3) % 8)] = x[static_cast<std::size_t>(i)];
    auto dshift = lorenz96_rhs(shifted, 4.0);
    for (int i = 0; i < 8; ++i)
        CHECK(dshift[static_cast<std::size_t>((i + 3) % 8)] ==
              doctest::Approx(dx[static_cast<std::size_t>(i)]).epsilon(1e-12));

    CHECK_THROWS_AS(lorenz96_rhs({1.0, 2.0, 3.0}, 4.0), std::invalid_argument);
}

TEST_CASE("lorenz96 solve: equilibrium drift, rk4 order, determinism") {
    ProblemSpec spec;
    spec.kind = ProblemKind::lorenz96;
    std::vector<double> eq(60, 4.0);
    auto xT = lorenz96_solve(eq, spec);
    for (double v : xT) CHECK(std::abs(v - 4.0) <= 1e-10);

    // order-4 step convergence: halving dt shrinks successive differences ~16x
    rng::Stream s(43, 7);
    std::vector<double> x0(60);
    for (auto& v : x0) v = 4.0 + 0.5 * s.next_normal();
    auto solve_dt = [&](double dt) {
        ProblemSpec sp = spec;
        sp.lorenz96.dt = dt;
        return lorenz96_solve(x0, sp);
    };
    auto n2 = [](const std::vector<double>& a, const std::vector<double>& b) {
        double t = 0;
        for (std::size_t i = 0; i < a.size(); ++i) t += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(t);
    };
    auto u1 = solve_dt(0.01), u2 = solve_dt(0.005), u3 = solve_dt(0.0025);
    double ratio = n2(u1, u2) / n2(u2, u3);
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);

    auto again = lorenz96_solve(x0, spec);
    auto once = lorenz96_solve(x0, spec);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i] == again[i]);
}
