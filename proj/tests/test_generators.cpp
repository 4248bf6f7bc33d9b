#include "generators.hpp"

#include "rng.hpp"
#include "sha256.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <map>

using namespace rlmesh;

TEST_CASE("burgers_ic closed form") {
    SpatialGrid g = SpatialGrid::uniform(9);  // includes 0, 0.125, 0.25
    for (double a : {1.0, 2.5, 6.0})
        for (double b : {1.0, 3.0, 6.0}) CHECK(burgers_ic(a, b, g).values[0] == 0.0);

    Field f12 = burgers_ic(1.0, 2.0, g);
    CHECK(f12.values[2] == doctest::Approx(0.0).epsilon(1e-15));  // cos(pi/2) = 0 at x=0.25

    Field f11 = burgers_ic(1.0, 1.0, g);
    CHECK(f11.values[1] == doctest::Approx(0.5765188847675738).epsilon(1e-12));

    CHECK_THROWS_AS(burgers_ic(0.5, 2.0, g), std::invalid_argument);
    CHECK_THROWS_AS(burgers_ic(2.0, 6.5, g), std::invalid_argument);
}

TEST_CASE("darcy coefficient: two levels, balanced median split, determinism") {
    const int n = 64;
    Field c = darcy_coefficient(7, n);
    long lows = 0, highs = 0;
    for (double v : c.values) {
        CHECK((v == 4.0 || v == 12.0));
        if (v == 4.0) ++lows; else ++highs;
    }
    double frac4 = double(lows) / double(n * n);
    CHECK(std::abs(frac4 - 0.5) <= 1.0 / double(n) / double(n) + 1e-12);

    Field c2 = darcy_coefficient(7, n);
    CHECK(c.values == c2.values);
    Field c3 = darcy_coefficient(8, n);
    CHECK(c.values != c3.values);
}

TEST_CASE("darcy coefficient has spatial correlation beyond white noise") {
    const int n = 64;
    long neighbor_agree = 0, distant_agree = 0, count = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Field c = darcy_coefficient(seed, n);
        auto at = [&](int i, int j) { return c.values[static_cast<std::size_t>(i) * n + j]; };
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j + 1 < n; ++j) {
                neighbor_agree += at(i, j) == at(i, j + 1);
                distant_agree += at(i, j) == at((i + n / 2) % n, (j + n / 2) % n);
                ++count;
            }
        }
    }
    CHECK(double(neighbor_agree) / count > double(distant_agree) / count + 0.2);
}

TEST_CASE("lorenz96 ic: shape, determinism, law of large numbers") {
    ProblemSpec spec;
    spec.kind = ProblemKind::lorenz96;
    auto x = lorenz96_ic(3, spec);
    CHECK(x.size() == 60);
    CHECK(lorenz96_ic(3, spec) == x);
    CHECK(lorenz96_ic(4, spec) != x);

    // ~10,000 scalar draws of x_i - F
    double sum = 0.0;
    long count = 0;
    for (std::uint64_t s = 0; s < 167; ++s) {
        auto xi = lorenz96_ic(s, spec);
        for (double v : xi) {
            sum += v - spec.lorenz96.forcing;
            ++count;
        }
    }
    CHECK(count >= 10000);
    CHECK(std::abs(sum / double(count)) <= 3.0 * (0.5 / 100.0));
}

TEST_CASE("burgers parameter prior: support and coarse uniformity") {
    ProblemSpec spec;
    spec.kind = ProblemKind::burgers;
    spec.burgers.grid_n = 17;
    long bins_a[6] = {0}, bins_b[6] = {0};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto [a, b] = burgers_params(99, static_cast<std::uint64_t>(i));
        REQUIRE(a >= 1.0);
        REQUIRE(a <= 6.0);
        REQUIRE(b >= 1.0);
        REQUIRE(b <= 6.0);
        bins_a[std::min(5, int((a - 1.0) / 5.0 * 6.0))]++;
        bins_b[std::min(5, int((b - 1.0) / 5.0 * 6.0))]++;
    }
    // chi^2 with 5 dof at p = 0.001 is 20.515
    double expected = draws / 6.0;
    double chi_a = 0, chi_b = 0;
    for (int k = 0; k < 6; ++k) {
        chi_a += (bins_a[k] - expected) * (bins_a[k] - expected) / expected;
        chi_b += (bins_b[k] - expected) * (bins_b[k] - expected) / expected;
    }
    CHECK(chi_a < 20.515);
    CHECK(chi_b < 20.515);
}

TEST_CASE("corpus: sizes, split disjointness, byte-identical regeneration") {
    ProblemSpec spec;
    spec.kind = ProblemKind::lorenz96;  // cheap dense solves
    Corpus c = build_corpus(spec, 20, 5, 1234);
    CHECK(c.train.size() == 20);
    CHECK(c.test.size() == 5);

    std::map<std::uint64_t, int> seen;
    for (const auto& inst : c.train) seen[inst.id]++;
    for (const auto& inst : c.test) seen[inst.id]++;
    for (const auto& [id, count] : seen) CHECK(count == 1);

    auto dir = std::filesystem::temp_directory_path();
    auto p1 = dir / "rlmesh_corpus_a.bin";
    auto p2 = dir / "rlmesh_corpus_b.bin";
    save_corpus(p1.string(), c);
    Corpus c2 = build_corpus(spec, 20, 5, 1234);
    save_corpus(p2.string(), c2);
    CHECK(sha256_file(p1.string()) == sha256_file(p2.string()));

    Corpus back = load_corpus(p1.string());
    CHECK(back.train.size() == c.train.size());
    CHECK(back.test.size() == c.test.size());
    CHECK(back.train[3].input.values == c.train[3].input.values);
    CHECK(back.test[1].dense_solution.values == c.test[1].dense_solution.values);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);

    CHECK_THROWS_AS(build_corpus(spec, 0, 5, 1), std::invalid_argument);
}

TEST_CASE("burgers corpus instances carry consistent dense oracle solutions") {
    ProblemSpec spec;
    spec.kind = ProblemKind::burgers;
    spec.burgers.grid_n = 65;
    Corpus c = build_corpus(spec, 3, 1, 77);
    for (const auto& inst : c.train) {
        CHECK(inst.input.size() == 65);
        CHECK(inst.dense_solution.size() == 65);
        Field again = burgers_solve_uniform(inst.input, spec);
        for (std::size_t i = 0; i < again.values.size(); ++i)
            CHECK(again.values[i] == inst.dense_solution.values[i]);
    }
}
