#include "core.hpp"
#include "rng.hpp"
#include "sha256.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace rlmesh;

namespace {

Field make_field(std::initializer_list<double> vals) {
    Field f;
    f.values = vals;
    return f;
}

// Independent nearest-neighbor oracle: scan every grid node.
int nearest_by_scan(double q, const SpatialGrid& g) {
    int best = 0;
    double bestd = std::abs(q - g.coords[0]);
    for (int i = 1; i < g.size(); ++i) {
        double d = std::abs(q - g.coords[static_cast<std::size_t>(i)]);
        if (d < bestd) {  // strict: ties stay at the lower index
            bestd = d;
            best = i;
        }
    }
    return best;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("rmse identity and hand values") {
    std::vector<Field> a = {make_field({1.0, 2.0, 3.0})};
    CHECK(rmse(a, a) == 0.0);

    std::vector<Field> p = {make_field({0.0, 0.0})};
    std::vector<Field> t = {make_field({3.0, 4.0})};
    CHECK(rmse(p, t) == doctest::Approx(3.5355339059327378).epsilon(1e-12));

    std::vector<Field> p1 = {make_field({1.0})};
    std::vector<Field> t1 = {make_field({-1.0})};
    CHECK(rmse(p1, t1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("rmse permutation invariance and zero-iff-equal") {
    rng::Stream s(7, 1);
    std::vector<Field> preds, truths;
    for (int i = 0; i < 6; ++i) {
        Field p, t;
        for (int j = 0; j < 5; ++j) {
            p.values.push_back(s.next_normal());
            t.values.push_back(s.next_normal());
        }
        preds.push_back(p);
        truths.push_back(t);
    }
    double base = rmse(preds, truths);
    CHECK(base > 0.0);
    std::vector<Field> preds2 = preds, truths2 = truths;
    std::swap(preds2[0], preds2[4]);
    std::swap(truths2[0], truths2[4]);
    std::swap(preds2[1], preds2[3]);
    std::swap(truths2[1], truths2[3]);
    CHECK(rmse(preds2, truths2) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("rmse shape mismatch names both shapes") {
    std::vector<Field> p = {make_field({1.0, 2.0})};
    std::vector<Field> t = {make_field({1.0, 2.0, 3.0})};
    CHECK_THROWS_WITH_AS(rmse(p, t), doctest::Contains("shape mismatch"), std::invalid_argument);
    std::vector<Field> empty;
    CHECK_THROWS_AS(rmse(empty, empty), std::invalid_argument);
}

TEST_CASE("set_to_grid nearest and tie rules") {
    SpatialGrid g = SpatialGrid::from_coords({0.0, 0.25, 0.5, 0.75, 1.0}, 0.25);
    CHECK(set_to_grid({0.26}, g) == std::vector<int>{1});
    CHECK(set_to_grid({0.5}, g) == std::vector<int>{2});
    // 0.375 is equidistant between nodes 1 and 2 -> lower index wins.
    CHECK(set_to_grid({0.375}, g) == std::vector<int>{1});
    CHECK(set_to_grid({0.375}, g)[0] == nearest_by_scan(0.375, g));
    CHECK_THROWS_AS(set_to_grid({1.5}, g), std::invalid_argument);
    CHECK_THROWS_AS(set_to_grid({-0.1}, g), std::invalid_argument);
}

TEST_CASE("set_to_grid matches exhaustive scan and dedups preserving order") {
    rng::Stream s(11, 2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> coords{0.0};
        int m = 3 + int(s.next_below(20));
        for (int i = 0; i < m; ++i) coords.push_back(s.next_unit());
        coords.push_back(1.0);
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        SpatialGrid g = SpatialGrid::from_coords(coords, 0.1);

        std::vector<double> queries;
        for (int i = 0; i < 30; ++i) queries.push_back(s.next_unit());
        auto got = set_to_grid(queries, g);

        std::vector<int> expected;
        for (double q : queries) {
            int idx = nearest_by_scan(q, g);
            if (std::find(expected.begin(), expected.end(), idx) == expected.end())
                expected.push_back(idx);
        }
        CHECK(got == expected);
    }
}

TEST_CASE("restrict_field examples") {
    Field f = make_field({10.0, 20.0, 30.0});
    SelectionMask m;
    m.budget = 2;
    m.indices = {2, 0};
    CHECK(restrict_field(f, m) == std::vector<double>{30.0, 10.0});

    SelectionMask empty;
    empty.budget = 1;
    CHECK(restrict_field(f, empty).empty());

    SelectionMask one;
    one.budget = 1;
    one.indices = {1};
    CHECK(restrict_field(f, one) == std::vector<double>{20.0});

    SelectionMask bad;
    bad.budget = 1;
    bad.indices = {3};
    CHECK_THROWS_AS(restrict_field(f, bad), std::invalid_argument);
}

TEST_CASE("restrict after set_to_grid round-trips node values") {
    rng::Stream s(13, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> coords{0.0};
        for (int i = 0; i < 15; ++i) coords.push_back(s.next_unit());
        coords.push_back(1.0);
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        SpatialGrid g = SpatialGrid::from_coords(coords, 0.05);
        Field f;
        for (std::size_t i = 0; i < g.coords.size(); ++i) f.values.push_back(s.next_normal());

        // query each node's own position
        auto idx = set_to_grid(g.coords, g);
        SelectionMask mask;
        mask.budget = static_cast<int>(idx.size());
        mask.indices = idx;
        auto vals = restrict_field(f, mask);
        REQUIRE(vals.size() == f.values.size());
        for (std::size_t i = 0; i < vals.size(); ++i) CHECK(vals[i] == f.values[i]);
    }
}

TEST_CASE("selection mask validation") {
    SelectionMask m;
    m.budget = 3;
    m.indices = {0, 2, 1};
    CHECK_NOTHROW(m.validate(5));
    m.indices = {0, 0};
    CHECK_THROWS_AS(m.validate(5), std::invalid_argument);
    m.indices = {0, 5};
    CHECK_THROWS_AS(m.validate(5), std::invalid_argument);
    m.indices = {0, 1, 2, 3};
    CHECK_THROWS_AS(m.validate(5), std::invalid_argument);  // budget overflow
}

TEST_CASE("dataset is append-only across iterations and round-trips through the container") {
    Dataset ds;
    ds.kind = ProblemKind::burgers;
    ds.grid_size = 5;
    rng::Stream s(17, 4);
    std::size_t prev = 0;
    for (std::uint32_t k = 1; k <= 4; ++k) {
        int added = 1 + int(s.next_below(3));
        for (int i = 0; i < added; ++i) {
            LabeledSample sample;
            sample.input = make_field({s.next_normal(), s.next_normal(), s.next_normal(),
                                       s.next_normal(), s.next_normal()});
            sample.mask.budget = 2;
            sample.mask.indices = {0, int(1 + s.next_below(4))};
            sample.observed = restrict_field(sample.input, sample.mask);
            ds.append(sample, {99, k});
        }
        CHECK(ds.size() == prev + static_cast<std::size_t>(added));
        prev = ds.size();
    }

    auto tmp = std::filesystem::temp_directory_path() / "rlmesh_core_ds.bin";
    save_dataset(tmp.string(), ds);
    Dataset back = load_dataset(tmp.string());
    REQUIRE(back.size() == ds.size());
    CHECK(back.kind == ds.kind);
    CHECK(back.grid_size == ds.grid_size);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].input.values == ds.samples[i].input.values);
        CHECK(back.samples[i].mask.indices == ds.samples[i].mask.indices);
        CHECK(back.samples[i].observed == ds.samples[i].observed);
        CHECK(back.provenance[i].iteration == ds.provenance[i].iteration);
    }

    // byte-identical rewrite
    auto tmp2 = std::filesystem::temp_directory_path() / "rlmesh_core_ds2.bin";
    save_dataset(tmp2.string(), back);
    CHECK(read_file(tmp.string()) == read_file(tmp2.string()));
    std::filesystem::remove(tmp);
    std::filesystem::remove(tmp2);
}

TEST_CASE("sha256 known vector") {
    CHECK(sha256_hex("abc", 3) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("", 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("counter rng streams are deterministic and serializable") {
    rng::Stream a(123, 5), b(123, 5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    rng::Stream c(123, 6);
    CHECK(a.next_u64() != c.next_u64());

    // resuming from (key, counter) continues the same sequence
    rng::Stream resumed(a.key());
    resumed.set_counter(a.counter());
    rng::Stream reference(123, 5);
    for (int i = 0; i < 101; ++i) reference.next_u64();
    for (int i = 0; i < 10; ++i) CHECK(resumed.next_u64() == reference.next_u64());
}
